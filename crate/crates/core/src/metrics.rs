//! Area-ratio, displacement and axis-alignment statistics.

use crate::error::{Error, Result};
use crate::mesh::{face_areas, face_normals, Mesh, Vec3};

pub const DEFAULT_BINS: usize = 60;
pub const DEFAULT_RANGE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaRatioStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    /// Fixed-width bins over `[0, range]` followed by one overflow bin
    /// `(range, inf)`.
    pub histogram: Vec<HistogramBin>,
    pub n_faces: usize,
    pub ratios: Vec<f64>,
}

impl AreaRatioStats {
    pub fn stats_csv(&self) -> String {
        format!("mean,std,n\n{},{},{}\n", self.mean, self.std_dev, self.n_faces)
    }

    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("bin_left,bin_right,count\n");
        for b in &self.histogram {
            s.push_str(&format!("{},{},{}\n", b.left, b.right, b.count));
        }
        s
    }
}

fn same_connectivity(source: &Mesh, deformed: &Mesh) -> Result<()> {
    if source.n_vertices() != deformed.n_vertices() || source.faces() != deformed.faces() {
        return Err(Error::InvalidInput("meshes do not share connectivity".into()));
    }
    Ok(())
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-face `deformed area / source area` statistics. Both meshes are used
/// as given; normalize and restore them first.
pub fn area_ratio_stats(source: &Mesh, deformed: &Mesh, bins: usize) -> Result<AreaRatioStats> {
    area_ratio_stats_pooled(&[(source, deformed)], bins, DEFAULT_RANGE)
}

/// Pools unweighted per-face ratios over several mesh pairs.
pub fn area_ratio_stats_pooled(pairs: &[(&Mesh, &Mesh)], bins: usize, range: f64) -> Result<AreaRatioStats> {
    if bins == 0 || !(range > 0.0) {
        return Err(Error::InvalidInput("histogram needs at least one bin and a positive range".into()));
    }
    let mut ratios = Vec::new();
    for (source, deformed) in pairs {
        same_connectivity(source, deformed)?;
        let a = face_areas(source);
        let b = face_areas(deformed);
        for (f, (x, y)) in a.iter().zip(&b).enumerate() {
            if !(*x > 0.0) {
                return Err(Error::InvalidMesh(format!("source face {f} has zero area")));
            }
            ratios.push(y / x);
        }
    }
    if ratios.is_empty() {
        return Err(Error::InvalidInput("no faces".into()));
    }
    let (mean, std_dev) = mean_std(&ratios);
    let width = range / bins as f64;
    let mut histogram: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            left: i as f64 * width,
            right: if i + 1 == bins { range } else { (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    histogram.push(HistogramBin {
        left: range,
        right: f64::INFINITY,
        count: 0,
    });
    for r in &ratios {
        let i = if *r > range {
            bins
        } else {
            ((r / width) as usize).min(bins - 1)
        };
        histogram[i].count += 1;
    }
    Ok(AreaRatioStats {
        mean,
        std_dev,
        histogram,
        n_faces: ratios.len(),
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementStats {
    pub mean: f64,
    pub max: f64,
    pub per_vertex: Vec<f64>,
}

pub fn displacement_stats(source: &Mesh, deformed: &Mesh) -> Result<DisplacementStats> {
    if source.n_vertices() != deformed.n_vertices() {
        return Err(Error::ShapeMismatch {
            what: "vertices",
            expected: source.n_vertices(),
            actual: deformed.n_vertices(),
        });
    }
    let per_vertex: Vec<f64> = source
        .vertices()
        .iter()
        .zip(deformed.vertices())
        .map(|(a, b)| (b - a).norm())
        .collect();
    let mean = per_vertex.iter().sum::<f64>() / per_vertex.len() as f64;
    let max = per_vertex.iter().copied().fold(0.0, f64::max);
    Ok(DisplacementStats { mean, max, per_vertex })
}

/// Angle between a unit direction and its nearest signed axis.
pub fn angle_to_axis(n: &Vec3) -> f64 {
    n.amax().min(1.0).acos()
}

/// Area-weighted mean angle between face normals and their nearest signed axis.
pub fn axis_deviation(mesh: &Mesh) -> f64 {
    let areas = face_areas(mesh);
    let normals = face_normals(mesh);
    let total: f64 = areas.iter().sum();
    areas
        .iter()
        .zip(&normals)
        .map(|(a, n)| a * angle_to_axis(n))
        .sum::<f64>()
        / total
}
