//! Timing of the local step, the vertex Poisson solve and the face-jacobian
//! Poisson solve on one mesh. Operator construction is not timed.

use std::hint::black_box;
use std::time::Instant;

use nalgebra::{Matrix3, Rotation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::darap::{assemble_rhs, global_step, local_step, njf_poisson, DeformConfig, TargetNormals};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};
use crate::metrics::mean_std;
use crate::ops::{build_gradient_ops, build_operators, Pin};

pub const STAGES: [&str; 3] = ["local", "darap_global", "njf_poisson"];

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub mean_s: f64,
    pub min_s: f64,
    pub std_s: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub mesh_id: String,
    pub n_vertices: usize,
    pub n_faces: usize,
    pub repeats: usize,
    pub stages: Vec<StageTiming>,
    /// Sum over all timed outputs.
    pub checksum: f64,
}

impl BenchReport {
    pub fn stage(&self, name: &str) -> Option<&StageTiming> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for t in &self.stages {
            s.push_str(&format!(
                "{},{},{},{},{:.6e},{:.6e},{:.6e},{}\n",
                self.mesh_id, self.n_vertices, self.n_faces, t.stage, t.mean_s, t.min_s, t.std_s, self.repeats
            ));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!("mesh,V,F,stage,mean_s,min_s,std_s,repeats\n{}", self.csv_rows())
    }
}

fn checksum(points: &[Vec3]) -> f64 {
    points.iter().map(|p| p.x + p.y + p.z).sum()
}

fn summarize(stage: &'static str, samples: Vec<f64>) -> StageTiming {
    let (mean_s, std_s) = mean_std(&samples);
    let min_s = samples.iter().copied().fold(f64::INFINITY, f64::min);
    StageTiming {
        stage,
        mean_s,
        min_s,
        std_s,
        samples,
    }
}

fn timed(acc: &mut f64, run: &mut dyn FnMut() -> Result<f64>) -> Result<f64> {
    let t = Instant::now();
    let out = black_box(run()?);
    let elapsed = t.elapsed().as_secs_f64();
    *acc += out;
    Ok(elapsed)
}

/// Times each stage `repeats` times after one discarded warm-up run. The two
/// Poisson solves alternate, swapping order every round.
pub fn bench_solves(mesh_id: &str, mesh: &Mesh, repeats: usize, seed: u64) -> Result<BenchReport> {
    if repeats < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 repeats, got {repeats}")));
    }
    let operators = build_operators(mesh, Pin::First)?;
    let grad_ops = build_gradient_ops(mesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = TargetNormals::new(
        operators
            .source_normals()
            .iter()
            .map(|n| n + Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect(),
    );
    let config = DeformConfig::default();
    let rotations = local_step(&operators, &targets, &config)?;
    let jacobians: Vec<Matrix3<f64>> = (0..mesh.n_faces())
        .map(|_| {
            Rotation3::from_euler_angles(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))
                .into_inner()
        })
        .collect();

    let mut local = || -> Result<f64> {
        let r = local_step(&operators, &targets, &config)?;
        Ok(r.rotations().iter().map(|m| m.trace()).sum())
    };
    let mut global = || -> Result<f64> {
        let rhs = assemble_rhs(&operators, &rotations)?;
        Ok(checksum(&global_step(&operators, &rhs, None)?))
    };
    let mut njf = || -> Result<f64> { Ok(checksum(&njf_poisson(&operators, &grad_ops, &jacobians, None)?)) };

    let mut acc = 0.0;
    let mut l = Vec::with_capacity(repeats);
    for round in 0..=repeats {
        let t = timed(&mut acc, &mut local)?;
        if round > 0 {
            l.push(t);
        }
    }
    let mut g = Vec::with_capacity(repeats);
    let mut n = Vec::with_capacity(repeats);
    for round in 0..=repeats {
        let (tg, tn) = if round % 2 == 0 {
            let tg = timed(&mut acc, &mut global)?;
            (tg, timed(&mut acc, &mut njf)?)
        } else {
            let tn = timed(&mut acc, &mut njf)?;
            (timed(&mut acc, &mut global)?, tn)
        };
        if round > 0 {
            g.push(tg);
            n.push(tn);
        }
    }
    Ok(BenchReport {
        mesh_id: mesh_id.to_string(),
        n_vertices: mesh.n_vertices(),
        n_faces: mesh.n_faces(),
        repeats,
        stages: vec![summarize(STAGES[0], l), summarize(STAGES[1], g), summarize(STAGES[2], n)],
        checksum: acc,
    })
}
