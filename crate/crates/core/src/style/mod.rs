//! Target-normal stylization: normal templates, guidance sources, schedules
//! and the optimization loop.

mod adam;
mod external;
mod optimize;
mod schedule;
mod sources;

use crate::darap::TargetNormals;
use crate::error::{Error, Result};
use crate::mesh::Vec3;

pub use adam::Adam;
pub use external::{External, DEFAULT_TIMEOUT};
pub use optimize::{optimize, optimize_observed, trace_csv, EpochView, OptimizeConfig, Optimized, TraceRow};
pub use schedule::{combine_gradients, schedule_weight, GuidanceSchedule, Segment, SourceSchedule};
pub use sources::{GuidanceSource, NormalMatch, VertexMatch};

/// Signed coordinate axis nearest to `n`. Ties go to the earlier axis and to
/// the positive sign.
pub fn axis_snap(n: &Vec3) -> Vec3 {
    let mut best = 0;
    for d in 1..3 {
        if n[d].abs() > n[best].abs() {
            best = d;
        }
    }
    let mut out = Vec3::zeros();
    out[best] = if n[best] < 0.0 { -1.0 } else { 1.0 };
    out
}

/// Axis-snapped targets for the given vertex normals.
pub fn cubify_targets(normals: &[Vec3]) -> TargetNormals {
    TargetNormals::new(normals.iter().map(axis_snap).collect())
}

/// A map from unit directions to unit directions.
pub trait NormalTemplate {
    /// `None` when the direction is not covered.
    fn lookup(&self, n: &Vec3) -> Option<Vec3>;
}

pub struct IdentityTemplate;

impl NormalTemplate for IdentityTemplate {
    fn lookup(&self, n: &Vec3) -> Option<Vec3> {
        Some(*n)
    }
}

pub struct AxisSnapTemplate;

impl NormalTemplate for AxisSnapTemplate {
    fn lookup(&self, n: &Vec3) -> Option<Vec3> {
        Some(axis_snap(n))
    }
}

pub struct ConstantTemplate(pub Vec3);

impl NormalTemplate for ConstantTemplate {
    fn lookup(&self, _: &Vec3) -> Option<Vec3> {
        Some(self.0)
    }
}

/// Piecewise-constant directions over spherical triangles.
///
/// Each triangle `(a, b, c)` of `directions` is counter-clockwise seen from
/// outside and covers the cone spanned by its corners. The first covering
/// triangle wins on shared borders.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalTable {
    directions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    values: Vec<Vec3>,
}

impl SphericalTable {
    pub fn new(directions: Vec<Vec3>, triangles: Vec<[usize; 3]>, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != triangles.len() {
            return Err(Error::ShapeMismatch {
                what: "table values",
                expected: triangles.len(),
                actual: values.len(),
            });
        }
        if triangles.iter().flatten().any(|&i| i >= directions.len()) {
            return Err(Error::InvalidInput("table triangle index out of range".into()));
        }
        let mut directions = directions;
        for d in &mut directions {
            let len = d.norm();
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::InvalidInput("table direction must be nonzero".into()));
            }
            *d /= len;
        }
        Ok(Self {
            directions,
            triangles,
            values,
        })
    }

    /// The eight octants of the sphere, each with the given value.
    pub fn octants(value: impl Fn(Vec3) -> Vec3) -> Self {
        let d = vec![Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()];
        let mut tris = Vec::new();
        for (x, y) in [(0, 2), (2, 1), (1, 3), (3, 0)] {
            tris.push([x, y, 4]);
            tris.push([y, x, 5]);
        }
        let values = tris
            .iter()
            .map(|t: &[usize; 3]| value((d[t[0]] + d[t[1]] + d[t[2]]).normalize()))
            .collect();
        Self {
            directions: d,
            triangles: tris,
            values,
        }
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }
}

impl NormalTemplate for SphericalTable {
    fn lookup(&self, n: &Vec3) -> Option<Vec3> {
        const TOL: f64 = 1e-12;
        self.triangles.iter().zip(&self.values).find_map(|(t, v)| {
            let [a, b, c] = t.map(|i| self.directions[i]);
            let inside = n.dot(&a.cross(&b)) >= -TOL
                && n.dot(&b.cross(&c)) >= -TOL
                && n.dot(&c.cross(&a)) >= -TOL
                && n.dot(&(a + b + c)) > 0.0;
            inside.then_some(*v)
        })
    }
}

/// Looks up every vertex normal in a template.
pub fn field_targets(normals: &[Vec3], template: &dyn NormalTemplate) -> Result<TargetNormals> {
    normals
        .iter()
        .enumerate()
        .map(|(k, n)| {
            template
                .lookup(n)
                .ok_or_else(|| Error::InvalidInput(format!("template has no value for vertex {k} normal {n:?}")))
        })
        .collect::<Result<Vec<_>>>()
        .map(TargetNormals::new)
}
