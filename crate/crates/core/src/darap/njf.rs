//! Face-jacobian Poisson baseline: least-squares vertices for per-face
//! linear maps, `L Phi = grad^T A M`.

use nalgebra::Matrix3;

use super::global::align_centroids;
use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::ops::{GradientOperators, SurfaceOperators};

/// Right-hand side `grad^T A M` for per-face jacobians `M_f`.
pub fn njf_rhs(grad_ops: &GradientOperators, jacobians: &[Matrix3<f64>]) -> Result<Vec<Vec3>> {
    let nf = grad_ops.face_mass.len();
    if jacobians.len() != nf {
        return Err(Error::ShapeMismatch {
            what: "jacobians",
            expected: nf,
            actual: jacobians.len(),
        });
    }
    let div = &grad_ops.weighted_divergence;
    Ok(crate::par_map(div.nrows(), |v| {
        let mut acc = Vec3::zeros();
        for (col, w) in div.row(v) {
            // column 3f + s holds the s-th spatial component on face f
            acc += jacobians[col / 3].column(col % 3) * w;
        }
        acc
    }))
}

/// Vertices best fitting the per-face jacobians, with the same pinning and
/// centroid convention as [`global_step`](super::global_step).
pub fn njf_poisson(
    operators: &SurfaceOperators,
    grad_ops: &GradientOperators,
    jacobians: &[Matrix3<f64>],
    centroid_target: Option<Vec3>,
) -> Result<Vec<Vec3>> {
    let rhs = njf_rhs(grad_ops, jacobians)?;
    let mut x = operators.solver().solve(&rhs);
    if !x.iter().all(|p| p.iter().all(|c| c.is_finite())) {
        return Err(Error::Numerical("Poisson solve produced non-finite values".into()));
    }
    align_centroids(operators, &mut x, centroid_target);
    Ok(x)
}
