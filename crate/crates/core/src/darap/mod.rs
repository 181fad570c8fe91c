//! The deformation layer: one local Procrustes step followed by one global
//! Poisson step.
//!
//! ```text
//! targets --normalize--> local step --> rotations --rhs--> Poisson solve --> positions
//! ```
//!
//! Vertices outside an optional mask keep the identity rotation. The global
//! step fixes translation by matching the mass-weighted centroid; bounding-box
//! restoration is optional.

mod global;
mod local;
mod njf;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::mesh::{bbox_diagonal, Mesh, Vec3};
use crate::ops::SurfaceOperators;

pub use global::{assemble_rhs, global_step};
pub use local::{
    covariance, local_energy, local_step, local_step_cached, local_step_direct, procrustes_svd,
    rotation_from_6d, solve_vertex, LocalFrame,
};
pub use njf::{njf_poisson, njf_rhs};

/// One (not necessarily unit) target vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetNormals(Vec<Vec3>);

impl TargetNormals {
    pub fn new(values: Vec<Vec3>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[Vec3] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Vec3> {
        self.0
    }
}

pub(crate) fn check_targets(operators: &SurfaceOperators, targets: &TargetNormals) -> Result<()> {
    if targets.len() != operators.n_vertices() {
        return Err(Error::ShapeMismatch {
            what: "target normals",
            expected: operators.n_vertices(),
            actual: targets.len(),
        });
    }
    Ok(())
}

/// One rotation per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationField(Vec<Matrix3<f64>>);

impl RotationField {
    pub fn new(rotations: Vec<Matrix3<f64>>) -> Self {
        Self(rotations)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Matrix3::identity(); n])
    }

    pub fn rotations(&self) -> &[Matrix3<f64>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest `|R^T R - I|_F` over the field.
    pub fn max_orthogonality_error(&self) -> f64 {
        self.0
            .iter()
            .map(|r| (r.transpose() * r - Matrix3::identity()).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformConfig {
    /// Strength of the normal-alignment term.
    pub lambda: f64,
    /// `true` marks vertices that may rotate; `None` means all of them.
    pub mask: Option<Vec<bool>>,
    /// Centroid of the output; `None` keeps the source centroid.
    pub centroid_target: Option<Vec3>,
    /// Rescale the output to the source bounding-box diagonal.
    pub restore_bbox: bool,
}

impl Default for DeformConfig {
    fn default() -> Self {
        Self {
            lambda: 8.0,
            mask: None,
            centroid_target: None,
            restore_bbox: false,
        }
    }
}

impl DeformConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Default::default()
        }
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[k])
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidInput(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if let Some(m) = &self.mask {
            if m.len() != n {
                return Err(Error::ShapeMismatch {
                    what: "mask entries",
                    expected: n,
                    actual: m.len(),
                });
            }
        }
        Ok(())
    }
}

/// Bounding-box rescale applied to the solved positions, kept for the adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct BboxRestore {
    pub scale: f64,
    pub center: Vec3,
    /// First vertex attaining the per-axis minimum / maximum.
    pub argmin: [usize; 3],
    pub argmax: [usize; 3],
    /// `max - min` of the solved positions.
    pub extent: Vec3,
}

pub(crate) fn restore_with_info(points: &[Vec3], target_diagonal: f64) -> Result<(Vec<Vec3>, BboxRestore)> {
    let mut argmin = [0usize; 3];
    let mut argmax = [0usize; 3];
    for (i, p) in points.iter().enumerate() {
        for d in 0..3 {
            if p[d] < points[argmin[d]][d] {
                argmin[d] = i;
            }
            if p[d] > points[argmax[d]][d] {
                argmax[d] = i;
            }
        }
    }
    let lo = Vec3::from_fn(|d, _| points[argmin[d]][d]);
    let hi = Vec3::from_fn(|d, _| points[argmax[d]][d]);
    let extent = hi - lo;
    let diag = extent.norm();
    if !(diag > 0.0) {
        return Err(Error::Numerical("deformed mesh has zero bounding-box diagonal".into()));
    }
    let scale = target_diagonal / diag;
    let center = (lo + hi) * 0.5;
    let out = points.iter().map(|p| center + (p - center) * scale).collect();
    Ok((
        out,
        BboxRestore {
            scale,
            center,
            argmin,
            argmax,
            extent,
        },
    ))
}

/// Everything the backward pass needs from a forward evaluation.
#[derive(Debug, Clone)]
pub struct Forward {
    pub mesh: Mesh,
    pub rotations: RotationField,
    pub frames: Vec<Option<LocalFrame>>,
    pub config: DeformConfig,
    /// Positions after the Poisson solve and centroid alignment.
    pub solved: Vec<Vec3>,
    pub restore: Option<BboxRestore>,
}

/// Deforms the operators' source mesh towards `targets`, keeping the factors
/// needed by [`crate::grad::vjp_deform`].
pub fn deform_cached(
    operators: &SurfaceOperators,
    targets: &TargetNormals,
    config: &DeformConfig,
) -> Result<Forward> {
    let (rotations, frames) = local_step_cached(operators, targets, config)?;
    let rhs = assemble_rhs(operators, &rotations)?;
    let solved = global_step(operators, &rhs, config.centroid_target)?;
    let (positions, restore) = if config.restore_bbox {
        let (p, info) = restore_with_info(&solved, bbox_diagonal(operators.source().vertices()))?;
        (p, Some(info))
    } else {
        (solved.clone(), None)
    };
    Ok(Forward {
        mesh: operators.source().with_vertices(positions)?,
        rotations,
        frames,
        config: config.clone(),
        solved,
        restore,
    })
}

/// One local step and one global step.
pub fn deform(
    operators: &SurfaceOperators,
    targets: &TargetNormals,
    config: &DeformConfig,
) -> Result<(Mesh, RotationField)> {
    deform_cached(operators, targets, config).map(|f| (f.mesh, f.rotations))
}

/// Re-applies saved targets with a different strength.
pub fn retarget_lambda(
    operators: &SurfaceOperators,
    saved_targets: &TargetNormals,
    new_lambda: f64,
    config: &DeformConfig,
) -> Result<Mesh> {
    let cfg = DeformConfig {
        lambda: new_lambda,
        ..config.clone()
    };
    deform(operators, saved_targets, &cfg).map(|(m, _)| m)
}

/// Angle between `R_k u_k` and the normalized target, per vertex.
pub fn alignment_angles(
    operators: &SurfaceOperators,
    rotations: &RotationField,
    targets: &TargetNormals,
) -> Vec<f64> {
    operators
        .source_normals()
        .iter()
        .zip(rotations.rotations())
        .zip(targets.values())
        .map(|((u, r), t)| (r * u).angle(t))
        .collect()
}
