//! Per-vertex orthogonal Procrustes rotations.

use nalgebra::{Matrix3, Matrix3x2, Vector3};

use super::{check_targets, DeformConfig, RotationField, TargetNormals};
use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::ops::SurfaceOperators;

/// Factors of one local solve, kept for the backward pass.
///
/// `x = u * diag(sigma) * v^T` with `u` already sign-fixed so that
/// `rotation = v * u^T` has positive determinant (in which case `sigma[2]`
/// carries the flipped sign).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    pub x: Matrix3<f64>,
    pub u: Matrix3<f64>,
    pub sigma: Vector3<f64>,
    pub v: Matrix3<f64>,
    /// Normalized target direction.
    pub target_unit: Vec3,
    /// Length of the raw target vector.
    pub target_norm: f64,
}

/// Covariance `X = sum_e w_e e e^T + lambda a u t^T`.
pub fn covariance(
    edges: &[(f64, Vec3)],
    normal: &Vec3,
    target_unit: &Vec3,
    lambda_mass: f64,
) -> Matrix3<f64> {
    let mut x = Matrix3::zeros();
    for (w, e) in edges {
        x += e * e.transpose() * *w;
    }
    x + normal * target_unit.transpose() * lambda_mass
}

/// Procrustes energy `sum_e w_e |R e - e|^2 + lambda a |R u - t|^2`.
pub fn local_energy(
    rotation: &Matrix3<f64>,
    edges: &[(f64, Vec3)],
    normal: &Vec3,
    target_unit: &Vec3,
    lambda_mass: f64,
) -> f64 {
    let mut e = 0.0;
    for (w, v) in edges {
        e += w * (rotation * v - v).norm_squared();
    }
    e + lambda_mass * (rotation * normal - target_unit).norm_squared()
}

/// Sorted, sign-normalized SVD with the determinant fix applied to `u`.
pub fn procrustes_svd(x: &Matrix3<f64>) -> Result<(Matrix3<f64>, Vector3<f64>, Matrix3<f64>)> {
    if !x.iter().all(|c| c.is_finite()) {
        return Err(Error::Numerical("non-finite Procrustes covariance".into()));
    }
    let svd = x.svd(true, true);
    let (u0, vt0) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("SVD did not converge".into())),
    };
    let v0 = vt0.transpose();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut u = Matrix3::zeros();
    let mut v = Matrix3::zeros();
    let mut sigma = Vector3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        let mut uc = u0.column(src).into_owned();
        let mut vc = v0.column(src).into_owned();
        // largest-magnitude entry of each left singular vector is positive
        let imax = uc.iamax();
        if uc[imax] < 0.0 {
            uc = -uc;
            vc = -vc;
        }
        u.set_column(dst, &uc);
        v.set_column(dst, &vc);
        sigma[dst] = svd.singular_values[src];
    }
    if (v * u.transpose()).determinant() < 0.0 {
        let c = -u.column(2).into_owned();
        u.set_column(2, &c);
        sigma[2] = -sigma[2];
    }
    Ok((u, sigma, v))
}

/// Solves one vertex's Procrustes problem.
pub fn solve_vertex(
    edges: &[(f64, Vec3)],
    normal: &Vec3,
    raw_target: &Vec3,
    lambda_mass: f64,
) -> Result<(Matrix3<f64>, LocalFrame)> {
    let target_norm = raw_target.norm();
    if !(target_norm > 1e-12) || !target_norm.is_finite() {
        return Err(Error::InvalidInput(format!(
            "target vector has invalid norm {target_norm}"
        )));
    }
    let target_unit = raw_target / target_norm;
    let x = covariance(edges, normal, &target_unit, lambda_mass);
    let (u, sigma, v) = procrustes_svd(&x)?;
    let r = v * u.transpose();
    Ok((
        r,
        LocalFrame {
            x,
            u,
            sigma,
            v,
            target_unit,
            target_norm,
        },
    ))
}

/// Local step with factors for every unmasked vertex (`None` where masked out).
pub fn local_step_cached(
    operators: &SurfaceOperators,
    targets: &TargetNormals,
    config: &DeformConfig,
) -> Result<(RotationField, Vec<Option<LocalFrame>>)> {
    check_targets(operators, targets)?;
    config.check(operators.n_vertices())?;
    let normals = operators.source_normals();
    let masses = operators.vertex_masses();
    let results = crate::par_map(operators.n_vertices(), |k| {
        if !config.is_active(k) {
            return Ok(None);
        }
        let edges = operators.local_edges(k);
        solve_vertex(
            &edges,
            &normals[k],
            &targets.values()[k],
            config.lambda * masses[k],
        )
        .map(Some)
        .map_err(|e| match e {
            Error::InvalidInput(m) => Error::InvalidInput(format!("vertex {k}: {m}")),
            other => other,
        })
    });
    let mut rotations = Vec::with_capacity(results.len());
    let mut frames = Vec::with_capacity(results.len());
    for r in results {
        match r? {
            Some((rot, frame)) => {
                rotations.push(rot);
                frames.push(Some(frame));
            }
            None => {
                rotations.push(Matrix3::identity());
                frames.push(None);
            }
        }
    }
    Ok((RotationField::new(rotations), frames))
}

/// Best-fit rotation per vertex mapping the source neighbourhood and normal
/// onto the same neighbourhood with the target normal. Masked-out vertices
/// get the identity.
pub fn local_step(
    operators: &SurfaceOperators,
    targets: &TargetNormals,
    config: &DeformConfig,
) -> Result<RotationField> {
    local_step_cached(operators, targets, config).map(|(r, _)| r)
}

/// Gram-Schmidt map from a 3x2 matrix to a rotation.
pub fn rotation_from_6d(params: &Matrix3x2<f64>) -> Result<Matrix3<f64>> {
    let a = params.column(0).into_owned();
    let b = params.column(1).into_owned();
    let na = a.norm();
    if !(na > 1e-12) {
        return Err(Error::InvalidInput("first column has zero norm".into()));
    }
    let c1 = a / na;
    let b_perp = b - c1 * c1.dot(&b);
    let nb = b_perp.norm();
    if !(nb > 1e-12) {
        return Err(Error::InvalidInput("columns are collinear".into()));
    }
    let c2 = b_perp / nb;
    let c3 = c1.cross(&c2);
    Ok(Matrix3::from_columns(&[c1, c2, c3]))
}

/// Per-vertex rotations parameterized directly by 3x2 matrices.
pub fn local_step_direct(params: &[Matrix3x2<f64>]) -> Result<RotationField> {
    params
        .iter()
        .enumerate()
        .map(|(k, p)| {
            rotation_from_6d(p).map_err(|e| Error::InvalidInput(format!("vertex {k}: {e}")))
        })
        .collect::<Result<Vec<_>>>()
        .map(RotationField::new)
}
