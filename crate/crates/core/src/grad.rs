//! Reverse-mode gradients of a loss on deformed vertices with respect to the
//! raw target vectors.
//!
//! The backward pass walks the forward graph in reverse:
//! bounding-box rescale, centroid gauge, pinned Poisson solve (self-adjoint),
//! right-hand-side assembly (linear in the rotations), per-vertex Procrustes
//! rotation, and finally the `t / |t|` normalization.
//!
//! For `X = U S V^T` (with the determinant fix folded into `U` and `S`) the
//! rotation `R = V U^T` varies as `dR = V W U^T` where `W` is skew with
//! `W_ij = (G_ij - G_ji) / (s_i + s_j)` and `G = V^T dX^T U`. The sums
//! `s_i + s_j` are damped as `d / (d^2 + eps^2)` with `eps = 1e-8 * s_max`.

use nalgebra::Matrix3;

use crate::darap::{deform_cached, DeformConfig, Forward, LocalFrame, TargetNormals};
use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::ops::SurfaceOperators;

/// Relative damping of singular-value sums in the rotation differential.
pub const SVD_DAMPING: f64 = 1e-8;

fn damped_inverse(d: f64, eps: f64) -> f64 {
    d / (d * d + eps * eps)
}

/// Adjoint of the Poisson solve plus centroid gauge: maps a gradient on the
/// solved positions to a gradient on the right-hand side of `L V = -rhs`.
pub fn vjp_global(operators: &SurfaceOperators, upstream: &[Vec3]) -> Result<Vec<Vec3>> {
    let n = operators.n_vertices();
    if upstream.len() != n {
        return Err(Error::ShapeMismatch {
            what: "upstream rows",
            expected: n,
            actual: upstream.len(),
        });
    }
    let comp = operators.component();
    let mut total = vec![Vec3::zeros(); operators.n_components()];
    for (v, g) in upstream.iter().enumerate() {
        total[comp[v]] += g;
    }
    let masses = operators.vertex_masses();
    let cm = operators.component_mass();
    let gx: Vec<Vec3> = upstream
        .iter()
        .enumerate()
        .map(|(v, g)| g - total[comp[v]] * (masses[v] / cm[comp[v]]))
        .collect();
    Ok(operators.solver().solve_scaled(&gx, -1.0))
}

/// Gradients of one local solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcrustesGrad {
    /// dLoss/dX.
    pub x: Matrix3<f64>,
    /// dLoss/d(normalized target).
    pub target_unit: Vec3,
    /// dLoss/d(raw target vector).
    pub target: Vec3,
}

/// Pulls a rotation gradient back through `R = polar(X^T)` and the
/// covariance's dependence on the target.
pub fn vjp_procrustes(
    frame: &LocalFrame,
    grad_rotation: &Matrix3<f64>,
    normal: &Vec3,
    lambda_mass: f64,
) -> Result<ProcrustesGrad> {
    let s = frame.sigma;
    let smax = s.amax();
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(Error::Numerical("degenerate Procrustes covariance".into()));
    }
    let eps = SVD_DAMPING * smax;
    let h = frame.v.transpose() * grad_rotation * frame.u;
    let mut gg = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                gg[(i, j)] = (h[(i, j)] - h[(j, i)]) * damped_inverse(s[i] + s[j], eps);
            }
        }
    }
    // G = V^T A U with A = X^T, so dL/dA = V gG U^T and dL/dX is its transpose
    let ga = frame.v * gg * frame.u.transpose();
    let gx = ga.transpose();
    let g_unit = gx.transpose() * normal * lambda_mass;
    let t = frame.target_unit;
    let g_raw = (g_unit - t * t.dot(&g_unit)) / frame.target_norm;
    Ok(ProcrustesGrad {
        x: gx,
        target_unit: g_unit,
        target: g_raw,
    })
}

fn restore_adjoint(fwd: &Forward, upstream: &[Vec3]) -> Vec<Vec3> {
    let Some(info) = &fwd.restore else {
        return upstream.to_vec();
    };
    let s = info.scale;
    let mut gx: Vec<Vec3> = upstream.iter().map(|g| g * s).collect();
    let mut total = Vec3::zeros();
    let mut gs = 0.0;
    for (g, x) in upstream.iter().zip(&fwd.solved) {
        total += g;
        gs += g.dot(&(x - info.center));
    }
    let gc = total * (1.0 - s);
    let e2 = info.extent.norm_squared();
    let ge = info.extent * (-s / e2 * gs);
    for d in 0..3 {
        gx[info.argmin[d]][d] += 0.5 * gc[d] - ge[d];
        gx[info.argmax[d]][d] += 0.5 * gc[d] + ge[d];
    }
    gx
}

/// Gradient of a loss with respect to the raw target vectors, given the
/// loss gradient on the deformed vertices of a cached forward pass.
/// Vertices outside the mask get exactly zero.
pub fn vjp_deform(
    operators: &SurfaceOperators,
    forward: &Forward,
    upstream: &[Vec3],
) -> Result<Vec<Vec3>> {
    let n = operators.n_vertices();
    if upstream.len() != n {
        return Err(Error::ShapeMismatch {
            what: "upstream rows",
            expected: n,
            actual: upstream.len(),
        });
    }
    if forward.frames.len() != n || forward.rotations.len() != n {
        return Err(Error::InvalidInput("forward cache does not match operators".into()));
    }
    if !upstream.iter().all(|g| g.iter().all(|c| c.is_finite())) {
        return Err(Error::Numerical("non-finite upstream gradient".into()));
    }
    let g_solved = restore_adjoint(forward, upstream);
    let g_rhs = vjp_global(operators, &g_solved)?;

    let faces = operators.source().faces();
    let corners = operators.corner_vectors();
    let g_mean: Vec<Matrix3<f64>> = crate::par_map(faces.len(), |f| {
        let mut g = Matrix3::zeros();
        for c in 0..3 {
            g += g_rhs[faces[f][c]] * corners[f][c].transpose();
        }
        g / 3.0
    });
    let vf = operators.vertex_faces();
    let normals = operators.source_normals();
    let masses = operators.vertex_masses();
    let lambda = forward.config.lambda;
    let out = crate::par_map(n, |k| -> Result<Vec3> {
        let Some(frame) = &forward.frames[k] else {
            return Ok(Vec3::zeros());
        };
        let mut g_rot = Matrix3::zeros();
        for &f in &vf[k] {
            g_rot += g_mean[f];
        }
        vjp_procrustes(frame, &g_rot, &normals[k], lambda * masses[k]).map(|g| g.target)
    });
    out.into_iter().collect()
}

/// Forward pass with cache followed by the backward pass for `upstream`.
pub fn deform_and_vjp(
    operators: &SurfaceOperators,
    targets: &TargetNormals,
    config: &DeformConfig,
    upstream: impl FnOnce(&Forward) -> Vec<Vec3>,
) -> Result<(Forward, Vec<Vec3>)> {
    let fwd = deform_cached(operators, targets, config)?;
    let g = upstream(&fwd);
    let gt = vjp_deform(operators, &fwd, &g)?;
    Ok((fwd, gt))
}

/// Central finite differences of `loss(deform(targets))`, component by component.
pub fn fd_gradient(
    operators: &SurfaceOperators,
    targets: &TargetNormals,
    config: &DeformConfig,
    loss: &(dyn Fn(&[Vec3]) -> f64 + Sync),
    h: f64,
) -> Result<Vec<Vec3>> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let n = targets.len();
    let eval = |k: usize, d: usize, delta: f64| -> Result<f64> {
        let mut t = targets.clone();
        t.values_mut()[k][d] += delta;
        let fwd = deform_cached(operators, &t, config)?;
        Ok(loss(fwd.mesh.vertices()))
    };
    let parts = crate::par_map(n, |k| -> Result<Vec3> {
        let mut g = Vec3::zeros();
        for d in 0..3 {
            g[d] = (eval(k, d, h)? - eval(k, d, -h)?) / (2.0 * h);
        }
        Ok(g)
    });
    parts.into_iter().collect()
}

/// Central difference of the loss along one direction in target space.
pub fn fd_directional(
    operators: &SurfaceOperators,
    targets: &TargetNormals,
    config: &DeformConfig,
    loss: &dyn Fn(&[Vec3]) -> f64,
    direction: &[Vec3],
    h: f64,
) -> Result<f64> {
    let shifted = |s: f64| -> Result<f64> {
        let t = TargetNormals::new(
            targets
                .values()
                .iter()
                .zip(direction)
                .map(|(t, d)| t + d * s)
                .collect(),
        );
        Ok(loss(deform_cached(operators, &t, config)?.mesh.vertices()))
    };
    Ok((shifted(h)? - shifted(-h)?) / (2.0 * h))
}
