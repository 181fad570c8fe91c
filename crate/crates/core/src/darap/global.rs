//! Right-hand-side assembly and the pinned Poisson solve.

use super::RotationField;
use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::ops::SurfaceOperators;

/// For every face `(k, m, n)` adjacent to `k`:
/// `rhs(k) += (R_k + R_m + R_n)/3 * (w_km/2 e_km + w_kn/2 e_kn)`, with edge
/// vectors from the source mesh. Boundary edges (one incident face) use the
/// full weight so identity rotations give exactly `-L V`.
///
/// The face sums are precomputed into a per-vertex stencil over neighbouring
/// rotations, so each row is one gather in a fixed order.
pub fn assemble_rhs(operators: &SurfaceOperators, rotations: &RotationField) -> Result<Vec<Vec3>> {
    let n = operators.n_vertices();
    if rotations.len() != n {
        return Err(Error::ShapeMismatch {
            what: "rotations",
            expected: n,
            actual: rotations.len(),
        });
    }
    let r = rotations.rotations();
    Ok(crate::par_map(n, |k| {
        operators
            .rhs_stencil(k)
            .iter()
            .fold(Vec3::zeros(), |acc, (v, d)| acc + r[*v] * d)
    }))
}

/// Translates each component so its mass-weighted centroid lands on the
/// source component centroid shifted by `target - source_centroid`.
pub(crate) fn align_centroids(
    operators: &SurfaceOperators,
    positions: &mut [Vec3],
    centroid_target: Option<Vec3>,
) {
    let shift = centroid_target.map_or(Vec3::zeros(), |t| t - operators.source_centroid());
    let current = operators.centroids_of(positions);
    let goal: Vec<Vec3> = operators
        .component_centroids()
        .iter()
        .map(|c| c + shift)
        .collect();
    let comp = operators.component();
    for (v, p) in positions.iter_mut().enumerate() {
        *p += goal[comp[v]] - current[comp[v]];
    }
}

/// Solves `L V = -rhs` with the pinned factorization and fixes the
/// translation gauge. `centroid_target = None` keeps the source centroid.
pub fn global_step(
    operators: &SurfaceOperators,
    rhs: &[Vec3],
    centroid_target: Option<Vec3>,
) -> Result<Vec<Vec3>> {
    let n = operators.n_vertices();
    if rhs.len() != n {
        return Err(Error::ShapeMismatch {
            what: "rhs rows",
            expected: n,
            actual: rhs.len(),
        });
    }
    if !rhs.iter().all(|r| r.iter().all(|c| c.is_finite())) {
        return Err(Error::Numerical("non-finite right-hand side".into()));
    }
    let mut x = operators.solver().solve_scaled(rhs, -1.0);
    if !x.iter().all(|p| p.iter().all(|c| c.is_finite())) {
        return Err(Error::Numerical("Poisson solve produced non-finite values".into()));
    }
    align_centroids(operators, &mut x, centroid_target);
    Ok(x)
}
