//! Differentiable normal-driven as-rigid-as-possible deformation.
//!
//! Given one target normal per vertex, [`darap::deform`] fits a rotation per
//! vertex neighbourhood with a single orthogonal Procrustes step and recovers
//! positions with a single cotangent-Laplacian Poisson solve. [`grad`] provides
//! the exact reverse-mode gradient of the deformed positions with respect to
//! the raw target vectors, and [`style`] drives gradient-based optimisation of
//! those targets.

pub mod bench;
pub mod darap;
pub mod error;
pub mod grad;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod ops;
pub mod shapes;
pub mod style;

pub use darap::{deform, DeformConfig, RotationField, TargetNormals};
pub use error::{Error, Result};
pub use mesh::{Mesh, Vec3};
pub use ops::SurfaceOperators;

/// Runs `f` over `0..n` in parallel when the `parallel` feature is enabled.
/// Results keep index order either way.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}
