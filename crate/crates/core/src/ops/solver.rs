use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::mesh::Vec3;

/// Cholesky factorization of a Laplacian with one row/column removed per
/// pinned vertex. Pinned entries of every solution are zero.
#[derive(Debug, Clone)]
pub struct PinnedSolver {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    reduced: Vec<usize>,
    n_free: usize,
}

const PINNED: usize = usize::MAX;

impl PinnedSolver {
    pub fn new(laplacian: &CsrMatrix, pins: &[usize]) -> Result<Self> {
        let n = laplacian.nrows();
        let mut reduced = vec![0usize; n];
        for &p in pins {
            reduced[p] = PINNED;
        }
        let mut n_free = 0;
        for r in reduced.iter_mut() {
            if *r != PINNED {
                *r = n_free;
                n_free += 1;
            }
        }
        if n_free == 0 {
            return Err(Error::Factorization("no free vertices after pinning".into()));
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = laplacian
            .triplets()
            .filter_map(|(r, c, v)| {
                let (rr, cc) = (reduced[r], reduced[c]);
                (rr != PINNED && cc != PINNED && cc <= rr).then(|| Triplet::new(rr, cc, v))
            })
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n_free, n_free, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let llt = mat.sp_cholesky(Side::Lower).map_err(|e| match e {
            faer::sparse::linalg::LltError::Numeric(
                faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index },
            ) => Error::Factorization(format!(
                "non-positive pivot at reduced index {index} (matrix not positive definite after pinning)"
            )),
            other => Error::Factorization(format!("{other:?}")),
        })?;
        Ok(Self {
            llt,
            reduced,
            n_free,
        })
    }

    pub fn n(&self) -> usize {
        self.reduced.len()
    }

    pub fn is_pinned(&self, v: usize) -> bool {
        self.reduced[v] == PINNED
    }

    /// Solves the pinned system for three right-hand-side columns at once.
    /// Rows of `b` at pinned vertices are ignored.
    pub fn solve(&self, b: &[Vec3]) -> Vec<Vec3> {
        self.solve_scaled(b, 1.0)
    }

    /// Solves for `scale * b`.
    pub fn solve_scaled(&self, b: &[Vec3], scale: f64) -> Vec<Vec3> {
        assert_eq!(b.len(), self.reduced.len());
        let mut rhs = Mat::<f64>::zeros(self.n_free, 3);
        for (v, &r) in self.reduced.iter().enumerate() {
            if r != PINNED {
                for c in 0..3 {
                    rhs[(r, c)] = scale * b[v][c];
                }
            }
        }
        self.llt.solve_in_place(rhs.as_mut());
        self.reduced
            .iter()
            .map(|&r| {
                if r == PINNED {
                    Vec3::zeros()
                } else {
                    Vec3::new(rhs[(r, 0)], rhs[(r, 1)], rhs[(r, 2)])
                }
            })
            .collect()
    }

    /// Single-column variant of [`solve`](Self::solve).
    pub fn solve_scalar(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.reduced.len());
        let mut rhs = Mat::<f64>::zeros(self.n_free, 1);
        for (v, &r) in self.reduced.iter().enumerate() {
            if r != PINNED {
                rhs[(r, 0)] = b[v];
            }
        }
        self.llt.solve_in_place(rhs.as_mut());
        self.reduced
            .iter()
            .map(|&r| if r == PINNED { 0.0 } else { rhs[(r, 0)] })
            .collect()
    }
}
