//! Built-in guidance sources: losses on deformed vertices with analytic
//! gradients.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};

/// Anything that scores deformed geometry and returns `dLoss/dV`.
pub trait GuidanceSource {
    fn name(&self) -> &str;

    /// Loss and per-vertex gradient for the deformed mesh at `epoch`.
    fn evaluate(&mut self, epoch: usize, mesh: &Mesh) -> Result<(f64, Vec<Vec3>)>;

    /// Called once after the last epoch.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// `1/2 sum_k a_k |n_k(V) - t_k|^2` where `n_k` is the normalized sum of
/// incident face cross products (area-weighted face normals).
#[derive(Debug, Clone)]
pub struct NormalMatch {
    name: String,
    targets: Vec<Vec3>,
    weights: Vec<f64>,
}

impl NormalMatch {
    pub fn new(name: impl Into<String>, targets: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if targets.len() != weights.len() {
            return Err(Error::ShapeMismatch {
                what: "normal-match weights",
                expected: targets.len(),
                actual: weights.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            targets,
            weights,
        })
    }

    pub fn targets(&self) -> &[Vec3] {
        &self.targets
    }

    /// Loss and gradient without the trait's bookkeeping.
    pub fn loss_and_grad(&self, mesh: &Mesh) -> Result<(f64, Vec<Vec3>)> {
        let n = mesh.n_vertices();
        if n != self.targets.len() {
            return Err(Error::ShapeMismatch {
                what: "normal-match vertices",
                expected: self.targets.len(),
                actual: n,
            });
        }
        let faces = mesh.faces();
        let cross: Vec<Vec3> = (0..faces.len()).map(|f| mesh.face_cross(f)).collect();
        let mut sums = vec![Vec3::zeros(); n];
        for (f, t) in faces.iter().enumerate() {
            for &v in t {
                sums[v] += cross[f];
            }
        }
        let mut loss = 0.0;
        let mut g_sum = vec![Vec3::zeros(); n];
        for k in 0..n {
            let len = sums[k].norm();
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::Numerical(format!("vertex {k} has no normal")));
            }
            let nk = sums[k] / len;
            let r = nk - self.targets[k];
            loss += 0.5 * self.weights[k] * r.norm_squared();
            let gn = r * self.weights[k];
            g_sum[k] = (gn - nk * nk.dot(&gn)) / len;
        }
        let mut grad = vec![Vec3::zeros(); n];
        for &[a, b, c] in faces {
            let gc = g_sum[a] + g_sum[b] + g_sum[c];
            let p = mesh.vertices();
            let e1 = p[b] - p[a];
            let e2 = p[c] - p[a];
            let gb = e2.cross(&gc);
            let gcc = gc.cross(&e1);
            grad[b] += gb;
            grad[c] += gcc;
            grad[a] -= gb + gcc;
        }
        Ok((loss, grad))
    }
}

impl GuidanceSource for NormalMatch {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&mut self, _epoch: usize, mesh: &Mesh) -> Result<(f64, Vec<Vec3>)> {
        self.loss_and_grad(mesh)
    }
}

/// `1/2 sum_k |v_k - p_k|^2` against fixed positions.
#[derive(Debug, Clone)]
pub struct VertexMatch {
    name: String,
    target: Vec<Vec3>,
}

impl VertexMatch {
    pub fn new(name: impl Into<String>, target: Vec<Vec3>) -> Self {
        Self {
            name: name.into(),
            target,
        }
    }

    pub fn loss_and_grad(target: &[Vec3], vertices: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        if vertices.len() != target.len() {
            return Err(Error::ShapeMismatch {
                what: "vertex-match vertices",
                expected: target.len(),
                actual: vertices.len(),
            });
        }
        let grad: Vec<Vec3> = vertices.iter().zip(target).map(|(v, p)| v - p).collect();
        let loss = 0.5 * grad.iter().map(|g| g.norm_squared()).sum::<f64>();
        Ok((loss, grad))
    }
}

impl GuidanceSource for VertexMatch {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&mut self, _epoch: usize, mesh: &Mesh) -> Result<(f64, Vec<Vec3>)> {
        Self::loss_and_grad(&self.target, mesh.vertices())
    }
}
