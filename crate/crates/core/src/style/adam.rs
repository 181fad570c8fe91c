//! Adam with bias correction.

use crate::mesh::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Vec3>,
    v: Vec<Vec3>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![Vec3::zeros(); n],
            v: vec![Vec3::zeros(); n],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One descent step; parameters with zero gradient history do not move.
    pub fn step(&mut self, params: &mut [Vec3], grad: &[Vec3]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for d in 0..3 {
                m[d] = self.beta1 * m[d] + (1.0 - self.beta1) * g[d];
                v[d] = self.beta2 * v[d] + (1.0 - self.beta2) * g[d] * g[d];
                let mh = m[d] / c1;
                let vh = v[d] / c2;
                p[d] -= self.learning_rate * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}
