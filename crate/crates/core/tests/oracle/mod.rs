//! Independent dense re-implementations used as test oracles.

#![allow(dead_code)]

use darap::mesh::{Mesh, Vec3};
use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector3};

/// Interior angle at corner `c` of face `f`, from atan2.
fn corner_angle(m: &Mesh, f: usize, c: usize) -> f64 {
    let t = m.faces()[f];
    let p = m.vertices();
    let a = p[t[(c + 1) % 3]] - p[t[c]];
    let b = p[t[(c + 2) % 3]] - p[t[c]];
    a.cross(&b).norm().atan2(a.dot(&b))
}

/// Dense symmetric edge weights `W[i][j] = 1/2 sum cot(opposite angles)` and
/// the number of faces on each edge.
pub fn dense_weights(m: &Mesh) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.n_vertices();
    let mut w = DMatrix::zeros(n, n);
    let mut count = DMatrix::zeros(n, n);
    for (f, t) in m.faces().iter().enumerate() {
        for c in 0..3 {
            let (i, j) = (t[(c + 1) % 3], t[(c + 2) % 3]);
            let cot = (1.0 / corner_angle(m, f, c).tan()).clamp(-1e4, 1e4);
            w[(i, j)] += 0.5 * cot;
            w[(j, i)] += 0.5 * cot;
            count[(i, j)] += 1.0;
            count[(j, i)] += 1.0;
        }
    }
    (w, count)
}

/// `L = D - W`.
pub fn dense_laplacian(m: &Mesh) -> DMatrix<f64> {
    let (w, _) = dense_weights(m);
    let n = m.n_vertices();
    let mut l = -w.clone();
    for i in 0..n {
        l[(i, i)] = w.row(i).sum();
    }
    l
}

/// Component label per vertex by breadth-first search over faces.
pub fn components(m: &Mesh) -> Vec<usize> {
    let n = m.n_vertices();
    let mut adj = vec![Vec::new(); n];
    for t in m.faces() {
        for c in 0..3 {
            adj[t[c]].push(t[(c + 1) % 3]);
            adj[t[(c + 1) % 3]].push(t[c]);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = next;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if label[u] == usize::MAX {
                    label[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    label
}

pub fn barycentric_masses(m: &Mesh) -> Vec<f64> {
    let mut a = vec![0.0; m.n_vertices()];
    for t in m.faces() {
        let p = m.vertices();
        let area = 0.5 * (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]])).norm();
        for &v in t {
            a[v] += area / 3.0;
        }
    }
    a
}

/// Solves `K x = b` per column with the first vertex of each component
/// removed, pinned entries zero.
pub fn dense_pinned_solve(k: &DMatrix<f64>, b: &[Vec3], labels: &[usize]) -> Vec<Vec3> {
    let n = k.nrows();
    let mut seen = std::collections::HashSet::new();
    let free: Vec<usize> = (0..n).filter(|&v| !seen.insert(labels[v])).collect();
    let kr = DMatrix::from_fn(free.len(), free.len(), |i, j| k[(free[i], free[j])]);
    let chol = kr.cholesky().expect("pinned matrix is positive definite");
    let mut out = vec![Vec3::zeros(); n];
    for d in 0..3 {
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&v| b[v][d]));
        let x = chol.solve(&rhs);
        for (i, &v) in free.iter().enumerate() {
            out[v][d] = x[i];
        }
    }
    out
}

/// Moves each component's mass-weighted centroid onto the source one.
pub fn align(m: &Mesh, x: &mut [Vec3]) {
    let labels = components(m);
    let mass = barycentric_masses(m);
    let nc = labels.iter().max().unwrap() + 1;
    let mut src = vec![Vec3::zeros(); nc];
    let mut cur = vec![Vec3::zeros(); nc];
    let mut tot = vec![0.0; nc];
    for v in 0..x.len() {
        src[labels[v]] += m.vertices()[v] * mass[v];
        cur[labels[v]] += x[v] * mass[v];
        tot[labels[v]] += mass[v];
    }
    for v in 0..x.len() {
        let c = labels[v];
        x[v] += (src[c] - cur[c]) / tot[c];
    }
}

/// `rhs(k) = sum over face corners at k of mean(R) (w_km/n_km e_km + w_kn/n_kn e_kn)`.
pub fn dense_rhs(m: &Mesh, rotations: &[Matrix3<f64>]) -> Vec<Vec3> {
    let (w, count) = dense_weights(m);
    let p = m.vertices();
    let mut rhs = vec![Vec3::zeros(); m.n_vertices()];
    for t in m.faces() {
        let mean = (rotations[t[0]] + rotations[t[1]] + rotations[t[2]]) / 3.0;
        for c in 0..3 {
            let k = t[c];
            let spoke = |j: usize| (p[j] - p[k]) * (w[(k, j)] / count[(k, j)]);
            rhs[k] += mean * (spoke(t[(c + 1) % 3]) + spoke(t[(c + 2) % 3]));
        }
    }
    rhs
}

/// Dense per-face gradient operator (rows `3f + s`) and face areas.
pub fn dense_gradient(m: &Mesh) -> (DMatrix<f64>, Vec<f64>) {
    let p = m.vertices();
    let mut g = DMatrix::zeros(3 * m.n_faces(), m.n_vertices());
    let mut areas = Vec::new();
    for (f, t) in m.faces().iter().enumerate() {
        let cross = (p[t[1]] - p[t[0]]).cross(&(p[t[2]] - p[t[0]]));
        let twice = cross.norm();
        let n = cross / twice;
        areas.push(0.5 * twice);
        for c in 0..3 {
            let opposite = p[t[(c + 2) % 3]] - p[t[(c + 1) % 3]];
            let grad = n.cross(&opposite) / twice;
            for s in 0..3 {
                g[(3 * f + s, t[c])] += grad[s];
            }
        }
    }
    (g, areas)
}

/// Least-squares vertices for per-face jacobians: `G^T A G x = G^T A b`.
pub fn dense_njf(m: &Mesh, jacobians: &[Matrix3<f64>]) -> Vec<Vec3> {
    let (g, areas) = dense_gradient(m);
    let a = DMatrix::from_diagonal(&DVector::from_iterator(
        3 * areas.len(),
        areas.iter().flat_map(|&x| [x, x, x]),
    ));
    let gta = g.transpose() * a;
    let k = &gta * &g;
    let mut b = vec![Vec3::zeros(); m.n_vertices()];
    for d in 0..3 {
        let target = DVector::from_iterator(
            3 * jacobians.len(),
            jacobians.iter().flat_map(|j| [j[(d, 0)], j[(d, 1)], j[(d, 2)]]),
        );
        let r = &gta * target;
        for v in 0..b.len() {
            b[v][d] = r[v];
        }
    }
    let mut x = dense_pinned_solve(&k, &b, &components(m));
    align(m, &mut x);
    x
}

pub fn procrustes_energy(r: &Matrix3<f64>, edges: &[(f64, Vec3)], u: &Vec3, t: &Vec3, lm: f64) -> f64 {
    edges.iter().map(|(w, e)| w * (r * e - e).norm_squared()).sum::<f64>() + lm * (r * u - t).norm_squared()
}

/// Coarse axis-angle grid over the rotation ball, a 1-degree local grid,
/// then compass search down to 1e-9 rad.
pub fn brute_force_rotation(edges: &[(f64, Vec3)], u: &Vec3, t: &Vec3, lm: f64) -> Matrix3<f64> {
    let energy = |w: &Vector3<f64>| procrustes_energy(Rotation3::new(*w).matrix(), edges, u, t, lm);
    let pi = std::f64::consts::PI;
    let coarse = 10f64.to_radians();
    let steps = (pi / coarse).ceil() as i32;
    let mut best = Vector3::zeros();
    let mut best_e = energy(&best);
    for i in -steps..=steps {
        for j in -steps..=steps {
            for k in -steps..=steps {
                let w = Vector3::new(i as f64, j as f64, k as f64) * coarse;
                if w.norm() > pi + coarse {
                    continue;
                }
                let e = energy(&w);
                if e < best_e {
                    best_e = e;
                    best = w;
                }
            }
        }
    }
    let fine = 1f64.to_radians();
    let center = best;
    for i in -10..=10 {
        for j in -10..=10 {
            for k in -10..=10 {
                let w = center + Vector3::new(i as f64, j as f64, k as f64) * fine;
                let e = energy(&w);
                if e < best_e {
                    best_e = e;
                    best = w;
                }
            }
        }
    }
    let mut step = fine;
    while step > 1e-9 {
        let mut improved = false;
        for d in 0..3 {
            for s in [-1.0, 1.0] {
                let mut w = best;
                w[d] += s * step;
                let e = energy(&w);
                if e < best_e {
                    best_e = e;
                    best = w;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Rotation3::new(best).into_inner()
}

/// Angle of `a^T b`.
pub fn rotation_distance(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (((a.transpose() * b).trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}
