//! Procedural fixture meshes: tetrahedron, icosphere, grid, cube, torus, and a
//! bumpy "organic" sphere.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{Mesh, Vec3};

pub fn tetrahedron() -> Mesh {
    let v = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    Mesh::new(v, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]).expect("static fixture")
}

/// Unit-radius icosphere; `10 * 4^subdivisions + 2` vertices.
pub fn icosphere(subdivisions: u32) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::from(*p).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Mesh::new(verts, faces).expect("icosphere construction")
}

/// Flat `nx` x `ny` grid in the z = 0 plane, cells of side `cell`, normals +z.
pub fn grid(nx: usize, ny: usize, cell: f64) -> Mesh {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            v.push(Vec3::new(i as f64 * cell, j as f64 * cell, 0.0));
        }
    }
    let mut f = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            // alternate the diagonal for a less anisotropic stencil
            if (i + j) % 2 == 0 {
                f.push([a, b, c]);
                f.push([a, c, d]);
            } else {
                f.push([a, b, d]);
                f.push([b, c, d]);
            }
        }
    }
    Mesh::new(v, f).expect("grid construction")
}

/// Surface of the cube `[-1, 1]^3` with `n` x `n` quads (two triangles each) per side.
pub fn cube(n: usize) -> Mesh {
    assert!(n >= 1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |p: [usize; 3], verts: &mut Vec<Vec3>| -> usize {
        *index.entry(p).or_insert_with(|| {
            verts.push(Vec3::from(p.map(|c| 2.0 * c as f64 / n as f64 - 1.0)));
            verts.len() - 1
        })
    };
    for axis in 0..3 {
        for side in [0usize, n] {
            // pick (u, v) so that u x v points outward
            let (mut u, mut w) = ((axis + 1) % 3, (axis + 2) % 3);
            if side == 0 {
                std::mem::swap(&mut u, &mut w);
            }
            let point = |a: usize, b: usize| {
                let mut p = [0usize; 3];
                p[axis] = side;
                p[u] = a;
                p[w] = b;
                p
            };
            for a in 0..n {
                for b in 0..n {
                    let q = [point(a, b), point(a + 1, b), point(a + 1, b + 1), point(a, b + 1)]
                        .map(|p| vid(p, &mut verts));
                    faces.push([q[0], q[1], q[2]]);
                    faces.push([q[0], q[2], q[3]]);
                }
            }
        }
    }
    Mesh::new(verts, faces).expect("cube construction")
}

/// Torus around the z axis; exactly two faces per vertex.
pub fn torus(n_major: usize, n_minor: usize, major: f64, minor: f64) -> Mesh {
    assert!(n_major >= 3 && n_minor >= 3);
    let tau = std::f64::consts::TAU;
    let mut v = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let th = tau * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let ph = tau * j as f64 / n_minor as f64;
            let r = major + minor * ph.cos();
            v.push(Vec3::new(r * th.cos(), r * th.sin(), minor * ph.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut f = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            f.push([a, b, c]);
            f.push([a, c, d]);
        }
    }
    Mesh::new(v, f).expect("torus construction")
}

/// Icosphere with a seeded sum of smooth radial bumps.
pub fn organic(subdivisions: u32, seed: u64) -> Mesh {
    let base = icosphere(subdivisions);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(Vec3, f64, f64)> = (0..7)
        .map(|_| {
            let dir = loop {
                let p = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let n = p.norm();
                if n > 0.1 && n <= 1.0 {
                    break p / n;
                }
            };
            let amp = rng.random_range(-0.18..0.25);
            let width = rng.random_range(0.25..0.6);
            (dir, amp, width)
        })
        .collect();
    base.map_vertices(|p| {
        let mut r = 1.0;
        for (d, amp, w) in &bumps {
            let ang = p.angle(d);
            r += amp * (-(ang * ang) / (w * w)).exp();
        }
        // mild ellipsoidal stretch so the shape is not rotationally symmetric
        Vec3::new(p.x * r * 1.15, p.y * r, p.z * r * 0.9)
    })
}
