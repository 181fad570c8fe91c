//! Triangle mesh container and per-element geometry.
//!
//! A [`Mesh`] is immutable once built: deformation routines produce new
//! meshes that share connectivity with their source.

mod normalize;
mod obj;
mod validate;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use normalize::{bbox, bbox_diagonal, normalize_unit_cube, restore_bbox_diagonal, NormalizationTransform};
pub use obj::{load_obj, parse_obj, save_obj, write_obj};
pub use validate::{validate, Issue, IssueKind, ValidationReport, NEEDLE_ASPECT_RATIO};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl Mesh {
    /// Builds a mesh, checking index ranges, repeated corners, and minimum sizes.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        let n = vertices.len();
        for (f, tri) in faces.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {f} references vertex {bad}, mesh has {n} vertices"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {f} repeats a vertex: {tri:?}"
                )));
            }
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Same connectivity, new positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::ShapeMismatch {
                what: "vertices",
                expected: self.vertices.len(),
                actual: vertices.len(),
            });
        }
        Ok(Self {
            vertices,
            faces: self.faces.clone(),
        })
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn into_parts(self) -> (Vec<Vec3>, Vec<[usize; 3]>) {
        (self.vertices, self.faces)
    }

    pub(crate) fn corners(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Twice-area normal `(v1 - v0) x (v2 - v0)` of face `f`.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.corners(f);
        (b - a).cross(&(c - a))
    }

    /// Faces incident to each vertex, in face order.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (f, tri) in self.faces.iter().enumerate() {
            for &v in tri {
                out[v].push(f);
            }
        }
        out
    }

    /// Connected component label per vertex (via shared faces) and the count.
    /// Isolated vertices get their own component.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for tri in &self.faces {
            for k in 1..3 {
                let a = find(&mut parent, tri[0]);
                let b = find(&mut parent, tri[k]);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut roots = Vec::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            if label[r] == usize::MAX {
                label[r] = roots.len();
                roots.push(r);
            }
            label[v] = label[r];
        }
        (label, roots.len())
    }
}

/// Area of every face, `0.5 * |(vj - vi) x (vk - vi)|`.
pub fn face_areas(mesh: &Mesh) -> Vec<f64> {
    (0..mesh.n_faces())
        .map(|f| 0.5 * mesh.face_cross(f).norm())
        .collect()
}

/// Unit face normals; zero-area faces yield the zero vector.
pub fn face_normals(mesh: &Mesh) -> Vec<Vec3> {
    (0..mesh.n_faces())
        .map(|f| {
            let c = mesh.face_cross(f);
            let n = c.norm();
            if n > 0.0 {
                c / n
            } else {
                Vec3::zeros()
            }
        })
        .collect()
}

/// Area-weighted vertex normals together with the vertices whose weighted sum
/// vanished and fell back to their first incident face's normal.
#[derive(Debug, Clone)]
pub struct VertexNormals {
    pub normals: Vec<Vec3>,
    pub fallback: Vec<usize>,
}

pub fn vertex_normals_flagged(mesh: &Mesh) -> Result<VertexNormals> {
    let n = mesh.n_vertices();
    let mut sum = vec![Vec3::zeros(); n];
    let mut first_face: Vec<Option<usize>> = vec![None; n];
    for (f, tri) in mesh.faces().iter().enumerate() {
        // |cross| = 2 * area, so the cross product is already area weighted
        let c = mesh.face_cross(f);
        for &v in tri {
            sum[v] += c;
            first_face[v].get_or_insert(f);
        }
    }
    let mut normals = Vec::with_capacity(n);
    let mut fallback = Vec::new();
    for v in 0..n {
        let Some(f0) = first_face[v] else {
            return Err(Error::InvalidMesh(format!("vertex {v} is isolated")));
        };
        let len = sum[v].norm();
        let scale = mesh.face_cross(f0).norm().max(f64::MIN_POSITIVE);
        if len > 1e-12 * scale {
            normals.push(sum[v] / len);
        } else {
            let c = mesh.face_cross(f0);
            let cn = c.norm();
            if cn == 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "vertex {v} has no face with nonzero area"
                )));
            }
            normals.push(c / cn);
            fallback.push(v);
        }
    }
    Ok(VertexNormals { normals, fallback })
}

/// Unit area-weighted vertex normals.
pub fn vertex_normals(mesh: &Mesh) -> Result<Vec<Vec3>> {
    vertex_normals_flagged(mesh).map(|vn| vn.normals)
}
