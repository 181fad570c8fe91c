//! Discrete differential operators on the undeformed source mesh.
//!
//! Everything here is computed once per source mesh: cotangent weights,
//! vertex masses, spokes-and-rims neighbourhoods, the cotangent Laplacian and
//! its pinned Cholesky factorization, plus the per-face gradient operator used
//! by the face-jacobian Poisson baseline.
//!
//! Sign convention: `laplacian()` is positive semidefinite,
//! `(L x)_i = sum_j w_ij (x_i - x_j)`.

mod solver;
mod sparse;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{face_areas, validate, vertex_normals, Mesh, Vec3};

pub use solver::PinnedSolver;
pub use sparse::CsrMatrix;

/// Cotangents are clamped to this magnitude before use.
pub const COT_CLAMP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pin {
    /// Lowest-index vertex of each connected component.
    #[default]
    First,
    /// This vertex for its component; other components use their first vertex.
    Vertex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassKind {
    /// One third of the incident face areas.
    #[default]
    Barycentric,
    /// Mixed Voronoi areas with the obtuse-triangle fallback.
    MixedVoronoi,
}

/// Edge weights used inside each local Procrustes neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborhoodWeighting {
    /// Every undirected edge of the incident faces once, with `w_ij`.
    #[default]
    Symmetrized,
    /// Every halfedge of the incident faces, weighted by half the cotangent
    /// of the angle opposite it in its own face.
    PerHalfedge,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OperatorOptions {
    pub pin: Pin,
    pub mass: MassKind,
    pub weighting: NeighborhoodWeighting,
}

/// Precomputed operators for one source mesh. Immutable and `Sync`.
#[derive(Debug, Clone)]
pub struct SurfaceOperators {
    source: Mesh,
    options: OperatorOptions,
    source_normals: Vec<Vec3>,
    face_areas: Vec<f64>,
    /// Undirected edges `(i, j)` with `i < j`, sorted.
    edges: Vec<(usize, usize)>,
    edge_weights: Vec<f64>,
    edge_face_count: Vec<u32>,
    /// Half cotangent of the angle at each face corner.
    half_cots: Vec<[f64; 3]>,
    /// Edge index opposite each face corner.
    face_edges: Vec<[usize; 3]>,
    vertex_masses: Vec<f64>,
    vertex_faces: Vec<Vec<usize>>,
    neighborhoods: Vec<Vec<usize>>,
    /// Per face corner `k` of `(k, m, n)`: `w_km/2 e_km + w_kn/2 e_kn`.
    corner_vectors: Vec<[Vec3; 3]>,
    /// Row `k` holds `(v, d_kv)` with `rhs(k) = sum_v R_v d_kv`.
    rhs_offsets: Vec<usize>,
    rhs_stencil: Vec<(usize, Vec3)>,
    laplacian: CsrMatrix,
    component: Vec<usize>,
    n_components: usize,
    component_mass: Vec<f64>,
    component_centroid: Vec<Vec3>,
    pins: Vec<usize>,
    pinned_vertex: usize,
    solver: PinnedSolver,
}

pub(crate) fn cot(a: &Vec3, b: &Vec3) -> f64 {
    let c = a.cross(b).norm();
    let d = a.dot(b);
    if c == 0.0 {
        return if d >= 0.0 { COT_CLAMP } else { -COT_CLAMP };
    }
    (d / c).clamp(-COT_CLAMP, COT_CLAMP)
}

/// Half cotangents of the three corner angles of face `f`.
pub(crate) fn face_half_cots(mesh: &Mesh, f: usize) -> [f64; 3] {
    let p = mesh.corners(f);
    std::array::from_fn(|c| {
        let (a, b) = (p[(c + 1) % 3] - p[c], p[(c + 2) % 3] - p[c]);
        0.5 * cot(&a, &b)
    })
}

pub fn vertex_masses(mesh: &Mesh, kind: MassKind) -> Vec<f64> {
    let areas = face_areas(mesh);
    let mut m = vec![0.0; mesh.n_vertices()];
    for (f, tri) in mesh.faces().iter().enumerate() {
        match kind {
            MassKind::Barycentric => {
                for &v in tri {
                    m[v] += areas[f] / 3.0;
                }
            }
            MassKind::MixedVoronoi => {
                let p = mesh.corners(f);
                let hc = face_half_cots(mesh, f);
                let obtuse = (0..3).find(|&c| {
                    (p[(c + 1) % 3] - p[c]).dot(&(p[(c + 2) % 3] - p[c])) < 0.0
                });
                for c in 0..3 {
                    let share = match obtuse {
                        Some(o) if o == c => areas[f] / 2.0,
                        Some(_) => areas[f] / 4.0,
                        None => {
                            let (j, k) = ((c + 1) % 3, (c + 2) % 3);
                            // |e_cj|^2 cot(angle at k) + |e_ck|^2 cot(angle at j), over 8
                            0.25 * ((p[j] - p[c]).norm_squared() * hc[k]
                                + (p[k] - p[c]).norm_squared() * hc[j])
                        }
                    };
                    m[tri[c]] += share;
                }
            }
        }
    }
    m
}

impl SurfaceOperators {
    pub fn build(mesh: &Mesh, options: OperatorOptions) -> Result<Self> {
        let report = validate(mesh);
        if !report.is_manifold() {
            return Err(Error::NonManifold(format!(
                "{} non-manifold edges, {} orientation conflicts",
                report.count(crate::mesh::IssueKind::NonManifoldEdge),
                report.count(crate::mesh::IssueKind::InconsistentOrientation)
            )));
        }
        let nv = mesh.n_vertices();
        let source_normals = vertex_normals(mesh)?;
        let areas = face_areas(mesh);

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut keys: Vec<(usize, usize)> = mesh
            .faces()
            .iter()
            .flat_map(|t| (0..3).map(move |c| {
                let (a, b) = (t[(c + 1) % 3], t[(c + 2) % 3]);
                (a.min(b), a.max(b))
            }))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        for (i, k) in keys.iter().enumerate() {
            edge_index.insert(*k, i);
        }
        let edges = keys;

        let mut edge_weights = vec![0.0; edges.len()];
        let mut edge_face_count = vec![0u32; edges.len()];
        let mut half_cots = Vec::with_capacity(mesh.n_faces());
        let mut face_edges = Vec::with_capacity(mesh.n_faces());
        for (f, t) in mesh.faces().iter().enumerate() {
            let hc = face_half_cots(mesh, f);
            let fe: [usize; 3] = std::array::from_fn(|c| {
                let (a, b) = (t[(c + 1) % 3], t[(c + 2) % 3]);
                edge_index[&(a.min(b), a.max(b))]
            });
            for c in 0..3 {
                edge_weights[fe[c]] += hc[c];
                edge_face_count[fe[c]] += 1;
            }
            half_cots.push(hc);
            face_edges.push(fe);
        }

        let vertex_faces = mesh.vertex_faces();
        let neighborhoods: Vec<Vec<usize>> = vertex_faces
            .iter()
            .map(|fs| {
                let mut n: Vec<usize> = fs.iter().flat_map(|&f| face_edges[f]).collect();
                n.sort_unstable();
                n.dedup();
                n
            })
            .collect();

        let corner_vectors = mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(f, _)| {
                let p = mesh.corners(f);
                std::array::from_fn(|c| {
                    let (m, n) = ((c + 1) % 3, (c + 2) % 3);
                    // edge (c, m) is opposite corner n, edge (c, n) opposite corner m
                    let e_cm = face_edges[f][n];
                    let e_cn = face_edges[f][m];
                    let w_cm = edge_weights[e_cm] / edge_face_count[e_cm] as f64;
                    let w_cn = edge_weights[e_cn] / edge_face_count[e_cn] as f64;
                    (p[m] - p[c]) * w_cm + (p[n] - p[c]) * w_cn
                })
            })
            .collect::<Vec<[Vec3; 3]>>();

        // each face's mean rotation spreads a third of the corner vector to
        // every corner's rotation
        let mut rhs_offsets = Vec::with_capacity(nv + 1);
        let mut rhs_stencil = Vec::new();
        rhs_offsets.push(0);
        let mut row: Vec<(usize, Vec3)> = Vec::new();
        for (k, fs) in vertex_faces.iter().enumerate() {
            row.clear();
            for &f in fs {
                let t = mesh.faces()[f];
                let c = t.iter().position(|&v| v == k).expect("incidence");
                let d = corner_vectors[f][c] / 3.0;
                row.extend(t.iter().map(|&v| (v, d)));
            }
            row.sort_by_key(|e| e.0);
            let start = rhs_stencil.len();
            for &(v, d) in &row {
                match rhs_stencil[start..].last_mut() {
                    Some((u, acc)) if *u == v => *acc += d,
                    _ => rhs_stencil.push((v, d)),
                }
            }
            rhs_offsets.push(rhs_stencil.len());
        }

        let mut trip = Vec::with_capacity(4 * edges.len() + nv);
        let mut diag = vec![0.0; nv];
        for (e, &(i, j)) in edges.iter().enumerate() {
            let w = edge_weights[e];
            trip.push((i, j, -w));
            trip.push((j, i, -w));
            diag[i] += w;
            diag[j] += w;
        }
        for (i, d) in diag.into_iter().enumerate() {
            trip.push((i, i, d));
        }
        let laplacian = CsrMatrix::from_triplets(nv, nv, &trip);

        let vertex_masses = vertex_masses(mesh, options.mass);
        let (component, n_components) = mesh.components();
        let mut component_mass = vec![0.0; n_components];
        let mut component_centroid = vec![Vec3::zeros(); n_components];
        for v in 0..nv {
            component_mass[component[v]] += vertex_masses[v];
            component_centroid[component[v]] += mesh.vertices()[v] * vertex_masses[v];
        }
        for (c, m) in component_centroid.iter_mut().zip(&component_mass) {
            *c /= *m;
        }

        let pinned_vertex = match options.pin {
            Pin::First => 0,
            Pin::Vertex(v) if v < nv => v,
            Pin::Vertex(v) => {
                return Err(Error::InvalidInput(format!(
                    "pin vertex {v} out of range ({nv} vertices)"
                )))
            }
        };
        let mut pins = vec![usize::MAX; n_components];
        pins[component[pinned_vertex]] = pinned_vertex;
        for v in 0..nv {
            if pins[component[v]] == usize::MAX {
                pins[component[v]] = v;
            }
        }
        let solver = PinnedSolver::new(&laplacian, &pins)?;

        Ok(Self {
            source: mesh.clone(),
            options,
            source_normals,
            face_areas: areas,
            edges,
            edge_weights,
            edge_face_count,
            half_cots,
            face_edges,
            vertex_masses,
            vertex_faces,
            neighborhoods,
            corner_vectors,
            rhs_offsets,
            rhs_stencil,
            laplacian,
            component,
            n_components,
            component_mass,
            component_centroid,
            pins,
            pinned_vertex,
            solver,
        })
    }

    pub fn source(&self) -> &Mesh {
        &self.source
    }

    pub fn options(&self) -> OperatorOptions {
        self.options
    }

    pub fn n_vertices(&self) -> usize {
        self.source.n_vertices()
    }

    pub fn source_normals(&self) -> &[Vec3] {
        &self.source_normals
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    /// Number of faces incident to each edge (1 on the boundary).
    pub fn edge_face_count(&self) -> &[u32] {
        &self.edge_face_count
    }

    /// Symmetrized cotangent weight of edge `(i, j)`, if it exists.
    pub fn edge_weight(&self, i: usize, j: usize) -> Option<f64> {
        self.edges
            .binary_search(&(i.min(j), i.max(j)))
            .ok()
            .map(|e| self.edge_weights[e])
    }

    pub fn half_cots(&self) -> &[[f64; 3]] {
        &self.half_cots
    }

    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    pub fn vertex_masses(&self) -> &[f64] {
        &self.vertex_masses
    }

    pub fn vertex_faces(&self) -> &[Vec<usize>] {
        &self.vertex_faces
    }

    /// Edge indices of the spokes-and-rims neighbourhood of every vertex.
    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.neighborhoods
    }

    pub fn max_neighborhood(&self) -> usize {
        self.neighborhoods.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn corner_vectors(&self) -> &[[Vec3; 3]] {
        &self.corner_vectors
    }

    /// Linear map from rotations to the right-hand side at `k`.
    pub fn rhs_stencil(&self, k: usize) -> &[(usize, Vec3)] {
        &self.rhs_stencil[self.rhs_offsets[k]..self.rhs_offsets[k + 1]]
    }

    pub fn laplacian(&self) -> &CsrMatrix {
        &self.laplacian
    }

    pub fn solver(&self) -> &PinnedSolver {
        &self.solver
    }

    pub fn pinned_vertex(&self) -> usize {
        self.pinned_vertex
    }

    /// One pinned vertex per connected component.
    pub fn pins(&self) -> &[usize] {
        &self.pins
    }

    pub fn component(&self) -> &[usize] {
        &self.component
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn component_mass(&self) -> &[f64] {
        &self.component_mass
    }

    /// Mass-weighted centroid of the whole source mesh.
    pub fn source_centroid(&self) -> Vec3 {
        let total: f64 = self.component_mass.iter().sum();
        self.component_centroid
            .iter()
            .zip(&self.component_mass)
            .map(|(c, m)| c * *m)
            .sum::<Vec3>()
            / total
    }

    pub fn component_centroids(&self) -> &[Vec3] {
        &self.component_centroid
    }

    /// Mass-weighted centroid of each component of `points`.
    pub fn centroids_of(&self, points: &[Vec3]) -> Vec<Vec3> {
        let mut c = vec![Vec3::zeros(); self.n_components];
        for (v, p) in points.iter().enumerate() {
            c[self.component[v]] += p * self.vertex_masses[v];
        }
        for (x, m) in c.iter_mut().zip(&self.component_mass) {
            *x /= *m;
        }
        c
    }

    /// Spokes-and-rims edges of vertex `k` as `(i, j, w_ij)`.
    pub fn spokes_rims(&self, k: usize) -> Result<Vec<(usize, usize, f64)>> {
        let n = self.neighborhoods.get(k).ok_or_else(|| {
            Error::InvalidInput(format!("vertex {k} out of range ({} vertices)", self.n_vertices()))
        })?;
        Ok(n.iter()
            .map(|&e| (self.edges[e].0, self.edges[e].1, self.edge_weights[e]))
            .collect())
    }

    /// Weighted edge vectors of the local Procrustes problem at vertex `k`,
    /// as `(weight, source edge vector)`.
    pub fn local_edges(&self, k: usize) -> Vec<(f64, Vec3)> {
        let p = self.source.vertices();
        match self.options.weighting {
            NeighborhoodWeighting::Symmetrized => self.neighborhoods[k]
                .iter()
                .map(|&e| {
                    let (i, j) = self.edges[e];
                    (self.edge_weights[e], p[j] - p[i])
                })
                .collect(),
            NeighborhoodWeighting::PerHalfedge => self.vertex_faces[k]
                .iter()
                .flat_map(|&f| {
                    let t = self.source.faces()[f];
                    let hc = self.half_cots[f];
                    (0..3).map(move |c| (hc[c], p[t[(c + 2) % 3]] - p[t[(c + 1) % 3]]))
                })
                .collect(),
        }
    }
}

pub fn build_operators(mesh: &Mesh, pin: Pin) -> Result<SurfaceOperators> {
    SurfaceOperators::build(
        mesh,
        OperatorOptions {
            pin,
            ..Default::default()
        },
    )
}

/// Per-face gradient operator and face mass matrix.
#[derive(Debug, Clone)]
pub struct GradientOperators {
    /// `3|F| x |V|`; rows `3f..3f+3` are the x, y, z components on face `f`.
    pub gradient: CsrMatrix,
    /// Diagonal of the face mass matrix (face areas).
    pub face_mass: Vec<f64>,
    /// `(area-weighted gradient)^T`, `|V| x 3|F|`, cached for Poisson right-hand sides.
    pub weighted_divergence: CsrMatrix,
}

pub fn build_gradient_ops(mesh: &Mesh) -> Result<GradientOperators> {
    let areas = face_areas(mesh);
    let mut trip = Vec::with_capacity(9 * mesh.n_faces());
    for (f, t) in mesh.faces().iter().enumerate() {
        let a = areas[f];
        if a == 0.0 {
            return Err(Error::InvalidMesh(format!("face {f} has zero area")));
        }
        let p = mesh.corners(f);
        let n = mesh.face_cross(f) / (2.0 * a);
        for c in 0..3 {
            // gradient of the hat function at corner c: n x (opposite edge) / 2A
            let opp = p[(c + 2) % 3] - p[(c + 1) % 3];
            let g = n.cross(&opp) / (2.0 * a);
            for d in 0..3 {
                trip.push((3 * f + d, t[c], g[d]));
            }
        }
    }
    let gradient = CsrMatrix::from_triplets(3 * mesh.n_faces(), mesh.n_vertices(), &trip);
    let weighted: Vec<_> = gradient
        .triplets()
        .map(|(r, c, v)| (c, r, v * areas[r / 3]))
        .collect();
    let weighted_divergence =
        CsrMatrix::from_triplets(mesh.n_vertices(), 3 * mesh.n_faces(), &weighted);
    Ok(GradientOperators {
        gradient,
        face_mass: areas,
        weighted_divergence,
    })
}
