//! Mesh quality report. Never fails; problems are listed as issues.

use std::collections::HashMap;
use std::fmt;

use super::{face_areas, vertex_normals_flagged, Mesh};

/// Aspect ratio above which a face is reported as a needle.
pub const NEEDLE_ASPECT_RATIO: f64 = 1e4;
/// Faces below this fraction of the mean face area are degenerate.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueKind {
    NonManifoldEdge,
    InconsistentOrientation,
    DegenerateFace,
    NeedleFace,
    MultipleBoundaryLoops,
    IsolatedVertex,
    ZeroNormalVertex,
}

impl IssueKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IssueKind::NonManifoldEdge => "non_manifold_edge",
            IssueKind::InconsistentOrientation => "inconsistent_orientation",
            IssueKind::DegenerateFace => "degenerate_face",
            IssueKind::NeedleFace => "needle_face",
            IssueKind::MultipleBoundaryLoops => "multiple_boundary_loops",
            IssueKind::IsolatedVertex => "isolated_vertex",
            IssueKind::ZeroNormalVertex => "zero_normal_vertex",
        }
    }
}

/// One row of the report: kind, element index, value. Edge issues index the
/// first incident face; boundary-loop issues index the component.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub kind: IssueKind,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub n_vertices: usize,
    pub n_faces: usize,
    pub components: usize,
    pub boundary_edges: usize,
    pub boundary_loops: usize,
    pub max_aspect_ratio: f64,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }

    /// Edge-manifold and consistently oriented.
    pub fn is_manifold(&self) -> bool {
        self.count(IssueKind::NonManifoldEdge) == 0
            && self.count(IssueKind::InconsistentOrientation) == 0
    }

    /// Manifold, no degenerate faces or isolated vertices, at most one
    /// boundary loop per component.
    pub fn is_valid(&self) -> bool {
        self.is_manifold()
            && self.count(IssueKind::DegenerateFace) == 0
            && self.count(IssueKind::IsolatedVertex) == 0
            && self.count(IssueKind::MultipleBoundaryLoops) == 0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,index,value\n");
        for i in &self.issues {
            s.push_str(&format!("{},{},{}\n", i.kind.as_str(), i.index, i.value));
        }
        s
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertices: {}", self.n_vertices)?;
        writeln!(f, "faces: {}", self.n_faces)?;
        writeln!(f, "components: {}", self.components)?;
        writeln!(f, "manifold: {}", self.is_manifold())?;
        writeln!(f, "boundary edges: {}", self.boundary_edges)?;
        writeln!(f, "boundary loops: {}", self.boundary_loops)?;
        writeln!(f, "max aspect ratio: {:.6}", self.max_aspect_ratio)?;
        for kind in [
            IssueKind::NonManifoldEdge,
            IssueKind::InconsistentOrientation,
            IssueKind::DegenerateFace,
            IssueKind::NeedleFace,
            IssueKind::MultipleBoundaryLoops,
            IssueKind::IsolatedVertex,
            IssueKind::ZeroNormalVertex,
        ] {
            writeln!(f, "{}: {}", kind.as_str(), self.count(kind))?;
        }
        Ok(())
    }
}

/// Longest edge squared over twice the area, i.e. longest edge over the
/// altitude onto it. Equilateral triangles give 2/sqrt(3).
pub fn aspect_ratio(mesh: &Mesh, f: usize) -> f64 {
    let [a, b, c] = mesh.corners(f);
    let longest = (b - a)
        .norm_squared()
        .max((c - b).norm_squared())
        .max((a - c).norm_squared());
    let twice_area = mesh.face_cross(f).norm();
    if twice_area == 0.0 {
        f64::INFINITY
    } else {
        longest / twice_area
    }
}

pub fn validate(mesh: &Mesh) -> ValidationReport {
    let mut report = ValidationReport {
        n_vertices: mesh.n_vertices(),
        n_faces: mesh.n_faces(),
        ..Default::default()
    };

    // undirected edge -> incident (face, directed a->b)
    let mut edges: HashMap<(usize, usize), Vec<(usize, (usize, usize))>> = HashMap::new();
    for (f, tri) in mesh.faces().iter().enumerate() {
        for c in 0..3 {
            let (a, b) = (tri[c], tri[(c + 1) % 3]);
            edges.entry((a.min(b), a.max(b))).or_default().push((f, (a, b)));
        }
    }
    let mut keys: Vec<_> = edges.keys().copied().collect();
    keys.sort_unstable();

    let mut boundary: Vec<(usize, usize)> = Vec::new();
    for key in &keys {
        let inc = &edges[key];
        match inc.len() {
            1 => boundary.push(*key),
            2 => {
                if inc[0].1 == inc[1].1 {
                    report.issues.push(Issue {
                        kind: IssueKind::InconsistentOrientation,
                        index: inc[0].0,
                        value: inc[1].0 as f64,
                    });
                }
            }
            n => report.issues.push(Issue {
                kind: IssueKind::NonManifoldEdge,
                index: inc[0].0,
                value: n as f64,
            }),
        }
    }
    report.boundary_edges = boundary.len();

    let (label, n_comp) = mesh.components();
    report.components = n_comp;

    // boundary loops: connected components of the boundary-edge graph
    {
        let mut parent: HashMap<usize, usize> = HashMap::new();
        fn find(p: &mut HashMap<usize, usize>, x: usize) -> usize {
            let mut r = x;
            while let Some(&q) = p.get(&r) {
                if q == r {
                    break;
                }
                r = q;
            }
            p.insert(x, r);
            r
        }
        for &(a, b) in &boundary {
            parent.entry(a).or_insert(a);
            parent.entry(b).or_insert(b);
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                parent.insert(ra.max(rb), ra.min(rb));
            }
        }
        let verts: Vec<usize> = parent.keys().copied().collect();
        let mut loops_per_comp = vec![0usize; n_comp];
        let mut roots = std::collections::HashSet::new();
        for v in verts {
            let r = find(&mut parent, v);
            if roots.insert(r) {
                loops_per_comp[label[r]] += 1;
            }
        }
        report.boundary_loops = roots.len();
        for (c, &n) in loops_per_comp.iter().enumerate() {
            if n > 1 {
                report.issues.push(Issue {
                    kind: IssueKind::MultipleBoundaryLoops,
                    index: c,
                    value: n as f64,
                });
            }
        }
    }

    let areas = face_areas(mesh);
    let mean = areas.iter().sum::<f64>() / areas.len() as f64;
    let mut max_aspect: f64 = 0.0;
    for (f, &a) in areas.iter().enumerate() {
        if a < DEGENERATE_AREA_FRACTION * mean {
            report.issues.push(Issue {
                kind: IssueKind::DegenerateFace,
                index: f,
                value: a,
            });
            continue;
        }
        let ar = aspect_ratio(mesh, f);
        max_aspect = max_aspect.max(ar);
        if ar > NEEDLE_ASPECT_RATIO {
            report.issues.push(Issue {
                kind: IssueKind::NeedleFace,
                index: f,
                value: ar,
            });
        }
    }
    report.max_aspect_ratio = max_aspect;

    let mut used = vec![false; mesh.n_vertices()];
    for tri in mesh.faces() {
        for &v in tri {
            used[v] = true;
        }
    }
    for (v, u) in used.iter().enumerate() {
        if !u {
            report.issues.push(Issue {
                kind: IssueKind::IsolatedVertex,
                index: v,
                value: 0.0,
            });
        }
    }
    if report.count(IssueKind::IsolatedVertex) == 0 {
        if let Ok(vn) = vertex_normals_flagged(mesh) {
            for v in vn.fallback {
                report.issues.push(Issue {
                    kind: IssueKind::ZeroNormalVertex,
                    index: v,
                    value: 0.0,
                });
            }
        }
    }

    report
}
