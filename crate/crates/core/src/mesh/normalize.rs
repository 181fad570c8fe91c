use super::{Mesh, Vec3};
use crate::error::{Error, Result};

/// Translate-then-scale map `p -> (p + translation) * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub translation: Vec3,
    pub scale: f64,
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        Self {
            translation: Vec3::zeros(),
            scale: 1.0,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        (p + self.translation) * self.scale
    }

    pub fn invert(&self, q: &Vec3) -> Vec3 {
        q / self.scale - self.translation
    }
}

/// Axis-aligned bounding box `(min, max)`.
pub fn bbox(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

pub fn bbox_diagonal(points: &[Vec3]) -> f64 {
    let (lo, hi) = bbox(points);
    (hi - lo).norm()
}

/// Centers the bounding box at the origin and scales uniformly so its longest
/// side is exactly 2.
pub fn normalize_unit_cube(mesh: &Mesh) -> Result<(Mesh, NormalizationTransform)> {
    let (lo, hi) = bbox(mesh.vertices());
    let extent = (hi - lo).max();
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::InvalidInput(format!(
            "degenerate bounding box (max extent {extent})"
        )));
    }
    let t = NormalizationTransform {
        translation: -(lo + hi) * 0.5,
        scale: 2.0 / extent,
    };
    Ok((mesh.map_vertices(|p| t.apply(p)), t))
}

/// Rescales `deformed` about its bounding-box center so that its bounding-box
/// diagonal equals that of `source`.
pub fn restore_bbox_diagonal(deformed: &Mesh, source: &Mesh) -> Result<Mesh> {
    if deformed.n_vertices() == 0 || source.n_vertices() == 0 {
        return Err(Error::InvalidInput("empty mesh".into()));
    }
    let (lo, hi) = bbox(deformed.vertices());
    let d = (hi - lo).norm();
    if !(d > 0.0) {
        return Err(Error::Numerical("deformed mesh has zero bounding-box diagonal".into()));
    }
    let s = bbox_diagonal(source.vertices()) / d;
    let c = (lo + hi) * 0.5;
    Ok(deformed.map_vertices(|p| c + (p - c) * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use approx::assert_relative_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    #[test]
    fn cube_to_unit_cube() {
        let m = shapes::cube(2).map_vertices(|p| (p + Vec3::repeat(1.0)) * 2.0);
        let (lo, hi) = bbox(m.vertices());
        assert_eq!((lo, hi), (Vec3::zeros(), Vec3::repeat(4.0)));
        let (n, t) = normalize_unit_cube(&m).unwrap();
        assert_eq!(t.scale, 0.5);
        assert_eq!(t.translation, Vec3::repeat(-2.0));
        let (lo, hi) = bbox(n.vertices());
        assert_eq!((lo, hi), (Vec3::repeat(-1.0), Vec3::repeat(1.0)));
    }

    #[test]
    fn idempotent() {
        let (m, _) = normalize_unit_cube(&shapes::organic(2, 1)).unwrap();
        let (m2, t) = normalize_unit_cube(&m).unwrap();
        assert!((t.scale - 1.0).abs() < 1e-12);
        assert!(t.translation.norm() < 1e-12);
        for (a, b) in m.vertices().iter().zip(m2.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_bbox_is_rejected() {
        let m = Mesh::new(vec![Vec3::zeros(); 3], vec![[0, 1, 2]]).unwrap();
        assert!(normalize_unit_cube(&m).is_err());
    }

    #[test]
    fn restore_undoes_scaling() {
        let src = shapes::organic(2, 4);
        let big = src.map_vertices(|p| p * 2.0 + Vec3::new(0.3, 0.0, -1.0));
        let r = restore_bbox_diagonal(&big, &src).unwrap();
        assert_relative_eq!(
            bbox_diagonal(r.vertices()),
            bbox_diagonal(src.vertices()),
            max_relative = 1e-12
        );
        let a0 = crate::mesh::face_areas(&src);
        let a1 = crate::mesh::face_areas(&r);
        for (x, y) in a0.iter().zip(&a1) {
            assert_relative_eq!(y / x, 1.0, max_relative = 1e-10);
        }
        let same = restore_bbox_diagonal(&src, &src).unwrap();
        for (a, b) in same.vertices().iter().zip(src.vertices()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn restore_after_rotation_matches_diagonal() {
        let src = shapes::organic(2, 9);
        let q = Rotation3::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_2 * 0.5);
        let rot = src.map_vertices(|p| q * p);
        let r = restore_bbox_diagonal(&rot, &src).unwrap();
        let want = bbox_diagonal(src.vertices());
        assert_relative_eq!(bbox_diagonal(r.vertices()), want, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn random_clouds_fit_side_two(
            pts in prop::collection::vec(prop::array::uniform3(-50.0f64..50.0), 3..40)
        ) {
            let v: Vec<Vec3> = pts.iter().map(|p| Vec3::from(*p)).collect();
            let m = Mesh::new(v, vec![[0, 1, 2]]).unwrap();
            let (lo, hi) = bbox(m.vertices());
            prop_assume!((hi - lo).max() > 1e-6);
            let (n, t) = normalize_unit_cube(&m).unwrap();
            let (lo, hi) = bbox(n.vertices());
            prop_assert!(((hi - lo).max() - 2.0).abs() < 1e-12);
            prop_assert!((lo + hi).norm() < 1e-12);
            for (p, q) in m.vertices().iter().zip(n.vertices()) {
                let back = t.invert(q);
                prop_assert!((back - p).norm() <= 1e-12 * p.norm().max(1.0));
            }
        }
    }
}
