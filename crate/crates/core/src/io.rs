//! Text formats for target normals, masks and rotation dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Matrix3;

use crate::darap::{RotationField, TargetNormals};
use crate::error::{Error, Result};
use crate::mesh::Vec3;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_row<const N: usize>(line: &str, lineno: usize) -> Result<[f64; N]> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != N {
        return Err(Error::parse(lineno, format!("expected {N} values, found {}", fields.len())));
    }
    let mut out = [0.0f64; N];
    for (o, f) in out.iter_mut().zip(&fields) {
        *o = f
            .parse()
            .map_err(|_| Error::parse(lineno, format!("not a number: {f:?}")))?;
        if !o.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite value {f}")));
        }
    }
    Ok(out)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// One `nx,ny,nz` row per vertex. A leading `nx,ny,nz` header is accepted.
pub fn parse_normals(text: &str) -> Result<TargetNormals> {
    data_lines(text)
        .filter(|(i, l)| !(*i == 1 && l.starts_with("nx")))
        .map(|(i, l)| parse_row::<3>(l, i).map(|[x, y, z]| Vec3::new(x, y, z)))
        .collect::<Result<Vec<_>>>()
        .map(TargetNormals::new)
}

pub fn format_normals(normals: &[Vec3]) -> String {
    let mut s = String::with_capacity(normals.len() * 60);
    for n in normals {
        writeln!(s, "{},{},{}", n.x, n.y, n.z).expect("string write");
    }
    s
}

/// Loads a normals file and checks it has `expected_rows` rows.
pub fn load_normals(path: impl AsRef<Path>, expected_rows: usize) -> Result<TargetNormals> {
    let path = path.as_ref();
    let t = parse_normals(&read(path)?)?;
    if t.len() != expected_rows {
        return Err(Error::ShapeMismatch {
            what: "normal rows",
            expected: expected_rows,
            actual: t.len(),
        });
    }
    Ok(t)
}

pub fn save_normals(path: impl AsRef<Path>, normals: &[Vec3]) -> Result<()> {
    write(path.as_ref(), &format_normals(normals))
}

/// One `0` or `1` per line.
pub fn parse_mask(text: &str) -> Result<Vec<bool>> {
    data_lines(text)
        .map(|(i, l)| match l {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(Error::parse(i, format!("mask entries must be 0 or 1, found {l:?}"))),
        })
        .collect()
}

pub fn format_mask(mask: &[bool]) -> String {
    mask.iter().map(|&b| if b { "1\n" } else { "0\n" }).collect()
}

pub fn load_mask(path: impl AsRef<Path>, expected_rows: usize) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let m = parse_mask(&read(path)?)?;
    if m.len() != expected_rows {
        return Err(Error::ShapeMismatch {
            what: "mask rows",
            expected: expected_rows,
            actual: m.len(),
        });
    }
    Ok(m)
}

/// Nine row-major values per rotation.
pub fn format_rotations(rotations: &RotationField) -> String {
    let mut s = String::new();
    for r in rotations.rotations() {
        let v: Vec<String> = (0..9).map(|i| r[(i / 3, i % 3)].to_string()).collect();
        s.push_str(&v.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_rotations(text: &str) -> Result<RotationField> {
    data_lines(text)
        .map(|(i, l)| parse_row::<9>(l, i).map(|v| Matrix3::from_row_slice(&v)))
        .collect::<Result<Vec<_>>>()
        .map(RotationField::new)
}

pub fn save_rotations(path: impl AsRef<Path>, rotations: &RotationField) -> Result<()> {
    write(path.as_ref(), &format_rotations(rotations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normals_round_trip_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n: Vec<Vec3> = (0..200)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random(), -rng.random::<f64>() * 1e-7))
            .collect();
        let back = parse_normals(&format_normals(&n)).unwrap();
        assert_eq!(back.values(), &n[..]);
        let with_header = format!("nx,ny,nz\n{}", format_normals(&n));
        assert_eq!(parse_normals(&with_header).unwrap().values(), &n[..]);
    }

    #[test]
    fn normals_errors() {
        assert!(matches!(parse_normals("1,2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_normals("1,2,3\n1,x,3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_normals("nan,0,0\n").is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.csv");
        save_normals(&p, &[Vec3::x(), Vec3::y()]).unwrap();
        let err = load_normals(&p, 3).unwrap_err();
        assert!(err.to_string().contains("expected 3") && err.to_string().contains("got 2"), "{err}");
        assert!(load_normals(dir.path().join("missing.csv"), 2).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let m = vec![true, false, false, true];
        assert_eq!(parse_mask(&format_mask(&m)).unwrap(), m);
        assert!(parse_mask("1\n2\n").is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        std::fs::write(&p, format_mask(&m)).unwrap();
        assert!(load_mask(&p, 5).is_err());
        assert_eq!(load_mask(&p, 4).unwrap(), m);
    }

    #[test]
    fn rotations_round_trip() {
        let r = RotationField::new(vec![
            Rotation3::from_euler_angles(0.1, 0.2, 0.3).into_inner(),
            Matrix3::identity(),
        ]);
        let text = format_rotations(&r);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 9);
        assert_eq!(parse_rotations(&text).unwrap(), r);
    }
}
