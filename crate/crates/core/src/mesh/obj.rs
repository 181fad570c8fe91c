//! Wavefront OBJ reading and writing (positions and faces only).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Mesh, Vec3};
use crate::error::{Error, Result};

pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}

/// Parses OBJ text. Polygons are fan-triangulated from their first corner;
/// texture and normal indices are ignored; negative indices are relative to
/// the vertices read so far.
pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "vertex needs 3 coordinates"))?;
                    *c = tok.parse().map_err(|_| {
                        Error::parse(line_no, format!("bad coordinate '{tok}'"))
                    })?;
                }
                vertices.push(Vec3::from(xyz));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: i64 = head
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad face index '{tok}'")))?;
                    let n = vertices.len() as i64;
                    let resolved = match idx {
                        0 => return Err(Error::parse(line_no, "face index 0 is not valid")),
                        i if i > 0 => i - 1,
                        i => n + i,
                    };
                    if resolved < 0 || resolved >= n {
                        return Err(Error::parse(
                            line_no,
                            format!("face index {idx} out of range ({n} vertices so far)"),
                        ));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(Error::parse(line_no, "face needs at least 3 vertices"));
                }
                for k in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }

    if vertices.is_empty() || faces.is_empty() {
        return Err(Error::InvalidMesh(format!(
            "empty mesh ({} vertices, {} faces)",
            vertices.len(),
            faces.len()
        )));
    }
    Mesh::new(vertices, faces)
}

pub fn write_obj(mesh: &Mesh, out: &mut impl Write) -> std::io::Result<()> {
    for v in mesh.vertices() {
        // shortest round-trip representation, never fewer digits than needed
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn save_obj(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if mesh.n_faces() == 0 {
        return Err(Error::InvalidMesh("refusing to write a mesh with no faces".into()));
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_obj(mesh, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
