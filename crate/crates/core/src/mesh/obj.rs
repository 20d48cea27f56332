//! Minimal Wavefront OBJ reader/writer (`v` and triangular `f` records).

use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use super::TriMesh;
use crate::error::{Error, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}

/// Parse OBJ text. Rejects zero-area faces; ignores unknown records.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut ignored = 0usize;
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut p = [0.0f64; 3];
                for c in &mut p {
                    let tok = it.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "vertex needs 3 coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad coordinate {tok:?}"),
                    })?;
                    if !c.is_finite() {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "non-finite coordinate".into(),
                        });
                    }
                }
                vertices.push(p);
            }
            Some("f") => {
                let idx: Vec<&str> = it.collect();
                if idx.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("only triangles supported, got {} indices", idx.len()),
                    });
                }
                let mut f = [0usize; 3];
                for (k, tok) in idx.iter().enumerate() {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("bad face index {tok:?}"),
                    })?;
                    if i < 1 {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("face index {i} invalid (indices are 1-based)"),
                        });
                    }
                    f[k] = (i - 1) as usize;
                }
                faces.push(f);
            }
            Some(_) => ignored += 1,
            None => {}
        }
    }
    if ignored > 0 {
        warn!("ignored {ignored} unsupported OBJ records");
    }
    if vertices.is_empty() || faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mesh = TriMesh::new(vertices, faces)?;
    let (face, area) = mesh.min_face_area();
    if !(area > 0.0) {
        return Err(Error::DegenerateFace {
            face,
            reason: "zero area".into(),
        });
    }
    Ok(mesh)
}

/// Serialize with 9 significant digits per coordinate.
pub fn to_obj_string(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.num_vertices() * 48 + mesh.num_faces() * 24);
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {:.8e} {:.8e} {:.8e}", v[0], v[1], v[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_obj_string(mesh)).map_err(|e| Error::io(path, e))
}
