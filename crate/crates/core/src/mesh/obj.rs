//! Wavefront OBJ reading and writing.
//!
//! Supported records: `v`, `vt`, `f`; `vn`, `o`, `g`, `s`, `mtllib`,
//! `usemtl`, `l`, `p` and comments are accepted and ignored. Normals are
//! always recomputed from geometry. Multiple objects/groups merge into one
//! mesh because OBJ indices are global.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Point3;

use super::{MeshError, TriMesh};

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshError> {
    let v: f64 = tok.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("malformed number '{tok}'"),
    })?;
    if !v.is_finite() {
        return Err(MeshError::Parse {
            line,
            message: format!("non-finite number '{tok}'"),
        });
    }
    Ok(v)
}

/// Resolves a 1-based or negative (relative) OBJ index to 0-based.
fn resolve(tok: &str, count: usize, line: usize) -> Result<u32, MeshError> {
    let raw: i64 = tok.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("malformed index '{tok}'"),
    })?;
    let idx = match raw {
        0 => None,
        r if r > 0 => Some(r - 1),
        r => Some(count as i64 + r),
    };
    match idx {
        Some(i) if i >= 0 && (i as usize) < count && i <= u32::MAX as i64 => Ok(i as u32),
        _ => Err(MeshError::IndexOutOfRange {
            line,
            index: raw,
            count,
        }),
    }
}

pub fn parse_obj(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut uv_triangles: Vec<[u32; 3]> = Vec::new();
    let mut uv_complete = true;

    for (lineno, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = lineno + 1;
        let text = String::from_utf8_lossy(raw);
        let text = text.split('#').next().unwrap_or("").trim();
        let mut toks = text.split_whitespace();
        let Some(keyword) = toks.next() else { continue };
        match keyword {
            "v" => {
                let coords: Vec<&str> = toks.collect();
                if coords.len() < 3 {
                    return Err(MeshError::Parse {
                        line,
                        message: "vertex needs 3 coordinates".into(),
                    });
                }
                // Trailing w or vertex colours are tolerated.
                let mut p = [0.0; 3];
                for (slot, tok) in p.iter_mut().zip(&coords) {
                    *slot = parse_f64(tok, line)?;
                }
                for tok in &coords[3..] {
                    parse_f64(tok, line)?;
                }
                vertices.push(Point3::from(p));
            }
            "vt" => {
                let coords: Vec<&str> = toks.collect();
                if coords.is_empty() {
                    return Err(MeshError::Parse {
                        line,
                        message: "texture coordinate needs at least 1 value".into(),
                    });
                }
                let u = parse_f64(coords[0], line)?;
                let v = match coords.get(1) {
                    Some(tok) => parse_f64(tok, line)?,
                    None => 0.0,
                };
                texcoords.push([u, v]);
            }
            "vn" => {
                for tok in toks {
                    parse_f64(tok, line)?;
                }
            }
            "f" => {
                let mut pos = Vec::new();
                let mut uvs = Vec::new();
                for corner in toks {
                    let mut parts = corner.split('/');
                    let vi = parts.next().unwrap_or("");
                    pos.push(resolve(vi, vertices.len(), line)?);
                    match parts.next() {
                        Some(t) if !t.is_empty() => uvs.push(resolve(t, texcoords.len(), line)?),
                        _ => uv_complete = false,
                    }
                }
                if pos.len() < 3 {
                    return Err(MeshError::Parse {
                        line,
                        message: format!("face has {} vertices, need at least 3", pos.len()),
                    });
                }
                for k in 1..pos.len() - 1 {
                    triangles.push([pos[0], pos[k], pos[k + 1]]);
                    if uv_complete {
                        uv_triangles.push([uvs[0], uvs[k], uvs[k + 1]]);
                    }
                }
            }
            _ => {}
        }
    }

    if triangles.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    let mesh = TriMesh::new(vertices, triangles)?;
    if uv_complete {
        mesh.with_texcoords(texcoords, uv_triangles)
    } else {
        Ok(mesh)
    }
}

/// Serialises geometry (and texture coordinates, if any) as OBJ. Floats use
/// the shortest representation that parses back to the same value.
pub fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.texcoords() {
        let _ = writeln!(out, "vt {} {}", t[0], t[1]);
    }
    if mesh.has_texcoords() {
        for (f, t) in mesh.triangles().iter().zip(mesh.uv_triangles()) {
            let _ = writeln!(
                out,
                "f {}/{} {}/{} {}/{}",
                f[0] + 1,
                t[0] + 1,
                f[1] + 1,
                t[1] + 1,
                f[2] + 1,
                t[2] + 1
            );
        }
    } else {
        for f in mesh.triangles() {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
    }
    out
}

fn read_obj(path: &Path) -> Result<TriMesh, MeshError> {
    let bytes = std::fs::read(path).map_err(|source| MeshError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_obj(&bytes).map_err(|e| MeshError::InFile {
        path: path.to_owned(),
        source: Box::new(e),
    })
}

/// Reads a morph manifest: TOML key/value pairs `name = "target.obj"`.
/// Relative paths resolve against the manifest's directory.
pub fn load_morph_manifest(path: &Path) -> Result<BTreeMap<String, PathBuf>, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_owned(),
        source,
    })?;
    let table: BTreeMap<String, String> =
        toml::from_str(&text).map_err(|e| MeshError::Manifest {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(table
        .into_iter()
        .map(|(name, file)| (name, base.join(file)))
        .collect())
}

/// Loads a base mesh and, optionally, the expression targets listed in a
/// morph manifest. Each target must share the base vertex order.
pub fn load_mesh_with_morphs(base: &Path, manifest: Option<&Path>) -> Result<TriMesh, MeshError> {
    let mut mesh = read_obj(base)?;
    if let Some(manifest) = manifest {
        for (name, file) in load_morph_manifest(manifest)? {
            let target = read_obj(&file)?;
            mesh.add_morph_target(&name, target.vertices())
                .map_err(|e| MeshError::InFile {
                    path: file.clone(),
                    source: Box::new(e),
                })?;
        }
    }
    Ok(mesh)
}
