//! Wavefront OBJ subset: `v`, `vn`, `vt` and polygonal `f` records.
//!
//! Faces are fan-triangulated. Vertices are de-duplicated per distinct
//! `v/vt/vn` triple so shading normals and uvs stay per-corner. Other record
//! types (`o`, `g`, `s`, `usemtl`, `mtllib`) are ignored.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::scalar::Real;
use crate::vector::Vec3;

pub fn parse_obj<T: Real>(text: &str) -> Result<TriMesh<T>> {
    let mut positions: Vec<Vec3<T>> = Vec::new();
    let mut normals: Vec<Vec3<T>> = Vec::new();
    let mut uvs: Vec<[T; 2]> = Vec::new();
    let mut mesh = TriMesh::default();
    let mut corners: HashMap<(usize, Option<usize>, Option<usize>), u32> = HashMap::new();
    let mut any_normals = false;
    let mut any_uvs = false;
    let mut faces: Vec<Vec<(usize, Option<usize>, Option<usize>)>> = Vec::new();

    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let line_offset = offset;
        offset += line.len();
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let tag = parts.next().unwrap_or("");
        let nums = |parts: std::str::SplitWhitespace<'_>, want: usize| -> Result<Vec<T>> {
            let vals: Vec<T> = parts
                .take(want)
                .map(|s| s.parse::<f64>().map(T::lit))
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(line_offset, format!("invalid number in `{content}`")))?;
            if vals.len() < want {
                return Err(Error::parse(line_offset, format!("expected {want} values in `{content}`")));
            }
            Ok(vals)
        };
        match tag {
            "v" => {
                let v = nums(parts, 3)?;
                positions.push(Vec3::new(v[0], v[1], v[2]));
            }
            "vn" => {
                let v = nums(parts, 3)?;
                normals.push(Vec3::new(v[0], v[1], v[2]));
            }
            "vt" => {
                let v = nums(parts, 2)?;
                uvs.push([v[0], v[1]]);
            }
            "f" => {
                let mut face = Vec::new();
                for corner in parts {
                    let mut it = corner.split('/');
                    let resolve = |s: Option<&str>, len: usize| -> Result<Option<usize>> {
                        match s {
                            None | Some("") => Ok(None),
                            Some(s) => {
                                let i: i64 = s
                                    .parse()
                                    .map_err(|_| Error::parse(line_offset, format!("invalid index `{s}`")))?;
                                let idx = if i > 0 { i - 1 } else { len as i64 + i };
                                if i == 0 || idx < 0 || idx as usize >= len {
                                    return Err(Error::parse(line_offset, format!("index {i} out of range")));
                                }
                                Ok(Some(idx as usize))
                            }
                        }
                    };
                    let v = resolve(it.next(), positions.len())?
                        .ok_or_else(|| Error::parse(line_offset, "face corner without a vertex index"))?;
                    let vt = resolve(it.next(), uvs.len())?;
                    let vn = resolve(it.next(), normals.len())?;
                    any_uvs |= vt.is_some();
                    any_normals |= vn.is_some();
                    face.push((v, vt, vn));
                }
                if face.len() < 3 {
                    return Err(Error::parse(line_offset, "face needs at least three corners"));
                }
                faces.push(face);
            }
            _ => {}
        }
    }

    for face in faces {
        let mut ids = Vec::with_capacity(face.len());
        for key in face {
            let next = mesh.positions.len() as u32;
            let id = *corners.entry(key).or_insert_with(|| {
                mesh.positions.push(positions[key.0]);
                if any_normals {
                    mesh.normals.push(key.2.map(|i| normals[i]).unwrap_or_default());
                }
                if any_uvs {
                    mesh.uvs.push(key.1.map(|i| uvs[i]).unwrap_or([T::zero(); 2]));
                }
                next
            });
            ids.push(id);
        }
        for k in 1..ids.len() - 1 {
            mesh.triangles.push([ids[0], ids[k], ids[k + 1]]);
        }
    }
    if any_normals && mesh.normals.iter().any(|n| n.length_squared() == T::zero()) {
        // mixed faces: recompute everything rather than keep zero normals
        mesh.normals.clear();
    }
    mesh.set_material(0);
    Ok(mesh)
}
