//! Wavefront OBJ ingestion.
//!
//! A deliberately small subset: `v` positions, `f` faces (fan-triangulated),
//! `o`/`g` object boundaries and comments. Texture coordinates, normals and
//! material statements are ignored. Negative face indices resolve against
//! the vertex count at the point of use.
//!
//! Layers ride on object names: `o couch@furniture` produces an object
//! named `couch` tagged with layer `furniture`. Without a suffix the layer
//! is `default`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{MeshObject, SceneMesh};
use crate::error::{Error, Result};
use crate::geometry::Point3;

pub fn load_mesh(path: &Path) -> Result<SceneMesh> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let mut vertices: Vec<Point3> = Vec::new();
    let mut objects: Vec<RawObject> = Vec::new();
    let mut current = RawObject::anonymous();
    let mut used_names: HashSet<String> = HashSet::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (directive, rest) = match line.split_once(char::is_whitespace) {
            Some((d, r)) => (d, r.trim()),
            None => (line, ""),
        };
        match directive {
            "v" => {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                // An optional fourth (w) component is tolerated and ignored.
                if fields.len() < 3 || fields.len() > 4 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("vertex needs 3 coordinates, found {}", fields.len()),
                    ));
                }
                let mut coords = [0.0f64; 3];
                for (c, tok) in coords.iter_mut().zip(&fields) {
                    *c = tok.parse::<f64>().map_err(|_| {
                        Error::parse(path, lineno, format!("invalid coordinate '{tok}'"))
                    })?;
                }
                let p = Point3::new(coords[0], coords[1], coords[2]);
                if !p.is_finite() {
                    return Err(Error::parse(path, lineno, "non-finite vertex coordinate"));
                }
                vertices.push(p);
            }
            "f" => {
                let corners: Vec<usize> = rest
                    .split_whitespace()
                    .map(|tok| resolve_index(path, lineno, tok, vertices.len()))
                    .collect::<Result<_>>()?;
                if corners.len() < 3 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("face needs at least 3 vertices, found {}", corners.len()),
                    ));
                }
                // Fan triangulation from the first corner.
                for i in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[i], corners[i + 1]];
                    if tri[0] == tri[1] || tri[0] == tri[2] || tri[1] == tri[2] {
                        return Err(Error::parse(
                            path,
                            lineno,
                            "face repeats a vertex index within a triangle",
                        ));
                    }
                    current.triangles.push(tri);
                }
            }
            "o" | "g" => {
                flush(&mut objects, &mut current, &mut used_names);
                let (name, layer) = split_name_layer(rest);
                current = RawObject {
                    name,
                    layer,
                    triangles: Vec::new(),
                };
            }
            // Geometry we do not consume.
            "vt" | "vn" | "vp" | "s" | "usemtl" | "mtllib" | "l" | "p" => {}
            other => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("unsupported OBJ directive '{other}'"),
                ));
            }
        }
    }
    flush(&mut objects, &mut current, &mut used_names);

    if objects.is_empty() {
        return Err(Error::EmptyMesh);
    }

    let objects = objects
        .into_iter()
        .map(|raw| localize(raw, &vertices))
        .collect::<Result<Vec<_>>>()?;
    SceneMesh::new(objects)
}

struct RawObject {
    name: String,
    layer: String,
    /// Triangles as indices into the file-global vertex list.
    triangles: Vec<[usize; 3]>,
}

impl RawObject {
    fn anonymous() -> Self {
        RawObject {
            name: "default".to_string(),
            layer: "default".to_string(),
            triangles: Vec::new(),
        }
    }
}

fn flush(objects: &mut Vec<RawObject>, current: &mut RawObject, used: &mut HashSet<String>) {
    if current.triangles.is_empty() {
        return;
    }
    let mut done = std::mem::replace(current, RawObject::anonymous());
    if !used.insert(done.name.clone()) {
        let mut n = 2;
        loop {
            let candidate = format!("{}_{n}", done.name);
            if used.insert(candidate.clone()) {
                done.name = candidate;
                break;
            }
            n += 1;
        }
    }
    objects.push(done);
}

fn split_name_layer(rest: &str) -> (String, String) {
    let raw = if rest.is_empty() { "unnamed" } else { rest };
    match raw.rsplit_once('@') {
        Some((name, layer)) if !layer.is_empty() => {
            let name = if name.is_empty() { "unnamed" } else { name };
            (name.to_string(), layer.to_string())
        }
        _ => (raw.to_string(), "default".to_string()),
    }
}

fn resolve_index(path: &Path, lineno: usize, token: &str, vertex_count: usize) -> Result<usize> {
    // Face corners may be v, v/vt, v//vn or v/vt/vn; only v matters here.
    let v_field = token.split('/').next().unwrap_or("");
    let idx: i64 = v_field
        .parse()
        .map_err(|_| Error::parse(path, lineno, format!("invalid face index '{token}'")))?;
    let resolved = if idx < 0 {
        vertex_count as i64 + idx
    } else {
        idx - 1
    };
    if idx == 0 || resolved < 0 || resolved >= vertex_count as i64 {
        return Err(Error::parse(
            path,
            lineno,
            format!("face index {idx} out of range (file defines {vertex_count} vertices here)"),
        ));
    }
    Ok(resolved as usize)
}

/// Rewrites global vertex references into an object-local vertex list,
/// keeping ascending global order.
fn localize(raw: RawObject, vertices: &[Point3]) -> Result<MeshObject> {
    let mut referenced: Vec<usize> = raw
        .triangles
        .iter()
        .flat_map(|t| t.iter().copied())
        .collect();
    referenced.sort_unstable();
    referenced.dedup();

    let local_of = |global: usize| referenced.binary_search(&global).unwrap();
    let local_vertices: Vec<Point3> = referenced.iter().map(|&g| vertices[g]).collect();
    let local_triangles: Vec<[usize; 3]> = raw
        .triangles
        .iter()
        .map(|t| [local_of(t[0]), local_of(t[1]), local_of(t[2])])
        .collect();

    MeshObject::new(raw.name, raw.layer, local_vertices, local_triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_obj(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::TempDir::with_prefix("obj").unwrap();
        let path = dir.path().join("m.obj");
        fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn quad_is_fan_triangulated() {
        let (_d, path) = write_obj("v 0 0 0\nv 1 0 0\nv 1 0 1\nv 0 0 1\nf 1 2 3 4\n");
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.objects().len(), 1);
        let obj = &mesh.objects()[0];
        assert_eq!(obj.triangles(), &[[0, 1, 2], [0, 2, 3]]);
        assert_eq!(obj.name(), "default");
        assert_eq!(obj.layer(), "default");
    }

    #[test]
    fn name_layer_convention() {
        let (_d, path) = write_obj("o chair@furniture\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        let mesh = load_mesh(&path).unwrap();
        let obj = &mesh.objects()[0];
        assert_eq!(obj.name(), "chair");
        assert_eq!(obj.layer(), "furniture");
    }

    #[test]
    fn out_of_range_face_index_cites_line() {
        let (_d, path) = write_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 99\n");
        let err = load_mesh(&path).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("99"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn face_with_too_few_vertices() {
        let (_d, path) = write_obj("v 0 0 0\nv 1 0 0\nf 1 2\n");
        assert!(load_mesh(&path).is_err());
    }

    #[test]
    fn repeated_vertex_in_face_rejected() {
        let (_d, path) = write_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 2\n");
        assert!(load_mesh(&path).is_err());
    }

    #[test]
    fn negative_indices_resolve() {
        let (_d, path) = write_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.objects()[0].triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn slash_face_syntax() {
        let (_d, path) = write_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2/1/1 3//1\n");
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.objects()[0].triangles().len(), 1);
    }

    #[test]
    fn duplicate_object_names_suffixed() {
        let (_d, path) = write_obj(
            "o box\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\no box\nv 0 0 1\nv 1 0 1\nv 0 1 1\nf 4 5 6\n",
        );
        let mesh = load_mesh(&path).unwrap();
        let names: Vec<&str> = mesh.objects().iter().map(|o| o.name()).collect();
        assert_eq!(names, vec!["box", "box_2"]);
    }

    #[test]
    fn groups_delimit_objects() {
        let (_d, path) = write_obj(
            "g a@walls\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\ng b\nv 0 0 1\nv 1 0 1\nv 0 1 1\nf 4 5 6\n",
        );
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.objects().len(), 2);
        assert_eq!(mesh.objects()[0].layer(), "walls");
        assert_eq!(mesh.objects()[1].layer(), "default");
        // Object vertices are localized.
        assert_eq!(mesh.objects()[1].vertices()[0], Point3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn empty_mesh_errors() {
        let (_d, path) = write_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\n");
        assert!(matches!(load_mesh(&path), Err(Error::EmptyMesh)));
    }
}
