//! Binary little-endian PLY with per-face color, occlusion bit and class.

use std::path::Path;

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::mesh::{build_faces, DWMesh, FaceClass};

const FACE_EXTRAS: [&str; 5] = ["red", "green", "blue", "occluded", "fclass"];

pub fn write_ply(mesh: &DWMesh, path: &Path) -> Result<()> {
    mesh.validate()?;
    let (nv, nf) = (mesh.num_vertices(), mesh.num_faces());
    let mut out = format!(
        "ply\nformat binary_little_endian 1.0\n\
         element vertex {nv}\nproperty float x\nproperty float y\nproperty float z\n\
         element face {nf}\nproperty list uchar int vertex_indices\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         property uchar occluded\nproperty uchar fclass\nend_header\n"
    )
    .into_bytes();
    out.reserve(12 * nv + 18 * nf);
    for v in &mesh.vertices {
        for c in v {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in 0..nf {
        out.push(3);
        for &k in &mesh.faces[f] {
            out.extend_from_slice(&(k as i32).to_le_bytes());
        }
        out.extend_from_slice(&mesh.face_color[f]);
        out.push(mesh.face_occluded[f] as u8);
        out.push(mesh.face_class[f] as u8);
    }
    write_bytes(path, &out)
}

struct Parsed {
    vertices: Vec<[f32; 3]>,
    faces: Vec<[u32; 3]>,
    /// Per-face `[r, g, b, occluded, class]` when the file carries them.
    extras: Option<Vec<[u8; 5]>>,
}

fn parse(path: &Path) -> Result<Parsed> {
    let bytes = read_bytes(path)?;
    let bad = |m: &str| Error::parse(path, m.to_string());
    let end = b"end_header\n";
    let hlen = bytes.windows(end.len()).position(|w| w == end).ok_or_else(|| bad("missing end_header"))? + end.len();
    let header = std::str::from_utf8(&bytes[..hlen]).map_err(|_| bad("non-UTF-8 header"))?;
    let mut lines = header.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with("comment"));
    if lines.next() != Some("ply") {
        return Err(bad("missing ply magic"));
    }
    if lines.next() != Some("format binary_little_endian 1.0") {
        return Err(bad("only binary_little_endian 1.0 is supported"));
    }

    let mut nv = None;
    let mut nf = None;
    let mut vprops = Vec::new();
    let mut fprops = Vec::new();
    let mut current = "";
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["element", name, n] => {
                let n: usize = n.parse().map_err(|_| bad("bad element count"))?;
                current = match *name {
                    "vertex" if nv.is_none() && nf.is_none() => {
                        nv = Some(n);
                        "vertex"
                    }
                    "face" if nv.is_some() && nf.is_none() => {
                        nf = Some(n);
                        "face"
                    }
                    _ => return Err(bad("expected one vertex element followed by one face element")),
                };
            }
            ["property", ..] => match current {
                "vertex" => vprops.push(tok[1..].join(" ")),
                "face" => fprops.push(tok[1..].join(" ")),
                _ => return Err(bad("property outside an element")),
            },
            ["end_header"] => break,
            _ => return Err(bad("unrecognized header line")),
        }
    }
    let (nv, nf) = (nv.ok_or_else(|| bad("no vertex element"))?, nf.ok_or_else(|| bad("no face element"))?);
    let float = |p: &str, n: &str| p == format!("float {n}") || p == format!("float32 {n}");
    if vprops.len() != 3 || !["x", "y", "z"].iter().zip(&vprops).all(|(n, p)| float(p, n)) {
        return Err(bad("vertex properties must be float x, y, z"));
    }
    let list_ok = |p: &String| {
        matches!(p.as_str(), "list uchar int vertex_indices" | "list uint8 int32 vertex_indices" | "list uchar int32 vertex_indices")
    };
    if fprops.first().is_none_or(|p| !list_ok(p)) {
        return Err(bad("face element must start with list uchar int vertex_indices"));
    }
    let has_extras = match fprops.len() {
        1 => false,
        6 => {
            if !FACE_EXTRAS.iter().zip(&fprops[1..]).all(|(n, p)| *p == format!("uchar {n}") || *p == format!("uint8 {n}")) {
                return Err(bad("unexpected face properties"));
            }
            true
        }
        _ => return Err(bad("unexpected face properties")),
    };

    let body = &bytes[hlen..];
    let face_len = 13 + if has_extras { 5 } else { 0 };
    let need = nv.checked_mul(12).zip(nf.checked_mul(face_len)).and_then(|(a, b)| a.checked_add(b));
    if need != Some(body.len()) {
        return Err(bad("body length disagrees with the header"));
    }
    let f32_at = |o: usize| f32::from_le_bytes(body[o..o + 4].try_into().unwrap());
    let vertices: Vec<[f32; 3]> = (0..nv).map(|k| [f32_at(12 * k), f32_at(12 * k + 4), f32_at(12 * k + 8)]).collect();
    let fb = &body[12 * nv..];
    let mut faces = Vec::with_capacity(nf);
    let mut extras = has_extras.then(|| Vec::with_capacity(nf));
    for rec in fb.chunks_exact(face_len) {
        if rec[0] != 3 {
            return Err(bad("only triangular faces are supported"));
        }
        let mut tri = [0u32; 3];
        for (c, slot) in tri.iter_mut().enumerate() {
            let idx = i32::from_le_bytes(rec[1 + 4 * c..5 + 4 * c].try_into().unwrap());
            if idx < 0 || idx as usize >= nv {
                return Err(bad("face index out of range"));
            }
            *slot = idx as u32;
        }
        faces.push(tri);
        if let Some(ex) = extras.as_mut() {
            ex.push(rec[13..18].try_into().unwrap());
        }
    }
    Ok(Parsed { vertices, faces, extras })
}

/// Reads any triangle PLY this module understands as a plain soup.
/// Vertex positions and triangle indices.
pub type Soup = (Vec<[f32; 3]>, Vec<[u32; 3]>);

pub fn read_ply_soup(path: &Path) -> Result<Soup> {
    let p = parse(path)?;
    Ok((p.vertices, p.faces))
}

/// Contents of a PLY file: a full DW-Mesh when the file carries the per-face
/// attributes, otherwise bare geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum PlyMesh {
    DwMesh(DWMesh),
    Soup { vertices: Vec<[f32; 3]>, faces: Vec<[u32; 3]> },
}

pub fn read_ply_any(path: &Path) -> Result<PlyMesh> {
    let p = parse(path)?;
    if p.extras.is_some() {
        dwmesh_from(p, path).map(PlyMesh::DwMesh)
    } else {
        Ok(PlyMesh::Soup { vertices: p.vertices, faces: p.faces })
    }
}

/// Reads a DW-Mesh written by [`write_ply`]. The grid size comes from the
/// first cap, whose second vertex is the top-right corner `(0, W-1)`.
pub fn read_ply(path: &Path) -> Result<DWMesh> {
    dwmesh_from(parse(path)?, path)
}

fn dwmesh_from(p: Parsed, path: &Path) -> Result<DWMesh> {
    let extras = p.extras.ok_or_else(|| Error::parse(path, "missing per-face color/occlusion/class properties"))?;
    let nf = p.faces.len();
    let invalid = |m: &str| Error::InvariantViolation(m.to_string());
    if nf < 4 {
        return Err(invalid("too few faces for a DW-Mesh"));
    }
    let width = p.faces[nf - 2][1] as usize + 1;
    let height = p.vertices.len() / width;
    if width < 2 || height < 2 || height * width != p.vertices.len() {
        return Err(invalid("vertex count is not a grid matching the caps"));
    }
    let (faces, classes) = build_faces(height, width).map_err(|_| invalid("grid too small"))?;
    if faces != p.faces {
        return Err(invalid("face connectivity is not the DW-Mesh lattice"));
    }
    let mut face_color = Vec::with_capacity(nf);
    let mut face_occluded = Vec::with_capacity(nf);
    let mut face_class = Vec::with_capacity(nf);
    for (f, e) in extras.iter().enumerate() {
        face_color.push([e[0], e[1], e[2]]);
        face_occluded.push(match e[3] {
            0 => false,
            1 => true,
            _ => return Err(invalid("occluded flag must be 0 or 1")),
        });
        let class = FaceClass::from_u8(e[4]).ok_or_else(|| invalid("unknown face class"))?;
        if class != classes[f] {
            return Err(invalid("face class disagrees with the lattice"));
        }
        face_class.push(class);
    }
    let mesh = DWMesh { height, width, vertices: p.vertices, faces, face_color, face_occluded, face_class };
    mesh.validate()?;
    Ok(mesh)
}
