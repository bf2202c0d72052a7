//! Depth watertight mesh construction.
//!
//! Every pixel becomes one vertex, unprojected along its z-normalised ray.
//! Border pixels are first padded to `d_max`, which puts the whole outer ring
//! of vertices on the plane `z = d_max`; the ring is a rectangle in that plane
//! and two cap triangles over its corners close the surface.
//!
//! Face layout: for each cell `(i, j)` in row-major order, the two triangles
//! `{(i,j), (i+1,j), (i,j+1)}` and `{(i+1,j), (i+1,j+1), (i,j+1)}`, followed
//! by the two caps. Faces are flat-colored from the cell's anchor pixel
//! `(i, j)` unless occluded, in which case they are black.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::camera::{pixel_ray, Intrinsics};
use crate::image::{DepthMap, Frame, Rgb};
use crate::{Error, Exec, Result};

pub const DEFAULT_DELTA_ANGLE_DEG: f64 = 1.0;
pub const DEFAULT_DELTA_DEPTH_COEFF: f64 = 0.013;
pub const DEFAULT_D_MAX: f64 = 100.0;

pub const BLACK: Rgb = [0, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshParams {
    /// Minimum interior angle below which a face is occluded, in degrees.
    pub delta_angle_deg: f64,
    /// Depth-discontinuity threshold as a fraction of the depth range.
    pub delta_depth_coeff: f64,
    /// Depth written on every border pixel.
    pub d_max: f64,
    /// Source camera; `None` selects [`Intrinsics::canonical`] for the frame.
    pub intrinsics: Option<Intrinsics>,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            delta_angle_deg: DEFAULT_DELTA_ANGLE_DEG,
            delta_depth_coeff: DEFAULT_DELTA_DEPTH_COEFF,
            d_max: DEFAULT_D_MAX,
            intrinsics: None,
        }
    }
}

impl MeshParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_angle_deg > 0.0 && self.delta_angle_deg < 60.0) {
            return Err(Error::InvalidParams(format!(
                "delta_angle_deg must lie in (0, 60), got {}",
                self.delta_angle_deg
            )));
        }
        if !(self.delta_depth_coeff > 0.0 && self.delta_depth_coeff.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "delta_depth_coeff must be positive, got {}",
                self.delta_depth_coeff
            )));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(Error::InvalidParams(format!("d_max must be positive, got {}", self.d_max)));
        }
        if let Some(k) = &self.intrinsics {
            k.validate()?;
        }
        Ok(())
    }

    pub fn intrinsics_for(&self, width: usize, height: usize) -> Result<Intrinsics> {
        match self.intrinsics {
            Some(k) if (k.width, k.height) != (width, height) => Err(Error::DimensionMismatch(format!(
                "intrinsics are {}x{} but the frame is {width}x{height}",
                k.width, k.height
            ))),
            Some(k) => Ok(k),
            None => Ok(Intrinsics::canonical(width, height)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum FaceClass {
    Surface = 0,
    /// Touches at least one padded border vertex.
    Skirt = 1,
    /// One of the two closing corner triangles.
    Cap = 2,
}

impl FaceClass {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(FaceClass::Surface),
            1 => Some(FaceClass::Skirt),
            2 => Some(FaceClass::Cap),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DWMesh {
    pub height: usize,
    pub width: usize,
    /// Camera-space positions, vertex `(i, j)` at index `i * width + j`.
    pub vertices: Vec<[f32; 3]>,
    pub faces: Vec<[u32; 3]>,
    pub face_color: Vec<Rgb>,
    pub face_occluded: Vec<bool>,
    pub face_class: Vec<FaceClass>,
}

/// Face count of an `h × w` lattice: `2(h−1)(w−1) + 2`.
pub fn face_count(height: usize, width: usize) -> usize {
    2 * (height - 1) * (width - 1) + 2
}

impl DWMesh {
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex(&self, k: u32) -> Vector3<f64> {
        let v = self.vertices[k as usize];
        Vector3::new(v[0] as f64, v[1] as f64, v[2] as f64)
    }

    /// Cell `(i, j)` owning grid face `f`; `None` for the caps.
    pub fn face_cell(&self, f: usize) -> Option<(usize, usize)> {
        face_cell(self.width, self.height, f)
    }

    /// Index of the first triangle of cell `(i, j)`; the second follows it.
    pub fn cell_face(&self, i: usize, j: usize) -> usize {
        2 * (i * (self.width - 1) + j)
    }

    /// Fraction of faces carrying the occlusion bit.
    pub fn occluded_fraction(&self) -> f64 {
        if self.faces.is_empty() {
            return 0.0;
        }
        self.face_occluded.iter().filter(|&&o| o).count() as f64 / self.faces.len() as f64
    }

    /// Checks every structural invariant of a DW-Mesh.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvariantViolation(m));
        let (h, w) = (self.height, self.width);
        if h < 2 || w < 2 {
            return bad(format!("grid {h}x{w} is smaller than 2x2"));
        }
        if self.vertices.len() != h * w {
            return bad(format!("{} vertices, expected {}", self.vertices.len(), h * w));
        }
        let nf = face_count(h, w);
        if self.faces.len() != nf
            || self.face_color.len() != nf
            || self.face_occluded.len() != nf
            || self.face_class.len() != nf
        {
            return bad(format!("face arrays disagree with the expected count {nf}"));
        }
        let caps = self.face_class.iter().filter(|&&c| c == FaceClass::Cap).count();
        if caps != 2 || self.face_class[nf - 2..] != [FaceClass::Cap, FaceClass::Cap] {
            return bad("exactly the last two faces must be caps".into());
        }
        for (f, t) in self.faces.iter().enumerate() {
            if t.iter().any(|&v| v as usize >= self.vertices.len()) {
                return bad(format!("face {f} has an out-of-range index"));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return bad(format!("face {f} repeats a vertex"));
            }
            if self.face_occluded[f] && self.face_color[f] != BLACK {
                return bad(format!("occluded face {f} is not black"));
            }
        }
        if self.vertices.iter().flatten().any(|c| !c.is_finite()) {
            return bad("non-finite vertex".into());
        }
        Ok(())
    }

    /// Largest camera-space z over the vertices (the padded depth for a built mesh).
    pub fn depth_bound(&self) -> f64 {
        self.vertices.iter().fold(0.0f64, |m, v| m.max(v[2] as f64))
    }
}

pub(crate) fn face_cell(width: usize, height: usize, f: usize) -> Option<(usize, usize)> {
    let cells = (height - 1) * (width - 1);
    (f < 2 * cells).then(|| {
        let c = f / 2;
        (c / (width - 1), c % (width - 1))
    })
}

/// `coeff · (max − min)` of the original depth values.
pub fn delta_depth_threshold(depth: &DepthMap, coeff: f64) -> f64 {
    coeff * (depth.d_max() - depth.d_min())
}

pub fn is_border(i: usize, j: usize, height: usize, width: usize) -> bool {
    i == 0 || j == 0 || i + 1 == height || j + 1 == width
}

/// Writes `d_max` on every border pixel. Cached extrema are left untouched.
pub fn pad_boundary(depth: &DepthMap, d_max: f64) -> Result<DepthMap> {
    let (h, w) = (depth.height(), depth.width());
    let mut max_interior = f64::NEG_INFINITY;
    let mut values = depth.values().to_vec();
    for i in 0..h {
        for j in 0..w {
            if is_border(i, j, h, w) {
                values[i * w + j] = d_max;
            } else {
                max_interior = max_interior.max(depth.get(i, j));
            }
        }
    }
    if !(d_max.is_finite() && d_max > max_interior && d_max > 0.0) {
        return Err(Error::InvalidDMax { d_max, max_interior });
    }
    Ok(depth.with_values_keep_extrema(values))
}

/// Grid triangles plus the two caps, with their classes.
pub fn build_faces(height: usize, width: usize) -> Result<(Vec<[u32; 3]>, Vec<FaceClass>)> {
    if height < 2 || width < 2 {
        return Err(Error::DimensionTooSmall { height, width });
    }
    let idx = |i: usize, j: usize| (i * width + j) as u32;
    let n = face_count(height, width);
    let mut faces = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    for i in 0..height - 1 {
        for j in 0..width - 1 {
            // The four corners of a cell touch the border iff either triangle does,
            // but each triangle only sees three of them.
            let f1 = [(i, j), (i + 1, j), (i, j + 1)];
            let f2 = [(i + 1, j), (i + 1, j + 1), (i, j + 1)];
            for tri in [f1, f2] {
                faces.push(tri.map(|(a, b)| idx(a, b)));
                let skirt = tri.iter().any(|&(a, b)| is_border(a, b, height, width));
                classes.push(if skirt { FaceClass::Skirt } else { FaceClass::Surface });
            }
        }
    }
    let (h1, w1) = (height - 1, width - 1);
    faces.push([idx(0, 0), idx(0, w1), idx(h1, 0)]);
    faces.push([idx(h1, 0), idx(h1, w1), idx(0, w1)]);
    classes.extend([FaceClass::Cap, FaceClass::Cap]);
    Ok((faces, classes))
}

/// Outcome of the per-face occlusion test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Occlusion {
    Visible,
    Occluded,
    /// Zero-area triangle; treated as occluded.
    Degenerate,
}

impl Occlusion {
    pub fn is_occluded(self) -> bool {
        self != Occlusion::Visible
    }
}

/// Smallest interior angle of a 3D triangle in degrees, `None` when degenerate.
pub fn min_angle_deg(p: &[Vector3<f64>; 3]) -> Option<f64> {
    let mut min = f64::INFINITY;
    for k in 0..3 {
        let a = p[(k + 1) % 3] - p[k];
        let b = p[(k + 2) % 3] - p[k];
        let cross = a.cross(&b).norm();
        let scale = a.norm() * b.norm();
        if scale == 0.0 || cross <= f64::EPSILON * scale {
            return None;
        }
        min = min.min(cross.atan2(a.dot(&b)));
    }
    Some(min.to_degrees())
}

/// Occlusion bit of one face.
///
/// `depths` are the (padded) depth values of the face's three source pixels;
/// the discontinuity is their largest pairwise difference. Caps and skirts are
/// always occluded.
pub fn classify_occlusion(
    vertices: &[Vector3<f64>; 3],
    depths: [f64; 3],
    class: FaceClass,
    delta_angle_deg: f64,
    delta_depth: f64,
) -> Occlusion {
    let Some(angle) = min_angle_deg(vertices) else {
        return Occlusion::Degenerate;
    };
    if class != FaceClass::Surface {
        return Occlusion::Occluded;
    }
    let dd = (depths[0] - depths[1]).abs().max((depths[1] - depths[2]).abs()).max((depths[0] - depths[2]).abs());
    if angle < delta_angle_deg || dd > delta_depth {
        Occlusion::Occluded
    } else {
        Occlusion::Visible
    }
}

/// Flat face color: black when occluded, else the anchor pixel's color.
pub fn assign_texture(frame: &Frame, anchor: (usize, usize), occluded: bool) -> Rgb {
    if occluded {
        BLACK
    } else {
        frame.get(anchor.0, anchor.1)
    }
}

/// Counters gathered while building a mesh.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BuildStats {
    pub degenerate_faces: usize,
    pub occluded_faces: usize,
    pub delta_depth: f64,
}

pub fn build_dwmesh(frame: &Frame, depth: &DepthMap, params: &MeshParams, exec: Exec) -> Result<DWMesh> {
    build_dwmesh_with_stats(frame, depth, params, exec).map(|(m, _)| m)
}

pub fn build_dwmesh_with_stats(
    frame: &Frame,
    depth: &DepthMap,
    params: &MeshParams,
    exec: Exec,
) -> Result<(DWMesh, BuildStats)> {
    params.validate()?;
    let (h, w) = (depth.height(), depth.width());
    if frame.dims() != (h, w) {
        return Err(Error::DimensionMismatch(format!(
            "frame is {}x{} but depth is {}x{}",
            frame.width(),
            frame.height(),
            w,
            h
        )));
    }
    if h < 2 || w < 2 {
        return Err(Error::DimensionTooSmall { height: h, width: w });
    }
    let intr = params.intrinsics_for(w, h)?;
    let delta_depth = delta_depth_threshold(depth, params.delta_depth_coeff);
    let padded = pad_boundary(depth, params.d_max)?;

    let vertices: Vec<[f32; 3]> = exec.map(h * w, |k| {
        let (i, j) = (k / w, k % w);
        let v = pixel_ray(i as f64, j as f64, &intr) * padded.get(i, j);
        [v.x as f32, v.y as f32, v.z as f32]
    });

    let (faces, face_class) = build_faces(h, w)?;
    let pos = |k: u32| {
        let v = vertices[k as usize];
        Vector3::new(v[0] as f64, v[1] as f64, v[2] as f64)
    };
    let padded_values = padded.values();
    let outcome: Vec<(Occlusion, Rgb)> = exec.map(faces.len(), |f| {
        let tri = faces[f];
        let class = face_class[f];
        let occ = if class == FaceClass::Cap {
            Occlusion::Occluded
        } else {
            let p = tri.map(pos);
            let d = tri.map(|k| padded_values[k as usize]);
            classify_occlusion(&p, d, class, params.delta_angle_deg, delta_depth)
        };
        let color = match face_cell(w, h, f) {
            Some(anchor) => assign_texture(frame, anchor, occ.is_occluded()),
            None => BLACK,
        };
        (occ, color)
    });

    let mut stats = BuildStats { delta_depth, ..Default::default() };
    let mut face_occluded = Vec::with_capacity(faces.len());
    let mut face_color = Vec::with_capacity(faces.len());
    for (occ, color) in outcome {
        stats.degenerate_faces += (occ == Occlusion::Degenerate) as usize;
        stats.occluded_faces += occ.is_occluded() as usize;
        face_occluded.push(occ.is_occluded());
        face_color.push(color);
    }
    let mesh = DWMesh { height: h, width: w, vertices, faces, face_color, face_occluded, face_class };
    Ok((mesh, stats))
}
