//! Deterministic z-buffered software rasterizer.
//!
//! Conventions: top-left origin, samples at pixel centers `(j + 0.5, i + 0.5)`,
//! flat per-face color, no lighting, no backface culling. Triangles crossing
//! the near plane are clipped to a polygon and fan-triangulated. Coverage is
//! inclusive (a pixel center up to [`COVERAGE_EPS`] pixels outside an edge
//! still counts) so that shared edges never leave cracks; depth ties within
//! [`DEPTH_TIE`] go to the lower face index.
//!
//! The frame is split into horizontal bands; triangles are binned to bands in
//! face order and each band fills its own slice of the buffers, so the result
//! is independent of scheduling.

use nalgebra::Vector3;

use crate::camera::{world_to_camera, CameraPose, Intrinsics, Trajectory};
use crate::image::{Frame, Mask, MaskVideo, Rgb, Video};
use crate::mesh::{DWMesh, FaceClass, BLACK};
use crate::{Error, Exec, Result};

pub const NEAR_PLANE: f64 = 1e-3;
pub const DEPTH_TIE: f64 = 1e-9;
/// Coverage slack in pixels, measured as distance to the edge line. A
/// barycentric slack would widen with the triangle's screen size, which is
/// unbounded for faces clipped close to the camera.
pub const COVERAGE_EPS: f64 = 1e-9;
/// Face id of pixels with no hit.
pub const NO_FACE: u32 = u32::MAX;

const BAND_ROWS: usize = 8;

/// Clip planes: near fixed, far at twice the mesh's depth bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipPlanes {
    pub near: f64,
    pub far: f64,
}

impl ClipPlanes {
    pub fn for_mesh(mesh: &DWMesh) -> Self {
        ClipPlanes { near: NEAR_PLANE, far: 2.0 * mesh.depth_bound() }
    }

    pub fn accepts(&self, z: f64) -> bool {
        z >= self.near && z <= self.far
    }
}

/// Depth-test predicate shared with the ray-cast oracle: does `(z, face)`
/// beat the current `(best_z, best_face)`?
pub fn closer(z: f64, face: u32, best_z: f64, best_face: u32) -> bool {
    if best_face == NO_FACE {
        return true;
    }
    z < best_z - DEPTH_TIE || ((z - best_z).abs() <= DEPTH_TIE && face < best_face)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub u: f64,
    pub v: f64,
    pub z: f64,
    /// At or behind the near plane.
    pub clipped: bool,
}

pub fn project_vertex(p: &Vector3<f64>, intr: &Intrinsics) -> Projected {
    Projected {
        u: intr.fx * p.x / p.z + intr.cx,
        v: intr.fy * p.y / p.z + intr.cy,
        z: p.z,
        clipped: p.z <= NEAR_PLANE,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderTarget {
    pub width: usize,
    pub height: usize,
    pub color: Frame,
    /// Visible iff the nearest face is an unoccluded surface face.
    pub mask: Mask,
    /// Nearest camera-space z, `+∞` where nothing was hit.
    pub depth: Vec<f64>,
    /// Nearest face index, [`NO_FACE`] where nothing was hit.
    pub face_id: Vec<u32>,
}

impl RenderTarget {
    pub fn face_at(&self, i: usize, j: usize) -> Option<usize> {
        let f = self.face_id[i * self.width + j];
        (f != NO_FACE).then_some(f as usize)
    }

    pub fn depth_at(&self, i: usize, j: usize) -> f64 {
        self.depth[i * self.width + j]
    }
}

#[derive(Debug, Clone, Copy)]
struct ScreenTri {
    face: u32,
    p: [[f64; 2]; 3],
    /// Camera-space supporting plane `n·x = d` of the face. Depth comes from
    /// intersecting the pixel ray with it, which stays exact when clip points
    /// project far outside the image.
    plane: ([f64; 3], f64),
    /// `sign(area) / |edge k|`, turning edge function `k` into a signed
    /// pixel distance (edge `k` is opposite vertex `k`).
    dist_scale: [f64; 3],
    rows: (usize, usize),
    cols: (usize, usize),
}

#[derive(Debug, Clone, Copy)]
struct Fragment {
    depth: f64,
    face: u32,
}

const EMPTY: Fragment = Fragment { depth: f64::INFINITY, face: NO_FACE };

fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Whether `p` lies inside the triangle or within [`COVERAGE_EPS`] pixels of
/// it; zero-area triangles cover nothing.
fn covers(t: &ScreenTri, p: [f64; 2]) -> bool {
    let q = &t.p;
    let area = edge(q[0], q[1], q[2]);
    if area == 0.0 || !area.is_finite() {
        return false;
    }
    let e = [edge(q[1], q[2], p), edge(q[2], q[0], p), edge(q[0], q[1], p)];
    (0..3).all(|k| e[k] * t.dist_scale[k] >= -COVERAGE_EPS)
}

fn clip_face(
    tri: [u32; 3],
    cam: &[Vector3<f64>],
    screen: &[[f64; 2]],
    intr: &Intrinsics,
    near: f64,
) -> Vec<[f64; 2]> {
    let inside = |k: u32| cam[k as usize].z >= near;
    if tri.iter().all(|&k| inside(k)) {
        return tri.iter().map(|&k| screen[k as usize]).collect();
    }
    let mut out = Vec::with_capacity(4);
    for e in 0..3 {
        let (a, b) = (tri[e], tri[(e + 1) % 3]);
        if inside(a) {
            out.push(screen[a as usize]);
        }
        if inside(a) != inside(b) {
            // Interpolate from the lower vertex index so both faces sharing
            // this edge compute a bit-identical clip point.
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (p, q) = (cam[lo as usize], cam[hi as usize]);
            let t = (near - p.z) / (q.z - p.z);
            let mut pos = p + (q - p) * t;
            pos.z = near;
            let pr = project_vertex(&pos, intr);
            out.push([pr.u, pr.v]);
        }
    }
    out
}

fn screen_tris(
    face: u32,
    plane: ([f64; 3], f64),
    poly: &[[f64; 2]],
    width: usize,
    height: usize,
) -> impl Iterator<Item = ScreenTri> + '_ {
    (1..poly.len().saturating_sub(1)).filter_map(move |k| {
        let p = [poly[0], poly[k], poly[k + 1]];
        if p.iter().flatten().any(|c| !c.is_finite()) {
            return None;
        }
        let (umin, umax) = minmax(p.map(|q| q[0]));
        let (vmin, vmax) = minmax(p.map(|q| q[1]));
        // Pixel-center range, widened by one pixel; the coverage test decides.
        let rows = span(vmin, vmax, height)?;
        let cols = span(umin, umax, width)?;
        let area = edge(p[0], p[1], p[2]);
        let len = |a: [f64; 2], b: [f64; 2]| (b[0] - a[0]).hypot(b[1] - a[1]);
        let lens = [len(p[1], p[2]), len(p[2], p[0]), len(p[0], p[1])];
        let dist_scale = lens.map(|l| area.signum() / l);
        Some(ScreenTri { face, p, plane, dist_scale, rows, cols })
    })
}

fn minmax(v: [f64; 3]) -> (f64, f64) {
    (v[0].min(v[1]).min(v[2]), v[0].max(v[1]).max(v[2]))
}

fn span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let first = (lo - 0.5).floor() - 1.0;
    let last = (hi - 0.5).ceil() + 1.0;
    if last < 0.0 || first > n as f64 - 1.0 {
        return None;
    }
    Some((first.max(0.0) as usize, last.min(n as f64 - 1.0) as usize))
}

/// Renders `mesh` seen from `pose` through `intr` (output size from `intr`).
pub fn rasterize(mesh: &DWMesh, pose: &CameraPose, intr: &Intrinsics, exec: Exec) -> Result<RenderTarget> {
    if mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    intr.validate()?;
    let clip = ClipPlanes::for_mesh(mesh);
    let (w, h) = (intr.width, intr.height);

    let cam: Vec<Vector3<f64>> = exec.map(mesh.vertices.len(), |k| world_to_camera(&mesh.vertex(k as u32), pose));
    let screen: Vec<[f64; 2]> = cam
        .iter()
        .map(|p| {
            let q = project_vertex(p, intr);
            [q.u, q.v]
        })
        .collect();

    let per_face: Vec<Vec<ScreenTri>> = exec.map(mesh.faces.len(), |f| {
        let tri = mesh.faces[f];
        let [a, b, c] = tri.map(|k| cam[k as usize]);
        let n = (b - a).cross(&(c - a));
        let plane = ([n.x, n.y, n.z], n.dot(&a));
        let poly = clip_face(tri, &cam, &screen, intr, clip.near);
        screen_tris(f as u32, plane, &poly, w, h).collect()
    });

    let bands = h.div_ceil(BAND_ROWS);
    let mut bins: Vec<Vec<ScreenTri>> = vec![Vec::new(); bands];
    for t in per_face.iter().flatten() {
        for bin in &mut bins[t.rows.0 / BAND_ROWS..=t.rows.1 / BAND_ROWS] {
            bin.push(*t);
        }
    }

    let mut frags = vec![EMPTY; w * h];
    exec.chunks_mut(&mut frags, BAND_ROWS * w, |band, slice| {
        let row0 = band * BAND_ROWS;
        let row1 = row0 + slice.len() / w;
        for t in &bins[band] {
            for i in t.rows.0.max(row0)..=t.rows.1.min(row1 - 1) {
                let row = &mut slice[(i - row0) * w..(i - row0 + 1) * w];
                for (j, cur) in row.iter_mut().enumerate().take(t.cols.1 + 1).skip(t.cols.0) {
                    let (u, v) = (j as f64 + 0.5, i as f64 + 0.5);
                    if !covers(t, [u, v]) {
                        continue;
                    }
                    let (n, d) = t.plane;
                    let z = d / (n[0] * (u - intr.cx) / intr.fx + n[1] * (v - intr.cy) / intr.fy + n[2]);
                    if !clip.accepts(z) {
                        continue;
                    }
                    if closer(z, t.face, cur.depth, cur.face) {
                        *cur = Fragment { depth: z, face: t.face };
                    }
                }
            }
        }
    });

    Ok(resolve(mesh, w, h, &frags))
}

fn resolve(mesh: &DWMesh, w: usize, h: usize, frags: &[Fragment]) -> RenderTarget {
    let mut color: Vec<Rgb> = Vec::with_capacity(w * h);
    let mut visible = Vec::with_capacity(w * h);
    for fr in frags {
        let vis = fr.face != NO_FACE && {
            let f = fr.face as usize;
            mesh.face_class[f] == FaceClass::Surface && !mesh.face_occluded[f]
        };
        visible.push(vis);
        color.push(if vis { mesh.face_color[fr.face as usize] } else { BLACK });
    }
    RenderTarget {
        width: w,
        height: h,
        color: Frame::new(w, h, color).expect("sized buffer"),
        mask: Mask::new(w, h, visible).expect("sized buffer"),
        depth: frags.iter().map(|f| f.depth).collect(),
        face_id: frags.iter().map(|f| f.face).collect(),
    }
}

/// Renders frame `t` of the trajectory from mesh `t` (or from the single mesh
/// when one is given for every pose).
pub fn render_trajectory(meshes: &[DWMesh], traj: &Trajectory, exec: Exec) -> Result<(Video, MaskVideo)> {
    if traj.is_empty() {
        return Ok((Video::default(), MaskVideo::default()));
    }
    if meshes.len() != traj.len() && meshes.len() != 1 {
        return Err(Error::LengthMismatch { what: "meshes vs trajectory poses", left: meshes.len(), right: traj.len() });
    }
    let rendered: Vec<Result<RenderTarget>> = exec.map(traj.len(), |t| {
        let mesh = if meshes.len() == 1 { &meshes[0] } else { &meshes[t] };
        rasterize(mesh, &traj.poses[t], &traj.intrinsics, exec)
    });
    let mut colors = Vec::with_capacity(traj.len());
    let mut masks = Vec::with_capacity(traj.len());
    for r in rendered {
        let r = r?;
        colors.push(r.color);
        masks.push(r.mask);
    }
    Ok((Video::new(colors)?, MaskVideo::new(masks)?))
}
