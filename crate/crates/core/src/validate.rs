//! Brute-force oracles and mesh checks.
//!
//! Nothing here shares code with the rasterizer's coverage path: rays are
//! intersected with every face in 3D (Möller–Trumbore). Only the depth-test
//! predicate and clip planes are shared, since they define the answer.

use nalgebra::Vector3;
use serde::Serialize;

use crate::camera::{world_to_camera, CameraPose, Intrinsics};
use crate::image::Frame;
use crate::mesh::{face_count, DWMesh, FaceClass};
use crate::raster::{closer, rasterize, ClipPlanes, NO_FACE};
use crate::rng::Rng;
use crate::Exec;

/// Slack of the ray-cast oracle's inclusive hit test, in pixels from the
/// projected edge line (the rasterizer's coverage rule).
pub const HIT_EPS: f64 = 1e-9;
/// Barycentric margin below which a parity ray is treated as edge-grazing.
pub const GRAZE_MARGIN: f64 = 1e-9;
/// Minimum even-parity fraction for a mesh to count as closed.
pub const PARITY_THRESHOLD: f64 = 0.999;

/// Ray/triangle hit: `(t, [b0, b1, b2])`, or `None` when the ray is parallel.
fn intersect(orig: &Vector3<f64>, dir: &Vector3<f64>, tri: &[Vector3<f64>; 3]) -> Option<(f64, [f64; 3])> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-14 * scale || scale == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    let s = orig - tri[0];
    let u = s.dot(&p) * inv;
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    let t = e2.dot(&q) * inv;
    Some((t, [1.0 - u - v, u, v]))
}

/// Pixel distance from the center of `pixel` to the image of the line through
/// camera-space points `a` and `b` (the trace of the plane through `a`, `b` and
/// the camera center), valid even when the edge crosses the camera plane.
fn edge_line_distance(a: &Vector3<f64>, b: &Vector3<f64>, intr: &Intrinsics, pixel: (usize, usize)) -> f64 {
    let n = a.cross(b);
    let (lu, lv) = (n.x / intr.fx, n.y / intr.fy);
    let l0 = n.z - lu * intr.cx - lv * intr.cy;
    let (u, v) = (pixel.1 as f64 + 0.5, pixel.0 as f64 + 0.5);
    (lu * u + lv * v + l0).abs() / lu.hypot(lv)
}

/// Nearest face hit by the ray through the center of pixel `(i, j)`, using the
/// rasterizer's clip planes and tie-break. Returns `(None, +∞)` on a miss.
pub fn raycast_reference(mesh: &DWMesh, pose: &CameraPose, intr: &Intrinsics, pixel: (usize, usize)) -> (Option<usize>, f64) {
    let clip = ClipPlanes::for_mesh(mesh);
    let dir = Vector3::new(
        (pixel.1 as f64 + 0.5 - intr.cx) / intr.fx,
        (pixel.0 as f64 + 0.5 - intr.cy) / intr.fy,
        1.0,
    );
    let origin = Vector3::zeros();
    let mut best = (f64::INFINITY, NO_FACE);
    for (f, tri) in mesh.faces.iter().enumerate() {
        let p = tri.map(|k| world_to_camera(&mesh.vertex(k), pose));
        let Some((t, b)) = intersect(&origin, &dir, &p) else { continue };
        // With unit-z rays the ray parameter is the camera-space depth.
        if !clip.accepts(t) {
            continue;
        }
        let outside = (0..3).any(|k| b[k] < 0.0 && edge_line_distance(&p[(k + 1) % 3], &p[(k + 2) % 3], intr, pixel) > HIT_EPS);
        if outside {
            continue;
        }
        if closer(t, f as u32, best.0, best.1) {
            best = (t, f as u32);
        }
    }
    if best.1 == NO_FACE {
        (None, f64::INFINITY)
    } else {
        (Some(best.1 as usize), best.0)
    }
}

/// Borrowed triangle soup.
#[derive(Debug, Clone, Copy)]
pub struct TriangleSoup<'a> {
    pub vertices: &'a [[f32; 3]],
    pub faces: &'a [[u32; 3]],
}

impl<'a> From<&'a DWMesh> for TriangleSoup<'a> {
    fn from(m: &'a DWMesh) -> Self {
        TriangleSoup { vertices: &m.vertices, faces: &m.faces }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParityReport {
    pub rays: usize,
    pub even: usize,
    pub odd: usize,
    /// Rays passing within the grazing margin of an edge; not counted.
    pub excluded: usize,
}

impl ParityReport {
    /// Even fraction over the counted rays (1.0 when none were counted).
    pub fn fraction(&self) -> f64 {
        let counted = self.even + self.odd;
        if counted == 0 {
            1.0
        } else {
            self.even as f64 / counted as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RayParity {
    Even,
    Odd,
    Grazing,
}

/// Contribution of one triangle to a parity ray.
enum Hit {
    Miss,
    Cross,
    Graze,
}

fn classify_hit(tri: &[Vector3<f64>; 3], orig: &Vector3<f64>, dir: &Vector3<f64>) -> Hit {
    let Some((t, b)) = intersect(orig, dir, tri) else { return Hit::Miss };
    if t <= 0.0 {
        return Hit::Miss;
    }
    let min_b = b[0].min(b[1]).min(b[2]);
    if min_b.abs() < GRAZE_MARGIN {
        Hit::Graze
    } else if min_b > 0.0 {
        Hit::Cross
    } else {
        Hit::Miss
    }
}

fn fold_hits(hits: impl Iterator<Item = Hit>) -> RayParity {
    let mut crossings = 0usize;
    for h in hits {
        match h {
            Hit::Graze => return RayParity::Grazing,
            Hit::Cross => crossings += 1,
            Hit::Miss => {}
        }
    }
    if crossings.is_multiple_of(2) {
        RayParity::Even
    } else {
        RayParity::Odd
    }
}

const LEAF_SIZE: usize = 4;

/// Bounding volume hierarchy over triangles. It only prunes: every triangle
/// whose padded box the ray touches is tested exactly as brute force would.
struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

struct Node {
    lo: Vector3<f64>,
    hi: Vector3<f64>,
    /// Leaf: `order[start..start + count]`. Inner: `count == 0`, left child
    /// follows the node, right child at `start`.
    start: u32,
    count: u32,
}

impl Bvh {
    fn build(tris: &[[Vector3<f64>; 3]], pad: f64) -> Self {
        let mut bvh = Bvh { nodes: Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1), order: (0..tris.len() as u32).collect() };
        let centroids: Vec<Vector3<f64>> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order = std::mem::take(&mut bvh.order);
        bvh.node(tris, &centroids, &mut order, 0, pad);
        bvh.order = order;
        bvh
    }

    fn node(&mut self, tris: &[[Vector3<f64>; 3]], cent: &[Vector3<f64>], idx: &mut [u32], offset: usize, pad: f64) -> usize {
        let (mut lo, mut hi) = (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY));
        for &f in idx.iter() {
            for v in &tris[f as usize] {
                lo = lo.inf(v);
                hi = hi.sup(v);
            }
        }
        let me = self.nodes.len();
        self.nodes.push(Node { lo: lo.add_scalar(-pad), hi: hi.add_scalar(pad), start: offset as u32, count: idx.len() as u32 });
        if idx.len() <= LEAF_SIZE {
            return me;
        }
        let ext = hi - lo;
        let axis = if ext.x >= ext.y && ext.x >= ext.z { 0 } else if ext.y >= ext.z { 1 } else { 2 };
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            cent[a as usize][axis].total_cmp(&cent[b as usize][axis]).then(a.cmp(&b))
        });
        let (left, right) = idx.split_at_mut(mid);
        self.node(tris, cent, left, offset, pad);
        let r = self.node(tris, cent, right, offset + mid, pad);
        self.nodes[me].start = r as u32;
        self.nodes[me].count = 0;
        me
    }

    /// Does the ray `orig + t·dir`, `t ≥ 0`, touch the box?
    fn touches(n: &Node, orig: &Vector3<f64>, dir: &Vector3<f64>) -> bool {
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        for k in 0..3 {
            if dir[k] == 0.0 {
                if orig[k] < n.lo[k] || orig[k] > n.hi[k] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / dir[k];
            let (a, b) = ((n.lo[k] - orig[k]) * inv, (n.hi[k] - orig[k]) * inv);
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    fn candidates(&self, orig: &Vector3<f64>, dir: &Vector3<f64>, out: &mut Vec<u32>) {
        out.clear();
        if self.order.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(k) = stack.pop() {
            let n = &self.nodes[k];
            if !Self::touches(n, orig, dir) {
                continue;
            }
            if n.count > 0 {
                out.extend_from_slice(&self.order[n.start as usize..(n.start + n.count) as usize]);
            } else {
                stack.push(n.start as usize);
                stack.push(k + 1);
            }
        }
    }
}

/// Casts `rays` seeded rays from outside the bounding sphere through random
/// points of the bounding box and counts how many cross the surface an even
/// number of times.
pub fn ray_parity_check(soup: TriangleSoup, rays: usize, seed: u64, exec: Exec) -> ParityReport {
    parity_with(soup, rays, seed, exec, true)
}

fn parity_with(soup: TriangleSoup, rays: usize, seed: u64, exec: Exec, accelerate: bool) -> ParityReport {
    let verts: Vec<Vector3<f64>> =
        soup.vertices.iter().map(|v| Vector3::new(v[0] as f64, v[1] as f64, v[2] as f64)).collect();
    let tris: Vec<[Vector3<f64>; 3]> = soup.faces.iter().map(|t| t.map(|k| verts[k as usize])).collect();
    let (lo, hi) = verts.iter().fold(
        (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), v| (lo.inf(v), hi.sup(v)),
    );
    let center = (lo + hi) / 2.0;
    let radius = verts.iter().map(|v| (v - center).norm()).fold(0.0, f64::max).max(1e-12);
    let bvh = accelerate.then(|| Bvh::build(&tris, 1e-6 * radius));

    // One substream per ray, drawn up front.
    let mut master = Rng::new(seed);
    let streams: Vec<Rng> = (0..rays).map(|_| master.fork()).collect();

    let outcome = exec.map(rays, |r| {
        let mut rng = streams[r].clone();
        // Uniform direction by rejection from the unit ball.
        let unit = loop {
            let d = Vector3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            let n = d.norm();
            if n > 1e-6 && n <= 1.0 {
                break d / n;
            }
        };
        let origin = center + unit * (2.0 * radius);
        let target = Vector3::new(rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y), rng.uniform(lo.z, hi.z));
        let dir = target - origin;
        match &bvh {
            Some(bvh) => {
                let mut cand = Vec::new();
                bvh.candidates(&origin, &dir, &mut cand);
                fold_hits(cand.iter().map(|&f| classify_hit(&tris[f as usize], &origin, &dir)))
            }
            None => fold_hits(tris.iter().map(|t| classify_hit(t, &origin, &dir))),
        }
    });

    let mut report = ParityReport { rays, even: 0, odd: 0, excluded: 0 };
    for o in outcome {
        match o {
            RayParity::Even => report.even += 1,
            RayParity::Odd => report.odd += 1,
            RayParity::Grazing => report.excluded += 1,
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityRenderStats {
    pub pixels: usize,
    pub mean_abs_error: f64,
    pub max_abs_error: u8,
}

/// Renders the mesh from the canonical camera and compares, on pixels whose
/// cell is unoccluded surface, the rendered color against the input color of
/// the pixel's cell anchor. `None` when no pixel qualifies.
pub fn identity_render_check(mesh: &DWMesh, frame: &Frame, intr: &Intrinsics, exec: Exec) -> crate::Result<Option<IdentityRenderStats>> {
    let target = rasterize(mesh, &CameraPose::identity(), intr, exec)?;
    let (h, w) = (intr.height.min(mesh.height), intr.width.min(mesh.width));
    let mut total = 0u64;
    let mut count = 0usize;
    let mut max = 0u8;
    for i in 0..h.saturating_sub(1) {
        for j in 0..w.saturating_sub(1) {
            let f = mesh.cell_face(i, j);
            let ok = |f: usize| mesh.face_class[f] == FaceClass::Surface && !mesh.face_occluded[f];
            if !(ok(f) && ok(f + 1)) {
                continue;
            }
            let got = target.color.get(i, j);
            let want = frame.get(i, j);
            for k in 0..3 {
                let e = got[k].abs_diff(want[k]);
                total += e as u64;
                max = max.max(e);
            }
            count += 1;
        }
    }
    Ok((count > 0).then(|| IdentityRenderStats {
        pixels: count,
        mean_abs_error: total as f64 / (3 * count) as f64,
        max_abs_error: max,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Count law; `None` for a generic soup, where it does not apply.
    pub counts_ok: Option<bool>,
    pub ray_parity: f64,
    pub parity: ParityReport,
    pub identity_render: Option<IdentityRenderStats>,
    pub occluded_face_fraction: f64,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Runs the count law, ray parity and (when the source frame is available)
/// the identity render check on a DW-Mesh.
pub fn validate_mesh(
    mesh: &DWMesh,
    source: Option<(&Frame, &Intrinsics)>,
    rays: usize,
    seed: u64,
    exec: Exec,
) -> crate::Result<ValidationReport> {
    let mut notes = Vec::new();
    let counts_ok = mesh.height >= 2
        && mesh.width >= 2
        && mesh.vertices.len() == mesh.height * mesh.width
        && mesh.faces.len() == face_count(mesh.height, mesh.width);
    let invariants_ok = match mesh.validate() {
        Ok(()) => true,
        Err(e) => {
            notes.push(e.to_string());
            false
        }
    };
    let parity = ray_parity_check(mesh.into(), rays, seed, exec);
    if parity.excluded > 0 {
        notes.push(format!("{} grazing rays excluded", parity.excluded));
    }
    let identity_render = match source {
        Some((frame, intr)) => {
            let stats = identity_render_check(mesh, frame, intr, exec)?;
            if stats.is_none() {
                notes.push("identity render: no unoccluded surface cells".into());
            }
            stats
        }
        None => None,
    };
    let identity_ok = identity_render.is_none_or(|s| s.max_abs_error <= 1);
    let passed = counts_ok && invariants_ok && parity.fraction() >= PARITY_THRESHOLD && identity_ok;
    Ok(ValidationReport {
        counts_ok: Some(counts_ok),
        ray_parity: parity.fraction(),
        parity,
        identity_render,
        occluded_face_fraction: mesh.occluded_fraction(),
        passed,
        notes,
    })
}

/// Parity-only report for an arbitrary triangle soup.
pub fn validate_soup(soup: TriangleSoup, rays: usize, seed: u64, exec: Exec) -> ValidationReport {
    let parity = ray_parity_check(soup, rays, seed, exec);
    let mut notes = vec!["generic triangle soup: count law and identity render not applicable".to_string()];
    if parity.excluded > 0 {
        notes.push(format!("{} grazing rays excluded", parity.excluded));
    }
    ValidationReport {
        counts_ok: None,
        ray_parity: parity.fraction(),
        parity,
        identity_render: None,
        occluded_face_fraction: 0.0,
        passed: !soup.faces.is_empty() && parity.fraction() >= PARITY_THRESHOLD,
        notes,
    }
}

/// Twelve outward-wound triangles of an axis-aligned box.
pub fn box_soup(lo: [f32; 3], hi: [f32; 3]) -> (Vec<[f32; 3]>, Vec<[u32; 3]>) {
    let mut v = Vec::with_capacity(8);
    for k in 0..8 {
        v.push([
            if k & 1 == 0 { lo[0] } else { hi[0] },
            if k & 2 == 0 { lo[1] } else { hi[1] },
            if k & 4 == 0 { lo[2] } else { hi[2] },
        ]);
    }
    let f = vec![
        [0, 2, 1], [1, 2, 3], // z = lo
        [4, 5, 6], [5, 7, 6], // z = hi
        [0, 1, 4], [1, 5, 4], // y = lo
        [2, 6, 3], [3, 6, 7], // y = hi
        [0, 4, 2], [2, 4, 6], // x = lo
        [1, 3, 5], [3, 7, 5], // x = hi
    ];
    (v, f)
}
