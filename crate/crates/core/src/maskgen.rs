//! Training-pair synthesis from monocular video.
//!
//! * Rendering masks: build a DW-Mesh per frame, force both triangles of a cell
//!   to share one occlusion bit, render from the target pose, and grow the
//!   invisible region with a square dilation. The color condition is the
//!   original frame with the mask applied.
//! * Tracking masks: a seeded subset of point tracks becomes occluders; from a
//!   seeded start frame onward a rectangle follows each occluder.
//! * Smooth crop: a seeded crop window glides along a cubic Bezier path with
//!   ease-in/ease-out timing and is resampled back to full resolution.
//!
//! All randomness is drawn up front from the seed, so per-frame work can run in
//! any order.

use serde::{Deserialize, Serialize};

use crate::camera::Trajectory;
use crate::image::{DepthMap, Frame, Mask, MaskVideo, Video};
use crate::mesh::{build_dwmesh, DWMesh, MeshParams, BLACK};
use crate::raster::rasterize;
use crate::rng::Rng;
use crate::{Error, Exec, Result};

/// Which masks make up a training sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    #[default]
    Rendering,
    Tracking,
    /// Invisible wherever either mask is invisible.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskGenParams {
    pub dilation_kernel: usize,
    /// Inclusive bounds on the number of grid points per frame.
    pub grid_points: [usize; 2],
    /// Fraction of tracks turned into occluders.
    pub occluder_fraction: f64,
    /// Rectangle half-extent in pixels; `None` means 5% of the shorter side.
    pub occluder_half_extent: Option<usize>,
    /// Inclusive bounds on the crop window size relative to the frame.
    pub crop_fraction: [f64; 2],
    pub seed: u64,
    pub mode: MaskMode,
}

impl Default for MaskGenParams {
    fn default() -> Self {
        MaskGenParams {
            dilation_kernel: 5,
            grid_points: [10, 50],
            occluder_fraction: 0.3,
            occluder_half_extent: None,
            crop_fraction: [0.85, 0.95],
            seed: 0,
            mode: MaskMode::Rendering,
        }
    }
}

impl MaskGenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.dilation_kernel == 0 || self.dilation_kernel.is_multiple_of(2) {
            return bad(format!("dilation kernel must be odd and >= 1, got {}", self.dilation_kernel));
        }
        if self.grid_points[0] > self.grid_points[1] || self.grid_points[0] == 0 {
            return bad(format!("grid point bounds {:?} are not ordered/positive", self.grid_points));
        }
        if !(0.0..=1.0).contains(&self.occluder_fraction) {
            return bad(format!("occluder fraction {} outside [0, 1]", self.occluder_fraction));
        }
        let [lo, hi] = self.crop_fraction;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return bad(format!("crop fraction bounds {:?} must satisfy 0 < lo <= hi <= 1", self.crop_fraction));
        }
        Ok(())
    }

    pub fn half_extent(&self, height: usize, width: usize) -> usize {
        self.occluder_half_extent
            .unwrap_or_else(|| (0.05 * height.min(width) as f64).round() as usize)
    }
}

/// Both triangles of every cell get the OR of their occlusion bits; colors
/// are re-derived (black when occluded). Caps are untouched.
pub fn pair_cell_occlusion(mesh: &DWMesh) -> DWMesh {
    let mut out = mesh.clone();
    let cells = (mesh.height.saturating_sub(1)) * (mesh.width.saturating_sub(1));
    for c in 0..cells {
        let (a, b) = (2 * c, 2 * c + 1);
        if out.face_occluded[a] || out.face_occluded[b] {
            for f in [a, b] {
                out.face_occluded[f] = true;
                out.face_color[f] = BLACK;
            }
        }
    }
    out
}

/// Grows the invisible region by a `k × k` square (clipped at the borders):
/// a pixel is invisible iff any pixel in its neighborhood is invisible.
pub fn dilate_invisible(mask: &Mask, kernel: usize) -> Result<Mask> {
    if kernel == 0 || kernel.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("dilation kernel must be odd, got {kernel}")));
    }
    let r = kernel / 2;
    let (h, w) = mask.dims();
    // Separable: visible survives iff its row window, then column window, is all visible.
    let mut rows = vec![false; w * h];
    for i in 0..h {
        let line = &mask.data()[i * w..(i + 1) * w];
        let mut prefix = vec![0usize; w + 1];
        for j in 0..w {
            prefix[j + 1] = prefix[j] + (!line[j]) as usize;
        }
        for j in 0..w {
            let (lo, hi) = (j.saturating_sub(r), (j + r).min(w - 1));
            rows[i * w + j] = prefix[hi + 1] == prefix[lo];
        }
    }
    let mut out = vec![false; w * h];
    for j in 0..w {
        let mut prefix = vec![0usize; h + 1];
        for i in 0..h {
            prefix[i + 1] = prefix[i] + (!rows[i * w + j]) as usize;
        }
        for i in 0..h {
            let (lo, hi) = (i.saturating_sub(r), (i + r).min(h - 1));
            out[i * w + j] = prefix[hi + 1] == prefix[lo];
        }
    }
    Mask::new(w, h, out)
}

/// Pixelwise masking: input where visible, black elsewhere.
pub fn apply_mask(video: &Video, masks: &MaskVideo) -> Result<Video> {
    if video.len() != masks.len() {
        return Err(Error::LengthMismatch { what: "video vs masks", left: video.len(), right: masks.len() });
    }
    let frames = video
        .frames()
        .iter()
        .zip(masks.frames())
        .map(|(f, m)| {
            if f.dims() != m.dims() {
                return Err(Error::DimensionMismatch(format!("frame {:?} vs mask {:?}", f.dims(), m.dims())));
            }
            let px = f.pixels().iter().zip(m.data()).map(|(&c, &v)| if v { c } else { BLACK }).collect();
            Frame::new(f.width(), f.height(), px)
        })
        .collect::<Result<Vec<_>>>()?;
    Video::new(frames)
}

/// Visibility mask of one frame rendered from its DW-Mesh at `pose_index`.
fn rendering_mask(
    frame: &Frame,
    depth: &DepthMap,
    traj: &Trajectory,
    t: usize,
    params: &MaskGenParams,
    mesh_params: &MeshParams,
    exec: Exec,
) -> Result<Mask> {
    let mesh = pair_cell_occlusion(&build_dwmesh(frame, depth, mesh_params, exec)?);
    let target = rasterize(&mesh, &traj.poses[t], &traj.intrinsics, exec)?;
    dilate_invisible(&target.mask, params.dilation_kernel)
}

/// Rendering-mask pairs `(V_T, V_O)`: masks from rendering each frame's mesh
/// at the matching pose, colors as the masked original frames.
pub fn gen_rendering_masks(
    video: &Video,
    depths: &[DepthMap],
    traj: &Trajectory,
    params: &MaskGenParams,
    mesh_params: &MeshParams,
    exec: Exec,
) -> Result<(Video, MaskVideo)> {
    params.validate()?;
    if video.len() != depths.len() {
        return Err(Error::LengthMismatch { what: "frames vs depth maps", left: video.len(), right: depths.len() });
    }
    if video.len() != traj.len() {
        return Err(Error::LengthMismatch { what: "frames vs trajectory poses", left: video.len(), right: traj.len() });
    }
    if let Some(dims) = video.dims() {
        if dims != (traj.intrinsics.height, traj.intrinsics.width) {
            return Err(Error::DimensionMismatch(format!(
                "frames are {dims:?} but the trajectory renders {}x{}",
                traj.intrinsics.height, traj.intrinsics.width
            )));
        }
    }
    let masks: Vec<Result<Mask>> = exec.map(video.len(), |t| {
        rendering_mask(&video.frames()[t], &depths[t], traj, t, params, mesh_params, exec)
    });
    let masks = MaskVideo::new(masks.into_iter().collect::<Result<Vec<_>>>()?)?;
    let colors = apply_mask(video, &masks)?;
    Ok((colors, masks))
}

/// Jittered grid of `n ∈ [10, 50]` points over a `width × height` frame.
pub fn sample_point_grid(height: usize, width: usize, seed: u64) -> Vec<(f64, f64)> {
    sample_point_grid_in(height, width, MaskGenParams::default().grid_points, seed)
}

/// Jittered grid with `n` drawn uniformly from the inclusive `bounds`.
///
/// Points fill a `rows × cols` grid row-major, one per cell, jittered
/// uniformly within the cell.
pub fn sample_point_grid_in(height: usize, width: usize, bounds: [usize; 2], seed: u64) -> Vec<(f64, f64)> {
    let mut rng = Rng::new(seed);
    let n = rng.range_inclusive(bounds[0] as u64, bounds[1] as u64) as usize;
    let (w, h) = (width as f64, height as f64);
    let cols = ((n as f64 * w / h).sqrt().ceil() as usize).clamp(1, n);
    let rows = n.div_ceil(cols);
    let (cw, ch) = (w / cols as f64, h / rows as f64);
    (0..n)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            let x = ((c as f64 + rng.next_f64()) * cw).min(w.next_down());
            let y = ((r as f64 + rng.next_f64()) * ch).min(h.next_down());
            (x, y)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub frame: usize,
    pub x: f64,
    pub y: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTrack {
    pub id: i64,
    pub samples: Vec<TrackSample>,
}

impl PointTrack {
    /// Checks frame monotonicity and that visible samples lie in the video.
    pub fn validate(&self, frames: usize, height: usize, width: usize) -> Result<()> {
        for pair in self.samples.windows(2) {
            if pair[1].frame <= pair[0].frame {
                return Err(Error::NonMonotoneTrack { id: self.id, frame: pair[1].frame as i64 });
            }
        }
        for s in &self.samples {
            let inside = s.x >= 0.0 && s.y >= 0.0 && s.x < width as f64 && s.y < height as f64;
            if s.frame >= frames || (s.visible && !inside) {
                return Err(Error::OutOfBoundsTrack { id: self.id, frame: s.frame, width, height, frames });
            }
        }
        Ok(())
    }

    /// Position per frame: the latest visible sample at or before the frame.
    fn positions(&self, frames: usize) -> Vec<Option<(f64, f64)>> {
        let mut out = vec![None; frames];
        let mut last = None;
        let mut it = self.samples.iter().peekable();
        for (t, slot) in out.iter_mut().enumerate() {
            while let Some(s) = it.next_if(|s| s.frame <= t) {
                if s.visible {
                    last = Some((s.x, s.y));
                }
            }
            *slot = last;
        }
        out
    }
}

/// Occluders picked for a tracking mask: `(track index, start frame)`.
pub fn choose_occluders(num_tracks: usize, frames: usize, params: &MaskGenParams) -> Vec<(usize, usize)> {
    let mut rng = Rng::new(params.seed);
    let k = (params.occluder_fraction * num_tracks as f64).round() as usize;
    let mut order: Vec<usize> = (0..num_tracks).collect();
    for a in 0..k.min(num_tracks) {
        let b = rng.range_inclusive(a as u64, (num_tracks - 1) as u64) as usize;
        order.swap(a, b);
    }
    let mut chosen: Vec<usize> = order[..k.min(num_tracks)].to_vec();
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|idx| (idx, rng.range_inclusive(0, frames.saturating_sub(1) as u64) as usize))
        .collect()
}

/// Tracking masks of `frames × height × width` from point tracks.
pub fn gen_tracking_masks(
    tracks: &[PointTrack],
    frames: usize,
    height: usize,
    width: usize,
    params: &MaskGenParams,
    exec: Exec,
) -> Result<MaskVideo> {
    params.validate()?;
    for t in tracks {
        t.validate(frames, height, width)?;
    }
    let mut sorted: Vec<&PointTrack> = tracks.iter().collect();
    sorted.sort_by_key(|t| t.id);
    let occluders = choose_occluders(sorted.len(), frames, params);
    // (start frame, per-frame position)
    #[allow(clippy::type_complexity)]
    let positions: Vec<(usize, Vec<Option<(f64, f64)>>)> =
        occluders.iter().map(|&(k, t0)| (t0, sorted[k].positions(frames))).collect();
    let half = params.half_extent(height, width) as i64;

    let masks = exec.map(frames, |t| {
        let mut m = Mask::filled(width, height, true);
        for (t0, pos) in &positions {
            if t < *t0 {
                continue;
            }
            let Some((x, y)) = pos[t] else { continue };
            let (ci, cj) = (y.floor() as i64, x.floor() as i64);
            let rows = (ci - half).max(0)..=(ci + half).min(height as i64 - 1);
            for i in rows {
                for j in (cj - half).max(0)..=(cj + half).min(width as i64 - 1) {
                    m.set(i as usize, j as usize, false);
                }
            }
        }
        m
    });
    MaskVideo::new(masks)
}

/// Seeded crop: window size fraction and Bezier control points of its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CropPlan {
    pub fraction: f64,
    /// Control points `(x, y)` of the window-center path, in pixels.
    pub control: [(f64, f64); 4],
}

impl CropPlan {
    pub fn draw(height: usize, width: usize, seed: u64, params: &MaskGenParams) -> Self {
        let mut rng = Rng::new(seed);
        let [lo, hi] = params.crop_fraction;
        let fraction = rng.uniform(lo, hi);
        let (w, h) = (width as f64, height as f64);
        let (hw, hh) = (fraction * w / 2.0, fraction * h / 2.0);
        let control = [(); 4].map(|_| (rng.uniform(hw, w - hw), rng.uniform(hh, h - hh)));
        CropPlan { fraction, control }
    }

    /// Window center for frame `t` of `frames`, with ease-in-out timing.
    pub fn center(&self, t: usize, frames: usize) -> (f64, f64) {
        let tau = if frames > 1 { t as f64 / (frames - 1) as f64 } else { 0.0 };
        let u = tau * tau * (3.0 - 2.0 * tau);
        let [p0, p1, p2, p3] = self.control;
        let v = 1.0 - u;
        let b = [v * v * v, 3.0 * v * v * u, 3.0 * v * u * u, u * u * u];
        (
            b[0] * p0.0 + b[1] * p1.0 + b[2] * p2.0 + b[3] * p3.0,
            b[0] * p0.1 + b[1] * p1.1 + b[2] * p2.1 + b[3] * p3.1,
        )
    }
}

fn bilinear(frame: &Frame, x: f64, y: f64) -> [u8; 3] {
    let (w, h) = (frame.width(), frame.height());
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let (a, b, c, d) = (frame.get(y0, x0), frame.get(y0, x1), frame.get(y1, x0), frame.get(y1, x1));
    let mut out = [0u8; 3];
    for k in 0..3 {
        let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
        let bot = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
        out[k] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Crops each frame along the plan and resamples it to full size.
pub fn apply_crop(video: &Video, plan: &CropPlan, exec: Exec) -> Result<Video> {
    let n = video.len();
    let frames = exec.map(n, |t| {
        let f = &video.frames()[t];
        let (w, h) = (f.width() as f64, f.height() as f64);
        let (cx, cy) = plan.center(t, n);
        let (cw, ch) = (plan.fraction * w, plan.fraction * h);
        let (x0, y0) = (cx - cw / 2.0, cy - ch / 2.0);
        let (sx, sy) = (cw / w, ch / h);
        Frame::from_fn(f.width(), f.height(), |i, j| {
            bilinear(f, x0 + (j as f64 + 0.5) * sx - 0.5, y0 + (i as f64 + 0.5) * sy - 0.5)
        })
    });
    Video::new(frames)
}

/// Crops masks along the plan with nearest-neighbour sampling, so they stay binary.
pub fn apply_crop_masks(masks: &MaskVideo, plan: &CropPlan, exec: Exec) -> Result<MaskVideo> {
    let n = masks.len();
    let frames = exec.map(n, |t| {
        let m = &masks.frames()[t];
        let (w, h) = (m.width() as f64, m.height() as f64);
        let (cx, cy) = plan.center(t, n);
        let (cw, ch) = (plan.fraction * w, plan.fraction * h);
        let (x0, y0) = (cx - cw / 2.0, cy - ch / 2.0);
        let (sx, sy) = (cw / w, ch / h);
        let pick = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        Mask::from_fn(m.width(), m.height(), |i, j| {
            m.get(pick(y0 + (i as f64 + 0.5) * sy, m.height()), pick(x0 + (j as f64 + 0.5) * sx, m.width()))
        })
    });
    MaskVideo::new(frames)
}

/// Crops a `(V_T, V_O)` pair with one plan: colors bilinearly, masks by nearest
/// neighbour, then re-blacks colors wherever the cropped mask is invisible.
pub fn crop_pair(video: &Video, masks: &MaskVideo, plan: &CropPlan, exec: Exec) -> Result<(Video, MaskVideo)> {
    let masks = apply_crop_masks(masks, plan, exec)?;
    let colors = apply_mask(&apply_crop(video, plan, exec)?, &masks)?;
    Ok((colors, masks))
}

/// Smooth crop augmentation with a plan drawn from `seed`.
pub fn smooth_crop_augment(video: &Video, seed: u64, params: &MaskGenParams, exec: Exec) -> Result<Video> {
    params.validate()?;
    let Some((h, w)) = video.dims() else {
        return Ok(Video::default());
    };
    apply_crop(video, &CropPlan::draw(h, w, seed, params), exec)
}

/// Pixelwise AND of two visibility sequences.
pub fn intersect_masks(a: &MaskVideo, b: &MaskVideo) -> Result<MaskVideo> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { what: "mask videos", left: a.len(), right: b.len() });
    }
    let frames = a.frames().iter().zip(b.frames()).map(|(x, y)| x.intersect(y)).collect::<Result<Vec<_>>>()?;
    MaskVideo::new(frames)
}

/// Counts cells whose two triangles disagree on the occlusion bit.
pub fn mixed_cells(mesh: &DWMesh) -> usize {
    let cells = (mesh.height.saturating_sub(1)) * (mesh.width.saturating_sub(1));
    (0..cells).filter(|&c| mesh.face_occluded[2 * c] != mesh.face_occluded[2 * c + 1]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;
    use crate::mesh::build_dwmesh;

    #[test]
    fn cropped_pair_stays_consistent() {
        let (h, w) = (40, 30);
        let video = Video::new(vec![Frame::from_fn(w, h, |i, j| [i as u8 * 3, j as u8 * 5, 200]); 4]).unwrap();
        let masks = MaskVideo::new(vec![Mask::from_fn(w, h, |i, j| (i / 4 + j / 4) % 2 == 0); 4]).unwrap();
        let plan = CropPlan::draw(h, w, 9, &MaskGenParams::default());
        let (c, m) = crop_pair(&video, &masks, &plan, Exec::Parallel).unwrap();
        for (f, mk) in c.frames().iter().zip(m.frames()) {
            for i in 0..h {
                for j in 0..w {
                    if !mk.get(i, j) {
                        assert_eq!(f.get(i, j), [0, 0, 0]);
                    }
                }
            }
        }
        let full = CropPlan { fraction: 1.0, control: [(15.0, 20.0); 4] };
        assert_eq!(apply_crop_masks(&masks, &full, Exec::Sequential).unwrap(), masks);
    }

    /// Brute-force dilation straight from the definition.
    fn dilate_oracle(m: &Mask, k: usize) -> Mask {
        let r = (k / 2) as i64;
        let (h, w) = m.dims();
        Mask::from_fn(w, h, |i, j| {
            for di in -r..=r {
                for dj in -r..=r {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a >= 0 && b >= 0 && a < h as i64 && b < w as i64 && !m.get(a as usize, b as usize) {
                        return false;
                    }
                }
            }
            true
        })
    }

    #[test]
    fn dilation_examples() {
        let all = Mask::filled(9, 7, true);
        assert_eq!(dilate_invisible(&all, 5).unwrap(), all);

        let mut center = Mask::filled(11, 11, true);
        center.set(5, 5, false);
        let d = dilate_invisible(&center, 5).unwrap();
        for i in 0..11 {
            for j in 0..11 {
                assert_eq!(!d.get(i, j), (3..=7).contains(&i) && (3..=7).contains(&j));
            }
        }
        assert_eq!(d.count_visible(), 121 - 25);

        let mut corner = Mask::filled(11, 11, true);
        corner.set(0, 0, false);
        let d = dilate_invisible(&corner, 5).unwrap();
        assert_eq!(d.count_visible(), 121 - 9);
        assert!(!d.get(2, 2) && d.get(3, 0) && d.get(0, 3));

        assert!(dilate_invisible(&all, 4).is_err());
    }

    #[test]
    fn dilation_matches_oracle_and_laws() {
        let mut rng = Rng::new(3);
        for _ in 0..40 {
            let (h, w) = (1 + rng.range_inclusive(0, 20) as usize, 1 + rng.range_inclusive(0, 20) as usize);
            let m = Mask::from_fn(w, h, |_, _| rng.next_f64() > 0.1);
            let d1 = dilate_invisible(&m, 1).unwrap();
            let d3 = dilate_invisible(&m, 3).unwrap();
            let d5 = dilate_invisible(&m, 5).unwrap();
            assert_eq!(d1, m);
            assert_eq!(d5, dilate_oracle(&m, 5));
            assert_eq!(d3, dilate_oracle(&m, 3));
            for k in 0..m.data().len() {
                // Extensive and monotone in k.
                assert!(!m.data()[k] <= !d3.data()[k]);
                assert!(!d3.data()[k] <= !d5.data()[k]);
            }
        }
    }

    #[test]
    fn pairing_examples() {
        let (h, w) = (6, 6);
        let depth = DepthMap::constant(w, h, 2.0).unwrap();
        let frame = Frame::filled(w, h, [7, 8, 9]);
        let mut mesh = build_dwmesh(&frame, &depth, &MeshParams::default(), Exec::Sequential).unwrap();
        let f = mesh.cell_face(2, 2);
        assert!(!mesh.face_occluded[f] && !mesh.face_occluded[f + 1]);
        let untouched = pair_cell_occlusion(&mesh);
        assert_eq!(untouched, mesh);

        mesh.face_occluded[f + 1] = true;
        mesh.face_color[f + 1] = BLACK;
        let paired = pair_cell_occlusion(&mesh);
        assert!(paired.face_occluded[f] && paired.face_color[f] == BLACK);
        assert_eq!(mixed_cells(&paired), 0);
        assert_eq!(mixed_cells(&mesh), 1);

        let mut all = mesh.clone();
        all.face_occluded.iter_mut().for_each(|o| *o = true);
        all.face_color.iter_mut().for_each(|c| *c = BLACK);
        assert_eq!(pair_cell_occlusion(&all), all);
    }

    #[test]
    fn apply_mask_examples() {
        let f = Frame::from_fn(4, 4, |i, j| [i as u8 + 1, j as u8 + 1, 9]);
        let video = Video::new(vec![f.clone(), f.clone()]).unwrap();
        let ones = MaskVideo::new(vec![Mask::filled(4, 4, true); 2]).unwrap();
        assert_eq!(apply_mask(&video, &ones).unwrap(), video);
        let zeros = MaskVideo::new(vec![Mask::filled(4, 4, false); 2]).unwrap();
        assert!(apply_mask(&video, &zeros).unwrap().frames().iter().all(|f| f.pixels().iter().all(|&c| c == BLACK)));
        let checker = MaskVideo::new(vec![Mask::from_fn(4, 4, |i, j| (i + j) % 2 == 0); 2]).unwrap();
        let out = apply_mask(&video, &checker).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i + j) % 2 == 0 { f.get(i, j) } else { BLACK };
                assert_eq!(out.frames()[1].get(i, j), expect);
            }
        }
        assert!(matches!(
            apply_mask(&video, &MaskVideo::new(vec![Mask::filled(4, 4, true)]).unwrap()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn identity_rendering_masks_keep_the_interior() {
        let (h, w, n) = (24, 20, 3);
        let frame = Frame::from_fn(w, h, |i, j| [i as u8, j as u8, 50]);
        let video = Video::new(vec![frame.clone(); n]).unwrap();
        let depths = vec![DepthMap::constant(w, h, 4.0).unwrap(); n];
        let traj = Trajectory::identity(Intrinsics::canonical(w, h), n);
        let params = MaskGenParams::default();
        let (colors, masks) =
            gen_rendering_masks(&video, &depths, &traj, &params, &MeshParams::default(), Exec::Parallel).unwrap();
        for (c, m) in colors.frames().iter().zip(masks.frames()) {
            for i in 0..h {
                for j in 0..w {
                    let inside = (3..=h - 5).contains(&i) && (3..=w - 5).contains(&j);
                    assert_eq!(m.get(i, j), inside, "({i}, {j})");
                    assert_eq!(c.get(i, j), if inside { frame.get(i, j) } else { BLACK });
                }
            }
        }
        let again =
            gen_rendering_masks(&video, &depths, &traj, &params, &MeshParams::default(), Exec::Sequential).unwrap();
        assert_eq!(again, (colors, masks));
    }

    #[test]
    fn rendering_masks_check_lengths() {
        let video = Video::new(vec![Frame::filled(8, 8, [1; 3]); 2]).unwrap();
        let depths = vec![DepthMap::constant(8, 8, 1.0).unwrap(); 1];
        let traj = Trajectory::identity(Intrinsics::canonical(8, 8), 2);
        let r = gen_rendering_masks(&video, &depths, &traj, &MaskGenParams::default(), &MeshParams::default(), Exec::Sequential);
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn point_grid_examples() {
        for seed in 0..500 {
            let pts = sample_point_grid(480, 640, seed);
            assert!((10..=50).contains(&pts.len()));
            assert!(pts.iter().all(|&(x, y)| (0.0..640.0).contains(&x) && (0.0..480.0).contains(&y)));
        }
        assert_eq!(sample_point_grid(64, 64, 42), sample_point_grid(64, 64, 42));
        let tiny = sample_point_grid(2, 2, 5);
        assert!(tiny.iter().all(|&(x, y)| x < 2.0 && y < 2.0));
    }

    fn static_track(id: i64, x: f64, y: f64, frames: usize) -> PointTrack {
        PointTrack { id, samples: (0..frames).map(|frame| TrackSample { frame, x, y, visible: true }).collect() }
    }

    #[test]
    fn tracking_without_occluders_is_all_visible() {
        let params = MaskGenParams { occluder_fraction: 0.0, ..Default::default() };
        let tracks = vec![static_track(0, 3.0, 3.0, 5)];
        let m = gen_tracking_masks(&tracks, 5, 10, 10, &params, Exec::Sequential).unwrap();
        assert!(m.frames().iter().all(|f| f.count_visible() == 100));
    }

    #[test]
    fn static_track_block() {
        let params = MaskGenParams { occluder_fraction: 1.0, occluder_half_extent: Some(2), ..Default::default() };
        let tracks = vec![static_track(0, 10.5, 10.5, 6)];
        let occ = choose_occluders(1, 6, &params);
        assert_eq!(occ.len(), 1);
        let t0 = occ[0].1;
        let m = gen_tracking_masks(&tracks, 6, 21, 21, &params, Exec::Parallel).unwrap();
        for (t, f) in m.frames().iter().enumerate() {
            if t < t0 {
                assert_eq!(f.count_visible(), 21 * 21);
            } else {
                assert_eq!(f.count_visible(), 21 * 21 - 25);
                assert!(!f.get(8, 8) && !f.get(12, 12) && f.get(7, 10) && f.get(10, 13));
            }
        }
    }

    #[test]
    fn start_frame_persistence() {
        // Find a seed whose only occluder starts at frame 3.
        let base = MaskGenParams { occluder_fraction: 1.0, occluder_half_extent: Some(1), ..Default::default() };
        let params = (0..10_000)
            .map(|seed| MaskGenParams { seed, ..base.clone() })
            .find(|p| choose_occluders(1, 8, p)[0].1 == 3)
            .unwrap();
        let tracks = vec![static_track(4, 5.0, 5.0, 8)];
        let m = gen_tracking_masks(&tracks, 8, 12, 12, &params, Exec::Sequential).unwrap();
        for t in 0..3 {
            assert_eq!(m.frames()[t].count_visible(), 144);
        }
        for t in 3..8 {
            assert_eq!(m.frames()[t].count_visible(), 144 - 9);
        }
    }

    #[test]
    fn lost_track_holds_last_position() {
        let params = MaskGenParams { occluder_fraction: 1.0, occluder_half_extent: Some(0), seed: 1, ..Default::default() };
        let t0 = choose_occluders(1, 6, &params)[0].1;
        let track = PointTrack {
            id: 0,
            samples: vec![
                TrackSample { frame: 0, x: 1.0, y: 1.0, visible: true },
                TrackSample { frame: 1, x: 2.0, y: 2.0, visible: true },
                TrackSample { frame: 2, x: 99.0, y: 99.0, visible: false },
            ],
        };
        let m = gen_tracking_masks(&[track], 6, 8, 8, &params, Exec::Sequential).unwrap();
        for t in t0.max(2)..6 {
            assert!(!m.frames()[t].get(2, 2));
            assert_eq!(m.frames()[t].count_visible(), 63);
        }
    }

    #[test]
    fn bad_tracks_rejected() {
        let p = MaskGenParams::default();
        let oob = static_track(0, 50.0, 1.0, 2);
        assert!(matches!(gen_tracking_masks(&[oob], 2, 10, 10, &p, Exec::Sequential), Err(Error::OutOfBoundsTrack { .. })));
        let mut dup = static_track(0, 1.0, 1.0, 2);
        dup.samples[1].frame = 0;
        assert!(matches!(gen_tracking_masks(&[dup], 2, 10, 10, &p, Exec::Sequential), Err(Error::NonMonotoneTrack { .. })));
    }

    #[test]
    fn crop_identity_and_endpoints() {
        let f = Frame::from_fn(16, 12, |i, j| [(i * 13) as u8, (j * 11) as u8, 77]);
        let video = Video::new(vec![f.clone(); 4]).unwrap();
        let ident = MaskGenParams { crop_fraction: [1.0, 1.0], ..Default::default() };
        let plan = CropPlan::draw(12, 16, 9, &ident);
        assert!(plan.control.iter().all(|&c| c == (8.0, 6.0)));
        assert_eq!(smooth_crop_augment(&video, 9, &ident, Exec::Sequential).unwrap(), video);

        let params = MaskGenParams::default();
        for seed in 0..200 {
            let plan = CropPlan::draw(12, 16, seed, &params);
            assert!((0.85..=0.95).contains(&plan.fraction));
            assert_eq!(plan.center(0, 49), plan.control[0]);
            assert_eq!(plan.center(48, 49), plan.control[3]);
            let (hw, hh) = (plan.fraction * 8.0, plan.fraction * 6.0);
            for t in 0..49 {
                let (cx, cy) = plan.center(t, 49);
                assert!(cx - hw >= -1e-9 && cx + hw <= 16.0 + 1e-9);
                assert!(cy - hh >= -1e-9 && cy + hh <= 12.0 + 1e-9);
            }
        }
        let a = smooth_crop_augment(&video, 3, &params, Exec::Sequential).unwrap();
        let b = smooth_crop_augment(&video, 3, &params, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dims(), video.dims());
    }
}
