//! Subcommand implementations. Each returns whether its validations passed.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dwm::io::{self, DepthFormat, PipelineConfig, PlyMesh};
use dwm::maskgen::{self, CropPlan, MaskMode};
use dwm::mesh::build_dwmesh_with_stats;
use dwm::orbit::{default_pivot_depth, make_orbit};
use dwm::rng::Rng;
use dwm::validate::{validate_mesh, validate_soup, ValidationReport};
use dwm::{rasterize, DWMesh, DepthMap, Error, Exec, Frame, Intrinsics, Video};
use log::info;
use serde::Serialize;
use serde_json::json;

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub exec: Exec,
}

impl Ctx {
    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn required<'a>(&self, p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        match p {
            Some(p) => Ok(p),
            None => bail!("missing input: pass --{flag} or set paths.{} in the config", flag),
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Depth maps from a file, or every PFM in a directory (16-bit PNGs with
/// sidecars when the directory holds no PFM).
fn load_depths(path: &Path) -> Result<Vec<DepthMap>> {
    let read = |p: &Path| -> Result<DepthMap> {
        let fmt = DepthFormat::from_path(p).with_context(|| format!("unknown depth format: {}", p.display()))?;
        Ok(io::read_depth(p, fmt)?)
    };
    if path.is_file() {
        return Ok(vec![read(path)?]);
    }
    let mut files = io::list_files(path, "pfm")?;
    if files.is_empty() {
        files = io::list_files(path, "png")?;
    }
    files.iter().map(|p| read(p)).collect()
}

fn load_frames(path: &Path, exec: Exec) -> Result<Video> {
    if path.is_file() {
        return Ok(Video::new(vec![io::read_frame(path)?])?);
    }
    Ok(io::read_frame_sequence(path, exec)?)
}

fn mesh_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let files = io::list_files(path, "ply")?;
    if files.is_empty() {
        bail!("no .ply files in {}", path.display());
    }
    Ok(files)
}

fn check_lengths(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { what, left, right }.into());
    }
    Ok(())
}

/// Per-item seeds drawn up front from the run seed.
fn seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = Rng::new(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

#[derive(Serialize)]
struct MeshEntry {
    file: String,
    stats: dwm::mesh::BuildStats,
    validation: ValidationReport,
}

pub fn build_mesh(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let video = load_frames(ctx.required(&cfg.paths.frames, "frames")?, ctx.exec)?;
    let depths = load_depths(ctx.required(&cfg.paths.depths, "depths")?)?;
    check_lengths("frames vs depth maps", video.len(), depths.len())?;
    let out = ctx.out_dir()?;
    let seeds = seeds(cfg.seed(), video.len());
    info!("building {} meshes", video.len());

    let entries = ctx.exec.map(video.len(), |t| -> Result<MeshEntry> {
        let frame = &video.frames()[t];
        let (mesh, stats) = build_dwmesh_with_stats(frame, &depths[t], &cfg.mesh, ctx.exec)?;
        let file = io::sequence_name("mesh", t, "ply");
        io::write_ply(&mesh, &out.join(&file))?;
        let intr = cfg.mesh.intrinsics_for(frame.width(), frame.height())?;
        let validation = validate_mesh(&mesh, Some((frame, &intr)), cfg.rays, seeds[t], ctx.exec)?;
        Ok(MeshEntry { file, stats, validation })
    });
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let passed = entries.iter().all(|e| e.validation.passed);
    write_json(&out.join("report.json"), &json!({ "passed": passed, "meshes": entries }))?;
    info!("wrote {} meshes to {}", entries.len(), out.display());
    Ok(passed)
}

/// Where per-frame meshes come from.
enum MeshSource {
    Files(Vec<PathBuf>),
    Build(Video, Vec<DepthMap>),
}

impl MeshSource {
    fn len(&self) -> usize {
        match self {
            MeshSource::Files(f) => f.len(),
            MeshSource::Build(v, _) => v.len(),
        }
    }

    fn get(&self, t: usize, cfg: &PipelineConfig, exec: Exec) -> Result<DWMesh> {
        Ok(match self {
            MeshSource::Files(f) => io::read_ply(&f[t])?,
            MeshSource::Build(v, d) => build_dwmesh_with_stats(&v.frames()[t], &d[t], &cfg.mesh, exec)?.0,
        })
    }
}

pub fn render(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let traj = io::read_trajectory(ctx.required(&cfg.paths.trajectory, "trajectory")?)?;
    let source = match (&cfg.paths.meshes, &cfg.paths.frames) {
        (Some(m), _) => MeshSource::Files(mesh_files(m)?),
        (None, Some(f)) => {
            let video = load_frames(f, ctx.exec)?;
            let depths = load_depths(ctx.required(&cfg.paths.depths, "depths")?)?;
            check_lengths("frames vs depth maps", video.len(), depths.len())?;
            MeshSource::Build(video, depths)
        }
        (None, None) => bail!("missing input: pass --meshes, or --frames with --depths"),
    };
    if source.len() != 1 {
        check_lengths("meshes vs trajectory poses", source.len(), traj.len())?;
    }
    let out = ctx.out_dir()?;
    let shared = if source.len() == 1 { Some(source.get(0, cfg, ctx.exec)?) } else { None };
    info!("rendering {} frames at {}x{}", traj.len(), traj.intrinsics.width, traj.intrinsics.height);

    let done = ctx.exec.map(traj.len(), |t| -> Result<()> {
        let owned;
        let mesh = match &shared {
            Some(m) => m,
            None => {
                owned = source.get(t, cfg, ctx.exec)?;
                &owned
            }
        };
        let target = rasterize(mesh, &traj.poses[t], &traj.intrinsics, ctx.exec)?;
        io::write_frame(&target.color, &out.join(io::sequence_name("color", t, "png")))?;
        io::write_mask(&target.mask, &out.join(io::sequence_name("mask", t, "png")))?;
        Ok(())
    });
    done.into_iter().collect::<Result<()>>()?;
    info!("wrote {} color/mask pairs to {}", traj.len(), out.display());
    Ok(true)
}

fn pivot_for(cfg: &PipelineConfig, depth: Option<&DepthMap>) -> f64 {
    cfg.orbit.pivot_depth.unwrap_or_else(|| depth.map_or(1.0, default_pivot_depth))
}

pub fn simulate_pairs(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let params = cfg.maskgen_params();
    let mode = if cfg.tracking_only { MaskMode::Tracking } else { params.mode };
    let video = load_frames(ctx.required(&cfg.paths.frames, "frames")?, ctx.exec)?;
    let Some((h, w)) = video.dims() else { bail!("no frames found") };
    let n = video.len();

    let rendering = if mode == MaskMode::Tracking {
        info!("tracking-only: rendering stage skipped");
        None
    } else {
        let depths = load_depths(ctx.required(&cfg.paths.depths, "depths")?)?;
        check_lengths("frames vs depth maps", n, depths.len())?;
        let traj = match &cfg.paths.trajectory {
            Some(p) => io::read_trajectory(p)?,
            None => {
                let mut orbit = cfg.orbit.clone();
                orbit.frames = n;
                let spec = orbit.spec(pivot_for(cfg, depths.first()))?;
                make_orbit(&spec, &cfg.mesh.intrinsics_for(w, h)?)?
            }
        };
        check_lengths("frames vs trajectory poses", n, traj.len())?;
        Some(maskgen::gen_rendering_masks(&video, &depths, &traj, &params, &cfg.mesh, ctx.exec)?.1)
    };
    let tracking = if mode == MaskMode::Rendering {
        None
    } else {
        let tracks = io::read_tracks(ctx.required(&cfg.paths.tracks, "tracks")?)?;
        Some(maskgen::gen_tracking_masks(&tracks, n, h, w, &params, ctx.exec)?)
    };
    let masks = match (rendering, tracking) {
        (Some(r), Some(t)) => maskgen::intersect_masks(&r, &t)?,
        (Some(m), None) | (None, Some(m)) => m,
        (None, None) => unreachable!("every mode runs at least one stage"),
    };

    let mut streams = Rng::new(params.seed);
    let crop_seed = streams.next_u64();
    let point_seeds = seeds(streams.next_u64(), n);
    let (colors, masks) = if cfg.crop {
        let plan = CropPlan::draw(h, w, crop_seed, &params);
        maskgen::crop_pair(&video, &masks, &plan, ctx.exec)?
    } else {
        (maskgen::apply_mask(&video, &masks)?, masks)
    };

    let out = ctx.out_dir()?;
    io::write_color_sequence(&colors, &out, "color", ctx.exec)?;
    io::write_mask_sequence(&masks, &out, ctx.exec)?;
    let points: Vec<_> = point_seeds
        .iter()
        .enumerate()
        .map(|(t, &s)| {
            let pts = maskgen::sample_point_grid_in(h, w, params.grid_points, s);
            json!({ "frame": t, "points": pts.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>() })
        })
        .collect();
    write_json(&out.join("query_points.json"), &points)?;
    // Output-neutral settings are dropped so the file is identical across runs.
    let mut resolved = cfg.clone();
    resolved.paths.out = None;
    resolved.threads = None;
    resolved.maskgen.seed = params.seed;
    write_json(&out.join("config.json"), &resolved)?;
    info!("wrote {n} pairs ({mode:?} masks) to {}", out.display());
    Ok(true)
}

pub fn orbit(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let depth = match &cfg.paths.depths {
        Some(p) => Some(load_depths(p)?.into_iter().next().context("no depth map found")?),
        None => None,
    };
    let intr = match &depth {
        Some(d) => cfg.mesh.intrinsics_for(d.width(), d.height())?,
        None => match cfg.mesh.intrinsics {
            Some(k) => k,
            None => Intrinsics::canonical(cfg.orbit.width, cfg.orbit.height),
        },
    };
    let spec = cfg.orbit.spec(pivot_for(cfg, depth.as_ref()))?;
    let traj = make_orbit(&spec, &intr)?;
    let out = ctx.out_dir()?;
    let path = out.join("trajectory.json");
    io::write_trajectory(&traj, &path)?;
    info!(
        "orbit {}..{} deg over {} poses, pivot depth {} -> {}",
        spec.theta_start,
        spec.theta_end,
        spec.frames,
        spec.pivot_depth,
        path.display()
    );
    Ok(true)
}

#[derive(Serialize)]
struct FileReport {
    file: String,
    #[serde(flatten)]
    report: ValidationReport,
}

pub fn validate(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let files = mesh_files(ctx.required(&cfg.paths.meshes, "meshes")?)?;
    let frames = match &cfg.paths.frames {
        Some(p) => Some(load_frames(p, ctx.exec)?),
        None => None,
    };
    if let Some(v) = &frames {
        check_lengths("meshes vs frames", files.len(), v.len())?;
    }
    let seeds = seeds(cfg.seed(), files.len());
    let mut reports = Vec::with_capacity(files.len());
    for (t, f) in files.iter().enumerate() {
        let report = match io::read_ply_any(f)? {
            PlyMesh::DwMesh(mesh) => {
                let frame: Option<&Frame> = frames.as_ref().map(|v| &v.frames()[t]);
                let intr = cfg.mesh.intrinsics_for(mesh.width, mesh.height)?;
                validate_mesh(&mesh, frame.map(|fr| (fr, &intr)), cfg.rays, seeds[t], ctx.exec)?
            }
            PlyMesh::Soup { vertices, faces } => validate_soup(
                dwm::validate::TriangleSoup { vertices: &vertices, faces: &faces },
                cfg.rays,
                seeds[t],
                ctx.exec,
            ),
        };
        let name = f.file_name().map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into_owned());
        reports.push(FileReport { file: name, report });
    }
    let passed = reports.iter().all(|r| r.report.passed);
    let doc = json!({ "passed": passed, "reports": reports });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    if let Some(dir) = &cfg.paths.out {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("validation.json"), &doc)?;
    }
    Ok(passed)
}

pub fn augment(ctx: &Ctx) -> Result<bool> {
    let cfg = &ctx.cfg;
    let params = cfg.maskgen_params();
    let video = load_frames(ctx.required(&cfg.paths.frames, "frames")?, ctx.exec)?;
    let Some((h, w)) = video.dims() else { bail!("no frames found") };
    let plan = CropPlan::draw(h, w, params.seed, &params);
    let cropped = maskgen::apply_crop(&video, &plan, ctx.exec)?;
    let out = ctx.out_dir()?;
    io::write_color_sequence(&cropped, &out, "color", ctx.exec)?;
    write_json(&out.join("crop_plan.json"), &plan)?;
    info!("cropped {} frames at fraction {:.4}", video.len(), plan.fraction);
    Ok(true)
}
