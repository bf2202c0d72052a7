//! Command-line surface. Every flag has a twin in the JSON config; a flag
//! given on the command line wins over the file, which wins over defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dwm::io::PipelineConfig;
use dwm::maskgen::MaskMode;
use dwm::orbit::{Easing, OrbitRange};

#[derive(Debug, Parser)]
#[command(name = "dwm", version, about = "Depth watertight meshes, rendering masks and training-pair simulation")]
pub struct Cli {
    /// JSON pipeline config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (output never depends on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one DW-Mesh per frame and write PLYs plus a validation report.
    BuildMesh(BuildMeshArgs),
    /// Render color and mask sequences along a trajectory.
    Render(RenderArgs),
    /// Simulate training pairs (masked video, mask video) from a monocular video.
    SimulatePairs(SimulateArgs),
    /// Write an orbit trajectory.
    Orbit(OrbitArgs),
    /// Check a mesh (or a directory of meshes) and print a JSON report.
    Validate(ValidateArgs),
    /// Apply the smooth crop augmentation to a frame sequence.
    Augment(AugmentArgs),
}

#[derive(Debug, Args)]
pub struct MeshFlags {
    /// Minimum face angle in degrees below which a face is occluded.
    #[arg(long)]
    pub delta_angle: Option<f64>,
    /// Depth-discontinuity threshold as a fraction of the depth range.
    #[arg(long)]
    pub delta_depth_coeff: Option<f64>,
    /// Depth written on border pixels.
    #[arg(long)]
    pub d_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BuildMeshArgs {
    /// Directory of PNG frames.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Directory of depth maps (PFM, or 16-bit PNG with JSON sidecars).
    #[arg(long)]
    pub depths: Option<PathBuf>,
    /// Parity rays per mesh.
    #[arg(long)]
    pub rays: Option<usize>,
    #[command(flatten)]
    pub mesh: MeshFlags,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// PLY file or directory of mesh_*.ply.
    #[arg(long)]
    pub meshes: Option<PathBuf>,
    /// Frames directory (with --depths) when no meshes are given.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub depths: Option<PathBuf>,
    /// Trajectory JSON.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub mesh: MeshFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Rendering,
    Tracking,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RangeArg {
    Small,
    Large,
    Extreme,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EasingArg {
    Linear,
    EaseInOut,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory of PNG frames.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Directory of depth maps, one per frame.
    #[arg(long)]
    pub depths: Option<PathBuf>,
    /// Trajectory JSON; defaults to the configured orbit over the video length.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Point tracks (JSON lines) for tracking masks.
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    /// Which masks to produce; `both` intersects rendering and tracking masks.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Tracking masks only; skips the rendering stage (no depths needed).
    #[arg(long)]
    pub tracking_only: bool,
    /// Apply the smooth crop augmentation to the pair.
    #[arg(long)]
    pub crop: bool,
    /// Orbit range used when no trajectory file is given.
    #[arg(long, value_enum)]
    pub range: Option<RangeArg>,
    /// Odd square kernel size for dilating tracking masks.
    #[arg(long)]
    pub dilation_kernel: Option<usize>,
    /// Fraction of tracks that become occluders.
    #[arg(long)]
    pub occluder_fraction: Option<f64>,
    /// Half side of each occluder square, in pixels.
    #[arg(long)]
    pub half_extent: Option<usize>,
    #[command(flatten)]
    pub mesh: MeshFlags,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    /// Named range: small (0→30), large (0→60), extreme (0→90), full (−90→90).
    #[arg(value_enum)]
    pub range: Option<RangeArg>,
    /// Start azimuth in degrees (overrides the range).
    #[arg(long, allow_hyphen_values = true)]
    pub theta_start: Option<f64>,
    /// End azimuth in degrees (overrides the range).
    #[arg(long, allow_hyphen_values = true)]
    pub theta_end: Option<f64>,
    /// Number of poses.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Depth of the orbit pivot on the optical axis.
    #[arg(long)]
    pub pivot_depth: Option<f64>,
    #[arg(long, value_enum)]
    pub easing: Option<EasingArg>,
    /// Depth map (or directory; first map used) fixing resolution and pivot.
    #[arg(long)]
    pub depths: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// PLY file or directory of mesh_*.ply.
    #[arg(long)]
    pub meshes: Option<PathBuf>,
    /// Source frame (or frames directory) for the identity render check.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub rays: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Directory of PNG frames.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Smallest crop side as a fraction of the frame.
    #[arg(long)]
    pub crop_min: Option<f64>,
    /// Largest crop side as a fraction of the frame.
    #[arg(long)]
    pub crop_max: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

impl MeshFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        set(&mut cfg.mesh.delta_angle_deg, self.delta_angle);
        set(&mut cfg.mesh.delta_depth_coeff, self.delta_depth_coeff);
        set(&mut cfg.mesh.d_max, self.d_max);
    }
}

impl From<RangeArg> for OrbitRange {
    fn from(r: RangeArg) -> Self {
        match r {
            RangeArg::Small => OrbitRange::Small,
            RangeArg::Large => OrbitRange::Large,
            RangeArg::Extreme => OrbitRange::Extreme,
            RangeArg::Full => OrbitRange::Full,
        }
    }
}

impl Cli {
    /// Folds command-line flags over a config loaded from file (or defaults).
    pub fn merge_into(&self, cfg: &mut PipelineConfig) {
        set_opt(&mut cfg.seed, self.seed);
        set_opt(&mut cfg.threads, self.threads);
        set_opt(&mut cfg.paths.out, self.out.clone());
        let p = &mut cfg.paths;
        match &self.command {
            Command::BuildMesh(a) => {
                set_opt(&mut p.frames, a.frames.clone());
                set_opt(&mut p.depths, a.depths.clone());
                set(&mut cfg.rays, a.rays);
                a.mesh.apply(cfg);
            }
            Command::Render(a) => {
                set_opt(&mut p.meshes, a.meshes.clone());
                set_opt(&mut p.frames, a.frames.clone());
                set_opt(&mut p.depths, a.depths.clone());
                set_opt(&mut p.trajectory, a.trajectory.clone());
                a.mesh.apply(cfg);
            }
            Command::SimulatePairs(a) => {
                set_opt(&mut p.frames, a.frames.clone());
                set_opt(&mut p.depths, a.depths.clone());
                set_opt(&mut p.trajectory, a.trajectory.clone());
                set_opt(&mut p.tracks, a.tracks.clone());
                if a.tracking_only {
                    cfg.tracking_only = true;
                }
                if a.crop {
                    cfg.crop = true;
                }
                set(
                    &mut cfg.maskgen.mode,
                    a.mode.map(|m| match m {
                        ModeArg::Rendering => MaskMode::Rendering,
                        ModeArg::Tracking => MaskMode::Tracking,
                        ModeArg::Both => MaskMode::Both,
                    }),
                );
                set(&mut cfg.orbit.range, a.range.map(Into::into));
                set(&mut cfg.maskgen.dilation_kernel, a.dilation_kernel);
                set(&mut cfg.maskgen.occluder_fraction, a.occluder_fraction);
                set_opt(&mut cfg.maskgen.occluder_half_extent, a.half_extent);
                a.mesh.apply(cfg);
            }
            Command::Orbit(a) => {
                if let Some(r) = a.range {
                    // A named range on the command line replaces explicit
                    // angles from the file; explicit angle flags still win.
                    cfg.orbit.range = r.into();
                    cfg.orbit.theta_start = None;
                    cfg.orbit.theta_end = None;
                }
                set_opt(&mut cfg.orbit.theta_start, a.theta_start);
                set_opt(&mut cfg.orbit.theta_end, a.theta_end);
                set(&mut cfg.orbit.frames, a.frames);
                set_opt(&mut cfg.orbit.pivot_depth, a.pivot_depth);
                set(
                    &mut cfg.orbit.easing,
                    a.easing.map(|e| match e {
                        EasingArg::Linear => Easing::Linear,
                        EasingArg::EaseInOut => Easing::EaseInOut,
                    }),
                );
                set_opt(&mut p.depths, a.depths.clone());
                set(&mut cfg.orbit.width, a.width);
                set(&mut cfg.orbit.height, a.height);
            }
            Command::Validate(a) => {
                set_opt(&mut p.meshes, a.meshes.clone());
                set_opt(&mut p.frames, a.frames.clone());
                set(&mut cfg.rays, a.rays);
            }
            Command::Augment(a) => {
                set_opt(&mut p.frames, a.frames.clone());
                set(&mut cfg.maskgen.crop_fraction[0], a.crop_min);
                set(&mut cfg.maskgen.crop_fraction[1], a.crop_max);
            }
        }
    }
}
