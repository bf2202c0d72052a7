//! Depth watertight meshes (DW-Mesh) from monocular frames and depth maps.
//!
//! The crate is organised as a pipeline:
//!
//! * [`camera`] and [`image`] hold the shared domain values (intrinsics, poses,
//!   trajectories, depth maps, frames, masks).
//! * [`mesh`] unprojects a depth map into a closed triangle mesh carrying a
//!   per-face occlusion bit and a flat per-face color.
//! * [`raster`] is a deterministic z-buffered software rasterizer producing
//!   color, visibility mask, depth and face-id buffers.
//! * [`maskgen`] synthesizes training pairs: rendering masks, tracking masks
//!   and smooth crop augmentation.
//! * [`orbit`] generates azimuth orbit trajectories.
//! * [`validate`] contains brute-force oracles (ray casting, parity counting).
//! * [`io`] reads and writes every on-disk artifact.
//!
//! Data-parallel loops go through [`Exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.
//! Results never depend on the execution policy or the worker count.

pub mod camera;
mod error;
mod exec;
pub mod image;
pub mod io;
pub mod maskgen;
pub mod mesh;
pub mod orbit;
pub mod raster;
pub mod rng;
pub mod validate;

pub use camera::{pixel_ray, world_to_camera, CameraPose, Intrinsics, Trajectory};
pub use error::{Error, Result};
pub use exec::Exec;
pub use image::{DepthMap, Frame, Mask, MaskVideo, Video};
pub use mesh::{build_dwmesh, DWMesh, FaceClass, MeshParams};
pub use raster::{rasterize, render_trajectory, RenderTarget};
