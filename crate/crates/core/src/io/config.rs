//! Pipeline configuration file (JSON). Every CLI flag has a twin here.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskgen::MaskGenParams;
use crate::mesh::MeshParams;
use crate::orbit::{Easing, OrbitRange, OrbitSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    /// Named range; explicit `theta_start`/`theta_end` override its endpoints.
    pub range: OrbitRange,
    pub theta_start: Option<f64>,
    pub theta_end: Option<f64>,
    pub frames: usize,
    /// `None` means the median of the first depth map (or 1.0 without one).
    pub pivot_depth: Option<f64>,
    pub easing: Easing,
    /// Output resolution when no depth map fixes it.
    pub width: usize,
    pub height: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            range: OrbitRange::Full,
            theta_start: None,
            theta_end: None,
            frames: 49,
            pivot_depth: None,
            easing: Easing::Linear,
            width: 512,
            height: 512,
        }
    }
}

impl OrbitConfig {
    pub fn spec(&self, pivot_depth: f64) -> Result<OrbitSpec> {
        let (a, b) = self.range.angles();
        let spec = OrbitSpec {
            theta_start: self.theta_start.unwrap_or(a),
            theta_end: self.theta_end.unwrap_or(b),
            frames: self.frames,
            pivot_depth,
            easing: self.easing,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::DimensionTooSmall { height: self.height, width: self.width });
        }
        if let Some(d) = self.pivot_depth {
            self.spec(d)?;
        } else {
            self.spec(1.0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub frames: Option<PathBuf>,
    pub depths: Option<PathBuf>,
    pub meshes: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub tracks: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mesh: MeshParams,
    pub maskgen: MaskGenParams,
    pub orbit: OrbitConfig,
    /// Overrides `maskgen.seed` and seeds validation rays.
    pub seed: Option<u64>,
    /// Worker count; `None` lets the pool pick.
    pub threads: Option<usize>,
    /// Rays per mesh for the parity check.
    pub rays: usize,
    /// Skip the rendering stage in pair simulation (tracking masks only).
    pub tracking_only: bool,
    /// Apply the smooth crop augmentation to simulated pairs.
    pub crop: bool,
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mesh: MeshParams::default(),
            maskgen: MaskGenParams::default(),
            orbit: OrbitConfig::default(),
            seed: None,
            threads: None,
            rays: 10_000,
            tracking_only: false,
            crop: false,
            paths: PathsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.maskgen.validate()?;
        self.orbit.validate()?;
        if self.threads == Some(0) {
            return Err(Error::InvalidParams("threads must be >= 1".into()));
        }
        if self.rays == 0 {
            return Err(Error::InvalidParams("rays must be >= 1".into()));
        }
        Ok(())
    }

    /// Seed in effect: top-level if set, else the mask generator's.
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.maskgen.seed)
    }

    /// Mask parameters with the effective seed applied.
    pub fn maskgen_params(&self) -> MaskGenParams {
        MaskGenParams { seed: self.seed(), ..self.maskgen.clone() }
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<PipelineConfig> {
        PipelineConfig::from_json(s, Path::new("c.json"))
    }

    #[test]
    fn empty_object_is_default() {
        assert_eq!(parse("{}").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn roundtrip() {
        let mut c = PipelineConfig { seed: Some(7), ..Default::default() };
        c.orbit.range = OrbitRange::Small;
        c.maskgen.dilation_kernel = 3;
        c.paths.out = Some("out".into());
        assert_eq!(parse(&c.to_json()).unwrap(), c);
        assert_eq!(c.maskgen_params().seed, 7);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(parse(r#"{"sede": 1}"#), Err(Error::Parse { .. })));
        assert!(matches!(parse(r#"{"mesh": {"d_maks": 1}}"#), Err(Error::Parse { .. })));
        assert!(matches!(parse(r#"{"maskgen": {"dilation_kernel": 4}}"#), Err(Error::InvalidParams(_))));
        assert!(matches!(parse(r#"{"orbit": {"frames": 0}}"#), Err(Error::InvalidSpec(_))));
        assert!(matches!(parse(r#"{"threads": 0}"#), Err(Error::InvalidParams(_))));
        assert!(matches!(parse(r#"{"mesh": {"delta_angle_deg": 0}}"#), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn explicit_angles_override_range() {
        let c = parse(r#"{"orbit": {"range": "small", "theta_end": 12.5}}"#).unwrap();
        let s = c.orbit.spec(2.0).unwrap();
        assert_eq!((s.theta_start, s.theta_end), (0.0, 12.5));
    }
}
