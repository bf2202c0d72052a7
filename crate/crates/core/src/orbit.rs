//! Azimuth orbit trajectories around a pivot on the optical axis.
//!
//! The pivot sits at `(0, 0, pivot_depth)` and the orbit radius equals the
//! pivot depth, so azimuth 0 is the canonical camera at the origin. Positive
//! azimuth moves the camera toward +x.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{CameraPose, Intrinsics, Trajectory};
use crate::image::DepthMap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Easing {
    #[default]
    Linear,
    EaseInOut,
}

impl Easing {
    pub fn apply(self, tau: f64) -> f64 {
        match self {
            Easing::Linear => tau,
            Easing::EaseInOut => tau * tau * (3.0 - 2.0 * tau),
        }
    }
}

/// The four named evaluation sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitRange {
    Small,
    Large,
    Extreme,
    Full,
}

impl OrbitRange {
    /// `(start, end)` azimuth in degrees.
    pub fn angles(self) -> (f64, f64) {
        match self {
            OrbitRange::Small => (0.0, 30.0),
            OrbitRange::Large => (0.0, 60.0),
            OrbitRange::Extreme => (0.0, 90.0),
            OrbitRange::Full => (-90.0, 90.0),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "small" => Some(OrbitRange::Small),
            "large" => Some(OrbitRange::Large),
            "extreme" => Some(OrbitRange::Extreme),
            "full" => Some(OrbitRange::Full),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    pub theta_start: f64,
    pub theta_end: f64,
    pub frames: usize,
    pub pivot_depth: f64,
    #[serde(default)]
    pub easing: Easing,
}

impl OrbitSpec {
    pub fn from_range(range: OrbitRange, frames: usize, pivot_depth: f64) -> Self {
        let (theta_start, theta_end) = range.angles();
        OrbitSpec { theta_start, theta_end, frames, pivot_depth, easing: Easing::Linear }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::InvalidSpec("frame count must be >= 1".into()));
        }
        if !(self.pivot_depth > 0.0 && self.pivot_depth.is_finite()) {
            return Err(Error::InvalidSpec(format!("pivot depth must be positive, got {}", self.pivot_depth)));
        }
        for th in [self.theta_start, self.theta_end] {
            if th.is_nan() || th.abs() > 180.0 {
                return Err(Error::InvalidSpec(format!("azimuth {th} outside [-180, 180]")));
            }
        }
        Ok(())
    }

    /// Azimuth of frame `t` in degrees; endpoints are exact.
    pub fn azimuth(&self, t: usize) -> f64 {
        let tau = if self.frames > 1 { t as f64 / (self.frames - 1) as f64 } else { 0.0 };
        let e = self.easing.apply(tau);
        (1.0 - e) * self.theta_start + e * self.theta_end
    }
}

/// Look-at pose on the orbit at azimuth `theta_deg`.
pub fn orbit_pose(theta_deg: f64, pivot_depth: f64) -> Result<CameraPose> {
    let (s, c) = theta_deg.to_radians().sin_cos();
    let pivot = Vector3::new(0.0, 0.0, pivot_depth);
    let center = pivot + Vector3::new(s, 0.0, -c) * pivot_depth;
    // Image-down is world +y (world-up is −y in image convention).
    let down = Vector3::new(0.0, 1.0, 0.0);
    let forward = (pivot - center).normalize();
    let right = down.cross(&forward).normalize();
    let down = forward.cross(&right);
    let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    CameraPose::from_center(rotation, center)
}

pub fn make_orbit(spec: &OrbitSpec, intr: &Intrinsics) -> Result<Trajectory> {
    spec.validate()?;
    let poses = (0..spec.frames)
        .map(|t| orbit_pose(spec.azimuth(t), spec.pivot_depth))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(*intr, poses)
}

/// Median of the original depth values (mean of the middle two when even).
pub fn default_pivot_depth(depth: &DepthMap) -> f64 {
    let mut v = depth.values().to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::orthonormal_deviation;
    use proptest::prelude::*;

    fn intr() -> Intrinsics {
        Intrinsics::canonical(512, 512)
    }

    #[test]
    fn zero_azimuth_is_identity() {
        for pivot in [0.5, 3.0, 77.0] {
            let p = orbit_pose(0.0, pivot).unwrap();
            assert!((p.rotation() - Matrix3::identity()).abs().max() <= 1e-9);
            assert!(p.translation().abs().max() <= 1e-9);
        }
    }

    #[test]
    fn full_range_endpoints() {
        let spec = OrbitSpec::from_range(OrbitRange::Full, 49, 4.0);
        assert_eq!(spec.azimuth(0), -90.0);
        assert_eq!(spec.azimuth(48), 90.0);
        assert_eq!(spec.azimuth(24), 0.0);
        let traj = make_orbit(&spec, &intr()).unwrap();
        assert_eq!(traj.len(), 49);
        for p in &traj.poses {
            assert!(((p.center() - Vector3::new(0.0, 0.0, 4.0)).norm() - 4.0).abs() < 1e-9);
            assert!(orthonormal_deviation(p.rotation()) < 1e-12);
            // The pivot stays on the optical axis.
            let q = crate::camera::world_to_camera(&Vector3::new(0.0, 0.0, 4.0), p);
            assert!(q.x.abs() < 1e-9 && q.y.abs() < 1e-9 && (q.z - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_frame_uses_start() {
        let spec = OrbitSpec { theta_start: 0.0, theta_end: 45.0, frames: 1, pivot_depth: 2.0, easing: Easing::Linear };
        let traj = make_orbit(&spec, &intr()).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(spec.azimuth(0), 0.0);
    }

    #[test]
    fn invalid_specs() {
        let good = OrbitSpec::from_range(OrbitRange::Small, 3, 1.0);
        assert!(make_orbit(&OrbitSpec { frames: 0, ..good }, &intr()).is_err());
        assert!(make_orbit(&OrbitSpec { pivot_depth: 0.0, ..good }, &intr()).is_err());
        assert!(make_orbit(&OrbitSpec { theta_end: 181.0, ..good }, &intr()).is_err());
    }

    #[test]
    fn named_ranges() {
        assert_eq!(OrbitRange::parse("small").unwrap().angles(), (0.0, 30.0));
        assert_eq!(OrbitRange::parse("large").unwrap().angles(), (0.0, 60.0));
        assert_eq!(OrbitRange::parse("extreme").unwrap().angles(), (0.0, 90.0));
        assert_eq!(OrbitRange::parse("full").unwrap().angles(), (-90.0, 90.0));
        assert!(OrbitRange::parse("huge").is_none());
    }

    #[test]
    fn pivot_medians() {
        assert_eq!(default_pivot_depth(&DepthMap::constant(3, 3, 5.0).unwrap()), 5.0);
        assert_eq!(default_pivot_depth(&DepthMap::new(2, 2, vec![4.0, 1.0, 3.0, 2.0]).unwrap()), 2.5);
        assert_eq!(default_pivot_depth(&DepthMap::new(1, 1, vec![7.0]).unwrap()), 7.0);
    }

    proptest! {
        #[test]
        fn monotone_azimuth(a in -180.0f64..180.0, b in -180.0f64..180.0, n in 2usize..80, ease in any::<bool>()) {
            let easing = if ease { Easing::EaseInOut } else { Easing::Linear };
            let spec = OrbitSpec { theta_start: a, theta_end: b, frames: n, pivot_depth: 1.0, easing };
            let th: Vec<f64> = (0..n).map(|t| spec.azimuth(t)).collect();
            prop_assert_eq!(th[0], a);
            prop_assert_eq!(th[n - 1], b);
            for w in th.windows(2) {
                if b >= a { prop_assert!(w[1] >= w[0] - 1e-12) } else { prop_assert!(w[1] <= w[0] + 1e-12) }
            }
        }

        #[test]
        fn negative_orbit_mirrors_positive(theta in 0.0f64..180.0, pivot in 0.1f64..50.0) {
            let p = orbit_pose(theta, pivot).unwrap();
            let m = orbit_pose(-theta, pivot).unwrap();
            let s = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0));
            let (cp, cm) = (p.center(), m.center());
            prop_assert!((cm - s * cp).norm() < 1e-9 * pivot.max(1.0));
            prop_assert!((m.rotation() - s * p.rotation() * s).abs().max() < 1e-9);
            prop_assert!(orthonormal_deviation(p.rotation()) < 1e-9);
        }
    }
}
