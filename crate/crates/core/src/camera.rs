//! Pinhole cameras, poses and trajectories.
//!
//! Conventions: image rows grow downward (+y), columns rightward (+x), the
//! optical axis is +z. Depth is z-depth, so [`pixel_ray`] has unit z and a
//! depth value multiplies it straight into camera space.

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maximum tolerated `|RᵀR − I|` entry (and `|det R − 1|`).
pub const ORTHONORMAL_TOL: f64 = 1e-6;

/// Vertical field of view of the canonical source camera, in degrees.
pub const CANONICAL_VFOV_DEG: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let intr = Intrinsics { fx, fy, cx, cy, width, height };
        intr.validate()?;
        Ok(intr)
    }

    /// Canonical camera: 60° vertical field of view, principal point at the
    /// image center.
    pub fn canonical(width: usize, height: usize) -> Self {
        let f = height as f64 / (2.0 * (CANONICAL_VFOV_DEG.to_radians() / 2.0).tan());
        Intrinsics { fx: f, fy: f, cx: width as f64 / 2.0, cy: height as f64 / 2.0, width, height }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_f = self.fx.is_finite() && self.fy.is_finite() && self.fx > 0.0 && self.fy > 0.0;
        if !ok_f {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(0.0..=self.width as f64).contains(&self.cx) || !(0.0..=self.height as f64).contains(&self.cy) {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside the {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidIntrinsics("empty image".into()));
        }
        Ok(())
    }
}

/// Ray direction for vertex-lattice index `(i, j)` (row, column), with unit z.
pub fn pixel_ray(i: f64, j: f64, intr: &Intrinsics) -> Vector3<f64> {
    Vector3::new((j - intr.cx) / intr.fx, (i - intr.cy) / intr.fy, 1.0)
}

/// World-to-camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let deviation = orthonormal_deviation(&rotation);
        if !deviation.is_finite() || deviation > ORTHONORMAL_TOL || !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::NonOrthonormalPose { deviation });
        }
        Ok(CameraPose { rotation, translation })
    }

    pub fn identity() -> Self {
        CameraPose { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Pose of a camera centred at `center` whose world-to-camera rotation is
    /// `rotation`.
    pub fn from_center(rotation: Matrix3<f64>, center: Vector3<f64>) -> Result<Self> {
        CameraPose::new(rotation, -(rotation * center))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center in world coordinates, `−Rᵀt`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Row-major 4×4 homogeneous world-to-camera matrix.
    pub fn to_row_major(&self) -> [f64; 16] {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = m[(r, c)];
            }
        }
        out
    }

    pub fn from_row_major(m: &[f64; 16]) -> Result<Self> {
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        let bottom = [m[12], m[13], m[14], m[15]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidParams(format!("pose bottom row must be [0, 0, 0, 1], got {bottom:?}")));
        }
        CameraPose::new(rotation, translation)
    }
}

/// Largest entry of `|RᵀR − I|`, or `|det R − 1|` if that is larger.
pub fn orthonormal_deviation(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r - Matrix3::identity();
    let max_entry = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    max_entry.max((r.determinant() - 1.0).abs())
}

pub fn world_to_camera(p: &Vector3<f64>, pose: &CameraPose) -> Vector3<f64> {
    pose.rotation * p + pose.translation
}

/// Camera poses sharing one set of intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub intrinsics: Intrinsics,
    pub poses: Vec<CameraPose>,
}

impl Trajectory {
    pub fn new(intrinsics: Intrinsics, poses: Vec<CameraPose>) -> Result<Self> {
        intrinsics.validate()?;
        Ok(Trajectory { intrinsics, poses })
    }

    /// `len` copies of the canonical identity pose.
    pub fn identity(intrinsics: Intrinsics, len: usize) -> Self {
        Trajectory { intrinsics, poses: vec![CameraPose::identity(); len] }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn intr() -> Intrinsics {
        Intrinsics::new(100.0, 120.0, 256.0, 200.0, 512, 400).unwrap()
    }

    #[test]
    fn ray_examples() {
        let k = intr();
        assert_eq!(pixel_ray(k.cy, k.cx, &k), Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(pixel_ray(k.cy, k.cx + k.fx, &k), Vector3::new(1.0, 0.0, 1.0));
        assert_eq!(pixel_ray(k.cy - k.fy, k.cx, &k), Vector3::new(0.0, -1.0, 1.0));
    }

    #[test]
    fn canonical_intrinsics_have_60_degree_vfov() {
        let k = Intrinsics::canonical(640, 480);
        let half = (k.height as f64 / 2.0 / k.fy).atan().to_degrees();
        assert!((half - 30.0).abs() < 1e-12);
        assert_eq!((k.cx, k.cy), (320.0, 240.0));
        assert_eq!(k.fx, k.fy);
    }

    #[test]
    fn invalid_intrinsics_rejected() {
        assert!(Intrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(Intrinsics::new(1.0, 1.0, 5.0, 1.0, 4, 4).is_err());
    }

    #[test]
    fn transform_examples() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(world_to_camera(&p, &CameraPose::identity()), p);

        let shift = CameraPose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, -5.0)).unwrap();
        assert_eq!(world_to_camera(&Vector3::new(0.0, 0.0, 5.0), &shift), Vector3::zeros());

        // 90° yaw about +y, written out by hand: x -> -z.
        let yaw = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        let pose = CameraPose::new(yaw, Vector3::zeros()).unwrap();
        let q = world_to_camera(&Vector3::new(1.0, 0.0, 0.0), &pose);
        assert_eq!(q, Vector3::new(0.0, 0.0, -1.0));
        assert!((q.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_orthonormal_rejected() {
        let mut r = Matrix3::identity();
        r[(0, 1)] = 2e-6;
        assert!(matches!(CameraPose::new(r, Vector3::zeros()), Err(Error::NonOrthonormalPose { .. })));
        // Reflection: orthogonal but det = -1.
        let flip = Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0));
        assert!(CameraPose::new(flip, Vector3::zeros()).is_err());
        // Within tolerance.
        r[(0, 1)] = 1e-7;
        assert!(CameraPose::new(r, Vector3::zeros()).is_ok());
    }

    #[test]
    fn row_major_roundtrip() {
        let r = nalgebra::Rotation3::from_euler_angles(0.1, -0.4, 0.7).into_inner();
        let pose = CameraPose::new(r, Vector3::new(1.0, -2.0, 0.5)).unwrap();
        let back = CameraPose::from_row_major(&pose.to_row_major()).unwrap();
        assert_eq!(back, pose);
        let c = pose.center();
        assert!(world_to_camera(&c, &pose).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn ray_has_unit_z(i in 0u32..2048, j in 0u32..2048) {
            prop_assert_eq!(pixel_ray(i as f64, j as f64, &intr()).z, 1.0);
        }

        #[test]
        fn rigid_transform_preserves_distances(
            angles in prop::array::uniform3(-3.1f64..3.1),
            t in prop::array::uniform3(-10.0f64..10.0),
            a in prop::array::uniform3(-50.0f64..50.0),
            b in prop::array::uniform3(-50.0f64..50.0),
        ) {
            let r = nalgebra::Rotation3::from_euler_angles(angles[0], angles[1], angles[2]).into_inner();
            let pose = CameraPose::new(r, Vector3::from(t)).unwrap();
            let (a, b) = (Vector3::from(a), Vector3::from(b));
            let d0 = (a - b).norm();
            let d1 = (world_to_camera(&a, &pose) - world_to_camera(&b, &pose)).norm();
            prop_assert!((d0 - d1).abs() <= 1e-9 * d0.max(1e-300) + 1e-12);
        }
    }
}
