//! Camera trajectories as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_bytes;
use crate::camera::{CameraPose, Intrinsics, Trajectory};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    intrinsics: Intrinsics,
    poses: Vec<Vec<f64>>,
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = TrajectoryFile {
        intrinsics: traj.intrinsics,
        poses: traj.poses.iter().map(|p| p.to_row_major().to_vec()).collect(),
    };
    let mut json = serde_json::to_string_pretty(&file).expect("plain data serializes");
    json.push('\n');
    write_bytes(path, json.as_bytes())
}

/// Loads and re-validates intrinsics and every pose.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: TrajectoryFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    let poses = file
        .poses
        .iter()
        .enumerate()
        .map(|(t, m)| {
            let m: &[f64; 16] = m
                .as_slice()
                .try_into()
                .map_err(|_| Error::parse(path, format!("pose {t} has {} entries, expected 16", m.len())))?;
            CameraPose::from_row_major(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(file.intrinsics, poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{make_orbit, OrbitRange, OrbitSpec};

    #[test]
    fn identity_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        let t = Trajectory::identity(Intrinsics::canonical(64, 48), 3);
        write_trajectory(&t, &p).unwrap();
        assert_eq!(read_trajectory(&p).unwrap(), t);
    }

    #[test]
    fn full_orbit_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        let k = Intrinsics::canonical(512, 512);
        let t = make_orbit(&OrbitSpec::from_range(OrbitRange::Full, 49, 3.7), &k).unwrap();
        write_trajectory(&t, &p).unwrap();
        let back = read_trajectory(&p).unwrap();
        assert_eq!(back.len(), 49);
        assert_eq!(back, t);
    }

    #[test]
    fn corrupted_rotation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        let mut m = CameraPose::identity().to_row_major();
        m[0] = 1.1;
        let json = serde_json::json!({"intrinsics": Intrinsics::canonical(4, 4), "poses": [m.to_vec()]});
        std::fs::write(&p, json.to_string()).unwrap();
        assert!(matches!(read_trajectory(&p), Err(Error::NonOrthonormalPose { .. })));
        std::fs::write(&p, r#"{"intrinsics":{"fx":1,"fy":1,"cx":1,"cy":1,"width":2,"height":2},"poses":[[1,0,0]]}"#).unwrap();
        assert!(matches!(read_trajectory(&p), Err(Error::Parse { .. })));
    }
}
