//! Point tracks as JSON lines.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskgen::{PointTrack, TrackSample};

/// One line of a track file. Extra keys (e.g. tracker confidences) are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub id: i64,
    pub frame: i64,
    pub x: f64,
    pub y: f64,
    pub visible: bool,
}

pub fn read_tracks(path: &Path) -> Result<Vec<PointTrack>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tracks(&text, path)
}

/// Groups records by id (ascending) and orders each track by frame.
pub fn parse_tracks(text: &str, path: &Path) -> Result<Vec<PointTrack>> {
    let mut by_id: BTreeMap<i64, Vec<TrackRecord>> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: TrackRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))?;
        if r.frame < 0 {
            return Err(Error::parse(path, format!("line {}: negative frame {}", n + 1, r.frame)));
        }
        if !(r.x.is_finite() && r.y.is_finite()) {
            return Err(Error::parse(path, format!("line {}: non-finite coordinate", n + 1)));
        }
        by_id.entry(r.id).or_default().push(r);
    }
    by_id
        .into_iter()
        .map(|(id, mut recs)| {
            recs.sort_by_key(|r| r.frame);
            if let Some(dup) = recs.windows(2).find(|p| p[0].frame == p[1].frame) {
                return Err(Error::NonMonotoneTrack { id, frame: dup[1].frame });
            }
            let samples =
                recs.iter().map(|r| TrackSample { frame: r.frame as usize, x: r.x, y: r.y, visible: r.visible }).collect();
            Ok(PointTrack { id, samples })
        })
        .collect()
}
