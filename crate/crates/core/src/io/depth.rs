//! Depth maps: PFM (float) and 16-bit PNG with a JSON range sidecar.

use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::image::DepthMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthFormat {
    Pfm,
    Png16,
}

impl DepthFormat {
    /// Picks the format from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pfm" => Some(DepthFormat::Pfm),
            "png" => Some(DepthFormat::Png16),
            _ => None,
        }
    }
}

/// Sidecar contents for a PNG16 depth map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthRange {
    pub d_min: f64,
    pub d_max: f64,
}

pub fn read_depth(path: &Path, format: DepthFormat) -> Result<DepthMap> {
    match format {
        DepthFormat::Pfm => read_pfm(path),
        DepthFormat::Png16 => read_png16(path),
    }
}

/// Next whitespace-delimited header token; exactly one whitespace byte ends it.
fn token<'a>(bytes: &'a [u8], pos: &mut usize, path: &Path) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos || *pos >= bytes.len() {
        return Err(Error::parse(path, "truncated PFM header"));
    }
    let tok = std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::parse(path, "non-ASCII PFM header"))?;
    *pos += 1;
    Ok(tok)
}

pub fn read_pfm(path: &Path) -> Result<DepthMap> {
    let bytes = read_bytes(path)?;
    let mut pos = 0;
    match token(&bytes, &mut pos, path)? {
        "Pf" => {}
        "PF" => return Err(Error::parse(path, "colour PFM; depth must be single-channel \"Pf\"")),
        other => return Err(Error::parse(path, format!("bad PFM magic {other:?}"))),
    }
    let dim = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(path, format!("bad PFM dimension {s:?}")));
    let width = dim(token(&bytes, &mut pos, path)?)?;
    let height = dim(token(&bytes, &mut pos, path)?)?;
    let scale: f64 = token(&bytes, &mut pos, path)?
        .parse()
        .map_err(|_| Error::parse(path, "bad PFM scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::parse(path, "PFM scale must be finite and non-zero"));
    }
    let little = scale < 0.0;
    let n = width.checked_mul(height).ok_or_else(|| Error::parse(path, "PFM dimensions overflow"))?;
    let body = &bytes[pos..];
    if body.len() != 4 * n {
        return Err(Error::parse(path, format!("PFM body has {} bytes, expected {}", body.len(), 4 * n)));
    }
    let mut values = vec![0.0; n];
    for (k, chunk) in body.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        // Rows are stored bottom-to-top.
        let (r, c) = (k / width, k % width);
        values[(height - 1 - r) * width + c] = v as f64;
    }
    DepthMap::new(width, height, values)
}

/// Writes little-endian PFM. Values are narrowed to `f32`.
pub fn write_pfm(depth: &DepthMap, path: &Path) -> Result<()> {
    let (w, h) = (depth.width(), depth.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for r in (0..h).rev() {
        for c in 0..w {
            out.extend_from_slice(&(depth.get(r, c) as f32).to_le_bytes());
        }
    }
    write_bytes(path, &out)
}

/// `depth.png` → `depth.json`.
pub fn sidecar_path(png: &Path) -> PathBuf {
    png.with_extension("json")
}

pub fn read_png16(path: &Path) -> Result<DepthMap> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let range: DepthRange = serde_json::from_str(&text).map_err(|e| Error::parse(&side, e.to_string()))?;
    if !(range.d_min.is_finite() && range.d_max.is_finite() && range.d_min <= range.d_max) {
        return Err(Error::parse(&side, "need finite d_min <= d_max"));
    }
    let img = image::open(path).map_err(|source| Error::Image { path: path.into(), source })?;
    let img = match img {
        image::DynamicImage::ImageLuma16(b) => b,
        _ => return Err(Error::parse(path, "depth PNG must be 16-bit grayscale")),
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = img.pixels().map(|p| dequantize(p.0[0], range)).collect();
    DepthMap::new(w, h, values)
}

fn dequantize(raw: u16, r: DepthRange) -> f64 {
    // Same line as d_min + raw/65535·(d_max − d_min), but exact at both ends.
    let t = raw as f64 / 65535.0;
    (1.0 - t) * r.d_min + t * r.d_max
}

fn quantize(v: f64, r: DepthRange) -> u16 {
    if r.d_max == r.d_min {
        return 0;
    }
    ((v - r.d_min) / (r.d_max - r.d_min) * 65535.0).round().clamp(0.0, 65535.0) as u16
}

/// Writes the PNG plus a sidecar holding the map's own depth range.
pub fn write_png16(depth: &DepthMap, path: &Path) -> Result<()> {
    let range = DepthRange { d_min: depth.d_min(), d_max: depth.d_max() };
    let (w, h) = (depth.width(), depth.height());
    let raw: Vec<u16> = depth.values().iter().map(|&v| quantize(v, range)).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(w as u32, h as u32, raw).expect("buffer sized from the map");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image { path: path.into(), source })?;
    let side = sidecar_path(path);
    let json = serde_json::to_string(&range).expect("plain struct serializes");
    write_bytes(&side, json.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_constant_2x2() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        let mut bytes = b"Pf\n2 2\n-1.0\n".to_vec();
        for _ in 0..4 {
            bytes.extend_from_slice(&1.0f32.to_le_bytes());
        }
        std::fs::write(&p, bytes).unwrap();
        let d = read_pfm(&p).unwrap();
        assert_eq!((d.width(), d.height()), (2, 2));
        assert!(d.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn pfm_big_endian_and_row_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        let mut bytes = b"Pf\n1 2\n1.0\n".to_vec();
        bytes.extend_from_slice(&2.0f32.to_be_bytes()); // bottom row
        bytes.extend_from_slice(&3.0f32.to_be_bytes()); // top row
        std::fs::write(&p, bytes).unwrap();
        let d = read_pfm(&p).unwrap();
        assert_eq!(d.values(), &[3.0, 2.0]);
    }

    #[test]
    fn pfm_rejects_bad_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        for bytes in [&b"P6\n1 1\n-1.0\n\0\0\0\0"[..], b"Pf\n1 x\n-1.0\n\0\0\0\0", b"Pf\n1 1\n-1.0\n\0\0", b"Pf\n1"] {
            std::fs::write(&p, bytes).unwrap();
            assert!(matches!(read_pfm(&p), Err(Error::Parse { .. })), "{bytes:?}");
        }
        let mut neg = b"Pf\n1 1\n-1.0\n".to_vec();
        neg.extend_from_slice(&(-1.0f32).to_le_bytes());
        std::fs::write(&p, neg).unwrap();
        assert!(matches!(read_pfm(&p), Err(Error::NonPositiveDepth { .. })));
    }

    #[test]
    fn png16_endpoints() {
        let r = DepthRange { d_min: 0.5, d_max: 10.0 };
        assert_eq!(dequantize(0, r), 0.5);
        assert_eq!(dequantize(65535, r), 10.0);
    }

    #[test]
    fn png16_roundtrip_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        let d = DepthMap::new(3, 2, vec![0.5, 1.0, 2.0, 4.0, 8.0, 10.0]).unwrap();
        write_png16(&d, &p).unwrap();
        let back = read_png16(&p).unwrap();
        let step = (10.0 - 0.5) / 65535.0;
        for (a, b) in d.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= step / 2.0 + 1e-12);
        }
        assert_eq!((back.d_min(), back.d_max()), (0.5, 10.0));
        let p2 = dir.path().join("e.png");
        write_png16(&back, &p2).unwrap();
        assert_eq!(read_png16(&p2).unwrap(), back);
    }

    #[test]
    fn png16_missing_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        write_png16(&DepthMap::constant(2, 2, 3.0).unwrap(), &p).unwrap();
        std::fs::remove_file(sidecar_path(&p)).unwrap();
        assert!(matches!(read_png16(&p), Err(Error::Io { .. })));
    }
}
