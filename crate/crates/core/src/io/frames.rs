//! 8-bit color frames and binary masks as PNG sequences.

use std::path::{Path, PathBuf};

use image::{GrayImage, RgbImage};

use super::{create_dir, list_files, sequence_name};
use crate::error::{Error, Result};
use crate::image::{Frame, Mask, MaskVideo, Video};
use crate::Exec;

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Image { path: path.into(), source }
}

/// Reads any 8-bit PNG as RGB.
pub fn read_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(image_err(path))?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Frame::new(w, h, img.pixels().map(|p| p.0).collect())
}

pub fn write_frame(frame: &Frame, path: &Path) -> Result<()> {
    let (w, h) = (frame.width(), frame.height());
    let raw: Vec<u8> = frame.pixels().iter().flatten().copied().collect();
    let img = RgbImage::from_raw(w as u32, h as u32, raw).expect("buffer sized from the frame");
    img.save_with_format(path, image::ImageFormat::Png).map_err(image_err(path))
}

/// Reads an 8-bit grayscale mask; only 0 and 255 are accepted.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let img = match image::open(path).map_err(image_err(path))? {
        image::DynamicImage::ImageLuma8(b) => b,
        _ => return Err(Error::parse(path, "mask must be 8-bit grayscale")),
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut data = Vec::with_capacity(w * h);
    for p in img.pixels() {
        match p.0[0] {
            0 => data.push(false),
            255 => data.push(true),
            v => return Err(Error::parse(path, format!("mask value {v} is neither 0 nor 255"))),
        }
    }
    Mask::new(w, h, data)
}

pub fn write_mask(mask: &Mask, path: &Path) -> Result<()> {
    let (w, h) = (mask.width(), mask.height());
    let raw: Vec<u8> = mask.data().iter().map(|&v| if v { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(w as u32, h as u32, raw).expect("buffer sized from the mask");
    img.save_with_format(path, image::ImageFormat::Png).map_err(image_err(path))
}

fn write_sequence<T: Sync>(
    items: &[T],
    dir: &Path,
    prefix: &str,
    exec: Exec,
    write: impl Fn(&T, &Path) -> Result<()> + Sync,
) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let paths: Vec<PathBuf> = (0..items.len()).map(|t| dir.join(sequence_name(prefix, t, "png"))).collect();
    exec.map(items.len(), |t| write(&items[t], &paths[t])).into_iter().collect::<Result<()>>()?;
    Ok(paths)
}

/// Writes `mask_00000.png`, `mask_00001.png`, … into `dir`.
pub fn write_mask_sequence(masks: &MaskVideo, dir: &Path, exec: Exec) -> Result<Vec<PathBuf>> {
    write_sequence(masks.frames(), dir, "mask", exec, write_mask)
}

/// Writes `{prefix}_00000.png`, … into `dir`.
pub fn write_color_sequence(video: &Video, dir: &Path, prefix: &str, exec: Exec) -> Result<Vec<PathBuf>> {
    write_sequence(video.frames(), dir, prefix, exec, write_frame)
}

/// Every `*.png` in `dir`, in name order.
pub fn read_frame_sequence(dir: &Path, exec: Exec) -> Result<Video> {
    let paths = list_files(dir, "png")?;
    let frames = exec.map(paths.len(), |t| read_frame(&paths[t])).into_iter().collect::<Result<Vec<_>>>()?;
    Video::new(frames)
}

/// Every `mask_*.png` in `dir`, in name order.
pub fn read_mask_sequence(dir: &Path, exec: Exec) -> Result<MaskVideo> {
    let paths: Vec<PathBuf> = list_files(dir, "png")?
        .into_iter()
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("mask_")))
        .collect();
    let masks = exec.map(paths.len(), |t| read_mask(&paths[t])).into_iter().collect::<Result<Vec<_>>>()?;
    MaskVideo::new(masks)
}
