//! Raster containers: depth maps, RGB frames, binary masks and sequences.
//!
//! All images are row-major with `(row, col)` addressing.

use crate::{Error, Result};

pub type Rgb = [u8; 3];

/// Positive z-depth field with cached extrema of the original signal.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    d_min: f64,
    d_max: f64,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "depth map {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        let mut d_min = f64::INFINITY;
        let mut d_max = f64::NEG_INFINITY;
        for (k, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonPositiveDepth { row: k / width, col: k % width, value: v });
            }
            d_min = d_min.min(v);
            d_max = d_max.max(v);
        }
        Ok(DepthMap { width, height, values, d_min, d_max })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        DepthMap::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.width + j]
    }

    /// Minimum of the original (pre-padding) values.
    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    /// Maximum of the original (pre-padding) values.
    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Replaces the values while keeping the cached extrema. Used by border
    /// padding, whose output still describes the original signal's range.
    pub(crate) fn with_values_keep_extrema(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        DepthMap { values, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "frame {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Frame { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Frame { width, height, pixels: vec![color; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                pixels.push(f(i, j));
            }
        }
        Frame { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> Rgb {
        self.pixels[i * self.width + j]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Binary visibility image: `true` = visible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "mask {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Mask { width, height, data })
    }

    pub fn filled(width: usize, height: usize, visible: bool) -> Self {
        Mask { width, height, data: vec![visible; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Mask { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.width + j]
    }

    pub fn set(&mut self, i: usize, j: usize, visible: bool) {
        self.data[i * self.width + j] = visible;
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn count_visible(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Pixelwise AND of visibility (union of the invisible regions).
    pub fn intersect(&self, other: &Mask) -> Result<Mask> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!("masks {:?} vs {:?}", self.dims(), other.dims())));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect();
        Ok(Mask { width: self.width, height: self.height, data })
    }
}

fn check_same_dims(dims: impl IntoIterator<Item = (usize, usize)>, what: &str) -> Result<()> {
    let mut it = dims.into_iter();
    if let Some(first) = it.next() {
        for (k, d) in it.enumerate() {
            if d != first {
                return Err(Error::DimensionMismatch(format!(
                    "{what} frame {} is {:?}, expected {:?}",
                    k + 1,
                    d,
                    first
                )));
            }
        }
    }
    Ok(())
}

/// Ordered RGB frames of identical dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Video {
    frames: Vec<Frame>,
}

impl Video {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        check_same_dims(frames.iter().map(Frame::dims), "video")?;
        Ok(Video { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(height, width)` of the frames, if any.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.frames.first().map(Frame::dims)
    }
}

/// Ordered binary visibility masks of identical dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MaskVideo {
    frames: Vec<Mask>,
}

impl MaskVideo {
    pub fn new(frames: Vec<Mask>) -> Result<Self> {
        check_same_dims(frames.iter().map(Mask::dims), "mask video")?;
        Ok(MaskVideo { frames })
    }

    pub fn frames(&self) -> &[Mask] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Mask> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.frames.first().map(Mask::dims)
    }
}
