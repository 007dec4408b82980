use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major pixels with interleaved channels: `data[(r * width + c) * channels + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidConfig("image dimensions must be >= 1".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidConfig(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "image pixels",
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image pixels"));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    fn set(&mut self, row: usize, col: usize, channel: usize, v: f64) {
        let w = self.width;
        let ch = self.channels;
        self.data[(row * w + col) * ch + channel] = v;
    }

    pub fn flip_horizontal(&self) -> ImageBuffer {
        let mut out = self.clone();
        for r in 0..self.height {
            for c in 0..self.width {
                for k in 0..self.channels {
                    out.set(r, self.width - 1 - c, k, self.get(r, c, k));
                }
            }
        }
        out
    }

    /// Subtracts a per-channel constant; a single value applies to every channel.
    pub fn subtract_mean(&self, mean: &[f64]) -> Result<ImageBuffer> {
        if mean.len() != 1 && mean.len() != self.channels {
            return Err(Error::DimensionMismatch {
                what: "mean pixel",
                expected: self.channels,
                got: mean.len(),
            });
        }
        let mut out = self.clone();
        for (i, v) in out.data.iter_mut().enumerate() {
            *v -= mean[if mean.len() == 1 { 0 } else { i % self.channels }];
        }
        Ok(out)
    }
}

/// Bilinear resampling with pixel centres at half-integer coordinates:
/// output index `i` reads source coordinate `(i + 0.5) * scale - 0.5`,
/// clamped to the image.
pub fn resize_bilinear(image: &ImageBuffer, height: usize, width: usize) -> Result<ImageBuffer> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidConfig("resize target must be >= 1".into()));
    }
    if height == image.height && width == image.width {
        return Ok(image.clone());
    }
    let rows = sample_positions(image.height, height);
    let cols = sample_positions(image.width, width);
    let ch = image.channels;
    let mut data = Vec::with_capacity(height * width * ch);
    for &(r0, r1, fr) in &rows {
        for &(c0, c1, fc) in &cols {
            for k in 0..ch {
                let top = image.get(r0, c0, k) * (1.0 - fc) + image.get(r0, c1, k) * fc;
                let bottom = image.get(r1, c0, k) * (1.0 - fc) + image.get(r1, c1, k) * fc;
                data.push(top * (1.0 - fr) + bottom * fr);
            }
        }
    }
    ImageBuffer::new(height, width, ch, data)
}

fn sample_positions(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, x - lo as f64)
        })
        .collect()
}
