use alloc::vec::Vec;

use crate::error::{contract, Result};

/// Packed 8-bit RGB, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

/// 8-bit luma, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height * 3 {
            return Err(contract("rgb frame buffer does not match its dimensions"));
        }
        Ok(Self { width, height, data })
    }

    pub fn solid(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self { width, height, data }
    }

    /// Rec. 601 luma, rounded.
    pub fn to_gray(&self) -> GrayFrame {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| {
                let y = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
                libm::round(y).clamp(0.0, 255.0) as u8
            })
            .collect();
        GrayFrame { width: self.width, height: self.height, data }
    }
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(contract("gray frame buffer does not match its dimensions"));
        }
        Ok(Self { width, height, data })
    }

    pub fn solid(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, data: alloc::vec![value; width * height] }
    }

    /// Bilinear resampling with pixel-center alignment.
    pub fn resize(&self, width: usize, height: usize) -> GrayFrame {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let ty = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let tx = fx - x0 as f64;
                let px = |xx: usize, yy: usize| f64::from(self.data[yy * self.width + xx]);
                let top = px(x0, y0) * (1.0 - tx) + px(x1, y0) * tx;
                let bottom = px(x0, y1) * (1.0 - tx) + px(x1, y1) * tx;
                let v = top * (1.0 - ty) + bottom * ty;
                data.push(libm::round(v).clamp(0.0, 255.0) as u8);
            }
        }
        GrayFrame { width, height, data }
    }
}

/// Frames sampled at a fixed rate, in color and luma.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    pub gray: Vec<GrayFrame>,
    pub rgb: Vec<RgbFrame>,
    pub timestamps: Vec<f64>,
    pub sample_fps: f64,
    pub source_duration: f64,
}

impl FrameSequence {
    /// Builds a sequence from color frames taken at `k / fps` seconds.
    pub fn from_rgb(rgb: Vec<RgbFrame>, sample_fps: f64, source_duration: f64) -> Result<Self> {
        if rgb.is_empty() {
            return Err(contract("a frame sequence needs at least one frame"));
        }
        if !(sample_fps > 0.0) || !sample_fps.is_finite() {
            return Err(contract("sample fps must be positive"));
        }
        let gray = rgb.iter().map(RgbFrame::to_gray).collect();
        let timestamps = (0..rgb.len()).map(|i| i as f64 / sample_fps).collect();
        Ok(Self { gray, rgb, timestamps, sample_fps, source_duration })
    }

    pub fn len(&self) -> usize {
        self.gray.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gray.is_empty()
    }
}

/// Number of samples taken from a clip: one per `1/fps` interval starting at
/// zero, never fewer than one.
pub fn expected_frame_count(duration: f64, fps: f64) -> usize {
    let n = libm::floor(duration * fps + 1e-9);
    if n.is_finite() && n >= 1.0 {
        n as usize
    } else {
        1
    }
}
