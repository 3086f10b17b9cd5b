//! Gaussian-windowed structural similarity on 8-bit luma frames.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::frame::GrayFrame;
use crate::error::{config, contract, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, dynamic_range: 255.0 }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.window == 0 || !positive(self.sigma) || !positive(self.k1) || !positive(self.k2) || !positive(self.dynamic_range) {
            return Err(config("ssim parameters must be positive"));
        }
        Ok(())
    }

    pub fn c1(&self) -> f64 {
        let v = self.k1 * self.dynamic_range;
        v * v
    }

    pub fn c2(&self) -> f64 {
        let v = self.k2 * self.dynamic_range;
        v * v
    }

    /// Normalized 1-D Gaussian taps, truncated to `len` when the frame is
    /// smaller than the window.
    fn kernel(&self, len: usize) -> Vec<f64> {
        let n = self.window.min(len);
        let center = (n as f64 - 1.0) / 2.0;
        let mut k: Vec<f64> = (0..n)
            .map(|i| {
                let d = i as f64 - center;
                libm::exp(-(d * d) / (2.0 * self.sigma * self.sigma))
            })
            .collect();
        let sum: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= sum);
        k
    }
}

/// Separable "valid" filtering: output covers only full-window positions.
fn filter_valid(img: &[f64], width: usize, height: usize, kx: &[f64], ky: &[f64]) -> Vec<f64> {
    let ow = width + 1 - kx.len();
    let oh = height + 1 - ky.len();
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        let line = &img[y * width..(y + 1) * width];
        for x in 0..ow {
            rows[y * ow + x] = kx.iter().zip(&line[x..]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = ky.iter().enumerate().map(|(i, k)| k * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Per-frame filtered moments, reusable across every pairing of that frame.
#[derive(Clone, Debug)]
pub struct FrameStats {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    mean: Vec<f64>,
    variance: Vec<f64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
}

impl FrameStats {
    pub fn new(frame: &GrayFrame, params: &SsimParams) -> Self {
        let (w, h) = (frame.width, frame.height);
        let kx = params.kernel(w);
        let ky = params.kernel(h);
        let pixels: Vec<f64> = frame.data.iter().map(|&v| f64::from(v)).collect();
        let mean = filter_valid(&pixels, w, h, &kx, &ky);
        let sq: Vec<f64> = pixels.iter().map(|v| v * v).collect();
        let second = filter_valid(&sq, w, h, &kx, &ky);
        let variance = second.iter().zip(&mean).map(|(s, m)| s - m * m).collect();
        Self { width: w, height: h, pixels, mean, variance, kx, ky }
    }
}

/// SSIM from precomputed statistics.
pub fn ssim_stats(a: &FrameStats, b: &FrameStats, params: &SsimParams) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(contract("ssim needs frames of equal dimensions"));
    }
    let prod: Vec<f64> = a.pixels.iter().zip(&b.pixels).map(|(x, y)| x * y).collect();
    let cross = filter_valid(&prod, a.width, a.height, &a.kx, &a.ky);
    let (c1, c2) = (params.c1(), params.c2());
    let mut total = 0.0;
    for i in 0..cross.len() {
        let (ma, mb) = (a.mean[i], b.mean[i]);
        let cov = cross[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (a.variance[i] + b.variance[i] + c2);
        total += num / den;
    }
    Ok((total / cross.len() as f64).clamp(-1.0, 1.0))
}

/// Mean SSIM over all full window positions.
pub fn ssim(a: &GrayFrame, b: &GrayFrame, params: &SsimParams) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(contract("ssim needs frames of equal dimensions"));
    }
    ssim_stats(&FrameStats::new(a, params), &FrameStats::new(b, params), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct double loop over window positions with a 2-D kernel.
    fn oracle(a: &GrayFrame, b: &GrayFrame, p: &SsimParams) -> f64 {
        let kx = p.kernel(a.width);
        let ky = p.kernel(a.height);
        let (c1, c2) = (p.c1(), p.c2());
        let px = |f: &GrayFrame, x: usize, y: usize| f64::from(f.data[y * f.width + x]);
        let mut total = 0.0;
        let mut count = 0;
        for oy in 0..=a.height - ky.len() {
            for ox in 0..=a.width - kx.len() {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for (j, wy) in ky.iter().enumerate() {
                    for (i, wx) in kx.iter().enumerate() {
                        let w = wx * wy;
                        let (va, vb) = (px(a, ox + i, oy + j), px(b, ox + i, oy + j));
                        ma += w * va;
                        mb += w * vb;
                        saa += w * va * va;
                        sbb += w * vb * vb;
                        sab += w * va * vb;
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    fn frame(w: usize, h: usize) -> impl Strategy<Value = GrayFrame> {
        proptest::collection::vec(any::<u8>(), w * h).prop_map(move |d| GrayFrame::new(w, h, d).unwrap())
    }

    #[test]
    fn black_vs_white_closed_form() {
        let p = SsimParams::default();
        let v = ssim(&GrayFrame::solid(16, 16, 0), &GrayFrame::solid(16, 16, 255), &p).unwrap();
        let c1 = p.c1();
        let want = c1 / (255.0 * 255.0 + c1);
        assert!((v - want).abs() < 1e-15, "{v} vs {want}");
        assert!((want - 1.0e-4).abs() < 1e-6);
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let p = SsimParams::default();
        let k = p.kernel(100);
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(k[0], k[10]);
        assert_eq!(p.kernel(4).len(), 4);
    }

    #[test]
    fn dimension_mismatch() {
        let p = SsimParams::default();
        assert!(ssim(&GrayFrame::solid(4, 4, 0), &GrayFrame::solid(5, 4, 0), &p).is_err());
    }

    proptest! {
        #[test]
        fn self_similarity_and_symmetry(a in frame(13, 12), b in frame(13, 12)) {
            let p = SsimParams::default();
            prop_assert_eq!(ssim(&a, &a, &p).unwrap(), 1.0);
            let ab = ssim(&a, &b, &p).unwrap();
            let ba = ssim(&b, &a, &p).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
            prop_assert!((ab - oracle(&a, &b, &p)).abs() < 1e-9);
        }

        #[test]
        fn tiny_frames(a in frame(3, 2), b in frame(3, 2)) {
            let p = SsimParams::default();
            prop_assert_eq!(ssim(&a, &a, &p).unwrap(), 1.0);
            prop_assert!((ssim(&a, &b, &p).unwrap() - oracle(&a, &b, &p)).abs() < 1e-9);
        }
    }
}
