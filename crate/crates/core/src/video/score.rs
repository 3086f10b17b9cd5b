use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::dtw::{abs_diff, dtw_distance, select_mode, Alignment};
use super::frame::{FrameSequence, GrayFrame, RgbFrame};
use super::ssim::{ssim_stats, FrameStats, SsimParams};
use crate::error::{config, contract, Error, Result};

/// Frame sampling rate used for both videos.
pub const DEFAULT_SAMPLE_FPS: f64 = 5.0;
/// Strictness of the structural score mapping.
pub const DEFAULT_STRICTNESS: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisualConfig {
    pub fps: f64,
    pub k: f64,
    pub ssim: SsimParams,
    /// Longest sequence still aligned with full dynamic programming.
    pub exact_limit: usize,
    pub fast_radius: usize,
}

impl Default for VisualConfig {
    fn default() -> Self {
        Self {
            fps: DEFAULT_SAMPLE_FPS,
            k: DEFAULT_STRICTNESS,
            ssim: SsimParams::default(),
            exact_limit: 512,
            fast_radius: 1,
        }
    }
}

impl VisualConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(config("fps must be positive"));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(config("k must be non-negative"));
        }
        self.ssim.validate()
    }
}

/// Row-major T × T̂ matrix; rows are generated frames, columns reference frames.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(contract("similarity matrix shape is invalid"));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }
}

/// Resizes generated frames to the reference size when they differ.
pub fn match_dimensions(gen: &[GrayFrame], reference: &GrayFrame) -> Vec<GrayFrame> {
    gen.iter().map(|g| g.resize(reference.width, reference.height)).collect()
}

/// SSIM of every (generated, reference) frame pair.
pub fn ssim_matrix(gen: &[GrayFrame], reference: &[GrayFrame], params: &SsimParams) -> Result<SimilarityMatrix> {
    if gen.is_empty() || reference.is_empty() {
        return Err(contract("ssim matrix needs non-empty frame lists"));
    }
    let gs: Vec<FrameStats> = gen.iter().map(|f| FrameStats::new(f, params)).collect();
    let rs: Vec<FrameStats> = reference.iter().map(|f| FrameStats::new(f, params)).collect();
    let mut values = Vec::with_capacity(gs.len() * rs.len());
    for g in &gs {
        for r in &rs {
            values.push(ssim_stats(g, r, params)?);
        }
    }
    SimilarityMatrix::from_values(gs.len(), rs.len(), values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchProfiles {
    /// Best match of each reference frame among generated frames (column maxima).
    pub ref_profile: Vec<f64>,
    /// Best match of each generated frame among reference frames (row maxima).
    pub gen_profile: Vec<f64>,
}

pub fn best_match_profiles(m: &SimilarityMatrix) -> MatchProfiles {
    let gen_profile = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m.get(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let ref_profile = (0..m.cols)
        .map(|j| (0..m.rows).map(|i| m.get(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    MatchProfiles { ref_profile, gen_profile }
}

/// `exp(-k * d / max(T, T̂))`.
pub fn strictness_map(distance: f64, k: f64, longest: usize) -> f64 {
    libm::exp(-k * distance / longest as f64)
}

/// Aligns the two profiles and maps the alignment cost into (0, 1].
pub fn structural_from_profiles(p: &MatchProfiles, cfg: &VisualConfig) -> Result<(f64, Alignment)> {
    let mode = select_mode(p.gen_profile.len(), p.ref_profile.len(), cfg.exact_limit, cfg.fast_radius);
    let al = dtw_distance(&p.gen_profile, &p.ref_profile, abs_diff, mode)?;
    let longest = p.gen_profile.len().max(p.ref_profile.len());
    Ok((strictness_map(al.distance, cfg.k, longest), al))
}

pub fn structural_score(gen: &FrameSequence, reference: &FrameSequence, cfg: &VisualConfig) -> Result<f64> {
    let gen_gray = match_dimensions(&gen.gray, &reference.gray[0]);
    let m = ssim_matrix(&gen_gray, &reference.gray, &cfg.ssim)?;
    Ok(structural_from_profiles(&best_match_profiles(&m), cfg)?.0)
}

/// Image encoder producing one vector per frame.
pub trait ImageEmbedder {
    type Error: From<Error>;

    fn embed_images(&self, frames: &[RgbFrame]) -> core::result::Result<Vec<Vec<f64>>, Self::Error>;
}

impl<T: ImageEmbedder + ?Sized> ImageEmbedder for &T {
    type Error = T::Error;

    fn embed_images(&self, frames: &[RgbFrame]) -> core::result::Result<Vec<Vec<f64>>, Self::Error> {
        (**self).embed_images(frames)
    }
}

/// Scales `v` to unit Euclidean norm.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
    if !norm.is_finite() {
        return Err(contract("embedding has a non-finite norm"));
    }
    if norm == 0.0 {
        return Err(contract("embedding has zero norm"));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

pub fn embed_frames<E: ImageEmbedder>(frames: &[RgbFrame], embedder: &E) -> core::result::Result<Vec<Vec<f64>>, E::Error> {
    let raw = embedder.embed_images(frames)?;
    if raw.len() != frames.len() {
        return Err(contract("image embedder returned the wrong number of vectors").into());
    }
    Ok(raw.iter().map(|v| normalize(v)).collect::<Result<Vec<_>>>()?)
}

/// `1 - <e, ê>`, floored at zero against rounding.
#[allow(clippy::ptr_arg)]
pub fn cosine_distance(a: &Vec<f64>, b: &Vec<f64>) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (1.0 - dot).max(0.0)
}

/// DTW over unit embeddings with cosine distance, mapped by `exp(-d / max(T, T̂))`.
pub fn semantic_score(gen: &[Vec<f64>], reference: &[Vec<f64>], cfg: &VisualConfig) -> Result<(f64, Alignment)> {
    if gen.is_empty() || reference.is_empty() {
        return Err(contract("semantic score needs non-empty embedding sequences"));
    }
    let dim = reference[0].len();
    if gen.iter().chain(reference).any(|v| v.len() != dim) {
        return Err(contract("embedding dimensions differ"));
    }
    let mode = select_mode(gen.len(), reference.len(), cfg.exact_limit, cfg.fast_radius);
    let al = dtw_distance(gen, reference, cosine_distance, mode)?;
    let longest = gen.len().max(reference.len());
    Ok((strictness_map(al.distance, 1.0, longest), al))
}

pub fn visual_reward(s_ssim: f64, s_sem: f64) -> f64 {
    libm::sqrt((s_ssim * s_sem).max(0.0)).min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualScoreBreakdown {
    pub s_ssim: f64,
    pub s_sem: f64,
    pub visual_reward: f64,
    pub k: f64,
    pub ssim_dtw: f64,
    pub sem_dtw: f64,
    pub gen_frames: usize,
    pub ref_frames: usize,
}

/// Structural and semantic comparison of two sampled videos.
pub fn score_videos<E: ImageEmbedder>(
    gen: &FrameSequence,
    reference: &FrameSequence,
    cfg: &VisualConfig,
    embedder: &E,
) -> core::result::Result<VisualScoreBreakdown, E::Error> {
    cfg.validate()?;
    let gen_gray = match_dimensions(&gen.gray, &reference.gray[0]);
    let m = ssim_matrix(&gen_gray, &reference.gray, &cfg.ssim)?;
    let gen_emb = embed_frames(&gen.rgb, embedder)?;
    let ref_emb = embed_frames(&reference.rgb, embedder)?;
    Ok(combine(&m, &gen_emb, &ref_emb, cfg)?)
}

/// Final assembly once the SSIM matrix and embeddings are available.
pub fn combine(m: &SimilarityMatrix, gen_emb: &[Vec<f64>], ref_emb: &[Vec<f64>], cfg: &VisualConfig) -> Result<VisualScoreBreakdown> {
    let (s_ssim, ssim_al) = structural_from_profiles(&best_match_profiles(m), cfg)?;
    let (s_sem, sem_al) = semantic_score(gen_emb, ref_emb, cfg)?;
    Ok(VisualScoreBreakdown {
        s_ssim,
        s_sem,
        visual_reward: visual_reward(s_ssim, s_sem),
        k: cfg.k,
        ssim_dtw: ssim_al.distance,
        sem_dtw: sem_al.distance,
        gen_frames: m.rows,
        ref_frames: m.cols,
    })
}

/// Block-averaged pixels hashed into a fixed number of buckets, plus a
/// constant bias component so that no frame maps to the zero vector.
#[derive(Clone, Debug)]
pub struct HashedImageEmbedder {
    pub dim: usize,
    pub grid: usize,
}

impl Default for HashedImageEmbedder {
    fn default() -> Self {
        Self { dim: 128, grid: 8 }
    }
}

impl HashedImageEmbedder {
    pub fn embed_one(&self, frame: &RgbFrame) -> Vec<f64> {
        let dim = self.dim.max(2);
        let grid = self.grid.max(1);
        let mut v = alloc::vec![0.0; dim];
        v[dim - 1] = 1.0;
        for gy in 0..grid {
            let (y0, y1) = (gy * frame.height / grid, ((gy + 1) * frame.height / grid).max(gy * frame.height / grid + 1));
            for gx in 0..grid {
                let (x0, x1) = (gx * frame.width / grid, ((gx + 1) * frame.width / grid).max(gx * frame.width / grid + 1));
                for c in 0..3 {
                    let mut sum = 0.0;
                    let mut count = 0.0;
                    for y in y0..y1.min(frame.height) {
                        for x in x0..x1.min(frame.width) {
                            sum += f64::from(frame.data[(y * frame.width + x) * 3 + c]);
                            count += 1.0;
                        }
                    }
                    let feature = (gy * grid + gx) * 3 + c;
                    let bucket = super::super::codemetrics::fnv1a(&(feature as u32).to_le_bytes()) as usize % (dim - 1);
                    if count > 0.0 {
                        v[bucket] += sum / count / 255.0;
                    }
                }
            }
        }
        v
    }
}

impl ImageEmbedder for HashedImageEmbedder {
    type Error = Error;

    fn embed_images(&self, frames: &[RgbFrame]) -> Result<Vec<Vec<f64>>> {
        Ok(frames.iter().map(|f| self.embed_one(f)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn seq(colors: &[[u8; 3]]) -> FrameSequence {
        let frames = colors
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut f = RgbFrame::solid(24, 16, *c);
                // a moving bright square so frames have structure
                for y in 2..8 {
                    for x in (i * 2)..(i * 2 + 6).min(24) {
                        let p = (y * 24 + x) * 3;
                        f.data[p..p + 3].copy_from_slice(&[250, 250, 250]);
                    }
                }
                f
            })
            .collect();
        FrameSequence::from_rgb(frames, 5.0, colors.len() as f64 / 5.0).unwrap()
    }

    #[test]
    fn identity_scores_one() {
        let s = seq(&[[10, 20, 30], [40, 50, 60], [70, 80, 90]]);
        let cfg = VisualConfig::default();
        let b = score_videos(&s, &s, &cfg, &HashedImageEmbedder::default()).unwrap();
        assert_eq!(b.s_ssim, 1.0);
        assert!((b.s_sem - 1.0).abs() < 1e-6);
        assert!((b.visual_reward - 1.0).abs() < 1e-6);
    }

    #[test]
    fn identical_sequences_give_unit_diagonal() {
        let s = seq(&[[10, 20, 30], [40, 50, 60], [70, 80, 90]]);
        let m = ssim_matrix(&s.gray, &s.gray, &SsimParams::default()).unwrap();
        for i in 0..3 {
            assert_eq!(m.get(i, i), 1.0);
        }
        let p = best_match_profiles(&m);
        assert_eq!(p.gen_profile, vec![1.0; 3]);
        assert_eq!(p.ref_profile, vec![1.0; 3]);
    }

    #[test]
    fn matrix_cells_match_pairwise_calls() {
        let a = seq(&[[0, 0, 0], [200, 10, 10]]);
        let b = seq(&[[5, 5, 5], [90, 90, 90], [255, 255, 255]]);
        let p = SsimParams::default();
        let m = ssim_matrix(&a.gray, &b.gray, &p).unwrap();
        assert_eq!((m.rows, m.cols), (2, 3));
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), super::super::ssim::ssim(&a.gray[i], &b.gray[j], &p).unwrap());
            }
        }
    }

    #[test]
    fn profile_example() {
        let m = SimilarityMatrix::from_values(2, 2, vec![0.2, 0.9, 0.5, 0.1]).unwrap();
        let p = best_match_profiles(&m);
        assert_eq!(p.gen_profile, vec![0.9, 0.5]);
        assert_eq!(p.ref_profile, vec![0.5, 0.9]);
        let one = SimilarityMatrix::from_values(1, 1, vec![0.3]).unwrap();
        assert_eq!(best_match_profiles(&one).gen_profile, vec![0.3]);
    }

    #[test]
    fn strictness_examples() {
        assert!((strictness_map(0.5, 5.0, 10) - 0.778_800_783_071_404_9).abs() < 1e-12);
        assert_eq!(strictness_map(3.0, 0.0, 4), 1.0);
    }

    #[test]
    fn semantic_examples() {
        let cfg = VisualConfig::default();
        let (s, _) = semantic_score(&[vec![1.0, 0.0]], &[vec![0.0, 1.0]], &cfg).unwrap();
        assert!((s - (-1.0f64).exp()).abs() < 1e-12);
        let (s, _) = semantic_score(&[vec![1.0, 0.0]], &[vec![-1.0, 0.0]], &cfg).unwrap();
        assert!((s - (-2.0f64).exp()).abs() < 1e-12);
        let e = vec![vec![0.6, 0.8], vec![1.0, 0.0]];
        assert_eq!(semantic_score(&e, &e, &cfg).unwrap().0, 1.0);
    }

    #[test]
    fn visual_reward_examples() {
        assert_eq!(visual_reward(1.0, 1.0), 1.0);
        assert_eq!(visual_reward(0.0, 0.4), 0.0);
        assert!((visual_reward(0.81, 0.49) - 0.63).abs() < 1e-12);
    }

    #[test]
    fn normalization_contract() {
        assert!(normalize(&[0.0, 0.0]).is_err());
        let v = normalize(&[3.0, 4.0]).unwrap();
        assert_eq!(v, vec![0.6, 0.8]);
        let black = RgbFrame::solid(8, 8, [0, 0, 0]);
        let e = embed_frames(&[black.clone(), black], &HashedImageEmbedder::default()).unwrap();
        assert_eq!(e[0], e[1]);
        assert!((e[0].iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn resolution_drift_is_tolerated() {
        let r = seq(&[[10, 20, 30], [40, 50, 60]]);
        let big: Vec<RgbFrame> = r
            .rgb
            .iter()
            .map(|f| {
                // nearest-neighbour 2x upscale
                let mut d = Vec::new();
                for y in 0..f.height * 2 {
                    for x in 0..f.width * 2 {
                        let p = ((y / 2) * f.width + x / 2) * 3;
                        d.extend_from_slice(&f.data[p..p + 3]);
                    }
                }
                RgbFrame::new(f.width * 2, f.height * 2, d).unwrap()
            })
            .collect();
        let g = FrameSequence::from_rgb(big, 5.0, 0.4).unwrap();
        let s = structural_score(&g, &r, &VisualConfig::default()).unwrap();
        assert!(s > 0.5 && s <= 1.0, "{s}");
    }

    proptest! {
        #[test]
        fn structural_monotone_in_k(d in 0.001f64..5.0, k in 0.0f64..10.0, dk in 0.001f64..3.0, n in 1usize..20) {
            let a = strictness_map(d, k, n);
            let b = strictness_map(d, k + dk, n);
            prop_assert!(b < a || (a == 0.0 && b == 0.0));
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!(strictness_map(d + dk, k.max(0.1), n) < strictness_map(d, k.max(0.1), n));
        }
    }
}
