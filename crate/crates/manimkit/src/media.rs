//! Frame sampling through an ffmpeg child process, and the parallel parts of
//! visual scoring.

use std::path::Path;
use std::process::{Command, Stdio};

use manimkit_core::video::{
    combine, embed_frames, expected_frame_count, match_dimensions, ssim_stats, FrameSequence, FrameStats, GrayFrame,
    ImageEmbedder, RgbFrame, SimilarityMatrix, SsimParams, VisualConfig, VisualScoreBreakdown,
};
use rayon::prelude::*;

use crate::config::DecoderConfig;
use crate::error::{KitError, KitResult};

/// What ffmpeg reports about an input before decoding.
#[derive(Clone, Debug, PartialEq)]
pub struct MediaInfo {
    pub duration: Option<f64>,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Decoder {
    pub config: DecoderConfig,
}

fn spawn_error(exe: &str, e: std::io::Error) -> KitError {
    if e.kind() == std::io::ErrorKind::NotFound {
        KitError::Environment(format!("decoder executable `{exe}` not found"))
    } else {
        KitError::Environment(format!("could not run `{exe}`: {e}"))
    }
}

fn last_lines(text: &str) -> String {
    manimkit_core::render::tail_lines(text.trim(), 5)
}

/// Parses `HH:MM:SS.xx`.
fn parse_clock(s: &str) -> Option<f64> {
    let mut parts = s.trim().split(':');
    let h: f64 = parts.next()?.parse().ok()?;
    let m: f64 = parts.next()?.parse().ok()?;
    let sec: f64 = parts.next()?.parse().ok()?;
    Some(h * 3600.0 + m * 60.0 + sec)
}

/// Reads duration and frame size from ffmpeg's input banner.
pub fn parse_media_info(banner: &str) -> Option<MediaInfo> {
    let duration = banner
        .lines()
        .find_map(|l| l.trim().strip_prefix("Duration:"))
        .and_then(|rest| parse_clock(rest.split(',').next()?));
    let video = banner.lines().find(|l| l.contains("Stream #") && l.contains("Video:"))?;
    let after = &video[video.find("Video:")? + 6..];
    let (width, height) = after.split(',').find_map(|part| {
        let word = part.split_whitespace().next()?;
        let (w, h) = word.split_once('x')?;
        Some((w.parse().ok()?, h.parse().ok()?))
    })?;
    Some(MediaInfo { duration, width, height })
}

impl Decoder {
    pub fn new(config: DecoderConfig) -> Self {
        Self { config }
    }

    pub fn probe(&self, path: &Path) -> KitResult<MediaInfo> {
        if !path.is_file() {
            return Err(KitError::Media(format!("{}: no such file", path.display())));
        }
        let exe = &self.config.executable;
        let out = Command::new(exe)
            .args(["-hide_banner", "-nostdin", "-i"])
            .arg(path)
            .stdin(Stdio::null())
            .output()
            .map_err(|e| spawn_error(exe, e))?;
        let banner = String::from_utf8_lossy(&out.stderr);
        parse_media_info(&banner)
            .ok_or_else(|| KitError::Media(format!("{}: not a decodable video\n{}", path.display(), last_lines(&banner))))
    }

    fn raw_frames(&self, path: &Path, filter: &str, single: bool, width: usize, height: usize) -> KitResult<Vec<RgbFrame>> {
        let exe = &self.config.executable;
        let mut cmd = Command::new(exe);
        cmd.args(["-v", "error", "-nostdin", "-i"]).arg(path);
        if !filter.is_empty() {
            cmd.args(["-vf", filter]);
        }
        if single {
            cmd.args(["-frames:v", "1"]);
        }
        cmd.args(["-f", "rawvideo", "-pix_fmt", "rgb24", "pipe:1"]);
        let out = cmd.stdin(Stdio::null()).output().map_err(|e| spawn_error(exe, e))?;
        if !out.status.success() {
            return Err(KitError::Media(format!(
                "{}: decoding failed\n{}",
                path.display(),
                last_lines(&String::from_utf8_lossy(&out.stderr))
            )));
        }
        let size = width * height * 3;
        Ok(out.stdout.chunks_exact(size).map(|c| RgbFrame { width, height, data: c.to_vec() }).collect())
    }

    /// Frames at `k / fps` seconds for `k = 0 .. floor(duration * fps)`, at
    /// least one.
    pub fn sample_frames(&self, path: &Path, fps: f64) -> KitResult<FrameSequence> {
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(manimkit_core::Error::Contract("fps must be positive".into()).into());
        }
        let info = self.probe(path)?;
        let (width, height, scale) = match (self.config.width, self.config.height) {
            (Some(w), Some(h)) => (w, h, format!(",scale={w}:{h}:flags=area")),
            _ => (info.width, info.height, String::new()),
        };
        let mut frames = self.raw_frames(path, &format!("fps={fps}{scale}"), false, width, height)?;
        if frames.is_empty() {
            frames = self.raw_frames(path, scale.trim_start_matches(','), true, width, height)?;
        }
        if frames.is_empty() {
            return Err(KitError::Media(format!("{}: decoder produced no frames", path.display())));
        }
        let duration = info.duration.unwrap_or(frames.len() as f64 / fps);
        let wanted = expected_frame_count(duration, fps);
        if frames.len() > wanted {
            frames.truncate(wanted);
        } else if frames.len() < wanted {
            log::debug!("{}: decoded {} of {} expected frames", path.display(), frames.len(), wanted);
        }
        Ok(FrameSequence::from_rgb(frames, fps, duration)?)
    }
}

/// Same result as the sequential matrix, with frames and rows spread over
/// the rayon pool.
pub fn ssim_matrix_par(gen: &[GrayFrame], reference: &[GrayFrame], params: &SsimParams) -> KitResult<SimilarityMatrix> {
    if gen.is_empty() || reference.is_empty() {
        return Err(manimkit_core::Error::Contract("ssim matrix needs non-empty frame lists".into()).into());
    }
    let gs: Vec<FrameStats> = gen.par_iter().map(|f| FrameStats::new(f, params)).collect();
    let rs: Vec<FrameStats> = reference.par_iter().map(|f| FrameStats::new(f, params)).collect();
    let rows: Vec<Vec<f64>> = gs
        .par_iter()
        .map(|g| rs.iter().map(|r| ssim_stats(g, r, params)).collect::<Result<Vec<f64>, _>>())
        .collect::<Result<_, _>>()?;
    Ok(SimilarityMatrix::from_values(gs.len(), rs.len(), rows.concat())?)
}

/// Visual scores of two sampled videos.
pub fn score_frame_sequences<E>(
    gen: &FrameSequence,
    reference: &FrameSequence,
    cfg: &VisualConfig,
    embedder: &E,
) -> KitResult<VisualScoreBreakdown>
where
    E: ImageEmbedder<Error = KitError>,
{
    cfg.validate()?;
    let gen_gray = match_dimensions(&gen.gray, &reference.gray[0]);
    let m = ssim_matrix_par(&gen_gray, &reference.gray, &cfg.ssim)?;
    let gen_emb = embed_frames(&gen.rgb, embedder)?;
    let ref_emb = embed_frames(&reference.rgb, embedder)?;
    Ok(combine(&m, &gen_emb, &ref_emb, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use manimkit_core::video::ssim_matrix;

    const BANNER: &str = "Input #0, mov,mp4,m4a,3gp,3g2,mj2, from 'a.mp4':
  Metadata:
    major_brand     : isom
  Duration: 00:00:02.00, start: 0.000000, bitrate: 27 kb/s
  Stream #0:0[0x1](und): Video: h264 (High) (avc1 / 0x31637661), yuv420p(progressive), 854x480 [SAR 1:1 DAR 427:240], 23 kb/s, 15 fps, 15 tbr, 15360 tbn (default)
At least one output file must be specified";

    #[test]
    fn banner_parsing() {
        let info = parse_media_info(BANNER).unwrap();
        assert_eq!(info, MediaInfo { duration: Some(2.0), width: 854, height: 480 });
        assert_eq!(parse_clock("01:02:03.5"), Some(3723.5));
        assert!(parse_media_info("a.mp4: Invalid data found when processing input").is_none());
        let na = BANNER.replace("00:00:02.00", "N/A");
        assert_eq!(parse_media_info(&na).unwrap().duration, None);
    }

    fn noise(seed: u64, w: usize, h: usize) -> GrayFrame {
        let mut s = seed;
        let data = (0..w * h)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as u8
            })
            .collect();
        GrayFrame { width: w, height: h, data }
    }

    #[test]
    fn parallel_matrix_matches_sequential() {
        let a: Vec<GrayFrame> = (0..3).map(|i| noise(i, 24, 16)).collect();
        let b: Vec<GrayFrame> = (10..14).map(|i| noise(i, 24, 16)).collect();
        let p = SsimParams::default();
        assert_eq!(ssim_matrix_par(&a, &b, &p).unwrap(), ssim_matrix(&a, &b, &p).unwrap());
        assert!(ssim_matrix_par(&[], &b, &p).is_err());
    }

    #[test]
    fn missing_input_is_a_media_error() {
        let err = Decoder::default().sample_frames(Path::new("/nonexistent/x.mp4"), 5.0).unwrap_err();
        assert!(matches!(err, KitError::Media(_)));
    }
}
