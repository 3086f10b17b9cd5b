//! Visual similarity between two sampled videos: SSIM matrix, best-match
//! profiles, time warping, and an embedding-based semantic track.

mod dtw;
mod frame;
mod score;
mod ssim;

pub use dtw::{abs_diff, dtw_distance, euclidean, select_mode, Alignment, Coarsen, DtwMode};
pub use frame::{expected_frame_count, FrameSequence, GrayFrame, RgbFrame};
pub use score::{
    best_match_profiles, combine, cosine_distance, embed_frames, match_dimensions, normalize, score_videos,
    semantic_score, ssim_matrix, strictness_map, structural_from_profiles, structural_score, visual_reward,
    HashedImageEmbedder, ImageEmbedder, MatchProfiles, SimilarityMatrix, VisualConfig, VisualScoreBreakdown,
    DEFAULT_SAMPLE_FPS, DEFAULT_STRICTNESS,
};
pub use ssim::{ssim, ssim_stats, FrameStats, SsimParams};
