//! Unified reward: weighted sum of the text and visual rewards of one completion.

use serde::{Deserialize, Serialize};

use crate::codeblock::extract_code;
use crate::codemetrics::CodeScoreBreakdown;
use crate::error::{config, Error, Result};
use crate::render::RenderOutcome;
use crate::video::VisualScoreBreakdown;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub lambda_t: f64,
    pub lambda_v: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { lambda_t: 0.2, lambda_v: 0.8 }
    }
}

impl RewardWeights {
    pub fn new(lambda_t: f64, lambda_v: f64) -> Result<Self> {
        let w = Self { lambda_t, lambda_v };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.lambda_t) || !unit(self.lambda_v) {
            return Err(config("reward weights must lie in [0, 1]"));
        }
        if (self.lambda_t + self.lambda_v - 1.0).abs() > 1e-9 {
            return Err(config("reward weights must sum to 1"));
        }
        Ok(())
    }

    pub fn combine(&self, r_t: f64, r_v: f64) -> f64 {
        self.lambda_t * r_t + self.lambda_v * r_v
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardFailure {
    #[default]
    None,
    NoCodeExtracted,
    RenderFailed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_t: f64,
    pub r_v: f64,
    pub unified: f64,
    pub code_scores: Option<CodeScoreBreakdown>,
    pub visual_scores: Option<VisualScoreBreakdown>,
    pub failure: RewardFailure,
    pub render: Option<RenderOutcome>,
}

impl RewardBreakdown {
    pub fn no_code() -> Self {
        Self {
            r_t: 0.0,
            r_v: 0.0,
            unified: 0.0,
            code_scores: None,
            visual_scores: None,
            failure: RewardFailure::NoCodeExtracted,
            render: None,
        }
    }
}

/// A rendered candidate with its outcome, or the outcome of a failed render.
pub type CandidateRender<V> = core::result::Result<(V, RenderOutcome), RenderOutcome>;

/// The pieces the reward needs from the outside world: a code scorer, a
/// renderer for candidate code, and a video scorer. `Video` is whatever the
/// environment uses to hold a decoded clip.
pub trait RewardEnv {
    type Video;
    type Error: From<Error>;

    fn score_code(&self, gen: &str, reference: &str) -> core::result::Result<CodeScoreBreakdown, Self::Error>;

    /// Renders candidate code. `Ok(Err(outcome))` is a failed render of bad
    /// code; `Err` is an environment problem.
    fn render_candidate(
        &self,
        code: &str,
    ) -> core::result::Result<CandidateRender<Self::Video>, Self::Error>;

    fn score_video(&self, gen: &Self::Video, reference: &Self::Video) -> core::result::Result<VisualScoreBreakdown, Self::Error>;
}

/// Extracts code from `completion`, scores it against the reference code and
/// video, and combines the two rewards with `weights`.
pub fn unified_reward<E: RewardEnv>(
    completion: &str,
    ref_code: &str,
    ref_video: &E::Video,
    weights: &RewardWeights,
    env: &E,
) -> core::result::Result<RewardBreakdown, E::Error> {
    weights.validate()?;
    let Some(snippet) = extract_code(completion) else {
        return Ok(RewardBreakdown::no_code());
    };
    let code_scores = env.score_code(&snippet.code, ref_code)?;
    let r_t = code_scores.text_reward;
    match env.render_candidate(&snippet.code)? {
        Err(outcome) => Ok(RewardBreakdown {
            r_t,
            r_v: 0.0,
            unified: weights.combine(r_t, 0.0),
            code_scores: Some(code_scores),
            visual_scores: None,
            failure: RewardFailure::RenderFailed,
            render: Some(outcome),
        }),
        Ok((video, outcome)) => {
            let visual = env.score_video(&video, ref_video)?;
            let r_v = visual.visual_reward;
            Ok(RewardBreakdown {
                r_t,
                r_v,
                unified: weights.combine(r_t, r_v),
                code_scores: Some(code_scores),
                visual_scores: Some(visual),
                failure: RewardFailure::None,
                render: Some(outcome),
            })
        }
    }
}
