//! Per-record evaluation results and their aggregation into percentages and
//! rank correlations.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::render::RenderStatus;
use crate::reward::{RewardBreakdown, RewardFailure};
use crate::stats::{kendall_tau, spearman_rho};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    None,
    NoCodeExtracted,
    RenderFailed,
    RenderTimeout,
    EndpointError,
    RendererError,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::None => "none",
            FailureKind::NoCodeExtracted => "no_code_extracted",
            FailureKind::RenderFailed => "render_failed",
            FailureKind::RenderTimeout => "render_timeout",
            FailureKind::EndpointError => "endpoint_error",
            FailureKind::RendererError => "renderer_error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub final_code: Option<String>,
    pub render_status: RenderStatus,
    /// Visual similarity in [0, 1]; zero unless the render succeeded.
    pub vs: f64,
    /// Text reward in [0, 1].
    pub cbb: f64,
    pub rounds_used: usize,
    pub failure: FailureKind,
    pub error: Option<String>,
}

impl EvalRecord {
    /// A record for a run that broke before scoring.
    pub fn failed(id: impl Into<String>, failure: FailureKind, error: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            final_code: None,
            render_status: RenderStatus::Fail,
            vs: 0.0,
            cbb: 0.0,
            rounds_used: 0,
            failure,
            error: Some(error.into()),
        }
    }

    pub fn from_reward(id: impl Into<String>, final_code: Option<String>, reward: &RewardBreakdown, rounds_used: usize) -> Self {
        let render_status = reward.render.as_ref().map_or(RenderStatus::Fail, |r| r.status);
        let failure = match reward.failure {
            RewardFailure::None => FailureKind::None,
            RewardFailure::NoCodeExtracted => FailureKind::NoCodeExtracted,
            RewardFailure::RenderFailed if render_status == RenderStatus::Timeout => FailureKind::RenderTimeout,
            RewardFailure::RenderFailed => FailureKind::RenderFailed,
        };
        let success = render_status.is_success();
        Self {
            id: id.into(),
            final_code,
            render_status,
            vs: if success { reward.r_v } else { 0.0 },
            cbb: reward.r_t,
            rounds_used,
            failure,
            error: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub spearman_rho: f64,
    pub kendall_tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    /// Percentages, rounded to one decimal.
    pub mean_vs: f64,
    pub mean_cbb: f64,
    pub rsr: f64,
    pub n: usize,
    pub per_record: Vec<EvalRecord>,
    /// Absent with fewer than two records.
    pub correlations: Option<Correlations>,
}

pub fn round1(v: f64) -> f64 {
    libm::round(v * 10.0) / 10.0
}

/// Means over every record (failures count as zero), success rate, and the
/// rank correlations between the two scores.
pub fn aggregate(records: Vec<EvalRecord>) -> Result<AggregateReport> {
    if records.is_empty() {
        return Err(contract("cannot aggregate an empty run"));
    }
    let n = records.len();
    let nf = n as f64;
    let success = records.iter().filter(|r| r.render_status.is_success()).count();
    let vs: Vec<f64> = records.iter().map(|r| if r.render_status.is_success() { r.vs } else { 0.0 }).collect();
    let cbb: Vec<f64> = records.iter().map(|r| r.cbb).collect();
    let correlations = if n >= 2 {
        Some(Correlations { spearman_rho: spearman_rho(&vs, &cbb)?, kendall_tau: kendall_tau(&vs, &cbb)? })
    } else {
        None
    };
    Ok(AggregateReport {
        mean_vs: round1(100.0 * vs.iter().sum::<f64>() / nf),
        mean_cbb: round1(100.0 * cbb.iter().sum::<f64>() / nf),
        rsr: round1(100.0 * success as f64 / nf),
        n,
        per_record: records,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn rec(id: &str, ok: bool, vs: f64, cbb: f64) -> EvalRecord {
        EvalRecord {
            id: id.to_string(),
            final_code: None,
            render_status: if ok { RenderStatus::Success } else { RenderStatus::Fail },
            vs,
            cbb,
            rounds_used: 1,
            failure: if ok { FailureKind::None } else { FailureKind::RenderFailed },
            error: None,
        }
    }

    #[test]
    fn mixed_outcomes() {
        let r = aggregate(vec![
            rec("a", true, 0.9, 0.8),
            rec("b", true, 0.5, 0.6),
            rec("c", false, 0.7, 0.4),
            rec("d", false, 0.0, 0.0),
        ])
        .unwrap();
        // vs: (0.9 + 0.5 + 0 + 0) / 4, failed vs is zero-filled
        assert_eq!(r.mean_vs, 35.0);
        assert_eq!(r.mean_cbb, 45.0);
        assert_eq!(r.rsr, 50.0);
        assert_eq!(r.n, 4);
        assert!(r.correlations.is_some());
    }

    #[test]
    fn rounding() {
        assert_eq!(round1(33.333), 33.3);
        assert_eq!(round1(66.666), 66.7);
        let r = aggregate(vec![rec("a", true, 1.0, 1.0), rec("b", false, 0.0, 0.0), rec("c", false, 0.0, 0.0)]).unwrap();
        assert_eq!(r.rsr, 33.3);
    }

    #[test]
    fn single_and_empty() {
        assert!(aggregate(vec![]).is_err());
        assert!(aggregate(vec![rec("a", true, 1.0, 1.0)]).unwrap().correlations.is_none());
    }
}
