//! Evaluation runs: reference rendering, offline and agent-driven scoring,
//! and aggregation.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use manimkit_core::agent::{run_agent, AgentTrace, ChatModel};
use manimkit_core::codeblock::extract_code;
use manimkit_core::codemetrics::{score_code, CodeScoreBreakdown, KeywordSet};
use manimkit_core::docs::KnowledgeBase;
use manimkit_core::eval::{aggregate, AggregateReport, EvalRecord, FailureKind};
use manimkit_core::render::{Quality, RenderOutcome, RenderRequest, RenderStatus, SceneRenderer};
use manimkit_core::reward::{unified_reward, RewardBreakdown, RewardEnv};
use manimkit_core::video::{FrameSequence, VisualScoreBreakdown};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::dataset::DatasetRecord;
use crate::error::{io_err, KitError, KitResult};
use crate::media::{score_frame_sequences, Decoder};
use crate::providers::{CodeProvider, ImageProvider};
use crate::renderer::{render_key, ManimRenderer};

/// Everything a scoring run needs besides the model.
pub struct Services<R> {
    pub config: RunConfig,
    pub renderer: R,
    pub decoder: Decoder,
    pub code_embedder: CodeProvider,
    pub image_embedder: ImageProvider,
    pub keywords: KeywordSet,
}

impl Services<ManimRenderer> {
    /// Manim renderer writing candidate videos to `<cache_dir>/renders`.
    pub fn from_config(config: RunConfig) -> Self {
        let renderer = ManimRenderer::new(config.renderer.clone(), config.cache_dir.join("renders"));
        Self::with_renderer(config, renderer)
    }
}

impl<R> Services<R> {
    pub fn with_renderer(config: RunConfig, renderer: R) -> Self {
        Self {
            decoder: Decoder::new(config.decoder.clone()),
            code_embedder: CodeProvider::from_config(&config.code_embedder),
            image_embedder: ImageProvider::from_config(&config.image_embedder),
            keywords: KeywordSet::default(),
            renderer,
            config,
        }
    }

    pub fn sample(&self, video: &Path) -> KitResult<FrameSequence> {
        self.decoder.sample_frames(video, self.config.visual.fps)
    }

    /// Thread pool sized by `workers`.
    pub fn pool(&self) -> KitResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| KitError::Environment(format!("could not start worker pool: {e}")))
    }
}

impl<R: SceneRenderer<Error = KitError>> RewardEnv for Services<R> {
    type Video = FrameSequence;
    type Error = KitError;

    fn score_code(&self, gen: &str, reference: &str) -> KitResult<CodeScoreBreakdown> {
        score_code(gen, reference, &self.config.code_metrics, &self.keywords, &self.code_embedder)
    }

    fn render_candidate(&self, code: &str) -> KitResult<Result<(FrameSequence, RenderOutcome), RenderOutcome>> {
        let request = RenderRequest {
            code: code.to_string(),
            scene_name: None,
            quality: self.config.agent.quality,
            timeout_secs: self.config.agent.render_timeout_secs,
        };
        let outcome = self.renderer.render(&request)?;
        match outcome.video_path.as_deref().filter(|_| outcome.status.is_success()) {
            Some(v) => Ok(Ok((self.sample(Path::new(v))?, outcome))),
            None => Ok(Err(outcome)),
        }
    }

    fn score_video(&self, gen: &FrameSequence, reference: &FrameSequence) -> KitResult<VisualScoreBreakdown> {
        score_frame_sequences(gen, reference, &self.config.visual, &self.image_embedder)
    }
}

/// Renders every reference not already cached under `cache_dir` and fills
/// `reference_video`. Returns the records and the number of renders run.
pub fn precompute_references<R: SceneRenderer<Error = KitError> + Sync>(
    records: &[DatasetRecord],
    renderer: &R,
    cache_dir: &Path,
    quality: Quality,
    timeout_secs: f64,
) -> KitResult<(Vec<DatasetRecord>, usize)> {
    let dir = cache_dir.join("references");
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let target = |r: &DatasetRecord| dir.join(format!("{}.mp4", render_key(&r.reference_code, quality)));
    let cached = |p: &PathBuf| std::fs::metadata(p).is_ok_and(|m| m.len() > 0);
    let mut todo: Vec<&DatasetRecord> = Vec::new();
    let mut keys = std::collections::HashSet::new();
    for r in records {
        let t = target(r);
        if r.reference_video.is_none() && !cached(&t) && keys.insert(t) {
            todo.push(r);
        }
    }
    let results: Vec<(String, KitResult<RenderOutcome>)> = todo
        .par_iter()
        .map(|r| {
            let req = RenderRequest { code: r.reference_code.clone(), scene_name: None, quality, timeout_secs };
            (r.id.clone(), renderer.render(&req))
        })
        .collect();
    let mut bad = Vec::new();
    for ((id, res), r) in results.into_iter().zip(&todo) {
        match res? {
            RenderOutcome { status: RenderStatus::Success, video_path: Some(v), .. } => {
                let t = target(r);
                std::fs::copy(&v, &t).map_err(io_err(&v))?;
            }
            o => bad.push(format!("{id} ({}: {})", o.status.as_str(), o.error_tail.lines().last().unwrap_or(""))),
        }
    }
    if !bad.is_empty() {
        return Err(KitError::Dataset(format!("reference code failed to render: {}", bad.join("; "))));
    }
    let out = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if r.reference_video.is_none() {
                r.reference_video = Some(target(&r));
            }
            r
        })
        .collect();
    Ok((out, todo.len()))
}

fn reference_video(r: &DatasetRecord) -> KitResult<&Path> {
    r.reference_video
        .as_deref()
        .ok_or_else(|| KitError::Dataset(format!("record {:?} has no reference video; precompute references first", r.id)))
}

fn failure_of(e: &KitError) -> FailureKind {
    match e {
        KitError::Endpoint(_) => FailureKind::EndpointError,
        _ => FailureKind::RendererError,
    }
}

/// One record scored from a completion string.
pub fn evaluate_completion<R: SceneRenderer<Error = KitError>>(
    record: &DatasetRecord,
    completion: &str,
    services: &Services<R>,
) -> KitResult<(EvalRecord, RewardBreakdown)> {
    let ref_video = services.sample(reference_video(record)?)?;
    let b = unified_reward(completion, &record.reference_code, &ref_video, &services.config.reward, services)?;
    let code = extract_code(completion).map(|s| s.code);
    Ok((EvalRecord::from_reward(record.id.clone(), code, &b, 1), b))
}

/// Scores pre-generated completions. A record without a completion counts as
/// a run that produced no code; per-record errors become failed records.
pub fn evaluate_offline<R: SceneRenderer<Error = KitError> + Sync>(
    records: &[DatasetRecord],
    completions: &HashMap<String, String>,
    services: &Services<R>,
) -> KitResult<AggregateReport> {
    for r in records {
        reference_video(r)?;
    }
    let evals: Vec<EvalRecord> = services.pool()?.install(|| {
        records
            .par_iter()
            .map(|r| match completions.get(&r.id) {
                None => EvalRecord::failed(r.id.clone(), FailureKind::NoCodeExtracted, "no completion for this id"),
                Some(c) => match evaluate_completion(r, c, services) {
                    Ok((e, _)) => e,
                    Err(e) => EvalRecord::failed(r.id.clone(), failure_of(&e), e.to_string()),
                },
            })
            .collect()
    });
    Ok(aggregate(evals)?)
}

fn score_trace<R: SceneRenderer<Error = KitError>>(
    record: &DatasetRecord,
    trace: &AgentTrace,
    services: &Services<R>,
) -> KitResult<EvalRecord> {
    let last = trace.iterations.last();
    if let Some(err) = last.and_then(|i| i.error.as_deref()) {
        let kind = if err.starts_with("endpoint") { FailureKind::EndpointError } else { FailureKind::RendererError };
        let mut e = EvalRecord::failed(record.id.clone(), kind, err);
        e.rounds_used = trace.rounds_used;
        return Ok(e);
    }
    let Some(code) = trace.final_code.clone() else {
        let mut e = EvalRecord::failed(record.id.clone(), FailureKind::NoCodeExtracted, "no code in any round");
        e.rounds_used = trace.rounds_used;
        return Ok(e);
    };
    let cbb = services.score_code(&code, &record.reference_code)?.text_reward;
    let (vs, failure) = match (trace.final_status, trace.final_video.as_deref()) {
        (RenderStatus::Success, Some(v)) => {
            let refv = services.sample(reference_video(record)?)?;
            (services.score_video(&services.sample(Path::new(v))?, &refv)?.visual_reward, FailureKind::None)
        }
        (RenderStatus::Timeout, _) => (0.0, FailureKind::RenderTimeout),
        _ => (0.0, FailureKind::RenderFailed),
    };
    Ok(EvalRecord {
        id: record.id.clone(),
        final_code: Some(code),
        render_status: trace.final_status,
        vs,
        cbb,
        rounds_used: trace.rounds_used,
        failure,
        error: None,
    })
}

/// Runs the agent on each description and scores its final program.
pub fn evaluate_live<M, R>(
    records: &[DatasetRecord],
    services: &Services<R>,
    llm: &M,
    kb: Option<&KnowledgeBase>,
) -> KitResult<(AggregateReport, Vec<AgentTrace>)>
where
    M: ChatModel<Error = KitError> + Sync,
    R: SceneRenderer<Error = KitError> + Sync,
{
    for r in records {
        reference_video(r)?;
    }
    let rows: Vec<(EvalRecord, AgentTrace)> = services.pool()?.install(|| {
        records
            .par_iter()
            .map(|r| {
                let trace = run_agent(&r.description, &services.config.agent, llm, &services.renderer, kb)?;
                let e = score_trace(r, &trace, services)
                    .unwrap_or_else(|e| EvalRecord::failed(r.id.clone(), failure_of(&e), e.to_string()));
                Ok((e, trace))
            })
            .collect::<KitResult<_>>()
    })?;
    let (evals, traces) = rows.into_iter().unzip();
    Ok((aggregate(evals)?, traces))
}
