//! Generate-render-repair loop: vanilla single shot, renderer-in-the-loop
//! repair, and repair with retrieved API documentation.

mod prompt;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Display;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

pub use prompt::{
    build_prompt_initial, build_prompt_ritl, build_prompt_ritl_doc, fill_template, prompt_chars, PromptTemplates,
    DEFAULT_TEMPLATES, NO_CODE, NO_DOCS, NO_RENDER_OUTPUT,
};

use crate::codeblock::{extract_code, CodeSnippet};
use crate::docs::{extract_api_calls, retrieve_docs, KnowledgeBase, DEFAULT_DOC_BUDGET};
use crate::error::{config, Result};
use crate::render::{tail_lines, Quality, RenderRequest, RenderStatus, SceneRenderer, DEFAULT_TAIL_LINES, DEFAULT_TIMEOUT_SECS};

pub const NO_CODE_ERROR: &str = "no code block in model output";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_name: String,
    pub endpoint_url: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.2,
            max_tokens: 2048,
            model_name: "qwen3-coder-30b".into(),
            endpoint_url: "http://127.0.0.1:8000/v1/chat/completions".into(),
        }
    }
}

/// A chat-completion backend.
pub trait ChatModel {
    type Error;

    fn complete(&self, messages: &[ChatMessage], params: &GenerationParams) -> core::result::Result<String, Self::Error>;
}

impl<T: ChatModel + ?Sized> ChatModel for &T {
    type Error = T::Error;

    fn complete(&self, messages: &[ChatMessage], params: &GenerationParams) -> core::result::Result<String, Self::Error> {
        (**self).complete(messages, params)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    #[default]
    Vanilla,
    Ritl,
    RitlDoc,
}

impl FromStr for AgentMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(AgentMode::Vanilla),
            "ritl" => Ok(AgentMode::Ritl),
            "ritl_doc" | "ritl-doc" => Ok(AgentMode::RitlDoc),
            other => Err(config(alloc::format!("unknown agent mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub mode: AgentMode,
    /// Repair rounds after the initial attempt; ignored in vanilla mode.
    pub max_rounds: usize,
    pub doc_budget: usize,
    pub templates: PromptTemplates,
    pub error_tail_lines: usize,
    pub generation: GenerationParams,
    pub quality: Quality,
    pub render_timeout_secs: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            mode: AgentMode::Vanilla,
            max_rounds: 3,
            doc_budget: DEFAULT_DOC_BUDGET,
            templates: PromptTemplates::default(),
            error_tail_lines: DEFAULT_TAIL_LINES,
            generation: GenerationParams::default(),
            quality: Quality::Low,
            render_timeout_secs: DEFAULT_TIMEOUT_SECS,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.generation.max_tokens == 0 {
            return Err(config("max_tokens must be at least 1"));
        }
        if !(self.generation.temperature >= 0.0) {
            return Err(config("temperature must be non-negative"));
        }
        if self.error_tail_lines == 0 || self.doc_budget == 0 {
            return Err(config("error_tail_lines and doc_budget must be positive"));
        }
        if !(self.render_timeout_secs > 0.0) {
            return Err(config("render timeout must be positive"));
        }
        Ok(())
    }

    fn rounds(&self) -> usize {
        match self.mode {
            AgentMode::Vanilla => 0,
            _ => self.max_rounds,
        }
    }
}

/// One generate-and-render step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentIteration {
    pub code: Option<CodeSnippet>,
    pub status: RenderStatus,
    pub error_tail: String,
    pub prompt_chars: usize,
    pub docs_used: Vec<String>,
    pub video_path: Option<String>,
    /// Endpoint or renderer failure that ended the run.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub mode: AgentMode,
    pub iterations: Vec<AgentIteration>,
    pub final_code: Option<String>,
    pub final_status: RenderStatus,
    pub final_video: Option<String>,
    pub rounds_used: usize,
}

impl AgentTrace {
    pub fn renders(&self) -> usize {
        self.iterations.iter().filter(|i| i.code.is_some() && i.error.is_none()).count()
    }
}

/// Prompt for the next attempt given the previous one.
pub fn repair_prompt(
    description: &str,
    previous: &AgentIteration,
    config: &AgentConfig,
    kb: Option<&KnowledgeBase>,
) -> Result<(Vec<ChatMessage>, Vec<String>)> {
    let code = previous.code.as_ref().map_or("", |c| c.code.as_str());
    let tail = config.error_tail_lines;
    match config.mode {
        AgentMode::RitlDoc => {
            let kb = kb.ok_or_else(config_err)?;
            let names = extract_api_calls(code, kb);
            let bundle = retrieve_docs(&names, kb, config.doc_budget)?;
            let msgs = build_prompt_ritl_doc(description, code, &previous.error_tail, &bundle, &config.templates, tail);
            Ok((msgs, bundle.names))
        }
        _ => Ok((build_prompt_ritl(description, code, &previous.error_tail, &config.templates, tail), Vec::new())),
    }
}

fn config_err() -> crate::Error {
    config("ritl_doc mode needs a knowledge base")
}

/// Runs the loop for one description. Endpoint and renderer errors end the
/// run with a failed final status and the error stored on the last iteration.
pub fn run_agent<M, R>(
    description: &str,
    config: &AgentConfig,
    llm: &M,
    renderer: &R,
    kb: Option<&KnowledgeBase>,
) -> Result<AgentTrace>
where
    M: ChatModel,
    M::Error: Display,
    R: SceneRenderer,
    R::Error: Display,
{
    config.validate()?;
    if config.mode == AgentMode::RitlDoc && kb.is_none() {
        return Err(config_err());
    }
    let mut iterations: Vec<AgentIteration> = Vec::new();
    let mut messages = build_prompt_initial(description, &config.templates);
    let mut docs_used = Vec::new();
    for round in 0..=config.rounds() {
        if round > 0 {
            let (m, d) = repair_prompt(description, iterations.last().expect("previous iteration"), config, kb)?;
            messages = m;
            docs_used = d;
        }
        let mut it = AgentIteration {
            code: None,
            status: RenderStatus::Fail,
            error_tail: String::new(),
            prompt_chars: prompt_chars(&messages),
            docs_used: core::mem::take(&mut docs_used),
            video_path: None,
            error: None,
        };
        let completion = match llm.complete(&messages, &config.generation) {
            Ok(c) => c,
            Err(e) => {
                it.error = Some(alloc::format!("endpoint error: {e}"));
                iterations.push(it);
                break;
            }
        };
        let Some(snippet) = extract_code(&completion) else {
            it.error_tail = NO_CODE_ERROR.to_string();
            iterations.push(it);
            continue;
        };
        let request = RenderRequest {
            code: snippet.code.clone(),
            scene_name: None,
            quality: config.quality,
            timeout_secs: config.render_timeout_secs,
        };
        it.code = Some(snippet);
        match renderer.render(&request) {
            Ok(outcome) => {
                it.status = outcome.status;
                it.error_tail = tail_lines(&outcome.error_tail, config.error_tail_lines);
                it.video_path = outcome.video_path;
            }
            Err(e) => {
                it.error = Some(alloc::format!("renderer error: {e}"));
                iterations.push(it);
                break;
            }
        }
        let done = it.status.is_success();
        iterations.push(it);
        if done {
            break;
        }
    }
    let last = iterations.last().expect("at least one iteration");
    let final_status = if last.error.is_some() { RenderStatus::Fail } else { last.status };
    Ok(AgentTrace {
        mode: config.mode,
        final_code: iterations.iter().rev().find_map(|i| i.code.as_ref().map(|c| c.code.clone())),
        final_video: last.video_path.clone().filter(|_| final_status.is_success()),
        final_status,
        rounds_used: iterations.len(),
        iterations,
    })
}
