//! Render request/outcome values, scene detection and error-tail truncation.
//! The process-spawning renderer lives in the `manimkit` crate.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::lexer::{lex, RawKind};

pub const DEFAULT_TAIL_LINES: usize = 10;
pub const DEFAULT_TIMEOUT_SECS: f64 = 120.0;
pub const NO_SCENE_ERROR: &str = "no Scene subclass found";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    #[default]
    Low,
    Medium,
    High,
}

impl Quality {
    /// Manim's single-letter quality flag.
    pub fn flag(self) -> &'static str {
        match self {
            Quality::Low => "-ql",
            Quality::Medium => "-qm",
            Quality::High => "-qh",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Low => "low",
            Quality::Medium => "medium",
            Quality::High => "high",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderStatus {
    Success,
    Fail,
    Timeout,
}

impl RenderStatus {
    pub fn is_success(self) -> bool {
        self == RenderStatus::Success
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RenderStatus::Success => "success",
            RenderStatus::Fail => "fail",
            RenderStatus::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderRequest {
    pub code: String,
    pub scene_name: Option<String>,
    pub quality: Quality,
    pub timeout_secs: f64,
}

impl RenderRequest {
    pub fn new(code: impl Into<String>) -> Self {
        Self { code: code.into(), scene_name: None, quality: Quality::Low, timeout_secs: DEFAULT_TIMEOUT_SECS }
    }

    /// Explicit scene name, else the detected one.
    pub fn resolved_scene(&self) -> Option<String> {
        self.scene_name.clone().or_else(|| detect_scene(&self.code))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderOutcome {
    pub status: RenderStatus,
    pub error_tail: String,
    pub video_path: Option<String>,
    pub wall_time: f64,
}

impl RenderOutcome {
    pub fn success(video_path: impl Into<String>, wall_time: f64) -> Self {
        Self { status: RenderStatus::Success, error_tail: String::new(), video_path: Some(video_path.into()), wall_time }
    }

    /// A failed or timed-out outcome; `output` is cut to its last ten lines.
    pub fn failed(status: RenderStatus, output: &str, wall_time: f64) -> Self {
        Self { status, error_tail: tail_lines(output, DEFAULT_TAIL_LINES), video_path: None, wall_time }
    }
}

/// Something that turns scene code into a video. `Err` is reserved for
/// environment problems (missing executable, unwritable cache); bad user
/// code is a `Fail` outcome.
pub trait SceneRenderer {
    type Error;

    fn render(&self, request: &RenderRequest) -> core::result::Result<RenderOutcome, Self::Error>;
}

impl<T: SceneRenderer + ?Sized> SceneRenderer for &T {
    type Error = T::Error;

    fn render(&self, request: &RenderRequest) -> core::result::Result<RenderOutcome, Self::Error> {
        (**self).render(request)
    }
}

/// The last `n` lines of `text`, in order. A trailing newline does not count
/// as an extra empty line.
pub fn tail_lines(text: &str, n: usize) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.len().saturating_sub(n.max(1));
    lines[start..].join("\n")
}

/// Name of the first class that lists a base whose identifier ends in `Scene`.
pub fn detect_scene(code: &str) -> Option<String> {
    let lexed = lex(code);
    let toks = &lexed.tokens;
    let text = |i: usize| &code[toks[i].start..toks[i].end];
    let mut i = 0;
    while i + 2 < toks.len() {
        let is_class = toks[i].kind == RawKind::Name && text(i) == "class";
        if is_class && toks[i + 1].kind == RawKind::Name && toks[i + 2].kind == RawKind::Op && text(i + 2) == "(" {
            let name = text(i + 1);
            let mut depth = 1;
            let mut j = i + 3;
            let mut found = false;
            while j < toks.len() && depth > 0 {
                match (toks[j].kind, text(j)) {
                    (RawKind::Op, "(" | "[" | "{") => depth += 1,
                    (RawKind::Op, ")" | "]" | "}") => depth -= 1,
                    (RawKind::Name, t) if t.ends_with("Scene") => {
                        // keyword arguments such as metaclass= are not bases
                        let is_kwarg = j + 1 < toks.len() && text(j + 1) == "=";
                        found |= !is_kwarg;
                    }
                    _ => {}
                }
                j += 1;
            }
            if found {
                return Some(name.to_string());
            }
            i = j;
        } else {
            i += 1;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    #[test]
    fn detects_first_scene() {
        assert_eq!(detect_scene("class Demo(Scene):\n    pass\n").as_deref(), Some("Demo"));
        assert_eq!(
            detect_scene("class A(ThreeDScene):\n    pass\nclass B(Scene):\n    pass\n").as_deref(),
            Some("A")
        );
        assert_eq!(detect_scene("x = 1"), None);
        assert_eq!(detect_scene("class Helper(object):\n    pass\nclass S(m.MovingCameraScene): pass").as_deref(), Some("S"));
        assert_eq!(detect_scene("# class Fake(Scene):\ns = 'class Q(Scene):'\n"), None);
        assert_eq!(detect_scene("class Plain:\n    pass\n"), None);
    }

    #[test]
    fn tails() {
        assert_eq!(tail_lines("a\nb\nc", 10), "a\nb\nc");
        let text: String = (1..=25).map(|i| format!("line{i}\n")).collect();
        let t = tail_lines(&text, 10);
        let got: Vec<&str> = t.lines().collect();
        assert_eq!(got.len(), 10);
        assert_eq!(got[0], "line16");
        assert_eq!(got[9], "line25");
        assert_eq!(tail_lines("", 10), "");
    }

    #[test]
    fn failed_outcome_is_truncated() {
        let text: String = (0..40).map(|i| format!("{i}\n")).collect();
        let o = RenderOutcome::failed(RenderStatus::Fail, &text, 0.1);
        assert_eq!(o.error_tail.lines().count(), 10);
        assert!(o.video_path.is_none());
    }

    #[test]
    fn request_defaults() {
        let r = RenderRequest::new("class Z(Scene): pass");
        assert_eq!(r.quality, Quality::Low);
        assert_eq!(r.timeout_secs, 120.0);
        assert_eq!(r.resolved_scene().as_deref(), Some("Z"));
    }
}
