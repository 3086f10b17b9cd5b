//! Pulling runnable code out of raw model completions.
//!
//! Three patterns are tried in order: a `<CODE>…</CODE>` tag pair, a fence
//! labelled python, then a fence with any other (or no) label. Within one
//! pattern the first non-empty block wins. Unterminated blocks don't count.

use alloc::string::String;
use serde::{Deserialize, Serialize};

/// Which pattern produced a snippet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnippetSource {
    Tagged,
    FencedPython,
    FencedAny,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSnippet {
    pub code: String,
    pub source: SnippetSource,
}

const OPEN_TAG: &str = "<code>";
const CLOSE_TAG: &str = "</code>";
const FENCE: &str = "```";

/// Extracts the first code block from `completion`, or `None` when there is
/// nothing usable.
pub fn extract_code(completion: &str) -> Option<CodeSnippet> {
    if let Some(code) = first_tagged(completion) {
        return Some(CodeSnippet { code, source: SnippetSource::Tagged });
    }
    if let Some(code) = first_fence(completion, true) {
        return Some(CodeSnippet { code, source: SnippetSource::FencedPython });
    }
    first_fence(completion, false).map(|code| CodeSnippet { code, source: SnippetSource::FencedAny })
}

fn first_tagged(text: &str) -> Option<String> {
    // ASCII lowercasing keeps byte offsets aligned with `text`.
    let lower = text.to_ascii_lowercase();
    let mut from = 0;
    while let Some(open) = lower[from..].find(OPEN_TAG) {
        let body_start = from + open + OPEN_TAG.len();
        let close = lower[body_start..].find(CLOSE_TAG)?;
        let body = &text[body_start..body_start + close];
        // a fenced block inside the tags is unwrapped
        let inner = first_fence(body, true).or_else(|| first_fence(body, false));
        let code = inner.unwrap_or_else(|| strip_blank_lines(body));
        if !code.is_empty() {
            return Some(code);
        }
        from = body_start + close + CLOSE_TAG.len();
    }
    None
}

fn is_python_label(info: &str) -> bool {
    let label = info.split_whitespace().next().unwrap_or("");
    ["python", "python3", "py"].iter().any(|l| label.eq_ignore_ascii_case(l))
}

fn first_fence(text: &str, python_only: bool) -> Option<String> {
    let mut lines = LineSpans::new(text);
    while let Some((_, line_end, line)) = lines.next() {
        let Some(info) = fence_open(line) else { continue };
        let body_start = (line_end + 1).min(text.len());
        let mut close_at = None;
        for (start, _, candidate) in lines.by_ref() {
            if candidate.trim() == FENCE {
                close_at = Some(start);
                break;
            }
        }
        let body_end = close_at?;
        if python_only && !is_python_label(info) {
            continue;
        }
        let body = if body_end > body_start { &text[body_start..body_end] } else { "" };
        let code = strip_blank_lines(body);
        if !code.is_empty() {
            return Some(code);
        }
    }
    None
}

/// Returns the info string when `line` opens a fence.
fn fence_open(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    if line.len() - trimmed.len() > 3 {
        return None;
    }
    let info = trimmed.strip_prefix(FENCE)?;
    if info.contains('`') {
        return None;
    }
    Some(info.trim())
}

/// Drops whitespace-only lines at both ends; interior lines are untouched.
pub fn strip_blank_lines(text: &str) -> String {
    let mut start = 0;
    let mut end = text.len();
    for (s, e, line) in LineSpans::new(text) {
        if line.trim().is_empty() {
            start = (e + 1).min(text.len());
        } else {
            start = s;
            break;
        }
    }
    if start >= end {
        return String::new();
    }
    let spans: alloc::vec::Vec<_> = LineSpans::new(&text[start..]).collect();
    for &(s, _, line) in spans.iter().rev() {
        if line.trim().is_empty() {
            end = start + s;
        } else {
            break;
        }
    }
    let mut out = String::from(&text[start..end]);
    while out.ends_with('\n') || out.ends_with('\r') {
        out.pop();
    }
    out
}

/// Iterates `(start, end, line)` where `end` indexes the terminating newline
/// (or the text length for the last line).
struct LineSpans<'a> {
    text: &'a str,
    pos: usize,
    done: bool,
}

impl<'a> LineSpans<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0, done: false }
    }
}

impl<'a> Iterator for LineSpans<'a> {
    type Item = (usize, usize, &'a str);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let start = self.pos;
        match self.text[start..].find('\n') {
            Some(i) => {
                self.pos = start + i + 1;
                Some((start, start + i, &self.text[start..start + i]))
            }
            None => {
                self.done = true;
                Some((start, self.text.len(), &self.text[start..]))
            }
        }
    }
}
