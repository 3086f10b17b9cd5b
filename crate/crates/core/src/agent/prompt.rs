use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::ChatMessage;
use crate::docs::DocBundle;
use crate::error::{config, Result};
use crate::render::tail_lines;

pub const NO_RENDER_OUTPUT: &str = "(no renderer output)";
pub const NO_DOCS: &str = "(no matching API documentation)";
pub const NO_CODE: &str = "(no code produced)";

pub const DEFAULT_TEMPLATES: &str = "\
[system]
You write Python programs for Manim Community Edition v0.19.0. Reply with one complete, runnable program that defines exactly one Scene subclass and imports everything it uses. Put the whole program between <CODE> and </CODE> tags and keep any explanation outside them.

[initial]
## Description
{description}

Write the Manim program for this description.

[ritl]
## Description
{description}

## Code
{code}

## Renderer error
{error}

The code above failed to render. Return a corrected, complete program.

[ritl_doc]
## Description
{description}

## Code
{code}

## Renderer error
{error}

## API documentation
{docs}

The code above failed to render. Use the documentation to return a corrected, complete program.
";

/// The four prompt bodies. `system` is sent as the system message of every
/// round; the others fill the user message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub system: String,
    pub initial: String,
    pub ritl: String,
    pub ritl_doc: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("built-in templates parse")
    }
}

impl PromptTemplates {
    /// Reads a template file made of `[system]`, `[initial]`, `[ritl]` and
    /// `[ritl_doc]` sections. Leading and trailing blank lines of a section
    /// are dropped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: [(&str, Option<String>); 4] =
            [("system", None), ("initial", None), ("ritl", None), ("ritl_doc", None)];
        let mut current: Option<usize> = None;
        let mut buf: Vec<&str> = Vec::new();
        let flush = |cur: Option<usize>, buf: &mut Vec<&str>, sections: &mut [(&str, Option<String>); 4]| {
            if let Some(i) = cur {
                sections[i].1 = Some(crate::codeblock::strip_blank_lines(&buf.join("\n")));
            }
            buf.clear();
        };
        for line in text.lines() {
            let t = line.trim_end();
            if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                if !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                    flush(current, &mut buf, &mut sections);
                    let Some(i) = sections.iter().position(|(n, _)| *n == name) else {
                        return Err(config(alloc::format!("unknown template section [{name}]")));
                    };
                    if sections[i].1.is_some() {
                        return Err(config(alloc::format!("template section [{name}] appears twice")));
                    }
                    current = Some(i);
                    continue;
                }
            }
            if current.is_some() {
                buf.push(line);
            } else if !t.trim().is_empty() {
                return Err(config("template text before the first section"));
            }
        }
        flush(current, &mut buf, &mut sections);
        let mut take = |i: usize| {
            sections[i].1.take().ok_or_else(|| config(alloc::format!("template section [{}] is missing", sections[i].0)))
        };
        Ok(Self { system: take(0)?, initial: take(1)?, ritl: take(2)?, ritl_doc: take(3)? })
    }
}

/// Replaces `{description}`, `{code}`, `{error}` and `{docs}` in one pass.
/// Substituted text is never rescanned; other braces are left alone.
pub fn fill_template(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            vars.iter().find(|(k, _)| *k == key).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn or_placeholder<'a>(text: &'a str, placeholder: &'a str) -> &'a str {
    if text.trim().is_empty() {
        placeholder
    } else {
        text
    }
}

pub fn build_prompt_initial(description: &str, templates: &PromptTemplates) -> Vec<ChatMessage> {
    let user = fill_template(&templates.initial, &[("description", description)]);
    alloc::vec![ChatMessage::system(templates.system.clone()), ChatMessage::user(user)]
}

/// Repair prompt with the failing code and the last `tail` lines of the error.
pub fn build_prompt_ritl(
    description: &str,
    code: &str,
    error_tail: &str,
    templates: &PromptTemplates,
    tail: usize,
) -> Vec<ChatMessage> {
    let error = tail_lines(error_tail, tail);
    let user = fill_template(
        &templates.ritl,
        &[
            ("description", description),
            ("code", or_placeholder(code, NO_CODE)),
            ("error", or_placeholder(&error, NO_RENDER_OUTPUT)),
        ],
    );
    alloc::vec![ChatMessage::system(templates.system.clone()), ChatMessage::user(user)]
}

/// Repair prompt that also carries retrieved API documentation.
pub fn build_prompt_ritl_doc(
    description: &str,
    code: &str,
    error_tail: &str,
    docs: &DocBundle,
    templates: &PromptTemplates,
    tail: usize,
) -> Vec<ChatMessage> {
    let error = tail_lines(error_tail, tail);
    let user = fill_template(
        &templates.ritl_doc,
        &[
            ("description", description),
            ("code", or_placeholder(code, NO_CODE)),
            ("error", or_placeholder(&error, NO_RENDER_OUTPUT)),
            ("docs", or_placeholder(&docs.rendered, NO_DOCS)),
        ],
    );
    alloc::vec![ChatMessage::system(templates.system.clone()), ChatMessage::user(user)]
}

/// Characters across all message contents.
pub fn prompt_chars(messages: &[ChatMessage]) -> usize {
    messages.iter().map(|m| m.content.chars().count()).sum()
}
