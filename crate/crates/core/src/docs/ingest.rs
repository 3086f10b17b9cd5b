use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::numpydoc::{parameter_docs, string_literal_value};
use super::{ApiEntry, ApiKind};
use crate::error::{contract, Result};
use crate::lexer::{lex, RawKind, RawToken};

/// Dotted module name for a path relative to the source root:
/// `manim/mobject/geometry/arc.py` becomes `manim.mobject.geometry.arc`,
/// and package `__init__.py` files map to the package itself.
pub fn module_name(relative_path: &str) -> String {
    let trimmed = relative_path.trim_start_matches("./").trim_end_matches(".py");
    let mut parts: Vec<&str> = trimmed.split(['/', '\\']).filter(|p| !p.is_empty()).collect();
    if parts.last() == Some(&"__init__") {
        parts.pop();
    }
    parts.join(".")
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_public(name: &str) -> bool {
    !name.starts_with('_')
}

struct Scope {
    level: usize,
    class: Option<usize>,
    is_function: bool,
}

struct Header {
    name: String,
    text: String,
    params: Option<String>,
    docstring: Option<String>,
    /// Index of the first token after the header's colon.
    after: usize,
}

struct Scanner<'a> {
    src: &'a str,
    toks: &'a [RawToken],
}

impl<'a> Scanner<'a> {
    fn text(&self, i: usize) -> &'a str {
        &self.src[self.toks[i].start..self.toks[i].end]
    }

    fn kind(&self, i: usize) -> RawKind {
        self.toks.get(i).map_or(RawKind::End, |t| t.kind)
    }

    /// Reads `def name(...) ...:` or `class Name(...):` starting at the keyword.
    fn header(&self, kw: usize) -> Option<Header> {
        if self.kind(kw + 1) != RawKind::Name {
            return None;
        }
        let name = self.text(kw + 1).to_string();
        let mut depth = 0usize;
        let mut j = kw + 2;
        let mut params = None;
        let mut open = None;
        while j < self.toks.len() {
            match (self.kind(j), self.text(j)) {
                (RawKind::Op, "(" | "[" | "{") => {
                    if depth == 0 && open.is_none() && self.text(j) == "(" {
                        open = Some(j);
                    }
                    depth += 1;
                }
                (RawKind::Op, ")" | "]" | "}") => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 && params.is_none() {
                        if let Some(o) = open {
                            params = Some(self.src[self.toks[o].end..self.toks[j].start].to_string());
                        }
                    }
                }
                (RawKind::Op, ":") if depth == 0 => break,
                (RawKind::Newline | RawKind::End, _) => return None,
                _ => {}
            }
            j += 1;
        }
        if j >= self.toks.len() {
            return None;
        }
        let text = collapse_whitespace(&self.src[self.toks[kw].start..self.toks[j].start]);
        let mut after = j + 1;
        let mut docstring = None;
        if self.kind(after) == RawKind::Newline && self.kind(after + 1) == RawKind::Indent {
            after += 2;
            if self.kind(after) == RawKind::Str {
                let mut doc = String::new();
                let mut k = after;
                while self.kind(k) == RawKind::Str {
                    doc.push_str(&string_literal_value(self.text(k)));
                    k += 1;
                }
                if matches!(self.kind(k), RawKind::Newline | RawKind::Dedent | RawKind::End) {
                    docstring = Some(doc);
                }
            }
            // leave the indent for the caller's level tracking
            after -= 1;
        }
        Some(Header { name, text, params, docstring, after })
    }
}

/// Public classes, module-level functions and class methods of one source
/// file that carry a docstring.
pub fn parse_source(src: &str, module: &str, source_path: &str) -> Result<Vec<ApiEntry>> {
    let lexed = lex(src);
    if lexed.had_error {
        return Err(contract("source file could not be tokenized"));
    }
    let sc = Scanner { src, toks: &lexed.tokens };
    let mut entries: Vec<ApiEntry> = Vec::new();
    // (entry index, class name) of module-level classes, for __init__ signatures
    let mut classes: Vec<(Option<usize>, String)> = Vec::new();
    let mut scopes: Vec<Scope> = alloc::vec![Scope { level: 0, class: None, is_function: false }];
    let mut level = 0usize;
    let mut pending: Option<Scope> = None;
    let mut at_stmt_start = true;
    let mut i = 0;
    while i < sc.toks.len() {
        match sc.kind(i) {
            RawKind::Indent => {
                level += 1;
                if let Some(mut s) = pending.take() {
                    s.level = level;
                    scopes.push(s);
                }
                at_stmt_start = true;
                i += 1;
                continue;
            }
            RawKind::Dedent => {
                level = level.saturating_sub(1);
                while scopes.len() > 1 && scopes.last().is_some_and(|s| s.level > level) {
                    scopes.pop();
                }
                at_stmt_start = true;
                i += 1;
                continue;
            }
            RawKind::Newline => {
                pending = None;
                at_stmt_start = true;
                i += 1;
                continue;
            }
            RawKind::End => break,
            _ => {}
        }
        if !at_stmt_start {
            i += 1;
            continue;
        }
        at_stmt_start = false;
        let mut kw = i;
        if sc.kind(i) == RawKind::Name && sc.text(i) == "async" && sc.kind(i + 1) == RawKind::Name && sc.text(i + 1) == "def" {
            kw = i + 1;
        }
        let word = if sc.kind(kw) == RawKind::Name { sc.text(kw) } else { "" };
        if word != "def" && word != "class" {
            i += 1;
            continue;
        }
        let Some(h) = sc.header(kw) else {
            i += 1;
            continue;
        };
        let scope = scopes.last().expect("module scope");
        let at_module = scopes.len() == 1;
        let in_class = scope.class.is_some() && !scope.is_function;
        let mut new_scope = Scope { level: 0, class: None, is_function: word == "def" };
        if word == "class" {
            if at_module {
                let idx = (is_public(&h.name) && h.docstring.is_some()).then(|| {
                    entries.push(ApiEntry {
                        name: h.name.clone(),
                        qualified_name: join(module, &h.name),
                        kind: ApiKind::Class,
                        signature: h.text.clone(),
                        param_docs: parameter_docs(h.docstring.as_deref().unwrap_or("")),
                        source_path: source_path.to_string(),
                    });
                    entries.len() - 1
                });
                classes.push((idx, h.name.clone()));
                new_scope.class = Some(classes.len() - 1);
            }
        } else if at_module {
            if is_public(&h.name) {
                if let Some(doc) = &h.docstring {
                    entries.push(ApiEntry {
                        name: h.name.clone(),
                        qualified_name: join(module, &h.name),
                        kind: ApiKind::Function,
                        signature: h.text.clone(),
                        param_docs: parameter_docs(doc),
                        source_path: source_path.to_string(),
                    });
                }
            }
        } else if in_class {
            let (class_entry, class_name) = classes[scope.class.expect("class scope")].clone();
            if h.name == "__init__" {
                if let (Some(e), Some(params)) = (class_entry, &h.params) {
                    let args = strip_self(params);
                    entries[e].signature = alloc::format!("{class_name}({args})");
                    if entries[e].param_docs.is_empty() {
                        if let Some(doc) = &h.docstring {
                            entries[e].param_docs = parameter_docs(doc);
                        }
                    }
                }
            } else if is_public(&h.name) && is_public(&class_name) {
                if let Some(doc) = &h.docstring {
                    entries.push(ApiEntry {
                        name: h.name.clone(),
                        qualified_name: join(module, &alloc::format!("{class_name}.{}", h.name)),
                        kind: ApiKind::Method,
                        signature: h.text.clone(),
                        param_docs: parameter_docs(doc),
                        source_path: source_path.to_string(),
                    });
                }
            }
        }
        pending = Some(new_scope);
        i = h.after;
    }
    Ok(entries)
}

fn join(module: &str, name: &str) -> String {
    if module.is_empty() {
        name.to_string()
    } else {
        alloc::format!("{module}.{name}")
    }
}

/// Drops a leading `self` parameter and normalizes whitespace.
fn strip_self(params: &str) -> String {
    let p = collapse_whitespace(params);
    let p = p.trim().trim_end_matches(',').trim();
    if p == "self" {
        return String::new();
    }
    match p.strip_prefix("self,") {
        Some(rest) => rest.trim().to_string(),
        None => p.to_string(),
    }
}
