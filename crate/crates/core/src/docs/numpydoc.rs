use alloc::string::String;
use alloc::vec::Vec;

/// Section titles whose bodies are kept.
pub const KEPT_SECTIONS: [&str; 2] = ["Parameters", "Other Parameters"];

/// Decodes a Python string literal token (prefix, quotes, simple escapes).
pub fn string_literal_value(token: &str) -> String {
    let prefix_len = token.find(['"', '\'']).unwrap_or(0);
    let raw = token[..prefix_len].chars().any(|c| c == 'r' || c == 'R');
    let body = &token[prefix_len..];
    let inner = if body.starts_with("\"\"\"") || body.starts_with("'''") {
        body.get(3..body.len().saturating_sub(3)).unwrap_or("")
    } else {
        body.get(1..body.len().saturating_sub(1)).unwrap_or("")
    };
    if raw {
        return String::from(inner);
    }
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('\n') => {}
            Some(o) if matches!(o, '\\' | '\'' | '"') => out.push(o),
            Some(o) => {
                out.push('\\');
                out.push(o);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Tab expansion, first-line strip, common-indent removal and blank-edge
/// trimming, as done by Python's `inspect.cleandoc`.
pub fn clean_docstring(doc: &str) -> String {
    let expanded = doc.replace('\t', "        ");
    let lines: Vec<&str> = expanded.lines().collect();
    if lines.is_empty() {
        return String::new();
    }
    let indent = lines[1..]
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let mut out: Vec<&str> = Vec::with_capacity(lines.len());
    out.push(lines[0].trim());
    for l in &lines[1..] {
        out.push(if l.len() >= indent { l[indent..].trim_end() } else { l.trim() });
    }
    while out.first().is_some_and(|l| l.is_empty()) {
        out.remove(0);
    }
    while out.last().is_some_and(|l| l.is_empty()) {
        out.pop();
    }
    out.join("\n")
}

/// One underlined section of a docstring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section<'a> {
    pub title: &'a str,
    pub body: Vec<&'a str>,
}

fn is_underline(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 3 && t.bytes().all(|b| b == b'-')
}

/// Splits a cleaned docstring into its summary lines and underlined sections.
pub fn split_sections(doc: &str) -> (Vec<&str>, Vec<Section<'_>>) {
    let lines: Vec<&str> = doc.lines().collect();
    let mut summary = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let heading = !lines[i].trim().is_empty() && i + 1 < lines.len() && is_underline(lines[i + 1]);
        if heading {
            sections.push(Section { title: lines[i].trim(), body: Vec::new() });
            i += 2;
            continue;
        }
        match sections.last_mut() {
            Some(s) => s.body.push(lines[i]),
            None => summary.push(lines[i]),
        }
        i += 1;
    }
    (summary, sections)
}

/// The parameter sections of a docstring, headings included. Everything else
/// (summary, returns, examples, notes) is dropped, as are stray doctest lines.
pub fn parameter_docs(docstring: &str) -> String {
    let cleaned = clean_docstring(docstring);
    let (_, sections) = split_sections(&cleaned);
    let mut parts: Vec<String> = Vec::new();
    for s in sections.iter().filter(|s| KEPT_SECTIONS.iter().any(|k| k.eq_ignore_ascii_case(s.title))) {
        let mut body: Vec<&str> = s
            .body
            .iter()
            .copied()
            .filter(|l| {
                let t = l.trim_start();
                !t.starts_with(">>>") && !t.starts_with("... ") && t != "..."
            })
            .collect();
        while body.last().is_some_and(|l| l.trim().is_empty()) {
            body.pop();
        }
        while body.first().is_some_and(|l| l.trim().is_empty()) {
            body.remove(0);
        }
        if body.is_empty() {
            continue;
        }
        let mut part = String::from(s.title);
        part.push('\n');
        part.push_str(&"-".repeat(s.title.chars().count()));
        for l in body {
            part.push('\n');
            part.push_str(l);
        }
        parts.push(part);
    }
    parts.join("\n\n")
}
