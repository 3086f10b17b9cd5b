//! API knowledge base built from numpydoc docstrings: ingestion, call
//! extraction from generated code, and budgeted retrieval.

mod ingest;
mod numpydoc;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub use ingest::{module_name, parse_source};
pub use numpydoc::{clean_docstring, parameter_docs, split_sections, string_literal_value, Section, KEPT_SECTIONS};

use crate::error::{contract, Result};
use crate::lexer::{lex, tokenize_code, RawKind, TokenClass};
use crate::syntax::parse_syntax;

pub const KB_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_DOC_BUDGET: usize = 8000;
/// Line placed between rendered entries.
pub const ENTRY_SEPARATOR: &str = "\n-----\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiKind {
    Class,
    Function,
    Method,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiEntry {
    pub name: String,
    pub qualified_name: String,
    pub kind: ApiKind,
    pub signature: String,
    pub param_docs: String,
    pub source_path: String,
}

impl ApiEntry {
    /// Text placed in prompts for this entry.
    pub fn render(&self) -> String {
        let mut s = alloc::format!("{}\n{}", self.qualified_name, self.signature);
        if !self.param_docs.is_empty() {
            s.push('\n');
            s.push_str(&self.param_docs);
        }
        s
    }
}

/// Immutable set of entries, sorted by qualified name, indexed by short name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    entries: Vec<ApiEntry>,
    name_index: BTreeMap<String, Vec<usize>>,
}

/// On-disk form of a knowledge base.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbFile {
    pub version: u32,
    pub source_hash: String,
    pub entries: Vec<ApiEntry>,
}

impl KnowledgeBase {
    /// Sorts entries by qualified name; later duplicates of a qualified name are dropped.
    pub fn new(mut entries: Vec<ApiEntry>) -> Self {
        entries.sort_by(|a, b| a.qualified_name.cmp(&b.qualified_name));
        entries.dedup_by(|b, a| a.qualified_name == b.qualified_name);
        let mut name_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            name_index.entry(e.name.clone()).or_default().push(i);
        }
        Self { entries, name_index }
    }

    pub fn entries(&self) -> &[ApiEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.name_index.contains_key(name)
    }

    /// Every entry with short name `name`, ordered by qualified name.
    pub fn lookup(&self, name: &str) -> Vec<&ApiEntry> {
        self.name_index.get(name).map(|ix| ix.iter().map(|&i| &self.entries[i]).collect()).unwrap_or_default()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.name_index.keys().map(String::as_str)
    }

    pub fn to_file(&self, source_hash: impl Into<String>) -> KbFile {
        KbFile { version: KB_FORMAT_VERSION, source_hash: source_hash.into(), entries: self.entries.clone() }
    }

    pub fn from_file(file: KbFile) -> Result<Self> {
        if file.version != KB_FORMAT_VERSION {
            return Err(contract(alloc::format!("unsupported knowledge base version {}", file.version)));
        }
        Ok(Self::new(file.entries))
    }
}

/// Knowledge-base names used in `code`, in order of first appearance.
///
/// A name counts when it is called (`Circle(...)`, `self.play(...)`) or takes
/// part in an attribute access (`config.frame_width`, `self.camera`). Names
/// being defined by `def` or `class` do not count. If the code does not
/// parse, every identifier token is considered instead.
pub fn extract_api_calls(code: &str, kb: &KnowledgeBase) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |name: &str| {
        if kb.contains(name) && seen.insert(name.to_string()) {
            out.push(name.to_string());
        }
    };
    let lexed = lex(code);
    if lexed.had_error || parse_syntax(code).has_errors() {
        for t in tokenize_code(code).tokens {
            let word = !t.text.is_empty() && t.text.chars().all(|c| c.is_alphanumeric() || c == '_');
            if word && matches!(t.class, TokenClass::Identifier | TokenClass::Other) {
                push(&t.text);
            }
        }
        return out;
    }
    let toks: Vec<_> = lexed.tokens.iter().filter(|t| !matches!(t.kind, RawKind::Indent | RawKind::Dedent)).collect();
    let text = |i: usize| &code[toks[i].start..toks[i].end];
    for i in 0..toks.len() {
        if toks[i].kind != RawKind::Name {
            continue;
        }
        let next = if i + 1 < toks.len() { text(i + 1) } else { "" };
        let prev = if i > 0 { text(i - 1) } else { "" };
        if prev == "def" || prev == "class" {
            continue;
        }
        if next == "(" || next == "." || prev == "." {
            push(text(i));
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocBundle {
    pub entries: Vec<ApiEntry>,
    /// Short names that contributed at least one entry.
    pub names: Vec<String>,
    pub rendered: String,
    pub budget: usize,
    pub truncated: bool,
}

/// Concatenates whole entries for `names` (each name's entries ordered by
/// qualified name) until the next one would push the text past `budget`
/// characters.
pub fn retrieve_docs<S: AsRef<str>>(names: &[S], kb: &KnowledgeBase, budget: usize) -> Result<DocBundle> {
    if budget == 0 {
        return Err(contract("documentation budget must be positive"));
    }
    let mut bundle = DocBundle { budget, ..Default::default() };
    let mut used = 0usize;
    'outer: for name in names {
        for entry in kb.lookup(name.as_ref()) {
            let text = entry.render();
            let sep = if bundle.entries.is_empty() { 0 } else { ENTRY_SEPARATOR.chars().count() };
            let cost = sep + text.chars().count();
            if used + cost > budget {
                bundle.truncated = true;
                break 'outer;
            }
            if sep > 0 {
                bundle.rendered.push_str(ENTRY_SEPARATOR);
            }
            bundle.rendered.push_str(&text);
            used += cost;
            bundle.entries.push(entry.clone());
            if bundle.names.last().map(String::as_str) != Some(name.as_ref()) {
                bundle.names.push(name.as_ref().to_string());
            }
        }
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn entry(q: &str, docs_len: usize) -> ApiEntry {
        let name = q.rsplit('.').next().unwrap().to_string();
        ApiEntry {
            name,
            qualified_name: q.to_string(),
            kind: ApiKind::Class,
            signature: String::new(),
            param_docs: "x".repeat(docs_len),
            source_path: "m.py".into(),
        }
    }

    fn kb() -> KnowledgeBase {
        KnowledgeBase::new(vec![
            entry("manim.Create", 5),
            entry("manim.Circle", 5),
            entry("manim.Scene.play", 5),
            entry("manim.Square", 5),
        ])
    }

    #[test]
    fn call_positions_in_order() {
        let code = "c = Circle(); self.play(Create(c))";
        assert_eq!(extract_api_calls(code, &kb()), ["Circle", "play", "Create"]);
        assert!(extract_api_calls("x = 1 + y", &kb()).is_empty());
        assert_eq!(extract_api_calls("a = Circle()\nb = Circle()\n", &kb()), ["Circle"]);
        // bare mention is not a call
        assert!(extract_api_calls("Square\n", &kb()).is_empty());
        let defs = "class Square(Scene):\n    def play(self):\n        Circle()\n";
        assert_eq!(extract_api_calls(defs, &kb()), ["Circle"]);
    }

    #[test]
    fn unparsable_code_falls_back_to_tokens() {
        assert_eq!(extract_api_calls("def broken(:\n  Square Circle", &kb()), ["Square", "Circle"]);
    }

    #[test]
    fn ambiguous_names_return_all_sorted() {
        let kb = KnowledgeBase::new(vec![entry("b.mod.Text", 1), entry("a.mod.Text", 1)]);
        let hits: Vec<&str> = kb.lookup("Text").iter().map(|e| e.qualified_name.as_str()).collect();
        assert_eq!(hits, ["a.mod.Text", "b.mod.Text"]);
    }

    #[test]
    fn budget_rules() {
        let kb = kb();
        let b = retrieve_docs::<&str>(&[], &kb, 100).unwrap();
        assert_eq!((b.rendered.as_str(), b.truncated), ("", false));
        let b = retrieve_docs(&["Circle"], &kb, 3).unwrap();
        assert!(b.rendered.is_empty() && b.truncated);
        assert!(retrieve_docs(&["Circle"], &kb, 0).is_err());
    }

    #[test]
    fn whole_entries_only() {
        // rendered entry: "q.A" + "\n" + "" + "\n" + 95 chars = 100
        let a = entry("q.A", 95);
        let b = entry("q.B", 95);
        assert_eq!(a.render().chars().count(), 100);
        let kb = KnowledgeBase::new(vec![a, b]);
        let bundle = retrieve_docs(&["A", "B"], &kb, 150).unwrap();
        assert_eq!(bundle.entries.len(), 1);
        assert!(bundle.truncated);
        assert_eq!(bundle.names, ["A"]);
        let both = retrieve_docs(&["A", "B"], &kb, 200 + ENTRY_SEPARATOR.len()).unwrap();
        assert_eq!(both.entries.len(), 2);
        assert!(!both.truncated);
    }

    #[test]
    fn file_round_trip() {
        let f = kb().to_file("abc");
        assert_eq!(f.version, 1);
        assert_eq!(KnowledgeBase::from_file(f.clone()).unwrap(), kb());
        assert!(KnowledgeBase::from_file(KbFile { version: 2, ..f }).is_err());
    }

    proptest! {
        #[test]
        fn bundle_respects_budget(budget in 1usize..400, order in proptest::sample::subsequence(vec!["Circle", "Create", "play", "Square"], 0..=4)) {
            let kb = kb();
            let b = retrieve_docs(&order, &kb, budget).unwrap();
            prop_assert!(b.rendered.chars().count() <= budget);
            let expected: String = b.entries.iter().map(ApiEntry::render).collect::<Vec<_>>().join(ENTRY_SEPARATOR);
            prop_assert_eq!(b.rendered, expected);
        }

        #[test]
        fn extracted_names_exist(code in "[A-Za-z_ .()=\n]{0,60}") {
            let kb = kb();
            for n in extract_api_calls(&code, &kb) {
                prop_assert!(kb.contains(&n));
            }
        }
    }
}
