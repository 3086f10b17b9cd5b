//! Python 3 lexer.
//!
//! [`tokenize_code`] yields the classified token stream used by n-gram
//! matching. The parser consumes the lower-level [`lex`] output, which also
//! carries `NEWLINE`/`INDENT`/`DEDENT` structure and never fails: malformed
//! input produces `Error` tokens and sets [`Lexed::had_error`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Reserved words of Python 3.
pub const PYTHON_KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

pub fn is_keyword(word: &str) -> bool {
    PYTHON_KEYWORDS.contains(&word)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Keyword,
    Identifier,
    Number,
    String,
    Operator,
    Punctuation,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub class: TokenClass,
}

impl Token {
    pub fn new(text: impl Into<String>, class: TokenClass) -> Self {
        Self { text: text.into(), class }
    }
}

/// Ordered lexical tokens of one program.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }
}

impl From<Vec<Token>> for TokenSequence {
    fn from(tokens: Vec<Token>) -> Self {
        Self { tokens }
    }
}

/// Tokenizes Python source. Comments and layout tokens are dropped.
///
/// If the source cannot be lexed (stray characters, unterminated strings,
/// inconsistent dedents) the whole input is split on whitespace and
/// punctuation instead and every token is classed [`TokenClass::Other`].
pub fn tokenize_code(code: &str) -> TokenSequence {
    let lexed = lex(code);
    if lexed.had_error {
        return fallback_tokens(code);
    }
    let tokens = lexed
        .tokens
        .iter()
        .filter_map(|t| {
            let text = &code[t.start..t.end];
            let class = match t.kind {
                RawKind::Name if is_keyword(text) => TokenClass::Keyword,
                RawKind::Name => TokenClass::Identifier,
                RawKind::Number => TokenClass::Number,
                RawKind::Str => TokenClass::String,
                RawKind::Op if is_punctuation(text) => TokenClass::Punctuation,
                RawKind::Op => TokenClass::Operator,
                _ => return None,
            };
            Some(Token::new(text, class))
        })
        .collect();
    TokenSequence { tokens }
}

fn is_punctuation(op: &str) -> bool {
    matches!(op, "(" | ")" | "[" | "]" | "{" | "}" | "," | ":" | ";" | "." | "...")
}

fn fallback_tokens(code: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for chunk in code.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if c.is_alphanumeric() || c == '_' {
                word.push(c);
            } else {
                if !word.is_empty() {
                    tokens.push(Token::new(core::mem::take(&mut word), TokenClass::Other));
                }
                tokens.push(Token::new(c.to_string(), TokenClass::Other));
            }
        }
        if !word.is_empty() {
            tokens.push(Token::new(word, TokenClass::Other));
        }
    }
    TokenSequence { tokens }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RawKind {
    Name,
    Number,
    Str,
    Op,
    Newline,
    Indent,
    Dedent,
    Error,
    End,
}

/// Byte span of one token in the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct RawToken {
    pub kind: RawKind,
    pub start: usize,
    pub end: usize,
}

pub(crate) struct Lexed {
    pub tokens: Vec<RawToken>,
    pub had_error: bool,
}

const OPERATORS_3: [&str; 5] = ["**=", "//=", ">>=", "<<=", "..."];
const OPERATORS_2: [&str; 19] = [
    "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "@=", ":=",
];
const OPERATORS_1: &[u8] = b"+-*/%@&|^~<>()[]{},:;.=";

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
    indents: Vec<usize>,
    at_line_start: bool,
    tokens: Vec<RawToken>,
    had_error: bool,
}

pub(crate) fn lex(src: &str) -> Lexed {
    let mut lx = Lexer {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        depth: 0,
        indents: alloc::vec![0],
        at_line_start: true,
        tokens: Vec::new(),
        had_error: false,
    };
    lx.run();
    Lexed { tokens: lx.tokens, had_error: lx.had_error }
}

impl Lexer<'_> {
    fn push(&mut self, kind: RawKind, start: usize, end: usize) {
        if kind == RawKind::Error {
            self.had_error = true;
        }
        self.tokens.push(RawToken { kind, start, end });
    }

    fn run(&mut self) {
        let len = self.bytes.len();
        while self.pos < len {
            if self.at_line_start && self.depth == 0 {
                if !self.indentation() {
                    continue;
                }
            }
            let c = self.bytes[self.pos];
            match c {
                b' ' | b'\t' | 0x0c => self.pos += 1,
                b'\r' | b'\n' => {
                    let start = self.pos;
                    self.skip_newline();
                    if self.depth == 0 {
                        self.push(RawKind::Newline, start, start);
                        self.at_line_start = true;
                    }
                }
                b'#' => self.skip_to_eol(),
                b'\\' => {
                    let next = self.pos + 1;
                    if next < len && (self.bytes[next] == b'\n' || self.bytes[next] == b'\r') {
                        self.pos = next;
                        self.skip_newline();
                    } else {
                        self.push(RawKind::Error, self.pos, self.pos + 1);
                        self.pos += 1;
                    }
                }
                _ => self.token(),
            }
        }
        if self.depth > 0 {
            self.had_error = true;
        }
        let significant = self
            .tokens
            .last()
            .is_some_and(|t| !matches!(t.kind, RawKind::Newline | RawKind::Dedent | RawKind::Indent));
        if significant {
            self.push(RawKind::Newline, len, len);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(RawKind::Dedent, len, len);
        }
        self.push(RawKind::End, len, len);
    }

    /// Measures leading whitespace of a logical line and emits INDENT/DEDENT.
    /// Returns false when the line was blank or comment-only and got skipped.
    fn indentation(&mut self) -> bool {
        let mut col = 0usize;
        let mut p = self.pos;
        while p < self.bytes.len() {
            match self.bytes[p] {
                b' ' => col += 1,
                b'\t' => col = (col / 8 + 1) * 8,
                0x0c => col = 0,
                _ => break,
            }
            p += 1;
        }
        if p >= self.bytes.len() {
            self.pos = p;
            return false;
        }
        match self.bytes[p] {
            b'#' | b'\n' | b'\r' => {
                self.pos = p;
                self.skip_to_eol();
                if self.pos < self.bytes.len() {
                    self.skip_newline();
                }
                return false;
            }
            _ => {}
        }
        let top = *self.indents.last().unwrap_or(&0);
        if col > top {
            self.indents.push(col);
            self.push(RawKind::Indent, p, p);
        } else if col < top {
            while col < *self.indents.last().unwrap_or(&0) {
                self.indents.pop();
                self.push(RawKind::Dedent, p, p);
            }
            if col != *self.indents.last().unwrap_or(&0) {
                // dedent to a level that was never opened
                self.had_error = true;
            }
        }
        self.pos = p;
        self.at_line_start = false;
        true
    }

    fn skip_newline(&mut self) {
        if self.bytes[self.pos] == b'\r' && self.bytes.get(self.pos + 1) == Some(&b'\n') {
            self.pos += 2;
        } else {
            self.pos += 1;
        }
    }

    fn skip_to_eol(&mut self) {
        while self.pos < self.bytes.len() && !matches!(self.bytes[self.pos], b'\n' | b'\r') {
            self.pos += 1;
        }
    }

    fn token(&mut self) {
        let start = self.pos;
        if let Some(quote_at) = self.string_prefix() {
            self.string(start, quote_at);
            return;
        }
        let c = self.src[start..].chars().next().unwrap_or('\0');
        if c.is_alphabetic() || c == '_' {
            let end = self.src[start..]
                .char_indices()
                .find(|&(_, ch)| !(ch.is_alphanumeric() || ch == '_'))
                .map_or(self.src.len(), |(i, _)| start + i);
            self.pos = end;
            self.push(RawKind::Name, start, end);
            return;
        }
        let next_is_digit = self.bytes.get(start + 1).is_some_and(u8::is_ascii_digit);
        if c.is_ascii_digit() || (c == '.' && next_is_digit) {
            self.number(start);
            return;
        }
        let rest = &self.src[start..];
        let op_len = if OPERATORS_3.iter().any(|op| rest.starts_with(op)) {
            3
        } else if OPERATORS_2.iter().any(|op| rest.starts_with(op)) {
            2
        } else if OPERATORS_1.contains(&self.bytes[start]) {
            1
        } else {
            0
        };
        if op_len == 0 {
            let end = start + c.len_utf8();
            self.pos = end;
            self.push(RawKind::Error, start, end);
            return;
        }
        match self.bytes[start] {
            b'(' | b'[' | b'{' if op_len == 1 => self.depth += 1,
            b')' | b']' | b'}' if op_len == 1 => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        self.pos = start + op_len;
        self.push(RawKind::Op, start, self.pos);
    }

    /// If a string literal (with optional prefix) starts here, returns the
    /// offset of its opening quote.
    fn string_prefix(&self) -> Option<usize> {
        let mut p = self.pos;
        while p < self.bytes.len() && p - self.pos < 2 && matches!(self.bytes[p].to_ascii_lowercase(), b'r' | b'b' | b'u' | b'f') {
            p += 1;
        }
        let prefix = self.src[self.pos..p].to_ascii_lowercase();
        let valid = matches!(prefix.as_str(), "" | "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf");
        if valid && matches!(self.bytes.get(p), Some(b'\'' | b'"')) {
            Some(p)
        } else {
            None
        }
    }

    fn string(&mut self, start: usize, quote_at: usize) {
        let quote = self.bytes[quote_at];
        let triple = self.bytes.len() >= quote_at + 3
            && self.bytes[quote_at + 1] == quote
            && self.bytes[quote_at + 2] == quote;
        let mut p = quote_at + if triple { 3 } else { 1 };
        loop {
            if p >= self.bytes.len() {
                self.pos = self.bytes.len();
                self.push(RawKind::Error, start, self.pos);
                return;
            }
            let c = self.bytes[p];
            if c == b'\\' {
                p += 2;
                continue;
            }
            if triple {
                if c == quote && self.bytes.get(p + 1) == Some(&quote) && self.bytes.get(p + 2) == Some(&quote) {
                    self.pos = p + 3;
                    break;
                }
            } else if c == quote {
                self.pos = p + 1;
                break;
            } else if c == b'\n' || c == b'\r' {
                self.pos = p;
                self.push(RawKind::Error, start, p);
                return;
            }
            p += 1;
        }
        self.push(RawKind::Str, start, self.pos);
    }

    fn number(&mut self, start: usize) {
        let b = self.bytes;
        let mut p = start;
        let digits = |p: &mut usize, hex: bool| {
            while *p < b.len() && (b[*p].is_ascii_digit() || b[*p] == b'_' || (hex && b[*p].is_ascii_hexdigit())) {
                *p += 1;
            }
        };
        if b[p] == b'0' && matches!(b.get(p + 1).map(u8::to_ascii_lowercase), Some(b'x' | b'o' | b'b')) {
            p += 2;
            digits(&mut p, true);
        } else {
            digits(&mut p, false);
            if p < b.len() && b[p] == b'.' {
                p += 1;
                digits(&mut p, false);
            }
            if p < b.len() && matches!(b[p], b'e' | b'E') {
                let mut q = p + 1;
                if q < b.len() && matches!(b[q], b'+' | b'-') {
                    q += 1;
                }
                if q < b.len() && b[q].is_ascii_digit() {
                    p = q;
                    digits(&mut p, false);
                }
            }
            if p < b.len() && matches!(b[p], b'j' | b'J') {
                p += 1;
            }
        }
        self.pos = p;
        self.push(RawKind::Number, start, p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn texts(code: &str) -> Vec<String> {
        tokenize_code(code).tokens.into_iter().map(|t| t.text).collect()
    }

    fn kinds(code: &str) -> Vec<RawKind> {
        lex(code).tokens.into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn minimal_assignment() {
        let seq = tokenize_code("x = 1");
        assert_eq!(
            seq.tokens,
            vec![
                Token::new("x", TokenClass::Identifier),
                Token::new("=", TokenClass::Operator),
                Token::new("1", TokenClass::Number),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize_code("").is_empty());
        assert_eq!(kinds(""), vec![RawKind::End]);
    }

    #[test]
    fn def_starts_with_keyword() {
        let seq = tokenize_code("def f(a):\n return a");
        assert_eq!(seq.tokens[0], Token::new("def", TokenClass::Keyword));
        assert_eq!(texts("def f(a):\n return a"), ["def", "f", "(", "a", ")", ":", "return", "a"]);
    }

    #[test]
    fn indentation_structure() {
        use RawKind::*;
        assert_eq!(
            kinds("if x:\n    y\nz\n"),
            vec![Name, Name, Op, Newline, Indent, Name, Newline, Dedent, Name, Newline, End]
        );
    }

    #[test]
    fn blank_and_comment_lines_do_not_emit_layout() {
        use RawKind::*;
        assert_eq!(kinds("a\n\n   # note\n\nb"), vec![Name, Newline, Name, Newline, End]);
    }

    #[test]
    fn newlines_inside_brackets_are_ignored() {
        assert_eq!(texts("f(1,\n  2)\n"), ["f", "(", "1", ",", "2", ")"]);
        assert!(!kinds("f(1,\n  2)\n").contains(&RawKind::Indent));
    }

    #[test]
    fn strings_and_numbers() {
        assert_eq!(
            texts("s = rb'a\\'b' + \"\"\"x\ny\"\"\" + f\"{v}\""),
            ["s", "=", "rb'a\\'b'", "+", "\"\"\"x\ny\"\"\"", "+", "f\"{v}\""]
        );
        assert_eq!(texts("0x1F 1_000 3.5e-2 .5 2j 1."), ["0x1F", "1_000", "3.5e-2", ".5", "2j", "1."]);
    }

    #[test]
    fn longest_operator_match() {
        assert_eq!(texts("a **= b // c -> d ... :="), ["a", "**=", "b", "//", "c", "->", "d", "...", ":="]);
    }

    #[test]
    fn lexing_failure_falls_back_to_splitting() {
        let seq = tokenize_code("x = 'open\ny $ z");
        assert!(seq.tokens.iter().all(|t| t.class == TokenClass::Other));
        assert_eq!(texts("a$b c"), ["a", "$", "b", "c"]);
    }

    #[test]
    fn line_continuation() {
        assert_eq!(texts("x = 1 + \\\n    2\n"), ["x", "=", "1", "+", "2"]);
        assert!(!kinds("x = 1 + \\\n    2\n").contains(&RawKind::Indent));
    }

    #[test]
    fn unicode_identifiers() {
        assert_eq!(texts("café = 'é'"), ["café", "=", "'é'"]);
    }
}
