//! Recursive-descent parser for Python 3 statements and expressions.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{SyntaxKind as K, SyntaxNode, SyntaxTree};
use crate::lexer::{is_keyword, lex, RawKind, RawToken};

/// Nesting limit for blocks and expressions; deeper input becomes an error node.
const MAX_DEPTH: usize = 96;

const OP_SPELLINGS: &[&str] = &[
    "+", "-", "*", "/", "//", "%", "@", "**", "<<", ">>", "&", "|", "^", "~", "<", ">", "<=",
    ">=", "==", "!=", "+=", "-=", "*=", "/=", "//=", "%=", "@=", "**=", "<<=", ">>=", "&=", "|=",
    "^=", "and", "or", "not", "in", "not in", "is", "is not",
];

const AUG_OPS: &[&str] = &[
    "+=", "-=", "*=", "/=", "//=", "%=", "@=", "**=", "<<=", ">>=", "&=", "|=", "^=",
];

fn intern(op: &str) -> &'static str {
    OP_SPELLINGS.iter().copied().find(|s| *s == op).unwrap_or("?")
}

struct Fail;

type PResult<T> = Result<T, Fail>;

/// Parses Python source into an ordered syntax tree.
///
/// The root is a `Module` whose children are the top-level statements. When
/// nothing parses at all the result is a single `Error` node.
pub fn parse_syntax(code: &str) -> SyntaxTree {
    let lexed = lex(code);
    let mut parser = Parser { src: code, toks: lexed.tokens, pos: 0, depth: 0 };
    let root = parser.module();
    if !root.children.is_empty() && root.children.iter().all(|c| c.kind.is_error()) {
        return SyntaxTree::new(SyntaxNode::leaf(K::Error).with_span(0, code.len()));
    }
    SyntaxTree::new(root)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<RawToken>,
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> RawToken {
        self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> RawToken {
        self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn text(&self, t: RawToken) -> &'a str {
        &self.src[t.start..t.end]
    }

    fn bump(&mut self) -> RawToken {
        let t = self.peek();
        if t.kind != RawKind::End {
            self.pos += 1;
        }
        t
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].end
        }
    }

    fn is_op(&self, t: RawToken, op: &str) -> bool {
        t.kind == RawKind::Op && self.text(t) == op
    }

    fn is_kw(&self, t: RawToken, kw: &str) -> bool {
        t.kind == RawKind::Name && self.text(t) == kw
    }

    fn at_op(&self, op: &str) -> bool {
        self.is_op(self.peek(), op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.is_kw(self.peek(), kw)
    }

    fn at_any_op(&self, ops: &[&str]) -> bool {
        let t = self.peek();
        t.kind == RawKind::Op && ops.contains(&self.text(t))
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Fail)
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(Fail)
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.peek().kind {
            RawKind::Newline => {
                self.bump();
                Ok(())
            }
            RawKind::End => Ok(()),
            _ => Err(Fail),
        }
    }

    fn at_comp_for(&self) -> bool {
        self.at_kw("for") || (self.at_kw("async") && self.is_kw(self.peek_at(1), "for"))
    }

    fn starts_expr(&self) -> bool {
        let t = self.peek();
        match t.kind {
            RawKind::Number | RawKind::Str => true,
            RawKind::Name => {
                let w = self.text(t);
                !is_keyword(w) || matches!(w, "not" | "lambda" | "await" | "None" | "True" | "False")
            }
            RawKind::Op => matches!(self.text(t), "(" | "[" | "{" | "-" | "+" | "~" | "*" | "..."),
            _ => false,
        }
    }

    fn finish(&self, kind: K, start: usize, children: Vec<SyntaxNode>) -> SyntaxNode {
        SyntaxNode { kind, text: None, start, end: self.prev_end(), children }
    }

    fn token_leaf(&self, kind: K, t: RawToken) -> SyntaxNode {
        SyntaxNode::leaf(kind).with_span(t.start, t.end)
    }

    fn op_leaf(&self, op: &str, start: usize, end: usize) -> SyntaxNode {
        SyntaxNode::leaf(K::Operator(intern(op))).with_span(start, end)
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        if self.depth >= MAX_DEPTH {
            return Err(Fail);
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }

    fn name(&mut self) -> PResult<SyntaxNode> {
        let t = self.peek();
        if t.kind != RawKind::Name || is_keyword(self.text(t)) {
            return Err(Fail);
        }
        self.bump();
        Ok(self.token_leaf(K::Identifier, t).with_text(self.text(t)))
    }

    // ---- statements ----------------------------------------------------

    fn module(&mut self) -> SyntaxNode {
        let mut body = Vec::new();
        loop {
            match self.peek().kind {
                RawKind::End => break,
                RawKind::Newline | RawKind::Dedent => {
                    self.bump();
                }
                _ => body.extend(self.statement_or_recover()),
            }
        }
        SyntaxNode::new(K::Module, body).with_span(0, self.src.len())
    }

    fn statement_or_recover(&mut self) -> Vec<SyntaxNode> {
        let save = self.pos;
        let depth = self.depth;
        match self.statement() {
            Ok(nodes) => nodes,
            Err(Fail) => {
                self.pos = save;
                self.depth = depth;
                vec![self.recover()]
            }
        }
    }

    /// Skips the rest of the logical line plus any block indented under it.
    fn recover(&mut self) -> SyntaxNode {
        let start = self.peek().start;
        let mut end = start;
        let mut nest = 0usize;
        loop {
            let t = self.peek();
            match t.kind {
                RawKind::End => break,
                RawKind::Indent => {
                    nest += 1;
                    self.bump();
                }
                RawKind::Dedent => {
                    if nest == 0 {
                        break;
                    }
                    nest -= 1;
                    self.bump();
                    if nest == 0 {
                        break;
                    }
                }
                RawKind::Newline => {
                    self.bump();
                    if nest == 0 && self.peek().kind != RawKind::Indent {
                        break;
                    }
                }
                _ => {
                    end = t.end;
                    self.bump();
                }
            }
        }
        SyntaxNode::leaf(K::Error).with_span(start, end)
    }

    fn statement(&mut self) -> PResult<Vec<SyntaxNode>> {
        let t = self.peek();
        if t.kind == RawKind::Name {
            let node = match self.text(t) {
                "if" => Some(self.if_stmt()?),
                "while" => Some(self.while_stmt()?),
                "for" => Some(self.for_stmt(t.start)?),
                "try" => Some(self.try_stmt()?),
                "with" => Some(self.with_stmt(t.start)?),
                "def" => Some(self.funcdef(t.start)?),
                "class" => Some(self.classdef()?),
                "async" => {
                    self.bump();
                    let next = self.peek();
                    match self.text(next) {
                        "def" => Some(self.funcdef(t.start)?),
                        "for" => Some(self.for_stmt(t.start)?),
                        "with" => Some(self.with_stmt(t.start)?),
                        _ => return Err(Fail),
                    }
                }
                _ => None,
            };
            if let Some(node) = node {
                return Ok(vec![node]);
            }
        }
        if self.at_op("@") {
            return Ok(vec![self.decorated()?]);
        }
        self.simple_stmt()
    }

    fn simple_stmt(&mut self) -> PResult<Vec<SyntaxNode>> {
        let mut out = vec![self.small_stmt()?];
        while self.eat_op(";") {
            if matches!(self.peek().kind, RawKind::Newline | RawKind::End) {
                break;
            }
            out.push(self.small_stmt()?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn suite(&mut self) -> PResult<SyntaxNode> {
        self.nested(|p| {
            let start = p.peek().start;
            if p.peek().kind != RawKind::Newline {
                let body = p.simple_stmt()?;
                return Ok(p.finish(K::Block, start, body));
            }
            p.bump();
            if p.peek().kind != RawKind::Indent {
                return Err(Fail);
            }
            let start = p.bump().start;
            let mut body = Vec::new();
            loop {
                match p.peek().kind {
                    RawKind::Dedent => {
                        p.bump();
                        break;
                    }
                    RawKind::End => break,
                    RawKind::Newline => {
                        p.bump();
                    }
                    _ => body.extend(p.statement_or_recover()),
                }
            }
            let end = body.last().map_or(start, |n| n.end);
            Ok(SyntaxNode { kind: K::Block, text: None, start, end, children: body })
        })
    }

    fn small_stmt(&mut self) -> PResult<SyntaxNode> {
        let t = self.peek();
        if t.kind != RawKind::Name {
            return self.expr_stmt();
        }
        let start = t.start;
        match self.text(t) {
            "pass" => {
                self.bump();
                Ok(self.token_leaf(K::Pass, t))
            }
            "break" => {
                self.bump();
                Ok(self.token_leaf(K::Break, t))
            }
            "continue" => {
                self.bump();
                Ok(self.token_leaf(K::Continue, t))
            }
            "return" => {
                self.bump();
                let mut ch = Vec::new();
                if self.starts_expr() {
                    ch.push(self.testlist_star_expr()?);
                }
                Ok(self.finish(K::Return, start, ch))
            }
            "raise" => {
                self.bump();
                let mut ch = Vec::new();
                if self.starts_expr() {
                    ch.push(self.test()?);
                    if self.eat_kw("from") {
                        ch.push(self.test()?);
                    }
                }
                Ok(self.finish(K::Raise, start, ch))
            }
            "global" | "nonlocal" => {
                let kind = if self.text(t) == "global" { K::Global } else { K::Nonlocal };
                self.bump();
                let mut ch = vec![self.name()?];
                while self.eat_op(",") {
                    ch.push(self.name()?);
                }
                Ok(self.finish(kind, start, ch))
            }
            "del" => {
                self.bump();
                let target = self.exprlist()?;
                Ok(self.finish(K::Delete, start, vec![target]))
            }
            "assert" => {
                self.bump();
                let mut ch = vec![self.test()?];
                if self.eat_op(",") {
                    ch.push(self.test()?);
                }
                Ok(self.finish(K::Assert, start, ch))
            }
            "import" => {
                self.bump();
                let mut ch = vec![self.dotted_as_name()?];
                while self.eat_op(",") {
                    ch.push(self.dotted_as_name()?);
                }
                Ok(self.finish(K::Import, start, ch))
            }
            "from" => self.import_from(),
            _ => self.expr_stmt(),
        }
    }

    fn dotted_name(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut text = String::from(self.text(self.peek()));
        self.name()?;
        while self.at_op(".") {
            self.bump();
            text.push('.');
            let part = self.name()?;
            text.push_str(part.text.as_deref().unwrap_or(""));
        }
        Ok(SyntaxNode::leaf(K::DottedName).with_span(start, self.prev_end()).with_text(text))
    }

    fn dotted_as_name(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut ch = vec![self.dotted_name()?];
        if self.eat_kw("as") {
            ch.push(self.name()?);
        }
        Ok(self.finish(K::ImportAlias, start, ch))
    }

    fn import_from(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        let module_start = self.peek().start;
        let mut module = String::new();
        while self.at_op(".") || self.at_op("...") {
            let t = self.bump();
            module.push_str(self.text(t));
        }
        if !self.at_kw("import") {
            let dotted = self.dotted_name()?;
            module.push_str(dotted.text.as_deref().unwrap_or(""));
        }
        if module.is_empty() {
            return Err(Fail);
        }
        let mut ch = vec![SyntaxNode::leaf(K::DottedName)
            .with_span(module_start, self.prev_end())
            .with_text(module)];
        self.expect_kw("import")?;
        if self.at_op("*") {
            let t = self.bump();
            ch.push(self.token_leaf(K::WildcardImport, t));
        } else {
            let parens = self.eat_op("(");
            loop {
                let s = self.peek().start;
                let mut alias = vec![self.name()?];
                if self.eat_kw("as") {
                    alias.push(self.name()?);
                }
                ch.push(self.finish(K::ImportAlias, s, alias));
                if !self.eat_op(",") {
                    break;
                }
                if parens && self.at_op(")") {
                    break;
                }
            }
            if parens {
                self.expect_op(")")?;
            }
        }
        Ok(self.finish(K::ImportFrom, start, ch))
    }

    fn expr_stmt(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let first = if self.at_kw("yield") { self.yield_expr()? } else { self.testlist_star_expr()? };
        if self.at_op(":") {
            self.bump();
            let ann_start = self.peek().start;
            let ann = self.test()?;
            let mut ch = vec![first, self.finish(K::Annotation, ann_start, vec![ann])];
            if self.eat_op("=") {
                ch.push(self.assign_value()?);
            }
            return Ok(self.finish(K::AnnAssign, start, ch));
        }
        if self.at_any_op(AUG_OPS) {
            let t = self.bump();
            let op = self.op_leaf(self.text(t), t.start, t.end);
            let value = self.assign_value()?;
            return Ok(self.finish(K::AugAssign, start, vec![first, op, value]));
        }
        if self.at_op("=") {
            let mut parts = vec![first];
            while self.eat_op("=") {
                parts.push(self.assign_value()?);
            }
            return Ok(self.finish(K::Assign, start, parts));
        }
        Ok(self.finish(K::ExprStmt, start, vec![first]))
    }

    fn assign_value(&mut self) -> PResult<SyntaxNode> {
        if self.at_kw("yield") {
            self.yield_expr()
        } else {
            self.testlist_star_expr()
        }
    }

    fn if_stmt(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        let cond = self.namedexpr_test()?;
        self.expect_op(":")?;
        let mut ch = vec![cond, self.suite()?];
        loop {
            if self.at_kw("elif") {
                let s = self.bump().start;
                let c = self.namedexpr_test()?;
                self.expect_op(":")?;
                let b = self.suite()?;
                ch.push(self.finish(K::ElifClause, s, vec![c, b]));
            } else if self.at_kw("else") {
                ch.push(self.else_clause()?);
                break;
            } else {
                break;
            }
        }
        Ok(self.finish(K::If, start, ch))
    }

    fn else_clause(&mut self) -> PResult<SyntaxNode> {
        let s = self.bump().start;
        self.expect_op(":")?;
        let b = self.suite()?;
        Ok(self.finish(K::ElseClause, s, vec![b]))
    }

    fn while_stmt(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        let cond = self.namedexpr_test()?;
        self.expect_op(":")?;
        let mut ch = vec![cond, self.suite()?];
        if self.at_kw("else") {
            ch.push(self.else_clause()?);
        }
        Ok(self.finish(K::While, start, ch))
    }

    fn for_stmt(&mut self, start: usize) -> PResult<SyntaxNode> {
        let is_async = self.pos > 0 && self.is_kw(self.toks[self.pos - 1], "async") && self.toks[self.pos - 1].start == start;
        self.expect_kw("for")?;
        let target = self.exprlist()?;
        self.expect_kw("in")?;
        let iter = self.testlist_star_expr()?;
        self.expect_op(":")?;
        let mut ch = vec![target, iter, self.suite()?];
        if self.at_kw("else") {
            ch.push(self.else_clause()?);
        }
        Ok(self.finish(if is_async { K::AsyncFor } else { K::For }, start, ch))
    }

    fn try_stmt(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        self.expect_op(":")?;
        let mut ch = vec![self.suite()?];
        let mut handlers = 0;
        while self.at_kw("except") {
            let s = self.bump().start;
            self.eat_op("*");
            let mut clause = Vec::new();
            if !self.at_op(":") {
                clause.push(self.test()?);
                if self.eat_kw("as") {
                    clause.push(self.name()?);
                }
            }
            self.expect_op(":")?;
            clause.push(self.suite()?);
            ch.push(self.finish(K::ExceptClause, s, clause));
            handlers += 1;
        }
        if self.at_kw("else") {
            ch.push(self.else_clause()?);
        }
        if self.at_kw("finally") {
            let s = self.bump().start;
            self.expect_op(":")?;
            let b = self.suite()?;
            ch.push(self.finish(K::FinallyClause, s, vec![b]));
            handlers += 1;
        }
        if handlers == 0 {
            return Err(Fail);
        }
        Ok(self.finish(K::Try, start, ch))
    }

    fn with_stmt(&mut self, start: usize) -> PResult<SyntaxNode> {
        let is_async = self.peek().start != start;
        self.expect_kw("with")?;
        let save = self.pos;
        let items = match self.parenthesized_with_items() {
            Ok(items) => items,
            Err(Fail) => {
                self.pos = save;
                self.with_items()?
            }
        };
        self.expect_op(":")?;
        let mut ch = items;
        ch.push(self.suite()?);
        Ok(self.finish(if is_async { K::AsyncWith } else { K::With }, start, ch))
    }

    fn parenthesized_with_items(&mut self) -> PResult<Vec<SyntaxNode>> {
        self.expect_op("(")?;
        let mut items = Vec::new();
        while !self.at_op(")") {
            items.push(self.with_item()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if !self.at_op(":") || items.is_empty() {
            return Err(Fail);
        }
        Ok(items)
    }

    fn with_items(&mut self) -> PResult<Vec<SyntaxNode>> {
        let mut items = vec![self.with_item()?];
        while self.eat_op(",") {
            items.push(self.with_item()?);
        }
        Ok(items)
    }

    fn with_item(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut ch = vec![self.test()?];
        if self.eat_kw("as") {
            ch.push(self.expr()?);
        }
        Ok(self.finish(K::WithItem, start, ch))
    }

    fn funcdef(&mut self, start: usize) -> PResult<SyntaxNode> {
        let is_async = self.peek().start != start;
        self.expect_kw("def")?;
        let name = self.name()?;
        self.expect_op("(")?;
        let params = self.params(")", true)?;
        self.expect_op(")")?;
        let mut ch = vec![name, params];
        if self.at_op("->") {
            let s = self.bump().start;
            let ann = self.test()?;
            ch.push(self.finish(K::ReturnAnnotation, s, vec![ann]));
        }
        self.expect_op(":")?;
        ch.push(self.suite()?);
        Ok(self.finish(if is_async { K::AsyncFunctionDef } else { K::FunctionDef }, start, ch))
    }

    fn params(&mut self, close: &str, annotations: bool) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut ch = Vec::new();
        while !self.at_op(close) {
            let s = self.peek().start;
            if self.at_op("/") {
                let t = self.bump();
                ch.push(self.token_leaf(K::PositionalSeparator, t));
            } else if self.at_op("*") {
                let t = self.bump();
                if self.at_op(",") || self.at_op(close) {
                    ch.push(self.token_leaf(K::KeywordSeparator, t));
                } else {
                    let mut p = vec![self.name()?];
                    if annotations && self.at_op(":") {
                        p.push(self.annotation()?);
                    }
                    ch.push(self.finish(K::StarParam, s, p));
                }
            } else if self.eat_op("**") {
                let mut p = vec![self.name()?];
                if annotations && self.at_op(":") {
                    p.push(self.annotation()?);
                }
                ch.push(self.finish(K::DoubleStarParam, s, p));
            } else {
                let mut p = vec![self.name()?];
                if annotations && self.at_op(":") {
                    p.push(self.annotation()?);
                }
                if self.at_op("=") {
                    let ds = self.bump().start;
                    let v = self.test()?;
                    p.push(self.finish(K::Default, ds, vec![v]));
                }
                ch.push(self.finish(K::Param, s, p));
            }
            if !self.eat_op(",") {
                break;
            }
        }
        if ch.is_empty() {
            return Ok(SyntaxNode::leaf(K::Parameters).with_span(start, start));
        }
        Ok(self.finish(K::Parameters, start, ch))
    }

    fn annotation(&mut self) -> PResult<SyntaxNode> {
        let s = self.bump().start;
        let ann = self.test()?;
        Ok(self.finish(K::Annotation, s, vec![ann]))
    }

    fn classdef(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        let mut ch = vec![self.name()?];
        if self.at_op("(") {
            self.bump();
            ch.push(self.arglist()?);
            self.expect_op(")")?;
        }
        self.expect_op(":")?;
        ch.push(self.suite()?);
        Ok(self.finish(K::ClassDef, start, ch))
    }

    fn decorated(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut ch = Vec::new();
        while self.at_op("@") {
            let s = self.bump().start;
            let e = self.namedexpr_test()?;
            let dec = self.finish(K::Decorator, s, vec![e]);
            self.expect_newline()?;
            ch.push(dec);
        }
        let t = self.peek();
        let def = match self.text(t) {
            "def" => self.funcdef(t.start)?,
            "class" => self.classdef()?,
            "async" => {
                self.bump();
                self.funcdef(t.start)?
            }
            _ => return Err(Fail),
        };
        ch.push(def);
        Ok(self.finish(K::Decorated, start, ch))
    }

    // ---- expressions ---------------------------------------------------

    fn testlist_star_expr(&mut self) -> PResult<SyntaxNode> {
        self.expr_list(Self::test_or_star)
    }

    fn exprlist(&mut self) -> PResult<SyntaxNode> {
        self.expr_list(|p| if p.at_op("*") { p.star_expr() } else { p.expr() })
    }

    fn expr_list(&mut self, item: fn(&mut Self) -> PResult<SyntaxNode>) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let first = item(self)?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if !self.starts_expr() {
                break;
            }
            items.push(item(self)?);
        }
        Ok(self.finish(K::Tuple, start, items))
    }

    fn test_or_star(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("*") {
            self.star_expr()
        } else {
            self.test()
        }
    }

    fn named_or_star(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("*") {
            self.star_expr()
        } else {
            self.namedexpr_test()
        }
    }

    fn star_expr(&mut self) -> PResult<SyntaxNode> {
        let s = self.bump().start;
        let e = self.expr()?;
        Ok(self.finish(K::Starred, s, vec![e]))
    }

    fn namedexpr_test(&mut self) -> PResult<SyntaxNode> {
        let t = self.peek();
        if t.kind == RawKind::Name && self.is_op(self.peek_at(1), ":=") {
            let name = self.name()?;
            self.bump();
            let value = self.test()?;
            return Ok(self.finish(K::NamedExpr, t.start, vec![name, value]));
        }
        self.test()
    }

    fn test(&mut self) -> PResult<SyntaxNode> {
        self.nested(|p| {
            if p.at_kw("lambda") {
                return p.lambdef();
            }
            let start = p.peek().start;
            let body = p.or_test()?;
            if p.eat_kw("if") {
                let cond = p.or_test()?;
                p.expect_kw("else")?;
                let orelse = p.test()?;
                return Ok(p.finish(K::Conditional, start, vec![body, cond, orelse]));
            }
            Ok(body)
        })
    }

    fn lambdef(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        let params = self.params(":", false)?;
        self.expect_op(":")?;
        let body = self.test()?;
        Ok(self.finish(K::Lambda, start, vec![params, body]))
    }

    fn or_test(&mut self) -> PResult<SyntaxNode> {
        self.bool_chain("or", Self::and_test)
    }

    fn and_test(&mut self) -> PResult<SyntaxNode> {
        self.bool_chain("and", Self::not_test)
    }

    fn bool_chain(&mut self, kw: &str, next: fn(&mut Self) -> PResult<SyntaxNode>) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut left = next(self)?;
        while self.at_kw(kw) {
            let t = self.bump();
            let op = self.op_leaf(kw, t.start, t.end);
            let right = next(self)?;
            left = self.finish(K::BoolOp, start, vec![left, op, right]);
        }
        Ok(left)
    }

    fn not_test(&mut self) -> PResult<SyntaxNode> {
        if self.at_kw("not") {
            return self.nested(|p| {
                let t = p.bump();
                let op = p.op_leaf("not", t.start, t.end);
                let operand = p.not_test()?;
                Ok(p.finish(K::UnaryOp, t.start, vec![op, operand]))
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let first = self.expr()?;
        let mut ch = vec![first];
        loop {
            let t = self.peek();
            let op = if self.at_any_op(&["<", ">", "==", ">=", "<=", "!="]) {
                self.bump();
                self.text(t)
            } else if self.at_kw("in") {
                self.bump();
                "in"
            } else if self.at_kw("not") && self.is_kw(self.peek_at(1), "in") {
                self.bump();
                self.bump();
                "not in"
            } else if self.at_kw("is") {
                self.bump();
                if self.eat_kw("not") {
                    "is not"
                } else {
                    "is"
                }
            } else {
                break;
            };
            ch.push(self.op_leaf(op, t.start, self.prev_end()));
            ch.push(self.expr()?);
        }
        if ch.len() == 1 {
            return Ok(ch.pop().unwrap_or_else(|| SyntaxNode::leaf(K::Error)));
        }
        Ok(self.finish(K::Compare, start, ch))
    }

    fn binary(&mut self, ops: &[&str], next: fn(&mut Self) -> PResult<SyntaxNode>) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut left = next(self)?;
        while self.at_any_op(ops) {
            let t = self.bump();
            let op = self.op_leaf(self.text(t), t.start, t.end);
            let right = next(self)?;
            left = self.finish(K::BinaryOp, start, vec![left, op, right]);
        }
        Ok(left)
    }

    fn expr(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["|"], Self::xor_expr)
    }

    fn xor_expr(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["^"], Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["&"], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["<<", ">>"], Self::arith_expr)
    }

    fn arith_expr(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["*", "/", "%", "//", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<SyntaxNode> {
        if self.at_any_op(&["+", "-", "~"]) {
            return self.nested(|p| {
                let t = p.bump();
                let op = p.op_leaf(p.text(t), t.start, t.end);
                let operand = p.factor()?;
                Ok(p.finish(K::UnaryOp, t.start, vec![op, operand]))
            });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let base = if self.at_kw("await") {
            self.bump();
            let e = self.primary()?;
            self.finish(K::Await, start, vec![e])
        } else {
            self.primary()?
        };
        if self.at_op("**") {
            let t = self.bump();
            let op = self.op_leaf("**", t.start, t.end);
            let exp = self.nested(Self::factor)?;
            return Ok(self.finish(K::BinaryOp, start, vec![base, op, exp]));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut node = self.atom()?;
        loop {
            if self.at_op("(") {
                let s = self.bump().start;
                let mut args = self.arglist()?;
                self.expect_op(")")?;
                args.start = s;
                args.end = self.prev_end();
                node = self.finish(K::Call, start, vec![node, args]);
            } else if self.at_op("[") {
                self.bump();
                let sub = self.subscriptlist()?;
                self.expect_op("]")?;
                node = self.finish(K::Subscript, start, vec![node, sub]);
            } else if self.at_op(".") {
                self.bump();
                let attr = self.name()?;
                node = self.finish(K::Attribute, start, vec![node, attr]);
            } else {
                return Ok(node);
            }
        }
    }

    fn arglist(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let mut args = Vec::new();
        while !self.at_op(")") {
            let s = self.peek().start;
            let arg = if self.at_op("*") {
                self.bump();
                let e = self.test()?;
                self.finish(K::Starred, s, vec![e])
            } else if self.at_op("**") {
                self.bump();
                let e = self.test()?;
                self.finish(K::DoubleStarred, s, vec![e])
            } else if self.peek().kind == RawKind::Name && self.is_op(self.peek_at(1), "=") {
                let name = self.name()?;
                self.bump();
                let value = self.test()?;
                self.finish(K::KeywordArg, s, vec![name, value])
            } else {
                let e = self.namedexpr_test()?;
                if self.at_comp_for() {
                    let mut ch = vec![e];
                    ch.extend(self.comp_clauses()?);
                    self.finish(K::GeneratorExp, s, ch)
                } else {
                    e
                }
            };
            args.push(arg);
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(self.finish(K::ArgList, start, args))
    }

    fn subscriptlist(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let first = self.subscript()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.subscript()?);
        }
        Ok(self.finish(K::Tuple, start, items))
    }

    fn subscript(&mut self) -> PResult<SyntaxNode> {
        let start = self.peek().start;
        let lower = if self.at_op(":") { None } else { Some(self.test_or_star()?) };
        if !self.at_op(":") {
            return lower.ok_or(Fail);
        }
        self.bump();
        let mut ch: Vec<SyntaxNode> = lower.into_iter().collect();
        if self.starts_expr() {
            ch.push(self.test()?);
        }
        if self.eat_op(":") && self.starts_expr() {
            ch.push(self.test()?);
        }
        Ok(self.finish(K::Slice, start, ch))
    }

    fn comp_clauses(&mut self) -> PResult<Vec<SyntaxNode>> {
        let mut out = Vec::new();
        loop {
            let s = self.peek().start;
            if self.at_comp_for() {
                self.eat_kw("async");
                self.bump();
                let target = self.exprlist()?;
                self.expect_kw("in")?;
                let iter = self.or_test()?;
                out.push(self.finish(K::ForClause, s, vec![target, iter]));
            } else if self.at_kw("if") {
                self.bump();
                let cond = if self.at_kw("lambda") { self.lambdef()? } else { self.or_test()? };
                out.push(self.finish(K::IfClause, s, vec![cond]));
            } else {
                return Ok(out);
            }
        }
    }

    fn yield_expr(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        if self.eat_kw("from") {
            let e = self.test()?;
            return Ok(self.finish(K::YieldFrom, start, vec![e]));
        }
        let mut ch = Vec::new();
        if self.starts_expr() {
            ch.push(self.testlist_star_expr()?);
        }
        Ok(self.finish(K::Yield, start, ch))
    }

    fn atom(&mut self) -> PResult<SyntaxNode> {
        let t = self.peek();
        match t.kind {
            RawKind::Name => {
                let w = self.text(t);
                let kind = match w {
                    "True" => K::True,
                    "False" => K::False,
                    "None" => K::None,
                    _ if is_keyword(w) => return Err(Fail),
                    _ => K::Identifier,
                };
                self.bump();
                let leaf = self.token_leaf(kind, t);
                Ok(if kind == K::Identifier { leaf.with_text(w) } else { leaf })
            }
            RawKind::Number => {
                self.bump();
                Ok(self.token_leaf(K::Number, t).with_text(self.text(t)))
            }
            RawKind::Str => {
                let mut parts = Vec::new();
                while self.peek().kind == RawKind::Str {
                    let s = self.bump();
                    parts.push(self.token_leaf(K::String, s).with_text(self.text(s)));
                }
                if parts.len() == 1 {
                    Ok(parts.remove(0))
                } else {
                    Ok(self.finish(K::ConcatenatedString, t.start, parts))
                }
            }
            RawKind::Op => match self.text(t) {
                "(" => self.nested(Self::paren_atom),
                "[" => self.nested(Self::list_atom),
                "{" => self.nested(Self::brace_atom),
                "..." => {
                    self.bump();
                    Ok(self.token_leaf(K::Ellipsis, t))
                }
                _ => Err(Fail),
            },
            _ => Err(Fail),
        }
    }

    fn paren_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        if self.eat_op(")") {
            return Ok(self.finish(K::Tuple, start, Vec::new()));
        }
        if self.at_kw("yield") {
            let y = self.yield_expr()?;
            self.expect_op(")")?;
            return Ok(self.finish(K::ParenExpr, start, vec![y]));
        }
        let first = self.named_or_star()?;
        if self.at_comp_for() {
            let mut ch = vec![first];
            ch.extend(self.comp_clauses()?);
            self.expect_op(")")?;
            return Ok(self.finish(K::GeneratorExp, start, ch));
        }
        if self.at_op(",") {
            let mut items = vec![first];
            while self.eat_op(",") {
                if self.at_op(")") {
                    break;
                }
                items.push(self.named_or_star()?);
            }
            self.expect_op(")")?;
            return Ok(self.finish(K::Tuple, start, items));
        }
        self.expect_op(")")?;
        Ok(self.finish(K::ParenExpr, start, vec![first]))
    }

    fn list_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        if self.eat_op("]") {
            return Ok(self.finish(K::List, start, Vec::new()));
        }
        let first = self.named_or_star()?;
        if self.at_comp_for() {
            let mut ch = vec![first];
            ch.extend(self.comp_clauses()?);
            self.expect_op("]")?;
            return Ok(self.finish(K::ListComp, start, ch));
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.named_or_star()?);
        }
        self.expect_op("]")?;
        Ok(self.finish(K::List, start, items))
    }

    fn brace_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().start;
        if self.eat_op("}") {
            return Ok(self.finish(K::Dict, start, Vec::new()));
        }
        let (first, is_dict) = self.brace_element(None)?;
        if self.at_comp_for() {
            let mut ch = vec![first];
            ch.extend(self.comp_clauses()?);
            self.expect_op("}")?;
            let kind = if is_dict { K::DictComp } else { K::SetComp };
            return Ok(self.finish(kind, start, ch));
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            items.push(self.brace_element(Some(is_dict))?.0);
        }
        self.expect_op("}")?;
        Ok(self.finish(if is_dict { K::Dict } else { K::Set }, start, items))
    }

    /// One element of a dict or set display. `expect_dict` is `None` for the
    /// first element, which decides the display type.
    fn brace_element(&mut self, expect_dict: Option<bool>) -> PResult<(SyntaxNode, bool)> {
        let s = self.peek().start;
        if self.at_op("**") {
            if expect_dict == Some(false) {
                return Err(Fail);
            }
            self.bump();
            let e = self.expr()?;
            return Ok((self.finish(K::DoubleStarred, s, vec![e]), true));
        }
        let key = self.named_or_star()?;
        if expect_dict != Some(false) && self.eat_op(":") {
            let value = self.test()?;
            return Ok((self.finish(K::Pair, s, vec![key, value]), true));
        }
        if expect_dict == Some(true) {
            return Err(Fail);
        }
        Ok((key, false))
    }
}
