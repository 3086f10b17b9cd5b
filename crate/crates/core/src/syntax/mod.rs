//! Ordered syntax trees for Python source.
//!
//! [`parse_syntax`] never fails. Statements that do not parse become
//! [`SyntaxKind::Error`] nodes and parsing resumes at the next logical line,
//! so broken generations still produce a tree that can be scored.

mod parser;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use parser::parse_syntax;

/// Node kind labels. Operators and comparison keywords are leaf nodes of kind
/// [`SyntaxKind::Operator`] carrying their spelling, so `a + b` and `a - b`
/// differ structurally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyntaxKind {
    Module,
    Error,
    Block,
    FunctionDef,
    AsyncFunctionDef,
    ClassDef,
    Decorated,
    Decorator,
    Parameters,
    Param,
    StarParam,
    DoubleStarParam,
    PositionalSeparator,
    KeywordSeparator,
    Annotation,
    Default,
    ReturnAnnotation,
    If,
    ElifClause,
    ElseClause,
    For,
    AsyncFor,
    While,
    Try,
    ExceptClause,
    FinallyClause,
    With,
    AsyncWith,
    WithItem,
    Return,
    Pass,
    Break,
    Continue,
    Raise,
    Assert,
    Delete,
    Global,
    Nonlocal,
    Import,
    ImportFrom,
    ImportAlias,
    DottedName,
    WildcardImport,
    ExprStmt,
    Assign,
    AugAssign,
    AnnAssign,
    Lambda,
    Conditional,
    BoolOp,
    UnaryOp,
    Compare,
    BinaryOp,
    Await,
    Yield,
    YieldFrom,
    NamedExpr,
    Starred,
    DoubleStarred,
    Call,
    ArgList,
    KeywordArg,
    Attribute,
    Subscript,
    Slice,
    Identifier,
    Number,
    String,
    ConcatenatedString,
    True,
    False,
    None,
    Ellipsis,
    Tuple,
    List,
    Dict,
    Set,
    Pair,
    ListComp,
    SetComp,
    DictComp,
    GeneratorExp,
    ParenExpr,
    ForClause,
    IfClause,
    Operator(&'static str),
}

impl SyntaxKind {
    pub fn is_error(self) -> bool {
        self == SyntaxKind::Error
    }
}

impl fmt::Display for SyntaxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxKind::Operator(op) => write!(f, "Operator({op})"),
            other => fmt::Debug::fmt(other, f),
        }
    }
}

/// One node of a rooted ordered tree. `text` is set on identifier and literal
/// leaves; `start`/`end` are byte offsets into the parsed source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: SyntaxKind,
    pub text: Option<String>,
    pub start: usize,
    pub end: usize,
    pub children: Vec<SyntaxNode>,
}

impl SyntaxNode {
    pub fn new(kind: SyntaxKind, children: Vec<SyntaxNode>) -> Self {
        let start = children.first().map_or(0, |c| c.start);
        let end = children.last().map_or(0, |c| c.end);
        Self { kind, text: None, start, end, children }
    }

    pub fn leaf(kind: SyntaxKind) -> Self {
        Self { kind, text: None, start: 0, end: 0, children: Vec::new() }
    }

    pub fn with_span(mut self, start: usize, end: usize) -> Self {
        self.start = start;
        self.end = end;
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    /// Number of nodes in this subtree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(SyntaxNode::size).sum::<usize>()
    }

    /// Preorder traversal.
    pub fn iter(&self) -> Preorder<'_> {
        Preorder { stack: alloc::vec![self] }
    }

    /// True when the two subtrees have the same shape and kind labels.
    pub fn same_shape(&self, other: &SyntaxNode) -> bool {
        self.kind == other.kind
            && self.children.len() == other.children.len()
            && self.children.iter().zip(&other.children).all(|(a, b)| a.same_shape(b))
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a SyntaxNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a SyntaxNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxTree {
    pub root: SyntaxNode,
}

impl SyntaxTree {
    pub fn new(root: SyntaxNode) -> Self {
        Self { root }
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn iter(&self) -> Preorder<'_> {
        self.root.iter()
    }

    pub fn has_errors(&self) -> bool {
        self.iter().any(|n| n.kind.is_error())
    }

    pub fn contains_kind(&self, kind: SyntaxKind) -> bool {
        self.iter().any(|n| n.kind == kind)
    }
}

impl fmt::Display for SyntaxTree {
    /// S-expression rendering, kinds only.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(n: &SyntaxNode, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if n.children.is_empty() {
                return write!(f, "{}", n.kind);
            }
            write!(f, "({}", n.kind)?;
            for c in &n.children {
                f.write_str(" ")?;
                go(c, f)?;
            }
            f.write_str(")")
        }
        go(&self.root, f)
    }
}
