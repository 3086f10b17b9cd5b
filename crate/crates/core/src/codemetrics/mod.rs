//! Code similarity: n-gram and keyword-weighted n-gram precision, syntax
//! subtree matching, tree edit distance, embedding similarity, and the text
//! reward built from them.

mod bleu;
mod embed;
mod subtree;
mod ted;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub use bleu::{ngram_match, weighted_ngram_match, SMOOTHING_EPSILON};
pub use embed::{codebert_similarity, cosine, fnv1a, CodeEmbedder, HashedCodeEmbedder};
pub use subtree::syntax_match;
pub use ted::{ast_distance, tree_edit_distance};

pub use crate::lexer::{tokenize_code, Token, TokenClass, TokenSequence};
pub use crate::syntax::{parse_syntax, SyntaxTree};

use crate::error::{config, Result};
use crate::lexer::is_keyword;

/// Reserved words plus optional extra names (typically the library's exported
/// API names) that get the keyword weight.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub extra: BTreeSet<String>,
}

impl KeywordSet {
    pub fn with_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { extra: names.into_iter().map(Into::into).collect() }
    }

    pub fn contains(&self, token: &str) -> bool {
        is_keyword(token) || self.extra.contains(token)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeMetricsConfig {
    pub max_n: usize,
    pub keyword_weight: f64,
    /// Weights of (ngram, weighted_ngram, syntax_match); must sum to 1.
    pub weights: [f64; 3],
}

impl Default for CodeMetricsConfig {
    fn default() -> Self {
        Self { max_n: 4, keyword_weight: 5.0, weights: [1.0 / 3.0; 3] }
    }
}

impl CodeMetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 {
            return Err(config("max_n must be at least 1"));
        }
        if !(self.keyword_weight >= 1.0) || !self.keyword_weight.is_finite() {
            return Err(config("keyword_weight must be a finite value >= 1"));
        }
        check_weights(&self.weights)
    }
}

fn check_weights(weights: &[f64; 3]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(config("codebleu weights must be finite and non-negative"));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(config("codebleu weights must sum to 1"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeScoreBreakdown {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax_match: f64,
    pub codebleu: f64,
    pub ast_distance: f64,
    pub codebert_sim: f64,
    pub text_reward: f64,
}

/// Weighted sum of the three components.
pub fn codebleu(ngram: f64, weighted_ngram: f64, syntax: f64, weights: &[f64; 3]) -> Result<f64> {
    check_weights(weights)?;
    let v = weights[0] * ngram + weights[1] * weighted_ngram + weights[2] * syntax;
    Ok(v.clamp(0.0, 1.0))
}

/// Geometric mean of the lexical/structural score and the embedding score.
pub fn text_reward(cbleu: f64, cbert: f64) -> f64 {
    libm::sqrt((cbleu * cbert).max(0.0)).min(1.0)
}

/// The embedding-free part of the breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct LexicalScores {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax_match: f64,
    pub codebleu: f64,
    pub ast_distance: f64,
}

pub fn lexical_scores(gen: &str, reference: &str, cfg: &CodeMetricsConfig, keywords: &KeywordSet) -> Result<LexicalScores> {
    cfg.validate()?;
    let gen_tokens = tokenize_code(gen);
    let ref_tokens = tokenize_code(reference);
    let g: Vec<&str> = gen_tokens.texts().collect();
    let r: Vec<&str> = ref_tokens.texts().collect();
    let ngram = ngram_match(&g, &r, cfg.max_n)?;
    let weighted_ngram = weighted_ngram_match(&g, &r, cfg.max_n, cfg.keyword_weight, |t| keywords.contains(t))?;
    let gen_tree = parse_syntax(gen);
    let ref_tree = parse_syntax(reference);
    let syntax = syntax_match(&gen_tree, &ref_tree);
    Ok(LexicalScores {
        ngram,
        weighted_ngram,
        syntax_match: syntax,
        codebleu: codebleu(ngram, weighted_ngram, syntax, &cfg.weights)?,
        ast_distance: ast_distance(&gen_tree, &ref_tree),
    })
}

/// Full code comparison between generated and reference source.
pub fn score_code<E: CodeEmbedder>(
    gen: &str,
    reference: &str,
    cfg: &CodeMetricsConfig,
    keywords: &KeywordSet,
    embedder: &E,
) -> core::result::Result<CodeScoreBreakdown, E::Error> {
    let lex = lexical_scores(gen, reference, cfg, keywords)?;
    let codebert_sim = codebert_similarity(gen, reference, embedder)?;
    Ok(CodeScoreBreakdown {
        ngram: lex.ngram,
        weighted_ngram: lex.weighted_ngram,
        syntax_match: lex.syntax_match,
        codebleu: lex.codebleu,
        ast_distance: lex.ast_distance,
        codebert_sim,
        text_reward: text_reward(lex.codebleu, codebert_sim),
    })
}
