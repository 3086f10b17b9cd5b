//! Scoring, alignment, reward and agent-loop logic for generated Manim animations.
//!
//! Everything in this crate is pure computation over in-memory values and builds
//! without the standard library (`alloc` only). Rendering, video decoding, HTTP
//! providers, file formats and the CLI live in the `manimkit` crate, which plugs
//! into the traits defined here ([`render::SceneRenderer`], [`agent::ChatModel`],
//! [`codemetrics::CodeEmbedder`], [`video::ImageEmbedder`], [`reward::RewardEnv`]).

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agent;
pub mod codeblock;
pub mod codemetrics;
pub mod docs;
mod error;
pub mod eval;
pub mod grpo;
pub mod lexer;
pub mod render;
pub mod reward;
pub mod stats;
pub mod syntax;
pub mod video;

pub use error::{Error, Result};
