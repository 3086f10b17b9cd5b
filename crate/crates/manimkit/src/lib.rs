//! Runtime side of manimkit: the Manim renderer adapter, ffmpeg frame
//! sampling, HTTP providers for chat and embeddings, knowledge-base files,
//! dataset loading, evaluation runs and reports.
//!
//! The scoring math lives in [`manimkit_core`]; this crate supplies the
//! implementations of its provider traits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
mod error;
pub mod harness;
pub mod http;
pub mod kb;
pub mod media;
pub mod providers;
pub mod renderer;
pub mod report;

pub use error::{KitError, KitResult};
pub use manimkit_core as core;
