//! Embedding providers selected by configuration.

use manimkit_core::codemetrics::{CodeEmbedder, HashedCodeEmbedder};
use manimkit_core::video::{HashedImageEmbedder, ImageEmbedder, RgbFrame};

use crate::config::{EmbedderConfig, ProviderKind, RunConfig};
use crate::error::KitResult;
use crate::http::{HttpChatModel, HttpCodeEmbedder, HttpImageEmbedder, JsonClient};

#[derive(Clone, Debug)]
pub enum CodeProvider {
    Hashed(HashedCodeEmbedder),
    Http(HttpCodeEmbedder),
}

impl CodeProvider {
    pub fn from_config(cfg: &EmbedderConfig) -> Self {
        match cfg.kind {
            ProviderKind::Hashed => {
                let d = HashedCodeEmbedder::default();
                CodeProvider::Hashed(HashedCodeEmbedder { dim: cfg.dim.unwrap_or(d.dim) })
            }
            ProviderKind::Http => CodeProvider::Http(HttpCodeEmbedder {
                url: cfg.url.clone(),
                model: cfg.model.clone(),
                batch_size: cfg.batch_size,
                client: JsonClient::new(&cfg.http),
            }),
        }
    }
}

impl CodeEmbedder for CodeProvider {
    type Error = crate::KitError;

    fn embed_code(&self, inputs: &[&str]) -> KitResult<Vec<Vec<f64>>> {
        match self {
            CodeProvider::Hashed(e) => Ok(e.embed_code(inputs)?),
            CodeProvider::Http(e) => e.embed_code(inputs),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ImageProvider {
    Hashed(HashedImageEmbedder),
    Http(HttpImageEmbedder),
}

impl ImageProvider {
    pub fn from_config(cfg: &EmbedderConfig) -> Self {
        match cfg.kind {
            ProviderKind::Hashed => {
                let d = HashedImageEmbedder::default();
                ImageProvider::Hashed(HashedImageEmbedder { dim: cfg.dim.unwrap_or(d.dim), grid: d.grid })
            }
            ProviderKind::Http => ImageProvider::Http(HttpImageEmbedder {
                url: cfg.url.clone(),
                model: cfg.model.clone(),
                batch_size: cfg.batch_size,
                client: JsonClient::new(&cfg.http),
            }),
        }
    }
}

impl ImageEmbedder for ImageProvider {
    type Error = crate::KitError;

    fn embed_images(&self, frames: &[RgbFrame]) -> KitResult<Vec<Vec<f64>>> {
        match self {
            ImageProvider::Hashed(e) => Ok(e.embed_images(frames)?),
            ImageProvider::Http(e) => e.embed_images(frames),
        }
    }
}

pub fn chat_model(cfg: &RunConfig) -> HttpChatModel {
    HttpChatModel { client: JsonClient::new(&cfg.chat) }
}
