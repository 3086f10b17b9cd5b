//! OpenAI-style JSON endpoints: chat completions and embeddings.

use std::time::Duration;

use base64::Engine;
use manimkit_core::agent::{ChatMessage, ChatModel, GenerationParams, Role};
use manimkit_core::codemetrics::CodeEmbedder;
use manimkit_core::video::{ImageEmbedder, RgbFrame};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::HttpSettings;
use crate::error::{KitError, KitResult};

/// A JSON POST client with bearer auth and exponential-backoff retries.
#[derive(Clone, Debug)]
pub struct JsonClient {
    agent: ureq::Agent,
    token: Option<String>,
    retries: u32,
    backoff: Duration,
}

impl JsonClient {
    /// Reads the token from the environment variable named in `settings`.
    pub fn new(settings: &HttpSettings) -> Self {
        let token = settings.api_key_env.as_deref().and_then(|k| std::env::var(k).ok()).filter(|t| !t.is_empty());
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs_f64(settings.timeout_secs)).build();
        Self { agent, token, retries: settings.retries, backoff: Duration::from_millis(settings.backoff_ms) }
    }

    /// Retries transport failures, 429 and 5xx responses; other statuses fail
    /// at once.
    pub fn post(&self, url: &str, body: &Value) -> KitResult<Value> {
        let mut attempt = 0;
        loop {
            let mut req = self.agent.post(url).set("Content-Type", "application/json");
            if let Some(t) = &self.token {
                req = req.set("Authorization", &format!("Bearer {t}"));
            }
            let err = match req.send_json(body) {
                Ok(resp) => {
                    return resp.into_json().map_err(|e| KitError::Endpoint(format!("{url}: unreadable response: {e}")));
                }
                Err(ureq::Error::Status(code, resp)) => {
                    let text = resp.into_string().unwrap_or_default();
                    let msg = format!("{url}: HTTP {code}: {}", text.chars().take(500).collect::<String>());
                    if code != 429 && code < 500 {
                        return Err(KitError::Endpoint(msg));
                    }
                    msg
                }
                Err(e) => format!("{url}: {e}"),
            };
            if attempt >= self.retries {
                return Err(KitError::Endpoint(format!("{err} (after {} attempts)", attempt + 1)));
            }
            log::warn!("{err}; retrying");
            std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt));
            attempt += 1;
        }
    }
}

#[derive(Deserialize)]
struct EmbeddingData {
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingData>,
}

fn parse_embeddings(v: Value, expected: usize) -> KitResult<Vec<Vec<f64>>> {
    let resp: EmbeddingResponse =
        serde_json::from_value(v).map_err(|e| KitError::Endpoint(format!("malformed embedding response: {e}")))?;
    if resp.data.len() != expected {
        return Err(KitError::Endpoint(format!("expected {expected} embeddings, got {}", resp.data.len())));
    }
    Ok(resp.data.into_iter().map(|d| d.embedding).collect())
}

/// `{"input": [...]}` → `{"data": [{"embedding": [...]}]}`.
#[derive(Clone, Debug)]
pub struct HttpCodeEmbedder {
    pub url: String,
    pub model: Option<String>,
    pub batch_size: usize,
    pub client: JsonClient,
}

impl HttpCodeEmbedder {
    fn request(&self, input: Value) -> Value {
        let mut body = json!({ "input": input });
        if let Some(m) = &self.model {
            body["model"] = json!(m);
        }
        body
    }
}

impl CodeEmbedder for HttpCodeEmbedder {
    type Error = KitError;

    fn embed_code(&self, inputs: &[&str]) -> KitResult<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(self.batch_size.max(1)) {
            let v = self.client.post(&self.url, &self.request(json!(chunk)))?;
            out.extend(parse_embeddings(v, chunk.len())?);
        }
        Ok(out)
    }
}

/// PNG bytes of an RGB frame.
pub fn encode_png(frame: &RgbFrame) -> KitResult<Vec<u8>> {
    let mut buf = Vec::new();
    let mut enc = png::Encoder::new(&mut buf, frame.width as u32, frame.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header().map_err(|e| KitError::Media(format!("png encoding failed: {e}")))?;
    w.write_image_data(&frame.data).map_err(|e| KitError::Media(format!("png encoding failed: {e}")))?;
    w.finish().map_err(|e| KitError::Media(format!("png encoding failed: {e}")))?;
    Ok(buf)
}

/// `{"input": [<base64 PNG>...], "kind": "image"}` → `{"data": [{"embedding": [...]}]}`.
#[derive(Clone, Debug)]
pub struct HttpImageEmbedder {
    pub url: String,
    pub model: Option<String>,
    pub batch_size: usize,
    pub client: JsonClient,
}

impl ImageEmbedder for HttpImageEmbedder {
    type Error = KitError;

    fn embed_images(&self, frames: &[RgbFrame]) -> KitResult<Vec<Vec<f64>>> {
        let b64 = base64::engine::general_purpose::STANDARD;
        let mut out = Vec::with_capacity(frames.len());
        for chunk in frames.chunks(self.batch_size.max(1)) {
            let images = chunk.iter().map(|f| Ok(b64.encode(encode_png(f)?))).collect::<KitResult<Vec<String>>>()?;
            let mut body = json!({ "input": images, "kind": "image" });
            if let Some(m) = &self.model {
                body["model"] = json!(m);
            }
            let v = self.client.post(&self.url, &body)?;
            out.extend(parse_embeddings(v, chunk.len())?);
        }
        Ok(out)
    }
}

/// Chat completions at `params.endpoint_url`.
#[derive(Clone, Debug)]
pub struct HttpChatModel {
    pub client: JsonClient,
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

pub fn chat_request(messages: &[ChatMessage], params: &GenerationParams) -> Value {
    let msgs: Vec<Value> = messages.iter().map(|m| json!({ "role": role_name(m.role), "content": m.content })).collect();
    json!({
        "model": params.model_name,
        "messages": msgs,
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    })
}

impl ChatModel for HttpChatModel {
    type Error = KitError;

    fn complete(&self, messages: &[ChatMessage], params: &GenerationParams) -> KitResult<String> {
        let v = self.client.post(&params.endpoint_url, &chat_request(messages, params))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| KitError::Endpoint("response has no choices[0].message.content".into()))
    }
}
