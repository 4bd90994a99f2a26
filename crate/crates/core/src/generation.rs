//! Chat-completion providers (remote OpenAI-compatible or scripted mock)
//! and the prompt templates for all four task kinds.

use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::Chunk;
use crate::net::{self, HttpError};

/// The retrieval-augmented QA system prompt. The `{context}` placeholder
/// is substituted once, literally, with the retrieved chunk texts.
pub const RAG_TEMPLATE: &str = "\nAnswer the user questions in detail and explain all necessary solution steps. If the context does not\ncontain any relevant information to answer the question, just say \"I don't know\":\n<context>{context}</context>";

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("messages list is empty")]
    NoMessages,
    #[error("remote chat provider needs an endpoint URL (config or {})", net::BASE_URL_ENV)]
    MissingEndpoint,
    #[error("remote provider needs an API key in {}", net::API_KEY_ENV)]
    MissingApiKey,
    #[error("chat provider call failed: {0}")]
    Provider(#[from] HttpError),
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("unusable chat response: {message}")]
    BadResponse { message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

/// Per-call generation parameters. Temperature defaults to 0 so repeated
/// runs are as reproducible as the provider allows.
#[derive(Debug, Clone)]
pub struct GenerationConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            model_name: "gpt-3.5-turbo-0125".to_string(),
            temperature: 0.0,
            max_output_tokens: 1024,
            timeout: Duration::from_secs(60),
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateId {
    RagQa,
    Correction,
    Summary,
    Paraphrase,
}

/// A fully rendered prompt ready to send.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub messages: Vec<ChatMessage>,
    pub template_id: TemplateId,
    /// For RAG prompts, the exact text injected between the context tags.
    pub rendered_context: String,
}

/// Build the RAG prompt: the template above as the system message with the
/// chunk texts (joined by blank lines, retrieval order preserved) injected
/// at `{context}`, and the question as the user message.
pub fn render_rag_prompt(context_chunks: &[Chunk], question: &str) -> PromptBundle {
    let context = context_chunks
        .iter()
        .map(|c| c.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n");
    let system = RAG_TEMPLATE.replacen("{context}", &context, 1);
    PromptBundle {
        messages: vec![ChatMessage::system(system), ChatMessage::user(question)],
        template_id: TemplateId::RagQa,
        rendered_context: context,
    }
}

pub fn render_correction_prompt(text: &str) -> PromptBundle {
    PromptBundle {
        messages: vec![
            ChatMessage::system(
                "Fix spelling and grammar only, preserve wording and content. \
                 Return only the corrected text.",
            ),
            ChatMessage::user(text),
        ],
        template_id: TemplateId::Correction,
        rendered_context: String::new(),
    }
}

pub fn render_summary_prompt(text: &str, target_words: usize) -> PromptBundle {
    PromptBundle {
        messages: vec![
            ChatMessage::system(
                "You summarize technical service conversations. Return only the summary.",
            ),
            ChatMessage::user(format!(
                "Summarize the following text in exactly {target_words} words:\n\n{text}"
            )),
        ],
        template_id: TemplateId::Summary,
        rendered_context: String::new(),
    }
}

pub fn render_paraphrase_prompt(request_text: &str, n: usize) -> PromptBundle {
    PromptBundle {
        messages: vec![
            ChatMessage::system(
                "You reformulate customer service requests without changing their meaning.",
            ),
            ChatMessage::user(format!(
                "Produce {n} reformulations of the same problem described below, each \
                 expressing the identical issue in different words. Write one reformulation \
                 per line, prefixed with its number like \"1) \".\n\n{request_text}"
            )),
        ],
        template_id: TemplateId::Paraphrase,
        rendered_context: String::new(),
    }
}

/// Split a paraphrase completion into individual variants: lines prefixed
/// `n)` first, otherwise blank-line separated blocks.
pub fn parse_paraphrases(text: &str) -> Vec<String> {
    let mut numbered = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim_start();
        let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            if let Some(rest) = trimmed[digits..].strip_prefix(')') {
                let body = rest.trim();
                if !body.is_empty() {
                    numbered.push(body.to_string());
                }
            }
        }
    }
    if !numbered.is_empty() {
        return numbered;
    }
    text.split("\n\n")
        .map(str::trim)
        .filter(|b| !b.is_empty())
        .map(str::to_string)
        .collect()
}

/// Anything that can answer a chat prompt.
pub trait ChatProvider: Send + Sync {
    fn complete(
        &self,
        messages: &[ChatMessage],
        cfg: &GenerationConfig,
    ) -> Result<String, GenerationError>;
}

/// OpenAI-compatible `/chat/completions` client.
pub struct RemoteChatProvider {
    base_url: String,
    api_key: String,
}

impl RemoteChatProvider {
    /// `endpoint` may be overridden by `SERVICE_RAG_BASE_URL`; the API key
    /// always comes from `SERVICE_RAG_API_KEY`.
    pub fn new(endpoint: Option<&str>) -> Result<Self, GenerationError> {
        let base_url =
            net::effective_base_url(endpoint).ok_or(GenerationError::MissingEndpoint)?;
        let api_key = net::api_key().ok_or(GenerationError::MissingApiKey)?;
        Ok(RemoteChatProvider {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
        })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: Option<String>,
}

impl ChatProvider for RemoteChatProvider {
    fn complete(
        &self,
        messages: &[ChatMessage],
        cfg: &GenerationConfig,
    ) -> Result<String, GenerationError> {
        if messages.is_empty() {
            return Err(GenerationError::NoMessages);
        }
        let body = serde_json::json!({
            "model": cfg.model_name,
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
            "messages": messages
                .iter()
                .map(|m| serde_json::json!({ "role": m.role.as_str(), "content": m.content }))
                .collect::<Vec<_>>(),
        });
        let url = format!("{}/chat/completions", self.base_url);
        let agent = net::build_agent(cfg.timeout);
        let value = net::post_json(&agent, &url, &self.api_key, &body, cfg.max_retries)?;
        let resp: ChatResponse =
            serde_json::from_value(value).map_err(|e| GenerationError::BadResponse {
                message: e.to_string(),
            })?;
        let text = resp
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or(GenerationError::BadResponse {
                message: "no choices in response".to_string(),
            })?;
        if text.trim().is_empty() {
            return Err(GenerationError::EmptyCompletion);
        }
        Ok(text)
    }
}

/// Match `pattern` against `text` where `*` matches any substring
/// (including the empty one). No other metacharacters.
fn glob_match(pattern: &str, text: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == text;
    }
    let first = parts[0];
    if !text.starts_with(first) {
        return false;
    }
    let mut pos = first.len();
    for part in &parts[1..parts.len() - 1] {
        if part.is_empty() {
            continue;
        }
        match text[pos..].find(part) {
            Some(i) => pos = pos + i + part.len(),
            None => return false,
        }
    }
    let last = parts[parts.len() - 1];
    last.is_empty() || text[pos..].ends_with(last)
}

/// Scripted offline chat provider. Each script is a (glob pattern,
/// response) pair matched against all message contents joined by newlines;
/// the first match wins and unmatched prompts echo the last user message.
/// Every received prompt is recorded for assertions.
pub struct MockChatProvider {
    scripts: Vec<(String, String)>,
    log: Mutex<Vec<Vec<ChatMessage>>>,
}

impl Default for MockChatProvider {
    fn default() -> Self {
        Self::new()
    }
}

impl MockChatProvider {
    pub fn new() -> Self {
        MockChatProvider { scripts: Vec::new(), log: Mutex::new(Vec::new()) }
    }

    pub fn with_scripts(scripts: Vec<(String, String)>) -> Self {
        MockChatProvider { scripts, log: Mutex::new(Vec::new()) }
    }

    /// Builder-style script registration.
    pub fn script(mut self, pattern: impl Into<String>, response: impl Into<String>) -> Self {
        self.scripts.push((pattern.into(), response.into()));
        self
    }

    /// Every prompt received so far, in call order.
    pub fn prompt_log(&self) -> Vec<Vec<ChatMessage>> {
        self.log.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl ChatProvider for MockChatProvider {
    fn complete(
        &self,
        messages: &[ChatMessage],
        _cfg: &GenerationConfig,
    ) -> Result<String, GenerationError> {
        if messages.is_empty() {
            return Err(GenerationError::NoMessages);
        }
        self.log
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .push(messages.to_vec());
        let joined = messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        for (pattern, response) in &self.scripts {
            if glob_match(pattern, &joined) {
                return Ok(response.clone());
            }
        }
        let echo = messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .unwrap_or_else(|| messages.last().expect("nonempty checked above"));
        Ok(echo.content.clone())
    }
}
