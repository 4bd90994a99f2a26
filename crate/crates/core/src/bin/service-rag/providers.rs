use service_rag::config::{AppConfig, ProviderChoice};
use service_rag::generation::{ChatProvider, MockChatProvider, RemoteChatProvider};
use service_rag::vectors::{CachedEmbedder, Embedder, MockEmbedder, RemoteEmbedder};

use crate::errors::CliError;

pub fn make_embedder(cfg: &AppConfig) -> Result<Box<dyn Embedder>, CliError> {
    let base: Box<dyn Embedder> = match cfg.provider {
        ProviderChoice::Mock => Box::new(MockEmbedder::default()),
        ProviderChoice::Remote => {
            Box::new(RemoteEmbedder::from_config(&cfg.embedding.provider_config())?)
        }
    };
    Ok(match &cfg.cache_dir {
        Some(dir) => Box::new(CachedEmbedder::new(base, dir.clone())),
        None => base,
    })
}

pub fn make_chat(cfg: &AppConfig) -> Result<Box<dyn ChatProvider>, CliError> {
    Ok(match cfg.provider {
        // The offline mock honors the RAG template's empty-context case
        // and otherwise echoes the request back.
        ProviderChoice::Mock => Box::new(
            MockChatProvider::new().script("*<context></context>*", "I don't know"),
        ),
        ProviderChoice::Remote => {
            Box::new(RemoteChatProvider::new(cfg.chat.endpoint_url.as_deref())?)
        }
    })
}
