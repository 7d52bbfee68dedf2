use alloc::collections::BTreeMap;
use alloc::string::String;

use super::GenerationRequest;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("generative service error: {0}")]
    Service(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("no cached response for request {0} and live requests are disabled")]
    NotCached(String),
}

/// Anything that can turn a prompt into a completion.
pub trait GenerativeClient {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, ClientError>;
}

impl<C: GenerativeClient + ?Sized> GenerativeClient for &mut C {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, ClientError> {
        (**self).generate(request)
    }
}

/// Response storage keyed by [`GenerationRequest::cache_key`].
pub trait CacheStore {
    fn get(&self, key: &str) -> Result<Option<String>, ClientError>;
    fn put(&mut self, request: &GenerationRequest, response: &str) -> Result<(), ClientError>;
}

#[derive(Debug, Clone, Default)]
pub struct MemoryCache {
    pub entries: BTreeMap<String, String>,
}

impl CacheStore for MemoryCache {
    fn get(&self, key: &str) -> Result<Option<String>, ClientError> {
        Ok(self.entries.get(key).cloned())
    }

    fn put(&mut self, request: &GenerationRequest, response: &str) -> Result<(), ClientError> {
        self.entries.insert(request.cache_key.clone(), response.into());
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

/// Serves repeated requests from a cache and forwards only new ones.
#[derive(Debug)]
pub struct CachedClient<C, S> {
    pub inner: C,
    pub cache: S,
    pub stats: CacheStats,
}

impl<C, S> CachedClient<C, S> {
    pub fn new(inner: C, cache: S) -> Self {
        CachedClient {
            inner,
            cache,
            stats: CacheStats::default(),
        }
    }
}

impl<C: GenerativeClient, S: CacheStore> GenerativeClient for CachedClient<C, S> {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, ClientError> {
        if let Some(hit) = self.cache.get(&request.cache_key)? {
            self.stats.hits += 1;
            return Ok(hit);
        }
        self.stats.misses += 1;
        let response = self.inner.generate(request)?;
        self.cache.put(request, &response)?;
        Ok(response)
    }
}
