use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use super::{fingerprint, ChatBackend, ChatRequest, ChatResponse, LlmError};

/// Directory of recorded responses, one `<fingerprint>.txt` per request,
/// holding the raw response text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("{fingerprint}.txt"))
    }

    pub fn get(&self, fingerprint: &str) -> Result<Option<String>, LlmError> {
        match fs::read_to_string(self.path_for(fingerprint)) {
            Ok(text) => Ok(Some(text)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(LlmError::Fixture(format!("{}: {e}", self.dir.display()))),
        }
    }

    /// Writes through a temporary file in the same directory and renames it
    /// into place, so concurrent readers never see a partial fixture.
    pub fn put(&self, fingerprint: &str, text: &str) -> Result<(), LlmError> {
        let io = |e: std::io::Error| LlmError::Fixture(format!("{}: {e}", self.dir.display()));
        fs::create_dir_all(&self.dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(text.as_bytes()).map_err(io)?;
        tmp.persist(self.path_for(fingerprint))
            .map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn contains(&self, fingerprint: &str) -> bool {
        self.path_for(fingerprint).is_file()
    }
}

/// Serves responses from a [`FixtureStore`] only; never touches the network.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    id: String,
    store: FixtureStore,
}

impl ReplayBackend {
    pub fn new(store: FixtureStore) -> Self {
        let id = format!("replay:{}", store.dir().display());
        ReplayBackend { id, store }
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl ChatBackend for ReplayBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let fp = fingerprint(request);
        match self.store.get(&fp)? {
            Some(text) => Ok(ChatResponse {
                text,
                backend_id: self.id.clone(),
                latency: Duration::ZERO,
            }),
            None => Err(LlmError::FixtureMiss {
                model_id: request.model_id().to_string(),
                fingerprint: fp,
            }),
        }
    }
}

/// Replays when a fixture exists, otherwise calls `live` and records the
/// response.
pub struct RecordingBackend<B> {
    id: String,
    store: FixtureStore,
    live: B,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(store: FixtureStore, live: B) -> Self {
        let id = format!("record:{}", live.id());
        RecordingBackend { id, store, live }
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let fp = fingerprint(request);
        if let Some(text) = self.store.get(&fp)? {
            return Ok(ChatResponse {
                text,
                backend_id: self.id.clone(),
                latency: Duration::ZERO,
            });
        }
        let response = self.live.complete(request)?;
        self.store.put(&fp, &response.text)?;
        log::info!("recorded fixture {fp} for model {}", request.model_id());
        Ok(response)
    }
}
