use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::ApiQuery;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureMode {
    /// Serve stored responses, fetch and store the rest.
    Record,
    /// Serve stored responses only; a miss is an error.
    Replay,
    /// Always fetch; nothing is stored.
    Live,
}

/// Sidecar written next to every stored body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub query: String,
    pub retrieved_at: String,
}

/// Response bodies keyed by canonical query: `<root>/<sha256>.json` holds the
/// body byte-for-byte and `<root>/<sha256>.meta` the query and timestamp.
#[derive(Debug)]
pub struct FixtureStore {
    root: PathBuf,
    mode: FixtureMode,
    write_lock: Mutex<()>,
}

impl FixtureStore {
    pub fn new(root: impl Into<PathBuf>, mode: FixtureMode) -> Self {
        FixtureStore { root: root.into(), mode, write_lock: Mutex::new(()) }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn mode(&self) -> FixtureMode {
        self.mode
    }

    pub fn body_path(&self, query: &ApiQuery) -> PathBuf {
        self.root.join(format!("{}.json", query.cache_key()))
    }

    fn meta_path(&self, query: &ApiQuery) -> PathBuf {
        self.root.join(format!("{}.meta", query.cache_key()))
    }

    pub fn load(&self, query: &ApiQuery) -> io::Result<Option<(Vec<u8>, FixtureMeta)>> {
        let body = match fs::read(self.body_path(query)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let meta: FixtureMeta = serde_json::from_slice(&fs::read(self.meta_path(query))?)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        if meta.query != query.canonical() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("fixture {} was recorded for {}", query.cache_key(), meta.query),
            ));
        }
        Ok(Some((body, meta)))
    }

    /// Stores a body and its sidecar. Writes go through a temp file and
    /// rename, one key at a time.
    pub fn save(&self, query: &ApiQuery, body: &[u8], retrieved_at: &str) -> io::Result<FixtureMeta> {
        let meta = FixtureMeta { query: query.canonical(), retrieved_at: retrieved_at.to_string() };
        let _guard = self.write_lock.lock().expect("fixture lock poisoned");
        fs::create_dir_all(&self.root)?;
        let mut meta_bytes = serde_json::to_vec_pretty(&meta).map_err(io::Error::other)?;
        meta_bytes.push(b'\n');
        write_atomic(&self.meta_path(query), &meta_bytes)?;
        write_atomic(&self.body_path(query), body)?;
        Ok(meta)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("{}.tmp", path.extension().and_then(|e| e.to_str()).unwrap_or("")));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
