//! Content-addressed snapshots of fetched aggregates.
//!
//! A snapshot is a directory `<root>/<id>/` holding `manifest.json`, three
//! newline-delimited JSON tables and a `snapshot.meta` sidecar with the wall
//! clock creation time. The id is a hash of the manifest and tables only, so
//! saving the same data twice yields the same id and the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Period, WorkCounts};
use crate::error::Error;
use crate::kflow::CohortSource;
use crate::openalex::GroupedCount;

pub const SCHEMA_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const WORK_COUNTS: &str = "work_counts.ndjson";
const COHORTS: &str = "cohorts.ndjson";
const AUTHOR_COUNTRIES: &str = "author_countries.ndjson";
const SIDECAR: &str = "snapshot.meta";
const LATEST: &str = "LATEST";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("snapshot {id} not found under {root}")]
    NotFound { id: String, root: PathBuf },
    #[error("snapshot {id} is corrupt: content hash is {actual}")]
    Corrupt { id: String, actual: String },
    #[error("snapshot {id} has schema version {found}, this build reads {expected}; migrate it first")]
    SchemaMismatch { id: String, found: u32, expected: u32 },
    #[error("snapshot {id}: cannot parse {file}: {message}")]
    Parse { id: String, file: String, message: String },
    #[error("snapshot i/o: {0}")]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn is_integrity(&self) -> bool {
        matches!(self, StoreError::Corrupt { .. } | StoreError::Parse { .. } | StoreError::SchemaMismatch { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CohortRecord {
    pub discipline: String,
    pub year: i32,
    pub authors: Vec<GroupedCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AuthorCountries {
    pub author_id: String,
    pub year: i32,
    pub countries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query: String,
    pub retrieved_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub queries: Vec<QueryRecord>,
}

impl Manifest {
    pub fn new(queries: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut queries: Vec<QueryRecord> =
            queries.into_iter().map(|(query, retrieved_at)| QueryRecord { query, retrieved_at }).collect();
        queries.sort();
        Manifest { schema_version: SCHEMA_VERSION, queries }
    }

    /// Earliest and latest fixture retrieval timestamps.
    pub fn retrieval_span(&self) -> Option<(String, String)> {
        let min = self.queries.iter().map(|q| &q.retrieved_at).min()?;
        let max = self.queries.iter().map(|q| &q.retrieved_at).max()?;
        Some((min.clone(), max.clone()))
    }
}

/// Everything the compute commands read.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub work_counts: Vec<WorkCounts>,
    pub cohorts: Vec<CohortRecord>,
    pub author_countries: Vec<AuthorCountries>,
}

impl Dataset {
    /// Sorts every table into its canonical order.
    pub fn normalize(&mut self) {
        self.work_counts.sort_by(|a, b| (&a.discipline, a.period).cmp(&(&b.discipline, b.period)));
        self.cohorts.sort();
        for a in &mut self.author_countries {
            a.countries.sort();
            a.countries.dedup();
        }
        self.author_countries.sort();
    }

    pub fn counts_for(&self, discipline: &str, period: Period) -> Option<&WorkCounts> {
        self.work_counts.iter().find(|w| w.discipline == discipline && w.period == period)
    }

    pub fn index(&self) -> DatasetIndex<'_> {
        DatasetIndex {
            cohorts: self.cohorts.iter().map(|c| ((c.discipline.as_str(), c.year), c)).collect(),
            countries: self
                .author_countries
                .iter()
                .map(|a| ((a.author_id.as_str(), a.year), a.countries.as_slice()))
                .collect(),
        }
    }
}

/// Lookup tables over a dataset, used as the cohort source for flow analysis.
pub struct DatasetIndex<'a> {
    cohorts: BTreeMap<(&'a str, i32), &'a CohortRecord>,
    countries: BTreeMap<(&'a str, i32), &'a [String]>,
}

impl CohortSource for DatasetIndex<'_> {
    fn top_authors(&self, discipline: &str, year: i32) -> Result<Vec<GroupedCount>, Error> {
        self.cohorts
            .get(&(discipline, year))
            .map(|c| c.authors.clone())
            .ok_or_else(|| Error::DataIntegrity(format!("snapshot has no cohort for {discipline} {year}")))
    }

    fn author_countries(&self, author_id: &str, year: i32) -> Result<Option<Vec<String>>, Error> {
        Ok(self.countries.get(&(author_id, year)).map(|c| c.to_vec()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub id: String,
    pub created: Option<String>,
    pub manifest: Manifest,
    pub data: Dataset,
}

fn ndjson<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row).expect("table rows serialize");
        out.push(b'\n');
    }
    out
}

fn encode(manifest: &Manifest, data: &Dataset) -> Vec<(&'static str, Vec<u8>)> {
    let mut m = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    m.push(b'\n');
    vec![
        (MANIFEST, m),
        (WORK_COUNTS, ndjson(&data.work_counts)),
        (COHORTS, ndjson(&data.cohorts)),
        (AUTHOR_COUNTRIES, ndjson(&data.author_countries)),
    ]
}

fn content_id(files: &[(&str, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in files {
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())[..16].to_string()
}

/// Snapshot id the given data would be saved under.
pub fn snapshot_id(manifest: &Manifest, data: &Dataset) -> String {
    let mut data = data.clone();
    data.normalize();
    content_id(&encode(manifest, &data))
}

pub fn save_snapshot(root: &Path, manifest: &Manifest, data: &Dataset, created: &str) -> Result<String, StoreError> {
    let mut data = data.clone();
    data.normalize();
    let files = encode(manifest, &data);
    let id = content_id(&files);
    let dir = root.join(&id);
    fs::create_dir_all(&dir)?;
    for (name, bytes) in &files {
        crate::openalex::write_atomic(&dir.join(name), bytes)?;
    }
    crate::openalex::write_atomic(&dir.join(SIDECAR), format!("{{\"created\":{:?}}}\n", created).as_bytes())?;
    Ok(id)
}

fn parse_table<T: DeserializeOwned>(id: &str, file: &str, bytes: &[u8]) -> Result<Vec<T>, StoreError> {
    bytes
        .split(|b| *b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| {
            serde_json::from_slice(l).map_err(|e| StoreError::Parse {
                id: id.into(),
                file: file.into(),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_snapshot(root: &Path, id: &str) -> Result<Snapshot, StoreError> {
    let dir = root.join(id);
    if id.is_empty() || id.contains(['/', '\\', '.']) || !dir.join(MANIFEST).is_file() {
        return Err(StoreError::NotFound { id: id.into(), root: root.into() });
    }
    let manifest_bytes = fs::read(dir.join(MANIFEST))?;
    let parse_err = |file: &str, e: serde_json::Error| StoreError::Parse {
        id: id.into(),
        file: file.into(),
        message: e.to_string(),
    };
    let raw: serde_json::Value = serde_json::from_slice(&manifest_bytes).map_err(|e| parse_err(MANIFEST, e))?;
    let found = raw.get("schema_version").and_then(serde_json::Value::as_u64).unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(StoreError::SchemaMismatch { id: id.into(), found, expected: SCHEMA_VERSION });
    }
    let mut files = vec![(MANIFEST, manifest_bytes)];
    for name in [WORK_COUNTS, COHORTS, AUTHOR_COUNTRIES] {
        files.push((name, fs::read(dir.join(name))?));
    }
    let actual = content_id(&files);
    if actual != id {
        return Err(StoreError::Corrupt { id: id.into(), actual });
    }
    let manifest: Manifest = serde_json::from_slice(&files[0].1).map_err(|e| parse_err(MANIFEST, e))?;
    let data = Dataset {
        work_counts: parse_table(id, WORK_COUNTS, &files[1].1)?,
        cohorts: parse_table(id, COHORTS, &files[2].1)?,
        author_countries: parse_table(id, AUTHOR_COUNTRIES, &files[3].1)?,
    };
    let created = fs::read(dir.join(SIDECAR))
        .ok()
        .and_then(|b| serde_json::from_slice::<serde_json::Value>(&b).ok())
        .and_then(|v| v.get("created").and_then(|c| c.as_str()).map(str::to_string));
    Ok(Snapshot { id: id.into(), created, manifest, data })
}

pub fn write_latest(root: &Path, id: &str) -> io::Result<()> {
    fs::create_dir_all(root)?;
    crate::openalex::write_atomic(&root.join(LATEST), format!("{id}\n").as_bytes())
}

pub fn read_latest(root: &Path) -> Result<String, StoreError> {
    match fs::read_to_string(root.join(LATEST)) {
        Ok(s) => Ok(s.trim().to_string()),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            Err(StoreError::NotFound { id: LATEST.into(), root: root.into() })
        }
        Err(e) => Err(e.into()),
    }
}
