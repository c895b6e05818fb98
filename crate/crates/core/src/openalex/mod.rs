//! OpenAlex access: query construction with canonical cache keys, a
//! rate-limited retrying client, and on-disk record/replay fixtures.

mod client;
mod fixtures;
mod rate_limit;
mod transport;

pub use client::{OpenAlexClient, RetryPolicy, YearField};
pub(crate) use fixtures::write_atomic;
pub use fixtures::{FixtureMeta, FixtureMode, FixtureStore};
pub use rate_limit::TokenBucket;
pub use transport::{HttpResponse, Transport, UreqTransport};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_BASE_URL: &str = "https://api.openalex.org";

/// Group key OpenAlex uses for works whose author is not identified.
pub const UNKNOWN_GROUP_KEY: &str = "unknown";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("transport error for {url}: {message}")]
    Transport { url: String, message: String },
    #[error("HTTP {status} for {url}")]
    Status { url: String, status: u16 },
    #[error("replay miss: no fixture for {query}")]
    ReplayMiss { query: String },
    #[error("malformed response for {query}: {message}")]
    Malformed { query: String, message: String },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("fixture store: {0}")]
    Fixture(#[from] std::io::Error),
}

impl FetchError {
    pub fn is_retryable(&self) -> bool {
        match self {
            FetchError::Transport { .. } => true,
            FetchError::Status { status, .. } => *status == 429 || (500..600).contains(status),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Works,
    Authors,
}

impl Endpoint {
    pub fn path(self) -> &'static str {
        match self {
            Endpoint::Works => "works",
            Endpoint::Authors => "authors",
        }
    }
}

/// Whitelisted filter keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FilterKey {
    ConceptId,
    PublicationYear,
    FromPublicationDate,
    ToPublicationDate,
    CountryCode,
    AuthorId,
}

impl FilterKey {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterKey::ConceptId => "concepts.id",
            FilterKey::PublicationYear => "publication_year",
            FilterKey::FromPublicationDate => "from_publication_date",
            FilterKey::ToPublicationDate => "to_publication_date",
            FilterKey::CountryCode => "authorships.institutions.country_code",
            FilterKey::AuthorId => "authorships.author.id",
        }
    }

    pub fn parse(s: &str) -> Option<FilterKey> {
        [
            FilterKey::ConceptId,
            FilterKey::PublicationYear,
            FilterKey::FromPublicationDate,
            FilterKey::ToPublicationDate,
            FilterKey::CountryCode,
            FilterKey::AuthorId,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupBy {
    AuthorId,
}

impl GroupBy {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::AuthorId => "authorships.author.id",
        }
    }
}

/// Everything but RFC 3986 unreserved characters gets escaped, so the
/// structural separators `,` `:` `|` `&` `=` can never be confused.
const QUERY_VALUE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ApiQuery {
    pub endpoint: Endpoint,
    pub filters: Vec<(FilterKey, String)>,
    pub group_by: Option<GroupBy>,
    pub select: Option<String>,
    pub per_page: Option<u32>,
    /// Cursor for full listings; `*` starts a listing.
    pub cursor: Option<String>,
    /// Polite-pool contact; part of the request URL, never of the cache key.
    pub mailto: Option<String>,
}

impl ApiQuery {
    pub fn works() -> Self {
        ApiQuery {
            endpoint: Endpoint::Works,
            filters: Vec::new(),
            group_by: None,
            select: None,
            per_page: None,
            cursor: None,
            mailto: None,
        }
    }

    pub fn filter(mut self, key: FilterKey, value: impl Into<String>) -> Self {
        self.filters.push((key, value.into()));
        self
    }

    pub fn group_by(mut self, g: GroupBy) -> Self {
        self.group_by = Some(g);
        self
    }

    pub fn select(mut self, fields: &str) -> Self {
        self.select = Some(fields.to_string());
        self
    }

    pub fn per_page(mut self, n: u32) -> Self {
        self.per_page = Some(n);
        self
    }

    pub fn cursor(mut self, c: &str) -> Self {
        self.cursor = Some(c.to_string());
        self
    }

    pub fn validate(&self) -> Result<(), FetchError> {
        if self.group_by.is_some() && self.cursor.is_some() {
            return Err(FetchError::InvalidQuery("group_by cannot be combined with a cursor listing".into()));
        }
        for (k, v) in &self.filters {
            if v.is_empty() || v.contains(',') {
                return Err(FetchError::InvalidQuery(format!("bad value {v:?} for filter {}", k.as_str())));
            }
        }
        if let Some(n) = self.per_page {
            if !(1..=200).contains(&n) {
                return Err(FetchError::InvalidQuery(format!("per-page {n} outside 1..=200")));
            }
        }
        Ok(())
    }

    fn params(&self) -> Vec<(&'static str, String)> {
        let mut filters: Vec<String> = self.filters.iter().map(|(k, v)| format!("{}:{v}", k.as_str())).collect();
        filters.sort();
        filters.dedup();
        let mut params = Vec::new();
        if let Some(c) = &self.cursor {
            params.push(("cursor", c.clone()));
        }
        if !filters.is_empty() {
            params.push(("filter", filters.join(",")));
        }
        if let Some(g) = self.group_by {
            params.push(("group_by", g.as_str().to_string()));
        }
        if let Some(n) = self.per_page {
            params.push(("per-page", n.to_string()));
        }
        if let Some(s) = &self.select {
            params.push(("select", s.clone()));
        }
        params
    }

    /// `works?filter=...` with parameters in sorted order and values
    /// percent-encoded. Stable across runs and machines.
    pub fn canonical(&self) -> String {
        let query = self
            .params()
            .iter()
            .map(|(k, v)| format!("{k}={}", utf8_percent_encode(v, QUERY_VALUE)))
            .collect::<Vec<_>>()
            .join("&");
        format!("{}?{query}", self.endpoint.path())
    }

    /// SHA-256 of the canonical form, hex-encoded; names the fixture files.
    pub fn cache_key(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn url(&self, base: &str) -> String {
        let mut url = format!("{}/{}", base.trim_end_matches('/'), self.canonical());
        if let Some(m) = &self.mailto {
            url.push_str("&mailto=");
            url.push_str(&utf8_percent_encode(m, QUERY_VALUE).to_string());
        }
        url
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupedCount {
    pub group_key: String,
    pub count: u64,
}

/// Strips the `https://openalex.org/` prefix from entity ids.
pub fn short_id(id: &str) -> &str {
    id.rsplit('/').next().unwrap_or(id)
}

// Response shapes. Only the fields the pipelines read are modelled.

#[derive(Debug, Deserialize)]
pub(crate) struct CountBody {
    pub meta: CountMeta,
}

#[derive(Debug, Deserialize)]
pub(crate) struct CountMeta {
    pub count: u64,
    #[serde(default)]
    pub next_cursor: Option<String>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct GroupByBody {
    pub group_by: Vec<GroupBucket>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct GroupBucket {
    #[serde(default)]
    pub key: Option<String>,
    pub count: u64,
}

#[derive(Debug, Deserialize)]
pub(crate) struct WorksPage {
    pub meta: CountMeta,
    pub results: Vec<WorkRecord>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct WorkRecord {
    #[serde(default)]
    pub authorships: Vec<Authorship>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Authorship {
    pub author: AuthorRef,
    #[serde(default)]
    pub institutions: Vec<Institution>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct AuthorRef {
    #[serde(default)]
    pub id: Option<String>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct Institution {
    #[serde(default)]
    pub country_code: Option<String>,
}
