use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    short_id, ApiQuery, CountBody, FetchError, FilterKey, FixtureMode, FixtureStore, GroupBy, GroupByBody,
    GroupedCount, TokenBucket, Transport, WorksPage, DEFAULT_BASE_URL, UNKNOWN_GROUP_KEY,
};
use crate::corpus::{PartySpec, Period, Scope};
use crate::kflow::MAX_COHORT;

/// Which date field year filters apply to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearField {
    #[default]
    PublicationYear,
    PublicationDate,
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

type Clock = Box<dyn Fn() -> String + Send + Sync>;

const MAX_PAGES: usize = 1000;

pub struct OpenAlexClient {
    transport: Box<dyn Transport>,
    store: FixtureStore,
    limiter: TokenBucket,
    retry: RetryPolicy,
    base_url: String,
    mailto: Option<String>,
    year_field: YearField,
    clock: Clock,
    used: Mutex<BTreeMap<String, String>>,
    network_calls: AtomicU64,
}

impl OpenAlexClient {
    pub fn new(transport: Box<dyn Transport>, store: FixtureStore) -> Self {
        OpenAlexClient {
            transport,
            store,
            limiter: TokenBucket::per_second(5.0),
            retry: RetryPolicy::default(),
            base_url: DEFAULT_BASE_URL.to_string(),
            mailto: None,
            year_field: YearField::default(),
            clock: Box::new(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            used: Mutex::new(BTreeMap::new()),
            network_calls: AtomicU64::new(0),
        }
    }

    pub fn with_rate(mut self, requests_per_second: f64) -> Self {
        self.limiter = TokenBucket::per_second(requests_per_second);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_base_url(mut self, base: &str) -> Self {
        self.base_url = base.to_string();
        self
    }

    pub fn with_mailto(mut self, mailto: Option<String>) -> Self {
        self.mailto = mailto.filter(|m| !m.is_empty());
        self
    }

    pub fn with_year_field(mut self, field: YearField) -> Self {
        self.year_field = field;
        self
    }

    /// Overrides the timestamp source used for newly recorded fixtures.
    pub fn with_clock(mut self, clock: impl Fn() -> String + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn mode(&self) -> FixtureMode {
        self.store.mode()
    }

    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::Relaxed)
    }

    /// Canonical query → retrieval timestamp for every response served so far.
    pub fn queries_used(&self) -> BTreeMap<String, String> {
        self.used.lock().expect("query log poisoned").clone()
    }

    fn note_used(&self, query: &ApiQuery, retrieved_at: &str) {
        self.used.lock().expect("query log poisoned").insert(query.canonical(), retrieved_at.to_string());
    }

    /// Raw response body, from fixtures when available.
    pub fn fetch_raw(&self, query: &ApiQuery) -> Result<Vec<u8>, FetchError> {
        query.validate()?;
        if self.store.mode() != FixtureMode::Live {
            if let Some((body, meta)) = self.store.load(query)? {
                self.note_used(query, &meta.retrieved_at);
                return Ok(body);
            }
            if self.store.mode() == FixtureMode::Replay {
                return Err(FetchError::ReplayMiss { query: query.canonical() });
            }
        }
        let body = self.fetch_network(query)?;
        let retrieved_at = (self.clock)();
        if self.store.mode() == FixtureMode::Record {
            self.store.save(query, &body, &retrieved_at)?;
        }
        self.note_used(query, &retrieved_at);
        Ok(body)
    }

    fn fetch_network(&self, query: &ApiQuery) -> Result<Vec<u8>, FetchError> {
        let mut q = query.clone();
        q.mailto = q.mailto.or_else(|| self.mailto.clone());
        let url = q.url(&self.base_url);
        let mut attempt = 0;
        loop {
            self.limiter.acquire();
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            let result = self.transport.get(&url).and_then(|resp| {
                if (200..300).contains(&resp.status) {
                    Ok(resp.body)
                } else {
                    Err(FetchError::Status { url: url.clone(), status: resp.status })
                }
            });
            match result {
                Ok(body) => return Ok(body),
                Err(e) if e.is_retryable() && attempt + 1 < self.retry.attempts => {
                    log::warn!("retrying after {e}");
                    std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn fetch_json<T: DeserializeOwned>(&self, query: &ApiQuery) -> Result<T, FetchError> {
        let body = self.fetch_raw(query)?;
        serde_json::from_slice(&body)
            .map_err(|e| FetchError::Malformed { query: query.canonical(), message: e.to_string() })
    }

    /// The `meta.count` aggregate for a works filter.
    pub fn fetch_work_count(&self, query: &ApiQuery) -> Result<u64, FetchError> {
        if query.group_by.is_some() {
            return Err(FetchError::InvalidQuery("count queries cannot group".into()));
        }
        Ok(self.fetch_json::<CountBody>(query)?.meta.count)
    }

    /// Author groups by descending count (ties by id), unknown-author bucket
    /// removed, at most 199 entries.
    pub fn fetch_top_authors(&self, query: &ApiQuery) -> Result<Vec<GroupedCount>, FetchError> {
        if query.group_by != Some(GroupBy::AuthorId) {
            return Err(FetchError::InvalidQuery("top authors needs group_by=authorships.author.id".into()));
        }
        let body: GroupByBody = self.fetch_json(query)?;
        Ok(rank_author_groups(body, MAX_COHORT))
    }

    /// Union of the author's own institution country codes over their works
    /// of `year`. Unknown-country institutions are skipped.
    pub fn fetch_author_country_set(&self, author_id: &str, year: i32) -> Result<BTreeSet<String>, FetchError> {
        let author = short_id(author_id);
        if author.len() < 2 || !author.starts_with(['A', 'a']) || !author[1..].bytes().all(|b| b.is_ascii_digit()) {
            return Err(FetchError::InvalidQuery(format!("malformed author id {author_id:?}")));
        }
        let author = author.to_ascii_uppercase();
        let mut countries = BTreeSet::new();
        let mut cursor = "*".to_string();
        for _ in 0..MAX_PAGES {
            let query = self.author_works_query(&author, year, &cursor);
            let page: WorksPage = self.fetch_json(&query)?;
            for work in &page.results {
                for a in &work.authorships {
                    if a.author.id.as_deref().map(short_id) != Some(author.as_str()) {
                        continue;
                    }
                    countries.extend(
                        a.institutions
                            .iter()
                            .filter_map(|i| i.country_code.as_deref())
                            .filter(|c| !c.is_empty())
                            .map(str::to_ascii_uppercase),
                    );
                }
            }
            match page.meta.next_cursor {
                Some(next) if !page.results.is_empty() => cursor = next,
                _ => return Ok(countries),
            }
        }
        Err(FetchError::Malformed {
            query: self.author_works_query(&author, year, "*").canonical(),
            message: format!("more than {MAX_PAGES} pages"),
        })
    }

    fn year_filters(&self, q: ApiQuery, period: Period) -> ApiQuery {
        match self.year_field {
            YearField::PublicationYear if period.is_single_year() => {
                q.filter(FilterKey::PublicationYear, period.start.to_string())
            }
            YearField::PublicationYear => {
                q.filter(FilterKey::PublicationYear, format!("{}-{}", period.start, period.end))
            }
            YearField::PublicationDate => q
                .filter(FilterKey::FromPublicationDate, format!("{}-01-01", period.start))
                .filter(FilterKey::ToPublicationDate, format!("{}-12-31", period.end)),
        }
    }

    fn scoped(&self, scope: &Scope, period: Period) -> ApiQuery {
        let concepts = scope.concept_ids();
        let q = ApiQuery::works();
        let q = if concepts.is_empty() { q } else { q.filter(FilterKey::ConceptId, concepts.join("|")) };
        self.year_filters(q, period)
    }

    /// Works in `scope` and `period` carrying every party's nationality.
    pub fn count_query(&self, scope: &Scope, period: Period, parties: &[&PartySpec]) -> ApiQuery {
        parties
            .iter()
            .fold(self.scoped(scope, period), |q, p| q.filter(FilterKey::CountryCode, p.filter_value()))
            .select("id")
            .per_page(1)
    }

    pub fn top_authors_query(&self, scope: &Scope, year: i32) -> ApiQuery {
        self.scoped(scope, Period::year(year)).group_by(GroupBy::AuthorId)
    }

    pub fn author_works_query(&self, author: &str, year: i32, cursor: &str) -> ApiQuery {
        self.year_filters(ApiQuery::works().filter(FilterKey::AuthorId, author), Period::year(year))
            .select("id,authorships")
            .per_page(200)
            .cursor(cursor)
    }
}

fn is_unknown_key(key: Option<&str>) -> bool {
    match key {
        None => true,
        Some(k) => k.is_empty() || short_id(k).eq_ignore_ascii_case(UNKNOWN_GROUP_KEY),
    }
}

fn rank_author_groups(body: GroupByBody, limit: usize) -> Vec<GroupedCount> {
    let mut groups: Vec<GroupedCount> = body
        .group_by
        .into_iter()
        .filter(|g| !is_unknown_key(g.key.as_deref()))
        .map(|g| GroupedCount { group_key: short_id(g.key.as_deref().unwrap_or_default()).to_string(), count: g.count })
        .collect();
    groups.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.group_key.cmp(&b.group_key)));
    groups.truncate(limit);
    groups
}
