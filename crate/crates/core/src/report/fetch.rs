use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use log::info;

use super::config::{Aggregate, RunConfig};
use crate::corpus::{PartySpec, Period, Scope, WorkCounts};
use crate::error::Error;
use crate::kflow::MAX_COHORT;
use crate::openalex::{FixtureMode, FixtureStore, OpenAlexClient, UreqTransport};
use crate::store::{self, AuthorCountries, CohortRecord, Dataset, Manifest};

/// Counts needed for one (scope, period): every single-party total and every
/// pairwise joint total over `parties`.
#[derive(Debug, Clone)]
pub struct CountRequest {
    pub scope: Scope,
    pub period: Period,
    pub parties: BTreeSet<String>,
}

/// Everything a run reads from the API, deduplicated across commands.
#[derive(Debug, Clone, Default)]
pub struct FetchPlan {
    pub counts: BTreeMap<(String, Period), CountRequest>,
    /// Cohort scopes and the transition years `start..end` they cover.
    pub cohorts: Vec<(Scope, i32, i32)>,
}

impl FetchPlan {
    fn add(&mut self, scope: &Scope, period: Period, parties: &[String]) {
        self.counts
            .entry((scope.key(), period))
            .or_insert_with(|| CountRequest { scope: scope.clone(), period, parties: BTreeSet::new() })
            .parties
            .extend(parties.iter().cloned());
    }

    pub fn count_queries(&self) -> usize {
        self.counts.values().map(|r| r.parties.len() * (r.parties.len() + 1) / 2).sum()
    }
}

/// Scopes whose count tables the distance command reads for `key`.
pub(crate) fn distance_sources(key: &str, aggregate: Aggregate) -> Result<Vec<Scope>, Error> {
    let scope = Scope::parse(key)?;
    Ok(match (scope, aggregate) {
        (Scope::NaturalSciences, Aggregate::Mean) => {
            crate::corpus::natural_science_disciplines().into_iter().map(Scope::Concept).collect()
        }
        (s, _) => vec![s],
    })
}

pub fn plan(cfg: &RunConfig) -> Result<FetchPlan, Error> {
    let mut p = FetchPlan::default();
    let d = &cfg.distance;
    for key in &d.disciplines {
        for scope in distance_sources(key, d.aggregate)? {
            for period in cfg.distance_periods() {
                p.add(&scope, period, &d.parties);
            }
        }
    }
    let s = &cfg.scenarios;
    for scope in distance_sources(&s.scope, d.aggregate)? {
        for year in d.start..=d.end {
            p.add(&scope, Period::year(year), &s.pair);
        }
    }
    let g = &cfg.geometry;
    let tetra = Scope::parse(&g.tetra_scope)?;
    for period in cfg.tetra_periods() {
        p.add(&tetra, period, &g.tetra_parties);
    }
    let triangle = Scope::parse(&g.triangle_scope)?;
    for year in g.triangle_start..=g.triangle_end {
        p.add(&triangle, Period::year(year), &g.triangle_parties);
    }
    for key in &cfg.kfr.disciplines {
        p.cohorts.push((Scope::parse(key)?, cfg.kfr.start, cfg.kfr.end));
    }
    Ok(p)
}

fn fetch_counts(
    client: &OpenAlexClient,
    req: &CountRequest,
    specs: &BTreeMap<String, PartySpec>,
) -> Result<WorkCounts, Error> {
    let mut wc = WorkCounts::new(&req.scope.key(), req.period);
    let parties: Vec<&PartySpec> = req.parties.iter().map(|n| &specs[n]).collect();
    for (i, a) in parties.iter().enumerate() {
        wc.set_count(&a.name, client.fetch_work_count(&client.count_query(&req.scope, req.period, &[a]))?);
        for b in &parties[i + 1..] {
            let joint = client.fetch_work_count(&client.count_query(&req.scope, req.period, &[a, b]))?;
            wc.set_joint(&a.name, &b.name, joint);
        }
    }
    Ok(wc)
}

/// Runs every planned query through `client` and collects the results.
pub fn collect(cfg: &RunConfig, client: &OpenAlexClient) -> Result<(Manifest, Dataset), Error> {
    let plan = plan(cfg)?;
    let defs = cfg.definitions()?;
    info!(
        "{} count tables ({} count queries), {} cohort scopes",
        plan.counts.len(),
        plan.count_queries(),
        plan.cohorts.len()
    );

    let mut data = Dataset::default();
    for req in plan.counts.values() {
        data.work_counts.push(fetch_counts(client, req, &defs.parties)?);
    }

    let mut countries: BTreeMap<(String, i32), Vec<String>> = BTreeMap::new();
    for (scope, start, end) in &plan.cohorts {
        info!("cohorts for {} {start}-{end}", scope.key());
        for tau in *start..*end {
            let mut authors = client.fetch_top_authors(&client.top_authors_query(scope, tau))?;
            authors.truncate(MAX_COHORT);
            for a in &authors {
                for year in [tau, tau + 1] {
                    let key = (a.group_key.clone(), year);
                    if !countries.contains_key(&key) {
                        let set = client.fetch_author_country_set(&a.group_key, year)?;
                        countries.insert(key, set.into_iter().collect());
                    }
                }
            }
            data.cohorts.push(CohortRecord { discipline: scope.key(), year: tau, authors });
        }
    }
    data.author_countries = countries
        .into_iter()
        .map(|((author_id, year), countries)| AuthorCountries { author_id, year, countries })
        .collect();
    data.normalize();
    Ok((Manifest::new(client.queries_used()), data))
}

pub fn client_for(cfg: &RunConfig, mode: FixtureMode) -> OpenAlexClient {
    OpenAlexClient::new(Box::new(UreqTransport::new(Duration::from_secs(60))), FixtureStore::new(&cfg.fixtures, mode))
        .with_rate(cfg.client.rate_limit)
        .with_base_url(&cfg.client.base_url)
        .with_mailto(cfg.mailto.clone())
        .with_year_field(cfg.client.year_field)
}

/// Fetches (or replays, when offline) every configured query and stores the
/// result as a snapshot; returns its id, which also becomes `LATEST`.
pub fn cmd_fetch(cfg: &RunConfig, offline: bool) -> Result<String, Error> {
    let mode = if offline || cfg.offline { FixtureMode::Replay } else { FixtureMode::Record };
    let client = client_for(cfg, mode);
    let (manifest, data) = collect(cfg, &client)?;
    info!("{} network requests", client.network_calls());
    let created = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let id = store::save_snapshot(&cfg.snapshots, &manifest, &data, &created)?;
    store::write_latest(&cfg.snapshots, &id)?;
    Ok(id)
}
