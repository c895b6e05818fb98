//! Knowledge flow between parties through the affiliations of highly
//! productive authors across consecutive years.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{PartySpec, Period};
use crate::error::Error;
use crate::openalex::GroupedCount;

/// Transitions whose off-diagonal flow total is below this are excluded.
pub const MIN_SIGMA_OFF: u64 = 10;

/// Cohort cap: the API returns at most 200 author groups, one of which is
/// the unknown-author bucket.
pub const MAX_COHORT: usize = 199;

/// The parties an author is affiliated with in one year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorYearSet {
    pub author_id: String,
    pub year: i32,
    pub parties: BTreeSet<String>,
}

impl AuthorYearSet {
    pub fn new<I, S>(author_id: &str, year: i32, parties: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AuthorYearSet { author_id: author_id.to_string(), year, parties: parties.into_iter().map(Into::into).collect() }
    }

    /// Maps raw country codes to configured parties; codes outside every
    /// party are dropped.
    pub fn from_countries<S: AsRef<str>>(author_id: &str, year: i32, countries: &[S], parties: &[PartySpec]) -> Self {
        let names = parties.iter().filter(|p| countries.iter().any(|c| p.contains(c.as_ref()))).map(|p| p.name.clone());
        AuthorYearSet::new(author_id, year, names)
    }
}

/// Every ordered pair (i, j) with i affiliated in year τ and j in τ+1,
/// including i → i.
pub fn author_flows(before: &AuthorYearSet, after: &AuthorYearSet) -> Vec<(String, String)> {
    before.parties.iter().flat_map(|i| after.parties.iter().map(move |j| (i.clone(), j.clone()))).collect()
}

/// K-matrix for one τ → τ+1 transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub parties: Vec<String>,
    pub from_year: i32,
    /// Row-major; row = source party, column = destination party.
    pub k: Vec<u64>,
    pub sigma_off: u64,
}

impl FlowMatrix {
    pub fn n(&self) -> usize {
        self.parties.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.k[i * self.n() + j]
    }

    pub fn index_of(&self, party: &str) -> Option<usize> {
        self.parties.iter().position(|p| p == party)
    }

    pub fn flow(&self, from: &str, to: &str) -> Option<u64> {
        Some(self.get(self.index_of(from)?, self.index_of(to)?))
    }

    fn zero(parties: &[&str], from_year: i32) -> Self {
        FlowMatrix {
            parties: parties.iter().map(|s| s.to_string()).collect(),
            from_year,
            k: vec![0; parties.len() * parties.len()],
            sigma_off: 0,
        }
    }

    fn recompute_sigma(&mut self) {
        let n = self.n();
        self.sigma_off =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| self.get(i, j)).sum();
    }
}

pub fn build_k_matrix(
    cohort: &[(AuthorYearSet, AuthorYearSet)],
    parties: &[&str],
    from_year: i32,
) -> Result<FlowMatrix, Error> {
    let mut m = FlowMatrix::zero(parties, from_year);
    let n = parties.len();
    for (before, after) in cohort {
        if before.year != from_year || after.year != from_year + 1 {
            return Err(Error::Argument(format!(
                "author {} spans {} → {}, expected {from_year} → {}",
                before.author_id,
                before.year,
                after.year,
                from_year + 1
            )));
        }
        if before.author_id != after.author_id {
            return Err(Error::Argument(format!(
                "paired sets belong to different authors: {} / {}",
                before.author_id, after.author_id
            )));
        }
        for (src, dst) in author_flows(before, after) {
            let (Some(i), Some(j)) = (m.index_of(&src), m.index_of(&dst)) else {
                return Err(Error::Argument(format!("flow {src} → {dst} names an unconfigured party")));
            };
            m.k[i * n + j] += 1;
        }
    }
    m.recompute_sigma();
    Ok(m)
}

/// Off-diagonal flow shares 𝒦_ij = K_ij / Σ_off for one transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfrMatrix {
    pub parties: Vec<String>,
    pub from_year: i32,
    /// Row-major; diagonal entries are `None`.
    pub rates: Vec<Option<f64>>,
}

impl KfrMatrix {
    pub fn rate(&self, from: &str, to: &str) -> Option<f64> {
        let n = self.parties.len();
        let i = self.parties.iter().position(|p| p == from)?;
        let j = self.parties.iter().position(|p| p == to)?;
        self.rates[i * n + j]
    }

    /// Off-diagonal (from, to, rate) triples in row-major order.
    pub fn off_diagonal(&self) -> Vec<(String, String, f64)> {
        let n = self.parties.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1));
        for i in 0..n {
            for j in 0..n {
                if let Some(r) = self.rates[i * n + j] {
                    out.push((self.parties[i].clone(), self.parties[j].clone(), r));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Kfr {
    Excluded { from_year: i32, sigma_off: u64 },
    Rates(KfrMatrix),
}

impl Kfr {
    pub fn rates(&self) -> Option<&KfrMatrix> {
        match self {
            Kfr::Rates(m) => Some(m),
            Kfr::Excluded { .. } => None,
        }
    }
}

pub fn kfr(m: &FlowMatrix) -> Kfr {
    if m.sigma_off < MIN_SIGMA_OFF {
        return Kfr::Excluded { from_year: m.from_year, sigma_off: m.sigma_off };
    }
    let n = m.n();
    let total = m.sigma_off as f64;
    let rates = (0..n * n).map(|idx| (idx / n != idx % n).then(|| m.k[idx] as f64 / total)).collect();
    Kfr::Rates(KfrMatrix { parties: m.parties.clone(), from_year: m.from_year, rates })
}

/// Unweighted mean of the included rate matrices; excluded when none are.
pub fn mean_kfr(items: &[Kfr], parties: &[&str], from_year: i32) -> Kfr {
    let included: Vec<&KfrMatrix> = items.iter().filter_map(Kfr::rates).collect();
    if included.is_empty() {
        return Kfr::Excluded { from_year, sigma_off: 0 };
    }
    let n = parties.len();
    let mut rates = vec![None; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let sum: f64 = included.iter().filter_map(|m| m.rate(parties[i], parties[j])).sum();
            rates[i * n + j] = Some(sum / included.len() as f64);
        }
    }
    Kfr::Rates(KfrMatrix { parties: parties.iter().map(|s| s.to_string()).collect(), from_year, rates })
}

/// Sums K-matrices of several cohorts for the same transition.
pub fn pooled_k_matrix(items: &[FlowMatrix], parties: &[&str], from_year: i32) -> Result<FlowMatrix, Error> {
    let mut out = FlowMatrix::zero(parties, from_year);
    for m in items {
        if m.parties != out.parties || m.from_year != from_year {
            return Err(Error::Argument("pooled matrices must share parties and transition".into()));
        }
        for (acc, v) in out.k.iter_mut().zip(&m.k) {
            *acc += v;
        }
    }
    out.recompute_sigma();
    Ok(out)
}

/// Cohort membership and affiliations, materialized from a snapshot or a live client.
pub trait CohortSource {
    /// Top authors of a discipline-year by work count, descending.
    fn top_authors(&self, discipline: &str, year: i32) -> Result<Vec<GroupedCount>, Error>;
    /// Raw country codes of the author's affiliations that year; `None` when unknown.
    fn author_countries(&self, author_id: &str, year: i32) -> Result<Option<Vec<String>>, Error>;
}

/// One K-matrix per τ in `years` (τ+1 must also lie in `years`), the cohort
/// for τ being that year's top authors of `discipline`.
pub fn cohort_series(
    source: &dyn CohortSource,
    discipline: &str,
    years: Period,
    parties: &[PartySpec],
) -> Result<Vec<FlowMatrix>, Error> {
    let names: Vec<&str> = parties.iter().map(|p| p.name.as_str()).collect();
    let mut out = Vec::new();
    for tau in years.start..years.end {
        let authors = source.top_authors(discipline, tau)?;
        let mut cohort = Vec::with_capacity(authors.len().min(MAX_COHORT));
        for a in authors.iter().take(MAX_COHORT) {
            let set_for = |year: i32| -> Result<AuthorYearSet, Error> {
                let countries = source.author_countries(&a.group_key, year)?.unwrap_or_default();
                Ok(AuthorYearSet::from_countries(&a.group_key, year, &countries, parties))
            };
            cohort.push((set_for(tau)?, set_for(tau + 1)?));
        }
        out.push(build_k_matrix(&cohort, &names, tau)?);
    }
    Ok(out)
}
