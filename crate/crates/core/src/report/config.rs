use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{Definitions, PartyDef, PartySpec, Period, Scope, FIVE_PARTIES};
use crate::error::Error;
use crate::openalex::{YearField, DEFAULT_BASE_URL};
use crate::scenarios::Representation;

/// How the natural-science aggregate is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    /// One OR-filtered count query over the ten concepts (distance) or one
    /// K-matrix summed over disciplines (flows).
    Pooled,
    /// Unweighted mean of the per-discipline results.
    Mean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    #[serde(default)]
    pub year_field: YearField,
    #[serde(default = "default_rate")]
    pub rate_limit: f64,
    #[serde(default = "default_base_url")]
    pub base_url: String,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig { year_field: YearField::default(), rate_limit: default_rate(), base_url: default_base_url() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    #[serde(default = "five_parties")]
    pub parties: Vec<String>,
    #[serde(default = "all_disciplines")]
    pub disciplines: Vec<String>,
    #[serde(default = "default_start")]
    pub start: i32,
    #[serde(default = "default_end")]
    pub end: i32,
    #[serde(default = "one")]
    pub period_years: u32,
    #[serde(default = "pooled")]
    pub aggregate: Aggregate,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            parties: five_parties(),
            disciplines: all_disciplines(),
            start: default_start(),
            end: default_end(),
            period_years: 1,
            aggregate: Aggregate::Pooled,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KfrConfig {
    #[serde(default = "five_parties")]
    pub parties: Vec<String>,
    #[serde(default = "natural_disciplines")]
    pub disciplines: Vec<String>,
    #[serde(default = "default_start")]
    pub start: i32,
    #[serde(default = "default_end")]
    pub end: i32,
    #[serde(default = "mean")]
    pub aggregate: Aggregate,
}

impl Default for KfrConfig {
    fn default() -> Self {
        KfrConfig {
            parties: five_parties(),
            disciplines: natural_disciplines(),
            start: default_start(),
            end: default_end(),
            aggregate: Aggregate::Mean,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default = "all_scope")]
    pub tetra_scope: String,
    #[serde(default = "tetra_parties")]
    pub tetra_parties: Vec<String>,
    #[serde(default = "geometry_start")]
    pub start: i32,
    #[serde(default = "default_end")]
    pub end: i32,
    #[serde(default = "five")]
    pub period_years: u32,
    /// Reference sphere radius, given to the largest party count seen.
    #[serde(default = "default_radius")]
    pub reference_radius: f64,
    #[serde(default = "natural_scope")]
    pub triangle_scope: String,
    #[serde(default = "triangle_parties")]
    pub triangle_parties: Vec<String>,
    #[serde(default = "geometry_start")]
    pub triangle_start: i32,
    #[serde(default = "default_end")]
    pub triangle_end: i32,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            tetra_scope: all_scope(),
            tetra_parties: tetra_parties(),
            start: geometry_start(),
            end: default_end(),
            period_years: 5,
            reference_radius: default_radius(),
            triangle_scope: natural_scope(),
            triangle_parties: triangle_parties(),
            triangle_start: geometry_start(),
            triangle_end: default_end(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "us_cn")]
    pub pair: Vec<String>,
    #[serde(default = "natural_scope")]
    pub scope: String,
    #[serde(default = "horizon_end")]
    pub horizon_end: i32,
    #[serde(default = "damping")]
    pub damping: f64,
    #[serde(default = "peak_years")]
    pub peak_years: u32,
    /// Scenario C return rate; defaults to the mean absolute yearly change
    /// over `reference_start..=reference_end`.
    #[serde(default)]
    pub decline_rate: Option<f64>,
    #[serde(default = "reference_start")]
    pub reference_start: i32,
    #[serde(default = "reference_end")]
    pub reference_end: i32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            pair: us_cn(),
            scope: natural_scope(),
            horizon_end: horizon_end(),
            damping: damping(),
            peak_years: peak_years(),
            decline_rate: None,
            reference_start: reference_start(),
            reference_end: reference_end(),
        }
    }
}

/// Everything a run needs, read from TOML. Relative paths resolve against
/// the directory holding the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mailto: Option<String>,
    #[serde(default = "fixtures_dir")]
    pub fixtures: PathBuf,
    #[serde(default = "snapshots_dir")]
    pub snapshots: PathBuf,
    #[serde(default = "out_dir")]
    pub out: PathBuf,
    #[serde(default)]
    pub offline: bool,
    #[serde(default)]
    pub representation: Representation,
    #[serde(default)]
    pub client: ClientConfig,
    #[serde(default)]
    pub party: Vec<PartyDef>,
    #[serde(default)]
    pub distance: DistanceConfig,
    #[serde(default)]
    pub kfr: KfrConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub scenarios: ScenarioConfig,
}

fn default_rate() -> f64 {
    5.0
}
fn default_base_url() -> String {
    DEFAULT_BASE_URL.into()
}
fn five_parties() -> Vec<String> {
    FIVE_PARTIES.iter().map(|s| s.to_string()).collect()
}
fn all_disciplines() -> Vec<String> {
    let mut v: Vec<String> = crate::corpus::level0_disciplines().iter().map(|d| d.slug()).collect();
    v.push(Scope::NATURAL_KEY.into());
    v
}
fn natural_disciplines() -> Vec<String> {
    crate::corpus::natural_science_disciplines().iter().map(|d| d.slug()).collect()
}
fn default_start() -> i32 {
    2000
}
fn default_end() -> i32 {
    2021
}
fn geometry_start() -> i32 {
    1970
}
fn one() -> u32 {
    1
}
fn five() -> u32 {
    5
}
fn pooled() -> Aggregate {
    Aggregate::Pooled
}
fn mean() -> Aggregate {
    Aggregate::Mean
}
fn all_scope() -> String {
    Scope::ALL_KEY.into()
}
fn natural_scope() -> String {
    Scope::NATURAL_KEY.into()
}
fn tetra_parties() -> Vec<String> {
    ["US", "CN", "EU27&UK", "JP"].iter().map(|s| s.to_string()).collect()
}
fn triangle_parties() -> Vec<String> {
    ["US", "CN", "RoW"].iter().map(|s| s.to_string()).collect()
}
fn us_cn() -> Vec<String> {
    vec!["US".into(), "CN".into()]
}
fn default_radius() -> f64 {
    0.1
}
fn horizon_end() -> i32 {
    2030
}
fn damping() -> f64 {
    0.8
}
fn peak_years() -> u32 {
    3
}
fn reference_start() -> i32 {
    2010
}
fn reference_end() -> i32 {
    2018
}
fn fixtures_dir() -> PathBuf {
    "fixtures".into()
}
fn snapshots_dir() -> PathBuf {
    "snapshots".into()
}
fn out_dir() -> PathBuf {
    "out".into()
}

fn check_parties(section: &str, names: &[String], defs: &Definitions) -> Result<(), Error> {
    if names.len() < 2 {
        return Err(Error::Validation(format!("{section}: at least two parties are required")));
    }
    let distinct: BTreeSet<&String> = names.iter().collect();
    if distinct.len() != names.len() {
        return Err(Error::Validation(format!("{section}: duplicate party")));
    }
    for n in names {
        defs.party(n).map_err(|e| Error::Validation(format!("{section}: {e}")))?;
    }
    Ok(())
}

fn check_scopes(section: &str, keys: &[String]) -> Result<(), Error> {
    if keys.is_empty() {
        return Err(Error::Validation(format!("{section}: discipline list is empty")));
    }
    let mut seen = BTreeSet::new();
    for k in keys {
        let scope = Scope::parse(k).map_err(|e| Error::Validation(format!("{section}: {e}")))?;
        if !seen.insert(scope.key()) {
            return Err(Error::Validation(format!("{section}: discipline {k:?} listed twice")));
        }
    }
    Ok(())
}

fn check_years(section: &str, start: i32, end: i32) -> Result<(), Error> {
    if start > end {
        return Err(Error::Validation(format!("{section}: empty year range {start}..{end}")));
    }
    if start < 1800 || end > 2100 {
        return Err(Error::Validation(format!("{section}: year range {start}..{end} out of bounds")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file, resolving relative paths.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.fixtures, &mut cfg.snapshots, &mut cfg.out] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn definitions(&self) -> Result<Definitions, Error> {
        let mut defs = Definitions::default();
        defs.extend_parties(&self.party).map_err(|e| Error::Validation(e.to_string()))?;
        Ok(defs)
    }

    pub fn parties(&self, names: &[String]) -> Result<Vec<PartySpec>, Error> {
        let defs = self.definitions()?;
        names.iter().map(|n| defs.party(n)).collect()
    }

    pub fn distance_periods(&self) -> Vec<Period> {
        Period { start: self.distance.start, end: self.distance.end }.chunks(self.distance.period_years)
    }

    pub fn tetra_periods(&self) -> Vec<Period> {
        Period { start: self.geometry.start, end: self.geometry.end }.chunks(self.geometry.period_years)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let defs = self.definitions()?;
        if !(self.client.rate_limit > 0.0 && self.client.rate_limit.is_finite()) {
            return Err(Error::Validation("client.rate_limit must be positive".into()));
        }

        let d = &self.distance;
        check_parties("distance", &d.parties, &defs)?;
        check_scopes("distance", &d.disciplines)?;
        check_years("distance", d.start, d.end)?;
        if d.period_years == 0 {
            return Err(Error::Validation("distance.period_years must be at least 1".into()));
        }

        let k = &self.kfr;
        check_parties("kfr", &k.parties, &defs)?;
        check_scopes("kfr", &k.disciplines)?;
        check_years("kfr", k.start, k.end)?;
        if k.start == k.end {
            return Err(Error::Validation("kfr: need at least one year transition".into()));
        }

        let g = &self.geometry;
        check_parties("geometry.tetra", &g.tetra_parties, &defs)?;
        if g.tetra_parties.len() != 4 {
            return Err(Error::Validation("geometry.tetra_parties must name exactly four parties".into()));
        }
        check_parties("geometry.triangle", &g.triangle_parties, &defs)?;
        if g.triangle_parties.len() != 3 {
            return Err(Error::Validation("geometry.triangle_parties must name exactly three parties".into()));
        }
        check_scopes("geometry", std::slice::from_ref(&g.tetra_scope))?;
        check_scopes("geometry", std::slice::from_ref(&g.triangle_scope))?;
        check_years("geometry", g.start, g.end)?;
        check_years("geometry.triangle", g.triangle_start, g.triangle_end)?;
        if g.period_years == 0 {
            return Err(Error::Validation("geometry.period_years must be at least 1".into()));
        }
        if !(g.reference_radius > 0.0 && g.reference_radius.is_finite()) {
            return Err(Error::Validation("geometry.reference_radius must be positive".into()));
        }

        let s = &self.scenarios;
        check_parties("scenarios", &s.pair, &defs)?;
        if s.pair.len() != 2 {
            return Err(Error::Validation("scenarios.pair must name exactly two parties".into()));
        }
        check_scopes("scenarios", std::slice::from_ref(&s.scope))?;
        if d.period_years != 1 {
            return Err(Error::Validation("scenarios need annual distance periods (distance.period_years = 1)".into()));
        }
        if d.end - d.start < 1 {
            return Err(Error::Validation("scenarios need at least two observed years".into()));
        }
        if s.horizon_end <= d.end {
            return Err(Error::Validation("scenarios.horizon_end must lie after distance.end".into()));
        }
        if !(s.damping > 0.0 && s.damping < 1.0) {
            return Err(Error::Validation("scenarios.damping must lie in (0, 1)".into()));
        }
        if s.peak_years == 0 {
            return Err(Error::Validation("scenarios.peak_years must be at least 1".into()));
        }
        if let Some(r) = s.decline_rate {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Validation("scenarios.decline_rate must be positive".into()));
            }
        } else if !(d.start <= s.reference_start && s.reference_start < s.reference_end && s.reference_end <= d.end) {
            return Err(Error::Validation("scenarios reference years must lie inside the distance years".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.distance.disciplines.len(), 20);
        assert_eq!(cfg.kfr.disciplines.len(), 10);
        assert_eq!(cfg.scenarios.damping, 0.8);
        assert_eq!(cfg.tetra_periods().first().unwrap().to_string(), "1970-1974");
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "[distance]\ndisciplines = []",
            "[distance]\nparties = [\"US\"]",
            "[distance]\nparties = [\"US\", \"XX\"]",
            "[distance]\nstart = 2010\nend = 2000",
            "[kfr]\ndisciplines = [\"C999\"]",
            "[geometry]\ntetra_parties = [\"US\", \"CN\", \"JP\"]",
            "[scenarios]\ndamping = 1.0",
            "unknown_key = 1",
        ];
        for text in bad {
            let err = RunConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn custom_party() {
        let cfg = RunConfig::from_toml(
            "[[party]]\nname = \"KR\"\nmembers = [\"KR\"]\n[distance]\nparties = [\"US\", \"KR\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.parties(&cfg.distance.parties).unwrap()[1].name, "KR");
    }
}
