//! Parties, disciplines and the binary counting rules that turn work-level
//! country tags into the set sizes the distance computation consumes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// ISO 3166-1 alpha-2 codes of the post-Brexit European Union.
pub const EU27_MEMBERS: [&str; 27] = [
    "AT", "BE", "BG", "HR", "CY", "CZ", "DK", "EE", "FI", "FR", "DE", "GR", "HU", "IE", "IT", "LV", "LT", "LU", "MT",
    "NL", "PL", "PT", "RO", "SK", "SI", "ES", "SE",
];

/// The 50 highest-output countries after the US and China, in output order.
pub const ROW_TOP50_MEMBERS: [&str; 50] = [
    "GB", "JP", "DE", "FR", "CA", "IN", "IT", "AU", "ES", "BR", "RU", "KR", "NL", "PL", "CH", "ID", "SE", "IR", "TW",
    "BE", "TR", "DK", "IL", "MX", "AT", "NO", "FI", "ZA", "CZ", "PT", "GR", "MY", "SG", "EG", "NZ", "AR", "SA", "UA",
    "IE", "HU", "PK", "TH", "CO", "CL", "RO", "NG", "SK", "HR", "RS", "PH",
];

/// Names of the five parties the collaboration and flow analyses run over.
pub const FIVE_PARTIES: [&str; 5] = ["US", "CN", "EU27", "GB", "JP"];

/// A named aggregation of countries. A work belongs to the party when any of
/// its contributing institutions sits in one of the member countries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartySpec {
    pub name: String,
    pub members: BTreeSet<String>,
}

impl PartySpec {
    pub fn new<I, S>(name: &str, members: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let members: BTreeSet<String> = members.into_iter().map(|c| c.as_ref().trim().to_ascii_uppercase()).collect();
        if name.trim().is_empty() {
            return Err(Error::Validation("party name must not be empty".into()));
        }
        if members.is_empty() {
            return Err(Error::Validation(format!("party {name} has no member countries")));
        }
        if let Some(bad) = members.iter().find(|c| !is_country_code(c)) {
            return Err(Error::Validation(format!("party {name}: {bad:?} is not an ISO 3166 alpha-2 code")));
        }
        Ok(PartySpec { name: name.to_string(), members })
    }

    pub fn contains(&self, country: &str) -> bool {
        self.members.contains(country)
    }

    /// Party members joined the way the OpenAlex filter syntax expects an OR list.
    pub fn filter_value(&self) -> String {
        self.members.iter().map(String::as_str).collect::<Vec<_>>().join("|")
    }

    /// Built-in party by name: `US`, `CN`, `EU27`, `GB`, `JP`, `EU27&UK`, `RoW`.
    pub fn builtin(name: &str) -> Option<PartySpec> {
        let spec = |members: &[&str]| PartySpec {
            name: name.to_string(),
            members: members.iter().map(|s| s.to_string()).collect(),
        };
        match name {
            "US" | "CN" | "GB" | "JP" => Some(spec(&[name])),
            "EU27" => Some(spec(&EU27_MEMBERS)),
            "EU27&UK" => {
                let mut p = spec(&EU27_MEMBERS);
                p.members.insert("GB".into());
                Some(p)
            }
            "RoW" => Some(spec(&ROW_TOP50_MEMBERS)),
            _ => None,
        }
    }

    pub fn builtin_names() -> [&'static str; 7] {
        ["US", "CN", "EU27", "GB", "JP", "EU27&UK", "RoW"]
    }
}

fn is_country_code(code: &str) -> bool {
    code.len() == 2 && code.bytes().all(|b| b.is_ascii_uppercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainClass {
    NaturalScience,
    Hss,
}

/// An OpenAlex level-0 concept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Discipline {
    pub concept_id: String,
    pub label: String,
    pub level: u8,
    pub domain_class: DomainClass,
}

impl Discipline {
    pub fn slug(&self) -> String {
        slugify(&self.label)
    }
}

pub(crate) fn slugify(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

const LEVEL0: [(&str, &str, DomainClass); 19] = [
    ("C33923547", "Mathematics", DomainClass::NaturalScience),
    ("C41008148", "Computer science", DomainClass::NaturalScience),
    ("C205649164", "Geography", DomainClass::NaturalScience),
    ("C86803240", "Biology", DomainClass::NaturalScience),
    ("C121332964", "Physics", DomainClass::NaturalScience),
    ("C185592680", "Chemistry", DomainClass::NaturalScience),
    ("C127413603", "Engineering", DomainClass::NaturalScience),
    ("C192562407", "Materials science", DomainClass::NaturalScience),
    ("C39432304", "Environmental science", DomainClass::NaturalScience),
    ("C71924100", "Medicine", DomainClass::NaturalScience),
    ("C15744967", "Psychology", DomainClass::Hss),
    ("C144133560", "Business", DomainClass::Hss),
    ("C162324750", "Economics", DomainClass::Hss),
    ("C144024400", "Sociology", DomainClass::Hss),
    ("C17744445", "Political science", DomainClass::Hss),
    ("C127313418", "Geology", DomainClass::Hss),
    ("C95457728", "History", DomainClass::Hss),
    ("C138885662", "Philosophy", DomainClass::Hss),
    ("C142362112", "Art", DomainClass::Hss),
];

/// The 19 built-in level-0 disciplines in their canonical order.
pub fn level0_disciplines() -> Vec<Discipline> {
    LEVEL0
        .iter()
        .map(|(id, label, class)| Discipline {
            concept_id: id.to_string(),
            label: label.to_string(),
            level: 0,
            domain_class: *class,
        })
        .collect()
}

pub fn natural_science_disciplines() -> Vec<Discipline> {
    level0_disciplines().into_iter().filter(|d| d.domain_class == DomainClass::NaturalScience).collect()
}

/// Looks up a built-in discipline by concept id (case-insensitive, with or
/// without the `C` prefix) or by label.
pub fn find_discipline(key: &str) -> Option<Discipline> {
    let key = key.trim();
    let upper = key.to_ascii_uppercase();
    let id = if upper.starts_with('C') { upper } else { format!("C{upper}") };
    level0_disciplines()
        .into_iter()
        .find(|d| d.concept_id == id || d.label.eq_ignore_ascii_case(key) || d.slug() == key)
}

/// What a count query is restricted to: one concept, the pooled natural
/// sciences (an OR over the ten natural-science concepts), or every work.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scope {
    Concept(Discipline),
    NaturalSciences,
    AllWorks,
}

impl Scope {
    pub const NATURAL_KEY: &'static str = "natural_sciences";
    pub const ALL_KEY: &'static str = "all";

    pub fn parse(key: &str) -> Result<Scope, Error> {
        match key {
            Self::NATURAL_KEY => Ok(Scope::NaturalSciences),
            Self::ALL_KEY => Ok(Scope::AllWorks),
            other => find_discipline(other)
                .map(Scope::Concept)
                .ok_or_else(|| Error::Validation(format!("unknown discipline {other:?}"))),
        }
    }

    /// Stable key used in snapshots and output paths.
    pub fn key(&self) -> String {
        match self {
            Scope::Concept(d) => d.slug(),
            Scope::NaturalSciences => Self::NATURAL_KEY.into(),
            Scope::AllWorks => Self::ALL_KEY.into(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Scope::Concept(d) => d.label.clone(),
            Scope::NaturalSciences => "Natural sciences".into(),
            Scope::AllWorks => "All works".into(),
        }
    }

    /// Concept ids the API filter must OR over; empty means no concept filter.
    pub fn concept_ids(&self) -> Vec<String> {
        match self {
            Scope::Concept(d) => vec![d.concept_id.clone()],
            Scope::NaturalSciences => natural_science_disciplines().into_iter().map(|d| d.concept_id).collect(),
            Scope::AllWorks => Vec::new(),
        }
    }
}

/// Inclusive range of publication years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub start: i32,
    pub end: i32,
}

impl Period {
    pub fn new(start: i32, end: i32) -> Result<Self, Error> {
        if end < start {
            return Err(Error::Validation(format!("empty period {start}-{end}")));
        }
        Ok(Period { start, end })
    }

    pub fn year(year: i32) -> Self {
        Period { start: year, end: year }
    }

    pub fn is_single_year(&self) -> bool {
        self.start == self.end
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }

    /// Splits the range into consecutive chunks of `width` years; the last
    /// chunk may be shorter.
    pub fn chunks(&self, width: u32) -> Vec<Period> {
        let width = width.max(1) as i32;
        let mut out = Vec::new();
        let mut s = self.start;
        while s <= self.end {
            let e = (s + width - 1).min(self.end);
            out.push(Period { start: s, end: e });
            s = e + 1;
        }
        out
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_single_year() {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}-{}", self.start, self.end)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointCount {
    pub a: String,
    pub b: String,
    pub count: u64,
}

/// Per-party work counts |S_X| and pairwise joint counts |S_X ∩ S_Y| for one
/// discipline and period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounts {
    pub discipline: String,
    pub period: Period,
    pub party_counts: BTreeMap<String, u64>,
    /// Unordered pairs, stored with `a < b`.
    pub joint_counts: Vec<JointCount>,
}

impl WorkCounts {
    pub fn new(discipline: &str, period: Period) -> Self {
        WorkCounts {
            discipline: discipline.to_string(),
            period,
            party_counts: BTreeMap::new(),
            joint_counts: Vec::new(),
        }
    }

    pub fn set_count(&mut self, party: &str, count: u64) {
        self.party_counts.insert(party.to_string(), count);
    }

    pub fn set_joint(&mut self, x: &str, y: &str, count: u64) {
        let (a, b) = ordered(x, y);
        match self.joint_counts.binary_search_by(|j| (j.a.as_str(), j.b.as_str()).cmp(&(a, b))) {
            Ok(i) => self.joint_counts[i].count = count,
            Err(i) => self.joint_counts.insert(i, JointCount { a: a.to_string(), b: b.to_string(), count }),
        }
    }

    pub fn count(&self, party: &str) -> Option<u64> {
        self.party_counts.get(party).copied()
    }

    pub fn joint(&self, x: &str, y: &str) -> Option<u64> {
        let (a, b) = ordered(x, y);
        self.joint_counts
            .binary_search_by(|j| (j.a.as_str(), j.b.as_str()).cmp(&(a, b)))
            .ok()
            .map(|i| self.joint_counts[i].count)
    }

    /// Checks |S_X ∩ S_Y| ≤ min(|S_X|, |S_Y|) for every stored pair.
    pub fn validate(&self) -> Result<(), Error> {
        for j in &self.joint_counts {
            let (Some(ca), Some(cb)) = (self.count(&j.a), self.count(&j.b)) else {
                return Err(Error::DataIntegrity(format!(
                    "{} {}: joint count {}/{} without both party totals",
                    self.discipline, self.period, j.a, j.b
                )));
            };
            if j.count > ca.min(cb) {
                return Err(Error::DataIntegrity(format!(
                    "{} {}: |{} ∩ {}| = {} exceeds min({ca}, {cb})",
                    self.discipline, self.period, j.a, j.b, j.count
                )));
            }
        }
        Ok(())
    }
}

fn ordered<'a>(x: &'a str, y: &'a str) -> (&'a str, &'a str) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// True when the work carries party nationality: at least one contributing
/// country is a member. Works with no known country belong to no party.
pub fn nationality_of<S: AsRef<str>>(work_countries: &[S], party: &PartySpec) -> bool {
    work_countries.iter().any(|c| party.contains(c.as_ref()))
}

/// |S_X ∪ S_Y| by inclusion–exclusion.
pub fn union_size(counts: &WorkCounts, x: &str, y: &str) -> Result<u64, Error> {
    if x == y {
        return Err(Error::Argument(format!("union_size needs two distinct parties, got {x} twice")));
    }
    let missing = |p: &str| Error::Argument(format!("party {p} missing from counts"));
    let cx = counts.count(x).ok_or_else(|| missing(x))?;
    let cy = counts.count(y).ok_or_else(|| missing(y))?;
    let both = counts.joint(x, y).ok_or_else(|| Error::Argument(format!("joint count {x}/{y} missing from counts")))?;
    if both > cx.min(cy) {
        return Err(Error::DataIntegrity(format!("|{x} ∩ {y}| = {both} exceeds min(|{x}|, |{y}|) = {}", cx.min(cy))));
    }
    Ok(cx + cy - both)
}

/// Binary-counts a list of works (each given by its contributing country
/// codes) into per-party and pairwise joint totals.
pub fn tally<S: AsRef<str>>(discipline: &str, period: Period, works: &[Vec<S>], parties: &[PartySpec]) -> WorkCounts {
    let mut counts = WorkCounts::new(discipline, period);
    let mut single = vec![0u64; parties.len()];
    let mut joint = vec![vec![0u64; parties.len()]; parties.len()];
    for work in works {
        let hit: Vec<bool> = parties.iter().map(|p| nationality_of(work, p)).collect();
        for i in 0..parties.len() {
            if !hit[i] {
                continue;
            }
            single[i] += 1;
            for j in i + 1..parties.len() {
                if hit[j] {
                    joint[i][j] += 1;
                }
            }
        }
    }
    for (i, p) in parties.iter().enumerate() {
        counts.set_count(&p.name, single[i]);
        for j in i + 1..parties.len() {
            counts.set_joint(&p.name, &parties[j].name, joint[i][j]);
        }
    }
    counts
}

#[derive(Debug, Default, Deserialize)]
struct DefinitionsFile {
    #[serde(default)]
    party: Vec<PartyDef>,
    #[serde(default)]
    discipline: Vec<DisciplineDef>,
}

/// A party as written in a definitions or run-config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyDef {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct DisciplineDef {
    concept_id: String,
    label: String,
    #[serde(default)]
    level: u8,
    domain_class: DomainClass,
}

/// Party and discipline definitions, built in or loaded from a TOML/JSON file
/// with `[[party]]` and `[[discipline]]` tables.
#[derive(Debug, Clone)]
pub struct Definitions {
    pub parties: BTreeMap<String, PartySpec>,
    pub disciplines: Vec<Discipline>,
}

impl Default for Definitions {
    fn default() -> Self {
        let parties = PartySpec::builtin_names()
            .iter()
            .filter_map(|n| PartySpec::builtin(n))
            .map(|p| (p.name.clone(), p))
            .collect();
        Definitions { parties, disciplines: level0_disciplines() }
    }
}

impl Definitions {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        let file: DefinitionsFile = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)?,
            _ => toml::from_str(&text).map_err(|e| Error::Validation(e.to_string()))?,
        };
        let mut defs = Definitions::default();
        defs.extend_parties(&file.party)?;
        if !file.discipline.is_empty() {
            defs.disciplines = file
                .discipline
                .into_iter()
                .map(|d| Discipline {
                    concept_id: d.concept_id.to_ascii_uppercase(),
                    label: d.label,
                    level: d.level,
                    domain_class: d.domain_class,
                })
                .collect();
        }
        Ok(defs)
    }

    pub fn extend_parties(&mut self, defs: &[PartyDef]) -> Result<(), Error> {
        for def in defs {
            let spec = PartySpec::new(&def.name, &def.members)?;
            self.parties.insert(spec.name.clone(), spec);
        }
        Ok(())
    }

    pub fn party(&self, name: &str) -> Result<PartySpec, Error> {
        self.parties.get(name).cloned().ok_or_else(|| Error::Validation(format!("unknown party {name:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn builtin_five_parties_are_disjoint() {
        let parties: Vec<_> = FIVE_PARTIES.iter().map(|n| PartySpec::builtin(n).unwrap()).collect();
        for (i, a) in parties.iter().enumerate() {
            for b in &parties[i + 1..] {
                assert!(a.members.is_disjoint(&b.members), "{} overlaps {}", a.name, b.name);
            }
        }
        assert_eq!(PartySpec::builtin("EU27").unwrap().members.len(), 27);
    }

    #[test]
    fn row_has_fifty_distinct_members_without_us_or_cn() {
        let row = PartySpec::builtin("RoW").unwrap();
        assert_eq!(row.members.len(), 50);
        assert!(!row.contains("US") && !row.contains("CN"));
        assert!(row.contains("GB") && row.contains("JP") && row.contains("PH"));
    }

    #[test]
    fn nineteen_disciplines_ten_natural() {
        let all = level0_disciplines();
        assert_eq!(all.len(), 19);
        let ids: HashSet<_> = all.iter().map(|d| d.concept_id.clone()).collect();
        assert_eq!(ids.len(), 19);
        let natural: Vec<_> = natural_science_disciplines().into_iter().map(|d| d.label).collect();
        assert_eq!(
            natural,
            [
                "Mathematics",
                "Computer science",
                "Geography",
                "Biology",
                "Physics",
                "Chemistry",
                "Engineering",
                "Materials science",
                "Environmental science",
                "Medicine"
            ]
        );
    }

    #[test]
    fn discipline_lookup_accepts_ids_and_labels() {
        assert_eq!(find_discipline("c33923547").unwrap().label, "Mathematics");
        assert_eq!(find_discipline("162324750").unwrap().label, "Economics");
        assert_eq!(find_discipline("computer science").unwrap().concept_id, "C41008148");
        assert_eq!(find_discipline("materials_science").unwrap().concept_id, "C192562407");
        assert!(find_discipline("alchemy").is_none());
    }

    #[test]
    fn nationality_examples() {
        let us = PartySpec::builtin("US").unwrap();
        let cn = PartySpec::builtin("CN").unwrap();
        let eu = PartySpec::builtin("EU27").unwrap();
        let dual = ["US", "CN"];
        assert!(nationality_of(&dual, &us));
        assert!(nationality_of(&dual, &cn));
        let unknown: [&str; 0] = [];
        assert!(!nationality_of(&unknown, &us));
        assert!(nationality_of(&["DE", "FR"], &eu));
    }

    #[test]
    fn union_size_identities() {
        let mut c = WorkCounts::new("x", Period::year(2015));
        c.set_count("X", 100);
        c.set_count("Y", 50);
        c.set_joint("X", "Y", 10);
        assert_eq!(union_size(&c, "X", "Y").unwrap(), 140);
        assert_eq!(union_size(&c, "Y", "X").unwrap(), 140);
        c.set_joint("Y", "X", 0);
        assert_eq!(union_size(&c, "X", "Y").unwrap(), 150);
        c.set_joint("X", "Y", 51);
        assert!(matches!(union_size(&c, "X", "Y"), Err(Error::DataIntegrity(_))));
        assert!(matches!(union_size(&c, "X", "X"), Err(Error::Argument(_))));
        assert!(matches!(union_size(&c, "X", "Z"), Err(Error::Argument(_))));
    }

    #[test]
    fn party_spec_rejects_bad_codes() {
        assert!(PartySpec::new("A", ["us"]).is_ok());
        assert!(PartySpec::new("A", ["USA"]).is_err());
        assert!(PartySpec::new("A", Vec::<String>::new()).is_err());
    }

    #[test]
    fn period_chunks_cover_range() {
        let p = Period::new(1970, 2021).unwrap();
        let chunks = p.chunks(5);
        assert_eq!(chunks.len(), 11);
        assert_eq!(chunks[0], Period { start: 1970, end: 1974 });
        assert_eq!(chunks[10], Period { start: 2020, end: 2021 });
        assert_eq!(chunks[10].to_string(), "2020-2021");
        assert_eq!(Period::year(2001).to_string(), "2001");
    }

    #[test]
    fn eu27_uk_is_merged_not_summed() {
        // one DE–GB coauthored work must count once for the merged party
        let works = vec![vec!["DE", "GB"], vec!["GB"], vec!["FR"], vec!["US"]];
        let parties = ["EU27", "GB", "EU27&UK"].map(|n| PartySpec::builtin(n).unwrap());
        let c = tally("t", Period::year(2000), &works, &parties);
        assert_eq!(c.count("EU27"), Some(2));
        assert_eq!(c.count("GB"), Some(2));
        assert_eq!(c.count("EU27&UK"), Some(3));
        assert_eq!(c.joint("EU27", "GB"), Some(1));
    }

    #[test]
    fn definitions_file_adds_custom_party() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("defs.toml");
        std::fs::write(&path, "[[party]]\nname = \"Nordics\"\nmembers = [\"SE\", \"NO\", \"FI\", \"DK\", \"IS\"]\n")
            .unwrap();
        let defs = Definitions::load(&path).unwrap();
        assert_eq!(defs.party("Nordics").unwrap().members.len(), 5);
        assert_eq!(defs.disciplines.len(), 19);
        assert!(defs.party("Atlantis").is_err());
    }
}
