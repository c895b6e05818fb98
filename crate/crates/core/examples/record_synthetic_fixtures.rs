//! Records the shipped fixture set by running the normal fetch plan in record
//! mode against a deterministic, OpenAlex-shaped synthetic responder.
//!
//! The responder answers the three request shapes the client issues (count
//! queries, author group-by, per-author work listings) from smooth count and
//! distance curves plus a fixed population of authors. Nothing here is real
//! OpenAlex data; re-run `atlas fetch` against the live API to replace it.
//!
//! Usage: cargo run --example record_synthetic_fixtures [-- <config.toml>]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use percent_encoding::percent_decode_str;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use atlas_core::corpus::{level0_disciplines, natural_science_disciplines, PartySpec, FIVE_PARTIES};
use atlas_core::openalex::{FetchError, FixtureMode, FixtureStore, HttpResponse, OpenAlexClient, Transport};
use atlas_core::report::{collect, RunConfig};

const RETRIEVED_AT: &str = "2026-10-16T00:00:00Z";

fn seed(key: &str) -> u64 {
    let h = Sha256::digest(key.as_bytes());
    u64::from_le_bytes(h[..8].try_into().unwrap())
}

fn rng(key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed(key))
}

/// Uniform in [-1, 1), fixed per key.
fn jitter(key: &str) -> f64 {
    rng(key).random_range(-1.0..1.0)
}

/// Piecewise-linear interpolation through `(year, value)` anchors.
fn interp(anchors: &[(i32, f64)], year: i32) -> f64 {
    if year <= anchors[0].0 {
        return anchors[0].1;
    }
    for w in anchors.windows(2) {
        let ((y0, v0), (y1, v1)) = (w[0], w[1]);
        if year <= y1 {
            return v0 + (v1 - v0) * (year - y0) as f64 / (y1 - y0) as f64;
        }
    }
    anchors[anchors.len() - 1].1
}

fn geometric(anchors: &[(i32, f64)], year: i32) -> f64 {
    let logs: Vec<(i32, f64)> = anchors.iter().map(|(y, v)| (*y, v.ln())).collect();
    interp(&logs, year).exp()
}

fn output_anchors(party: &str) -> Option<[(i32, f64); 3]> {
    Some(match party {
        "US" => [(1970, 150e3), (2000, 350e3), (2021, 700e3)],
        "CN" => [(1970, 2e3), (2000, 40e3), (2021, 900e3)],
        "EU27" => [(1970, 150e3), (2000, 350e3), (2021, 850e3)],
        "GB" => [(1970, 50e3), (2000, 100e3), (2021, 220e3)],
        "JP" => [(1970, 40e3), (2000, 90e3), (2021, 130e3)],
        "RoW" => [(1970, 350e3), (2000, 900e3), (2021, 2.8e6)],
        _ => return None,
    })
}

/// Target distance anchors at 1970, 2000, 2019 and 2021.
fn distance_anchors(a: &str, b: &str) -> [f64; 4] {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    match (a, b) {
        ("CN", "US") => [0.999, 0.985, 0.950, 0.957],
        ("EU27", "US") => [0.97, 0.93, 0.89, 0.885],
        ("GB", "US") => [0.97, 0.94, 0.90, 0.895],
        ("JP", "US") => [0.985, 0.96, 0.94, 0.938],
        ("CN", "EU27") => [0.999, 0.99, 0.965, 0.963],
        ("CN", "GB") => [0.999, 0.99, 0.96, 0.958],
        ("CN", "JP") => [0.999, 0.985, 0.965, 0.964],
        ("EU27", "GB") => [0.95, 0.90, 0.86, 0.862],
        ("EU27", "JP") => [0.99, 0.97, 0.95, 0.948],
        ("GB", "JP") => [0.99, 0.975, 0.955, 0.954],
        ("RoW", "US") => [0.95, 0.88, 0.80, 0.79],
        ("CN", "RoW") => [0.999, 0.96, 0.90, 0.89],
        ("EU27&UK", "US") => [0.96, 0.91, 0.87, 0.865],
        ("CN", "EU27&UK") => [0.999, 0.985, 0.955, 0.953],
        ("EU27&UK", "JP") => [0.99, 0.965, 0.945, 0.943],
        _ => [0.99, 0.95, 0.90, 0.90],
    }
}

struct World {
    parties: Vec<PartySpec>,
    /// Concept id → (scope key, relative share of all works).
    concepts: BTreeMap<String, (String, f64)>,
    natural_ids: BTreeSet<String>,
}

const SHARES: [f64; 19] =
    [0.04, 0.10, 0.03, 0.15, 0.08, 0.12, 0.08, 0.06, 0.04, 0.25, 0.04, 0.03, 0.03, 0.03, 0.02, 0.02, 0.02, 0.01, 0.01];

impl World {
    fn new() -> Self {
        let parties =
            ["US", "CN", "EU27", "GB", "JP", "EU27&UK", "RoW"].iter().map(|n| PartySpec::builtin(n).unwrap()).collect();
        let concepts =
            level0_disciplines().into_iter().zip(SHARES).map(|(d, s)| (d.concept_id.clone(), (d.slug(), s))).collect();
        let natural_ids = natural_science_disciplines().into_iter().map(|d| d.concept_id).collect();
        World { parties, concepts, natural_ids }
    }

    fn party_for(&self, codes: &str) -> Option<&str> {
        let set: BTreeSet<String> = codes.split('|').map(str::to_string).collect();
        self.parties.iter().find(|p| p.members == set).map(|p| p.name.as_str())
    }

    /// (scope key, share, spread of per-discipline distance offsets).
    fn scope(&self, concepts: Option<&str>) -> Option<(String, f64, f64)> {
        let Some(c) = concepts else { return Some(("all".into(), 1.0, 0.0)) };
        let ids: BTreeSet<String> = c.split('|').map(str::to_string).collect();
        if ids == self.natural_ids {
            let share: f64 = ids.iter().map(|i| self.concepts[i].1).sum();
            return Some(("natural_sciences".into(), 0.85 * share, 0.0));
        }
        if ids.len() == 1 {
            let (key, share) = self.concepts.get(ids.iter().next()?)?;
            return Some((key.clone(), *share, 0.3));
        }
        None
    }

    fn single(&self, party: &str, scope: &str, share: f64, year: i32) -> f64 {
        if party == "EU27&UK" {
            let e = self.single("EU27", scope, share, year);
            let g = self.single("GB", scope, share, year);
            return e + g - self.joint("EU27", "GB", scope, share, 0.3, year);
        }
        let anchors = output_anchors(party).expect("known party");
        let wobble = 1.0 + 0.01 * jitter(&format!("n/{party}/{scope}/{year}"));
        (geometric(&anchors, year) * share * wobble).round()
    }

    fn distance(&self, a: &str, b: &str, scope: &str, spread: f64, year: i32) -> f64 {
        let [d70, d00, d19, d21] = distance_anchors(a, b);
        let base = interp(&[(1970, d70), (2000, d00), (2019, d19), (2021, d21)], year);
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        let offset = 1.0 + spread * jitter(&format!("off/{x}/{y}/{scope}"));
        let noise = 0.0004 * jitter(&format!("d/{x}/{y}/{scope}/{year}"));
        (1.0 - (1.0 - base) * offset + noise).clamp(0.0, 0.9995)
    }

    fn joint(&self, a: &str, b: &str, scope: &str, share: f64, spread: f64, year: i32) -> f64 {
        let na = self.single(a, scope, share, year);
        let nb = self.single(b, scope, share, year);
        let d = self.distance(a, b, scope, spread, year);
        ((1.0 - d) * (na + nb) / (2.0 - d)).round().min(na.min(nb))
    }

    fn count(&self, filters: &BTreeMap<String, Vec<String>>) -> Option<u64> {
        let (scope, share, spread) = self.scope(filters.get("concepts.id").map(|v| v[0].as_str()))?;
        let years = years_of(filters.get("publication_year")?.first()?)?;
        let parties: Vec<&str> = filters
            .get("authorships.institutions.country_code")?
            .iter()
            .map(|c| self.party_for(c))
            .collect::<Option<_>>()?;
        let total: f64 = years
            .map(|y| match parties.as_slice() {
                [a] => self.single(a, &scope, share, y),
                [a, b] => self.joint(a, b, &scope, share, spread, y),
                _ => 0.0,
            })
            .sum();
        Some(total as u64)
    }
}

fn years_of(v: &str) -> Option<std::ops::RangeInclusive<i32>> {
    match v.split_once('-') {
        Some((a, b)) => Some(a.parse().ok()?..=b.parse().ok()?),
        None => {
            let y = v.parse().ok()?;
            Some(y..=y)
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Profile {
    UsCn,
    EuGb,
    UsEu,
    JpUs,
    Single,
    Other,
}

const POPULATION: [(Profile, usize, usize); 6] = [
    // (profile, authors in the pool, authors drawn into each discipline cohort)
    (Profile::UsCn, 40, 20),
    (Profile::EuGb, 8, 4),
    (Profile::UsEu, 6, 3),
    (Profile::JpUs, 4, 2),
    (Profile::Single, 10, 5),
    (Profile::Other, 12, 3),
];

fn author_id(i: usize) -> String {
    format!("A50000{:05}", i + 1)
}

fn profile_of(i: usize) -> Option<(Profile, usize)> {
    let mut start = 0;
    for (p, n, _) in POPULATION {
        if i < start + n {
            return Some((p, i - start));
        }
        start += n;
    }
    None
}

/// Raw affiliation country codes of author `i` in `year`.
fn countries(i: usize, year: i32) -> Vec<&'static str> {
    let Some((profile, k)) = profile_of(i) else { return vec![] };
    match profile {
        Profile::UsCn => {
            let home = if k % 2 == 0 { "US" } else { "CN" };
            let start = 2001 + ((k * 7) % 16) as i32;
            if year < start {
                vec![home]
            } else if k % 4 == 1 && year >= 2020 {
                vec!["CN"]
            } else {
                vec!["US", "CN"]
            }
        }
        Profile::EuGb => vec![["DE", "FR", "NL", "IT"][k % 4], "GB"],
        Profile::UsEu => vec!["US", ["FR", "DE", "ES"][k % 3]],
        Profile::JpUs => vec!["JP", "US"],
        Profile::Single => vec![["US", "CN", "DE", "GB", "JP"][k % 5]],
        Profile::Other => {
            if k % 3 == 0 {
                vec!["KR", "SG"]
            } else {
                vec!["KR"]
            }
        }
    }
}

fn cohort(scope: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut start = 0;
    for (_, n, take) in POPULATION {
        let mut members: Vec<usize> = (start..start + n).collect();
        members.sort_by_key(|i| seed(&format!("cohort/{scope}/{i}")));
        out.extend(members.into_iter().take(take));
        start += n;
    }
    out
}

/// Works of author `i` in `year` as OpenAlex `results` entries.
fn author_works(i: usize, year: i32) -> Vec<Value> {
    let codes = countries(i, year);
    let n = 1 + (seed(&format!("works/{i}/{year}")) % 4) as usize;
    let me = format!("https://openalex.org/{}", author_id(i));
    (0..n)
        .map(|w| {
            // The first work lists every affiliation, later ones a single
            // affiliation each; the second also has an institution with no country.
            let listed: Vec<&str> =
                if w == 0 || codes.is_empty() { codes.clone() } else { vec![codes[w % codes.len()]] };
            let mine: Vec<Value> = listed
                .iter()
                .enumerate()
                .map(|(c, code)| json!({"id": format!("https://openalex.org/I{}{}", i, c), "country_code": code}))
                .chain((w == 1).then(|| json!({"id": "https://openalex.org/I0", "country_code": null})))
                .collect();
            json!({
                "id": format!("https://openalex.org/W{}{:02}{}", year, i, w),
                "authorships": [
                    {"author": {"id": me, "display_name": format!("Author {}", i + 1)}, "institutions": mine},
                    {"author": {"id": "https://openalex.org/A5999999999", "display_name": "Coauthor"},
                     "institutions": [{"id": "https://openalex.org/I9", "country_code": "BR"}]}
                ]
            })
        })
        .collect()
}

struct Synthetic {
    world: World,
}

impl Synthetic {
    fn respond(&self, url: &str) -> Option<Value> {
        let (path, query) = url.split_once('?')?;
        if !path.ends_with("/works") {
            return None;
        }
        let mut params = BTreeMap::new();
        for kv in query.split('&') {
            let (k, v) = kv.split_once('=')?;
            params.insert(k.to_string(), percent_decode_str(v).decode_utf8().ok()?.into_owned());
        }
        let mut filters: BTreeMap<String, Vec<String>> = BTreeMap::new();
        if let Some(f) = params.get("filter") {
            for part in f.split(',') {
                let (k, v) = part.split_once(':')?;
                filters.entry(k.to_string()).or_default().push(v.to_string());
            }
        }

        if let Some(author) = filters.get("authorships.author.id") {
            let i = author[0].strip_prefix("A50000")?.parse::<usize>().ok()?.checked_sub(1)?;
            let year: i32 = filters.get("publication_year")?[0].parse().ok()?;
            let works = author_works(i, year);
            // Listings longer than two works are served over two pages so
            // the cursor path is exercised.
            let page = match params.get("cursor").map(String::as_str) {
                Some("*") => 0,
                Some("p2") => 1,
                _ => return None,
            };
            let split = if works.len() > 2 { 2 } else { works.len() };
            let (results, next) = if page == 0 {
                (works[..split].to_vec(), (split < works.len()).then_some("p2"))
            } else {
                (works[split..].to_vec(), None)
            };
            return Some(json!({
                "meta": {"count": works.len(), "per_page": 200, "next_cursor": next},
                "results": results,
            }));
        }

        if params.get("group_by").map(String::as_str) == Some("authorships.author.id") {
            let (scope, _, _) = self.world.scope(filters.get("concepts.id").map(|v| v[0].as_str()))?;
            let year: i32 = filters.get("publication_year")?[0].parse().ok()?;
            let mut groups: Vec<(u64, String)> = cohort(&scope)
                .into_iter()
                .map(|i| (5 + seed(&format!("rank/{scope}/{i}/{year}")) % 30, author_id(i)))
                .collect();
            groups.push((400, "unknown".into()));
            groups.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            let buckets: Vec<Value> = groups
                .iter()
                .map(|(n, id)| {
                    let key = if id == "unknown" { id.clone() } else { format!("https://openalex.org/{id}") };
                    json!({"key": key, "key_display_name": id, "count": n})
                })
                .collect();
            return Some(json!({
                "meta": {"count": groups.iter().map(|g| g.0).sum::<u64>(), "groups_count": groups.len()},
                "results": [],
                "group_by": buckets,
            }));
        }

        let n = self.world.count(&filters)?;
        let results: Vec<Value> = if n > 0 {
            vec![json!({"id": format!("https://openalex.org/W{}", seed(query) % 1_000_000_000)})]
        } else {
            vec![]
        };
        Some(json!({"meta": {"count": n, "page": 1, "per_page": 1}, "results": results}))
    }
}

impl Transport for Synthetic {
    fn get(&self, url: &str) -> Result<HttpResponse, FetchError> {
        Ok(match self.respond(url) {
            Some(body) => HttpResponse { status: 200, body: serde_json::to_vec(&body).unwrap() },
            None => HttpResponse { status: 404, body: b"{\"error\":\"not found\"}".to_vec() },
        })
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/atlas.toml"));
    let cfg = RunConfig::load(&path)?;
    assert_eq!(cfg.distance.parties, FIVE_PARTIES.map(String::from).to_vec(), "generator models the five parties");
    let client = OpenAlexClient::new(
        Box::new(Synthetic { world: World::new() }),
        FixtureStore::new(&cfg.fixtures, FixtureMode::Record),
    )
    .with_rate(1e6)
    .with_clock(|| RETRIEVED_AT.to_string());
    let (manifest, data) = collect(&cfg, &client)?;
    println!(
        "{} queries recorded into {} ({} new requests); {} count tables, {} cohorts",
        manifest.queries.len(),
        cfg.fixtures.display(),
        client.network_calls(),
        data.work_counts.len(),
        data.cohorts.len()
    );
    Ok(())
}
