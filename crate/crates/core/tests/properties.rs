use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use atlas_core::corpus::{nationality_of, tally, JointCount, PartySpec, Period, WorkCounts};
use atlas_core::distance::{build_matrix, jaccard_distance, rescale};
use atlas_core::kflow::{build_k_matrix, kfr, AuthorYearSet, Kfr, MIN_SIGMA_OFF};
use atlas_core::openalex::GroupedCount;
use atlas_core::openalex::{ApiQuery, FilterKey};
use atlas_core::scenarios::{project_a, project_b, project_c, Representation};
use atlas_core::store::{load_snapshot, save_snapshot, AuthorCountries, CohortRecord, Dataset, Manifest};

const CODES: [&str; 8] = ["US", "CN", "GB", "DE", "FR", "JP", "KR", "BR"];
const PARTIES: [&str; 4] = ["A", "B", "C", "D"];

fn filter_key() -> impl Strategy<Value = FilterKey> {
    prop_oneof![
        Just(FilterKey::ConceptId),
        Just(FilterKey::PublicationYear),
        Just(FilterKey::CountryCode),
        Just(FilterKey::AuthorId),
    ]
}

fn filters() -> impl Strategy<Value = Vec<(FilterKey, String)>> {
    prop::collection::vec((filter_key(), "[A-Za-z0-9|:&=. -]{1,12}"), 0..5)
}

fn query(filters: &[(FilterKey, String)]) -> ApiQuery {
    filters.iter().fold(ApiQuery::works(), |q, (k, v)| q.filter(*k, v.clone()))
}

fn country_subset() -> impl Strategy<Value = Vec<String>> {
    prop::sample::subsequence(CODES.to_vec(), 0..=4).prop_map(|v| v.into_iter().map(String::from).collect())
}

fn party_subset() -> impl Strategy<Value = Vec<&'static str>> {
    prop::sample::subsequence(PARTIES.to_vec(), 0..=4)
}

fn series() -> impl Strategy<Value = Vec<(i32, f64)>> {
    prop::collection::vec(0.0..1.0f64, 2..20)
        .prop_map(|v| v.into_iter().enumerate().map(|(i, x)| (2000 + i as i32, x)).collect())
}

proptest! {
    #[test]
    fn canonical_form_ignores_filter_order(mut f in filters(), seed in any::<u64>()) {
        let before = query(&f);
        let n = f.len().max(1);
        f.rotate_left(seed as usize % n);
        f.reverse();
        prop_assert_eq!(before.canonical(), query(&f).canonical());
        prop_assert_eq!(before.cache_key(), query(&f).cache_key());
    }

    #[test]
    fn distinct_filter_sets_get_distinct_keys(a in filters(), b in filters()) {
        let set = |f: &[(FilterKey, String)]| f.iter().cloned().collect::<BTreeSet<_>>();
        prop_assume!(set(&a) != set(&b));
        prop_assert_ne!(query(&a).cache_key(), query(&b).cache_key());
    }

    #[test]
    fn mailto_never_changes_the_cache_key(f in filters(), mail in "[a-z]{1,8}@[a-z]{1,8}\\.org") {
        let mut with = query(&f);
        with.mailto = Some(mail);
        prop_assert_eq!(with.cache_key(), query(&f).cache_key());
    }

    #[test]
    fn nationality_is_binary_membership(work in country_subset(), members in prop::sample::subsequence(CODES.to_vec(), 1..=3)) {
        let party = PartySpec::new("P", members.iter().copied()).unwrap();
        let expected = work.iter().any(|c| members.contains(&c.as_str()));
        prop_assert_eq!(nationality_of(&work, &party), expected);
        // Repeating a country on the same work does not count twice.
        let mut doubled = work.clone();
        doubled.extend(work.iter().cloned());
        let wc = tally("t", Period::year(2000), &[doubled], std::slice::from_ref(&party));
        prop_assert_eq!(wc.count("P"), Some(expected as u64));
    }

    #[test]
    fn jaccard_matches_set_arithmetic(works in prop::collection::vec(country_subset(), 1..200)) {
        let parties = [
            PartySpec::new("X", ["US", "GB"]).unwrap(),
            PartySpec::new("Y", ["CN"]).unwrap(),
            PartySpec::new("Z", ["DE", "FR", "CN"]).unwrap(),
        ];
        let sets: Vec<BTreeSet<usize>> = parties
            .iter()
            .map(|p| works.iter().enumerate().filter(|(_, w)| nationality_of(w, p)).map(|(i, _)| i).collect())
            .collect();
        let wc = tally("t", Period::year(2000), &works, &parties);
        for i in 0..3 {
            for j in 0..3 {
                let union = sets[i].union(&sets[j]).count();
                let inter = sets[i].intersection(&sets[j]).count();
                let got = jaccard_distance(&wc, &parties[i].name, &parties[j].name);
                if i == j {
                    prop_assert_eq!(got.unwrap(), 0.0);
                } else if union == 0 {
                    prop_assert!(got.is_err());
                } else {
                    let d = got.unwrap();
                    prop_assert_eq!(d, (union - inter) as f64 / union as f64);
                    prop_assert!((0.0..=1.0).contains(&d));
                }
            }
        }
    }

    #[test]
    fn matrix_is_symmetric_with_zero_diagonal(works in prop::collection::vec(country_subset(), 1..300)) {
        let parties: Vec<PartySpec> = [["US", "GB"], ["CN", "KR"], ["DE", "FR"], ["JP", "BR"]]
            .iter()
            .zip(PARTIES)
            .map(|(m, n)| PartySpec::new(n, *m).unwrap())
            .collect();
        let wc = tally("t", Period::year(2000), &works, &parties);
        let defined = PARTIES.iter().filter(|p| wc.count(p).unwrap() > 0).count();
        prop_assume!(defined >= 3);
        let present: Vec<&str> = PARTIES.iter().copied().filter(|p| wc.count(p).unwrap() > 0).collect();
        let m = build_matrix(&wc, &present).unwrap();
        prop_assert!(m.triangle_violation(1e-12).is_none());
        for i in 0..present.len() {
            prop_assert_eq!(m.get(i, i), 0.0);
            for j in 0..present.len() {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn joint_above_either_count_is_rejected(a in 1u64..1000, b in 1u64..1000, extra in 1u64..100) {
        let mut wc = WorkCounts::new("t", Period::year(2000));
        wc.set_count("A", a);
        wc.set_count("B", b);
        wc.joint_counts = vec![JointCount { a: "A".into(), b: "B".into(), count: a.min(b) + extra }];
        prop_assert!(jaccard_distance(&wc, "A", "B").is_err());
    }

    #[test]
    fn rescale_is_decreasing_and_nonnegative(x in 1e-9..1.0f64, y in 1e-9..1.0f64) {
        prop_assume!(x < y);
        let (rx, ry) = (rescale(x).unwrap(), rescale(y).unwrap());
        prop_assert!(rx >= 0.0 && ry >= 0.0);
        prop_assert!(rx > ry);
    }

    #[test]
    fn kfr_rows_sum_to_one_off_diagonal(cohort in prop::collection::vec((party_subset(), party_subset()), 0..80)) {
        let pairs: Vec<(AuthorYearSet, AuthorYearSet)> = cohort
            .iter()
            .enumerate()
            .map(|(i, (b, a))| {
                let id = format!("A{i}");
                (AuthorYearSet::new(&id, 2010, b.iter().copied()), AuthorYearSet::new(&id, 2011, a.iter().copied()))
            })
            .collect();
        let k = build_k_matrix(&pairs, &PARTIES, 2010).unwrap();
        let expected_off: u64 = cohort
            .iter()
            .map(|(b, a)| (b.len() * a.len()) as u64 - b.iter().filter(|p| a.contains(p)).count() as u64)
            .sum();
        prop_assert_eq!(k.sigma_off, expected_off);
        match kfr(&k) {
            Kfr::Rates(r) => {
                prop_assert!(k.sigma_off >= MIN_SIGMA_OFF);
                let total: f64 = r.off_diagonal().iter().map(|t| t.2).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(r.off_diagonal().iter().all(|t| t.2 >= 0.0));
            }
            Kfr::Excluded { sigma_off, .. } => prop_assert!(sigma_off < MIN_SIGMA_OFF),
        }
    }

    #[test]
    fn projections_stay_in_codomain(obs in series(), horizon in 1u32..30, damping in 0.01..0.99f64, peak in 1u32..6, rate in 0.001..0.5f64) {
        for repr in [Representation::Raw, Representation::Rescaled] {
            let runs = [
                project_a("p", &obs, horizon, repr).unwrap(),
                project_b("p", &obs, horizon, damping, repr).unwrap(),
                project_c("p", &obs, horizon, damping, peak, rate, repr).unwrap(),
            ];
            for s in &runs {
                for (_, v) in &s.projected {
                    prop_assert!(v.is_finite() && *v >= 0.0);
                    if repr == Representation::Raw {
                        prop_assert!(*v <= 1.0);
                    }
                }
            }
            prop_assert_eq!(runs[1].projected.len(), horizon as usize);
            prop_assert_eq!(runs[2].projected.len(), horizon as usize);
            prop_assert_eq!(&runs[2], &project_c("p", &obs, horizon, damping, peak, rate, repr).unwrap());
        }
    }

    #[test]
    fn snapshot_round_trip(
        counts in prop::collection::btree_map("[A-Z]{2}", 0u64..1_000_000, 0..5),
        authors in prop::collection::vec(("A[0-9]{3,8}", 1u64..500), 0..10),
        countries in prop::collection::vec(("A[0-9]{3,8}", 1990i32..2030, country_subset()), 0..10),
        queries in prop::collection::btree_map("works\\?filter=[a-z0-9]{1,10}", "20[0-9]{2}-01-01T00:00:00Z", 0..5),
    ) {
        let mut wc = WorkCounts::new("physics", Period::year(2001));
        wc.party_counts = counts.clone().into_iter().collect::<BTreeMap<_, _>>();
        let mut data = Dataset {
            work_counts: vec![wc],
            cohorts: vec![CohortRecord {
                discipline: "physics".into(),
                year: 2001,
                authors: authors.iter().map(|(k, c)| GroupedCount { group_key: k.clone(), count: *c }).collect(),
            }],
            author_countries: countries
                .iter()
                .map(|(id, y, c)| AuthorCountries { author_id: id.clone(), year: *y, countries: c.clone() })
                .collect(),
        };
        data.normalize();
        let manifest = Manifest::new(queries);
        let dir = tempfile::tempdir().unwrap();
        let id = save_snapshot(dir.path(), &manifest, &data, "2026-01-01T00:00:00Z").unwrap();
        let snap = load_snapshot(dir.path(), &id).unwrap();
        prop_assert_eq!(&snap.manifest, &manifest);
        prop_assert_eq!(&snap.data, &data);
        let again = save_snapshot(dir.path(), &snap.manifest, &snap.data, "2027-01-01T00:00:00Z").unwrap();
        prop_assert_eq!(id, again);
    }
}
