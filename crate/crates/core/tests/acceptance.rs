//! Acceptance gate: one check per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use atlas_core::corpus::{tally, PartySpec, Period};
use atlas_core::distance::{build_matrix, DistanceMatrix};
use atlas_core::geometry::{embed, embedding_volume, tetra_volume};
use atlas_core::kflow::{author_flows, build_k_matrix, kfr, mean_kfr, AuthorYearSet, Kfr, MIN_SIGMA_OFF};
use atlas_core::openalex::FixtureMode;
use atlas_core::report::{client_for, cmd_kfr, collect, RunConfig};
use atlas_core::scenarios::{local_maxima, project_a, project_b, project_c, Representation};
use atlas_core::store::{load_snapshot, save_snapshot, Dataset};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture_config() -> RunConfig {
    RunConfig::load(&repo_root().join("fixtures/atlas.toml")).expect("fixture config")
}

fn fixture_dataset() -> (RunConfig, Dataset) {
    let cfg = fixture_config();
    let client = client_for(&cfg, FixtureMode::Replay);
    let (_, data) = collect(&cfg, &client).expect("fixtures replay");
    assert_eq!(client.network_calls(), 0);
    (cfg, data)
}

fn matrix(parties: usize, rows: Vec<Vec<f64>>) -> DistanceMatrix {
    let names = (0..parties).map(|i| format!("P{i}")).collect();
    DistanceMatrix::from_rows(names, "synthetic", Period::year(2000), &rows).unwrap()
}

fn euclidean_rows(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let raw: Vec<Vec<f64>> = points.iter().map(|p| points.iter().map(|q| d(p, q)).collect()).collect();
    let max = raw.iter().flatten().cloned().fold(0.0, f64::max);
    raw.iter().map(|r| r.iter().map(|v| v / max).collect()).collect()
}

/// Exact Jaccard numerator/denominator pairs from explicit work-index sets.
fn brute_force(works: &[Vec<String>], parties: &[PartySpec]) -> Vec<Vec<(u64, u64)>> {
    let sets: Vec<HashSet<usize>> = parties
        .iter()
        .map(|p| {
            works.iter().enumerate().filter(|(_, w)| w.iter().any(|c| p.members.contains(c))).map(|(i, _)| i).collect()
        })
        .collect();
    sets.iter()
        .map(|a| sets.iter().map(|b| (a.intersection(b).count() as u64, a.union(b).count() as u64)).collect())
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut computing = Duration::ZERO;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let codes: Vec<String> =
        ["US", "CN", "GB", "DE", "FR", "JP", "KR", "IN", "BR", "IT", "CA", "AU"].map(String::from).to_vec();
    let mut checked_triples = 0u64;
    for corpus in 0..100 {
        let parties: Vec<PartySpec> = (0..5)
            .map(|p| {
                let k = rng.random_range(1..=3);
                let members: Vec<&String> = codes.choose_multiple(&mut rng, k).collect();
                PartySpec::new(&format!("P{p}"), members).unwrap()
            })
            .collect();
        let n_works = rng.random_range(1..=10_000);
        let mut works: Vec<Vec<String>> = (0..n_works)
            .map(|_| {
                let k = rng.random_range(1..=4);
                codes.choose_multiple(&mut rng, k).cloned().collect()
            })
            .collect();
        // Guarantee every party is non-empty so every distance is defined.
        for p in &parties {
            works.push(vec![p.members.iter().next().unwrap().clone()]);
        }
        let names: Vec<&str> = parties.iter().map(|p| p.name.as_str()).collect();
        let timer = Instant::now();
        let m = build_matrix(&tally("t", Period::year(2000), &works, &parties), &names).map_err(|e| e.to_string())?;
        computing += timer.elapsed();
        let oracle = brute_force(&works, &parties);
        for i in 0..5 {
            for j in 0..5 {
                let (inter, union) = oracle[i][j];
                let want = if i == j { 0.0 } else { (union - inter) as f64 / union as f64 };
                ensure(m.get(i, j) == want, || format!("corpus {corpus}: D({i},{j}) = {} vs {want}", m.get(i, j)))?;
            }
        }
        // Triangle inequality in exact rational arithmetic on the oracle counts.
        for x in 0..5 {
            for y in 0..5 {
                for z in 0..5 {
                    if x == y || y == z || x == z {
                        continue;
                    }
                    let frac = |a: usize, b: usize| {
                        let (i, u) = oracle[a][b];
                        ((u - i) as u128, u as u128)
                    };
                    let ((n1, d1), (n2, d2), (n3, d3)) = (frac(x, z), frac(x, y), frac(y, z));
                    ensure(n1 * d2 * d3 <= n2 * d1 * d3 + n3 * d1 * d2, || {
                        format!("corpus {corpus}: triangle ({x},{y},{z})")
                    })?;
                    checked_triples += 1;
                }
            }
        }
        ensure(m.triangle_violation(0.0).is_none(), || format!("corpus {corpus}: float triangle violation"))?;
    }
    ensure(computing < Duration::from_secs(10), || format!("tally and matrices took {computing:?}"))?;
    Ok(format!(
        "100 corpora exact, {checked_triples} triples, computed in {computing:?} ({:?} with oracle)",
        start.elapsed()
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let points: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let m = matrix(5, euclidean_rows(&points));
        let e = embed(&m).map_err(|e| e.to_string())?;
        let mut residual: f64 = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                residual = residual.max((e.distance(i, j) - m.get(i, j)).abs());
            }
        }
        worst = worst.max(residual / m.max_entry());
        ensure(residual <= 1e-9 * m.max_entry(), || format!("case {case}: residual {residual:e}"))?;
    }
    let ones: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
    let e = embed(&matrix(5, ones)).map_err(|e| e.to_string())?;
    let dists: Vec<f64> = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).map(|(i, j)| e.distance(i, j)).collect();
    let spread = dists.iter().cloned().fold(f64::MIN, f64::max) - dists.iter().cloned().fold(f64::MAX, f64::min);
    ensure(spread <= 1e-12, || format!("regular simplex spread {spread:e}"))?;
    ensure(dists.iter().all(|d| (d - 1.0).abs() <= 1e-12), || "regular simplex edge != 1".into())?;
    within(Duration::from_secs(5), start)?;
    Ok(format!("worst relative residual {worst:.2e}, simplex spread {spread:.1e}, {:?}", start.elapsed()))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let points: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let m = matrix(4, euclidean_rows(&points));
        let cm = tetra_volume(&m).map_err(|e| e.to_string())?;
        let ev = embedding_volume(&embed(&m).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(!cm.from_embedding, || format!("case {case}: realizable metric fell back"))?;
        let rel = (cm.volume - ev).abs() / ev.max(cm.volume);
        worst = worst.max(rel);
        ensure(rel <= 1e-9, || format!("case {case}: CM {} vs embedding {ev} (rel {rel:e})", cm.volume))?;
    }
    let ones: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
    let v = tetra_volume(&matrix(4, ones)).map_err(|e| e.to_string())?.volume;
    let want = 1.0 / (6.0 * 2f64.sqrt());
    ensure((v - want).abs() <= 1e-12, || format!("regular tetrahedron {v} vs {want}"))?;
    Ok(format!("worst relative gap {worst:.2e}, regular V={v:.15}, {:?}", start.elapsed()))
}

fn flow_set(before: &[&str], after: &[&str]) -> BTreeSet<(String, String)> {
    author_flows(
        &AuthorYearSet::new("P", 1, before.iter().copied()),
        &AuthorYearSet::new("P", 2, after.iter().copied()),
    )
    .into_iter()
    .collect()
}

fn pairs(v: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    ensure(flow_set(&["X", "Y"], &["X", "Y"]) == pairs(&[("X", "X"), ("X", "Y"), ("Y", "X"), ("Y", "Y")]), || {
        "{X,Y}→{X,Y}".into()
    })?;
    let stay = flow_set(&["X", "Y"], &["X"]);
    ensure(stay == pairs(&[("X", "X"), ("Y", "X")]), || format!("{{X,Y}}→{{X}} gave {stay:?}"))?;
    ensure(!stay.contains(&("X".into(), "Y".into())), || "X→Y must not flow".into())?;
    let moved = flow_set(&["X"], &["Z"]);
    ensure(moved == pairs(&[("X", "Z")]), || format!("{{X}}→{{Z}} gave {moved:?}"))?;

    let parties = ["A", "B", "C", "D", "E"];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut rated, mut excluded) = (0, 0);
    for case in 0..1000 {
        let size = rng.random_range(0..60);
        let subset =
            |rng: &mut ChaCha8Rng| -> Vec<&str> { parties.iter().copied().filter(|_| rng.random_bool(0.3)).collect() };
        let cohort: Vec<(AuthorYearSet, AuthorYearSet)> = (0..size)
            .map(|a| {
                let id = format!("A{a}");
                (AuthorYearSet::new(&id, 2010, subset(&mut rng)), AuthorYearSet::new(&id, 2011, subset(&mut rng)))
            })
            .collect();
        let k = build_k_matrix(&cohort, &parties, 2010).map_err(|e| e.to_string())?;
        // Independent count of ordered affiliation pairs.
        let mut oracle: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        for (b, a) in &cohort {
            for i in &b.parties {
                for j in &a.parties {
                    *oracle
                        .entry((parties.iter().find(|p| *p == i).unwrap(), parties.iter().find(|p| *p == j).unwrap()))
                        .or_default() += 1;
                }
            }
        }
        for i in parties {
            for j in parties {
                let want = oracle.get(&(i, j)).copied().unwrap_or(0);
                ensure(k.flow(i, j) == Some(want), || format!("case {case}: K[{i}→{j}]"))?;
            }
        }
        match kfr(&k) {
            Kfr::Rates(r) => {
                ensure(k.sigma_off >= MIN_SIGMA_OFF, || format!("case {case}: rated below threshold"))?;
                let total: f64 = r.off_diagonal().iter().map(|t| t.2).sum();
                ensure((total - 1.0).abs() < 1e-12, || format!("case {case}: off-diagonal sum {total}"))?;
                rated += 1;
            }
            Kfr::Excluded { sigma_off, .. } => {
                ensure(sigma_off < 10 && sigma_off == k.sigma_off, || format!("case {case}: excluded at {sigma_off}"))?;
                excluded += 1;
            }
        }
    }
    let nine: Vec<_> = (0..9)
        .map(|a| (AuthorYearSet::new(&format!("A{a}"), 2010, ["A"]), AuthorYearSet::new(&format!("A{a}"), 2011, ["B"])))
        .collect();
    let k9 = build_k_matrix(&nine, &parties, 2010).map_err(|e| e.to_string())?;
    ensure(k9.sigma_off == 9 && matches!(kfr(&k9), Kfr::Excluded { sigma_off: 9, .. }), || {
        "Σ_off = 9 not excluded".into()
    })?;
    ensure(rated > 100 && excluded > 10, || format!("weak coverage: {rated} rated, {excluded} excluded"))?;
    within(Duration::from_secs(5), start)?;
    Ok(format!("worked examples exact; {rated} rated + {excluded} excluded cohorts, {:?}", start.elapsed()))
}

fn criterion_5() -> Outcome {
    let (_, data) = fixture_dataset();
    let series: Vec<(i32, f64)> = (2000..=2021)
        .map(|y| {
            let wc = data.counts_for("natural_sciences", Period::year(y)).ok_or(format!("no counts for {y}"))?;
            let m = build_matrix(wc, &["US", "CN"]).map_err(|e| e.to_string())?;
            Ok((y, m.get(0, 1)))
        })
        .collect::<Result<_, String>>()?;
    let at = |y: i32| series.iter().find(|p| p.0 == y).unwrap().1;
    let violations: Vec<i32> = (2000..2018).filter(|&y| at(y + 1) > at(y)).collect();
    ensure(violations.len() <= 2, || format!("non-converging steps at {violations:?}"))?;
    ensure(at(2021) > at(2019), || format!("no reversal: D2019={} D2021={}", at(2019), at(2021)))?;
    Ok(format!(
        "D(US,CN) 2000={:.4} 2018={:.4} 2019={:.4} 2021={:.4}; {} violations",
        at(2000),
        at(2018),
        at(2019),
        at(2021),
        violations.len()
    ))
}

fn criterion_6() -> Outcome {
    let (cfg, data) = fixture_dataset();
    let parties: Vec<&str> = cfg.kfr.parties.iter().map(String::as_str).collect();
    let specs = cfg.parties(&cfg.kfr.parties).map_err(|e| e.to_string())?;
    let index = data.index();
    let years = Period::new(2010, 2019).unwrap();
    let per: Vec<Vec<Kfr>> = cfg
        .kfr
        .disciplines
        .iter()
        .map(|d| atlas_core::kflow::cohort_series(&index, d, years, &specs).map(|f| f.iter().map(kfr).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(per.len() == 10, || format!("{} disciplines in the average", per.len()))?;
    let mut notes = Vec::new();
    for (t, tau) in (2010..=2018).enumerate() {
        let items: Vec<Kfr> = per.iter().map(|d| d[t].clone()).collect();
        let mean = mean_kfr(&items, &parties, tau);
        let r = mean.rates().ok_or(format!("{tau}: aggregate excluded"))?;
        let us_cn = r.rate("US", "CN").unwrap();
        let cn_us = r.rate("CN", "US").unwrap();
        let others = r
            .off_diagonal()
            .into_iter()
            .filter(|(a, b, _)| !matches!((a.as_str(), b.as_str()), ("US", "CN") | ("CN", "US")))
            .map(|t| t.2)
            .fold(0.0, f64::max);
        ensure(us_cn.min(cn_us) > others, || format!("{tau}: US→CN {us_cn:.3}, CN→US {cn_us:.3}, next {others:.3}"))?;
        if tau == 2018 {
            ensure(us_cn > 0.30 - 0.05 && cn_us > 0.30 - 0.05, || format!("2018: {us_cn:.3} / {cn_us:.3}"))?;
            notes.push(format!("2018 US→CN {:.1}% CN→US {:.1}%", us_cn * 100.0, cn_us * 100.0));
        }
    }
    // The command's aggregate must equal this recomputation.
    let out = tempfile::tempdir().unwrap();
    let snap_dir = tempfile::tempdir().unwrap();
    let manifest = atlas_core::store::Manifest::new([]);
    let id = save_snapshot(snap_dir.path(), &manifest, &data, "t").map_err(|e| e.to_string())?;
    let snap = load_snapshot(snap_dir.path(), &id).map_err(|e| e.to_string())?;
    cmd_kfr(&snap, &cfg, out.path()).map_err(|e| e.to_string())?;
    let csv = std::fs::read_to_string(out.path().join("kfr/natural_sciences.csv")).unwrap();
    ensure(csv.lines().any(|l| l.starts_with("mean,2018,2019,US,CN,")), || "aggregate CSV lacks 2018 row".into())?;
    Ok(notes.join("; "))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let obs: Vec<(i32, f64)> = (0..12).map(|k| (2010 + k, 0.99 - 0.004 * k as f64)).collect();
    let a = project_a("US-CN", &obs, 9, Representation::Raw).map_err(|e| e.to_string())?;
    for (k, (year, v)) in a.projected.iter().enumerate() {
        let mirror = obs[obs.len() - 2 - k];
        ensure(*year == 2022 + k as i32 && *v == mirror.1, || format!("A at {year}: {v} vs {}", mirror.1))?;
    }
    ensure(a.projected.windows(2).all(|w| w[1].1 > w[0].1), || "A not monotone-reversed".into())?;

    let rising: Vec<(i32, f64)> = vec![(2019, 0.950), (2020, 0.953), (2021, 0.957)];
    let b = project_b("US-CN", &rising, 9, 0.8, Representation::Raw).map_err(|e| e.to_string())?;
    let mut vals = vec![0.957];
    vals.extend(b.projected.iter().map(|p| p.1));
    let incs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    ensure(incs.iter().all(|d| *d > 0.0), || "B not monotone".into())?;
    ensure(incs.windows(2).all(|w| w[1] < w[0]), || "B increments not decreasing".into())?;

    let c = project_c("US-CN", &rising, 9, 0.8, 3, 0.0018, Representation::Raw).map_err(|e| e.to_string())?;
    let mut cv = vec![0.957];
    cv.extend(c.projected.iter().map(|p| p.1));
    ensure(local_maxima(&cv) == 1, || format!("C has {} local maxima", local_maxima(&cv)))?;
    let again = project_c("US-CN", &rising, 9, 0.8, 3, 0.0018, Representation::Raw).unwrap();
    ensure(again == c, || "C not deterministic".into())?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("A mirror exact, B concave rising, C one peak, {:?}", start.elapsed()))
}

fn write_run_config(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(repo_root().join("fixtures/atlas.toml")).unwrap();
    let mut value: toml::Table = text.parse().unwrap();
    let fixtures = repo_root().join("fixtures/openalex").canonicalize().unwrap();
    value.insert("fixtures".into(), toml::Value::String(fixtures.display().to_string()));
    value.insert("snapshots".into(), toml::Value::String(dir.join("snapshots").display().to_string()));
    value.insert("out".into(), toml::Value::String(dir.join("out").display().to_string()));
    let path = dir.join("atlas.toml");
    std::fs::write(&path, toml::to_string(&value).unwrap()).unwrap();
    path
}

fn data_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "snapshot.meta" {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn full_run(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let config = write_run_config(dir);
    for cmd in ["fetch", "distance", "kfr", "geometry", "simulate"] {
        let mut c = Command::new(env!("CARGO_BIN_EXE_atlas"));
        c.arg(cmd).arg("--config").arg(&config);
        if cmd == "fetch" {
            c.arg("--offline");
        }
        let status = c.output().map_err(|e| e.to_string())?;
        ensure(status.status.success(), || format!("{cmd} failed: {}", String::from_utf8_lossy(&status.stderr)))?;
    }
    let mut files = BTreeMap::new();
    for sub in ["snapshots", "out"] {
        for (path, bytes) in data_files(&dir.join(sub)) {
            files.insert(Path::new(sub).join(path), bytes);
        }
    }
    Ok(files)
}

fn criterion_8() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = full_run(a.path())?;
    let second = full_run(b.path())?;
    let names = |m: &BTreeMap<PathBuf, Vec<u8>>| m.keys().cloned().collect::<Vec<_>>();
    ensure(names(&first) == names(&second), || "different file sets".into())?;
    let differing: Vec<&PathBuf> = first.iter().filter(|(k, v)| second[*k] != **v).map(|(k, _)| k).collect();
    ensure(differing.is_empty(), || format!("differing files: {differing:?}"))?;
    ensure(first.keys().any(|k| k.ends_with("simulate/scenarios.csv")), || "simulate output missing".into())?;
    Ok(format!("{} files byte-identical across two runs", first.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 Jaccard oracle equivalence", criterion_1),
        ("2 embedding fidelity", criterion_2),
        ("3 geometry cross-validation", criterion_3),
        ("4 KFR semantics", criterion_4),
        ("5 distance trend shape on fixtures", criterion_5),
        ("6 KFR dominance on fixtures", criterion_6),
        ("7 scenario determinism and shape", criterion_7),
        ("8 end-to-end offline determinism", criterion_8),
    ];
    let mut failed = Vec::new();
    for (name, check) in criterion_list(&criteria) {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                println!("FAIL criterion {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn criterion_list<'a>(c: &'a [(&'a str, fn() -> Outcome)]) -> impl Iterator<Item = (&'a str, fn() -> Outcome)> + 'a {
    c.iter().copied()
}
