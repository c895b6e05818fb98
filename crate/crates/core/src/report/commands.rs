use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::config::{Aggregate, RunConfig};
use super::fetch::distance_sources;
use super::svg::{color, LineChart, Series, Svg};
use crate::corpus::{DomainClass, Period, Scope};
use crate::distance::{build_matrix, rescale, DistanceMatrix};
use crate::error::Error;
use crate::geometry::{embed, embedding_volume, sphere_radii, tetra_volume, triangle_stats, Embedding, TriangleStats};
use crate::kflow::{cohort_series, kfr, mean_kfr, pooled_k_matrix, FlowMatrix, Kfr};
use crate::scenarios::{mean_annual_change, project_a, project_b, project_c, Representation, TrajectorySeries};
use crate::store::{self, Dataset, Snapshot};

/// Loads `id`, or the snapshot named in `LATEST` when no id is given.
pub fn open_snapshot(cfg: &RunConfig, id: Option<&str>) -> Result<Snapshot, Error> {
    let id = match id {
        Some(id) => id.to_string(),
        None => store::read_latest(&cfg.snapshots)?,
    };
    Ok(store::load_snapshot(&cfg.snapshots, &id)?)
}

/// Collects output files; each is written atomically.
pub struct Outputs {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(root: &Path) -> Self {
        Outputs { root: root.to_path_buf(), written: Vec::new() }
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), Error> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        crate::openalex::write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), Error> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    pub fn files(self) -> Vec<PathBuf> {
        self.written
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn meta(snapshot: &Snapshot) -> serde_json::Value {
    let span = snapshot.manifest.retrieval_span();
    json!({
        "snapshot": snapshot.id,
        "fixtures_retrieved": span.map(|(a, b)| vec![a, b]),
    })
}

fn counts<'a>(data: &'a Dataset, key: &str, period: Period) -> Result<&'a crate::corpus::WorkCounts, Error> {
    data.counts_for(key, period)
        .ok_or_else(|| Error::DataIntegrity(format!("snapshot has no counts for {key} {period}; re-run fetch")))
}

/// Distance matrix for a configured scope key; the mean aggregate averages
/// the per-discipline matrices entry by entry.
fn scope_matrix(
    data: &Dataset,
    key: &str,
    aggregate: Aggregate,
    period: Period,
    parties: &[&str],
) -> Result<DistanceMatrix, Error> {
    let sources = distance_sources(key, aggregate)?;
    if sources.len() == 1 {
        let mut m = build_matrix(counts(data, &sources[0].key(), period)?, parties)?;
        m.discipline = key.to_string();
        return Ok(m);
    }
    let n = parties.len();
    let mut acc = vec![vec![0.0; n]; n];
    for s in &sources {
        let m = build_matrix(counts(data, &s.key(), period)?, parties)?;
        for (i, row) in acc.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += m.get(i, j);
            }
        }
    }
    let k = sources.len() as f64;
    for i in 0..n {
        for j in 0..n {
            acc[i][j] /= k;
        }
    }
    // Enforce exact symmetry after the division.
    for i in 0..n {
        for j in i + 1..n {
            acc[j][i] = acc[i][j];
        }
    }
    DistanceMatrix::from_rows(parties.iter().map(|s| s.to_string()).collect(), key, period, &acc)
}

fn represent(d: f64, repr: Representation) -> Result<f64, Error> {
    match repr {
        Representation::Raw => Ok(d),
        Representation::Rescaled => rescale(d),
    }
}

fn repr_label(repr: Representation) -> &'static str {
    match repr {
        Representation::Raw => "collaboration distance D",
        Representation::Rescaled => "-ln D",
    }
}

fn x_of(period: Period) -> f64 {
    (period.start + period.end) as f64 / 2.0
}

/// Per-scope, per-period distance matrices plus the pairwise time series.
pub fn cmd_distance(snapshot: &Snapshot, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let d = &cfg.distance;
    let repr = cfg.representation;
    let parties: Vec<&str> = d.parties.iter().map(String::as_str).collect();
    let periods = cfg.distance_periods();
    let mut outputs = Outputs::new(out);
    let mut series_csv = String::from("scope,pair,period,start,end,distance,rescaled\n");

    for key in &d.disciplines {
        let scope = Scope::parse(key)?;
        let skey = scope.key();
        let mut matrices = Vec::new();
        for &period in &periods {
            let m = scope_matrix(&snapshot.data, &skey, d.aggregate, period, &parties)?;
            outputs.write(&format!("distance/{skey}/{period}.csv"), m.to_csv()?.as_bytes())?;
            matrices.push(m);
        }

        let mut chart = Vec::new();
        for i in 0..parties.len() {
            for j in i + 1..parties.len() {
                let pair = format!("{}-{}", parties[i], parties[j]);
                let mut points = Vec::new();
                for m in &matrices {
                    let v = m.get(i, j);
                    let r = rescale(v).ok();
                    let _ = writeln!(
                        series_csv,
                        "{skey},{pair},{},{},{},{},{}",
                        m.period,
                        m.period.start,
                        m.period.end,
                        num(v),
                        r.map(num).unwrap_or_default()
                    );
                    if let Ok(y) = represent(v, repr) {
                        points.push((x_of(m.period), y));
                    }
                }
                chart.push(Series { name: pair, points, dashed: false });
            }
        }
        let aggregate = matches!(scope, Scope::NaturalSciences).then_some(d.aggregate);
        outputs.json(
            &format!("distance/{skey}/matrices.json"),
            &json!({
                "meta": meta(snapshot),
                "scope": skey,
                "label": scope.label(),
                "aggregate": aggregate,
                "parties": parties,
                "periods": matrices.iter().map(|m| json!({"period": m.period.to_string(), "rows": m.rows()})).collect::<Vec<_>>(),
            }),
        )?;
        let svg = LineChart {
            title: format!("{}: collaboration distance between parties", scope.label()),
            note: aggregate.map(|a| {
                format!("aggregate: {}", if a == Aggregate::Pooled { "pooled works" } else { "mean of disciplines" })
            }),
            x_label: "year".into(),
            y_label: repr_label(repr).into(),
            series: chart,
        }
        .render();
        outputs.write(&format!("distance/{skey}/series.svg"), svg.as_bytes())?;
    }
    outputs.write("distance/series.csv", series_csv.as_bytes())?;
    Ok(outputs.files())
}

#[derive(Serialize)]
struct KfrYear<'a> {
    from_year: i32,
    sigma_off: u64,
    k: Vec<Vec<u64>>,
    kfr: &'a Kfr,
}

fn k_rows(m: &FlowMatrix) -> Vec<Vec<u64>> {
    (0..m.n()).map(|i| (0..m.n()).map(|j| m.get(i, j)).collect()).collect()
}

fn kfr_rows(csv: &mut String, label: &str, item: &Kfr, parties: &[&str], sigma_off: u64) {
    let from_year = match item {
        Kfr::Excluded { from_year, .. } => *from_year,
        Kfr::Rates(m) => m.from_year,
    };
    for a in parties {
        for b in parties {
            if a == b {
                continue;
            }
            let rate = match item.rates().and_then(|m| m.rate(a, b)) {
                Some(r) => num(r * 100.0),
                None => "excluded".into(),
            };
            let _ = writeln!(csv, "{label},{from_year},{},{a},{b},{rate},{sigma_off}", from_year + 1);
        }
    }
}

fn kfr_chart(title: &str, note: Option<String>, items: &[Kfr], parties: &[&str]) -> String {
    let mut series = Vec::new();
    for a in parties {
        for b in parties {
            if a == b {
                continue;
            }
            let points = items
                .iter()
                .filter_map(|k| k.rates().and_then(|m| m.rate(a, b).map(|r| ((m.from_year + 1) as f64, r * 100.0))))
                .collect();
            series.push(Series { name: format!("{a}→{b}"), points, dashed: series.len() >= 10 });
        }
    }
    LineChart { title: title.into(), note, x_label: "year".into(), y_label: "KFR (%)".into(), series }.render()
}

/// Per-discipline flow rates for every transition plus the natural-science aggregate.
pub fn cmd_kfr(snapshot: &Snapshot, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let k = &cfg.kfr;
    let specs = cfg.parties(&k.parties)?;
    let parties: Vec<&str> = k.parties.iter().map(String::as_str).collect();
    let years = Period::new(k.start, k.end)?;
    let index = snapshot.data.index();
    let mut outputs = Outputs::new(out);
    let mut csv = String::from("discipline,from_year,to_year,from,to,rate_percent,sigma_off\n");

    let mut per_discipline: BTreeMap<String, (Vec<FlowMatrix>, Vec<Kfr>)> = BTreeMap::new();
    let mut natural_keys = Vec::new();
    let mut json_disciplines = Vec::new();
    for key in &k.disciplines {
        let scope = Scope::parse(key)?;
        let skey = scope.key();
        let flows = cohort_series(&index, &skey, years, &specs)?;
        let rates: Vec<Kfr> = flows.iter().map(kfr).collect();
        for (f, r) in flows.iter().zip(&rates) {
            kfr_rows(&mut csv, &skey, r, &parties, f.sigma_off);
        }
        json_disciplines.push(json!({
            "discipline": skey,
            "years": flows.iter().zip(&rates).map(|(f, r)| KfrYear { from_year: f.from_year, sigma_off: f.sigma_off, k: k_rows(f), kfr: r }).collect::<Vec<_>>(),
        }));
        let svg = kfr_chart(&format!("{}: knowledge flow rate", scope.label()), None, &rates, &parties);
        outputs.write(&format!("kfr/{skey}.svg"), svg.as_bytes())?;
        if matches!(&scope, Scope::Concept(d) if d.domain_class == DomainClass::NaturalScience) {
            natural_keys.push(skey.clone());
        }
        per_discipline.insert(skey, (flows, rates));
    }
    outputs.write("kfr/series.csv", csv.as_bytes())?;

    let method = match k.aggregate {
        Aggregate::Mean => "mean",
        Aggregate::Pooled => "pooled",
    };
    let mut aggregate = Vec::new();
    let mut agg_csv = String::from("method,from_year,to_year,from,to,rate_percent,sigma_off\n");
    if !natural_keys.is_empty() {
        for (t, tau) in (years.start..years.end).enumerate() {
            let (item, sigma) = match k.aggregate {
                Aggregate::Mean => {
                    let items: Vec<Kfr> = natural_keys.iter().map(|n| per_discipline[n].1[t].clone()).collect();
                    let sigma = natural_keys.iter().map(|n| per_discipline[n].0[t].sigma_off).sum();
                    (mean_kfr(&items, &parties, tau), sigma)
                }
                Aggregate::Pooled => {
                    let items: Vec<FlowMatrix> = natural_keys.iter().map(|n| per_discipline[n].0[t].clone()).collect();
                    let pooled = pooled_k_matrix(&items, &parties, tau)?;
                    (kfr(&pooled), pooled.sigma_off)
                }
            };
            kfr_rows(&mut agg_csv, method, &item, &parties, sigma);
            aggregate.push(item);
        }
        let note = format!("{method} over {} natural-science disciplines", natural_keys.len());
        let svg = kfr_chart("Natural sciences: knowledge flow rate", Some(note), &aggregate, &parties);
        outputs.write("kfr/natural_sciences.svg", svg.as_bytes())?;
        outputs.write("kfr/natural_sciences.csv", agg_csv.as_bytes())?;
    }
    outputs.json(
        "kfr/kfr.json",
        &json!({
            "meta": meta(snapshot),
            "parties": parties,
            "disciplines": json_disciplines,
            "natural_sciences": {"method": method, "disciplines": natural_keys, "years": aggregate},
        }),
    )?;
    Ok(outputs.files())
}

#[derive(Serialize)]
struct TetraSnapshot {
    period: String,
    distances: Vec<Vec<f64>>,
    volume: f64,
    cayley_menger: f64,
    volume_from_embedding: bool,
    embedding_volume: f64,
    embedding: Embedding,
    spheres: Vec<crate::geometry::SphereScale>,
}

fn triangle_series(data: &Dataset, cfg: &RunConfig) -> Result<Vec<(i32, TriangleStats)>, Error> {
    let g = &cfg.geometry;
    let key = Scope::parse(&g.triangle_scope)?.key();
    let p: Vec<&str> = g.triangle_parties.iter().map(String::as_str).collect();
    (g.triangle_start..=g.triangle_end)
        .map(|year| {
            let m = build_matrix(counts(data, &key, Period::year(year))?, &p)?;
            let t = triangle_stats(&year.to_string(), m.get(0, 1), m.get(0, 2), m.get(1, 2))?;
            Ok((year, t))
        })
        .collect()
}

fn triangle_csv(rows: &[(i32, TriangleStats)], kind: &str) -> String {
    let mut csv = String::from("year,kind,base,left_side,right_side,height,area,apex_x,degenerate\n");
    for (y, t) in rows {
        let _ = writeln!(
            csv,
            "{y},{kind},{},{},{},{},{},{},{}",
            num(t.base),
            num(t.left_side),
            num(t.right_side),
            num(t.height),
            num(t.area),
            num(t.apex_x()),
            t.degenerate
        );
    }
    csv
}

/// Triangles at five-year steps (plus the last year) drawn with the base
/// centred, the left base party on the left and the apex above.
fn triangle_svg(rows: &[(i32, TriangleStats)], parties: &[String], note: &str) -> String {
    let picks: Vec<&(i32, TriangleStats)> =
        rows.iter().enumerate().filter(|(i, (y, _))| y % 5 == 0 || *i + 1 == rows.len()).map(|(_, r)| r).collect();
    let (w, h) = (760.0, 520.0);
    let mut svg = Svg::new(w, h);
    svg.text(w / 2.0, 24.0, 16.0, "middle", &format!("{}–{}–{} triangle", parties[0], parties[1], parties[2]));
    svg.text(w / 2.0, 42.0, 11.0, "middle", note);
    let max_extent = picks.iter().map(|(_, t)| t.base.max(t.left_side).max(t.right_side)).fold(1e-9, f64::max);
    let scale = 560.0 / max_extent;
    let (cx, cy) = (w / 2.0 - 60.0, h - 60.0);
    for (i, (year, t)) in picks.iter().enumerate() {
        let x0 = cx - t.base * scale / 2.0;
        let x1 = cx + t.base * scale / 2.0;
        let apex = (x0 + t.apex_x() * scale, cy - t.height * scale);
        svg.polygon(&[(x0, cy), (x1, cy), apex], color(i), color(i));
        svg.text(w - 130.0, 70.0 + 16.0 * i as f64, 11.0, "start", &format!("{year}  H={:.4}", t.height));
        svg.line(w - 150.0, 66.0 + 16.0 * i as f64, w - 135.0, 66.0 + 16.0 * i as f64, color(i), 2.0);
    }
    svg.text(cx - 280.0, cy + 20.0, 12.0, "start", &parties[0]);
    svg.text(cx + 280.0, cy + 20.0, 12.0, "end", &parties[1]);
    svg.text(cx, 70.0, 12.0, "middle", &format!("{} (apex)", parties[2]));
    svg.finish()
}

fn tetra_svg(snaps: &[TetraSnapshot], parties: &[String]) -> String {
    let cols = 4usize;
    let cell = 180.0;
    let rows = snaps.len().div_ceil(cols).max(1);
    let (w, h) = (cols as f64 * cell, rows as f64 * cell + 60.0);
    let mut svg = Svg::new(w, h);
    svg.text(w / 2.0, 22.0, 16.0, "middle", "Distances between parties (first two embedding axes)");
    for (i, p) in parties.iter().enumerate() {
        svg.circle(20.0 + 110.0 * i as f64, 42.0, 5.0, color(i));
        svg.text(30.0 + 110.0 * i as f64, 46.0, 11.0, "start", p);
    }
    let extent = snaps
        .iter()
        .flat_map(|s| s.embedding.coordinates.iter())
        .flat_map(|c| c.iter().take(2))
        .fold(1e-9, |m: f64, v| m.max(v.abs()));
    let scale = (cell / 2.0 - 30.0) / extent;
    for (k, s) in snaps.iter().enumerate() {
        let ox = (k % cols) as f64 * cell + cell / 2.0;
        let oy = (k / cols) as f64 * cell + 60.0 + cell / 2.0;
        let pt = |i: usize| {
            let c = &s.embedding.coordinates[i];
            (ox + c[0] * scale, oy - c.get(1).copied().unwrap_or(0.0) * scale)
        };
        for i in 0..parties.len() {
            for j in i + 1..parties.len() {
                let (a, b) = (pt(i), pt(j));
                svg.line(a.0, a.1, b.0, b.1, "#999999", 1.0);
            }
        }
        for (i, sphere) in s.spheres.iter().enumerate() {
            let (x, y) = pt(i);
            svg.circle(x, y, (sphere.radius * scale).max(1.0), color(i));
        }
        svg.text(ox, oy + cell / 2.0 - 8.0, 12.0, "middle", &format!("{}  V={:.2e}", s.period, s.volume));
    }
    svg.finish()
}

/// Tetrahedron snapshots over the configured periods and the annual triangle series.
pub fn cmd_geometry(snapshot: &Snapshot, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let g = &cfg.geometry;
    let data = &snapshot.data;
    let mut outputs = Outputs::new(out);
    let tkey = Scope::parse(&g.tetra_scope)?.key();
    let tp: Vec<&str> = g.tetra_parties.iter().map(String::as_str).collect();

    let mut built = Vec::new();
    let mut reference = 0u64;
    for period in cfg.tetra_periods() {
        let wc = counts(data, &tkey, period)?;
        let m = build_matrix(wc, &tp)?;
        let sizes: Vec<(String, u64)> = tp.iter().map(|p| (p.to_string(), wc.count(p).unwrap_or(0))).collect();
        reference = reference.max(sizes.iter().map(|s| s.1).max().unwrap_or(0));
        built.push((period, m, sizes));
    }
    let mut snaps: Vec<TetraSnapshot> = Vec::new();
    let mut csv = String::from("period,volume,cayley_menger,volume_from_embedding,embedding_volume");
    for i in 0..tp.len() {
        for j in i + 1..tp.len() {
            let _ = write!(csv, ",{}-{}", tp[i], tp[j]);
        }
    }
    csv.push('\n');
    for (period, m, sizes) in &built {
        let vol = tetra_volume(m)?;
        let mut emb = embed(m)?;
        if let Some(prev) = snaps.last() {
            emb.align_to(&prev.embedding)?;
        }
        let ev = embedding_volume(&emb)?;
        let _ =
            write!(csv, "{period},{},{},{},{}", num(vol.volume), num(vol.cayley_menger), vol.from_embedding, num(ev));
        for i in 0..tp.len() {
            for j in i + 1..tp.len() {
                let _ = write!(csv, ",{}", num(m.get(i, j)));
            }
        }
        csv.push('\n');
        snaps.push(TetraSnapshot {
            period: period.to_string(),
            distances: m.rows(),
            volume: vol.volume,
            cayley_menger: vol.cayley_menger,
            volume_from_embedding: vol.from_embedding,
            embedding_volume: ev,
            embedding: emb,
            spheres: sphere_radii(sizes, reference, g.reference_radius),
        });
    }
    outputs.write("geometry/tetra.csv", csv.as_bytes())?;
    outputs.json(
        "geometry/tetra.json",
        &json!({
            "meta": meta(snapshot),
            "scope": tkey,
            "parties": tp,
            "sphere_reference": {"count": reference, "radius": g.reference_radius},
            "snapshots": snaps,
        }),
    )?;
    outputs.write("geometry/tetra.svg", tetra_svg(&snaps, &g.tetra_parties).as_bytes())?;

    let tri = triangle_series(data, cfg)?;
    outputs.write("geometry/triangle.csv", triangle_csv(&tri, "observed").as_bytes())?;
    outputs.json(
        "geometry/triangle.json",
        &json!({
            "meta": meta(snapshot),
            "scope": Scope::parse(&g.triangle_scope)?.key(),
            "base": [g.triangle_parties[0], g.triangle_parties[1]],
            "apex": g.triangle_parties[2],
            "years": tri.iter().map(|(_, t)| t).collect::<Vec<_>>(),
        }),
    )?;
    let svg = triangle_svg(&tri, &g.triangle_parties, "observed values");
    outputs.write("geometry/triangle.svg", svg.as_bytes())?;
    Ok(outputs.files())
}

/// Observed annual pair distance in the chosen representation.
pub fn observed_pair_series(data: &Dataset, cfg: &RunConfig) -> Result<Vec<(i32, f64)>, Error> {
    let s = &cfg.scenarios;
    let pair = [s.pair[0].as_str(), s.pair[1].as_str()];
    let key = Scope::parse(&s.scope)?.key();
    (cfg.distance.start..=cfg.distance.end)
        .map(|year| {
            let m = scope_matrix(data, &key, cfg.distance.aggregate, Period::year(year), &pair)?;
            Ok((year, represent(m.get(0, 1), cfg.representation)?))
        })
        .collect()
}

/// The three scenario projections with their resolved parameters.
pub fn scenario_set(observed: &[(i32, f64)], cfg: &RunConfig) -> Result<(Vec<TrajectorySeries>, &'static str), Error> {
    let s = &cfg.scenarios;
    let pair = format!("{}-{}", s.pair[0], s.pair[1]);
    let repr = cfg.representation;
    let last = observed.last().map(|p| p.0).ok_or_else(|| Error::Argument("empty observed series".into()))?;
    let horizon =
        u32::try_from(s.horizon_end - last).map_err(|_| Error::Argument("horizon before last observation".into()))?;
    let (rate, source) = match s.decline_rate {
        Some(r) => (r, "config"),
        None => (mean_annual_change(observed, s.reference_start, s.reference_end)?, "mean_abs_change"),
    };
    let series = vec![
        project_a(&pair, observed, horizon, repr)?,
        project_b(&pair, observed, horizon, s.damping, repr)?,
        project_c(&pair, observed, horizon, s.damping, s.peak_years, rate, repr)?,
    ];
    Ok((series, source))
}

/// Observed pair series with Scenario A/B/C continuations, plus the triangle
/// continued under Scenario B.
pub fn cmd_simulate(snapshot: &Snapshot, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let s = &cfg.scenarios;
    let mut outputs = Outputs::new(out);
    let observed = observed_pair_series(&snapshot.data, cfg)?;
    let (series, rate_source) = scenario_set(&observed, cfg)?;
    let pair = &series[0].pair;

    let mut csv = String::new();
    let _ = writeln!(csv, "# model projection, not observed data");
    let _ = writeln!(
        csv,
        "# pair={pair} scope={} representation={}",
        Scope::parse(&s.scope)?.key(),
        serde_json::to_value(cfg.representation)?.as_str().unwrap_or_default()
    );
    for t in &series {
        let _ = writeln!(csv, "# {}", serde_json::to_string(&t.params)?);
    }
    let _ = writeln!(csv, "# decline_rate_source={rate_source} reference={}-{}", s.reference_start, s.reference_end);
    csv.push_str("series,year,value\n");
    for (y, v) in &observed {
        let _ = writeln!(csv, "observed,{y},{}", num(*v));
    }
    for t in &series {
        for (y, v) in &t.projected {
            let _ = writeln!(csv, "{:?},{y},{}", t.scenario, num(*v));
        }
    }
    outputs.write("simulate/scenarios.csv", csv.as_bytes())?;
    outputs.json(
        "simulate/scenarios.json",
        &json!({"meta": meta(snapshot), "label": "model projection, not observed data", "decline_rate_source": rate_source, "series": series}),
    )?;

    let mut lines = vec![Series {
        name: "observed".into(),
        points: observed.iter().map(|(y, v)| (*y as f64, *v)).collect(),
        dashed: false,
    }];
    let (ly, lv) = *observed.last().expect("non-empty");
    for t in &series {
        let mut points = vec![(ly as f64, lv)];
        points.extend(t.projected.iter().map(|(y, v)| (*y as f64, *v)));
        lines.push(Series { name: format!("Scenario {:?} (model)", t.scenario), points, dashed: true });
    }
    let svg = LineChart {
        title: format!("{pair}: observed distance and scenarios"),
        note: Some("dashed curves: model projection, not observed data".into()),
        x_label: "year".into(),
        y_label: repr_label(cfg.representation).into(),
        series: lines,
    }
    .render();
    outputs.write("simulate/scenarios.svg", svg.as_bytes())?;

    let tri = triangle_series(&snapshot.data, cfg)?;
    if tri.len() >= 2 && s.horizon_end > cfg.geometry.triangle_end {
        let horizon = (s.horizon_end - cfg.geometry.triangle_end) as u32;
        let side = |f: fn(&TriangleStats) -> f64, label: &str| -> Result<Vec<(i32, f64)>, Error> {
            let obs: Vec<(i32, f64)> = tri.iter().map(|(y, t)| (*y, f(t))).collect();
            Ok(project_b(label, &obs, horizon, s.damping, Representation::Raw)?.projected)
        };
        let base = side(|t| t.base, "base")?;
        let left = side(|t| t.left_side, "left")?;
        let right = side(|t| t.right_side, "right")?;
        let projected: Vec<(i32, TriangleStats)> = base
            .iter()
            .zip(&left)
            .zip(&right)
            .map(|(((y, b), (_, l)), (_, r))| triangle_stats(&y.to_string(), *b, *l, *r).map(|t| (*y, t)))
            .collect::<Result<_, _>>()?;
        let mut csv = String::from("# model projection, not observed data: each side continued under Scenario B\n");
        csv.push_str(&triangle_csv(&projected, "scenario_b"));
        outputs.write("simulate/triangle_b.csv", csv.as_bytes())?;
        let mut all = tri.clone();
        all.extend(projected);
        let svg = triangle_svg(
            &all,
            &cfg.geometry.triangle_parties,
            "after the last observed year: Scenario B model projection, not observed data",
        );
        outputs.write("simulate/triangle_b.svg", svg.as_bytes())?;
    }
    Ok(outputs.files())
}
