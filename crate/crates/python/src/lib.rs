//! Python bindings over `atlas_core`. Inputs and outputs are plain Python
//! lists, tuples and dicts.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use atlas_core::corpus::{PartySpec, Period, WorkCounts};
use atlas_core::distance::DistanceMatrix;
use atlas_core::kflow::{AuthorYearSet, Kfr};
use atlas_core::scenarios::{Representation, TrajectorySeries};
use atlas_core::{distance, geometry, kflow, scenarios, Error};

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn representation(rescaled: bool) -> Representation {
    if rescaled {
        Representation::Rescaled
    } else {
        Representation::Raw
    }
}

fn work_counts(counts: &BTreeMap<String, u64>, joints: &BTreeMap<(String, String), u64>) -> WorkCounts {
    let mut wc = WorkCounts::new("python", Period::year(2000));
    for (p, c) in counts {
        wc.set_count(p, *c);
    }
    for ((a, b), c) in joints {
        wc.set_joint(a, b, *c);
    }
    wc
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DistanceMatrix> {
    let names = (0..rows.len()).map(|i| format!("P{i}")).collect();
    DistanceMatrix::from_rows(names, "python", Period::year(2000), &rows).map_err(py_err)
}

/// True when any of the work's country codes belongs to `members`.
#[pyfunction]
fn nationality_of(countries: Vec<String>, members: Vec<String>) -> PyResult<bool> {
    let party = PartySpec::new("party", members).map_err(py_err)?;
    Ok(atlas_core::corpus::nationality_of(&countries, &party))
}

/// Jaccard distance from |S_X|, |S_Y| and |S_X ∩ S_Y|.
#[pyfunction]
fn jaccard_distance(count_x: u64, count_y: u64, joint: u64) -> PyResult<f64> {
    let counts = BTreeMap::from([("X".to_string(), count_x), ("Y".to_string(), count_y)]);
    let joints = BTreeMap::from([(("X".to_string(), "Y".to_string()), joint)]);
    distance::jaccard_distance(&work_counts(&counts, &joints), "X", "Y").map_err(py_err)
}

/// Full distance matrix, rows in `parties` order. `joints` maps unordered
/// party pairs to joint counts.
#[pyfunction]
fn distance_matrix(
    counts: BTreeMap<String, u64>,
    joints: BTreeMap<(String, String), u64>,
    parties: Vec<String>,
) -> PyResult<Vec<Vec<f64>>> {
    let names: Vec<&str> = parties.iter().map(String::as_str).collect();
    Ok(distance::build_matrix(&work_counts(&counts, &joints), &names).map_err(py_err)?.rows())
}

/// -ln(d).
#[pyfunction]
fn rescale(d: f64) -> PyResult<f64> {
    distance::rescale(d).map_err(py_err)
}

/// Classical MDS of a distance matrix: (coordinates, eigenvalues, residual).
#[pyfunction]
fn embed(rows: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let e = geometry::embed(&matrix(rows)?).map_err(py_err)?;
    Ok((e.coordinates, e.eigenvalues, e.residual))
}

/// Triangle on a base with two sides: dict with height, area, apex_x, degenerate.
#[pyfunction]
fn triangle_stats(base: f64, left_side: f64, right_side: f64) -> PyResult<BTreeMap<String, f64>> {
    let t = geometry::triangle_stats("python", base, left_side, right_side).map_err(py_err)?;
    Ok(BTreeMap::from([
        ("base".to_string(), t.base),
        ("left_side".to_string(), t.left_side),
        ("right_side".to_string(), t.right_side),
        ("height".to_string(), t.height),
        ("area".to_string(), t.area),
        ("apex_x".to_string(), t.apex_x()),
        ("degenerate".to_string(), if t.degenerate { 1.0 } else { 0.0 }),
    ]))
}

/// Volume of the tetrahedron with the given 4x4 edge-length matrix.
#[pyfunction]
fn tetra_volume(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(geometry::tetra_volume(&matrix(rows)?).map_err(py_err)?.volume)
}

/// Radius per party, scaled by the cube root of its count.
#[pyfunction]
fn sphere_radii(counts: Vec<(String, u64)>, reference_count: u64, reference_radius: f64) -> Vec<f64> {
    geometry::sphere_radii(&counts, reference_count, reference_radius).into_iter().map(|s| s.radius).collect()
}

/// Ordered (from, to) flows of one author between consecutive years.
#[pyfunction]
fn author_flows(before: Vec<String>, after: Vec<String>) -> Vec<(String, String)> {
    kflow::author_flows(&AuthorYearSet::new("A", 0, before), &AuthorYearSet::new("A", 1, after))
}

/// Knowledge flow rates for a cohort of (before, after) party sets. Returns
/// None when the cohort has too few off-diagonal flows.
#[pyfunction]
fn knowledge_flow_rates(
    cohort: Vec<(Vec<String>, Vec<String>)>,
    parties: Vec<String>,
) -> PyResult<Option<BTreeMap<(String, String), f64>>> {
    let pairs: Vec<(AuthorYearSet, AuthorYearSet)> = cohort
        .into_iter()
        .enumerate()
        .map(|(i, (b, a))| {
            let id = format!("A{i}");
            (AuthorYearSet::new(&id, 0, b), AuthorYearSet::new(&id, 1, a))
        })
        .collect();
    let names: Vec<&str> = parties.iter().map(String::as_str).collect();
    let k = kflow::build_k_matrix(&pairs, &names, 0).map_err(py_err)?;
    Ok(match kflow::kfr(&k) {
        Kfr::Excluded { .. } => None,
        Kfr::Rates(r) => Some(r.off_diagonal().into_iter().map(|(a, b, v)| ((a, b), v)).collect()),
    })
}

fn projected(s: Result<TrajectorySeries, Error>) -> PyResult<Vec<(i32, f64)>> {
    Ok(s.map_err(py_err)?.projected)
}

/// Scenario A: mirror the observed series about its last year.
#[pyfunction]
#[pyo3(signature = (observed, horizon, rescaled = false))]
fn project_a(observed: Vec<(i32, f64)>, horizon: u32, rescaled: bool) -> PyResult<Vec<(i32, f64)>> {
    projected(scenarios::project_a("pair", &observed, horizon, representation(rescaled)))
}

/// Scenario B: geometrically damped continuation of the last increment.
#[pyfunction]
#[pyo3(signature = (observed, horizon, damping, rescaled = false))]
fn project_b(observed: Vec<(i32, f64)>, horizon: u32, damping: f64, rescaled: bool) -> PyResult<Vec<(i32, f64)>> {
    projected(scenarios::project_b("pair", &observed, horizon, damping, representation(rescaled)))
}

/// Scenario C: damped growth for `peak_years`, then a linear return.
#[pyfunction]
#[pyo3(signature = (observed, horizon, damping, peak_years, decline_rate, rescaled = false))]
fn project_c(
    observed: Vec<(i32, f64)>,
    horizon: u32,
    damping: f64,
    peak_years: u32,
    decline_rate: f64,
    rescaled: bool,
) -> PyResult<Vec<(i32, f64)>> {
    projected(scenarios::project_c(
        "pair",
        &observed,
        horizon,
        damping,
        peak_years,
        decline_rate,
        representation(rescaled),
    ))
}

#[pymodule]
fn atlas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(nationality_of, m)?)?;
    m.add_function(wrap_pyfunction!(jaccard_distance, m)?)?;
    m.add_function(wrap_pyfunction!(distance_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(rescale, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_stats, m)?)?;
    m.add_function(wrap_pyfunction!(tetra_volume, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_radii, m)?)?;
    m.add_function(wrap_pyfunction!(author_flows, m)?)?;
    m.add_function(wrap_pyfunction!(knowledge_flow_rates, m)?)?;
    m.add_function(wrap_pyfunction!(project_a, m)?)?;
    m.add_function(wrap_pyfunction!(project_b, m)?)?;
    m.add_function(wrap_pyfunction!(project_c, m)?)?;
    Ok(())
}
