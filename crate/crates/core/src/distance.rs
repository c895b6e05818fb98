//! Jaccard collaboration distance between parties, the `-ln D` rescaling used
//! for time-series reporting, and metric checks on the resulting matrices.

use serde::{Deserialize, Serialize};

use crate::corpus::{union_size, Period, WorkCounts};
use crate::error::Error;

/// An exact Jaccard distance `(union - inter) / union` kept as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JaccardRatio {
    pub inter: u64,
    pub union: u64,
}

impl JaccardRatio {
    pub fn from_counts(counts: &WorkCounts, x: &str, y: &str) -> Result<Self, Error> {
        let union = union_size(counts, x, y)?;
        if union == 0 {
            return Err(Error::UndefinedDistance { x: x.into(), y: y.into() });
        }
        let inter = counts.joint(x, y).unwrap_or(0);
        Ok(JaccardRatio { inter, union })
    }

    fn numer(&self) -> u128 {
        (self.union - self.inter) as u128
    }

    pub fn value(&self) -> f64 {
        (self.union - self.inter) as f64 / self.union as f64
    }
}

/// Exact test of `a <= b + c` on rationals.
fn rational_triangle_holds(a: JaccardRatio, b: JaccardRatio, c: JaccardRatio) -> bool {
    let (an, ad) = (a.numer(), a.union as u128);
    let (bn, bd) = (b.numer(), b.union as u128);
    let (cn, cd) = (c.numer(), c.union as u128);
    an * bd * cd <= bn * ad * cd + cn * ad * bd
}

/// D(X, Y) = 1 - |S_X ∩ S_Y| / |S_X ∪ S_Y|.
pub fn jaccard_distance(counts: &WorkCounts, x: &str, y: &str) -> Result<f64, Error> {
    if x == y {
        return Ok(0.0);
    }
    Ok(JaccardRatio::from_counts(counts, x, y)?.value())
}

/// D ↦ -ln D.
pub fn rescale(d: f64) -> Result<f64, Error> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Argument(format!("rescale needs 0 < d <= 1, got {d}")));
    }
    Ok(-d.ln())
}

/// Symmetric n×n distance matrix for one discipline and period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub parties: Vec<String>,
    pub discipline: String,
    pub period: Period,
    /// Row-major, `parties.len()²` entries.
    pub values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from explicit rows, enforcing symmetry, a zero
    /// diagonal, entries in [0, 1] and the triangle inequality (to within
    /// `1e-12`, since the inputs are already rounded reals).
    pub fn from_rows(parties: Vec<String>, discipline: &str, period: Period, rows: &[Vec<f64>]) -> Result<Self, Error> {
        let n = parties.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument(format!("expected a {n}x{n} matrix")));
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(Error::DataIntegrity(format!("non-zero diagonal at {i}")));
            }
            for j in 0..n {
                let v = rows[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::DataIntegrity(format!("entry ({i},{j}) = {v} outside [0,1]")));
                }
                if v != rows[j][i] {
                    return Err(Error::DataIntegrity(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        let m = DistanceMatrix { parties, discipline: discipline.to_string(), period, values: rows.concat() };
        if let Some((i, j, k)) = m.triangle_violation(1e-12) {
            return Err(Error::DataIntegrity(format!(
                "triangle inequality fails for ({}, {}, {})",
                m.parties[i], m.parties[j], m.parties[k]
            )));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.parties.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn index_of(&self, party: &str) -> Option<usize> {
        self.parties.iter().position(|p| p == party)
    }

    pub fn between(&self, x: &str, y: &str) -> Option<f64> {
        Some(self.get(self.index_of(x)?, self.index_of(y)?))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n()).map(<[f64]>::to_vec).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// First triple (i, j, k) with D[i][k] > D[i][j] + D[j][k] + tol.
    pub fn triangle_violation(&self, tol: f64) -> Option<(usize, usize, usize)> {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.get(i, k) > self.get(i, j) + self.get(j, k) + tol {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    /// Restricts the matrix to `parties`, in that order.
    pub fn submatrix(&self, parties: &[&str]) -> Result<DistanceMatrix, Error> {
        let idx = parties
            .iter()
            .map(|p| self.index_of(p).ok_or_else(|| Error::Argument(format!("party {p} not in matrix"))))
            .collect::<Result<Vec<_>, _>>()?;
        let values = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Ok(DistanceMatrix {
            parties: parties.iter().map(|s| s.to_string()).collect(),
            discipline: self.discipline.clone(),
            period: self.period,
            values,
        })
    }

    /// CSV with a header row of party names followed by the full square.
    pub fn to_csv(&self) -> Result<String, Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.parties.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.rows().iter().enumerate() {
            let mut rec = vec![self.parties[i].clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Builds the full pairwise distance matrix. Any undefined pair fails the
/// whole matrix, and a triangle-inequality violation (impossible for true
/// set data) is reported as a data-integrity error.
pub fn build_matrix(counts: &WorkCounts, parties: &[&str]) -> Result<DistanceMatrix, Error> {
    let n = parties.len();
    if n < 2 {
        return Err(Error::Argument("a distance matrix needs at least two parties".into()));
    }
    counts.validate()?;
    let zero = JaccardRatio { inter: 1, union: 1 };
    let mut ratios = vec![zero; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let r = JaccardRatio::from_counts(counts, parties[i], parties[j])?;
            ratios[i * n + j] = r;
            ratios[j * n + i] = r;
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i == k || i == j || j == k {
                    continue;
                }
                if !rational_triangle_holds(ratios[i * n + k], ratios[i * n + j], ratios[j * n + k]) {
                    return Err(Error::DataIntegrity(format!(
                        "{} {}: triangle inequality fails for {}–{} via {}",
                        counts.discipline, counts.period, parties[i], parties[k], parties[j]
                    )));
                }
            }
        }
    }
    Ok(DistanceMatrix {
        parties: parties.iter().map(|s| s.to_string()).collect(),
        discipline: counts.discipline.clone(),
        period: counts.period,
        values: ratios.iter().map(JaccardRatio::value).collect(),
    })
}

/// One party pair's rescaled distance over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledSeries {
    pub pair: (String, String),
    pub points: Vec<(i32, f64)>,
}

impl RescaledSeries {
    pub fn from_raw(pair: (String, String), raw: &[(i32, f64)]) -> Result<Self, Error> {
        let points = raw.iter().map(|&(y, d)| rescale(d).map(|v| (y, v))).collect::<Result<_, _>>()?;
        Ok(RescaledSeries { pair, points })
    }
}
