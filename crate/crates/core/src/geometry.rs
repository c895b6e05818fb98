//! Euclidean embedding of distance matrices and the simplex diagnostics built
//! on it: triangle sides/height/area, tetrahedron volume, sphere radii.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::Error;

/// Party positions in ℝ^(n-1) reproducing a distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub parties: Vec<String>,
    /// One row per party, `n - 1` columns.
    pub coordinates: Vec<Vec<f64>>,
    /// Eigenvalues of the double-centred Gram matrix, descending, before clamping.
    pub eigenvalues: Vec<f64>,
    /// Sum of the magnitudes of the negative eigenvalues that were clamped to zero.
    pub clamped_mass: f64,
    /// Largest |embedded distance - input distance| over all pairs.
    pub residual: f64,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.parties.len()
    }

    pub fn dim(&self) -> usize {
        self.coordinates.first().map_or(0, Vec::len)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclid(&self.coordinates[i], &self.coordinates[j])
    }

    /// Rotates/reflects the coordinates onto `reference` (orthogonal
    /// Procrustes). Pairwise distances are unchanged.
    pub fn align_to(&mut self, reference: &Embedding) -> Result<(), Error> {
        if reference.parties != self.parties || reference.dim() != self.dim() {
            return Err(Error::Argument("embeddings must share parties and dimension".into()));
        }
        let (n, k) = (self.n(), self.dim());
        if k == 0 {
            return Ok(());
        }
        let x = DMatrix::from_fn(n, k, |i, j| self.coordinates[i][j]);
        let y = DMatrix::from_fn(n, k, |i, j| reference.coordinates[i][j]);
        let svd = (x.transpose() * &y).svd(true, true);
        let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
            return Err(Error::Numerical("SVD failed during alignment".into()));
        };
        let aligned = x * (u * v_t);
        for i in 0..n {
            for j in 0..k {
                self.coordinates[i][j] = aligned[(i, j)];
            }
        }
        Ok(())
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Classical scaling: B = -½·J·D²·J, eigendecompose, keep the n-1 leading
/// components with negative eigenvalues clamped to zero.
pub fn embed(matrix: &DistanceMatrix) -> Result<Embedding, Error> {
    let n = matrix.n();
    if n < 2 {
        return Err(Error::Argument("embedding needs at least two parties".into()));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| matrix.get(i, j).powi(2));
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand));

    let eig = SymmetricEigen::try_new(b, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigendecomposition did not converge".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let dim = n - 1;
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let clamped_mass = eigenvalues.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    let mut coordinates = vec![vec![0.0; dim]; n];
    for (c, &k) in order.iter().take(dim).enumerate() {
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        for (i, row) in coordinates.iter_mut().enumerate() {
            row[c] = eig.eigenvectors[(i, k)] * scale;
        }
    }

    let mut emb = Embedding { parties: matrix.parties.clone(), coordinates, eigenvalues, clamped_mass, residual: 0.0 };
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            residual = residual.max((emb.distance(i, j) - matrix.get(i, j)).abs());
        }
    }
    emb.residual = residual;
    Ok(emb)
}

/// Shape of the triangle on a base pair and an apex party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleStats {
    pub label: String,
    pub base: f64,
    /// Side from the left base vertex to the apex.
    pub left_side: f64,
    /// Side from the right base vertex to the apex.
    pub right_side: f64,
    pub height: f64,
    pub area: f64,
    pub degenerate: bool,
}

impl TriangleStats {
    /// Apex abscissa with the left base vertex at the origin and the right
    /// one at `(base, 0)`.
    pub fn apex_x(&self) -> f64 {
        (self.base * self.base + self.left_side * self.left_side - self.right_side * self.right_side)
            / (2.0 * self.base)
    }
}

/// Heron's area in Kahan's stable ordering, plus height over `base`.
/// Sides that violate (or exactly meet) the triangle inequality give a
/// degenerate record with zero area.
pub fn triangle_stats(label: &str, base: f64, left_side: f64, right_side: f64) -> Result<TriangleStats, Error> {
    for (name, v) in [("base", base), ("left side", left_side), ("right side", right_side)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Argument(format!("{name} must be positive, got {v}")));
        }
    }
    let mut s = [base, left_side, right_side];
    s.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    let product = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    let (area, degenerate) =
        if c - (a - b) <= 0.0 || product <= 0.0 { (0.0, true) } else { (0.25 * product.sqrt(), false) };
    Ok(TriangleStats {
        label: label.to_string(),
        base,
        left_side,
        right_side,
        height: 2.0 * area / base,
        area,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TetraVolume {
    pub volume: f64,
    /// det of the bordered Cayley–Menger matrix (= 288 V² when realizable).
    pub cayley_menger: f64,
    /// Set when the determinant was negative and the clamped embedding's
    /// volume was reported instead.
    pub from_embedding: bool,
}

/// Volume of the simplex on a 4-party matrix via the Cayley–Menger determinant.
pub fn tetra_volume(matrix: &DistanceMatrix) -> Result<TetraVolume, Error> {
    if matrix.n() != 4 {
        return Err(Error::Argument(format!("tetra_volume needs 4 parties, got {}", matrix.n())));
    }
    let cm = DMatrix::from_fn(5, 5, |i, j| match (i, j) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => 1.0,
        (i, j) => matrix.get(i - 1, j - 1).powi(2),
    });
    let det = cm.determinant();
    if det >= 0.0 {
        return Ok(TetraVolume { volume: (det / 288.0).sqrt(), cayley_menger: det, from_embedding: false });
    }
    let emb = embed(matrix)?;
    Ok(TetraVolume { volume: embedding_volume(&emb)?, cayley_menger: det, from_embedding: true })
}

/// Tetrahedron volume from 3-D coordinates by the scalar triple product.
pub fn embedding_volume(emb: &Embedding) -> Result<f64, Error> {
    if emb.n() != 4 || emb.dim() != 3 {
        return Err(Error::Argument("embedding_volume needs four points in 3-D".into()));
    }
    let p = &emb.coordinates;
    let edge = |k: usize, c: usize| p[k][c] - p[0][c];
    let m = Matrix3::from_fn(|r, c| edge(r + 1, c));
    Ok(m.determinant().abs() / 6.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereScale {
    pub party: String,
    pub count: u64,
    pub radius: f64,
}

/// Radii with volume proportional to output: r = (count / ref)^(1/3) · r_ref.
/// The same reference must be used for every snapshot so sizes compare across time.
pub fn sphere_radii(counts: &[(String, u64)], reference_count: u64, reference_radius: f64) -> Vec<SphereScale> {
    counts
        .iter()
        .map(|(party, count)| SphereScale {
            party: party.clone(),
            count: *count,
            radius: if reference_count == 0 {
                0.0
            } else {
                (*count as f64 / reference_count as f64).cbrt() * reference_radius
            },
        })
        .collect()
}
