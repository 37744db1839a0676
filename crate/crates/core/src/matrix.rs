//! The truncated coefficient array shared by parameters and observations.

use crate::spectra::EigenProfile;

/// A `k_max × p` array of reals stored column by column.
///
/// Indices are zero-based: row `k` holds eigen-coordinate `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    k_max: usize,
    p: usize,
    data: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn zeros(k_max: usize, p: usize) -> Self {
        CoefficientMatrix { k_max, p, data: vec![0.0; k_max * p] }
    }

    /// Builds from column-major data of length `k_max * p`.
    pub fn from_columns(k_max: usize, p: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == k_max * p).then_some(CoefficientMatrix { k_max, p, data })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[j * self.k_max + k]
    }

    pub fn set(&mut self, k: usize, j: usize, value: f64) {
        self.data[j * self.k_max + k] = value;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.k_max..(j + 1) * self.k_max]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.k_max..(j + 1) * self.k_max]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Number of nonzero columns.
    pub fn support_size(&self) -> usize {
        (0..self.p).filter(|&j| self.column(j).iter().any(|&v| v != 0.0)).count()
    }

    /// `Σ_k θ²_{k,j} / μ_k` for column `j`; infinite if mass sits on a zero eigenvalue.
    pub fn ellipsoid_sum(&self, j: usize, profile: &EigenProfile) -> f64 {
        self.column(j)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| v * v / profile.eigenvalue(k as u64 + 1))
            .sum()
    }

    /// Membership in the sparse parameter space: at most `s` active columns,
    /// each inside the unit ellipsoid (up to `tol`).
    pub fn in_parameter_space(&self, profile: &EigenProfile, s: usize, tol: f64) -> bool {
        self.support_size() <= s && (0..self.p).all(|j| self.ellipsoid_sum(j, profile) <= 1.0 + tol)
    }

    /// Keeps the first `rows` rows.
    pub fn truncated(&self, rows: usize) -> Self {
        let rows = rows.min(self.k_max);
        let mut out = CoefficientMatrix::zeros(rows, self.p);
        for j in 0..self.p {
            out.column_mut(j).copy_from_slice(&self.column(j)[..rows]);
        }
        out
    }
}
