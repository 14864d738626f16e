use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::domain::EvaluationDomain;
use crate::error::{Error, Result};
use crate::sharing::{recon, share_with_rng, ShareSet};

/// A matrix of secrets held as one local matrix per party.
///
/// `part(p)` is party `p`'s matrix of shares; entry `(i, j)` across all parts
/// is a [`ShareSet`] of the secret entry `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedMatrix {
    domain: Arc<EvaluationDomain>,
    rows: usize,
    cols: usize,
    parts: Vec<DMatrix<f64>>,
}

impl SharedMatrix {
    pub fn from_parts(domain: Arc<EvaluationDomain>, parts: Vec<DMatrix<f64>>) -> Result<Self> {
        if parts.len() != domain.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} parts for {} parties",
                parts.len(),
                domain.n()
            )));
        }
        let (rows, cols) = parts[0].shape();
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        if parts.iter().any(|p| p.shape() != (rows, cols)) {
            return Err(Error::DimensionMismatch(
                "parts have different shapes".into(),
            ));
        }
        Ok(Self {
            domain,
            rows,
            cols,
            parts,
        })
    }

    /// Shares every entry independently, in column-major order.
    pub fn share<R: Rng + ?Sized>(
        secret: &DMatrix<f64>,
        domain: &Arc<EvaluationDomain>,
        mu_y: f64,
        sigma2_y: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let (rows, cols) = secret.shape();
        let mut parts = vec![DMatrix::zeros(rows, cols); domain.n()];
        for (k, &s) in secret.iter().enumerate() {
            let (shares, _) = share_with_rng(s, domain, mu_y, sigma2_y, rng)?;
            for (p, v) in shares.iter() {
                parts[p][k] = v;
            }
        }
        Self::from_parts(domain.clone(), parts)
    }

    /// Noise-free sharing of a public matrix: every party holds it as is.
    pub fn public(value: &DMatrix<f64>, domain: &Arc<EvaluationDomain>) -> Self {
        Self {
            domain: domain.clone(),
            rows: value.nrows(),
            cols: value.ncols(),
            parts: vec![value.clone(); domain.n()],
        }
    }

    pub fn from_scalar(shares: &ShareSet) -> Result<Self> {
        if !shares.is_full() {
            return Err(Error::DimensionMismatch(
                "scalar share set is not full".into(),
            ));
        }
        let parts = shares
            .values()
            .into_iter()
            .map(|v| DMatrix::from_element(1, 1, v))
            .collect();
        Self::from_parts(shares.domain().clone(), parts)
    }

    /// The share set of a 1x1 matrix.
    pub fn to_scalar(&self) -> Result<ShareSet> {
        if self.shape() != (1, 1) {
            return Err(Error::DimensionMismatch(format!(
                "expected 1x1, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.entry(0, 0))
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        &self.domain
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn part(&self, party: usize) -> &DMatrix<f64> {
        &self.parts[party]
    }

    pub fn parts(&self) -> &[DMatrix<f64>] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<DMatrix<f64>> {
        self.parts
    }

    pub fn entry(&self, row: usize, col: usize) -> ShareSet {
        let values = self.parts.iter().map(|m| m[(row, col)]).collect();
        ShareSet::from_values(self.domain.clone(), values).expect("one part per party")
    }

    /// Reconstructs every entry with the default `recon`.
    pub fn recon(&self) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out[(r, c)] = recon(&self.entry(r, c))?;
            }
        }
        Ok(out)
    }

    pub(crate) fn check_compatible(&self, other: &SharedMatrix) -> Result<()> {
        if !(Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain) {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    fn zip_parts(
        &self,
        other: &SharedMatrix,
        f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    ) -> Result<Self> {
        self.check_compatible(other)?;
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let parts = self
            .parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| f(a, b))
            .collect();
        Self::from_parts(self.domain.clone(), parts)
    }
}

pub fn mat_add(x: &SharedMatrix, y: &SharedMatrix) -> Result<SharedMatrix> {
    x.zip_parts(y, |a, b| a + b)
}

pub fn mat_sub(x: &SharedMatrix, y: &SharedMatrix) -> Result<SharedMatrix> {
    x.zip_parts(y, |a, b| a - b)
}

pub fn mat_scale(c: f64, x: &SharedMatrix) -> SharedMatrix {
    SharedMatrix {
        domain: x.domain.clone(),
        rows: x.rows,
        cols: x.cols,
        parts: x.parts.iter().map(|m| m * c).collect(),
    }
}

/// Adds a public matrix through its noise-free sharing.
pub fn mat_shift(c: &DMatrix<f64>, x: &SharedMatrix) -> Result<SharedMatrix> {
    mat_add(x, &SharedMatrix::public(c, x.domain()))
}
