use std::sync::Arc;

use nalgebra::DMatrix;
use rand_chacha::ChaCha20Rng;

use super::matrix::SharedMatrix;
use crate::domain::{EvaluationDomain, SharingParams};
use crate::error::{Error, Result};
use crate::sharing::{gaussian_draws, share_with_rng, ShareSet};

/// Shares of `(r1, r2, r1 r2)` for one scalar multiplication.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaverTriple {
    pub id: u64,
    pub r1: ShareSet,
    pub r2: ShareSet,
    pub r1r2: ShareSet,
}

/// Shares of `(R1, R2, R1 R2)` for one matrix multiplication.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTriple {
    pub id: u64,
    pub r1: SharedMatrix,
    pub r2: SharedMatrix,
    pub r1r2: SharedMatrix,
}

/// One party's slice of a triple. Scalars are 1x1.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleShare {
    pub id: u64,
    pub r1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
    pub r1r2: DMatrix<f64>,
}

impl BeaverTriple {
    pub fn for_party(&self, party: usize) -> Result<TripleShare> {
        let get = |s: &ShareSet| {
            s.get(party)
                .map(|v| DMatrix::from_element(1, 1, v))
                .ok_or_else(|| {
                    Error::DimensionMismatch(format!("party {party} holds no triple share"))
                })
        };
        Ok(TripleShare {
            id: self.id,
            r1: get(&self.r1)?,
            r2: get(&self.r2)?,
            r1r2: get(&self.r1r2)?,
        })
    }
}

impl MatrixTriple {
    pub fn for_party(&self, party: usize) -> TripleShare {
        TripleShare {
            id: self.id,
            r1: self.r1.part(party).clone(),
            r2: self.r2.part(party).clone(),
            r1r2: self.r1r2.part(party).clone(),
        }
    }
}

/// Trusted offline dealer. Masks are Gaussian with variance `mask_sigma2`;
/// their sharing noise follows the session's sharing parameters.
pub struct Dealer {
    domain: Arc<EvaluationDomain>,
    mu_y: f64,
    sigma2_y: f64,
    mask_sigma2: f64,
    rng: ChaCha20Rng,
    next_id: u64,
}

impl Dealer {
    /// Dealer with mask variance equal to the sharing variance.
    pub fn new(domain: Arc<EvaluationDomain>, params: &SharingParams) -> Result<Self> {
        Self::with_mask_variance(domain, params, params.sigma2_y)
    }

    pub fn with_mask_variance(
        domain: Arc<EvaluationDomain>,
        params: &SharingParams,
        mask_sigma2: f64,
    ) -> Result<Self> {
        params.validate()?;
        if !(mask_sigma2 >= 0.0) || !mask_sigma2.is_finite() {
            return Err(Error::InvalidParams(format!("mask variance {mask_sigma2}")));
        }
        Ok(Self {
            domain,
            mu_y: params.mu_y,
            sigma2_y: params.sigma2_y,
            mask_sigma2,
            rng: crate::rng::stream(params.rng_seed, crate::rng::HARNESS, "dealer"),
            next_id: 0,
        })
    }

    pub fn mask_sigma2(&self) -> f64 {
        self.mask_sigma2
    }

    fn id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn draw(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let v = gaussian_draws(0.0, self.mask_sigma2, rows * cols, &mut self.rng)?;
        Ok(DMatrix::from_vec(rows, cols, v))
    }

    fn share_matrix(&mut self, m: &DMatrix<f64>) -> Result<SharedMatrix> {
        SharedMatrix::share(m, &self.domain, self.mu_y, self.sigma2_y, &mut self.rng)
    }

    fn share_scalar(&mut self, v: f64) -> Result<ShareSet> {
        Ok(share_with_rng(v, &self.domain, self.mu_y, self.sigma2_y, &mut self.rng)?.0)
    }

    pub fn triple(&mut self) -> Result<BeaverTriple> {
        let id = self.id();
        let r = gaussian_draws(0.0, self.mask_sigma2, 2, &mut self.rng)?;
        Ok(BeaverTriple {
            id,
            r1: self.share_scalar(r[0])?,
            r2: self.share_scalar(r[1])?,
            r1r2: self.share_scalar(r[0] * r[1])?,
        })
    }

    /// Triple for multiplying an `m x k` by a `k x l` matrix.
    pub fn matrix_triple(&mut self, m: usize, k: usize, l: usize) -> Result<MatrixTriple> {
        if m == 0 || k == 0 || l == 0 {
            return Err(Error::DimensionMismatch(
                "triple dimensions must be positive".into(),
            ));
        }
        let id = self.id();
        let r1 = self.draw(m, k)?;
        let r2 = self.draw(k, l)?;
        let prod = &r1 * &r2;
        Ok(MatrixTriple {
            id,
            r1: self.share_matrix(&r1)?,
            r2: self.share_matrix(&r2)?,
            r1r2: self.share_matrix(&prod)?,
        })
    }

    /// A shared random matrix, used as the inversion mask.
    pub fn mask(&mut self, rows: usize, cols: usize) -> Result<SharedMatrix> {
        let r = self.draw(rows, cols)?;
        self.share_matrix(&r)
    }
}
