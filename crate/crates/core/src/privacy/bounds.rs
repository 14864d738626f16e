use std::f64::consts::{E, LN_2, PI};
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::domain::{EvaluationDomain, SharingParams};
use crate::error::{Error, Result};
use crate::poly::Interpolator;

/// Differential entropy of a Gaussian with variance `sigma2`, in bits.
pub fn gaussian_entropy_bits(sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParams(format!(
            "entropy needs a positive variance, got {sigma2}"
        )));
    }
    Ok(0.5 * (2.0 * PI * E * sigma2).log2())
}

/// `½ log2(1 + ratio)`: mutual information of a Gaussian signal observed in
/// independent Gaussian noise with the given signal-to-noise ratio.
pub fn snr_bits(ratio: f64) -> f64 {
    0.5 * ratio.ln_1p() / LN_2
}

/// Leakage of one share `s + sum_j c_j p^j` of the naive coefficient scheme.
pub fn naive_scheme_bound(sigma2_s: f64, sigma2_c: &[f64], p: f64) -> Result<f64> {
    if sigma2_s == 0.0 {
        return Ok(0.0);
    }
    let mut power = 1.0;
    let mut noise = 0.0;
    for &v in sigma2_c {
        power *= p * p;
        noise += power * v;
    }
    if noise <= 0.0 {
        return Err(Error::InfiniteLeak("naive share carries no noise".into()));
    }
    Ok(snr_bits(sigma2_s / noise))
}

/// Gaussian leakage model of one sharing with a fixed anchor set.
///
/// Given the anchors, the share at `p` is `S L0(p) + B(p)` with
/// `B(p) = sum_j L_j(p) y_j`, where `L` is the Lagrange basis on the nodes
/// `{0, x_1, .., x_t}`. The secret and the anchor values are independent
/// Gaussians, so every quantity below is a determinant ratio.
#[derive(Debug, Clone)]
pub struct LeakageModel {
    domain: Arc<EvaluationDomain>,
    sigma2_y: f64,
    sigma2_s: f64,
    mu_s: f64,
    witness_xs: Vec<f64>,
    interp: Interpolator,
}

impl LeakageModel {
    pub fn new(
        domain: Arc<EvaluationDomain>,
        params: &SharingParams,
        sigma2_s: f64,
        witness_xs: Vec<f64>,
    ) -> Result<Self> {
        params.validate()?;
        if !(sigma2_s > 0.0) || !sigma2_s.is_finite() {
            return Err(Error::InvalidParams(format!(
                "secret variance must be positive, got {sigma2_s}"
            )));
        }
        if witness_xs.len() != domain.t() {
            return Err(Error::DimensionMismatch(format!(
                "{} anchor points for threshold {}",
                witness_xs.len(),
                domain.t()
            )));
        }
        if let Some(x) = witness_xs.iter().find(|&&x| domain.index_of(x).is_none()) {
            return Err(Error::InvalidDomain(format!(
                "anchor {x} is not a party point"
            )));
        }
        let mut nodes = vec![0.0];
        nodes.extend_from_slice(&witness_xs);
        let interp = Interpolator::new(nodes)?;
        Ok(Self {
            domain,
            sigma2_y: params.sigma2_y,
            sigma2_s,
            mu_s: 0.0,
            witness_xs,
            interp,
        })
    }

    /// Sets the secret's mean; only the inversion transcript depends on it.
    pub fn with_secret_mean(mut self, mu_s: f64) -> Self {
        self.mu_s = mu_s;
        self
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        &self.domain
    }

    pub fn witness_xs(&self) -> &[f64] {
        &self.witness_xs
    }

    pub fn sigma2_s(&self) -> f64 {
        self.sigma2_s
    }

    pub fn sigma2_y(&self) -> f64 {
        self.sigma2_y
    }

    /// `L0(p)`, the weight of the secret in the share at `p`.
    pub fn secret_weight(&self, p: f64) -> f64 {
        self.interp.basis_at(p)[0]
    }

    /// Weights of the anchor values in the share at `p`.
    pub fn noise_weights(&self, p: f64) -> Vec<f64> {
        self.interp.basis_at(p)[1..].to_vec()
    }

    /// Variance of the noise part `B(p)` of the share at `p`.
    pub fn sigma2_b(&self, p: f64) -> f64 {
        if self.witness_xs.contains(&p) {
            return self.sigma2_y;
        }
        self.sigma2_y * self.noise_weights(p).iter().map(|w| w * w).sum::<f64>()
    }

    /// Leakage of a single share, in bits.
    pub fn per_share_bound(&self, p: f64) -> Result<f64> {
        if self.witness_xs.contains(&p) {
            return Ok(0.0);
        }
        let l0 = self.secret_weight(p);
        if l0 == 0.0 {
            return Ok(0.0);
        }
        let noise = self.sigma2_b(p);
        if noise <= 0.0 {
            return Err(Error::InfiniteLeak(format!(
                "share at {p} carries no noise"
            )));
        }
        Ok(snr_bits(l0 * l0 * self.sigma2_s / noise))
    }

    /// Secret weights `L0(p)` for the listed party indices.
    pub fn signal_vector(&self, parties: &[usize]) -> DVector<f64> {
        DVector::from_iterator(
            parties.len(),
            parties.iter().map(|&i| {
                let p = self.domain.point(i);
                if self.witness_xs.contains(&p) {
                    0.0
                } else {
                    self.secret_weight(p)
                }
            }),
        )
    }

    /// Covariance of the noise parts at the listed parties.
    pub fn noise_covariance(&self, parties: &[usize]) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = parties
            .iter()
            .map(|&i| {
                let p = self.domain.point(i);
                match self.witness_xs.iter().position(|&x| x == p) {
                    // the anchored share is exactly y_j
                    Some(j) => (0..self.witness_xs.len())
                        .map(|k| if k == j { 1.0 } else { 0.0 })
                        .collect(),
                    None => self.noise_weights(p),
                }
            })
            .collect();
        let w = DMatrix::from_fn(parties.len(), self.witness_xs.len(), |r, c| rows[r][c]);
        &w * w.transpose() * self.sigma2_y
    }

    /// Signal covariance `σ²_S ℓ ℓ^T` at the listed parties.
    pub fn signal_covariance(&self, parties: &[usize]) -> DMatrix<f64> {
        let l = self.signal_vector(parties);
        &l * l.transpose() * self.sigma2_s
    }

    /// Leakage of the joint view of the listed shares, in bits.
    pub fn t_share_bound(&self, parties: &[usize]) -> Result<f64> {
        self.check_parties(parties)?;
        let signal = self.signal_vector(parties);
        if signal.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let noise = self.noise_covariance(parties);
        let total = &noise + &signal * signal.transpose() * self.sigma2_s;
        det_ratio_bits(&total, &noise)
    }

    /// Leakage of the listed shares together with the opened `d = S - R1`
    /// of a multiplication with mask variance `mask_sigma2`.
    pub fn mult_transcript_bound(&self, parties: &[usize], mask_sigma2: f64) -> Result<f64> {
        self.check_parties(parties)?;
        if !(mask_sigma2 > 0.0) {
            return Err(Error::InfiniteLeak("unmasked secret is opened".into()));
        }
        let k = parties.len();
        let signal = self.signal_vector(parties).insert_row(k, 1.0);
        let mut noise = self
            .noise_covariance(parties)
            .insert_row(k, 0.0)
            .insert_column(k, 0.0);
        noise[(k, k)] = mask_sigma2;
        let total = &noise + &signal * signal.transpose() * self.sigma2_s;
        det_ratio_bits(&total, &noise)
    }

    /// Leakage of the listed shares together with the opened `sr` of an
    /// inversion with a zero-mean mask of variance `mask_sigma2`.
    pub fn inv_transcript_bound(&self, parties: &[usize], mask_sigma2: f64) -> Result<f64> {
        self.inv_transcript_bound_with_mean(parties, 0.0, mask_sigma2)
    }

    /// As [`Self::inv_transcript_bound`] with a mask of mean `mask_mean`.
    ///
    /// The product `SR` is not Gaussian; it is replaced by the Gaussian with
    /// the same second moments. Given `S`, `SR` has variance `S² σ²_R`, whose
    /// average `E[S²] σ²_R` is the conditional term.
    pub fn inv_transcript_bound_with_mean(
        &self,
        parties: &[usize],
        mask_mean: f64,
        mask_sigma2: f64,
    ) -> Result<f64> {
        self.check_parties(parties)?;
        if !(mask_sigma2 > 0.0) {
            return Err(Error::InfiniteLeak(
                "mask without variance reveals the secret".into(),
            ));
        }
        let k = parties.len();
        let (ms, vs, mr, vr) = (self.mu_s, self.sigma2_s, mask_mean, mask_sigma2);
        let signal = self.signal_vector(parties);
        let base = self.noise_covariance(parties);
        let mut total = (&base + &signal * signal.transpose() * vs)
            .insert_row(k, 0.0)
            .insert_column(k, 0.0);
        for i in 0..k {
            let c = signal[i] * mr * vs;
            total[(i, k)] = c;
            total[(k, i)] = c;
        }
        total[(k, k)] = vs * vr + ms * ms * vr + mr * mr * vs;
        let mut noise = base.insert_row(k, 0.0).insert_column(k, 0.0);
        noise[(k, k)] = (vs + ms * ms) * vr;
        det_ratio_bits(&total, &noise)
    }

    /// `½ log2(λmax(A)/λmin(B) + λmax(B)/λmin(B))` with `A` the signal and
    /// `B` the noise covariance. It dominates the determinant ratio because
    /// `A` has rank one.
    pub fn eigen_bound(&self, parties: &[usize]) -> Result<f64> {
        self.check_parties(parties)?;
        let signal = self.signal_vector(parties);
        let lambda_a = self.sigma2_s * signal.norm_squared();
        let eig = self.noise_covariance(parties).symmetric_eigenvalues();
        let (min_b, max_b) = (eig.min(), eig.max());
        if !(min_b > 0.0) {
            return Err(Error::InfiniteLeak("noise covariance is singular".into()));
        }
        Ok(0.5 * (lambda_a / min_b + max_b / min_b).log2())
    }

    /// All bounds for one view.
    pub fn report(&self, parties: &[usize], mask_sigma2: f64) -> Result<LeakageReport> {
        let per_share_bound_bits = parties
            .iter()
            .map(|&i| {
                let p = self.domain.point(i);
                self.per_share_bound(p).map(|b| (p, b))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LeakageReport {
            per_share_bound_bits,
            t_share_bound_bits: self.t_share_bound(parties)?,
            mult_transcript_bound_bits: self.mult_transcript_bound(parties, mask_sigma2)?,
            inv_transcript_bound_bits: self.inv_transcript_bound(parties, mask_sigma2)?,
            eigen_bound_bits: self.eigen_bound(parties)?,
            empirical: None,
        })
    }

    fn check_parties(&self, parties: &[usize]) -> Result<()> {
        if parties.is_empty() {
            return Err(Error::DimensionMismatch("no shares observed".into()));
        }
        if parties.len() > self.domain.t() {
            return Err(Error::DimensionMismatch(format!(
                "{} shares exceed the threshold {}",
                parties.len(),
                self.domain.t()
            )));
        }
        for (k, &i) in parties.iter().enumerate() {
            if i >= self.domain.n() {
                return Err(Error::DimensionMismatch(format!(
                    "party {i} is not in the domain"
                )));
            }
            if parties[..k].contains(&i) {
                return Err(Error::DegenerateNodes);
            }
        }
        Ok(())
    }
}

/// Closed-form bounds for one view, in bits, with optional estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport {
    pub per_share_bound_bits: Vec<(f64, f64)>,
    pub t_share_bound_bits: f64,
    pub mult_transcript_bound_bits: f64,
    pub inv_transcript_bound_bits: f64,
    pub eigen_bound_bits: f64,
    pub empirical: Option<EmpiricalLeakage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLeakage {
    pub t_share_bits: f64,
    pub mult_transcript_bits: f64,
    pub inv_transcript_bits: f64,
    pub samples: usize,
}

/// Natural log-determinant of a positive definite matrix.
pub(crate) fn log_det_pd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    Some(
        2.0 * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>(),
    )
}

/// `½ log2(det total / det noise)`.
pub(crate) fn det_ratio_bits(total: &DMatrix<f64>, noise: &DMatrix<f64>) -> Result<f64> {
    let ln_noise = log_det_pd(noise)
        .ok_or_else(|| Error::InfiniteLeak("noise covariance is singular".into()))?;
    let ln_total = log_det_pd(total)
        .ok_or_else(|| Error::InfiniteLeak("joint covariance is not positive definite".into()))?;
    Ok((0.5 * (ln_total - ln_noise) / LN_2).max(0.0))
}
