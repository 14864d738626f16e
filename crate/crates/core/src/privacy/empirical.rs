use std::f64::consts::LN_2;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::bounds::log_det_pd;
use super::Quantity;
use crate::domain::EvaluationDomain;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::poly::Interpolator;
use crate::sharing::{draw_witness, gaussian_draws};

/// Samples per independently seeded batch.
pub const BATCH: usize = 4096;
/// Smallest sample count accepted by [`empirical_mi`].
pub const MIN_SAMPLES: usize = 10_000;

/// Running mean and centred co-moments of a vector stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAccumulator {
    dim: usize,
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    delta: Vec<f64>,
}

impl CovarianceAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim * dim],
            delta: vec![0.0; dim],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim);
        self.count += 1;
        let n = self.count as f64;
        for i in 0..self.dim {
            self.delta[i] = v[i] - self.mean[i];
            self.mean[i] += self.delta[i] / n;
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.m2[i * self.dim + j] += self.delta[i] * (v[j] - self.mean[j]);
            }
        }
    }

    /// Combines two accumulators as if their streams were concatenated.
    pub fn merge(&mut self, other: &CovarianceAccumulator) {
        debug_assert_eq!(self.dim, other.dim);
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = (0..self.dim)
            .map(|i| other.mean[i] - self.mean[i])
            .collect();
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.m2[i * self.dim + j] +=
                    other.m2[i * self.dim + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..self.dim {
            self.mean[i] += delta[i] * nb / n;
        }
        self.count += other.count;
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let denom = (self.count.max(2) - 1) as f64;
        DMatrix::from_row_slice(self.dim, self.dim, &self.m2) / denom
    }
}

/// Gaussian mutual information between the first `split` coordinates and
/// the rest, from a covariance: `½ log2(det C_X det C_Y / det C_XY)`.
/// Returns the value and whether the covariance is numerically singular.
pub fn gaussian_mi_bits(cov: &DMatrix<f64>, split: usize) -> (f64, bool) {
    let k = cov.nrows();
    assert!(
        split > 0 && split < k,
        "split must leave both blocks non-empty"
    );
    let eig = cov.clone().symmetric_eigenvalues();
    let near_singular = !(eig.min() > 1e-12 * eig.max().abs());
    let x = cov.view((0, 0), (split, split)).into_owned();
    let y = cov
        .view((split, split), (k - split, k - split))
        .into_owned();
    match (log_det_pd(&x), log_det_pd(&y), log_det_pd(cov)) {
        (Some(lx), Some(ly), Some(lxy)) => ((0.5 * (lx + ly - lxy) / LN_2).max(0.0), near_singular),
        _ => (f64::INFINITY, true),
    }
}

/// How anchor points are chosen for each simulated sharing.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessMode {
    /// A fresh uniform draw per sample, as a real sharing does.
    Fresh,
    /// The same anchor points every time; only the anchor values are drawn.
    Fixed(Vec<f64>),
}

/// What to simulate for [`empirical_mi`].
#[derive(Debug, Clone)]
pub struct SampleSpec {
    pub domain: Arc<EvaluationDomain>,
    pub mu_y: f64,
    pub sigma2_y: f64,
    pub sigma2_s: f64,
    pub mask_sigma2: f64,
    pub quantity: Quantity,
    pub observed: Vec<usize>,
    pub witness: WitnessMode,
    pub samples: usize,
    pub seed: u64,
}

impl SampleSpec {
    /// Unit-variance secret, mask variance equal to the share variance,
    /// fresh anchors, 10^5 samples, and the quantity's default view
    /// (the first party, or the first `t` parties).
    pub fn new(domain: Arc<EvaluationDomain>, sigma2_y: f64, quantity: Quantity) -> Self {
        let observed = match quantity {
            Quantity::SingleShare => vec![0],
            _ => (0..domain.t()).collect(),
        };
        Self {
            domain,
            mu_y: 0.0,
            sigma2_y,
            sigma2_s: 1.0,
            mask_sigma2: sigma2_y,
            quantity,
            observed,
            witness: WitnessMode::Fresh,
            samples: 100_000,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidParams(format!(
                "{} samples is below the minimum of {MIN_SAMPLES}",
                self.samples
            )));
        }
        if !(self.sigma2_s > 0.0) || self.sigma2_y < 0.0 || self.mask_sigma2 < 0.0 {
            return Err(Error::InvalidParams(
                "variances must be nonnegative, the secret's positive".into(),
            ));
        }
        if self.observed.is_empty() || self.observed.iter().any(|&i| i >= self.domain.n()) {
            return Err(Error::DimensionMismatch(
                "observed parties must be nonempty and in the domain".into(),
            ));
        }
        if self.quantity == Quantity::SingleShare && self.observed.len() != 1 {
            return Err(Error::DimensionMismatch(
                "a single-share view has one party".into(),
            ));
        }
        if let WitnessMode::Fixed(xs) = &self.witness {
            if xs.len() != self.domain.t() || xs.iter().any(|&x| self.domain.index_of(x).is_none())
            {
                return Err(Error::InvalidDomain(
                    "fixed anchors must be t party points".into(),
                ));
            }
        }
        Ok(())
    }

    fn extra_dims(&self) -> usize {
        match self.quantity {
            Quantity::SingleShare | Quantity::TShares => 0,
            Quantity::TSharesPlusMask | Quantity::TSharesPlusProduct => 1,
        }
    }
}

/// A plug-in estimate in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub bits: f64,
    pub samples: usize,
    /// Dimension of the observation the secret is paired with.
    pub observed_dims: usize,
    /// Set when the sample covariance is numerically singular.
    pub near_singular: bool,
}

impl MiEstimate {
    /// Leading-order upward bias of the plug-in estimator under independence.
    pub fn bias_bits(&self) -> f64 {
        self.observed_dims as f64 / (2.0 * self.samples as f64 * LN_2)
    }

    pub fn corrected_bits(&self) -> f64 {
        self.bits - self.bias_bits()
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, variance: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + variance.sqrt() * z
}

fn run_batch(
    spec: &SampleSpec,
    fixed: Option<&Interpolator>,
    batch: usize,
    len: usize,
) -> Result<CovarianceAccumulator> {
    let domain = &spec.domain;
    let t = domain.t();
    let obs_points: Vec<f64> = spec.observed.iter().map(|&i| domain.point(i)).collect();
    let dim = 1 + obs_points.len() + spec.extra_dims();
    let mut acc = CovarianceAccumulator::new(dim);
    let mut rng = crate::rng::batch_stream(spec.seed, batch as u64);
    let mut v = vec![0.0; dim];
    let mut values = vec![0.0; t + 1];
    let mut nodes = vec![0.0; t + 1];
    for _ in 0..len {
        let s = normal(&mut rng, 0.0, spec.sigma2_s);
        values[0] = s;
        v[0] = s;
        let fresh;
        let interp = match fixed {
            Some(i) => {
                let ys = gaussian_draws(spec.mu_y, spec.sigma2_y, t, &mut rng)?;
                values[1..].copy_from_slice(&ys);
                i
            }
            None => {
                let w = draw_witness(domain, spec.mu_y, spec.sigma2_y, &mut rng)?;
                nodes[1..].copy_from_slice(&w.xs);
                values[1..].copy_from_slice(&w.ys);
                fresh = Interpolator::new(nodes.clone())?;
                &fresh
            }
        };
        for (slot, &p) in v[1..].iter_mut().zip(&obs_points) {
            *slot = interp.eval(p, &values);
        }
        match spec.quantity {
            Quantity::SingleShare | Quantity::TShares => {}
            Quantity::TSharesPlusMask => v[dim - 1] = s - normal(&mut rng, 0.0, spec.mask_sigma2),
            Quantity::TSharesPlusProduct => {
                v[dim - 1] = s * normal(&mut rng, 0.0, spec.mask_sigma2)
            }
        }
        acc.push(&v);
    }
    Ok(acc)
}

/// Monte Carlo estimate of the leakage of `spec.quantity`: simulates
/// sharings of Gaussian secrets and applies the Gaussian plug-in estimator
/// to the sample covariance of (secret, view).
///
/// Samples are drawn in batches of [`BATCH`], each from its own seeded
/// stream, and merged in batch order, so the result is the same in every
/// execution mode.
pub fn empirical_mi(spec: &SampleSpec, exec: Execution) -> Result<MiEstimate> {
    spec.validate()?;
    let fixed = match &spec.witness {
        WitnessMode::Fresh => None,
        WitnessMode::Fixed(xs) => {
            let mut nodes = vec![0.0];
            nodes.extend_from_slice(xs);
            Some(Interpolator::new(nodes)?)
        }
    };
    let batches = spec.samples.div_ceil(BATCH);
    let parts = exec.map_indexed(batches, |b| {
        let len = BATCH.min(spec.samples - b * BATCH);
        run_batch(spec, fixed.as_ref(), b, len)
    });
    let dim = 1 + spec.observed.len() + spec.extra_dims();
    let mut acc = CovarianceAccumulator::new(dim);
    for p in parts {
        acc.merge(&p?);
    }
    let (bits, near_singular) = gaussian_mi_bits(&acc.covariance(), 1);
    Ok(MiEstimate {
        bits,
        samples: spec.samples,
        observed_dims: dim - 1,
        near_singular,
    })
}
