//! The `share` / `recon` pair and the naive coefficient scheme it replaces.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{EvaluationDomain, SharingParams};
use crate::error::{Error, Result};
use crate::poly::{InterpolationForm, Interpolator};

/// Shares of one secret, keyed by party index.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareSet {
    domain: Arc<EvaluationDomain>,
    values: BTreeMap<usize, f64>,
}

impl ShareSet {
    /// Full share set from values aligned with the domain's party order.
    pub fn from_values(domain: Arc<EvaluationDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} share values for {} parties",
                values.len(),
                domain.n()
            )));
        }
        Ok(Self {
            values: values.into_iter().enumerate().collect(),
            domain,
        })
    }

    /// Share set over an explicit subset of parties.
    pub fn from_entries(
        domain: Arc<EvaluationDomain>,
        entries: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, v) in entries {
            if idx >= domain.n() {
                return Err(Error::DimensionMismatch(format!(
                    "party {idx} is not in the domain"
                )));
            }
            if values.insert(idx, v).is_some() {
                return Err(Error::DegenerateNodes);
            }
        }
        Ok(Self { domain, values })
    }

    pub fn domain(&self) -> &Arc<EvaluationDomain> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.values.len() == self.domain.n()
    }

    pub fn get(&self, party: usize) -> Option<f64> {
        self.values.get(&party).copied()
    }

    pub fn at_point(&self, point: f64) -> Option<f64> {
        self.domain.index_of(point).and_then(|i| self.get(i))
    }

    /// `(party index, share)` pairs in party order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&i, &v)| (i, v))
    }

    /// Share values in party order. Only meaningful for full sets.
    pub fn values(&self) -> Vec<f64> {
        self.values.values().copied().collect()
    }

    /// Keeps only the listed parties.
    pub fn subset(&self, parties: &[usize]) -> Result<Self> {
        let entries = parties
            .iter()
            .map(|&p| {
                self.get(p)
                    .map(|v| (p, v))
                    .ok_or_else(|| Error::DimensionMismatch(format!("party {p} holds no share")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(self.domain.clone(), entries)
    }

    pub(crate) fn check_same_domain(&self, other: &ShareSet) -> Result<()> {
        if Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> ShareSet {
        ShareSet {
            domain: self.domain.clone(),
            values: self.values.iter().map(|(&i, &v)| (i, f(i, v))).collect(),
        }
    }

    pub(crate) fn zip_with(
        &self,
        other: &ShareSet,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<ShareSet> {
        self.check_same_domain(other)?;
        if self.values.len() != other.values.len()
            || self
                .values
                .keys()
                .zip(other.values.keys())
                .any(|(a, b)| a != b)
        {
            return Err(Error::DimensionMismatch(
                "share sets cover different parties".into(),
            ));
        }
        Ok(ShareSet {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(other.values.values())
                .map(|((&i, &a), &b)| (i, f(a, b)))
                .collect(),
        })
    }
}

/// The `t` anchor points `(x_j, y_j)` chosen by `share`.
///
/// Exposed for tests and leakage analysis. A deployment does not publish it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorWitness {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Shares `secret` with the RNG seeded from `params.rng_seed`.
pub fn share(
    secret: f64,
    domain: &Arc<EvaluationDomain>,
    params: &SharingParams,
) -> Result<(ShareSet, AnchorWitness)> {
    params.validate()?;
    let mut rng = crate::rng::stream(params.rng_seed, crate::rng::HARNESS, "share");
    share_with_rng(secret, domain, params.mu_y, params.sigma2_y, &mut rng)
}

/// Draws `t` distinct anchor points uniformly from the domain and Gaussian
/// anchor values, then evaluates the interpolant through `(0, secret)` and the
/// anchors at every party point.
pub fn share_with_rng<R: Rng + ?Sized>(
    secret: f64,
    domain: &Arc<EvaluationDomain>,
    mu_y: f64,
    sigma2_y: f64,
    rng: &mut R,
) -> Result<(ShareSet, AnchorWitness)> {
    let witness = draw_witness(domain, mu_y, sigma2_y, rng)?;
    let shares = share_with_witness(secret, domain, &witness)?;
    Ok((shares, witness))
}

pub fn draw_witness<R: Rng + ?Sized>(
    domain: &EvaluationDomain,
    mu_y: f64,
    sigma2_y: f64,
    rng: &mut R,
) -> Result<AnchorWitness> {
    let t = domain.t();
    let picks = rand::seq::index::sample(rng, domain.n(), t);
    let xs: Vec<f64> = picks.iter().map(|i| domain.point(i)).collect();
    let ys = gaussian_draws(mu_y, sigma2_y, t, rng)?;
    Ok(AnchorWitness { xs, ys })
}

pub(crate) fn gaussian_draws<R: Rng + ?Sized>(
    mean: f64,
    variance: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if variance == 0.0 {
        return Ok(vec![mean; count]);
    }
    let normal = Normal::new(mean, variance.sqrt())
        .map_err(|e| Error::InvalidParams(format!("gaussian({mean}, {variance}): {e}")))?;
    Ok((0..count).map(|_| normal.sample(rng)).collect())
}

/// Shares `secret` through a caller-chosen anchor set.
pub fn share_with_witness(
    secret: f64,
    domain: &Arc<EvaluationDomain>,
    witness: &AnchorWitness,
) -> Result<ShareSet> {
    if witness.xs.len() != domain.t() || witness.ys.len() != domain.t() {
        return Err(Error::DimensionMismatch(format!(
            "witness must hold exactly t = {} points",
            domain.t()
        )));
    }
    if let Some(x) = witness.xs.iter().find(|&&x| domain.index_of(x).is_none()) {
        return Err(Error::InvalidDomain(format!(
            "witness point {x} is not a party point"
        )));
    }
    let mut nodes = Vec::with_capacity(domain.t() + 1);
    nodes.push(0.0);
    nodes.extend_from_slice(&witness.xs);
    let mut values = Vec::with_capacity(domain.t() + 1);
    values.push(secret);
    values.extend_from_slice(&witness.ys);
    let interp = Interpolator::new(nodes)?;
    let shares = domain
        .points()
        .iter()
        .map(|&p| interp.eval(p, &values))
        .collect();
    ShareSet::from_values(domain.clone(), shares)
}

/// Noise-free sharing of a public constant: the degree-0 polynomial.
pub fn public_share(value: f64, domain: &Arc<EvaluationDomain>) -> ShareSet {
    ShareSet {
        domain: domain.clone(),
        values: (0..domain.n()).map(|i| (i, value)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReconMode {
    /// Interpolate through the `t + 1` shares with the smallest points.
    #[default]
    SmallestPoints,
    /// Interpolate through every provided share.
    All,
}

pub fn recon(partial: &ShareSet) -> Result<f64> {
    recon_with(partial, ReconMode::default(), InterpolationForm::default())
}

pub fn recon_with(partial: &ShareSet, mode: ReconMode, form: InterpolationForm) -> Result<f64> {
    let domain = partial.domain();
    let mut pairs: Vec<(f64, f64)> = partial.iter().map(|(i, v)| (domain.point(i), v)).collect();
    let needed = domain.t() + 1;
    if pairs.len() < needed {
        return Err(Error::InsufficientShares {
            needed,
            got: pairs.len(),
        });
    }
    if mode == ReconMode::SmallestPoints {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.truncate(needed);
    }
    recon_points(&pairs, form)
}

/// Evaluates the interpolant through `(point, share)` pairs at 0.
pub fn recon_points(pairs: &[(f64, f64)], form: InterpolationForm) -> Result<f64> {
    let (nodes, values): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let interp = Interpolator::new(nodes)?;
    Ok(interp.eval_with(form, 0.0, &values))
}

/// Shares from the naive scheme `s + sum_j c_j p^j`, kept for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveShareSet {
    pub shares: ShareSet,
    pub coefficients: Vec<f64>,
}

pub fn naive_share(
    secret: f64,
    domain: &Arc<EvaluationDomain>,
    params: &SharingParams,
) -> Result<NaiveShareSet> {
    params.validate()?;
    let mut rng = crate::rng::stream(params.rng_seed, crate::rng::HARNESS, "naive-share");
    let coefficients = gaussian_draws(0.0, params.sigma2_y, domain.t(), &mut rng)?;
    naive_share_with_coefficients(secret, domain, coefficients)
}

pub fn naive_share_with_coefficients(
    secret: f64,
    domain: &Arc<EvaluationDomain>,
    coefficients: Vec<f64>,
) -> Result<NaiveShareSet> {
    let values = domain
        .points()
        .iter()
        .map(|&p| {
            // Horner on c_t p^t + ... + c_1 p, then add the secret
            let noise = coefficients.iter().rev().fold(0.0, |acc, &c| (acc + c) * p);
            secret + noise
        })
        .collect();
    Ok(NaiveShareSet {
        shares: ShareSet::from_values(domain.clone(), values)?,
        coefficients,
    })
}
