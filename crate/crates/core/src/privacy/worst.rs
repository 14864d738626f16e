use std::sync::Arc;

use itertools::Itertools;
use rand::seq::index::sample;

use super::bounds::LeakageModel;
use super::Quantity;
use crate::domain::{EvaluationDomain, SharingParams};
use crate::error::{Error, Result};
use crate::par::Execution;

/// The largest bound found and where it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub bits: f64,
    pub witness_xs: Vec<f64>,
    pub parties: Vec<usize>,
    /// Number of anchor sets examined.
    pub witnesses_examined: usize,
    /// Whether every anchor set was examined rather than a sample.
    pub exhaustive: bool,
}

/// Parameters of a worst-case search.
#[derive(Debug, Clone)]
pub struct WorstCaseSearch {
    pub domain: Arc<EvaluationDomain>,
    pub sigma2_y: f64,
    pub sigma2_s: f64,
    pub mask_sigma2: f64,
    pub quantity: Quantity,
    /// Observed parties. `None` searches over every view of the quantity's size.
    pub observed: Option<Vec<usize>>,
    /// Above this many anchor sets, a seeded sample of this size is used.
    pub max_witnesses: usize,
    pub seed: u64,
}

impl WorstCaseSearch {
    pub fn new(
        domain: Arc<EvaluationDomain>,
        sigma2_y: f64,
        sigma2_s: f64,
        quantity: Quantity,
    ) -> Self {
        Self {
            domain,
            sigma2_y,
            sigma2_s,
            mask_sigma2: sigma2_y,
            quantity,
            observed: None,
            max_witnesses: 5000,
            seed: 0,
        }
    }

    fn anchor_sets(&self) -> (Vec<Vec<usize>>, bool) {
        let (n, t) = (self.domain.n(), self.domain.t());
        let total = binomial(n, t);
        if total <= self.max_witnesses as u128 {
            return ((0..n).combinations(t).collect(), true);
        }
        let mut rng = crate::rng::stream(self.seed, crate::rng::HARNESS, "worst-case");
        let sets = (0..self.max_witnesses)
            .map(|_| {
                let mut s = sample(&mut rng, n, t).into_vec();
                s.sort_unstable();
                s
            })
            .collect();
        (sets, false)
    }

    fn views(&self) -> Vec<Vec<usize>> {
        match &self.observed {
            Some(v) => vec![v.clone()],
            None => {
                let size = match self.quantity {
                    Quantity::SingleShare => 1,
                    _ => self.domain.t(),
                };
                (0..self.domain.n()).combinations(size).collect()
            }
        }
    }

    /// Bound for one anchor set and one view.
    pub fn bound(&self, model: &LeakageModel, parties: &[usize]) -> Result<f64> {
        match self.quantity {
            Quantity::SingleShare => {
                if parties.len() != 1 {
                    return Err(Error::DimensionMismatch(
                        "a single-share view has one party".into(),
                    ));
                }
                model.per_share_bound(self.domain.point(parties[0]))
            }
            Quantity::TShares => model.t_share_bound(parties),
            Quantity::TSharesPlusMask => model.mult_transcript_bound(parties, self.mask_sigma2),
            Quantity::TSharesPlusProduct => model.inv_transcript_bound(parties, self.mask_sigma2),
        }
    }

    /// Maximum bound over anchor sets and views. Ties keep the first in
    /// enumeration order, so the result does not depend on `exec`.
    pub fn run(&self, exec: Execution) -> Result<WorstCase> {
        let params = SharingParams::new(0.0, self.sigma2_y, self.seed)?;
        let (anchors, exhaustive) = self.anchor_sets();
        let views = self.views();
        let per_anchor = exec.map_slice(&anchors, |set| -> Result<(f64, usize)> {
            let xs: Vec<f64> = set.iter().map(|&i| self.domain.point(i)).collect();
            let model = LeakageModel::new(self.domain.clone(), &params, self.sigma2_s, xs)?;
            let mut best = (f64::NEG_INFINITY, 0);
            for (k, view) in views.iter().enumerate() {
                let b = self.bound(&model, view)?;
                if b > best.0 {
                    best = (b, k);
                }
            }
            Ok(best)
        });
        let mut worst: Option<(f64, usize, usize)> = None;
        for (a, res) in per_anchor.into_iter().enumerate() {
            let (bits, view) = res?;
            if worst.is_none_or(|w| bits > w.0) {
                worst = Some((bits, a, view));
            }
        }
        let (bits, a, view) =
            worst.ok_or_else(|| Error::InvalidParams("nothing to search".into()))?;
        Ok(WorstCase {
            bits,
            witness_xs: anchors[a].iter().map(|&i| self.domain.point(i)).collect(),
            parties: views[view].clone(),
            witnesses_examined: anchors.len(),
            exhaustive,
        })
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}
