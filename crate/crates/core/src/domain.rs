use crate::error::{Error, Result};

/// The public evaluation points, one per party, and the sharing threshold.
///
/// Point `0.0` is reserved for the secret and is never a party's point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationDomain {
    points: Vec<f64>,
    threshold: usize,
}

impl EvaluationDomain {
    pub fn new(points: Vec<f64>, threshold: usize) -> Result<Self> {
        let n = points.len();
        if threshold < 1 {
            return Err(Error::InvalidDomain("threshold must be at least 1".into()));
        }
        if threshold >= n {
            return Err(Error::InvalidDomain(format!(
                "threshold {threshold} must be smaller than the party count {n}"
            )));
        }
        for (i, &p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidDomain(format!("point {i} is not finite")));
            }
            if p == 0.0 {
                return Err(Error::InvalidDomain(
                    "0 is reserved for the secret and cannot be a party point".into(),
                ));
            }
            if points[..i].contains(&p) {
                return Err(Error::InvalidDomain(format!("point {p} appears twice")));
            }
        }
        Ok(Self { points, threshold })
    }

    /// The default grid `0.5 + 0.15 k` for `k = 0..n`.
    pub fn grid(n: usize, threshold: usize) -> Result<Self> {
        Self::new(grid_points(n), threshold)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn t(&self) -> usize {
        self.threshold
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> f64 {
        self.points[index]
    }

    pub fn index_of(&self, point: f64) -> Option<usize> {
        self.points.iter().position(|&p| p == point)
    }

    /// Party indices ordered by ascending evaluation point.
    pub fn indices_by_point(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&a, &b| self.points[a].total_cmp(&self.points[b]));
        idx
    }
}

pub fn grid_points(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.5 + 0.15 * k as f64).collect()
}

/// Privacy parameters of `share`: mean and variance of the anchor noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharingParams {
    pub mu_y: f64,
    pub sigma2_y: f64,
    pub rng_seed: u64,
}

impl SharingParams {
    pub fn new(mu_y: f64, sigma2_y: f64, rng_seed: u64) -> Result<Self> {
        let params = Self {
            mu_y,
            sigma2_y,
            rng_seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu_y.is_finite() {
            return Err(Error::InvalidParams("mu_y must be finite".into()));
        }
        if !(self.sigma2_y >= 0.0 && self.sigma2_y.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sigma2_y must be a finite nonnegative number, got {}",
                self.sigma2_y
            )));
        }
        Ok(())
    }
}
