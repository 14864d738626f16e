//! Lagrange interpolation over real nodes.
//!
//! The default evaluator is the first (modified Lagrange) barycentric form,
//! `f(x) = l(x) * sum_j w_j v_j / (x - x_j)`, which stays backward stable
//! when extrapolating to the secret node at 0. The textbook product form is
//! kept for cross-checks.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterpolationForm {
    #[default]
    Barycentric,
    Product,
}

/// `L_j(x) = prod_{k != j} (x - x_k) / (x_j - x_k)`.
pub fn lagrange_basis(nodes: &[f64], eval_at: f64, j: usize) -> Result<f64> {
    check_distinct(nodes)?;
    if j >= nodes.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis index {j} out of range for {} nodes",
            nodes.len()
        )));
    }
    Ok(basis_unchecked(nodes, eval_at, j))
}

fn basis_unchecked(nodes: &[f64], x: f64, j: usize) -> f64 {
    let xj = nodes[j];
    nodes
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, &xk)| (x - xk) / (xj - xk))
        .product()
}

pub fn check_distinct(nodes: &[f64]) -> Result<()> {
    for (i, a) in nodes.iter().enumerate() {
        if !a.is_finite() || nodes[..i].contains(a) {
            return Err(Error::DegenerateNodes);
        }
    }
    Ok(())
}

/// Interpolant through a fixed node set with precomputed barycentric weights.
#[derive(Debug, Clone)]
pub struct Interpolator {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Interpolator {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InsufficientShares { needed: 1, got: 0 });
        }
        check_distinct(&nodes)?;
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(j, &xj)| {
                let prod: f64 = nodes
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, &xk)| xj - xk)
                    .product();
                1.0 / prod
            })
            .collect();
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Evaluates the interpolant of `values` (aligned with the nodes) at `x`.
    /// At a node the stored value is returned bit-exactly.
    pub fn eval(&self, x: f64, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        if let Some(j) = self.nodes.iter().position(|&n| n == x) {
            return values[j];
        }
        let mut ell = 1.0;
        let mut acc = 0.0;
        for ((&xj, &wj), &vj) in self.nodes.iter().zip(&self.weights).zip(values) {
            let diff = x - xj;
            ell *= diff;
            acc += wj * vj / diff;
        }
        ell * acc
    }

    pub fn eval_with(&self, form: InterpolationForm, x: f64, values: &[f64]) -> f64 {
        match form {
            InterpolationForm::Barycentric => self.eval(x, values),
            InterpolationForm::Product => (0..self.nodes.len())
                .map(|j| values[j] * basis_unchecked(&self.nodes, x, j))
                .sum(),
        }
    }

    /// All basis values `L_j(x)`.
    pub fn basis_at(&self, x: f64) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|j| basis_unchecked(&self.nodes, x, j))
            .collect()
    }
}
