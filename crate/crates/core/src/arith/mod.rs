//! Arithmetic on shares.
//!
//! Linear operations act on each share independently. Multiplication uses
//! Beaver triples from an offline [`Dealer`]; inversion masks the secret with
//! a shared random value and opens the product. The [`Simulator`] runs these
//! protocols with a full view of all parties; [`local`] holds the same steps
//! as run by a single networked [`crate::runtime::Party`].

mod dealer;
pub mod local;
mod matrix;
mod sim;

use nalgebra::DMatrix;

pub use dealer::{BeaverTriple, Dealer, MatrixTriple, TripleShare};
pub use matrix::{mat_add, mat_scale, mat_shift, mat_sub, SharedMatrix};
pub use sim::Simulator;

use crate::error::Result;
use crate::sharing::{public_share, ShareSet};

/// Opened masked products with magnitude below this are rejected.
pub const EPS_INV: f64 = 1e-9;
/// Opened masked matrices with a larger condition estimate are rejected.
pub const COND_CAP: f64 = 1e12;

/// What an operation makes public: `d = x - r1` and `e = y - r2` for a
/// multiplication, plus `sr` for an inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedOpening<T = f64> {
    pub d: T,
    pub e: T,
    pub sr: Option<T>,
}

impl MaskedOpening<DMatrix<f64>> {
    pub(crate) fn scalar(&self) -> MaskedOpening<f64> {
        MaskedOpening {
            d: self.d[(0, 0)],
            e: self.e[(0, 0)],
            sr: self.sr.as_ref().map(|m| m[(0, 0)]),
        }
    }
}

pub fn add(x: &ShareSet, y: &ShareSet) -> Result<ShareSet> {
    x.zip_with(y, |a, b| a + b)
}

pub fn sub(x: &ShareSet, y: &ShareSet) -> Result<ShareSet> {
    x.zip_with(y, |a, b| a - b)
}

pub fn scale(c: f64, x: &ShareSet) -> ShareSet {
    x.map_values(|_, v| c * v)
}

/// Adds a public constant through its noise-free sharing.
pub fn shift(c: f64, x: &ShareSet) -> Result<ShareSet> {
    let parties: Vec<usize> = x.iter().map(|(i, _)| i).collect();
    let constant = public_share(c, x.domain()).subset(&parties)?;
    add(x, &constant)
}
