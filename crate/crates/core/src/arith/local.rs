//! The party-side protocols: what one party computes on its own shares
//! between openings. Scalars are handled as 1x1 matrices.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::dealer::TripleShare;
use super::{MaskedOpening, COND_CAP, EPS_INV};
use crate::domain::EvaluationDomain;
use crate::error::{Error, Result};
use crate::runtime::Party;
use crate::sharing::{gaussian_draws, share_with_rng};

/// Local share of the product once `D = X - R1` and `E = Y - R2` are public.
/// `DE` is a public constant and is added as its degree-0 sharing.
pub(crate) fn beaver_combine(
    d: &DMatrix<f64>,
    e: &DMatrix<f64>,
    triple: &TripleShare,
) -> DMatrix<f64> {
    d * e + d * &triple.r2 + &triple.r1 * e + &triple.r1r2
}

pub(crate) fn check_triple_shape(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    triple: &TripleShare,
) -> Result<()> {
    if x.ncols() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    if triple.r1.shape() != x.shape() || triple.r2.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "triple {} has masks {:?} and {:?} for operands {:?} and {:?}",
            triple.id,
            triple.r1.shape(),
            triple.r2.shape(),
            x.shape(),
            y.shape()
        )));
    }
    Ok(())
}

/// Validates an opened masked value and returns the local result `R (SR)^-1`.
pub(crate) fn apply_inverse(r: &DMatrix<f64>, sr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let inverse = invert_opened(sr)?;
    if sr.shape() == (1, 1) {
        return Ok(r / sr[(0, 0)]);
    }
    Ok(r * inverse)
}

fn invert_opened(sr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !sr.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            sr.nrows(),
            sr.ncols()
        )));
    }
    if sr.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMask {
            detail: "opened value is not finite".into(),
        });
    }
    if sr.nrows() == 1 {
        let v = sr[(0, 0)];
        if v.abs() < EPS_INV {
            return Err(Error::SingularMask {
                detail: format!("|sr| = {:e} below {EPS_INV:e}", v.abs()),
            });
        }
        return Ok(DMatrix::from_element(1, 1, 1.0 / v));
    }
    let sv = sr.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 || max / min > COND_CAP {
        return Err(Error::SingularMask {
            detail: format!("condition estimate {:e} exceeds {COND_CAP:e}", max / min),
        });
    }
    sr.clone().try_inverse().ok_or_else(|| Error::SingularMask {
        detail: "opened matrix is not invertible".into(),
    })
}

/// A party's contribution to joint randomness: its private draw and the
/// sharing of every entry, split by recipient.
pub(crate) fn joint_contribution<R: Rng + ?Sized>(
    rng: &mut R,
    domain: &Arc<EvaluationDomain>,
    rows: usize,
    cols: usize,
    mask_sigma2: f64,
    mu_y: f64,
    sigma2_y: f64,
) -> Result<(DMatrix<f64>, Vec<Vec<f64>>)> {
    let draw = DMatrix::from_vec(
        rows,
        cols,
        gaussian_draws(0.0, mask_sigma2, rows * cols, rng)?,
    );
    let mut outgoing = vec![Vec::with_capacity(rows * cols); domain.n()];
    for &v in draw.iter() {
        let (shares, _) = share_with_rng(v, domain, mu_y, sigma2_y, rng)?;
        for (p, s) in shares.iter() {
            outgoing[p].push(s);
        }
    }
    Ok((draw, outgoing))
}

/// Sums the received shares in sender order.
pub(crate) fn joint_sum(rows: usize, cols: usize, incoming: &[Vec<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(rows, cols);
    for received in incoming {
        for (a, &v) in acc.iter_mut().zip(received) {
            *a += v;
        }
    }
    acc
}

fn open_matrix(party: &mut Party, local: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let v = party.open(local.as_slice())?;
    Ok(DMatrix::from_vec(local.nrows(), local.ncols(), v))
}

/// Beaver multiplication of this party's shares `x` and `y`. Two openings.
pub fn mult(
    party: &mut Party,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    triple: &TripleShare,
) -> Result<(DMatrix<f64>, MaskedOpening<DMatrix<f64>>)> {
    check_triple_shape(x, y, triple)?;
    party.consume_triple(triple.id)?;
    let d = open_matrix(party, &(x - &triple.r1))?;
    let e = open_matrix(party, &(y - &triple.r2))?;
    let z = beaver_combine(&d, &e, triple);
    Ok((z, MaskedOpening { d, e, sr: None }))
}

/// Masked inversion: multiply by the shared mask `r`, open the product and
/// scale the mask shares by its inverse. Three openings.
pub fn inv(
    party: &mut Party,
    x: &DMatrix<f64>,
    r: &DMatrix<f64>,
    triple: &TripleShare,
) -> Result<(DMatrix<f64>, MaskedOpening<DMatrix<f64>>)> {
    let (sr_local, mut opening) = mult(party, x, r, triple)?;
    let sr = open_matrix(party, &sr_local)?;
    let out = apply_inverse(r, &sr)?;
    opening.sr = Some(sr);
    Ok((out, opening))
}

/// Every party shares a private Gaussian draw with every other party; each
/// party's result is the sum of what it received. No opening happens.
pub fn joint_random(
    party: &mut Party,
    rows: usize,
    cols: usize,
    mask_sigma2: f64,
    mu_y: f64,
    sigma2_y: f64,
    label: &str,
) -> Result<DMatrix<f64>> {
    let mut rng = party.rng(label);
    let domain = party.domain().clone();
    let (_, outgoing) =
        joint_contribution(&mut rng, &domain, rows, cols, mask_sigma2, mu_y, sigma2_y)?;
    let incoming = party.exchange(outgoing)?;
    Ok(joint_sum(rows, cols, &incoming))
}
