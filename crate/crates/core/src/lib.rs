//! Secret sharing over the reals.
//!
//! A secret `s` is hidden in the value at 0 of a degree-`t` polynomial that
//! passes through `t` random anchor points; each of the `n` parties holds the
//! polynomial's value at its own public evaluation point. Any `t + 1` shares
//! reconstruct `s` by interpolation. Shares add locally, multiply with Beaver
//! triples and invert by masked opening.
//!
//! ```
//! use std::sync::Arc;
//! use rnss::{recon, share, EvaluationDomain, SharingParams};
//!
//! let domain = Arc::new(EvaluationDomain::grid(11, 5)?);
//! let (shares, _) = share(5.5, &domain, &SharingParams::new(0.0, 100.0, 7)?)?;
//! assert!((recon(&shares)? - 5.5).abs() < 1e-9);
//! # Ok::<(), rnss::Error>(())
//! ```

pub mod arith;
mod domain;
mod error;
pub mod experiment;
pub mod kalman;
pub mod par;
pub mod poly;
pub mod privacy;
pub mod rng;
pub mod runtime;
mod sharing;

pub use domain::{grid_points, EvaluationDomain, SharingParams};
pub use error::{Error, Result};
pub use par::Execution;
pub use poly::{lagrange_basis, InterpolationForm, Interpolator};
pub use sharing::{
    draw_witness, naive_share, naive_share_with_coefficients, public_share, recon, recon_points,
    recon_with, share, share_with_rng, share_with_witness, AnchorWitness, NaiveShareSet, ReconMode,
    ShareSet,
};
