//! How much the shares and protocol transcripts reveal about a secret.
//!
//! All closed-form quantities treat the secret and the noise as Gaussian and
//! condition on a fixed anchor set, so each is `½ log2` of a determinant
//! ratio. Values are in bits.

mod bounds;
mod empirical;
mod worst;

pub use bounds::{
    gaussian_entropy_bits, naive_scheme_bound, snr_bits, EmpiricalLeakage, LeakageModel,
    LeakageReport,
};
pub use empirical::{
    empirical_mi, gaussian_mi_bits, CovarianceAccumulator, MiEstimate, SampleSpec, WitnessMode,
    BATCH, MIN_SAMPLES,
};
pub use worst::{WorstCase, WorstCaseSearch};

/// Which view of a sharing is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// One share.
    SingleShare,
    /// `t` shares.
    TShares,
    /// `t` shares and the opened `d = s - r1` of a multiplication.
    TSharesPlusMask,
    /// `t` shares and the opened `sr` of an inversion.
    TSharesPlusProduct,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::SingleShare => "single_share",
            Quantity::TShares => "t_shares",
            Quantity::TSharesPlusMask => "t_shares_plus_mask",
            Quantity::TSharesPlusProduct => "t_shares_plus_product",
        }
    }
}
