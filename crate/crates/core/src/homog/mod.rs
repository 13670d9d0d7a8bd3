//! Monte-Carlo side of the crate.
//!
//! The central random variable is `u_theta(t, 0, omega)`, the solution at the
//! origin of the zero-datum problem with momentum shift `theta`. Its mean
//! `U_theta(t)` is tabulated over a time schedule by [`estimate_u`]; the
//! effective Hamiltonian is read off as `-U_theta(t) / t` at the end of the
//! schedule, with a bias band
//!
//! ```text
//! |U_theta(n) / n + Hbar(theta)| <= A (ln n / n)^{1/2},   A = K sum_k 2^{-k/2} (k + 1)^{1/2},
//! ```
//!
//! where `K` bounds the subadditivity defects
//! `|U(m) + U(n) - U(m + n)| <= K (n ln n)^{1/2}`. Everything here is
//! estimated, never assumed: the constants are existential in theory.
//!
//! Samples are independent jobs handed to an [`Executor`]; results are
//! collected by sample index, so every report is a function of the inputs
//! and the base seed alone.

mod experiments;
mod stats;
mod table;

pub use experiments::{
    effective_h_properties, general_datum_homogenization, rate_experiment, strip_experiment, DatumPoint,
    GeneralDatumReport, GeneralDatumSetup, PropertiesReport, RatePoint, RateReport, RateSetup, StripReport, RATE_BAND,
};
pub use stats::{
    azuma_bound, bias_factor, check_concentration, check_subadditivity, extract_effective_h, spread_profile,
    ConcentrationReport, Defect, EffectiveEstimate, KPoint, RateFit, SpreadPoint, SpreadReport, SubadditivityReport,
    TailPoint,
};
pub use table::{estimate_u, sample_u, Discretization, Executor, Sequential, UTable};

/// Outcome of a statistical check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    Pass,
    Fail,
    /// The data cannot decide at the available sample size.
    Inconclusive,
    /// Nothing random to test, e.g. a deterministic cost.
    Degenerate,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }
}
