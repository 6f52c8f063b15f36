//! Stateless comfort mathematics: Fanger PMV, PPD, and the TCI scale.

mod pmv;
mod tci;

pub use pmv::{compute_pmv, pmv_to_ppd, PmvInputs, TCL_MAX_ITERATIONS};
pub use tci::{clamp_tci, Tci, TCI_LIMIT};
pub(crate) use pmv::check_range;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComfortError {
    #[error("{field} out of range: {value} (allowed {min}..={max})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("clothing surface temperature did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("value is not finite")]
    NotFinite,
}
