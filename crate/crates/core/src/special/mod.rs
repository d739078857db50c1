//! Gamma-family special functions and gamma variates.

mod gamma;
mod incomplete;
mod variate;

pub use gamma::{digamma, log_gamma, log_minus_digamma};
pub use incomplete::{inv_reg_lower_gamma, reg_lower_gamma, reg_upper_gamma};
pub use variate::sample_gamma;

pub(crate) use gamma::{ln_gamma, ln_minus_psi, psi};
pub(crate) use incomplete::{invert as inv_lower_unchecked, lower as lower_unchecked, upper as upper_unchecked};
pub(crate) use variate::gamma_variate;
