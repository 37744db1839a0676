//! Signal detection in sparse additive models, in the Gaussian sequence model
//! `X_{k,j} ~ N(θ_{k,j}, 1/n)`.
//!
//! The crate computes separation rates from a kernel's eigenvalue profile,
//! builds the thresholded chi-square tests that attain them, samples the priors
//! used in the matching lower bounds, and runs calibrated Monte Carlo to check
//! everything at desk scale.
//!
//! ```
//! use samtest::{EigenProfile, ProblemDims, Tuning, rates::minimax_rate};
//!
//! let profile = EigenProfile::sobolev(1.0);
//! let dims = ProblemDims::new(100, 1, 1000.0)?;
//! let report = minimax_rate(&profile, &dims, &Tuning::default())?;
//! assert_eq!(report.nu, 12);
//! # Ok::<(), samtest::Error>(())
//! ```
//!
//! A longer walk-through lives in the `book/` directory of the repository.

mod error;
pub mod harness;
pub mod matrix;
pub mod priors;
pub mod rates;
pub mod special;
pub mod spectra;
pub mod statistics;

pub use error::{Error, Result};
pub use matrix::CoefficientMatrix;
pub use rates::{ProblemDims, RateReport, Regime, Tuning};
pub use spectra::EigenProfile;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/adaptation.md")]
    mod adaptation {}
    #[doc = include_str!("../../../book/src/chi_square.md")]
    mod chi_square {}
    #[doc = include_str!("../../../book/src/tests.md")]
    mod tests {}
    #[doc = include_str!("../../../book/src/lower_bounds.md")]
    mod lower_bounds {}
    #[doc = include_str!("../../../book/src/monte_carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
