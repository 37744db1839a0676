//! Chi-square machinery: incomplete gamma, Temme's uniform asymptotic,
//! truncated chi-square moments and tail-bound calculators.

mod chisq;
mod gamma;
mod temme;

pub use chisq::{
    alpha_threshold, chi2_sf, laurent_massart_threshold, sample_noncentral_chi2,
    truncated_chi2_second_moment, truncated_chi2_var,
};
pub use gamma::{ln_gamma, ln_reg_upper_gamma, normal_sf, reg_lower_gamma, reg_upper_gamma};
pub use temme::{temme_c0, temme_q_order1, TemmeApprox, TemmeTerms};
