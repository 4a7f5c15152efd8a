//! The limit law `Q1 + Q2 + Q3` and block Poisson stochastic integrals.

mod ito;
mod sample;
mod spec;

pub use ito::{expected_value, ito_block_integral, mean_and_se, phi_integrand, univariate_ito_integral};
pub use sample::{
    limit_pmf, mgf, mgf_total, sample_limit, sample_limit_joint, LimitDraw, MAX_ENUMERATION_BLOCKS,
};
pub use spec::{preset, BlockForm, LimitSpec, BIPARTITE_ALPHA, BIPARTITE_Q, DENSE_ER_Q, PRESET_IDS};

#[cfg(test)]
mod tests;
