//! The quadratic form `T_n = Σ_{(u,v) ∈ E} X_u X_v`: simulation, exact laws and moments.

mod exact;
mod law;
mod moments;
mod pmf;
mod sim;

pub use exact::{exact_pmf, exact_truncated_pmf, MAX_EXACT_VERTICES};
pub use law::{poisson_theta_for_p1, SparseLaw};
pub use moments::{mean_var, moment, truncated_mean_var};
pub use pmf::Pmf;
pub use sim::{
    decompose, simulate, simulate_values, universality_check, Decomposition, JointCell, SimConfig,
    UniversalityCheck, DEFAULT_CHUNKS, DEFAULT_SAMPLE_CAP,
};

#[cfg(test)]
mod tests;
