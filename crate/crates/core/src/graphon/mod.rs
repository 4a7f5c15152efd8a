//! Step kernels, empirical graphons and distances between them.

mod cutnorm;
mod step;

pub use cutnorm::{
    cut_distance_aligned, cut_norm_kernels, cut_norm_window, AlignedCutDistance, CutNormMode,
    CutNormResult, MAX_EXACT_BLOCKS,
};
pub(crate) use step::{ceil_tol, common_breakpoints};
pub use step::{
    empirical_graphon, l1_distance, l1_distance_kernel, l1_distance_truncated, BlockKernel,
    StepFunction, StepGraphon, MAX_DENSE_BLOCKS,
};

/// Integrand of a block Poisson stochastic integral: a symmetric step kernel with real values.
pub type PoissonBlockIntegrand = BlockKernel;
