use rand::distr::Distribution;
use rand_distr::Poisson;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphon::{BlockKernel, StepFunction, StepGraphon};
use crate::quadform::DEFAULT_CHUNKS;
use crate::rng::{chunk_ranges, Stream};

fn block_counts(lengths: &[f64]) -> Vec<Option<Poisson<f64>>> {
    lengths.iter().map(|&l| Poisson::new(l).ok()).collect()
}

fn draw_counts(dists: &[Option<Poisson<f64>>], rng: &mut Stream) -> Vec<f64> {
    dists
        .iter()
        .map(|d| d.as_ref().map_or(0.0, |d| d.sample(rng)))
        .collect()
}

fn run<F>(samples: u64, seed: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut Stream) -> f64 + Sync,
{
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let parts: Vec<Vec<f64>> = chunk_ranges(samples, DEFAULT_CHUNKS)
        .into_par_iter()
        .map(|range| {
            range
                .map(|rep| f(&mut Stream::new(seed, &[rep])))
                .collect()
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

/// Draws of the double Poisson integral of a block integrand,
/// `I₂(f) = 2 Σ_j f_jj C(N_j, 2) + 2 Σ_{j<k} f_jk N_j N_k` with `N_j ~ Pois(|block j|)`.
pub fn ito_block_integral(f: &BlockKernel, samples: u64, seed: u64) -> Result<Vec<f64>> {
    let b = f.num_blocks();
    let dists = block_counts(&f.lengths());
    run(samples, seed, |rng| {
        let n = draw_counts(&dists, rng);
        let mut s = 0.0;
        for j in 0..b {
            s += f.get(j, j) * n[j] * (n[j] - 1.0);
            for k in j + 1..b {
                s += 2.0 * f.get(j, k) * n[j] * n[k];
            }
        }
        s
    })
}

/// `E I₂(f) = ∫∫ f`.
pub fn expected_value(f: &BlockKernel) -> f64 {
    f.integral()
}

/// Draws of `∫ f dN = Σ_j f_j N_j`.
pub fn univariate_ito_integral(f: &StepFunction, samples: u64, seed: u64) -> Result<Vec<f64>> {
    let dists = block_counts(&f.lengths());
    let values = f.values().to_vec();
    run(samples, seed, |rng| {
        draw_counts(&dists, rng)
            .iter()
            .zip(&values)
            .map(|(n, v)| n * v)
            .sum()
    })
}

/// `φ_{W,t} = log(1 - W + W e^{-t})`.
pub fn phi_integrand(w: &StepGraphon, t: f64) -> Result<BlockKernel> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t must be finite and non-negative"));
    }
    w.to_kernel()?
        .map(|b| if b >= 1.0 { -t } else { (b * (-t).exp_m1()).ln_1p() })
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
