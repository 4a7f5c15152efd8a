use std::collections::BTreeMap;

use rand::distr::Distribution;
use rand_distr::{Binomial, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use super::spec::{BlockForm, LimitSpec};
use crate::error::{Error, Result};
use crate::quadform::{Pmf, DEFAULT_CHUNKS};
use crate::rng::{chunk_ranges, Stream};

/// Largest number of contributing blocks handled by [`limit_pmf`] and [`mgf`].
pub const MAX_ENUMERATION_BLOCKS: usize = 6;

/// One draw of the three limit components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LimitDraw {
    pub q1: u64,
    pub q2: u64,
    pub q3: u64,
}

impl LimitDraw {
    pub fn total(&self) -> u64 {
        self.q1 + self.q2 + self.q3
    }
}

fn poisson(rate: f64, rng: &mut Stream) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("finite positive rate").sample(rng) as u64
}

/// `Bin(trials, q)`; beyond `u64` trials the Poisson approximation is used (`q` is then tiny).
fn binomial(trials: u128, q: f64, rng: &mut Stream) -> u64 {
    if trials == 0 || q <= 0.0 {
        0
    } else if q >= 1.0 {
        u64::try_from(trials).unwrap_or(u64::MAX)
    } else if let Ok(t) = u64::try_from(trials) {
        Binomial::new(t, q).expect("valid binomial").sample(rng)
    } else {
        poisson(trials as f64 * q, rng)
    }
}

struct Sampler {
    form: BlockForm,
    counts: Vec<Option<Poisson<f64>>>,
}

impl Sampler {
    fn new(spec: &LimitSpec) -> Result<Sampler> {
        spec.validate()?;
        let form = spec.block_form()?.active();
        let counts = form
            .lengths
            .iter()
            .map(|&l| Poisson::new(l).ok())
            .collect();
        Ok(Sampler { form, counts })
    }

    fn draw(&self, seed: u64, rep: u64) -> LimitDraw {
        let mut rng = Stream::new(seed, &[rep]);
        let b = self.form.num_blocks();
        let n: Vec<u128> = self
            .counts
            .iter()
            .map(|p| p.as_ref().map_or(0, |p| p.sample(&mut rng) as u128))
            .collect();
        let mut q1 = 0u64;
        for j in 0..b {
            q1 += binomial(n[j] * n[j].saturating_sub(1) / 2, self.form.get(j, j), &mut rng);
            for k in j + 1..b {
                q1 += binomial(n[j] * n[k], self.form.get(j, k), &mut rng);
            }
        }
        let rate: f64 = (0..b).map(|j| self.form.delta[j] * n[j] as f64).sum();
        let q2 = poisson(rate, &mut rng);
        let q3 = poisson(self.form.lambda0, &mut rng);
        LimitDraw { q1, q2, q3 }
    }
}

/// Joint draws `(Q1, Q2, Q3)` in replicate order.
pub fn sample_limit_joint(spec: &LimitSpec, samples: u64, seed: u64) -> Result<Vec<LimitDraw>> {
    let sampler = Sampler::new(spec)?;
    let parts: Vec<Vec<LimitDraw>> = chunk_ranges(samples, DEFAULT_CHUNKS)
        .into_par_iter()
        .map(|range| range.map(|rep| sampler.draw(seed, rep)).collect())
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

/// Empirical law of `Q1 + Q2 + Q3`. Mass of blocks the `LimitSpec` omits goes to `tail_mass`.
pub fn sample_limit(spec: &LimitSpec, samples: u64, seed: u64) -> Result<Pmf> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let sampler = Sampler::new(spec)?;
    let parts: Vec<BTreeMap<u64, u64>> = chunk_ranges(samples, DEFAULT_CHUNKS)
        .into_par_iter()
        .map(|range| {
            let mut counts = BTreeMap::new();
            for rep in range {
                *counts.entry(sampler.draw(seed, rep).total()).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    let mut counts = BTreeMap::new();
    for part in parts {
        for (k, c) in part {
            *counts.entry(k).or_insert(0u64) += c;
        }
    }
    let mut pmf = Pmf::from_counts(&counts);
    with_omitted(&mut pmf, spec.omitted_mass);
    Ok(pmf)
}

fn with_omitted(pmf: &mut Pmf, omitted: f64) {
    if omitted > 0.0 {
        for p in pmf.probs.values_mut() {
            *p *= 1.0 - omitted;
        }
        pmf.tail_mass += omitted;
    }
}

/// Poisson pmf in log space, cut once the remaining mass is at most `tail`.
fn poisson_pmf_upto(rate: f64, tail: f64) -> Vec<f64> {
    if rate <= 0.0 {
        return vec![1.0];
    }
    let mut out = Vec::new();
    let mut logp = -rate;
    let mut acc = 0.0;
    let mut k = 0u64;
    loop {
        let p = logp.exp();
        out.push(p);
        acc += p;
        if 1.0 - acc <= tail && k as f64 >= rate {
            return out;
        }
        k += 1;
        logp += rate.ln() - (k as f64).ln();
    }
}

fn binomial_pmf(trials: u64, q: f64) -> Vec<f64> {
    if trials == 0 || q <= 0.0 {
        return vec![1.0];
    }
    if q >= 1.0 {
        let mut v = vec![0.0; trials as usize + 1];
        v[trials as usize] = 1.0;
        return v;
    }
    let mut out = Vec::with_capacity(trials as usize + 1);
    let mut logp = trials as f64 * (-q).ln_1p();
    let odds = (q / (1.0 - q)).ln();
    for k in 0..=trials {
        out.push(logp.exp());
        if k < trials {
            logp += ((trials - k) as f64).ln() - ((k + 1) as f64).ln() + odds;
        }
    }
    while out.len() > 1 && *out.last().unwrap() == 0.0 {
        out.pop();
    }
    out
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if b.len() == 1 && b[0] == 1.0 {
        return a.to_vec();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Poisson count vectors `(N_1, ..., N_B)` with joint probability at least `tau`.
struct Enumeration {
    marginals: Vec<Vec<f64>>,
}

impl Enumeration {
    fn new(form: &BlockForm, eps: f64) -> Result<Enumeration> {
        let b = form.num_blocks();
        if b > MAX_ENUMERATION_BLOCKS {
            return Err(Error::BlockCountExceeded {
                blocks: b,
                limit: MAX_ENUMERATION_BLOCKS,
            });
        }
        let per_block = eps / (4.0 * b.max(1) as f64);
        Ok(Enumeration {
            marginals: form.lengths.iter().map(|&l| poisson_pmf_upto(l, per_block)).collect(),
        })
    }

    fn visit(&self, tau: f64, f: &mut dyn FnMut(&[u64], f64)) {
        let mut n = vec![0u64; self.marginals.len()];
        self.rec(0, 1.0, tau, &mut n, f);
    }

    fn rec(&self, j: usize, prob: f64, tau: f64, n: &mut Vec<u64>, f: &mut dyn FnMut(&[u64], f64)) {
        if j == self.marginals.len() {
            f(n, prob);
            return;
        }
        for (k, &p) in self.marginals[j].iter().enumerate() {
            let q = prob * p;
            if q < tau {
                continue;
            }
            n[j] = k as u64;
            self.rec(j + 1, q, tau, n, f);
        }
    }

    /// Largest threshold whose enumerated mass is at least `1 - eps/2`.
    fn threshold(&self, eps: f64) -> f64 {
        let mut tau = 1e-6;
        loop {
            let mut mass = 0.0;
            self.visit(tau, &mut |_, p| mass += p);
            if mass >= 1.0 - eps / 2.0 || tau < 1e-300 {
                return tau;
            }
            tau *= 1e-2;
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1e-2 {
        Ok(())
    } else {
        Err(Error::invalid(format!("eps={eps} must lie in (0, 0.01]")))
    }
}

/// Law of `Q1 + Q2 + Q3` by conditioning on the block counts; unenumerated mass is reported
/// as `tail_mass` (at most `eps`, plus any mass omitted from the spec).
pub fn limit_pmf(spec: &LimitSpec, eps: f64) -> Result<Pmf> {
    check_eps(eps)?;
    spec.validate()?;
    let form = spec.block_form()?.active();
    let b = form.num_blocks();
    let en = Enumeration::new(&form, eps)?;
    let tau = en.threshold(eps);
    let mut acc: Vec<f64> = vec![0.0];
    en.visit(tau, &mut |n, prob| {
        let mut cond = vec![1.0];
        for j in 0..b {
            let pairs = n[j] * n[j].saturating_sub(1) / 2;
            cond = convolve(&cond, &binomial_pmf(pairs, form.get(j, j)));
            for k in j + 1..b {
                cond = convolve(&cond, &binomial_pmf(n[j] * n[k], form.get(j, k)));
            }
        }
        let rate: f64 = (0..b).map(|j| form.delta[j] * n[j] as f64).sum();
        cond = convolve(&cond, &poisson_pmf_upto(rate, eps / 8.0));
        if acc.len() < cond.len() {
            acc.resize(cond.len(), 0.0);
        }
        for (i, c) in cond.iter().enumerate() {
            acc[i] += prob * c;
        }
    });
    let acc = convolve(&acc, &poisson_pmf_upto(form.lambda0, eps / 8.0));
    let probs: BTreeMap<u64, f64> = acc
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .map(|(k, p)| (k as u64, p))
        .collect();
    let enumerated: f64 = probs.values().sum();
    let mut pmf = Pmf {
        probs,
        tail_mass: (1.0 - enumerated).max(0.0),
    };
    with_omitted(&mut pmf, spec.omitted_mass);
    Ok(pmf)
}

/// `log(1 - b + b e^{-t})`.
fn psi(b: f64, t: f64) -> f64 {
    if b >= 1.0 {
        -t
    } else {
        (b * (-t).exp_m1()).ln_1p()
    }
}

/// `E exp(-t1 Q1 - t2 Q2)` by enumerating block counts; underestimates by at most `eps`.
pub fn mgf(spec: &LimitSpec, t1: f64, t2: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(t1 >= 0.0 && t2 >= 0.0 && t1.is_finite() && t2.is_finite()) {
        return Err(Error::invalid("t1 and t2 must be finite and non-negative"));
    }
    spec.validate()?;
    let form = spec.block_form()?.active();
    let b = form.num_blocks();
    let en = Enumeration::new(&form, eps)?;
    let tau = en.threshold(eps);
    let psis: Vec<f64> = form.b.iter().map(|&x| psi(x, t1)).collect();
    let damp = -(-t2).exp_m1();
    let mut total = 0.0;
    en.visit(tau, &mut |n, prob| {
        let mut expo = 0.0;
        for j in 0..b {
            let nj = n[j] as f64;
            if n[j] >= 2 {
                expo += psis[j * b + j] * nj * (nj - 1.0) / 2.0;
            }
            for k in j + 1..b {
                if n[j] > 0 && n[k] > 0 {
                    expo += psis[j * b + k] * nj * n[k] as f64;
                }
            }
            expo -= damp * form.delta[j] * nj;
        }
        total += prob * expo.exp();
    });
    Ok(total)
}

/// `E exp(-t (Q1 + Q2 + Q3))`.
pub fn mgf_total(spec: &LimitSpec, t: f64, eps: f64) -> Result<f64> {
    Ok(mgf(spec, t, t, eps)? * (spec.lambda0 * (-t).exp_m1()).exp())
}
