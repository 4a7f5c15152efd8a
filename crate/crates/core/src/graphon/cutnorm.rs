use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step::{common_breakpoints, difference_on_window, same_point, BlockKernel, StepGraphon};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Largest block count (after merging identical blocks) handled by exact enumeration.
pub const MAX_EXACT_BLOCKS: usize = 22;

const RANDOM_STARTS: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutNormMode {
    /// Enumerate all sign vectors; fails above [`MAX_EXACT_BLOCKS`].
    Exact,
    /// Alternating sign optimization from several starts; a lower bound.
    Alternating,
    /// Exact when small enough, alternating otherwise.
    Auto,
}

impl std::str::FromStr for CutNormMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CutNormMode::Exact),
            "alternating" => Ok(CutNormMode::Alternating),
            "auto" => Ok(CutNormMode::Auto),
            _ => Err(Error::invalid(format!("unknown cut-norm mode `{s}`"))),
        }
    }
}

/// Cut norm of a kernel difference on a window, with maximizing sign vectors.
///
/// Witnesses are given per block of `breakpoints`, the common refinement of both kernels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutNormResult {
    pub value: f64,
    pub witness_f: Vec<i8>,
    pub witness_g: Vec<i8>,
    pub breakpoints: Vec<f64>,
    pub exact: bool,
}

/// `sup_{f,g: [0,K] → [-1,1]} |∫∫ f(x) g(y) (W1 - W2)(x, y) dx dy|`.
pub fn cut_norm_window(w1: &StepGraphon, w2: &StepGraphon, k: f64, mode: CutNormMode) -> Result<CutNormResult> {
    if !(k > 0.0) {
        return Err(Error::invalid("K must be positive"));
    }
    cut_norm_kernels(&w1.window(k)?, &w2.window(k)?, k, mode)
}

/// Same as [`cut_norm_window`] for arbitrary block kernels.
pub fn cut_norm_kernels(w1: &BlockKernel, w2: &BlockKernel, k: f64, mode: CutNormMode) -> Result<CutNormResult> {
    let (d, bp) = difference_on_window(w1, w2, k);
    let len: Vec<f64> = bp.windows(2).map(|w| w[1] - w[0]).collect();
    cut_norm_matrix(&d, &len, bp, mode)
}

fn cut_norm_matrix(d: &[f64], len: &[f64], breakpoints: Vec<f64>, mode: CutNormMode) -> Result<CutNormResult> {
    let b = len.len();
    let (group, reps) = twin_groups(d, b);
    let r = reps.len();
    let mut glen = vec![0.0; r];
    for i in 0..b {
        glen[group[i]] += len[i];
    }
    let mut a = vec![0.0; r * r];
    for (x, &i) in reps.iter().enumerate() {
        for (y, &j) in reps.iter().enumerate() {
            a[x * r + y] = d[i * b + j] * glen[x] * glen[y];
        }
    }
    let exact = match mode {
        CutNormMode::Exact if r > MAX_EXACT_BLOCKS => {
            return Err(Error::BlockCountExceeded {
                blocks: r,
                limit: MAX_EXACT_BLOCKS,
            })
        }
        CutNormMode::Exact => true,
        CutNormMode::Alternating => false,
        CutNormMode::Auto => r <= MAX_EXACT_BLOCKS,
    };
    let (value, f) = if r == 0 {
        (0.0, vec![])
    } else if exact {
        exact_search(&a, r)
    } else {
        alternating_search(&a, r)
    };
    let g = best_response(&a, r, &f);
    Ok(CutNormResult {
        value,
        witness_f: group.iter().map(|&x| f[x]).collect(),
        witness_g: group.iter().map(|&x| g[x]).collect(),
        breakpoints,
        exact,
    })
}

/// Groups blocks whose rows of `d` are identical; such blocks can be merged without
/// changing the cut norm. Returns the group of each block and one representative per group.
fn twin_groups(d: &[f64], b: usize) -> (Vec<usize>, Vec<usize>) {
    let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut group = vec![0; b];
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..b {
        let row = &d[i * b..(i + 1) * b];
        let h = row
            .iter()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, v| crate::rng::mix64(h ^ v.to_bits()));
        let candidates = by_hash.entry(h).or_default();
        match candidates.iter().find(|&&g| row == &d[reps[g] * b..(reps[g] + 1) * b]) {
            Some(&g) => group[i] = g,
            None => {
                group[i] = reps.len();
                candidates.push(reps.len());
                reps.push(i);
            }
        }
    }
    (group, reps)
}

fn column_sums(a: &[f64], r: usize, f: &[i8]) -> Vec<f64> {
    let mut s = vec![0.0; r];
    for i in 0..r {
        let fi = f64::from(f[i]);
        for j in 0..r {
            s[j] += fi * a[i * r + j];
        }
    }
    s
}

fn best_response(a: &[f64], r: usize, f: &[i8]) -> Vec<i8> {
    column_sums(a, r, f)
        .into_iter()
        .map(|s| if s >= 0.0 { 1 } else { -1 })
        .collect()
}

fn objective(s: &[f64]) -> f64 {
    s.iter().map(|v| v.abs()).sum()
}

/// Enumerates `f` with `f[0] = +1` (the objective is invariant under `f → -f`) in Gray-code
/// order, chunked over the top bits so the result does not depend on the thread count.
fn exact_search(a: &[f64], r: usize) -> (f64, Vec<i8>) {
    let free = r - 1;
    let top = free.min(6);
    let low = free - top;
    let results: Vec<(f64, u32)> = (0..1u32 << top)
        .into_par_iter()
        .map(|chunk| {
            let base = chunk << low;
            let mut f: Vec<i8> = (0..r)
                .map(|i| if i > 0 && base >> (i - 1) & 1 == 1 { -1 } else { 1 })
                .collect();
            let mut s = column_sums(a, r, &f);
            let mut best = (objective(&s), base);
            let mut mask = base;
            for step in 1u32..1 << low {
                let bit = step.trailing_zeros() as usize;
                let i = bit + 1;
                let old = f64::from(f[i]);
                for j in 0..r {
                    s[j] -= 2.0 * old * a[i * r + j];
                }
                f[i] = -f[i];
                mask ^= 1 << bit;
                let v = objective(&s);
                if v > best.0 {
                    best = (v, mask);
                }
            }
            best
        })
        .collect();
    let mut best = results[0];
    for &c in &results[1..] {
        if c.0 > best.0 {
            best = c;
        }
    }
    let f = (0..r)
        .map(|i| if i > 0 && best.1 >> (i - 1) & 1 == 1 { -1 } else { 1 })
        .collect();
    (best.0, f)
}

fn alternating_search(a: &[f64], r: usize) -> (f64, Vec<i8>) {
    let mut best = (f64::NEG_INFINITY, vec![1i8; r]);
    for start in 0..RANDOM_STARTS {
        let mut f: Vec<i8> = if start == 0 {
            vec![1; r]
        } else {
            let mut rng = Stream::new(0xC0_7A11, &[r as u64, start]);
            (0..r).map(|_| if rng.uniform() < 0.5 { 1 } else { -1 }).collect()
        };
        // a is symmetric, so the best response of g to f and of f to g coincide
        let mut value = objective(&column_sums(a, r, &f));
        for _ in 0..100 {
            let g = best_response(a, r, &f);
            let f2 = best_response(a, r, &g);
            let v2 = objective(&column_sums(a, r, &f2));
            if v2 <= value * (1.0 + 1e-15) {
                break;
            }
            f = f2;
            value = v2;
        }
        let value = polish(a, r, &mut f);
        if value > best.0 {
            best = (value, f);
        }
    }
    best
}

/// Single-coordinate flips of `f` with `g` re-optimized, until no flip improves.
fn polish(a: &[f64], r: usize, f: &mut [i8]) -> f64 {
    let mut s = column_sums(a, r, f);
    let mut value = objective(&s);
    loop {
        let mut improved = false;
        for i in 0..r {
            let fi = f64::from(f[i]);
            let v: f64 = (0..r).map(|j| (s[j] - 2.0 * fi * a[i * r + j]).abs()).sum();
            if v > value * (1.0 + 1e-12) + 1e-300 {
                for j in 0..r {
                    s[j] -= 2.0 * fi * a[i * r + j];
                }
                f[i] = -f[i];
                value = v;
                improved = true;
            }
        }
        if !improved {
            return value;
        }
    }
}

/// Cut distance minimized over permutations of equal-length blocks of `w1`.
///
/// Exhaustive for at most 8 blocks, pairwise-swap local search above; the value is an upper
/// bound on the cut distance over all measure-preserving relabelings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignedCutDistance {
    pub value: f64,
    /// Block `i` of the aligned `w1` is block `permutation[i]` of the original.
    pub permutation: Vec<usize>,
    pub breakpoints: Vec<f64>,
    pub exhaustive: bool,
}

const MAX_EXHAUSTIVE_ALIGN: usize = 8;
const MAX_SWAP_EVALUATIONS: usize = 2000;

pub fn cut_distance_aligned(w1: &StepGraphon, w2: &StepGraphon, k: f64) -> Result<AlignedCutDistance> {
    if !(k > 0.0) {
        return Err(Error::invalid("K must be positive"));
    }
    let (k1, k2) = (w1.window(k)?, w2.window(k)?);
    let end = k1.support_end().max(k2.support_end());
    let bp = common_breakpoints(&[k1.breakpoints(), k2.breakpoints()], end);
    let len: Vec<f64> = bp.windows(2).map(|w| w[1] - w[0]).collect();
    let b = len.len();
    let d1 = k1.refined(&bp)?;
    let d2 = k2.refined(&bp)?;
    let eval = |perm: &[usize]| -> Result<f64> {
        let d: Vec<f64> = (0..b * b)
            .map(|x| d1.get(perm[x / b], perm[x % b]) - d2.get(x / b, x % b))
            .collect();
        Ok(cut_norm_matrix(&d, &len, bp.clone(), CutNormMode::Auto)?.value)
    };
    let same_len = |i: usize, j: usize| same_point(len[i], len[j]);
    let mut perm: Vec<usize> = (0..b).collect();
    let mut best = eval(&perm)?;
    let exhaustive = b <= MAX_EXHAUSTIVE_ALIGN;
    if exhaustive {
        let mut best_perm = perm.clone();
        let mut cur = perm.clone();
        permute(&mut cur, 0, &same_len, &mut |p| {
            let v = eval(p)?;
            if v < best {
                best = v;
                best_perm = p.to_vec();
            }
            Ok(())
        })?;
        perm = best_perm;
    } else {
        let mut evals = 0;
        'outer: loop {
            let mut improved = false;
            for i in 0..b {
                for j in i + 1..b {
                    if !same_len(i, j) {
                        continue;
                    }
                    if evals >= MAX_SWAP_EVALUATIONS {
                        break 'outer;
                    }
                    evals += 1;
                    perm.swap(i, j);
                    let v = eval(&perm)?;
                    if v < best {
                        best = v;
                        improved = true;
                    } else {
                        perm.swap(i, j);
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    Ok(AlignedCutDistance {
        value: best,
        permutation: perm,
        breakpoints: bp,
        exhaustive,
    })
}

/// Visits every rearrangement of `p[pos..]` that only exchanges equal-length blocks.
fn permute(
    p: &mut Vec<usize>,
    pos: usize,
    same_len: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if pos == p.len() {
        return visit(p);
    }
    for i in pos..p.len() {
        if i != pos && !same_len(pos, i) {
            continue;
        }
        p.swap(pos, i);
        permute(p, pos + 1, same_len, visit)?;
        p.swap(pos, i);
    }
    Ok(())
}
