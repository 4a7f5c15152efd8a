use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Pmf, SparseLaw};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphon::ceil_tol;
use crate::rng::{chunk_ranges, Stream};

pub const DEFAULT_SAMPLE_CAP: u64 = 1_000_000;
pub const DEFAULT_CHUNKS: usize = 16;
/// Above this activation probability every vertex is tested directly.
const DENSE_ACTIVATION: f64 = 0.25;

/// Monte Carlo settings. Results depend only on `(seed, samples, law, truncation, r_n)`;
/// `chunks` only controls parallelism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub samples: u64,
    pub seed: u64,
    pub chunks: usize,
    pub law: SparseLaw,
    /// Truncation level `M`: vertices with `d_v > M r_n` get weight 0.
    pub truncation: Option<f64>,
    /// Defaults to `1 / P(X = 1)`.
    pub r_n: Option<f64>,
    /// A replicate above this value is treated as an error.
    pub sample_cap: u64,
}

impl SimConfig {
    pub fn new(law: SparseLaw, samples: u64, seed: u64) -> Self {
        SimConfig {
            samples,
            seed,
            chunks: DEFAULT_CHUNKS,
            law,
            truncation: None,
            r_n: None,
            sample_cap: DEFAULT_SAMPLE_CAP,
        }
    }

    pub fn bernoulli(p: f64, samples: u64, seed: u64) -> Self {
        SimConfig::new(SparseLaw::Bernoulli { p }, samples, seed)
    }

    pub fn with_chunks(mut self, chunks: usize) -> Self {
        self.chunks = chunks;
        self
    }

    pub fn with_truncation(mut self, m: f64) -> Self {
        self.truncation = Some(m);
        self
    }

    pub fn with_rn(mut self, r_n: f64) -> Self {
        self.r_n = Some(r_n);
        self
    }

    pub fn r_n(&self) -> f64 {
        self.r_n.unwrap_or_else(|| 1.0 / self.law.p1())
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        if self.chunks == 0 {
            return Err(Error::invalid("chunks must be at least 1"));
        }
        if let Some(m) = self.truncation {
            if !(m > 0.0) {
                return Err(Error::invalid("truncation level M must be positive"));
            }
        }
        if let Some(r) = self.r_n {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid("r_n must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Draw {
    plus: u64,
    cross: u64,
    minus: u64,
    /// Sum over edges with both weights equal to 1.
    unit: u64,
    /// Some edge had both endpoints active and at least one weight >= 2.
    multi_edge: bool,
}

impl Draw {
    fn total(&self) -> u64 {
        self.plus + self.cross + self.minus
    }
}

struct Engine<'a> {
    g: &'a Graph,
    law: SparseLaw,
    p_active: f64,
    /// `ln(1 - p_active)`.
    ln_inactive: f64,
    /// Bit `v` is set when `v` has a neighbor with a larger label. Small enough to stay
    /// cached, it spares the adjacency lookup for most low-degree vertices.
    has_later: Vec<u64>,
    /// Vertices `< masked` have degree above `M r_n` and are zeroed.
    masked: usize,
    /// Vertices `< split` form `V+`.
    split: usize,
    seed: u64,
    cap: u64,
}

struct Scratch {
    weight: Vec<u64>,
    active: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(g: &'a Graph, cfg: &SimConfig, split: usize) -> Result<Self> {
        cfg.validate()?;
        let r_n = cfg.r_n();
        let masked = match cfg.truncation {
            Some(m) => g.degrees().partition_point(|&d| !crate::graph::within_truncation(d, m, r_n)),
            None => 0,
        };
        let p_active = cfg.law.p_active();
        Ok(Engine {
            g,
            law: cfg.law,
            p_active,
            ln_inactive: (-p_active).ln_1p(),
            has_later: later_neighbor_bits(g),
            masked,
            split,
            seed: cfg.seed,
            cap: cfg.sample_cap,
        })
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            weight: vec![0; self.g.n()],
            active: Vec::new(),
        }
    }

    fn replicate(&self, rep: u64, s: &mut Scratch) -> Result<Draw> {
        let mut rng = Stream::new(self.seed, &[rep]);
        // active vertices in increasing order; masked ones stay inactive
        s.active.clear();
        let n = self.g.n();
        if self.p_active >= DENSE_ACTIVATION {
            for v in self.masked..n {
                if rng.uniform() < self.p_active {
                    s.active.push(v);
                }
            }
        } else if self.p_active > 0.0 {
            // gaps between active vertices are geometric
            let mut v = self.masked;
            loop {
                let skip = rng.uniform_open0().ln() / self.ln_inactive;
                if skip >= (n - v) as f64 {
                    break;
                }
                v += skip as usize;
                s.active.push(v);
                v += 1;
            }
        }
        for &v in &s.active {
            s.weight[v] = self.law.sample_active(&mut rng);
        }
        let mut d = Draw::default();
        for (pos, &u) in s.active.iter().enumerate() {
            if self.has_later[u / 64] >> (u % 64) & 1 == 0 {
                continue;
            }
            let xu = s.weight[u];
            let nbrs = self.g.neighbors(u);
            let mut add = |v: usize| {
                let xv = s.weight[v];
                let prod = xu.saturating_mul(xv);
                match (u < self.split, v < self.split) {
                    (true, true) => d.plus += prod,
                    (false, false) => d.minus += prod,
                    _ => d.cross += prod,
                }
                if prod == 1 {
                    d.unit += 1;
                } else {
                    d.multi_edge = true;
                }
            };
            // count each edge once, from its lower endpoint
            if nbrs.len() <= s.active.len() {
                for &v in nbrs {
                    let v = v as usize;
                    if v > u && s.weight[v] > 0 {
                        add(v);
                    }
                }
            } else {
                for &v in &s.active[pos + 1..] {
                    if self.g.adjacent(u, v) {
                        add(v);
                    }
                }
            }
        }
        for &v in &s.active {
            s.weight[v] = 0;
        }
        let total = d.total();
        if total > self.cap {
            return Err(Error::SampleCapExceeded {
                value: total,
                cap: self.cap,
            });
        }
        Ok(d)
    }

    /// Runs all replicates and folds them with `visit`, chunk by chunk.
    fn run<A, F>(&self, samples: u64, chunks: usize, init: impl Fn() -> A + Sync, visit: F) -> Result<Vec<A>>
    where
        A: Send,
        F: Fn(&mut A, Draw) + Sync,
    {
        chunk_ranges(samples, chunks)
            .into_par_iter()
            .map(|range| {
                let mut acc = init();
                let mut scratch = self.scratch();
                for rep in range {
                    visit(&mut acc, self.replicate(rep, &mut scratch)?);
                }
                Ok(acc)
            })
            .collect()
    }
}

fn later_neighbor_bits(g: &Graph) -> Vec<u64> {
    let mut bits = vec![0u64; g.n().div_ceil(64)];
    for u in 0..g.n() {
        if g.neighbors(u).last().is_some_and(|&v| v as usize > u) {
            bits[u / 64] |= 1 << (u % 64);
        }
    }
    bits
}

fn merge_counts<K: Ord + Copy>(parts: Vec<BTreeMap<K, u64>>) -> BTreeMap<K, u64> {
    let mut out = BTreeMap::new();
    for part in parts {
        for (k, c) in part {
            *out.entry(k).or_insert(0) += c;
        }
    }
    out
}

/// Empirical law of `T_n` (or `T_{n,M}` when a truncation level is set).
pub fn simulate(g: &Graph, cfg: &SimConfig) -> Result<Pmf> {
    let engine = Engine::new(g, cfg, 0)?;
    let parts = engine.run(cfg.samples, cfg.chunks, BTreeMap::new, |acc, d| {
        *acc.entry(d.total()).or_insert(0) += 1;
    })?;
    Ok(Pmf::from_counts(&merge_counts(parts)))
}

/// Raw replicate values in replicate order; mainly for tests.
pub fn simulate_values(g: &Graph, cfg: &SimConfig) -> Result<Vec<u64>> {
    let engine = Engine::new(g, cfg, 0)?;
    let parts = engine.run(cfg.samples, cfg.chunks, Vec::new, |acc, d| acc.push(d.total()))?;
    Ok(parts.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointCell {
    pub plus: u64,
    pub cross: u64,
    pub minus: u64,
    pub prob: f64,
}

/// Joint law of the parts of `T_{n,M}` inside `V+`, across the cut, and inside `V-`,
/// where `V+` holds the first `⌈K r_n⌉` canonical vertices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub split: usize,
    pub plus: Pmf,
    pub cross: Pmf,
    pub minus: Pmf,
    pub total: Pmf,
    pub joint: Vec<JointCell>,
}

pub fn decompose(g: &Graph, k: f64, cfg: &SimConfig) -> Result<Decomposition> {
    if !(k > 0.0) {
        return Err(Error::invalid("K must be positive"));
    }
    let split = ceil_tol(k * cfg.r_n());
    if split > g.n() {
        return Err(Error::IndexOutOfRange {
            index: split,
            len: g.n(),
        });
    }
    let engine = Engine::new(g, cfg, split)?;
    let parts = engine.run(cfg.samples, cfg.chunks, BTreeMap::new, |acc, d| {
        *acc.entry((d.plus, d.cross, d.minus)).or_insert(0) += 1;
    })?;
    let joint = merge_counts(parts);
    let n = cfg.samples as f64;
    let marginal = |f: fn(&(u64, u64, u64)) -> u64| {
        let mut m = BTreeMap::new();
        for (key, &c) in &joint {
            *m.entry(f(key)).or_insert(0) += c;
        }
        Pmf::from_counts(&m)
    };
    Ok(Decomposition {
        split,
        plus: marginal(|k| k.0),
        cross: marginal(|k| k.1),
        minus: marginal(|k| k.2),
        total: marginal(|k| k.0 + k.1 + k.2),
        joint: joint
            .iter()
            .map(|(&(plus, cross, minus), &c)| JointCell {
                plus,
                cross,
                minus,
                prob: c as f64 / n,
            })
            .collect(),
    })
}

/// How often weights above 1 change `T_n`, compared with the union bound
/// `2 |E| P(X >= 2) P(X >= 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniversalityCheck {
    pub samples: u64,
    /// Fraction of replicates where `T_n` differs from the same sum with weights `X 1{X <= 1}`.
    pub mismatch_fraction: f64,
    /// Fraction of replicates with an edge whose endpoints are active and one has weight >= 2.
    pub multi_edge_fraction: f64,
    pub union_bound: f64,
    /// `E[X] / P(X = 1)`.
    pub mean_ratio: f64,
}

pub fn universality_check(g: &Graph, cfg: &SimConfig) -> Result<UniversalityCheck> {
    let engine = Engine::new(g, cfg, 0)?;
    let parts = engine.run(cfg.samples, cfg.chunks, || (0u64, 0u64), |acc, d| {
        acc.0 += u64::from(d.total() != d.unit);
        acc.1 += u64::from(d.multi_edge);
    })?;
    let (mismatch, multi) = parts.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let law = cfg.law;
    Ok(UniversalityCheck {
        samples: cfg.samples,
        mismatch_fraction: mismatch as f64 / cfg.samples as f64,
        multi_edge_fraction: multi as f64 / cfg.samples as f64,
        union_bound: 2.0 * g.num_edges() as f64 * law.p_multi() * law.p_active(),
        mean_ratio: law.mean() / law.p1(),
    })
}
