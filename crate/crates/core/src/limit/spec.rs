use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{StepFunction, StepGraphon};

/// Parameters `(W, Δ, λ0)` of the limit `Q1 + Q2 + Q3`.
///
/// `Q1` is the quadratic Poisson functional driven by `W`, `Q2 ~ Pois(∫ Δ dN)` shares the
/// Poisson process with `Q1`, and `Q3 ~ Pois(λ0)` is independent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    #[serde(rename = "W")]
    pub w: StepGraphon,
    pub delta: StepFunction,
    pub lambda0: f64,
    /// Bound on the probability that blocks left out of an infinite construction contribute.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub omitted_mass: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// The spec on the common refinement of the breakpoints of `W` and `Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockForm {
    pub lengths: Vec<f64>,
    /// Row-major `B x B`.
    pub b: Vec<f64>,
    pub delta: Vec<f64>,
    pub lambda0: f64,
}

impl BlockForm {
    pub fn num_blocks(&self) -> usize {
        self.lengths.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.b[i * self.lengths.len() + j]
    }

    /// Drops blocks that contribute to neither `Q1` nor `Q2`.
    pub fn active(&self) -> BlockForm {
        let n = self.num_blocks();
        let keep: Vec<usize> = (0..n)
            .filter(|&i| self.lengths[i] > 0.0 && (self.delta[i] > 0.0 || (0..n).any(|j| self.get(i, j) > 0.0)))
            .collect();
        BlockForm {
            lengths: keep.iter().map(|&i| self.lengths[i]).collect(),
            b: keep
                .iter()
                .flat_map(|&i| keep.iter().map(move |&j| (i, j)))
                .map(|(i, j)| self.get(i, j))
                .collect(),
            delta: keep.iter().map(|&i| self.delta[i]).collect(),
            lambda0: self.lambda0,
        }
    }
}

impl LimitSpec {
    pub fn new(w: StepGraphon, delta: StepFunction, lambda0: f64) -> Result<Self> {
        let spec = LimitSpec {
            w,
            delta,
            lambda0,
            omitted_mass: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::invalid("lambda0 must be non-negative"));
        }
        if self.delta.values().iter().any(|&d| d < 0.0) {
            return Err(Error::invalid("delta must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.omitted_mass) {
            return Err(Error::invalid("omitted_mass must lie in [0, 1)"));
        }
        if self.w.as_empirical().is_some() {
            self.w.to_kernel()?;
        }
        Ok(())
    }

    pub fn block_form(&self) -> Result<BlockForm> {
        let w = self.w.to_kernel()?;
        let end = w.support_end().max(self.delta.support_end());
        let bp = crate::graphon::common_breakpoints(&[w.breakpoints(), self.delta.breakpoints()], end);
        Ok(BlockForm {
            lengths: bp.windows(2).map(|x| x[1] - x[0]).collect(),
            b: w.refined(&bp)?.values().to_vec(),
            delta: self.delta.values_on(&bp),
            lambda0: self.lambda0,
        })
    }

    /// `x ↦ ∫ W(x, y) dy + Δ(x)`.
    pub fn degree_target(&self) -> Result<StepFunction> {
        let form = self.block_form()?;
        let n = form.num_blocks();
        let mut bp = vec![0.0];
        for l in &form.lengths {
            bp.push(bp.last().unwrap() + l);
        }
        let values = (0..n)
            .map(|i| (0..n).map(|j| form.get(i, j) * form.lengths[j]).sum::<f64>() + form.delta[i])
            .collect();
        StepFunction::new(bp, values)
    }

    /// `E[Q1] + E[Q2] + E[Q3] = ½ ∫∫ W + ∫ Δ + λ0`.
    pub fn mean(&self) -> Result<f64> {
        Ok(0.5 * self.w.integral() + self.delta.integral() + self.lambda0)
    }
}

/// Ids accepted by [`preset`].
pub const PRESET_IDS: &[&str] = &[
    "ex2.1-er",
    "ex2.1-bipartite",
    "ex2.2-cycle",
    "ex2.3-star",
    "ex2.3-matching",
    "ex2.4-stars",
    "ex2.5",
    "ex2.6",
    "ex2.7-odd",
    "ex2.7-even",
];

/// Bipartite preset: left side of relative size `1/3`, cross probability `1/2`.
pub const BIPARTITE_ALPHA: f64 = 1.0 / 3.0;
pub const BIPARTITE_Q: f64 = 0.5;
pub const DENSE_ER_Q: f64 = 0.5;

/// Remaining mean below which the multi-scale preset is cut off.
const SCALE_CUTOFF: f64 = 1e-9;

/// Limit laws of the worked examples, in canonical (degree-sorted) labeling.
pub fn preset(id: &str) -> Result<LimitSpec> {
    let zero_w = StepGraphon::zero;
    let zero_d = StepFunction::zero;
    match id {
        "ex2.1-er" => LimitSpec::new(StepGraphon::constant(DENSE_ER_Q, 1.0)?, zero_d(), 0.0),
        "ex2.1-bipartite" => {
            let a = BIPARTITE_ALPHA;
            let q = BIPARTITE_Q;
            let w = StepGraphon::new(vec![0.0, a, 1.0], vec![vec![0.0, q], vec![q, 0.0]])?;
            LimitSpec::new(w, zero_d(), 0.0)
        }
        "ex2.2-cycle" => LimitSpec::new(zero_w(), zero_d(), 2.0),
        "ex2.3-star" => LimitSpec::new(zero_w(), zero_d(), 0.0),
        "ex2.3-matching" => LimitSpec::new(zero_w(), zero_d(), 1.0),
        "ex2.4" | "ex2.4-stars" => LimitSpec::new(zero_w(), StepFunction::constant(1.0, 1.0)?, 0.0),
        "ex2.5" => LimitSpec::new(StepGraphon::constant(1.0, 1.0)?, StepFunction::constant(1.0, 1.0)?, 1.0),
        "ex2.6" => multi_scale(),
        "ex2.7-odd" | "ex2.7-even" => {
            // the block carrying the stars has the larger degrees and comes first
            let (first, second) = if id == "ex2.7-odd" { (0.25, 0.5) } else { (0.5, 0.25) };
            let w = StepGraphon::new(
                vec![0.0, 1.0, 2.0],
                vec![vec![first, 0.0], vec![0.0, second]],
            )?;
            LimitSpec::new(w, StepFunction::constant(1.0, 1.0)?, 0.0)
        }
        _ => Err(Error::UnknownExample(id.to_string())),
    }
}

/// Scales `s = 1, 2, ...` of length `4^s` with `W = 32^-s` and `Δ = 16^-s`, cut off once the
/// remaining mean `Σ_{s > S} (2^-s / 2 + 4^-s)` drops below the cutoff. That remaining mean
/// bounds the probability that the omitted scales contribute.
fn multi_scale() -> Result<LimitSpec> {
    // Σ_{s > S} (2^-s / 2 + 4^-s) = 2^-S / 2 + 4^-S / 3
    let remaining = |s: i32| 0.5 * 2f64.powi(-s) + 4f64.powi(-s) / 3.0;
    let mut scales = 1;
    while remaining(scales) >= SCALE_CUTOFF {
        scales += 1;
    }
    let b = scales as usize;
    let mut bp = vec![0.0];
    for s in 1..=scales {
        bp.push(bp.last().unwrap() + 4f64.powi(s));
    }
    let mut rows = vec![vec![0.0; b]; b];
    for s in 0..b {
        rows[s][s] = 32f64.powi(-(s as i32 + 1));
    }
    let delta = (1..=scales).map(|s| 16f64.powi(-s)).collect();
    let mut spec = LimitSpec::new(StepGraphon::new(bp.clone(), rows)?, StepFunction::new(bp, delta)?, 0.0)?;
    spec.omitted_mass = remaining(scales);
    Ok(spec)
}
