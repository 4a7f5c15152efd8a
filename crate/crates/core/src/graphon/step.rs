use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest number of blocks per axis a kernel may be densified to.
pub const MAX_DENSE_BLOCKS: usize = 4096;

const BREAKPOINT_TOL: f64 = 1e-12;

pub(crate) fn same_point(a: f64, b: f64) -> bool {
    (a - b).abs() <= BREAKPOINT_TOL * a.abs().max(b.abs()).max(1.0)
}

/// `ceil(x)` that treats values within rounding error of an integer as that integer.
pub(crate) fn ceil_tol(x: f64) -> usize {
    let r = x.round();
    if same_point(x, r) {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

fn check_breakpoints(breakpoints: &[f64]) -> Result<()> {
    match breakpoints.first() {
        Some(&0.0) => {}
        _ => return Err(Error::invalid("breakpoints must start at 0")),
    }
    for w in breakpoints.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(Error::invalid("breakpoints must be finite and strictly increasing"));
        }
    }
    Ok(())
}

/// Sorted union of breakpoint lists, cut at `end` (which is always included when positive).
pub(crate) fn common_breakpoints(lists: &[&[f64]], end: f64) -> Vec<f64> {
    let mut all: Vec<f64> = lists
        .iter()
        .flat_map(|l| l.iter().copied())
        .filter(|&b| b > 0.0 && b < end)
        .collect();
    all.sort_by(f64::total_cmp);
    let mut out = vec![0.0];
    for b in all {
        if !same_point(*out.last().unwrap(), b) {
            out.push(b);
        }
    }
    if end > 0.0 {
        if same_point(*out.last().unwrap(), end) && out.len() > 1 {
            out.pop();
        }
        out.push(end);
    }
    out
}

/// Index of the block `(b[i], b[i+1]]` containing `x`, or `None` outside `(0, end]`.
pub(crate) fn locate(breakpoints: &[f64], x: f64) -> Option<usize> {
    let idx = breakpoints.partition_point(|&b| b < x);
    if idx == 0 || idx >= breakpoints.len() {
        None
    } else {
        Some(idx - 1)
    }
}

fn lengths(breakpoints: &[f64]) -> Vec<f64> {
    breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
}

fn midpoints(breakpoints: &[f64]) -> Vec<f64> {
    breakpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Grid `a / L` for `a = 0..=ceil(L * end)`.
fn uniform_grid(l: usize, end: f64) -> Vec<f64> {
    let cells = ceil_tol(l as f64 * end);
    (0..=cells).map(|a| a as f64 / l as f64).collect()
}

/// Piecewise constant function on `[0, ∞)` with blocks `(b[i], b[i+1]]`, zero beyond the last breakpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionRepr")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct StepFunctionRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepFunctionRepr> for StepFunction {
    type Error = Error;
    fn try_from(r: StepFunctionRepr) -> Result<Self> {
        StepFunction::new(r.breakpoints, r.values)
    }
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_breakpoints(&breakpoints)?;
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::invalid("step function needs one value per interval"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("step function values must be finite"));
        }
        Ok(StepFunction { breakpoints, values })
    }

    pub fn zero() -> Self {
        StepFunction {
            breakpoints: vec![0.0],
            values: vec![],
        }
    }

    /// `value` on `(0, len]`.
    pub fn constant(value: f64, len: f64) -> Result<Self> {
        StepFunction::new(vec![0.0, len], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_blocks(&self) -> usize {
        self.values.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        lengths(&self.breakpoints)
    }

    pub fn support_end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        locate(&self.breakpoints, x).map_or(0.0, |i| self.values[i])
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.lengths()).map(|(v, l)| v * l).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().zip(self.lengths()).map(|(v, l)| v.abs() * l).sum()
    }

    /// Values of `self` on the blocks of `breakpoints` (which must refine `self` up to its support).
    pub(crate) fn values_on(&self, breakpoints: &[f64]) -> Vec<f64> {
        midpoints(breakpoints).into_iter().map(|x| self.eval(x)).collect()
    }

    /// Average over the cells `((a-1)/L, a/L]`; the total integral is preserved.
    pub fn block_approximation(&self, l: usize) -> Result<StepFunction> {
        if l == 0 {
            return Err(Error::invalid("L must be at least 1"));
        }
        let grid = uniform_grid(l, self.support_end());
        let cells = grid.len() - 1;
        if cells == 0 {
            return Ok(StepFunction::zero());
        }
        let end = grid[cells];
        let fine = common_breakpoints(&[&self.breakpoints, &grid], end);
        let mut sums = vec![0.0; cells];
        for (x, len) in midpoints(&fine).into_iter().zip(lengths(&fine)) {
            let cell = locate(&grid, x).unwrap();
            sums[cell] += self.eval(x) * len;
        }
        let values = sums.iter().map(|s| s * l as f64).collect();
        StepFunction::new(grid, values)
    }
}

/// `∫_0^K |f1 - f2|`, exact over the common refinement.
pub fn l1_distance(f1: &StepFunction, f2: &StepFunction, k: f64) -> f64 {
    truncated_l1(f1, f2, k, f64::INFINITY)
}

/// `∫_0^K |f1 1{f1 <= M} - f2 1{f2 <= M}|`.
pub fn l1_distance_truncated(f1: &StepFunction, f2: &StepFunction, k: f64, m: f64) -> Result<f64> {
    if !(k > 0.0) || !(m > 0.0) {
        return Err(Error::invalid("K and M must be positive"));
    }
    Ok(truncated_l1(f1, f2, k, m))
}

fn truncated_l1(f1: &StepFunction, f2: &StepFunction, k: f64, m: f64) -> f64 {
    let end = k.min(f1.support_end().max(f2.support_end()));
    if !(end > 0.0) {
        return 0.0;
    }
    let cut = |v: f64| if v <= m { v } else { 0.0 };
    let fine = common_breakpoints(&[&f1.breakpoints, &f2.breakpoints], end);
    midpoints(&fine)
        .into_iter()
        .zip(lengths(&fine))
        .map(|(x, len)| (cut(f1.eval(x)) - cut(f2.eval(x))).abs() * len)
        .sum()
}

/// Symmetric block-constant kernel with arbitrary finite values, zero beyond the last breakpoint.
/// Also used as the integrand of block Poisson stochastic integrals.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockKernel {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    breakpoints: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl Serialize for BlockKernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KernelRepr {
            breakpoints: self.breakpoints.clone(),
            values: self.rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockKernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = KernelRepr::deserialize(d)?;
        BlockKernel::from_rows(r.breakpoints, r.values).map_err(serde::de::Error::custom)
    }
}

impl BlockKernel {
    /// `values` is row-major, `B x B`.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_breakpoints(&breakpoints)?;
        let b = breakpoints.len() - 1;
        if values.len() != b * b {
            return Err(Error::invalid(format!("kernel with {b} blocks needs {} values", b * b)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("kernel values must be finite"));
        }
        for i in 0..b {
            for j in 0..i {
                if values[i * b + j] != values[j * b + i] {
                    return Err(Error::invalid("kernel must be symmetric"));
                }
            }
        }
        Ok(BlockKernel { breakpoints, values })
    }

    pub fn from_rows(breakpoints: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let b = breakpoints.len().saturating_sub(1);
        if rows.len() != b || rows.iter().any(|r| r.len() != b) {
            return Err(Error::invalid("kernel values must be a square matrix matching the breakpoints"));
        }
        BlockKernel::new(breakpoints, rows.into_iter().flatten().collect())
    }

    pub fn zero() -> Self {
        BlockKernel {
            breakpoints: vec![0.0],
            values: vec![],
        }
    }

    pub fn constant(value: f64, len: f64) -> Result<Self> {
        BlockKernel::new(vec![0.0, len], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_blocks(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn lengths(&self) -> Vec<f64> {
        lengths(&self.breakpoints)
    }

    pub fn support_end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.num_blocks() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        let b = self.num_blocks();
        (0..b).map(|i| self.values[i * b..(i + 1) * b].to_vec()).collect()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match (locate(&self.breakpoints, x), locate(&self.breakpoints, y)) {
            (Some(i), Some(j)) => self.get(i, j),
            _ => 0.0,
        }
    }

    pub fn integral(&self) -> f64 {
        let len = self.lengths();
        let b = self.num_blocks();
        let mut s = 0.0;
        for i in 0..b {
            for j in 0..b {
                s += self.values[i * b + j] * len[i] * len[j];
            }
        }
        s
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<BlockKernel> {
        BlockKernel::new(self.breakpoints.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Values on the blocks of a refining partition.
    pub(crate) fn values_on(&self, breakpoints: &[f64]) -> Vec<f64> {
        let idx: Vec<Option<usize>> = midpoints(breakpoints)
            .into_iter()
            .map(|x| locate(&self.breakpoints, x))
            .collect();
        let b = self.num_blocks();
        let mut out = Vec::with_capacity(idx.len() * idx.len());
        for &i in &idx {
            for &j in &idx {
                out.push(match (i, j) {
                    (Some(i), Some(j)) => self.values[i * b + j],
                    _ => 0.0,
                });
            }
        }
        out
    }

    /// Re-express on a refining partition.
    pub fn refined(&self, breakpoints: &[f64]) -> Result<BlockKernel> {
        BlockKernel::new(breakpoints.to_vec(), self.values_on(breakpoints))
    }

    /// Restriction to `[0, min(K, support_end)]²`.
    pub fn window(&self, k: f64) -> BlockKernel {
        let end = k.min(self.support_end());
        if !(end > 0.0) {
            return BlockKernel::zero();
        }
        let bp = common_breakpoints(&[&self.breakpoints], end);
        BlockKernel {
            values: self.values_on(&bp),
            breakpoints: bp,
        }
    }

    /// Row integrals `x ↦ ∫ W(x, y) dy`.
    pub fn degree_function(&self) -> StepFunction {
        let len = self.lengths();
        let b = self.num_blocks();
        let values = (0..b)
            .map(|i| (0..b).map(|j| self.values[i * b + j] * len[j]).sum())
            .collect();
        StepFunction {
            breakpoints: self.breakpoints.clone(),
            values,
        }
    }

    /// `½ ∫∫_{[K,∞)²} W`, splitting the block containing `K` exactly.
    pub fn tail_mass(&self, k: f64) -> f64 {
        let b = self.num_blocks();
        let over: Vec<f64> = self
            .breakpoints
            .windows(2)
            .map(|w| (w[1] - w[0].max(k)).max(0.0))
            .collect();
        let mut s = 0.0;
        for i in 0..b {
            if over[i] == 0.0 {
                continue;
            }
            for j in 0..b {
                s += self.values[i * b + j] * over[i] * over[j];
            }
        }
        0.5 * s
    }

    /// Cell averages over the grid `((a-1)/L, a/L]²`.
    pub fn block_approximation(&self, l: usize) -> Result<BlockKernel> {
        if l == 0 {
            return Err(Error::invalid("L must be at least 1"));
        }
        let grid = uniform_grid(l, self.support_end());
        let cells = grid.len() - 1;
        if cells == 0 {
            return Ok(BlockKernel::zero());
        }
        if cells > MAX_DENSE_BLOCKS {
            return Err(Error::BlockCountExceeded {
                blocks: cells,
                limit: MAX_DENSE_BLOCKS,
            });
        }
        let fine = common_breakpoints(&[&self.breakpoints, &grid], grid[cells]);
        let cell_of: Vec<usize> = midpoints(&fine).into_iter().map(|x| locate(&grid, x).unwrap()).collect();
        let len = lengths(&fine);
        let vals = self.values_on(&fine);
        let f = fine.len() - 1;
        let mut sums = vec![0.0; cells * cells];
        for i in 0..f {
            for j in 0..f {
                sums[cell_of[i] * cells + cell_of[j]] += vals[i * f + j] * len[i] * len[j];
            }
        }
        let scale = (l * l) as f64;
        // symmetrize away summation-order noise
        for a in 0..cells {
            for c in 0..a {
                let m = 0.5 * (sums[a * cells + c] + sums[c * cells + a]);
                sums[a * cells + c] = m;
                sums[c * cells + a] = m;
            }
        }
        BlockKernel::new(grid, sums.into_iter().map(|s| s * scale).collect())
    }
}

/// `∫∫_{[0,K]²} |W1 - W2|` over the common refinement.
pub fn l1_distance_kernel(w1: &BlockKernel, w2: &BlockKernel, k: f64) -> f64 {
    let (d, bp) = difference_on_window(w1, w2, k);
    let len = lengths(&bp);
    let b = len.len();
    let mut s = 0.0;
    for i in 0..b {
        for j in 0..b {
            s += d[i * b + j].abs() * len[i] * len[j];
        }
    }
    s
}

/// Values of `w1 - w2` (row-major) on the common refinement of the window `[0, K]`.
pub(crate) fn difference_on_window(w1: &BlockKernel, w2: &BlockKernel, k: f64) -> (Vec<f64>, Vec<f64>) {
    let end = k.min(w1.support_end().max(w2.support_end()));
    if !(end > 0.0) {
        return (vec![], vec![0.0]);
    }
    let bp = common_breakpoints(&[&w1.breakpoints, &w2.breakpoints], end);
    let a = w1.values_on(&bp);
    let b = w2.values_on(&bp);
    (a.iter().zip(&b).map(|(x, y)| x - y).collect(), bp)
}

#[derive(Clone, Debug)]
enum Repr {
    Dense(BlockKernel),
    Empirical { graph: Arc<Graph>, r_n: f64 },
}

/// Symmetric `[0,1]`-valued block kernel on `[0, ∞)²`.
///
/// Empirical graphons of large graphs are kept in graph form and only densified
/// on bounded windows.
#[derive(Clone, Debug)]
pub struct StepGraphon {
    repr: Repr,
}

impl StepGraphon {
    pub fn new(breakpoints: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        StepGraphon::from_kernel(BlockKernel::from_rows(breakpoints, rows)?)
    }

    pub fn from_kernel(kernel: BlockKernel) -> Result<Self> {
        if kernel.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("graphon values must lie in [0, 1]"));
        }
        Ok(StepGraphon {
            repr: Repr::Dense(kernel),
        })
    }

    pub fn zero() -> Self {
        StepGraphon {
            repr: Repr::Dense(BlockKernel::zero()),
        }
    }

    /// `b` on `[0, len]²`.
    pub fn constant(b: f64, len: f64) -> Result<Self> {
        StepGraphon::from_kernel(BlockKernel::constant(b, len)?)
    }

    /// The empirical graphon: block `(i, j)` of width `1/r_n` carries `a_ij` in canonical labeling.
    pub fn empirical(graph: Arc<Graph>, r_n: f64) -> Result<Self> {
        if !(r_n > 0.0 && r_n.is_finite()) {
            return Err(Error::invalid("r_n must be positive"));
        }
        Ok(StepGraphon {
            repr: Repr::Empirical { graph, r_n },
        })
    }

    pub fn support_end(&self) -> f64 {
        match &self.repr {
            Repr::Dense(k) => k.support_end(),
            Repr::Empirical { graph, r_n } => graph.n() as f64 / r_n,
        }
    }

    pub fn num_blocks(&self) -> usize {
        match &self.repr {
            Repr::Dense(k) => k.num_blocks(),
            Repr::Empirical { graph, .. } => graph.n(),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match &self.repr {
            Repr::Dense(k) => k.eval(x, y),
            Repr::Empirical { graph, r_n } => {
                let n = graph.n();
                let (i, j) = (ceil_tol(x * r_n), ceil_tol(y * r_n));
                if i == 0 || j == 0 || i > n || j > n {
                    0.0
                } else {
                    f64::from(u8::from(graph.adjacent(i - 1, j - 1)))
                }
            }
        }
    }

    /// Dense kernel on the whole support.
    pub fn to_kernel(&self) -> Result<BlockKernel> {
        self.window(f64::INFINITY)
    }

    /// Dense kernel restricted to `[0, min(K, support_end)]²`.
    pub fn window(&self, k: f64) -> Result<BlockKernel> {
        match &self.repr {
            Repr::Dense(kernel) => Ok(kernel.window(k)),
            Repr::Empirical { graph, r_n } => {
                let n = graph.n();
                let m = n.min(ceil_tol(k * r_n));
                if m == 0 {
                    return Ok(BlockKernel::zero());
                }
                if m > MAX_DENSE_BLOCKS {
                    return Err(Error::BlockCountExceeded {
                        blocks: m,
                        limit: MAX_DENSE_BLOCKS,
                    });
                }
                let mut bp: Vec<f64> = (0..=m).map(|i| i as f64 / r_n).collect();
                if k < bp[m] && !same_point(k, bp[m]) {
                    bp[m] = k;
                }
                let mut values = vec![0.0; m * m];
                for u in 0..m {
                    for &v in graph.neighbors(u) {
                        let v = v as usize;
                        if v < m {
                            values[u * m + v] = 1.0;
                        }
                    }
                }
                Ok(BlockKernel {
                    breakpoints: bp,
                    values,
                })
            }
        }
    }

    /// `∫∫ W`.
    pub fn integral(&self) -> f64 {
        2.0 * self.tail_mass(0.0)
    }

    /// `x ↦ ∫ W(x, y) dy`. For an empirical graphon this is `d_{⌈x r_n⌉} / r_n`.
    pub fn degree_function(&self) -> StepFunction {
        match &self.repr {
            Repr::Dense(k) => k.degree_function(),
            Repr::Empirical { graph, r_n } => {
                let mut breakpoints = vec![0.0];
                let mut values = Vec::new();
                let degrees = graph.degrees();
                let n = degrees.len();
                let mut v = 0;
                while v < n {
                    let d = degrees[v];
                    let mut end = v + 1;
                    while end < n && degrees[end] == d {
                        end += 1;
                    }
                    breakpoints.push(end as f64 / r_n);
                    values.push(f64::from(d) / r_n);
                    v = end;
                }
                StepFunction { breakpoints, values }
            }
        }
    }

    /// `½ ∫∫_{[K,∞)²} W`.
    pub fn tail_mass(&self, k: f64) -> f64 {
        match &self.repr {
            Repr::Dense(kernel) => kernel.tail_mass(k),
            Repr::Empirical { graph, r_n } => {
                let n = graph.n();
                // first block reaching past K; it may be cut by K
                let mut first = ((k * r_n).floor().max(0.0) as usize).saturating_sub(2).min(n);
                while first < n && (first + 1) as f64 / r_n <= k {
                    first += 1;
                }
                if first == n {
                    return 0.0;
                }
                let partial = if first as f64 / r_n >= k {
                    None
                } else {
                    Some((first + 1) as f64 / r_n - k)
                };
                let width = 1.0 / r_n;
                let mut full = 0u64;
                let mut cut = 0u64;
                for &(u, v) in graph.edges() {
                    let (u, v) = (u as usize, v as usize);
                    if u < first || v < first {
                        continue;
                    }
                    if partial.is_some() && (u == first || v == first) {
                        cut += 1;
                    } else {
                        full += 1;
                    }
                }
                full as f64 * width * width + cut as f64 * partial.unwrap_or(0.0) * width
            }
        }
    }

    /// Cell averages on the grid of mesh `1/L`.
    pub fn block_approximation(&self, l: usize) -> Result<StepGraphon> {
        let k = self.to_kernel()?.block_approximation(l)?;
        let values = k.values.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        StepGraphon::from_kernel(BlockKernel::new(k.breakpoints, values)?)
    }

    pub fn as_empirical(&self) -> Option<(&Graph, f64)> {
        match &self.repr {
            Repr::Empirical { graph, r_n } => Some((graph, *r_n)),
            Repr::Dense(_) => None,
        }
    }
}

impl PartialEq for StepGraphon {
    fn eq(&self, other: &Self) -> bool {
        match (self.to_kernel(), other.to_kernel()) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }
}

impl Serialize for StepGraphon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_kernel()
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepGraphon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let k = BlockKernel::deserialize(d)?;
        StepGraphon::from_kernel(k).map_err(serde::de::Error::custom)
    }
}

/// Convenience wrapper around [`StepGraphon::empirical`].
pub fn empirical_graphon(g: &Graph, r_n: f64) -> Result<StepGraphon> {
    StepGraphon::empirical(Arc::new(g.clone()), r_n)
}
