//! Deterministic and random graph families.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Family kind and its parameters. Serialized as `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum FamilyKind {
    Complete { n: usize },
    Path { n: usize },
    Cycle { n: usize },
    /// `K_{1,n}`: one center and `n` leaves.
    Star { n: usize },
    /// `n` disjoint copies of the `size`-star (`size` defaults to `n`).
    /// Centers come first, then the leaves of each center in turn.
    DisjointStars {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        size: Option<usize>,
    },
    BipartiteRandom { left: usize, right: usize, q: f64 },
    ErdosRenyi { n: usize, q: f64 },
    /// Stochastic block model with contiguous blocks.
    Sbm { sizes: Vec<usize>, probs: Vec<Vec<f64>> },
    /// `K_{1,n}` together with `n` disjoint edges.
    StarPlusMatching { n: usize },
    /// `n` disjoint `n`-stars, a clique on the centers and a disjoint path on `n²` vertices.
    #[serde(rename = "coexistence-1")]
    Coexistence1 { n: usize },
    /// Multi-scale stars plus sparse Erdős–Rényi graphs on the centers.
    #[serde(rename = "coexistence-2")]
    Coexistence2 { n: usize },
    /// Two dense random graphs whose star attachments switch with the parity of `n`.
    Nonconvergent { n: usize },
    EdgeListFile { path: PathBuf },
}

/// A graph family together with the seed used by random kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFamily {
    #[serde(flatten)]
    pub kind: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GraphFamily {
    pub fn new(kind: FamilyKind) -> Self {
        GraphFamily { kind, seed: None }
    }

    pub fn seeded(kind: FamilyKind, seed: u64) -> Self {
        GraphFamily {
            kind,
            seed: Some(seed),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(
            self.kind,
            FamilyKind::BipartiteRandom { .. }
                | FamilyKind::ErdosRenyi { .. }
                | FamilyKind::Sbm { .. }
                | FamilyKind::Coexistence2 { .. }
                | FamilyKind::Nonconvergent { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::invalid(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        let prob = |name: &str, q: f64| {
            if (0.0..=1.0).contains(&q) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name}={q} is not a probability")))
            }
        };
        if self.is_random() && self.seed.is_none() {
            return Err(Error::invalid("random graph family requires a seed"));
        }
        match &self.kind {
            FamilyKind::Complete { n }
            | FamilyKind::Path { n }
            | FamilyKind::Star { n }
            | FamilyKind::StarPlusMatching { n }
            | FamilyKind::Coexistence1 { n }
            | FamilyKind::Coexistence2 { n }
            | FamilyKind::Nonconvergent { n } => positive("n", *n),
            FamilyKind::Cycle { n } => {
                if *n < 3 {
                    Err(Error::invalid("a cycle needs at least 3 vertices"))
                } else {
                    Ok(())
                }
            }
            FamilyKind::DisjointStars { n, size } => {
                positive("n", *n)?;
                positive("size", size.unwrap_or(*n))
            }
            FamilyKind::BipartiteRandom { left, right, q } => {
                positive("left", *left)?;
                positive("right", *right)?;
                prob("q", *q)
            }
            FamilyKind::ErdosRenyi { n, q } => {
                positive("n", *n)?;
                prob("q", *q)
            }
            FamilyKind::Sbm { sizes, probs } => {
                if sizes.is_empty() {
                    return Err(Error::invalid("SBM needs at least one block"));
                }
                for &s in sizes {
                    positive("block size", s)?;
                }
                if probs.len() != sizes.len() || probs.iter().any(|r| r.len() != sizes.len()) {
                    return Err(Error::invalid("SBM probability matrix must be B x B"));
                }
                for (i, row) in probs.iter().enumerate() {
                    for (j, &q) in row.iter().enumerate() {
                        prob("block probability", q)?;
                        if q != probs[j][i] {
                            return Err(Error::invalid("SBM probability matrix must be symmetric"));
                        }
                    }
                }
                Ok(())
            }
            FamilyKind::EdgeListFile { .. } => Ok(()),
        }
    }

    /// Construct the graph. Random kinds are a pure function of `(kind, seed)`.
    pub fn build(&self) -> Result<Graph> {
        self.validate()?;
        let seed = self.seed.unwrap_or(0);
        let mut b = Builder::default();
        match &self.kind {
            FamilyKind::Complete { n } => {
                let vs = b.add_vertices(*n);
                b.clique(vs);
            }
            FamilyKind::Path { n } => {
                let vs = b.add_vertices(*n);
                b.path(vs);
            }
            FamilyKind::Cycle { n } => {
                let vs = b.add_vertices(*n);
                b.path(vs.clone());
                b.edge(vs.end - 1, vs.start);
            }
            FamilyKind::Star { n } => {
                let c = b.add_vertices(1).start;
                let leaves = b.add_vertices(*n);
                b.star(c, leaves);
            }
            FamilyKind::DisjointStars { n, size } => {
                let size = size.unwrap_or(*n);
                b.disjoint_stars(*n, size);
            }
            FamilyKind::BipartiteRandom { left, right, q } => {
                let l = b.add_vertices(*left);
                let r = b.add_vertices(*right);
                b.random_bipartite(seed, 0, l, r, *q);
            }
            FamilyKind::ErdosRenyi { n, q } => {
                let vs = b.add_vertices(*n);
                b.random_within(seed, 0, vs, *q);
            }
            FamilyKind::Sbm { sizes, probs } => {
                let blocks: Vec<_> = sizes.iter().map(|&s| b.add_vertices(s)).collect();
                let nb = blocks.len() as u64;
                for i in 0..blocks.len() {
                    b.random_within(seed, i as u64 * nb + i as u64, blocks[i].clone(), probs[i][i]);
                    for j in i + 1..blocks.len() {
                        let tag = i as u64 * nb + j as u64;
                        b.random_bipartite(seed, tag, blocks[i].clone(), blocks[j].clone(), probs[i][j]);
                    }
                }
            }
            FamilyKind::StarPlusMatching { n } => {
                let c = b.add_vertices(1).start;
                let leaves = b.add_vertices(*n);
                b.star(c, leaves);
                for _ in 0..*n {
                    let e = b.add_vertices(2);
                    b.edge(e.start, e.start + 1);
                }
            }
            FamilyKind::Coexistence1 { n } => {
                let centers = b.disjoint_stars(*n, *n);
                b.clique(centers);
                let path = b.add_vertices(n * n);
                b.path(path);
            }
            FamilyKind::Coexistence2 { n } => coexistence2(&mut b, seed, *n),
            FamilyKind::Nonconvergent { n } => {
                let first = b.add_vertices(*n);
                let second = b.add_vertices(*n);
                b.random_within(seed, 0, first.clone(), 0.25);
                b.random_within(seed, 1, second.clone(), 0.5);
                let centers = if n % 2 == 1 { first } else { second };
                for c in centers {
                    let leaves = b.add_vertices(*n);
                    b.star(c, leaves);
                }
            }
            FamilyKind::EdgeListFile { path } => return super::read_edge_list(path),
        }
        Graph::from_edges(b.n, b.edges)
    }
}

/// Number of scales for the multi-scale preset: the least `S >= 1` with `4^S >= n`.
pub(crate) fn coexistence2_scales(n: usize) -> u32 {
    let mut s = 1;
    while 4usize.pow(s) < n {
        s += 1;
    }
    s
}

/// Scale `s` has `4^s n` centers carrying `round(n^2 / 4^s)` leaves in total
/// (spread as evenly as possible) and an Erdős–Rényi graph `G(4^s n, 32^-s)` on
/// the centers. Centers of all scales come first, scale by scale, then leaves.
fn coexistence2(b: &mut Builder, seed: u64, n: usize) {
    let scales = coexistence2_scales(n);
    let mut center_blocks = Vec::new();
    for s in 1..=scales {
        center_blocks.push(b.add_vertices(4usize.pow(s) * n));
    }
    for (i, centers) in center_blocks.into_iter().enumerate() {
        let s = i as u32 + 1;
        let q = 32f64.powi(-(s as i32));
        b.random_within(seed, s as u64, centers.clone(), q);
        let m = centers.len();
        let total_leaves = ((n * n) as f64 / 4f64.powi(s as i32)).round() as usize;
        let (base, extra) = (total_leaves / m, total_leaves % m);
        for (k, c) in centers.enumerate() {
            let count = base + usize::from(k < extra);
            if count > 0 {
                let leaves = b.add_vertices(count);
                b.star(c, leaves);
            }
        }
    }
}

#[derive(Default)]
struct Builder {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Builder {
    fn add_vertices(&mut self, count: usize) -> std::ops::Range<usize> {
        let start = self.n;
        self.n += count;
        start..self.n
    }

    fn edge(&mut self, u: usize, v: usize) {
        self.edges.push((u, v));
    }

    fn clique(&mut self, vs: std::ops::Range<usize>) {
        for u in vs.clone() {
            for v in u + 1..vs.end {
                self.edges.push((u, v));
            }
        }
    }

    fn path(&mut self, vs: std::ops::Range<usize>) {
        for u in vs.start..vs.end.saturating_sub(1) {
            self.edges.push((u, u + 1));
        }
    }

    fn star(&mut self, center: usize, leaves: std::ops::Range<usize>) {
        for l in leaves {
            self.edges.push((center, l));
        }
    }

    /// `count` stars of `size` leaves; returns the range of centers.
    fn disjoint_stars(&mut self, count: usize, size: usize) -> std::ops::Range<usize> {
        let centers = self.add_vertices(count);
        for c in centers.clone() {
            let leaves = self.add_vertices(size);
            self.star(c, leaves);
        }
        centers
    }

    /// Independent edges with probability `q` between every pair inside `vs`.
    ///
    /// Row `u` draws geometric gaps from its own stream keyed by `(seed, tag, u)`,
    /// so rows are independent of each other and of generation order.
    fn random_within(&mut self, seed: u64, tag: u64, vs: std::ops::Range<usize>, q: f64) {
        for u in vs.clone() {
            self.random_row(seed, tag, u, u + 1..vs.end, q);
        }
    }

    fn random_bipartite(
        &mut self,
        seed: u64,
        tag: u64,
        left: std::ops::Range<usize>,
        right: std::ops::Range<usize>,
        q: f64,
    ) {
        for u in left {
            self.random_row(seed, tag | (1 << 63), u, right.clone(), q);
        }
    }

    fn random_row(&mut self, seed: u64, tag: u64, u: usize, cols: std::ops::Range<usize>, q: f64) {
        if q <= 0.0 || cols.is_empty() {
            return;
        }
        if q >= 1.0 {
            for v in cols {
                self.edges.push((u, v));
            }
            return;
        }
        let mut stream = Stream::new(seed, &[tag, u as u64]);
        let log_miss = (-q).ln_1p();
        let len = cols.len() as f64;
        let mut pos = -1.0f64;
        loop {
            let gap = (stream.uniform_open0().ln() / log_miss).floor();
            pos += gap + 1.0;
            if pos >= len {
                break;
            }
            self.edges.push((u, cols.start + pos as usize));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{count_subgraph, Motif};

    fn build(kind: FamilyKind) -> Graph {
        GraphFamily::new(kind).build().unwrap()
    }

    #[test]
    fn deterministic_families() {
        let g = build(FamilyKind::Complete { n: 4 });
        assert_eq!((g.n(), g.num_edges()), (4, 6));
        let g = build(FamilyKind::DisjointStars { n: 3, size: None });
        assert_eq!((g.n(), g.num_edges()), (12, 9));
        assert_eq!(&g.degrees()[..4], &[3, 3, 3, 1]);
        let g = build(FamilyKind::Cycle { n: 10 });
        assert!(g.degrees().iter().all(|&d| d == 2));
        let g = build(FamilyKind::Path { n: 3 });
        assert_eq!(g.num_edges(), 2);
        let g = build(FamilyKind::Star { n: 5 });
        assert_eq!(g.degrees(), &[5, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn coexistence1_counts() {
        let n = 6;
        let g = build(FamilyKind::Coexistence1 { n });
        assert_eq!(g.n(), 2 * n * n + n);
        assert_eq!(g.num_edges(), n * (n - 1) / 2 + n * n + n * n - 1);
        // centers: n leaves + (n - 1) clique neighbors
        assert!(g.degrees()[..n].iter().all(|&d| d as usize == 2 * n - 1));
    }

    #[test]
    fn star_plus_matching_counts() {
        let g = build(FamilyKind::StarPlusMatching { n: 9 });
        assert_eq!((g.n(), g.num_edges()), (28, 18));
        let t = g.induced_truncation(1.0, 3.0).unwrap();
        assert_eq!(t.num_edges(), 9);
        assert_eq!(count_subgraph(&t, Motif::TwoStar), 0);
    }

    #[test]
    fn random_kinds_need_seed() {
        let f = GraphFamily::new(FamilyKind::ErdosRenyi { n: 10, q: 0.5 });
        assert!(f.build().is_err());
    }

    #[test]
    fn erdos_renyi_is_seed_deterministic() {
        let f = GraphFamily::seeded(FamilyKind::ErdosRenyi { n: 100, q: 0.5 }, 7);
        let a = f.build().unwrap();
        let b = f.build().unwrap();
        assert_eq!(a, b);
        let c = GraphFamily::seeded(FamilyKind::ErdosRenyi { n: 100, q: 0.5 }, 8)
            .build()
            .unwrap();
        assert_ne!(a.edges(), c.edges());
        // 4950 pairs, sd ~ 35
        let m = a.num_edges() as f64;
        assert!((m - 2475.0).abs() < 200.0, "{m}");
    }

    #[test]
    fn sparse_erdos_renyi_edge_count() {
        let n = 4000;
        let q = 1e-3;
        let g = GraphFamily::seeded(FamilyKind::ErdosRenyi { n, q }, 3).build().unwrap();
        let expected = q * (n * (n - 1) / 2) as f64;
        let sd = expected.sqrt();
        assert!((g.num_edges() as f64 - expected).abs() < 5.0 * sd);
    }

    #[test]
    fn invalid_parameters() {
        for kind in [
            FamilyKind::ErdosRenyi { n: 5, q: 1.5 },
            FamilyKind::Complete { n: 0 },
            FamilyKind::Cycle { n: 2 },
            FamilyKind::Sbm {
                sizes: vec![2, 2],
                probs: vec![vec![0.1, 0.2], vec![0.3, 0.1]],
            },
        ] {
            assert!(GraphFamily::seeded(kind, 1).build().is_err());
        }
    }

    #[test]
    fn sbm_block_structure() {
        let f = GraphFamily::seeded(
            FamilyKind::Sbm {
                sizes: vec![30, 20],
                probs: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            1,
        );
        let g = f.build().unwrap();
        assert_eq!(g.num_edges(), 30 * 29 / 2 + 20 * 19 / 2);
    }

    #[test]
    fn nonconvergent_switches_star_side() {
        for n in [9usize, 10] {
            let g = GraphFamily::seeded(FamilyKind::Nonconvergent { n }, 5)
                .build()
                .unwrap();
            assert_eq!(g.n(), 2 * n + n * n);
            // the n highest-degree vertices are the star centers
            let centers: Vec<usize> = (0..n).map(|v| g.original_label(v)).collect();
            let expected_side = if n % 2 == 1 { 0..n } else { n..2 * n };
            assert!(centers.iter().all(|c| expected_side.contains(c)), "{centers:?}");
        }
    }

    #[test]
    fn coexistence2_leaf_mass() {
        let n = 20;
        let g = GraphFamily::seeded(FamilyKind::Coexistence2 { n }, 1).build().unwrap();
        let scales = coexistence2_scales(n);
        assert_eq!(scales, 3);
        let centers: usize = (1..=scales).map(|s| 4usize.pow(s) * n).sum();
        let leaves: usize = (1..=scales)
            .map(|s| ((n * n) as f64 / 4f64.powi(s as i32)).round() as usize)
            .sum();
        assert_eq!(g.n(), centers + leaves);
    }

    #[test]
    fn family_json_shape() {
        let f = GraphFamily::seeded(FamilyKind::ErdosRenyi { n: 10, q: 0.5 }, 3);
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"kind": "erdos-renyi", "params": {"n": 10, "q": 0.5}, "seed": 3})
        );
        let back: GraphFamily = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
        let c: GraphFamily =
            serde_json::from_str(r#"{"kind":"coexistence-1","params":{"n":4}}"#).unwrap();
        assert_eq!(c.kind, FamilyKind::Coexistence1 { n: 4 });
    }
}
