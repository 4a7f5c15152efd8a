//! Simple undirected graphs under the canonical degree-sorted labeling.

mod edgelist;
mod family;
mod motif;

pub use edgelist::{parse_edge_list, read_edge_list, write_edge_list};
pub use family::{FamilyKind, GraphFamily};
pub use motif::{count_subgraph, Motif};

use serde::Serialize;

use crate::error::{Error, Result};

/// A finite simple undirected graph.
///
/// Vertices are relabeled on construction so that degrees are non-increasing in
/// the label, ties broken by ascending original index. The original label of
/// canonical vertex `v` is `label_order()[v]`. Adjacency is kept in CSR form with
/// sorted neighbor lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    #[serde(skip)]
    offsets: Vec<usize>,
    #[serde(skip)]
    neighbors: Vec<u32>,
    degrees: Vec<u32>,
    label_order: Vec<u32>,
}

impl Graph {
    /// Build a graph from an edge list in original labels.
    ///
    /// Self-loops, out-of-range endpoints and duplicate edges (in either
    /// orientation) are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::InstanceTooLarge {
                size: n,
                limit: u32::MAX as usize,
            });
        }
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::IndexOutOfRange {
                    index: u.max(v),
                    len: n,
                });
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            list.push(if u < v {
                (u as u32, v as u32)
            } else {
                (v as u32, u as u32)
            });
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::canonicalize(n, list))
    }

    /// Relabel a validated, deduplicated edge list into canonical order.
    fn canonicalize(n: usize, edges: Vec<(u32, u32)>) -> Graph {
        let mut deg = vec![0u32; n];
        for &(u, v) in &edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        // stable: equal degrees keep ascending original index
        order.sort_by(|&a, &b| deg[b as usize].cmp(&deg[a as usize]));
        let mut rank = vec![0u32; n];
        for (canon, &orig) in order.iter().enumerate() {
            rank[orig as usize] = canon as u32;
        }
        let mut relabeled: Vec<(u32, u32)> = edges
            .into_iter()
            .map(|(u, v)| {
                let (a, b) = (rank[u as usize], rank[v as usize]);
                if a < b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        relabeled.sort_unstable();
        let degrees: Vec<u32> = order.iter().map(|&o| deg[o as usize]).collect();
        Self::from_canonical_parts(n, relabeled, degrees, order)
    }

    fn from_canonical_parts(
        n: usize,
        edges: Vec<(u32, u32)>,
        degrees: Vec<u32>,
        label_order: Vec<u32>,
    ) -> Graph {
        let mut offsets = vec![0usize; n + 1];
        for (v, &d) in degrees.iter().enumerate() {
            offsets[v + 1] = offsets[v] + d as usize;
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; 2 * edges.len()];
        for &(u, v) in &edges {
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Graph {
            n,
            edges,
            offsets,
            neighbors,
            degrees,
            label_order,
        }
    }

    /// Graph with `n` vertices and no edges.
    pub fn empty(n: usize) -> Graph {
        Self::from_canonical_parts(n, Vec::new(), vec![0; n], (0..n as u32).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges `(u, v)` with `u < v` in canonical labels, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.degrees[v]
    }

    /// Degrees in canonical order (non-increasing).
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.first().copied().unwrap_or(0)
    }

    /// Sorted neighbor list of canonical vertex `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.degrees[u] <= self.degrees[v] {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).binary_search(&(b as u32)).is_ok()
    }

    /// Canonical label -> original label.
    pub fn label_order(&self) -> &[u32] {
        &self.label_order
    }

    pub fn original_label(&self, v: usize) -> usize {
        self.label_order[v] as usize
    }

    /// Edges in original labels, each as `(min, max)`, sorted.
    pub fn original_edges(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self
            .edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (self.label_order[u as usize], self.label_order[v as usize]);
                (a.min(b), a.max(b))
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Re-run canonicalization on this graph's own labels. Returns an equal graph.
    pub fn recanonicalized(&self) -> Graph {
        let g = Self::canonicalize(self.n, self.edges.clone());
        let label_order = g
            .label_order
            .iter()
            .map(|&c| self.label_order[c as usize])
            .collect();
        Graph { label_order, ..g }
    }

    /// The induced subgraph `G[V_M]` on `V_M = {v : d_v <= M r_n}`.
    ///
    /// Degrees are recomputed in the subgraph and the result is canonicalized;
    /// its `label_order` refers to original labels of `self`.
    pub fn induced_truncation(&self, m: f64, r_n: f64) -> Result<Graph> {
        if !(m > 0.0) || !(r_n > 0.0) {
            return Err(Error::invalid(format!(
                "truncation needs M > 0 and r_n > 0 (got M={m}, r_n={r_n})"
            )));
        }
        let keep: Vec<bool> = self.degrees.iter().map(|&d| within_truncation(d, m, r_n)).collect();
        Ok(self.induced(&keep))
    }

    /// Induced subgraph on the canonical vertices with `keep[v] == true`.
    pub fn induced(&self, keep: &[bool]) -> Graph {
        let mut sub_index = vec![u32::MAX; self.n];
        let mut kept = Vec::new();
        for v in 0..self.n {
            if keep[v] {
                sub_index[v] = kept.len() as u32;
                kept.push(v as u32);
            }
        }
        let edges: Vec<(u32, u32)> = self
            .edges
            .iter()
            .filter(|&&(u, v)| keep[u as usize] && keep[v as usize])
            .map(|&(u, v)| (sub_index[u as usize], sub_index[v as usize]))
            .collect();
        let sub = Self::canonicalize(kept.len(), edges);
        let label_order = sub
            .label_order
            .iter()
            .map(|&s| self.label_order[kept[s as usize] as usize])
            .collect();
        Graph { label_order, ..sub }
    }

    /// `d_{⌈K r_n⌉} / r_n` under the canonical labeling (1-indexed position).
    pub fn degree_decay_diagnostic(&self, r_n: f64, k: f64) -> Result<f64> {
        if !(r_n > 0.0) || !(k > 0.0) {
            return Err(Error::invalid(format!(
                "degree decay needs r_n > 0 and K > 0 (got r_n={r_n}, K={k})"
            )));
        }
        let index = (k * r_n).ceil() as usize;
        if index == 0 || index > self.n {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.n,
            });
        }
        Ok(self.degrees[index - 1] as f64 / r_n)
    }
}

/// `d <= M r_n`, with a relative slack of 1e-12 so that exact ties such as
/// `M = 0.3, p = 0.1` survive rounding in `M * (1 / p)`.
pub fn within_truncation(d: u32, m: f64, r_n: f64) -> bool {
    f64::from(d) <= m * r_n * (1.0 + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            Graph::from_edges(3, [(0, 0)]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Graph::from_edges(3, [(0, 1), (1, 0)]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Graph::from_edges(3, [(0, 3)]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn canonical_order_sorts_degrees_with_stable_ties() {
        // star centered at original vertex 3 plus an isolated vertex 0
        let g = Graph::from_edges(5, [(3, 1), (3, 2), (3, 4)]).unwrap();
        assert_eq!(g.degrees(), &[3, 1, 1, 1, 0]);
        assert_eq!(g.label_order(), &[3, 1, 2, 4, 0]);
        assert_eq!(g.original_edges(), vec![(1, 3), (2, 3), (3, 4)]);
        assert!(g.adjacent(0, 2));
        assert!(!g.adjacent(1, 2));
    }

    #[test]
    fn recanonicalize_is_identity() {
        let g = Graph::from_edges(6, [(5, 1), (5, 2), (1, 2), (0, 4)]).unwrap();
        let h = g.recanonicalized();
        assert_eq!(g, h);
    }

    #[test]
    fn complete_graph_degrees() {
        let g = k(4);
        assert_eq!(g.num_edges(), 6);
        assert_eq!(g.degrees(), &[3, 3, 3, 3]);
    }

    #[test]
    fn truncation_removes_star_center() {
        let n = 16;
        let g = Graph::from_edges(n + 1, (1..=n).map(|v| (0, v))).unwrap();
        let t = g.induced_truncation(1.0, (n as f64).sqrt()).unwrap();
        assert_eq!(t.num_edges(), 0);
        assert_eq!(t.n(), n);
    }

    #[test]
    fn truncation_above_max_degree_is_identity() {
        let g = Graph::from_edges(6, [(5, 1), (5, 2), (1, 2), (0, 4)]).unwrap();
        let t = g.induced_truncation(g.max_degree() as f64 / 2.0, 2.0).unwrap();
        assert_eq!(t, g);
    }

    #[test]
    fn degree_decay() {
        assert_eq!(k(4).degree_decay_diagnostic(2.0, 1.0).unwrap(), 1.5);
        let cycle = Graph::from_edges(100, (0..100).map(|v| (v, (v + 1) % 100))).unwrap();
        assert!((cycle.degree_decay_diagnostic(10.0, 2.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(Graph::empty(10).degree_decay_diagnostic(3.0, 1.5).unwrap(), 0.0);
        assert!(matches!(
            k(4).degree_decay_diagnostic(3.0, 2.0),
            Err(Error::IndexOutOfRange { index: 6, len: 4 })
        ));
    }
}

