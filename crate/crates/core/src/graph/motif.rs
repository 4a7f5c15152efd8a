use serde::{Deserialize, Serialize};

use super::Graph;

/// Small subgraphs whose copy counts drive the low-order moments of `T_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motif {
    Edge,
    /// Path on three vertices, `K_{1,2}`.
    TwoStar,
    Triangle,
    /// Path with three edges (four vertices).
    Path3,
    /// `K_{1,3}`.
    ThreeStar,
}

impl std::str::FromStr for Motif {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge" => Ok(Motif::Edge),
            "two_star" | "two-star" => Ok(Motif::TwoStar),
            "triangle" => Ok(Motif::Triangle),
            "path3" => Ok(Motif::Path3),
            "three_star" | "three-star" => Ok(Motif::ThreeStar),
            other => Err(format!("unknown motif `{other}`")),
        }
    }
}

fn choose2(d: u64) -> u64 {
    d * d.saturating_sub(1) / 2
}

fn choose3(d: u64) -> u64 {
    if d < 3 {
        0
    } else {
        d * (d - 1) / 2 * (d - 2) / 3
    }
}

/// Number of common neighbors of `u` and `v` by merging sorted lists.
fn common_neighbors(g: &Graph, u: usize, v: usize) -> u64 {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Number of (not necessarily induced) copies of `motif` in `g`.
pub fn count_subgraph(g: &Graph, motif: Motif) -> u64 {
    match motif {
        Motif::Edge => g.num_edges() as u64,
        Motif::TwoStar => g.degrees().iter().map(|&d| choose2(d as u64)).sum(),
        Motif::ThreeStar => g.degrees().iter().map(|&d| choose3(d as u64)).sum(),
        Motif::Triangle => {
            // each triangle is seen once from each of its three edges
            let total: u64 = g
                .edges()
                .iter()
                .map(|&(u, v)| common_neighbors(g, u as usize, v as usize))
                .sum();
            total / 3
        }
        Motif::Path3 => g
            .edges()
            .iter()
            .map(|&(u, v)| {
                let (u, v) = (u as usize, v as usize);
                let ends = (g.degree(u) as u64 - 1) * (g.degree(v) as u64 - 1);
                // a path a-u-v-b needs a != b
                ends - common_neighbors(g, u, v)
            })
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(g: &Graph) -> (u64, u64, u64) {
        // (two-stars, triangles, 3-edge paths) by enumerating vertex tuples
        let n = g.n();
        let mut two_star = 0;
        let mut tri = 0;
        for a in 0..n {
            for b in 0..n {
                for c in b + 1..n {
                    if a != b && a != c && g.adjacent(a, b) && g.adjacent(a, c) {
                        two_star += 1;
                    }
                    if a < b && g.adjacent(a, b) && g.adjacent(b, c) && g.adjacent(a, c) {
                        tri += 1;
                    }
                }
            }
        }
        let mut p3 = 0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let distinct = a != b && a != c && a != d && b != c && b != d && c != d;
                        if distinct && g.adjacent(a, b) && g.adjacent(b, c) && g.adjacent(c, d) {
                            p3 += 1;
                        }
                    }
                }
            }
        }
        // each path counted in both directions
        (two_star, tri, p3 / 2)
    }

    #[test]
    fn small_graphs() {
        let k3 = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(count_subgraph(&k3, Motif::TwoStar), 3);
        assert_eq!(count_subgraph(&k3, Motif::Edge), 3);
        assert_eq!(count_subgraph(&k3, Motif::Triangle), 1);
        assert_eq!(count_subgraph(&k3, Motif::Path3), 0);
        let p3 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(count_subgraph(&p3, Motif::TwoStar), 1);
        let k4 = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(count_subgraph(&k4, Motif::Triangle), 4);
        assert_eq!(count_subgraph(&k4, Motif::Path3), 12);
        assert_eq!(count_subgraph(&k4, Motif::ThreeStar), 4);
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        use crate::rng::Stream;
        for seed in 0..20u64 {
            let mut s = Stream::new(seed, &[]);
            let n = 3 + (seed as usize % 9);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if s.uniform() < 0.45 {
                        edges.push((u, v));
                    }
                }
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let (two, tri, p3) = brute_force(&g);
            assert_eq!(count_subgraph(&g, Motif::TwoStar), two);
            assert_eq!(count_subgraph(&g, Motif::Triangle), tri);
            assert_eq!(count_subgraph(&g, Motif::Path3), p3);
        }
    }
}
