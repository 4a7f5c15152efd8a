use crate::error::{Error, Result};
use crate::graph::{count_subgraph, Graph, Motif};

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// `E[T^a]` for Bernoulli(`p`) weights, `a ∈ {1, 2, 3}`; with `m` set, the moment of `T_{n,M}`
/// at `r_n = 1/p`.
///
/// Each `a`-tuple of edges contributes `p^{|V(H)|}` where `H` is the union of its edges; the
/// tuples are grouped by the isomorphism type of `H`.
pub fn moment(g: &Graph, p: f64, a: u32, m: Option<f64>) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p={p} must lie in (0, 1]")));
    }
    let truncated;
    let g = match m {
        Some(m) => {
            truncated = g.induced_truncation(m, 1.0 / p)?;
            &truncated
        }
        None => g,
    };
    let e = g.num_edges() as f64;
    let s2 = count_subgraph(g, Motif::TwoStar) as f64;
    match a {
        1 => Ok(e * p * p),
        2 => Ok(e * p.powi(2) + 2.0 * s2 * p.powi(3) + (e * (e - 1.0) - 2.0 * s2) * p.powi(4)),
        3 => {
            let tri = count_subgraph(g, Motif::Triangle) as f64;
            let s3 = count_subgraph(g, Motif::ThreeStar) as f64;
            let p3 = count_subgraph(g, Motif::Path3) as f64;
            let x = star_plus_edge(g, e, s2, tri);
            let matchings = e * (e - 1.0) * (e - 2.0) / 6.0 - tri - s3 - p3 - x;
            let two = s2 * p.powi(3) + (choose2(e) - s2) * p.powi(4);
            let three = tri * p.powi(3) + (s3 + p3) * p.powi(4) + x * p.powi(5) + matchings * p.powi(6);
            Ok(e * p.powi(2) + 6.0 * two + 6.0 * three)
        }
        _ => Err(Error::invalid(format!("moment order {a} not supported (1..=3)"))),
    }
}

/// Number of (2-star, edge) pairs with the edge disjoint from the 2-star.
fn star_plus_edge(g: &Graph, e: f64, s2: f64, tri: f64) -> f64 {
    let mut center = 0.0;
    let mut leaves = 0.0;
    for a in 0..g.n() {
        let da = f64::from(g.degree(a));
        center += choose2(da) * da;
        let nbr_deg: f64 = g.neighbors(a).iter().map(|&b| f64::from(g.degree(b as usize))).sum();
        leaves += (da - 1.0) * nbr_deg;
    }
    s2 * (e + 2.0) - center - leaves + 3.0 * tri
}

/// Mean and variance of `T_{n,M}` with `r_n = 1/p`:
/// `E = |E_M| p²` and `Var = (1 - p²) E + 2 p³ (1 - p) N(K_{1,2}, G[V_M])`.
pub fn truncated_mean_var(g: &Graph, p: f64, m: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("p={p} must lie in (0, 1]")));
    }
    let t = g.induced_truncation(m, 1.0 / p)?;
    Ok(mean_var(&t, p))
}

/// Untruncated mean and variance.
pub fn mean_var(g: &Graph, p: f64) -> (f64, f64) {
    let mean = g.num_edges() as f64 * p * p;
    let s2 = count_subgraph(g, Motif::TwoStar) as f64;
    (mean, (1.0 - p * p) * mean + 2.0 * p.powi(3) * (1.0 - p) * s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FamilyKind, GraphFamily};
    use crate::quadform::exact_pmf;

    #[test]
    fn path3_values() {
        let g = GraphFamily::new(FamilyKind::Path { n: 3 }).build().unwrap();
        assert!((moment(&g, 0.1, 1, None).unwrap() - 0.02).abs() < 1e-15);
        assert!((moment(&g, 0.1, 2, None).unwrap() - 0.022).abs() < 1e-15);
        let (m, v) = truncated_mean_var(&g, 0.1, 1e9).unwrap();
        assert!((m - 0.02).abs() < 1e-15 && (v - 0.0216).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_mean() {
        let g = GraphFamily::new(FamilyKind::Complete { n: 4 }).build().unwrap();
        assert_eq!(moment(&g, 0.5, 1, None).unwrap(), 1.5);
    }

    #[test]
    fn star_truncation_is_degenerate() {
        let n = 400;
        let g = GraphFamily::new(FamilyKind::Star { n }).build().unwrap();
        let p = 1.0 / (n as f64).sqrt();
        assert_eq!(truncated_mean_var(&g, p, 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn third_moment_matches_enumeration() {
        for (kind, seed) in [
            (FamilyKind::ErdosRenyi { n: 9, q: 0.5 }, 1),
            (FamilyKind::ErdosRenyi { n: 10, q: 0.3 }, 2),
            (FamilyKind::Complete { n: 6 }, 0),
            (FamilyKind::Star { n: 7 }, 0),
        ] {
            let g = GraphFamily::seeded(kind, seed).build().unwrap();
            for p in [0.1, 0.3, 0.5] {
                let pmf = exact_pmf(&g, p).unwrap();
                let third = pmf.raw_moment(3);
                let m3 = moment(&g, p, 3, None).unwrap();
                assert!((third - m3).abs() < 1e-10 * third.max(1.0), "{third} vs {m3}");
            }
        }
    }
}
