use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Graph;

use super::Pmf;

/// Largest vertex count accepted by [`exact_pmf`].
pub const MAX_EXACT_VERTICES: usize = 22;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("p={p} must lie in (0, 1]")))
    }
}

/// Exact law of `T_n` under Bernoulli(`p`) weights by enumerating all `2^n` configurations.
pub fn exact_pmf(g: &Graph, p: f64) -> Result<Pmf> {
    check_p(p)?;
    let n = g.n();
    if n > MAX_EXACT_VERTICES {
        return Err(Error::InstanceTooLarge {
            size: n,
            limit: MAX_EXACT_VERTICES,
        });
    }
    let nb: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    let e = g.num_edges();
    // counts[t * (n + 1) + k]: configurations with T = t and k active vertices
    let mut counts = vec![0u64; (e + 1) * (n + 1)];
    counts[0] = 1;
    let (mut state, mut t, mut k) = (0u32, 0usize, 0usize);
    for step in 1u32..1 << n {
        let v = step.trailing_zeros() as usize;
        let bit = 1u32 << v;
        let touched = (nb[v] & state).count_ones() as usize;
        if state & bit == 0 {
            t += touched;
            k += 1;
        } else {
            t -= touched;
            k -= 1;
        }
        state ^= bit;
        counts[t * (n + 1) + k] += 1;
    }
    let mut probs = BTreeMap::new();
    for t in 0..=e {
        let mut mass = 0.0;
        for k in 0..=n {
            let c = counts[t * (n + 1) + k];
            if c > 0 {
                mass += c as f64 * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
            }
        }
        if mass > 0.0 {
            probs.insert(t as u64, mass);
        }
    }
    Ok(Pmf { probs, tail_mass: 0.0 })
}

/// Exact law of `T_{n,M}` with `r_n = 1/p`.
pub fn exact_truncated_pmf(g: &Graph, p: f64, m: f64) -> Result<Pmf> {
    check_p(p)?;
    exact_pmf(&g.induced_truncation(m, 1.0 / p)?, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FamilyKind, GraphFamily};

    fn g(kind: FamilyKind) -> Graph {
        GraphFamily::new(kind).build().unwrap()
    }

    #[test]
    fn small_cases() {
        let k2 = exact_pmf(&g(FamilyKind::Complete { n: 2 }), 0.5).unwrap();
        assert_eq!(k2.probs, BTreeMap::from([(0, 0.75), (1, 0.25)]));
        let k3 = exact_pmf(&g(FamilyKind::Complete { n: 3 }), 0.5).unwrap();
        assert_eq!(k3.probs, BTreeMap::from([(0, 0.5), (1, 0.375), (3, 0.125)]));
        let p3 = exact_pmf(&g(FamilyKind::Path { n: 3 }), 0.1).unwrap();
        assert!((p3.mean() - 0.02).abs() < 1e-15);
        assert!((p3.variance() - 0.0216).abs() < 1e-15);
        let sure = exact_pmf(&g(FamilyKind::Complete { n: 2 }), 1.0).unwrap();
        assert_eq!(sure, Pmf::point_mass(1));
    }

    #[test]
    fn size_limit() {
        let err = exact_pmf(&g(FamilyKind::Path { n: 23 }), 0.5).unwrap_err();
        assert!(matches!(err, Error::InstanceTooLarge { size: 23, .. }));
    }
}
