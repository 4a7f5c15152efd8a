use proptest::prelude::*;

use super::*;
use crate::graph::{FamilyKind, Graph, GraphFamily};

fn build(kind: FamilyKind) -> Graph {
    GraphFamily::new(kind).build().unwrap()
}

#[test]
fn sure_activation_gives_point_mass() {
    let g = build(FamilyKind::Complete { n: 2 });
    let pmf = simulate(&g, &SimConfig::bernoulli(1.0, 100, 1)).unwrap();
    assert_eq!(pmf, Pmf::point_mass(1));
}

#[test]
fn triangle_matches_exact_law() {
    let g = build(FamilyKind::Complete { n: 3 });
    let exact = exact_pmf(&g, 0.5).unwrap();
    let sim = simulate(&g, &SimConfig::bernoulli(0.5, 200_000, 9)).unwrap();
    for v in [0, 1, 3] {
        let se = (exact.get(v) * (1.0 - exact.get(v)) / 200_000.0).sqrt();
        assert!((sim.get(v) - exact.get(v)).abs() < 5.0 * se);
    }
    assert_eq!(sim.get(2), 0.0);
}

#[test]
fn chunk_count_does_not_change_results() {
    let g = GraphFamily::seeded(FamilyKind::ErdosRenyi { n: 300, q: 0.05 }, 4).build().unwrap();
    let base = SimConfig::bernoulli(0.02, 5_000, 77);
    let one = simulate_values(&g, &base.clone().with_chunks(1)).unwrap();
    for chunks in [3, 16, 64] {
        assert_eq!(simulate_values(&g, &base.clone().with_chunks(chunks)).unwrap(), one);
    }
}

#[test]
fn truncation_removes_star_center() {
    let n = 400;
    let g = build(FamilyKind::StarPlusMatching { n });
    let p = 1.0 / (n as f64).sqrt();
    let full = simulate(&g, &SimConfig::bernoulli(p, 20_000, 3)).unwrap();
    let cut = simulate(&g, &SimConfig::bernoulli(p, 20_000, 3).with_truncation(1.0)).unwrap();
    assert!(full.mean() > cut.mean() + 0.5);
    // only the matching survives: mean n p² = 1
    assert!((cut.mean() - 1.0).abs() < 0.05);
}

#[test]
fn decomposition_sums_to_simulation() {
    let g = build(FamilyKind::Coexistence1 { n: 20 });
    let cfg = SimConfig::bernoulli(0.05, 20_000, 5);
    let dec = decompose(&g, 1.0, &cfg).unwrap();
    assert_eq!(dec.split, 20);
    assert_eq!(dec.total, simulate(&g, &cfg).unwrap());
    let all = decompose(&g, g.n() as f64 * 0.05, &cfg).unwrap();
    assert_eq!(all.cross, Pmf::point_mass(0));
    assert_eq!(all.minus, Pmf::point_mass(0));
    assert!(decompose(&g, 1e9, &cfg).is_err());
}

#[test]
fn sample_cap_guard() {
    let g = build(FamilyKind::Complete { n: 50 });
    let mut cfg = SimConfig::bernoulli(1.0, 10, 1);
    cfg.sample_cap = 100;
    let err = simulate(&g, &cfg).unwrap_err();
    assert!(matches!(err, crate::Error::SampleCapExceeded { value: 1225, cap: 100 }));
}

#[test]
fn general_law_uses_products() {
    let n = 2000;
    let g = build(FamilyKind::Cycle { n });
    let theta = 0.05;
    let law = SparseLaw::Poisson { theta };
    let samples = 50_000;
    let pmf = simulate(&g, &SimConfig::new(law, samples, 11)).unwrap();
    // E[X_u X_v] = θ², Var T computed from the moments of Poisson products on a cycle
    let mean = n as f64 * theta * theta;
    let se = (pmf.variance() / samples as f64).sqrt();
    assert!((pmf.mean() - mean).abs() < 4.0 * se, "{} vs {mean}", pmf.mean());
}

#[test]
fn universality_mismatch_within_union_bound() {
    let n = 20_000;
    let g = build(FamilyKind::Cycle { n });
    let p = (2.0 / n as f64).sqrt();
    let theta = poisson_theta_for_p1(p).unwrap();
    let cfg = SimConfig::new(SparseLaw::Poisson { theta }, 50_000, 2);
    let u = universality_check(&g, &cfg).unwrap();
    assert!(u.mismatch_fraction <= u.multi_edge_fraction);
    // the bound is of the same order as the observed frequency
    assert!(u.multi_edge_fraction <= u.union_bound * 1.5 + 5e-4, "{u:?}");
    assert!((u.mean_ratio - theta.exp()).abs() < 1e-12);
}

fn small_graph() -> impl Strategy<Value = Graph> {
    (2usize..=10).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if bits[k] {
                        edges.push((u, v));
                    }
                    k += 1;
                }
            }
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_moments_match_formulas(g in small_graph(), pi in 0usize..3, m in 0.5f64..8.0) {
        let p = [0.1, 0.3, 0.5][pi];
        let pmf = exact_pmf(&g, p).unwrap();
        prop_assert!((pmf.total() - 1.0).abs() < 1e-12);
        prop_assert!((pmf.mean() - moment(&g, p, 1, None).unwrap()).abs() < 1e-10);
        prop_assert!((pmf.second_moment() - moment(&g, p, 2, None).unwrap()).abs() < 1e-10);
        prop_assert!((pmf.raw_moment(3) - moment(&g, p, 3, None).unwrap()).abs() < 1e-10);
        let t = exact_truncated_pmf(&g, p, m).unwrap();
        let (mean, var) = truncated_mean_var(&g, p, m).unwrap();
        prop_assert!((t.mean() - mean).abs() < 1e-10);
        prop_assert!((t.variance() - var).abs() < 1e-10);
    }

    #[test]
    fn simulation_mean_within_error(g in small_graph(), seed in any::<u64>()) {
        let p = 0.3;
        let samples = 20_000u64;
        let sim = simulate(&g, &SimConfig::bernoulli(p, samples, seed)).unwrap();
        let (mean, var) = mean_var(&g, p);
        let se = (var / samples as f64).sqrt();
        prop_assert!((sim.mean() - mean).abs() <= 5.0 * se + 1e-12);
    }
}
