use super::*;
use crate::graphon::{BlockKernel, StepFunction, StepGraphon};
use crate::quadform::Pmf;

fn tv(a: &Pmf, b: &Pmf) -> f64 {
    let keys: std::collections::BTreeSet<u64> = a.probs.keys().chain(b.probs.keys()).copied().collect();
    0.5 * keys.iter().map(|&k| (a.get(k) - b.get(k)).abs()).sum::<f64>() + 0.5 * (a.tail_mass - b.tail_mass).abs()
}

fn complete_spec() -> LimitSpec {
    LimitSpec::new(StepGraphon::constant(1.0, 1.0).unwrap(), StepFunction::zero(), 0.0).unwrap()
}

fn delta_spec(a: f64, kappa: f64) -> LimitSpec {
    LimitSpec::new(StepGraphon::zero(), StepFunction::constant(a, kappa).unwrap(), 0.0).unwrap()
}

#[test]
fn complete_graph_limit() {
    let two_over_e = 2.0 * (-1.0f64).exp();
    let exact = limit_pmf(&complete_spec(), 1e-10).unwrap();
    assert!((exact.get(0) - two_over_e).abs() < 1e-10);
    assert!(exact.tail_mass <= 1e-10);
    // C(N, 2) only takes triangular values
    assert_eq!(exact.get(2), 0.0);
    let sim = sample_limit(&complete_spec(), 200_000, 4).unwrap();
    assert!((sim.get(0) - two_over_e).abs() < 4.0 * (two_over_e * (1.0 - two_over_e) / 2e5).sqrt());
}

#[test]
fn compound_poisson_limit() {
    let p0 = ((-1.0f64).exp() - 1.0).exp();
    let exact = limit_pmf(&delta_spec(1.0, 1.0), 1e-10).unwrap();
    assert!((exact.get(0) - p0).abs() < 1e-9, "{}", exact.get(0));
    let spec = delta_spec(0.7, 2.5);
    let exact = limit_pmf(&spec, 1e-10).unwrap();
    assert!((exact.mean() - 0.7 * 2.5).abs() < 1e-6);
}

#[test]
fn independent_poisson_only() {
    let spec = LimitSpec::new(StepGraphon::zero(), StepFunction::zero(), 2.0).unwrap();
    let exact = limit_pmf(&spec, 1e-10).unwrap();
    let pois = Pmf::poisson(2.0, 1e-12);
    assert!(exact.tail_mass <= 1e-10);
    for k in 0..=exact.max_value().unwrap() {
        assert!((exact.get(k) - pois.get(k)).abs() < 1e-12, "{k}");
    }
}

#[test]
fn two_block_law_agrees_with_sampler() {
    let w = StepGraphon::new(vec![0.0, 0.4, 1.0], vec![vec![0.7, 0.2], vec![0.2, 0.9]]).unwrap();
    let spec = LimitSpec::new(w, StepFunction::zero(), 0.0).unwrap();
    let exact = limit_pmf(&spec, 1e-8).unwrap();
    let samples = 400_000;
    let sim = sample_limit(&spec, samples, 8).unwrap();
    // expected TV of an empirical law is about Σ sqrt(p(1-p)/(2π n))
    let noise: f64 = exact.probs.values().map(|p| (p * (1.0 - p) / samples as f64).sqrt()).sum::<f64>() * 0.4;
    assert!(tv(&exact, &sim) < 3.0 * noise, "{} vs {noise}", tv(&exact, &sim));
    // E Q1 = ½ ∫∫ W
    let half_mass = 0.5 * (0.7 * 0.16 + 2.0 * 0.2 * 0.24 + 0.9 * 0.36);
    assert!((exact.mean() - half_mass).abs() < 1e-6);
}

#[test]
fn too_many_blocks_for_enumeration() {
    let err = limit_pmf(&preset("ex2.6").unwrap(), 1e-6).unwrap_err();
    assert!(matches!(err, crate::Error::BlockCountExceeded { blocks: 29, .. }));
}

#[test]
fn mgf_properties() {
    let spec = complete_spec();
    let at_zero = mgf(&spec, 0.0, 0.0, 1e-8).unwrap();
    assert!((1.0 - 1e-8..=1.0).contains(&at_zero));
    let mut prev = 1.0;
    for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let v = mgf(&spec, t, 0.0, 1e-8).unwrap();
        assert!(v <= prev && v > 0.0);
        prev = v;
    }
    let far = mgf(&spec, 60.0, 0.0, 1e-10).unwrap();
    assert!((far - 2.0 * (-1.0f64).exp()).abs() < 1e-9);

    let (a, kappa) = (0.6, 1.5);
    let spec = delta_spec(a, kappa);
    for t2 in [0.2f64, 1.0, 3.0] {
        let closed = (kappa * ((-a * (1.0 - (-t2).exp())).exp() - 1.0)).exp();
        let v = mgf(&spec, 0.0, t2, 1e-10).unwrap();
        assert!((v - closed).abs() < 1e-9, "{v} vs {closed}");
    }
}

#[test]
fn total_mgf_matches_pmf() {
    let spec = preset("ex2.5").unwrap();
    let pmf = limit_pmf(&spec, 1e-10).unwrap();
    for t in [0.1, 0.7, 2.0] {
        let from_pmf: f64 = pmf.probs.iter().map(|(&k, &p)| p * (-t * k as f64).exp()).sum();
        assert!((from_pmf - mgf_total(&spec, t, 1e-10).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn component_means() {
    let w = StepGraphon::constant(0.3, 2.0).unwrap();
    let spec = LimitSpec::new(w, StepFunction::constant(0.5, 3.0).unwrap(), 0.8).unwrap();
    let draws = sample_limit_joint(&spec, 200_000, 12).unwrap();
    let col = |f: fn(&LimitDraw) -> u64| draws.iter().map(|d| f(d) as f64).collect::<Vec<_>>();
    for (xs, expected) in [
        (col(|d| d.q1), 0.3 * 4.0 / 2.0),
        (col(|d| d.q2), 1.5),
        (col(|d| d.q3), 0.8),
    ] {
        let (m, se) = mean_and_se(&xs);
        assert!((m - expected).abs() < 4.0 * se, "{m} vs {expected}");
    }
}

#[test]
fn nonconvergent_limits_have_different_second_moments() {
    let odd = limit_pmf(&preset("ex2.7-odd").unwrap(), 1e-10).unwrap();
    let even = limit_pmf(&preset("ex2.7-even").unwrap(), 1e-10).unwrap();
    assert!((odd.second_moment() - 5.078125).abs() < 1e-6);
    assert!((even.second_moment() - 5.578125).abs() < 1e-6);
}

#[test]
fn multi_scale_sampler_records_cutoff() {
    let pmf = sample_limit(&preset("ex2.6").unwrap(), 20_000, 1).unwrap();
    assert!(pmf.tail_mass > 0.0 && pmf.tail_mass < 1e-9);
    assert!((pmf.total() - 1.0).abs() < 1e-12);
    // E Q1 + E Q2 = Σ (2^-s / 2 + 4^-s) = 1/2 + 1/3
    let se = (pmf.variance() / 20_000.0).sqrt();
    assert!((pmf.mean() - (0.5 + 1.0 / 3.0)).abs() < 4.0 * se);
}

#[test]
fn block_integral_expectations() {
    let f = BlockKernel::constant(0.8, 1.5).unwrap();
    assert!((expected_value(&f) - 0.8 * 2.25).abs() < 1e-15);
    let xs = ito_block_integral(&f, 200_000, 3).unwrap();
    let (m, se) = mean_and_se(&xs);
    assert!((m - 1.8).abs() < 4.0 * se);
    let z = ito_block_integral(&BlockKernel::constant(0.0, 2.0).unwrap(), 100, 3).unwrap();
    assert!(z.iter().all(|&x| x == 0.0));
    let g = StepFunction::constant(1.0, 1.0).unwrap();
    let ys = univariate_ito_integral(&g, 200_000, 5).unwrap();
    let (m, se) = mean_and_se(&ys);
    assert!((m - 1.0).abs() < 4.0 * se);
    let var = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / ys.len() as f64;
    assert!((var - 1.0).abs() < 0.02);
}

#[test]
fn phi_integral_reproduces_mgf() {
    let w = StepGraphon::new(vec![0.0, 0.5, 1.2], vec![vec![0.9, 0.3], vec![0.3, 0.6]]).unwrap();
    let spec = LimitSpec::new(w.clone(), StepFunction::zero(), 0.0).unwrap();
    let t = 0.8;
    let phi = phi_integrand(&w, t).unwrap();
    let xs = ito_block_integral(&phi, 400_000, 9).unwrap();
    let ys: Vec<f64> = xs.iter().map(|x| (0.5 * x).exp()).collect();
    let (m, se) = mean_and_se(&ys);
    let exact = mgf(&spec, t, 0.0, 1e-10).unwrap();
    assert!((m - exact).abs() < 4.0 * se, "{m} vs {exact}");
}
