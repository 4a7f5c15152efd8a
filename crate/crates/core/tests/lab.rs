use quadlimit::graph::{FamilyKind, GraphFamily};
use quadlimit::lab::{
    check_conditions, reproduce, second_moment_check, tv_distance, FamilyTemplate, LabOptions, PRule, TemplateKind,
};
use quadlimit::limit::preset;
use quadlimit::quadform::{exact_pmf, simulate, SimConfig};
use quadlimit::{Error, LimitSpec};

fn opts() -> LabOptions {
    LabOptions {
        samples: 0,
        seed: 7,
        ..Default::default()
    }
}

#[test]
fn triangle_simulation_within_mc_budget() {
    let g = GraphFamily::new(FamilyKind::Complete { n: 3 }).build().unwrap();
    let exact = exact_pmf(&g, 0.5).unwrap();
    let sim = simulate(&g, &SimConfig::bernoulli(0.5, 1_000_000, 3)).unwrap();
    let d = tv_distance(&exact, &sim);
    assert!(d.value <= 4.0 * (3.0f64 / 1e6).sqrt(), "{}", d.value);
}

#[test]
fn disjoint_stars_degree_distance() {
    let t = FamilyTemplate::new(TemplateKind::DisjointStars, PRule::INVERSE_N);
    let spec = preset("ex2.4-stars").unwrap();
    let k = 5.0;
    let rep = check_conditions(&t, &[20, 40, 80], &spec, k, 2.0, &opts()).unwrap();
    assert_eq!(rep.rows.len(), 3);
    for r in &rep.rows {
        let expect = (k - 1.0) / r.n as f64;
        assert!((r.degree_l1.unwrap() - expect).abs() < 1e-12, "{r:?}");
        assert!(r.lambda0_estimate.unwrap().abs() < 1e-12);
    }
    let deg = rep.verdicts.degree.unwrap();
    assert!(deg.monotone && deg.decreasing);
}

#[test]
fn dense_er_reported_per_seed() {
    let t = FamilyTemplate::new(TemplateKind::ErdosRenyi { q: 0.5 }, PRule::INVERSE_N);
    let spec = preset("ex2.1-er").unwrap();
    let rep = check_conditions(&t, &[60, 240], &spec, 1.0, 2.0, &opts()).unwrap();
    assert_eq!(rep.rows.len(), 10);
    let seeds: std::collections::BTreeSet<_> = rep.rows.iter().map(|r| r.seed.unwrap()).collect();
    assert_eq!(seeds.len(), 5);
    for seed in seeds {
        let of = |n| rep.rows.iter().find(|r| r.n == n && r.seed == Some(seed)).unwrap();
        assert!(of(240).cut_distance.unwrap() < of(60).cut_distance.unwrap());
    }
    assert!(rep.verdicts.cut.unwrap().decreasing);
}

#[test]
fn nonconvergent_degree_target_alternates() {
    let t = FamilyTemplate::new(TemplateKind::Nonconvergent, PRule::INVERSE_N);
    let odd = preset("ex2.7-odd").unwrap();
    let rep = check_conditions(&t, &[120, 121], &odd, 2.0, 3.0, &LabOptions { seeds: 1, ..opts() }).unwrap();
    let even_row = &rep.rows[0];
    let odd_row = &rep.rows[1];
    assert!(odd_row.degree_l1.unwrap() < 0.1, "{odd_row:?}");
    // targets 1.25/0.5 (odd) and 1.5/0.25 (even) on [0,1] and [1,2] differ by 0.5 in L1
    assert!((even_row.degree_l1.unwrap() - 0.5).abs() < 0.05, "{even_row:?}");
}

#[test]
fn bounded_degree_family_matches_poisson_targets() {
    // cycle: max degree 2 = o(r_n); W = 0, d = 0, lambda0 = 2
    let t = FamilyTemplate::new(TemplateKind::Cycle, PRule::inverse_sqrt(2f64.sqrt()));
    let spec = preset("ex2.2-cycle").unwrap();
    let rep = check_conditions(&t, &[1_000, 10_000, 100_000], &spec, 1.0, 1.0, &opts()).unwrap();
    let last = rep.rows.last().unwrap();
    assert!(last.cut_distance.unwrap() < 0.01);
    assert!(last.degree_l1.unwrap() < 0.01);
    assert!((last.lambda0_estimate.unwrap() - 2.0).abs() < 0.01);
    let v = rep.verdicts;
    assert!(v.cut.unwrap().monotone && v.degree.unwrap().monotone && v.lambda0.unwrap().monotone);
}

#[test]
fn cycle_second_moment() {
    let t = FamilyTemplate::new(TemplateKind::Cycle, PRule::inverse_sqrt(2f64.sqrt()));
    let o = LabOptions {
        samples: 50_000,
        ..opts()
    };
    let rep = second_moment_check(&t, &[1_000, 100_000], &[1.0, 4.0], 2.0, &o).unwrap();
    for r in &rep.rows {
        // |E| p² = n (2 / n)
        assert!((r.truncated_mean.unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(r.truncated_mean.unwrap(), r.edges as f64 * r.p * r.p);
    }
    let s = rep.second_moment.unwrap();
    assert!((s.variance - 2.0).abs() < 0.02);
    assert!(s.predicts_poisson);
    assert!(s.tv.unwrap() < 0.03);
}

#[test]
fn star_second_moment_is_degenerate() {
    let t = FamilyTemplate::new(TemplateKind::Star, PRule::inverse_sqrt(1.0));
    let rep = second_moment_check(&t, &[100, 10_000], &[1.0], 0.0, &opts()).unwrap();
    for r in &rep.rows {
        assert_eq!(r.truncated_mean, Some(0.0));
        assert_eq!(r.truncated_var, Some(0.0));
    }
    assert!(rep.second_moment.unwrap().predicts_poisson);
}

#[test]
fn star_plus_matching_second_moment() {
    let gamma: f64 = 1.5;
    let t = FamilyTemplate::new(TemplateKind::StarPlusMatching, PRule::inverse_sqrt(gamma));
    let o = LabOptions {
        samples: 100_000,
        ..opts()
    };
    let rep = second_moment_check(&t, &[1_000, 40_000], &[1.0], gamma * gamma, &o).unwrap();
    let s = rep.second_moment.unwrap();
    assert!((s.mean - gamma * gamma).abs() < 0.01 * gamma * gamma, "{s:?}");
    assert!((s.variance - gamma * gamma).abs() < 0.02 * gamma * gamma, "{s:?}");
    assert!(s.tv.unwrap() < 0.03);
}

#[test]
fn report_formats_and_limits() {
    assert!(matches!(reproduce("ex9.9", &opts()), Err(Error::UnknownExample(_))));
    let capped = LabOptions { max_cells: 2, ..opts() };
    assert!(matches!(
        reproduce("ex2.1-er", &capped),
        Err(Error::InstanceTooLarge { size: 15, limit: 2 })
    ));

    let rep = reproduce("ex2.4", &LabOptions { samples: 20_000, ..opts() }).unwrap();
    let csv = rep.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), rep.rows.len() + 1);
    let cols = lines[0].split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == cols));
    let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(json["id"], "ex2.4");
    for r in &rep.rows {
        let tv = r.tv.unwrap();
        assert!((0.0..=1.0).contains(&tv));
        assert!(r.cut_distance.unwrap() >= 0.0 && r.degree_l1.unwrap() >= 0.0);
    }
}

#[test]
fn reproduce_is_deterministic_across_chunks() {
    let a = reproduce("ex2.3-matching", &LabOptions { samples: 20_000, chunks: 3, ..opts() }).unwrap();
    let b = reproduce("ex2.3-matching", &LabOptions { samples: 20_000, chunks: 11, ..opts() }).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn custom_target_spec_roundtrip() {
    let spec: LimitSpec = serde_json::from_str(
        r#"{"W":{"breakpoints":[0],"values":[]},"delta":{"breakpoints":[0,1],"values":[1]},"lambda0":0}"#,
    )
    .unwrap();
    let t = FamilyTemplate::new(TemplateKind::DisjointStars, PRule::INVERSE_N);
    let rep = check_conditions(&t, &[10], &spec, 5.0, 2.0, &opts()).unwrap();
    assert!((rep.rows[0].degree_l1.unwrap() - 0.4).abs() < 1e-12);
}
