use std::sync::Arc;

use crnkit::oracle::{solve_with, total_variation, SolverRegistry};
use crnkit::ssa::{ensemble, simulate, time_average};
use crnkit::stationary::{product_form, Support};
use crnkit::statespace::{enumerate_class, enumerate_window, generator_matrix};
use crnkit::{analyze, build_network, fixtures, parse, serialize, solve_complex_balanced, KineticsRegistry};
use proptest::prelude::*;

fn fixture_kinetics(name: &str) -> (crnkit::NetworkDocument, crnkit::Kinetics) {
    let doc = fixtures::load(name).unwrap();
    let kin = doc.kinetics(&KineticsRegistry::default(), None).unwrap();
    (doc, kin)
}

#[test]
fn fixtures_roundtrip_through_serialize() {
    for (name, _) in fixtures::ALL {
        let doc = fixtures::load(name).unwrap();
        let again = parse(&serialize(&doc)).unwrap();
        assert_eq!(doc, again, "{name}");
    }
}

#[test]
fn fixture_structure() {
    let expect = [
        ("s1s2", 2, 1, 1, 0, true),
        ("enzyme1", 6, 2, 4, 0, true),
        ("mm_counterexample", 2, 1, 1, 0, true),
        ("irreversible", 2, 1, 1, 0, false),
        ("cycle3_not_db", 3, 1, 2, 0, true),
    ];
    for (name, n, l, s, d, wr) in expect {
        let doc = fixtures::load(name).unwrap();
        let r = analyze(&doc.network).unwrap();
        assert_eq!(
            (r.n_complexes, r.n_linkage_classes, r.stoich_dim, r.deficiency, r.weakly_reversible),
            (n, l, s, d, wr),
            "{name}"
        );
        assert_eq!(r.n_complexes, r.n_linkage_classes + r.stoich_dim + r.deficiency);
    }
}

#[test]
fn solvers_agree_on_closed_classes() {
    let registry = SolverRegistry::default();
    for (name, x0) in [("s1s2", vec![7, 0]), ("first_order_closed", vec![4, 2, 1]), ("cycle3_not_db", vec![3, 3, 3])] {
        let (doc, kin) = fixture_kinetics(name);
        let class = enumerate_class(&doc.network, &kin, &x0, 10_000).unwrap();
        let q = generator_matrix(&doc.network, &kin, &class).unwrap();
        let gth = solve_with(&q, &registry, "gth-dense").unwrap();
        for other in ["sparse-lu", "gauss-seidel"] {
            let sol = solve_with(&q, &registry, other).unwrap();
            let tv = total_variation(&gth.pi, &sol.pi).unwrap();
            assert!(tv < 1e-9, "{name} {other}: {tv}");
        }
    }
}

#[test]
fn solvers_agree_when_far_states_are_light() {
    let (doc, kin) = fixture_kinetics("first_order_open");
    let class = enumerate_window(&doc.network, &kin, &[0, 0], &[40, 40], 10_000).unwrap();
    let q = generator_matrix(&doc.network, &kin, &class).unwrap();
    let registry = SolverRegistry::default();
    let gth = solve_with(&q, &registry, "gth-dense").unwrap();
    let lu = solve_with(&q, &registry, "sparse-lu").unwrap();
    assert!(total_variation(&gth.pi, &lu.pi).unwrap() < 1e-12);
}

#[test]
fn enzyme2_window_matches_oracle() {
    let (doc, kin) = fixture_kinetics("enzyme2");
    let c = solve_complex_balanced(&doc.network, kin.rates()).unwrap().c;
    // E is unbounded; its marginal mean is 2 so a box at 30 loses nothing visible
    let class = Arc::new(enumerate_window(&doc.network, &kin, &[0, 5, 0, 0], &[30, 5, 5, 5], 100_000).unwrap());
    let dist = product_form(&doc.network, &kin, &c, Support::Class(class.clone())).unwrap();
    let total: f64 = dist.probabilities().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let q = generator_matrix(&doc.network, &kin, &class).unwrap();
    let oracle = crnkit::solve_stationary_oracle(&q).unwrap();
    let tv = total_variation(dist.probabilities(), &oracle.pi).unwrap();
    assert!(tv < 1e-10, "{tv}");
}

#[test]
fn ssa_is_reproducible() {
    let (doc, kin) = fixture_kinetics("enzyme2");
    let a = simulate(&doc.network, &kin, &[1, 3, 0, 0], 20.0, 99, 1_000_000).unwrap();
    let b = simulate(&doc.network, &kin, &[1, 3, 0, 0], 20.0, 99, 1_000_000).unwrap();
    assert_eq!(a, b);
    let c = simulate(&doc.network, &kin, &[1, 3, 0, 0], 20.0, 100, 1_000_000).unwrap();
    assert_ne!(a.times, c.times);

    let e1 = ensemble(&doc.network, &kin, &[1, 3, 0, 0], 5.0, 200, 4, 1_000_000).unwrap();
    let e2 = ensemble(&doc.network, &kin, &[1, 3, 0, 0], 5.0, 200, 4, 1_000_000).unwrap();
    assert_eq!(e1.endpoints, e2.endpoints);
}

#[test]
fn ssa_conserves_closed_totals() {
    let (doc, kin) = fixture_kinetics("s1s2");
    let traj = simulate(&doc.network, &kin, &[6, 1], 50.0, 3, 1_000_000).unwrap();
    assert!(traj.states.iter().all(|x| x[0] + x[1] == 7 && x.iter().all(|&v| v >= 0)));
    assert!(traj.times.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn empirical_distribution_serializes_as_pairs() {
    let (doc, kin) = fixture_kinetics("s1s2");
    let emp = time_average(&doc.network, &kin, &[2, 0], 10.0, 0.0, 1, 1_000_000).unwrap();
    let v = serde_json::to_value(&emp).unwrap();
    let pairs = v["weights"].as_array().unwrap();
    assert!(!pairs.is_empty());
    let mass: f64 = pairs.iter().map(|p| p[1].as_f64().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

fn first_order_ring(n: usize, rates: &[f64]) -> (crnkit::Network, Vec<f64>) {
    let species: Vec<String> = (0..n).map(|i| format!("X{i}")).collect();
    let unit = |i: usize| {
        let mut v = vec![0i64; n];
        v[i] = 1;
        v
    };
    let mut reactions = Vec::new();
    for i in 0..n {
        reactions.push((unit(i), unit((i + 1) % n)));
    }
    let net = build_network(&species, &reactions).unwrap();
    (net, rates[..n].to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ring_is_deficiency_zero_and_product_form_is_stationary(
        n in 2usize..5,
        rates in prop::collection::vec(0.2f64..5.0, 5),
        total in 1i64..6,
    ) {
        let (net, k) = first_order_ring(n, &rates);
        let r = analyze(&net).unwrap();
        prop_assert_eq!(r.deficiency, 0);
        prop_assert!(r.weakly_reversible);

        let law = KineticsRegistry::default().build(&net, &Default::default()).unwrap();
        let kin = crnkit::Kinetics::new(&net, k, law).unwrap();
        let c = solve_complex_balanced(&net, kin.rates()).unwrap().c;
        let mut x0 = vec![0i64; n];
        x0[0] = total;
        let class = Arc::new(enumerate_class(&net, &kin, &x0, 10_000).unwrap());
        let dist = product_form(&net, &kin, &c, Support::Class(class.clone())).unwrap();
        let q = generator_matrix(&net, &kin, &class).unwrap();
        let residual = q.left_apply(dist.probabilities()).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        prop_assert!(residual <= 1e-9 * q.max_rate(), "residual {}", residual);
    }

    #[test]
    fn parser_never_panics(text in "[A-Za-z0-9 +<>;,.@#/\n-]{0,80}") {
        let _ = parse(&text);
    }
}
