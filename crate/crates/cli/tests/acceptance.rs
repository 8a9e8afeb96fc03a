//! One line per acceptance criterion; exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use crn_cli::args::ClassArgs;
use crn_cli::commands::{prepare, residual_check};
use crnkit::equilibrium::{complex_balance_residual, is_detailed_balanced, solve_complex_balanced, solve_complex_balanced_in_class};
use crnkit::kinetics::{RateLaw, ThetaProduct};
use crnkit::linalg::bareiss_rank;
use crnkit::oracle::{check_reversibility, solve_stationary_oracle, total_variation};
use crnkit::special::ln_binomial;
use crnkit::ssa::{ensemble, time_average};
use crnkit::stationary::{choose_window, mm_weight, product_form, Normalizer, Support};
use crnkit::statespace::{enumerate_class, enumerate_window, generator_matrix, IrreducibleClass};
use crnkit::structure::analyze;
use crnkit::{build_network, fixtures, Kinetics, KineticsRegistry, Network, NetworkDocument, Theta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> NetworkDocument {
    fixtures::load(name).expect("fixture exists")
}

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.crn"))
}

fn kinetics(doc: &NetworkDocument, volume: Option<f64>) -> Kinetics {
    doc.kinetics(&KineticsRegistry::default(), volume).unwrap()
}

fn crn(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_crn")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn class_args(name: &str, x0: &[i64], window: Option<i64>) -> ClassArgs {
    ClassArgs {
        file: fixture_path(name),
        x0: x0.to_vec(),
        volume: None,
        window: window.map(|b| vec![b]),
        tail_tol: crnkit::config::TAIL_TOL,
        cap: crnkit::config::STATE_CAP,
    }
}

fn structure_numbers() -> Check {
    let expected = [
        ("enzyme1", (6, 2, 4, 0)),
        ("enzyme2", (5, 2, 3, 0)),
        ("s1s2", (2, 1, 1, 0)),
        ("fast_subnetwork", (5, 2, 3, 0)),
    ];
    let mut got = Vec::new();
    for (name, want) in expected {
        let r = analyze(&fixture(name).network).map_err(|e| e.to_string())?;
        let have = (r.n_complexes, r.n_linkage_classes, r.stoich_dim, r.deficiency);
        ensure!(have == want, "{name}: got {have:?}, expected {want:?}");
        got.push(format!("{name} {have:?}"));
    }
    Ok(got.join(", "))
}

fn two_species_equilibrium() -> Check {
    let doc = fixture("s1s2");
    let net = &doc.network;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_c, mut worst_res) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let k1 = 10f64.powf(rng.random_range(-3.0..3.0));
        let k2 = 10f64.powf(rng.random_range(-3.0..3.0));
        let eq = solve_complex_balanced_in_class(net, &[k1, k2], &[1.0, 0.0]).map_err(|e| e.to_string())?;
        let want = [k2 / (k1 + k2), k1 / (k1 + k2)];
        for i in 0..2 {
            worst_c = worst_c.max((eq.c[i] - want[i]).abs());
        }
        let res = complex_balance_residual(net, &[k1, k2], &eq.c).unwrap();
        worst_res = worst_res.max(res.iter().fold(0.0, |a, b| a.max(b.abs())));
    }
    ensure!(worst_c <= 1e-12, "max |c - closed form| = {worst_c:e}");
    ensure!(worst_res <= 1e-12, "max complex-balance residual {worst_res:e}");
    Ok(format!("100 draws, max |c - closed form| {worst_c:.1e}, max residual {worst_res:.1e}"))
}

fn oracle_tv(net: &Network, kin: &Kinetics, c: &[f64], class: IrreducibleClass) -> Result<(f64, usize), String> {
    let n = class.len();
    let class = Arc::new(class);
    let dist = product_form(net, kin, c, Support::Class(Arc::clone(&class))).map_err(|e| e.to_string())?;
    let q = generator_matrix(net, kin, &class).map_err(|e| e.to_string())?;
    let sol = solve_stationary_oracle(&q).map_err(|e| e.to_string())?;
    Ok((total_variation(&sol.pi, dist.probabilities()).unwrap(), n))
}

/// Weakly reversible, deficiency zero, every complex of the same total
/// order so that the total count is conserved.
fn random_dz_network(rng: &mut ChaCha8Rng) -> (Network, Vec<f64>) {
    'draw: loop {
        let m = rng.random_range(2..=4usize);
        let order = rng.random_range(1..=2i64);
        let mut complexes: Vec<Vec<i64>> = Vec::new();
        let n_lc = rng.random_range(1..=2usize);
        let mut classes = Vec::new();
        for _ in 0..n_lc {
            let size = rng.random_range(2..=3usize);
            let mut members = Vec::new();
            let mut tries = 0;
            while members.len() < size {
                tries += 1;
                if tries > 50 {
                    continue 'draw;
                }
                let mut v = vec![0i64; m];
                for _ in 0..order {
                    v[rng.random_range(0..m)] += 1;
                }
                if !complexes.contains(&v) {
                    members.push(complexes.len());
                    complexes.push(v);
                }
            }
            classes.push(members);
        }
        let diffs: Vec<Vec<i64>> = classes
            .iter()
            .flat_map(|cl| cl[1..].iter().map(|&j| complexes[j].iter().zip(&complexes[cl[0]]).map(|(a, b)| a - b).collect::<Vec<_>>()).collect::<Vec<_>>())
            .collect();
        if bareiss_rank(&diffs) != diffs.len() {
            continue;
        }
        let mut reactions = Vec::new();
        for cl in &classes {
            let n = cl.len();
            for i in 0..n {
                let (a, b) = (cl[i], cl[(i + 1) % n]);
                reactions.push((complexes[a].clone(), complexes[b].clone()));
                if n > 2 && rng.random_bool(0.5) {
                    reactions.push((complexes[b].clone(), complexes[a].clone()));
                }
            }
        }
        let names: Vec<String> = (0..m).map(|i| format!("X{i}")).collect();
        let Ok(net) = build_network(&names, &reactions) else { continue };
        let rates = (0..net.n_reactions()).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
        return (net, rates);
    }
}

fn oracle_equivalence() -> Check {
    let mut worst = 0.0f64;
    // s1s2, every N up to 20
    let doc = fixture("s1s2");
    let kin = kinetics(&doc, None);
    let c = solve_complex_balanced(&doc.network, kin.rates()).unwrap().c;
    for n in 0..=20 {
        let class = enumerate_class(&doc.network, &kin, &[n, 0], 1000).unwrap();
        let (tv, _) = oracle_tv(&doc.network, &kin, &c, class)?;
        ensure!(tv <= 1e-9, "s1s2 N={n}: TV {tv:e}");
        worst = worst.max(tv);
    }
    // enzyme2 with E truncated at a certified tail
    let doc = fixture("enzyme2");
    let kin = kinetics(&doc, None);
    let c = solve_complex_balanced(&doc.network, kin.rates()).unwrap().c;
    let mut largest = 0;
    for n in 0..=6 {
        let x0 = [0, n, 0, 0];
        let upper = choose_window(&doc.network, &kin, &c, &x0, 1e-10).unwrap().ok_or("enzyme2: no window")?;
        let class = Arc::new(enumerate_window(&doc.network, &kin, &x0, &upper, 1_000_000).unwrap());
        let dist = product_form(&doc.network, &kin, &c, Support::Class(Arc::clone(&class))).unwrap();
        let Normalizer::Truncated { tail_bound } = dist.normalizer() else {
            return Err(format!("enzyme2 N={n}: window not certified"));
        };
        ensure!(*tail_bound < 1e-10, "enzyme2 N={n}: tail {tail_bound:e}");
        let (tv, size) = oracle_tv(&doc.network, &kin, &c, (*class).clone())?;
        ensure!(tv <= 1e-9, "enzyme2 N={n}: TV {tv:e}");
        worst = worst.max(tv);
        largest = largest.max(size);
    }
    // random weakly reversible deficiency-zero networks
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    let mut biggest_random = 0;
    while done < 50 {
        let (net, rates) = random_dz_network(&mut rng);
        let r = analyze(&net).unwrap();
        ensure!(r.deficiency == 0 && r.weakly_reversible, "generator produced {r:?}");
        let kin = Kinetics::mass_action(&net, rates).unwrap();
        let m = net.n_species();
        let total = rng.random_range(2..=12);
        let mut x0 = vec![0i64; m];
        for _ in 0..total {
            x0[rng.random_range(0..m)] += 1;
        }
        let class = match enumerate_class(&net, &kin, &x0, 10_000) {
            Ok(c) if c.len() >= 2 => c,
            _ => continue,
        };
        let c = solve_complex_balanced(&net, kin.rates()).map_err(|e| e.to_string())?.c;
        let (tv, size) = oracle_tv(&net, &kin, &c, class)?;
        ensure!(tv <= 1e-9, "random network {done}: TV {tv:e}");
        worst = worst.max(tv);
        biggest_random = biggest_random.max(size);
        done += 1;
    }
    Ok(format!(
        "s1s2 N<=20, enzyme2 N<=6 (window up to {largest} states), 50 random networks (up to {biggest_random} states); max TV {worst:.1e}"
    ))
}

fn stationary_equation_residual() -> Check {
    let cases: [(&str, &[i64], Option<i64>); 8] = [
        ("s1s2", &[10, 0], None),
        ("first_order_open", &[0, 0], None),
        ("first_order_closed", &[6, 0, 0], None),
        ("enzyme1", &[0, 0, 0, 0], None),
        ("enzyme2", &[0, 5, 0, 0], None),
        ("fast_subnetwork", &[3, 0, 0, 0], None),
        ("mm_counterexample", &[0, 0], Some(50)),
        ("cycle3_not_db", &[4, 0, 0], None),
    ];
    let mut worst = 0.0f64;
    for (name, x0, window) in cases {
        let doc = fixture(name);
        let p = prepare(&doc, &class_args(name, x0, window), &[]).map_err(|e| format!("{name}: {e}"))?;
        let r = residual_check(&p.dist, &doc.network, &p.kinetics, &p.class).map_err(|e| e.to_string())?;
        ensure!(
            r.max_relative <= 1e-10,
            "{name}: relative residual {:e} at {:?}",
            r.max_relative,
            r.worst_state
        );
        worst = worst.max(r.max_relative);
    }
    Ok(format!("8 fixtures, max |LHS-RHS| / (pi * sum lambda) = {worst:.1e}"))
}

fn general_kinetics() -> Check {
    let doc = fixture("mm_counterexample");
    let net = &doc.network;
    let kin = kinetics(&doc, None);
    let c = [1.0, 1.0];
    let run = |b: i64| -> Result<(f64, f64), String> {
        let class = Arc::new(enumerate_window(net, &kin, &[0, 0], &[b, b], 10_000).map_err(|e| e.to_string())?);
        let dist = product_form(net, &kin, &c, Support::Class(Arc::clone(&class))).map_err(|e| e.to_string())?;
        // independent closed form C(1+n, n)^2 (2/3)^n, normalized on the window
        let closed: Vec<f64> = class
            .states()
            .iter()
            .map(|x| (2.0 * ln_binomial(1 + x[0] as u64, x[0] as u64) + x[0] as f64 * (2.0f64 / 3.0).ln()).exp())
            .collect();
        let z: f64 = closed.iter().sum();
        let closed: Vec<f64> = closed.iter().map(|w| w / z).collect();
        let formula_err = total_variation(&closed, dist.probabilities()).unwrap();
        let q = generator_matrix(net, &kin, &class).map_err(|e| e.to_string())?;
        let sol = solve_stationary_oracle(&q).map_err(|e| e.to_string())?;
        let tv = total_variation(&sol.pi, dist.probabilities()).unwrap().max(formula_err);
        // mass of the class beyond the window, from the series Σ (n+1)^2 q^n = (1+q)/(1-q)^3
        let q3: f64 = 2.0 / 3.0;
        let full = (1.0 + q3) / (1.0 - q3).powi(3);
        let inside: f64 = (0..=b).map(|n| ((n + 1) as f64).powi(2) * q3.powi(n as i32)).sum();
        Ok((tv, (full - inside) / full))
    };
    let (tv60, tail60) = run(60)?;
    ensure!(tv60 <= 1e-8, "B=60: TV {tv60:e}");
    let mut b = 60;
    while run(b)?.1 >= 1e-10 {
        b += 1;
    }
    let (tvb, tailb) = run(b)?;
    ensure!(tvb <= 1e-8, "B={b}: TV {tvb:e}");

    let law = ThetaProduct::new(vec![Theta::MichaelisMenten { v: 3.0, k: 1.0 }]).unwrap();
    let table: Vec<f64> = (1..=200).map(|j| 3.0 * j as f64 / (1.0 + j as f64)).collect();
    let tabulated = ThetaProduct::new(vec![Theta::Tabulated { values: table }]).unwrap();
    let mut worst_rel = 0.0f64;
    for x in 0..=200u64 {
        let closed = mm_weight(3.0, 1, 1.7, x);
        let mut generic = 1.0;
        for j in 1..=x {
            generic *= 1.7 / (3.0 * j as f64 / (1.0 + j as f64));
        }
        for w in [
            generic,
            (x as f64 * 1.7f64.ln() - law.ln_theta(&[x as i64]).unwrap()).exp(),
            (x as f64 * 1.7f64.ln() - tabulated.ln_theta(&[x as i64]).unwrap()).exp(),
        ] {
            worst_rel = worst_rel.max((closed - w).abs() / w);
        }
    }
    ensure!(worst_rel <= 1e-12, "mm_weight relative error {worst_rel:e}");
    ensure!(
        tail60 < 1e-10,
        "B=60 TV {tv60:.1e} passes, but the class mass beyond B=60 is {tail60:.2e}, not < 1e-10; the first window with tail < 1e-10 is B={b} (tail {tailb:.1e}, TV {tvb:.1e}); mm_weight rel err {worst_rel:.1e}"
    );
    Ok(format!(
        "B=60 TV {tv60:.1e} tail {tail60:.1e}; B={b} TV {tvb:.1e}; mm_weight rel err {worst_rel:.1e}"
    ))
}

fn classical_scaling() -> Check {
    let doc = fixture("enzyme1");
    let net = &doc.network;
    let c_hat = solve_complex_balanced(net, &doc.rate_constants).unwrap().c;
    let mut rows = Vec::new();
    for v in [1.0, 5.0, 20.0] {
        let kin = kinetics(&doc, Some(v));
        let c = solve_complex_balanced(net, kin.rates()).unwrap().c;
        let x0 = [0i64; 4];
        let upper = choose_window(net, &kin, &c, &x0, 1e-12).unwrap().ok_or("no window")?;
        let class = enumerate_window(net, &kin, &x0, &upper, 1_000_000).map_err(|e| e.to_string())?;
        let q = generator_matrix(net, &kin, &class).map_err(|e| e.to_string())?;
        let sol = solve_stationary_oracle(&q).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for i in 0..4 {
            let mean: f64 = class.states().iter().zip(&sol.pi).map(|(x, p)| p * x[i] as f64).sum();
            let want = v * c_hat[i];
            worst = worst.max((mean - want).abs() / want);
        }
        ensure!(worst <= 1e-6, "V={v}: relative mean error {worst:e}");
        rows.push(format!("V={v}: {} states, rel err {worst:.1e}", class.len()));
    }
    Ok(rows.join("; "))
}

fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

fn ssa_agreement() -> Check {
    // s1s2 time average against Binomial(N, c1)
    let doc = fixture("s1s2");
    let kin = kinetics(&doc, None);
    let n = 10i64;
    let emp = time_average(&doc.network, &kin, &[n, 0], 1e5, 10.0, 11, u64::MAX).map_err(|e| e.to_string())?;
    let p: f64 = 2.0 / 3.0;
    let tv = 0.5
        * (0..=n)
            .map(|k| {
                let b = (ln_binomial(n as u64, k as u64) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp();
                (emp.prob(&[k, n - k]) - b).abs()
            })
            .sum::<f64>();
    ensure!(tv < 0.01, "s1s2 time-average TV {tv}");

    // enzyme1 endpoint ensemble against the Poisson means c
    let doc = fixture("enzyme1");
    let kin = kinetics(&doc, None);
    let c = solve_complex_balanced(&doc.network, kin.rates()).unwrap().c;
    let ens = ensemble(&doc.network, &kin, &[0, 0, 0, 0], 1000.0, 10_000, 12, u64::MAX).map_err(|e| e.to_string())?;
    let mut z_max = 0.0f64;
    for i in 0..4 {
        let xs: Vec<f64> = ens.endpoints.iter().map(|x| x[i] as f64).collect();
        let nn = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / nn;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nn - 1.0);
        let se = (var / nn).sqrt().max(f64::MIN_POSITIVE);
        let z = (mean - c[i]).abs() / se;
        ensure!(z <= 3.0, "enzyme1 species {i}: mean {mean} vs {} ({z:.2} SE)", c[i]);
        z_max = z_max.max(z);
    }

    // enzyme2: E is independent of the conserved block
    let doc = fixture("enzyme2");
    let kin = kinetics(&doc, None);
    let ens = ensemble(&doc.network, &kin, &[0, 5, 0, 0], 200.0, 10_000, 13, u64::MAX).map_err(|e| e.to_string())?;
    let col = |i: usize| -> Vec<f64> { ens.endpoints.iter().map(|x| x[i] as f64).collect() };
    let e = col(0);
    let se = 1.0 / (ens.endpoints.len() as f64).sqrt();
    let mut r_max = 0.0f64;
    for i in 1..4 {
        let r = correlation(&e, &col(i));
        ensure!(r.abs() <= 3.0 * se, "enzyme2 corr(E, species {i}) = {r:.4} (3 SE = {:.4})", 3.0 * se);
        r_max = r_max.max(r.abs());
    }
    Ok(format!(
        "s1s2 TV {tv:.4}; enzyme1 max |z| {z_max:.2}; enzyme2 max |corr| {r_max:.4} (3 SE {:.4})",
        3.0 * se
    ))
}

/// Reversible first-order network on a ring with one chord. With
/// `balanced` the rates satisfy the loop condition by construction from a
/// random `c`; otherwise one rate is scaled to break it.
fn random_reversible(rng: &mut ChaCha8Rng, balanced: bool) -> (Network, Vec<f64>) {
    let m = rng.random_range(3..=5usize);
    let c: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
    let mut edges: Vec<(usize, usize)> = (0..m).map(|i| (i, (i + 1) % m)).collect();
    if m > 3 {
        edges.push((0, 2));
    }
    let mut reactions = Vec::new();
    let mut rates = Vec::new();
    let unit = |i: usize| {
        let mut v = vec![0i64; m];
        v[i] = 1;
        v
    };
    for &(a, b) in &edges {
        let kf = 10f64.powf(rng.random_range(-1.0..1.0));
        reactions.push((unit(a), unit(b)));
        rates.push(kf);
        reactions.push((unit(b), unit(a)));
        rates.push(kf * c[a] / c[b]);
    }
    if !balanced {
        let k = 2 * rng.random_range(0..edges.len());
        rates[k] *= rng.random_range(2.0..5.0);
    }
    let names: Vec<String> = (0..m).map(|i| format!("A{i}")).collect();
    (build_network(&names, &reactions).unwrap(), rates)
}

fn reversibility_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut agree = 0;
    for idx in 0..20 {
        let balanced = idx < 10;
        let (net, rates) = random_reversible(&mut rng, balanced);
        let kin = Kinetics::mass_action(&net, rates.clone()).unwrap();
        let c = solve_complex_balanced(&net, &rates).map_err(|e| e.to_string())?.c;
        let db = is_detailed_balanced(&net, &rates, &c, crnkit::config::DETAILED_BALANCE_TOL).unwrap();
        ensure!(db == balanced, "network {idx}: detailed balance {db}, constructed {balanced}");
        agree += 1;
        let mut x0 = vec![0i64; net.n_species()];
        x0[0] = 3;
        let class = enumerate_class(&net, &kin, &x0, 10_000).unwrap();
        let q = generator_matrix(&net, &kin, &class).unwrap();
        let pi = solve_stationary_oracle(&q).unwrap().pi;
        let rev = check_reversibility(&pi, &net, &kin, &class).unwrap();
        ensure!(
            rev.reversible == db,
            "network {idx}: chain reversible {} (defect {:e}) but detailed balance {db}",
            rev.reversible,
            rev.max_flux_defect
        );
        agree += 1;
    }
    Ok(format!("{agree}/40 sub-checks agree"))
}

fn c_independence() -> Check {
    let mut rows = Vec::new();
    for (name, p1, p2, x0) in [
        ("s1s2", vec![1.0, 0.0], vec![3.0, 0.0], vec![8i64, 0]),
        ("enzyme2", vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 4.0, 0.0, 0.0], vec![0i64, 4, 0, 0]),
    ] {
        let doc = fixture(name);
        let net = &doc.network;
        let kin = kinetics(&doc, None);
        let c1 = solve_complex_balanced_in_class(net, kin.rates(), &p1).unwrap().c;
        let c2 = solve_complex_balanced_in_class(net, kin.rates(), &p2).unwrap().c;
        let diff: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a.ln() - b.ln()).collect();
        ensure!(
            diff.iter().any(|d| d.abs() > 0.1),
            "{name}: equilibria are not distinct"
        );
        let mut ortho = 0.0f64;
        for zeta in net.reaction_vectors() {
            ortho = ortho.max(zeta.iter().zip(&diff).map(|(z, d)| *z as f64 * d).sum::<f64>().abs());
        }
        ensure!(ortho <= 1e-9, "{name}: ln c1 - ln c2 not orthogonal to S ({ortho:e})");
        let upper = choose_window(net, &kin, &c1, &x0, 1e-12).unwrap().ok_or("no window")?;
        let class = Arc::new(enumerate_window(net, &kin, &x0, &upper, 1_000_000).unwrap());
        let d1 = product_form(net, &kin, &c1, Support::Class(Arc::clone(&class))).unwrap();
        let d2 = product_form(net, &kin, &c2, Support::Class(Arc::clone(&class))).unwrap();
        let gap = d1
            .probabilities()
            .iter()
            .zip(d2.probabilities())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        ensure!(gap <= 1e-10, "{name}: pointwise gap {gap:e}");
        rows.push(format!("{name}: gap {gap:.1e}, orthogonality {ortho:.1e}"));
    }
    Ok(rows.join("; "))
}

fn fuzz_input(rng: &mut ChaCha8Rng) -> String {
    const TOKENS: &[&str] = &[
        "A", "B", "S1", "ES", " ", " ", "+", "->", "<->", "<-", ";", ",", "0", "1", "2", "1/3", "-1", "0/0", "1e999",
        "nan", "inf", "\n", "\n", "#", "@species", "@volume", "@theta", "@kinetics", "mm(", "minn(", "table(", ")", "(",
        "ratio-form", "mass-action", "theta-product", "2A", "∅", "\t", "é", "\r\n", "1.5", "99999999999999999999",
    ];
    if rng.random_bool(0.5) {
        return mutate_fixture(rng);
    }
    let n = rng.random_range(0..40);
    let mut s = String::new();
    for _ in 0..n {
        if rng.random_bool(0.1) {
            s.push(char::from_u32(rng.random_range(0..0x3000)).unwrap_or('?'));
        } else {
            s.push_str(TOKENS[rng.random_range(0..TOKENS.len())]);
        }
    }
    s
}

/// A fixture with a few characters or lines dropped, duplicated or swapped.
fn mutate_fixture(rng: &mut ChaCha8Rng) -> String {
    let (_, src) = crnkit::fixtures::ALL[rng.random_range(0..crnkit::fixtures::ALL.len())];
    let mut lines: Vec<String> = src.lines().map(str::to_string).collect();
    for _ in 0..rng.random_range(0..3) {
        let i = rng.random_range(0..lines.len());
        let mut chars: Vec<char> = lines[i].chars().collect();
        match rng.random_range(0..4) {
            0 if !chars.is_empty() => {
                chars.remove(rng.random_range(0..chars.len()));
            }
            1 if !chars.is_empty() => {
                let j = rng.random_range(0..chars.len());
                chars.insert(j, chars[j]);
            }
            2 => {
                let dup = lines[i].clone();
                lines.insert(i, dup);
            }
            _ => {
                let j = rng.random_range(0..lines.len());
                lines.swap(i, j);
            }
        }
        if !chars.is_empty() && chars.len() != lines[i].chars().count() {
            lines[i] = chars.into_iter().collect();
        }
    }
    lines.join("\n")
}

fn negative_controls() -> Check {
    let irreversible = fixture_path("irreversible");
    let irr = irreversible.to_str().unwrap();
    for args in [
        vec!["equilibrium", irr],
        vec!["stationary", irr, "--x0", "1,0"],
        vec!["verify", irr, "--x0", "1,0"],
    ] {
        let (code, _) = crn(&args);
        ensure!(code == 3, "{args:?} exited {code}, expected 3");
    }

    let s1s2 = fixture_path("s1s2");
    let (code, out) = crn(&["verify", s1s2.to_str().unwrap(), "--x0", "5,0", "--perturb-rate", "0=1.1"]);
    ensure!(code == 1, "perturbed verify exited {code}");
    let v: serde_json::Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let worst = v["comparison"]["worst"].as_array().cloned().unwrap_or_default();
    ensure!(
        !worst.is_empty() && worst.iter().all(|o| o["rel_error"].as_f64().unwrap_or(0.0) > 0.0),
        "perturbed verify listed no offending states"
    );
    ensure!(
        v["stationary_residual"]["max_relative"].as_f64().unwrap_or(0.0) > 1e-3,
        "perturbed formula has no stationary residual"
    );
    let (code, _) = crn(&["verify", s1s2.to_str().unwrap(), "--x0", "5,0"]);
    ensure!(code == 0, "unperturbed verify exited {code}");

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut ok, mut err) = (0, 0);
    for i in 0..10_000 {
        let input = fuzz_input(&mut rng);
        let result = catch_unwind(|| crnkit::parse(&input));
        match result {
            Err(_) => return Err(format!("parser panicked on case {i}: {input:?}")),
            Ok(Ok(doc)) => {
                let again = catch_unwind(AssertUnwindSafe(|| crnkit::parse(&crnkit::serialize(&doc))));
                ensure!(
                    matches!(again, Ok(Ok(_))),
                    "serialized form of case {i} does not parse: {input:?}"
                );
                ok += 1;
            }
            Ok(Err(e)) => {
                ensure!(e.line >= 1 && !e.to_string().is_empty(), "unstructured error on case {i}");
                err += 1;
            }
        }
    }
    Ok(format!(
        "irreversible exits 3; perturbed rate fails with {} offenders listed; fuzz 10000 cases: {ok} parsed, {err} structured errors, 0 panics",
        worst.len()
    ))
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Check); 10] = [
        (1, "structure numbers", 1.0, structure_numbers),
        (2, "two-species equilibrium", 1.0, two_species_equilibrium),
        (3, "oracle equivalence", 120.0, oracle_equivalence),
        (4, "stationary-equation residual", 60.0, stationary_equation_residual),
        (5, "general kinetics", 30.0, general_kinetics),
        (6, "classical scaling", 120.0, classical_scaling),
        (7, "SSA agreement", 300.0, ssa_agreement),
        (8, "reversibility equivalence", 60.0, reversibility_equivalence),
        (9, "c-independence", 10.0, c_independence),
        (10, "negative controls", 60.0, negative_controls),
    ];
    // keep the fuzzed parser panics (if any) from cluttering the report
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, title, budget, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(d) if secs <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {budget} s budget")),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {n:>2} {} {title}: {detail} [{secs:.2} s / {budget} s]",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    std::panic::set_hook(default_hook);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
