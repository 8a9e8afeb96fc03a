use std::fs;
use std::path::Path;
use std::sync::Arc;

use crnkit::equilibrium::{is_detailed_balanced, solve_complex_balanced, solve_complex_balanced_in_class, SolveMethod};
use crnkit::oracle::SolverRegistry;
use crnkit::oracle::{check_reversibility, compare_distribution, solve_with, ComparisonReport, ReversibilityReport, Verdict};
use crnkit::ssa::{self, EmpiricalDistribution};
use crnkit::stationary::{
    choose_window, product_form, stationary_sides, summability_check, DistributionSummary, ProductFormDistribution,
    Support, SummabilityVerdict,
};
use crnkit::statespace::{enumerate_class, enumerate_window, generator_matrix, IrreducibleClass, State};
use crnkit::structure::{conservation_laws, is_weakly_reversible, species_upper_bounds};
use crnkit::{analyze, config, Kinetics, KineticsRegistry, Network, NetworkDocument, StructureReport};
use serde::Serialize;

use crate::args::{ClassArgs, EquilibriumArgs, SimMode, SimulateArgs, StationaryArgs, VerifyArgs};
use crate::error::CliError;

pub fn load(path: &Path) -> Result<NetworkDocument, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    crnkit::parse(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn species(net: &Network) -> Vec<String> {
    net.species().iter().map(|s| s.name.clone()).collect()
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub species: Vec<String>,
    pub complexes: Vec<String>,
    #[serde(flatten)]
    pub structure: StructureReport,
}

pub fn analyze_doc(doc: &NetworkDocument) -> Result<AnalyzeReport, CliError> {
    let net = &doc.network;
    Ok(AnalyzeReport {
        species: species(net),
        complexes: (0..net.n_complexes()).map(|i| net.format_complex(i)).collect(),
        structure: analyze(net)?,
    })
}

#[derive(Debug, Serialize)]
pub struct EquilibriumReport {
    pub species: Vec<String>,
    pub c: Vec<f64>,
    pub residual: f64,
    pub method: SolveMethod,
    pub deficiency: usize,
    /// Present when every reaction has its reverse.
    pub detailed_balanced: Option<bool>,
}

pub fn equilibrium(doc: &NetworkDocument, args: &EquilibriumArgs) -> Result<EquilibriumReport, CliError> {
    let net = &doc.network;
    if !is_weakly_reversible(net) {
        return Err(CliError::NotWeaklyReversible);
    }
    let rates = &doc.rate_constants;
    let eq = match args.x0.clone().or(unit_point(net)?) {
        Some(p) => solve_complex_balanced_in_class(net, rates, &p)?,
        None => solve_complex_balanced(net, rates)?,
    };
    let detailed_balanced = if net.is_reversible() {
        Some(is_detailed_balanced(net, rates, &eq.c, config::DETAILED_BALANCE_TOL)?)
    } else {
        None
    };
    Ok(EquilibriumReport {
        species: species(net),
        c: eq.c,
        residual: eq.residual_inf_norm,
        method: eq.method,
        deficiency: crnkit::structure::deficiency(net)?,
        detailed_balanced,
    })
}

/// A point where every conservation law of the reduced basis equals 1, so
/// that e.g. a closed first-order network gets `Σ cᵢ = 1`. `None` when there
/// are no laws or some basis row has mixed signs.
fn unit_point(net: &Network) -> Result<Option<Vec<f64>>, CliError> {
    let laws = conservation_laws(net)?;
    if laws.basis.is_empty() || laws.basis.iter().flatten().any(|&v| v < 0) {
        return Ok(None);
    }
    let mut p = vec![0.0; net.n_species()];
    for row in &laws.basis {
        // reduced echelon form: the leading column is zero in the other rows
        let (j, &w) = row.iter().enumerate().find(|(_, &v)| v != 0).expect("basis rows are nonzero");
        p[j] = 1.0 / w as f64;
    }
    Ok(Some(p))
}

/// Everything needed to evaluate the product form on the class of `x0`.
pub struct Prepared {
    pub kinetics: Kinetics,
    pub c: Vec<f64>,
    pub class: Arc<IrreducibleClass>,
    pub dist: ProductFormDistribution,
    pub summability: SummabilityVerdict,
}

/// Rates perturbed by `(k, factor)` pairs, for negative controls.
fn perturbed(kin: &Kinetics, net: &Network, perturb: &[(usize, f64)]) -> Result<Kinetics, CliError> {
    if perturb.is_empty() {
        return Ok(kin.clone());
    }
    let mut rates = kin.rates().to_vec();
    for &(k, f) in perturb {
        let r = rates
            .get_mut(k)
            .ok_or_else(|| CliError::Usage(format!("reaction index {k} out of range (network has {})", net.n_reactions())))?;
        *r *= f;
    }
    Ok(kin.with_rates(net, rates)?)
}

/// The class of `x0`: complete when a positive conservation law bounds it,
/// otherwise a box window (given, or chosen from the tail bound).
pub fn class_of(
    net: &Network,
    kin: &Kinetics,
    c: &[f64],
    args: &ClassArgs,
) -> Result<(Arc<IrreducibleClass>, Vec<bool>), CliError> {
    let laws = conservation_laws(net)?;
    let unbounded: Vec<bool> = species_upper_bounds(&laws, &args.x0).iter().map(Option::is_none).collect();
    let class = match &args.window {
        Some(w) => {
            let upper = if w.len() == 1 { vec![w[0]; net.n_species()] } else { w.clone() };
            if upper.len() != net.n_species() {
                return Err(CliError::Usage(format!(
                    "--window needs 1 or {} values, got {}",
                    net.n_species(),
                    upper.len()
                )));
            }
            enumerate_window(net, kin, &args.x0, &upper, args.cap)?
        }
        None if laws.positive_vector_exists => enumerate_class(net, kin, &args.x0, args.cap)?,
        None => {
            let upper = choose_window(net, kin, c, &args.x0, args.tail_tol)?.ok_or(CliError::NoWindow)?;
            enumerate_window(net, kin, &args.x0, &upper, args.cap)?
        }
    };
    Ok((Arc::new(class), unbounded))
}

pub fn prepare(doc: &NetworkDocument, args: &ClassArgs, perturb: &[(usize, f64)]) -> Result<Prepared, CliError> {
    let net = &doc.network;
    if args.x0.len() != net.n_species() {
        return Err(CliError::Usage(format!(
            "--x0 needs {} values, got {}",
            net.n_species(),
            args.x0.len()
        )));
    }
    if !is_weakly_reversible(net) {
        return Err(CliError::NotWeaklyReversible);
    }
    let kinetics = doc.kinetics(&KineticsRegistry::default(), args.volume)?;
    let formula_kin = perturbed(&kinetics, net, perturb)?;
    let c = solve_complex_balanced(net, formula_kin.rates())?.c;
    let (class, unbounded) = class_of(net, &kinetics, &c, args)?;
    let summability = summability_check(formula_kin.law().as_ref(), &c, &unbounded);
    let dist = product_form(net, &formula_kin, &c, Support::Class(Arc::clone(&class)))?;
    Ok(Prepared {
        kinetics,
        c,
        class,
        dist,
        summability,
    })
}

#[derive(Debug, Serialize)]
pub struct StationaryReport {
    pub species: Vec<String>,
    /// Complex-balanced equilibrium of the stochastic rate constants.
    pub c: Vec<f64>,
    pub x0: Vec<i64>,
    pub window: Option<Vec<i64>>,
    pub summability: SummabilityVerdict,
    pub summary: DistributionSummary,
    #[serde(skip)]
    pub csv: String,
}

pub fn stationary(doc: &NetworkDocument, args: &StationaryArgs) -> Result<StationaryReport, CliError> {
    let p = prepare(doc, &args.class, &[])?;
    let names = species(&doc.network);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let csv = p.dist.to_csv(&refs);
    if let Some(path) = &args.out {
        fs::write(path, &csv).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(StationaryReport {
        species: names,
        c: p.c.clone(),
        x0: args.class.x0.clone(),
        window: p.class.window().map(<[i64]>::to_vec),
        summability: p.summability,
        summary: p.dist.summary(),
        csv,
    })
}

#[derive(Debug, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SimulateReport {
    Path {
        seed: u64,
        t_final: f64,
        n_jumps: usize,
        final_state: State,
        absorbed: bool,
        #[serde(skip)]
        csv: String,
    },
    TimeAverage {
        seed: u64,
        t_final: f64,
        means: Vec<f64>,
        distribution: EmpiricalDistribution,
        #[serde(skip)]
        csv: String,
    },
    Ensemble {
        seed: u64,
        t_final: f64,
        replicas: u64,
        n_absorbed: u64,
        means: Vec<f64>,
        standard_errors: Vec<f64>,
        distribution: EmpiricalDistribution,
        #[serde(skip)]
        csv: String,
    },
}

impl SimulateReport {
    pub fn csv(&self) -> &str {
        match self {
            SimulateReport::Path { csv, .. }
            | SimulateReport::TimeAverage { csv, .. }
            | SimulateReport::Ensemble { csv, .. } => csv,
        }
    }
}

pub fn simulate(doc: &NetworkDocument, args: &SimulateArgs) -> Result<SimulateReport, CliError> {
    let net = &doc.network;
    let kin = doc.kinetics(&KineticsRegistry::default(), args.volume)?;
    let names = species(net);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let m = net.n_species();
    let report = match args.mode {
        SimMode::Path => {
            let traj = ssa::simulate(net, &kin, &args.x0, args.t_final, args.seed, args.max_jumps)?;
            SimulateReport::Path {
                seed: args.seed,
                t_final: args.t_final,
                n_jumps: traj.n_jumps(),
                final_state: traj.final_state().to_vec(),
                absorbed: traj.absorbed,
                csv: traj.to_csv(&refs),
            }
        }
        SimMode::TimeAverage => {
            let d = ssa::time_average(net, &kin, &args.x0, args.t_final, args.burn_in, args.seed, args.max_jumps)?;
            SimulateReport::TimeAverage {
                seed: args.seed,
                t_final: args.t_final,
                means: (0..m).map(|i| d.mean(i)).collect(),
                csv: d.to_csv(&refs),
                distribution: d,
            }
        }
        SimMode::Ensemble => {
            let e = ssa::ensemble(net, &kin, &args.x0, args.t_final, args.replicas, args.seed, args.max_jumps)?;
            let n = e.endpoints.len() as f64;
            let means: Vec<f64> = (0..m).map(|i| e.distribution.mean(i)).collect();
            let standard_errors = (0..m)
                .map(|i| {
                    let var = e.endpoints.iter().map(|x| (x[i] as f64 - means[i]).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                    (var / n).sqrt()
                })
                .collect();
            SimulateReport::Ensemble {
                seed: args.seed,
                t_final: args.t_final,
                replicas: args.replicas,
                n_absorbed: e.n_absorbed,
                means,
                standard_errors,
                csv: e.distribution.to_csv(&refs),
                distribution: e.distribution,
            }
        }
    };
    if let Some(path) = &args.out {
        fs::write(path, report.csv()).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct ResidualCheck {
    /// `max |LHS − RHS| / (π(x) Σ_k λ_k(x))` over the compared states.
    pub max_relative: f64,
    pub worst_state: Option<State>,
}

#[derive(Debug, Serialize)]
pub struct SsaCheck {
    pub t_final: f64,
    pub seed: u64,
    pub total_variation: f64,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub species: Vec<String>,
    pub solver: String,
    pub oracle_residual: f64,
    pub comparison: ComparisonReport,
    pub stationary_residual: ResidualCheck,
    pub reversibility: Option<ReversibilityReport>,
    pub perturbed: Vec<(usize, f64)>,
    pub ssa: Option<SsaCheck>,
    pub verdict: Verdict,
}

/// Largest relative residual of the stationary equation over the class.
pub fn residual_check(dist: &ProductFormDistribution, net: &Network, kin: &Kinetics, class: &IrreducibleClass) -> Result<ResidualCheck, CliError> {
    let mut worst = 0.0f64;
    let mut worst_state = None;
    let mut lambda = Vec::new();
    for x in class.states() {
        let (lhs, rhs) = stationary_sides(dist, net, kin, x)?;
        kin.intensities(net, x, &mut lambda)?;
        let scale = dist.prob(x)? * lambda.iter().sum::<f64>();
        let rel = if scale > 0.0 {
            (lhs - rhs).abs() / scale
        } else if lhs == rhs {
            0.0
        } else {
            f64::INFINITY
        };
        if rel > worst {
            worst = rel;
            worst_state = Some(x.clone());
        }
    }
    Ok(ResidualCheck {
        max_relative: worst,
        worst_state,
    })
}

pub fn verify(doc: &NetworkDocument, args: &VerifyArgs) -> Result<VerifyReport, CliError> {
    let net = &doc.network;
    let p = prepare(doc, &args.class, &args.perturb_rate)?;
    let q = generator_matrix(net, &p.kinetics, &p.class)?;
    let oracle = solve_with(&q, &SolverRegistry::default(), &args.solver)?;
    let comparison = compare_distribution(&p.dist, &oracle, args.tol)?;
    // residual of the formula against the true rates
    let stationary_residual = residual_check(&p.dist, net, &p.kinetics, &p.class)?;
    let reversibility = if net.is_reversible() && p.class.is_bounded() {
        Some(check_reversibility(&oracle.pi, net, &p.kinetics, &p.class)?)
    } else {
        None
    };
    let ssa = match args.ssa_time {
        Some(t) => {
            let emp = ssa::time_average(net, &p.kinetics, &args.class.x0, t, 0.0, args.seed, config::MAX_JUMPS)?;
            let (mut diff, mut inside) = (0.0, 0.0);
            for (x, f) in p.class.states().iter().zip(p.dist.probabilities()) {
                let e = emp.prob(x);
                diff += (e - f).abs();
                inside += e;
            }
            let tv = 0.5 * (diff + (1.0 - inside).max(0.0));
            Some(SsaCheck {
                t_final: t,
                seed: args.seed,
                total_variation: tv,
            })
        }
        None => None,
    };
    Ok(VerifyReport {
        species: species(net),
        solver: oracle.solver.clone(),
        oracle_residual: oracle.residual,
        verdict: comparison.verdict,
        comparison,
        stationary_residual,
        reversibility,
        perturbed: args.perturb_rate.clone(),
        ssa,
    })
}
