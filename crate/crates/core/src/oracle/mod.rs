//! Ground truth for the product-form formulas: the stationary vector of the
//! generator on a finite class, found by linear algebra alone, plus the
//! comparison and reversibility checks built on it.

mod solvers;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::graph::tarjan_scc;
use crate::kinetics::Kinetics;
use crate::network::Network;
use crate::stationary::{Normalizer, ProductFormDistribution};
use crate::statespace::{generator_matrix, GeneratorMatrix, IrreducibleClass, State, StateSpaceError};

pub use solvers::{GaussSeidel, GthDense, SolverRegistry, SparseLu, StationarySolver};

/// Relative flux tolerance of [`check_reversibility`].
pub const REVERSIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("generator has {components} communicating classes, stationary vector is not unique")]
    SingularBeyondNullity { components: usize },
    #[error("{solver} handles at most {limit} states, class has {states}")]
    TooLarge { solver: String, states: usize, limit: usize },
    #[error("unknown solver `{0}`")]
    UnknownSolver(String),
    #[error("supports differ: {left} vs {right} entries")]
    SupportMismatch { left: usize, right: usize },
    #[error("network is not reversible")]
    NotReversibleNetwork,
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("iteration stopped with residual {residual:.3e}")]
    NotConverged { residual: f64 },
    #[error("empty generator")]
    Empty,
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub pi: Vec<f64>,
    /// `‖πQ‖∞`.
    pub residual: f64,
    pub max_rate: f64,
    pub solver: String,
    /// Most negative entry returned by the solver before clipping.
    pub min_raw: f64,
}

/// Stationary vector of an irreducible generator using the solver chosen by
/// state count.
pub fn solve_stationary_oracle(q: &GeneratorMatrix) -> Result<OracleSolution, OracleError> {
    solve_with(q, &SolverRegistry::default(), "auto")
}

pub fn solve_with(q: &GeneratorMatrix, registry: &SolverRegistry, name: &str) -> Result<OracleSolution, OracleError> {
    let n = q.dim();
    if n == 0 {
        return Err(OracleError::Empty);
    }
    let adj: Vec<Vec<usize>> = (0..n).map(|i| q.row(i).iter().map(|e| e.0).collect()).collect();
    let comps = tarjan_scc(&adj).len();
    if comps > 1 {
        return Err(OracleError::SingularBeyondNullity { components: comps });
    }
    let solver = registry.select(name, n)?;
    let raw = solver.solve(q)?;
    let max_rate = q.max_rate();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::Factorization("non-finite solution".into()));
    }
    let min_raw = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let mut pi: Vec<f64> = raw.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    let residual = q.left_apply(&pi).iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    Ok(OracleSolution {
        pi,
        residual,
        max_rate,
        solver: solver.name().to_string(),
        min_raw,
    })
}

/// `½ Σ |pᵢ − qᵢ|` over a common indexing.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64, OracleError> {
    if p.len() != q.len() {
        return Err(OracleError::SupportMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Total variation between state-keyed distributions; states missing from
/// one side count as zero there.
pub fn total_variation_map(p: &BTreeMap<State, f64>, q: &BTreeMap<State, f64>) -> f64 {
    let mut tv = 0.0;
    for (x, a) in p {
        tv += (a - q.get(x).copied().unwrap_or(0.0)).abs();
    }
    for (x, b) in q {
        if !p.contains_key(x) {
            tv += b.abs();
        }
    }
    0.5 * tv
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Offender {
    pub state: State,
    pub oracle: f64,
    pub formula: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub n_states: usize,
    pub total_variation: f64,
    pub max_rel_error: f64,
    pub worst: Vec<Offender>,
    pub threshold: f64,
    /// Formula mass of the compared states when the class was truncated.
    pub window_mass: Option<f64>,
    pub verdict: Verdict,
}

const WORST_LISTED: usize = 5;

/// Compares two vectors on `states` after renormalizing both there.
pub fn compare(states: &[State], oracle: &[f64], formula: &[f64], threshold: f64) -> Result<ComparisonReport, OracleError> {
    if states.len() != oracle.len() || oracle.len() != formula.len() {
        return Err(OracleError::SupportMismatch {
            left: oracle.len(),
            right: formula.len(),
        });
    }
    let so: f64 = oracle.iter().sum();
    let sf: f64 = formula.iter().sum();
    let o: Vec<f64> = oracle.iter().map(|v| v / so).collect();
    let f: Vec<f64> = formula.iter().map(|v| v / sf).collect();
    let tv = total_variation(&o, &f)?;
    let mut offenders: Vec<Offender> = states
        .iter()
        .zip(o.iter().zip(&f))
        .map(|(s, (&a, &b))| Offender {
            state: s.clone(),
            oracle: a,
            formula: b,
            rel_error: if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) },
        })
        .collect();
    let max_rel_error = offenders.iter().fold(0.0f64, |m, e| m.max(e.rel_error));
    offenders.sort_by(|a, b| {
        let da = (a.oracle - a.formula).abs();
        let db = (b.oracle - b.formula).abs();
        db.total_cmp(&da)
    });
    offenders.truncate(WORST_LISTED);
    let verdict = if !tv.is_finite() {
        Verdict::Inconclusive
    } else if tv <= threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ComparisonReport {
        n_states: states.len(),
        total_variation: tv,
        max_rel_error,
        worst: offenders,
        threshold,
        window_mass: None,
        verdict,
    })
}

/// Oracle against a product-form distribution on its class. On a truncated
/// window the threshold is widened to the certified tail bound, and a window
/// without a certificate gives `Inconclusive` rather than `Pass`.
pub fn compare_distribution(
    dist: &ProductFormDistribution,
    oracle: &OracleSolution,
    threshold: f64,
) -> Result<ComparisonReport, OracleError> {
    let class = dist.class().ok_or(OracleError::SupportMismatch {
        left: oracle.pi.len(),
        right: 0,
    })?;
    let (threshold, window_mass, certified) = match dist.normalizer() {
        Normalizer::Truncated { tail_bound } => (threshold.max(*tail_bound), Some(1.0 - tail_bound), true),
        Normalizer::Uncertified { estimated_tail, .. } => (threshold, estimated_tail.map(|t| 1.0 - t), false),
        _ => (threshold, None, true),
    };
    let mut report = compare(class.states(), &oracle.pi, dist.probabilities(), threshold)?;
    report.window_mass = window_mass;
    if !certified && report.verdict == Verdict::Pass {
        report.verdict = Verdict::Inconclusive;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversibilityReport {
    pub reversible: bool,
    /// `max |π(x)α(x,y) − π(y)α(y,x)|` over neighbouring pairs, relative to the
    /// largest pairwise flux.
    pub max_flux_defect: f64,
    pub worst_pair: Option<(State, State)>,
}

/// Pairwise flux balance `π(x) α(x,y) = π(y) α(y,x)` on the class, with
/// `α` the total transition rate.
pub fn check_reversibility(
    pi: &[f64],
    net: &Network,
    kin: &Kinetics,
    class: &IrreducibleClass,
) -> Result<ReversibilityReport, OracleError> {
    if !net.is_reversible() {
        return Err(OracleError::NotReversibleNetwork);
    }
    if pi.len() != class.len() {
        return Err(OracleError::SupportMismatch {
            left: pi.len(),
            right: class.len(),
        });
    }
    let q = generator_matrix(net, kin, class)?;
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;
    let mut worst_pair = None;
    for i in 0..q.dim() {
        for &(j, qij) in q.row(i) {
            if j < i {
                continue;
            }
            let a = pi[i] * qij;
            let b = pi[j] * q.get(j, i);
            scale = scale.max(a.max(b));
            let d = (a - b).abs();
            if d > worst {
                worst = d;
                worst_pair = Some((class.states()[i].clone(), class.states()[j].clone()));
            }
        }
    }
    let rel = if scale > 0.0 { worst / scale } else { 0.0 };
    Ok(ReversibilityReport {
        reversible: rel <= REVERSIBILITY_TOL,
        max_flux_defect: rel,
        worst_pair,
    })
}
