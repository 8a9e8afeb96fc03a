//! Product-form stationary distributions `π(x) ∝ c^x / θ(x)` on a closed
//! irreducible class, a box window of an infinite class, or the whole lattice.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::equilibrium::complex_balance_residual;
use crate::kinetics::{Kinetics, KineticsError, MassAction, RateLaw, Theta};
use crate::network::Network;
use crate::special::{ln_binomial, LogSumExp};
use crate::statespace::{IrreducibleClass, State};
use crate::structure::{conservation_laws, species_upper_bounds};

/// Margin in the summability comparison `lim θᵢ > cᵢ + ε`.
pub const SUMMABILITY_EPS: f64 = 1e-9;
/// Largest class handled by the exact rational path.
pub const EXACT_STATE_LIMIT: usize = 1000;
const BALANCE_TOL: f64 = 1e-8;
/// Series are cut once the geometric remainder is below `e^-37` of the sum.
const SERIES_CUTOFF: f64 = 37.0;
const SERIES_MAX_TERMS: i64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StationaryError {
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("equilibrium vector must be strictly positive")]
    NonPositiveC,
    #[error("c is not complex balanced for these rates (residual {residual:.3e})")]
    NotComplexBalanced { residual: f64 },
    #[error("product-form measure does not appear summable (boundary shell ratio {shell_ratio:.4})")]
    NotSummable { shell_ratio: f64 },
    #[error("class has {states} states, exact path limited to {limit}")]
    TooLarge { states: usize, limit: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

#[derive(Debug, Clone)]
pub enum Support {
    Class(Arc<IrreducibleClass>),
    FullLattice,
}

/// How trustworthy the normalizing constant is.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalizer {
    /// Finite class, or the closed form `e^{−Σcᵢ}`.
    Exact,
    /// Convergent series summed with a geometric remainder bound.
    Series { rel_error: f64 },
    /// Window of an infinite class; mass of the class outside the window is
    /// at most `tail_bound`.
    Truncated { tail_bound: f64 },
    /// Window of an infinite class with no tail certificate. `shell_ratio`
    /// compares the mass on the window's outer face to the layer inside it.
    Uncertified {
        shell_ratio: Option<f64>,
        estimated_tail: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    SufficientConditionHolds,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesSummability {
    pub species: usize,
    pub unbounded: bool,
    /// `lim_{j→∞} θᵢ(j)` when known.
    pub limit: Option<f64>,
    pub c: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityVerdict {
    pub verdict: Verdict,
    pub species: Vec<SpeciesSummability>,
}

/// Checks `lim θᵢ > cᵢ + ε` on every unbounded coordinate.
pub fn summability_check(law: &dyn RateLaw, c: &[f64], unbounded: &[bool]) -> SummabilityVerdict {
    let Some(thetas) = law.separable(c.len()) else {
        return SummabilityVerdict {
            verdict: Verdict::Inconclusive,
            species: Vec::new(),
        };
    };
    let species: Vec<SpeciesSummability> = thetas
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let limit = t.limit();
            let unb = unbounded.get(i).copied().unwrap_or(true);
            let satisfied = !unb || limit.is_some_and(|l| l > c[i] + SUMMABILITY_EPS);
            SpeciesSummability {
                species: i,
                unbounded: unb,
                limit,
                c: c[i],
                satisfied,
            }
        })
        .collect();
    let verdict = if species.iter().all(|s| s.satisfied) {
        Verdict::SufficientConditionHolds
    } else {
        Verdict::Inconclusive
    };
    SummabilityVerdict { verdict, species }
}

/// `ln (c^x / ∏_{j=1}^{x} θ(j))`.
fn ln_marginal(theta: &Theta, ln_c: f64, x: i64) -> Result<f64, KineticsError> {
    Ok(x as f64 * ln_c - theta.ln_cumulative(x)?)
}

/// Upper bound on `ln Σ_{x ≥ from} c^x / ∏θ(j)`, or `None` when the series
/// cannot be certified (θ not monotone, or ratios never drop below one).
fn ln_series_from(theta: &Theta, ln_c: f64, from: i64) -> Option<f64> {
    if !theta.is_monotone() {
        return None;
    }
    let mut lw = ln_marginal(theta, ln_c, from).ok()?;
    let mut acc = LogSumExp::default();
    for x in from..from + SERIES_MAX_TERMS {
        acc.add(lw);
        let th = theta.eval(x + 1).ok()?;
        let ln_rho = ln_c - th.ln();
        if ln_rho < 0.0 {
            // θ nondecreasing, so later ratios are no larger
            let rem = lw + ln_rho - (-ln_rho.exp()).ln_1p();
            if rem < acc.value() - SERIES_CUTOFF {
                acc.add(rem);
                return Some(acc.value());
            }
        }
        lw += ln_rho;
    }
    None
}

fn ln_finite_sum(theta: &Theta, ln_c: f64, from: i64, to: i64) -> Result<f64, KineticsError> {
    let mut acc = LogSumExp::default();
    for x in from..=to {
        acc.add(ln_marginal(theta, ln_c, x)?);
    }
    Ok(acc.value())
}

/// `C(k + x, x) (c/v)^x`: the Michaelis-Menten weight `c^x / ∏_{j≤x} θ(j)`
/// with `θ(j) = v j / (k + j)` and integer `k`.
pub fn mm_weight(v: f64, k: u64, c: f64, x: u64) -> f64 {
    (ln_binomial(k + x, x) + x as f64 * (c / v).ln()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub family: String,
    pub support: String,
    pub support_size: Option<usize>,
    pub log_normalizer: f64,
    pub normalizer: Normalizer,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub volume: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ProductFormDistribution {
    c: Vec<f64>,
    ln_c: Vec<f64>,
    law: Arc<dyn RateLaw>,
    support: Support,
    /// `ln M` with `π(x) = M c^x / θ(x)`.
    log_normalizer: f64,
    normalizer: Normalizer,
    volume: Option<f64>,
    /// Conservation basis and its values at the anchor, for evaluating the
    /// formula outside a window.
    constraint: Option<(Vec<Vec<i64>>, Vec<i64>)>,
    probs: Vec<f64>,
}

impl ProductFormDistribution {
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn family(&self) -> &'static str {
        self.law.name()
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn volume(&self) -> Option<f64> {
        self.volume
    }

    pub fn class(&self) -> Option<&IrreducibleClass> {
        match &self.support {
            Support::Class(c) => Some(c),
            Support::FullLattice => None,
        }
    }

    /// Probabilities in class order (empty on the full lattice).
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `ln(c^x / θ(x))`.
    pub fn ln_weight(&self, x: &[i64]) -> Result<f64, StationaryError> {
        let lin: f64 = x.iter().zip(&self.ln_c).map(|(&xi, lc)| xi as f64 * lc).sum();
        Ok(lin - self.law.ln_theta(x)?)
    }

    fn in_formula_domain(&self, x: &[i64]) -> bool {
        if x.len() != self.c.len() || x.iter().any(|&v| v < 0) {
            return false;
        }
        match &self.support {
            Support::FullLattice => true,
            Support::Class(class) => {
                if class.contains(x) {
                    return true;
                }
                if class.is_bounded() {
                    return false;
                }
                match &self.constraint {
                    Some((basis, target)) => basis
                        .iter()
                        .zip(target)
                        .all(|(w, t)| w.iter().zip(x).map(|(a, b)| a * b).sum::<i64>() == *t),
                    None => true,
                }
            }
        }
    }

    /// `π(x)`, zero off the support. On a window, states of the underlying
    /// class outside the box get the formula value with the window's
    /// normalizer.
    pub fn prob(&self, x: &[i64]) -> Result<f64, StationaryError> {
        if let Some(class) = self.class() {
            if let Some(i) = class.index_of(x) {
                return Ok(self.probs[i]);
            }
        }
        if !self.in_formula_domain(x) {
            return Ok(0.0);
        }
        Ok((self.log_normalizer + self.ln_weight(x)?).exp())
    }

    fn listed_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.c.len();
        let mut mean = vec![0.0; m];
        let mut sq = vec![0.0; m];
        if let Some(class) = self.class() {
            for (s, &p) in class.states().iter().zip(&self.probs) {
                for i in 0..m {
                    let v = s[i] as f64;
                    mean[i] += p * v;
                    sq[i] += p * v * v;
                }
            }
        }
        let var = mean.iter().zip(&sq).map(|(mu, s)| s - mu * mu).collect();
        (mean, var)
    }

    fn lattice_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.c.len();
        let Some(thetas) = self.law.separable(m) else {
            return (vec![f64::NAN; m], vec![f64::NAN; m]);
        };
        if self.law.name() == MassAction.name() {
            return (self.c.clone(), self.c.clone());
        }
        let mut means = Vec::with_capacity(m);
        let mut vars = Vec::with_capacity(m);
        for (t, &lc) in thetas.iter().zip(&self.ln_c) {
            let (mut z, mut s1, mut s2) = (LogSumExp::default(), LogSumExp::default(), LogSumExp::default());
            let mut x = 0i64;
            loop {
                let Ok(lw) = ln_marginal(t, lc, x) else { break };
                z.add(lw);
                if x > 0 {
                    s1.add(lw + (x as f64).ln());
                    s2.add(lw + 2.0 * (x as f64).ln());
                }
                if x > 10 && lw + 3.0 * ((x + 1) as f64).ln() < z.value() - SERIES_CUTOFF || x > SERIES_MAX_TERMS {
                    break;
                }
                x += 1;
            }
            let mu = (s1.value() - z.value()).exp();
            means.push(mu);
            vars.push((s2.value() - z.value()).exp() - mu * mu);
        }
        (means, vars)
    }

    pub fn summary(&self) -> DistributionSummary {
        let (means, variances) = match &self.support {
            Support::Class(_) => self.listed_moments(),
            Support::FullLattice => self.lattice_moments(),
        };
        let (support, support_size) = match &self.support {
            Support::Class(c) if c.is_bounded() => ("class", Some(c.len())),
            Support::Class(c) => ("window", Some(c.len())),
            Support::FullLattice => ("full-lattice", None),
        };
        DistributionSummary {
            family: self.family().to_string(),
            support: support.to_string(),
            support_size,
            log_normalizer: self.log_normalizer,
            normalizer: self.normalizer.clone(),
            means,
            variances,
            volume: self.volume,
        }
    }

    /// `species..., probability` rows in class order.
    pub fn to_csv(&self, species: &[&str]) -> String {
        let mut s = species.join(",");
        s.push_str(",probability\n");
        if let Some(class) = self.class() {
            for (x, p) in class.states().iter().zip(&self.probs) {
                for v in x {
                    let _ = write!(s, "{v},");
                }
                let _ = writeln!(s, "{p:e}");
            }
        }
        s
    }
}

fn check_c(c: &[f64], m: usize) -> Result<(), StationaryError> {
    if c.len() != m {
        return Err(StationaryError::DimensionMismatch {
            expected: m,
            got: c.len(),
        });
    }
    if c.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(StationaryError::NonPositiveC);
    }
    Ok(())
}

/// The product-form distribution for complex-balanced `c` on `support`.
pub fn product_form(
    net: &Network,
    kin: &Kinetics,
    c: &[f64],
    support: Support,
) -> Result<ProductFormDistribution, StationaryError> {
    check_c(c, net.n_species())?;
    let res = complex_balance_residual(net, kin.rates(), c).map_err(|_| StationaryError::NonPositiveC)?;
    let mut out = vec![0.0; net.n_complexes()];
    for k in 0..net.n_reactions() {
        out[net.reactions()[k].source] += crate::kinetics::deterministic_rate(kin.rates(), net, k, c);
    }
    let scale = out.iter().fold(f64::MIN_POSITIVE, |a, &b| a.max(b));
    let worst = res.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if worst > BALANCE_TOL * scale {
        return Err(StationaryError::NotComplexBalanced { residual: worst });
    }
    let constraint = match &support {
        Support::Class(class) if !class.is_bounded() => {
            let laws = conservation_laws(net).map_err(|e| StationaryError::Unsupported(e.to_string()))?;
            let target = laws
                .basis
                .iter()
                .map(|w| w.iter().zip(class.anchor()).map(|(a, b)| a * b).sum())
                .collect();
            let ub = species_upper_bounds(&laws, class.anchor());
            Some((laws.basis, target, ub))
        }
        _ => None,
    };
    build(Arc::clone(kin.law()), c, support, None, constraint)
}

/// Independent Poisson(V cᵢ) marginals: the mass-action distribution under
/// classical scaling with volume `V`.
pub fn scaled_poisson(c: &[f64], volume: f64) -> Result<ProductFormDistribution, StationaryError> {
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(StationaryError::Unsupported(format!("volume {volume} must be positive")));
    }
    let vc: Vec<f64> = c.iter().map(|v| v * volume).collect();
    check_c(&vc, c.len())?;
    build(Arc::new(MassAction), &vc, Support::FullLattice, Some(volume), None)
}

type Constraint = (Vec<Vec<i64>>, Vec<i64>, Vec<Option<i64>>);

fn build(
    law: Arc<dyn RateLaw>,
    c: &[f64],
    support: Support,
    volume: Option<f64>,
    constraint: Option<Constraint>,
) -> Result<ProductFormDistribution, StationaryError> {
    let m = c.len();
    let ln_c: Vec<f64> = c.iter().map(|v| v.ln()).collect();
    let mut dist = ProductFormDistribution {
        c: c.to_vec(),
        ln_c,
        law,
        support: support.clone(),
        log_normalizer: 0.0,
        normalizer: Normalizer::Exact,
        volume,
        constraint: constraint.as_ref().map(|(b, t, _)| (b.clone(), t.clone())),
        probs: Vec::new(),
    };
    match &support {
        Support::FullLattice => {
            let thetas = dist.law.separable(m).ok_or_else(|| {
                StationaryError::Unsupported("full-lattice support needs a species-separable theta".into())
            })?;
            if dist.law.name() == MassAction.name() {
                dist.log_normalizer = -c.iter().sum::<f64>();
            } else {
                let mut total = 0.0;
                for (t, &lc) in thetas.iter().zip(&dist.ln_c) {
                    total += ln_series_from(t, lc, 0).ok_or(StationaryError::NotSummable {
                        shell_ratio: f64::INFINITY,
                    })?;
                }
                dist.log_normalizer = -total;
                dist.normalizer = Normalizer::Series {
                    rel_error: (m as f64) * (-SERIES_CUTOFF).exp(),
                };
            }
        }
        Support::Class(class) => {
            let lw: Vec<f64> = class
                .states()
                .iter()
                .map(|x| dist.ln_weight(x))
                .collect::<Result<_, _>>()?;
            let mut acc = LogSumExp::default();
            for &v in &lw {
                acc.add(v);
            }
            let lz = acc.value();
            dist.log_normalizer = -lz;
            dist.probs = lw.iter().map(|v| (v - lz).exp()).collect();
            if !class.is_bounded() {
                let ub = constraint.map(|(_, _, ub)| ub).unwrap_or_else(|| vec![None; m]);
                dist.normalizer = certify_window(&dist, class, &lw, lz, &ub)?;
            }
        }
    }
    Ok(dist)
}

/// Bound the mass of the infinite class outside the window by summing the
/// separable weight over the larger set `{x ≥ 0 : some xᵢ > Bᵢ, xⱼ ≤ Mⱼ}`,
/// where `Mⱼ` bounds species `j` on the compatibility class.
fn certify_window(
    dist: &ProductFormDistribution,
    class: &IrreducibleClass,
    lw: &[f64],
    lz: f64,
    upper_bounds: &[Option<i64>],
) -> Result<Normalizer, StationaryError> {
    let m = dist.c.len();
    let window = class.window().map(<[i64]>::to_vec).unwrap_or_else(|| vec![i64::MAX; m]);
    let unbounded: Vec<bool> = upper_bounds.iter().map(Option::is_none).collect();
    let verdict = summability_check(dist.law.as_ref(), &dist.c, &unbounded);
    if verdict.verdict == Verdict::SufficientConditionHolds {
        if let Some(thetas) = dist.law.separable(m) {
            let mut full = Vec::with_capacity(m);
            let mut tail = Vec::with_capacity(m);
            let mut ok = true;
            for i in 0..m {
                let (t, lc) = (&thetas[i], dist.ln_c[i]);
                match upper_bounds[i] {
                    Some(mi) => {
                        full.push(ln_finite_sum(t, lc, 0, mi)?);
                        tail.push(if window[i] >= mi {
                            f64::NEG_INFINITY
                        } else {
                            ln_finite_sum(t, lc, window[i] + 1, mi)?
                        });
                    }
                    None => match (ln_series_from(t, lc, 0), ln_series_from(t, lc, window[i] + 1)) {
                        (Some(f), Some(r)) => {
                            full.push(f);
                            tail.push(r);
                        }
                        _ => ok = false,
                    },
                }
            }
            if ok {
                let total_full: f64 = full.iter().sum();
                let mut num = LogSumExp::default();
                for i in 0..m {
                    num.add(tail[i] + total_full - full[i]);
                }
                let ln_num = num.value();
                let mut den = LogSumExp::default();
                den.add(lz);
                den.add(ln_num);
                return Ok(Normalizer::Truncated {
                    tail_bound: (ln_num - den.value()).exp(),
                });
            }
        }
    }

    // shell diagnostics on the unbounded coordinates
    let level = |x: &[i64]| {
        (0..m)
            .filter(|&i| unbounded[i])
            .map(|i| x[i] - window[i])
            .max()
            .unwrap_or(i64::MIN)
    };
    let (mut s0, mut s1) = (LogSumExp::default(), LogSumExp::default());
    for (x, &w) in class.states().iter().zip(lw) {
        match level(x) {
            0 => s0.add(w),
            -1 => s1.add(w),
            _ => {}
        }
    }
    let (a, b) = (s0.value(), s1.value());
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return Ok(Normalizer::Uncertified {
            shell_ratio: None,
            estimated_tail: None,
        });
    }
    let ratio = (a - b).exp();
    if ratio >= 1.0 {
        return Err(StationaryError::NotSummable { shell_ratio: ratio });
    }
    Ok(Normalizer::Uncertified {
        shell_ratio: Some(ratio),
        estimated_tail: Some((a - lz).exp() * ratio / (1.0 - ratio)),
    })
}

/// Box bounds for a window of the class of `x0` whose certified tail mass is
/// below `tol`, or `None` if the weight is not certifiably summable.
pub fn choose_window(net: &Network, kin: &Kinetics, c: &[f64], x0: &[i64], tol: f64) -> Result<Option<Vec<i64>>, StationaryError> {
    let m = net.n_species();
    check_c(c, m)?;
    let Some(thetas) = kin.law().separable(m) else {
        return Ok(None);
    };
    let laws = conservation_laws(net).map_err(|e| StationaryError::Unsupported(e.to_string()))?;
    let ub = species_upper_bounds(&laws, x0);
    let ln_c: Vec<f64> = c.iter().map(|v| v.ln()).collect();
    let mut full = Vec::with_capacity(m);
    for i in 0..m {
        full.push(match ub[i] {
            Some(mi) => ln_finite_sum(&thetas[i], ln_c[i], 0, mi)?,
            None => match ln_series_from(&thetas[i], ln_c[i], 0) {
                Some(v) => v,
                None => return Ok(None),
            },
        });
    }
    // Z_window ≥ weight of the anchor
    let ln_w0: f64 = (0..m).map(|i| ln_marginal(&thetas[i], ln_c[i], x0[i])).sum::<Result<f64, _>>()?;
    let total_full: f64 = full.iter().sum();
    let n_unb = ub.iter().filter(|b| b.is_none()).count().max(1) as f64;
    let budget = (tol / n_unb).ln();
    let mut bounds = Vec::with_capacity(m);
    for i in 0..m {
        if let Some(mi) = ub[i] {
            bounds.push(mi);
            continue;
        }
        let rest = total_full - full[i] - ln_w0;
        let mut b = x0[i].max(c[i].ceil() as i64);
        loop {
            match ln_series_from(&thetas[i], ln_c[i], b + 1) {
                Some(t) if t + rest <= budget => break,
                Some(_) => b += 1,
                None => return Ok(None),
            }
            if b > x0[i] + SERIES_MAX_TERMS {
                return Ok(None);
            }
        }
        bounds.push(b);
    }
    Ok(Some(bounds))
}

/// `|Σ_k π(x − ζ_k) λ_k(x − ζ_k) − π(x) Σ_k λ_k(x)|` with `ζ_k = ν'_k − ν_k`.
pub fn stationary_residual(
    dist: &ProductFormDistribution,
    net: &Network,
    kin: &Kinetics,
    x: &[i64],
) -> Result<f64, StationaryError> {
    let (lhs, rhs) = stationary_sides(dist, net, kin, x)?;
    Ok((lhs - rhs).abs())
}

/// The two sides of the stationary equation at `x`.
pub fn stationary_sides(
    dist: &ProductFormDistribution,
    net: &Network,
    kin: &Kinetics,
    x: &[i64],
) -> Result<(f64, f64), StationaryError> {
    let mut lhs = 0.0;
    let mut out = 0.0;
    for k in 0..net.n_reactions() {
        let y: State = x.iter().zip(net.reaction_vector(k)).map(|(a, d)| a - d).collect();
        if y.iter().all(|&v| v >= 0) {
            let p = dist.prob(&y)?;
            if p > 0.0 {
                lhs += p * kin.intensity(net, k, &y)?;
            }
        }
        out += kin.intensity(net, k, x)?;
    }
    Ok((lhs, dist.prob(x)? * out))
}

/// Exact mass-action probabilities on a finite class for rational `c`.
pub fn exact_mass_action_probabilities(c: &[BigRational], class: &IrreducibleClass) -> Result<Vec<BigRational>, StationaryError> {
    if class.len() > EXACT_STATE_LIMIT {
        return Err(StationaryError::TooLarge {
            states: class.len(),
            limit: EXACT_STATE_LIMIT,
        });
    }
    if c.iter().any(|v| v <= &BigRational::zero()) {
        return Err(StationaryError::NonPositiveC);
    }
    let weights: Vec<BigRational> = class
        .states()
        .iter()
        .map(|x| {
            let mut w = BigRational::one();
            for (ci, &xi) in c.iter().zip(x) {
                let mut fact = BigInt::one();
                for j in 2..=xi {
                    fact *= j;
                }
                w *= num_traits::pow(ci.clone(), xi as usize) / BigRational::from_integer(fact);
            }
            w
        })
        .collect();
    let total = weights.iter().fold(BigRational::zero(), |a, b| a + b);
    Ok(weights.into_iter().map(|w| w / &total).collect())
}
