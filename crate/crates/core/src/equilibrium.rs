//! Complex-balanced equilibria of the deterministic mass-action system.
//!
//! The kernel of the rate-weighted Laplacian on each linkage class is built
//! from rooted spanning trees (Kirchhoff). A positive `c` is complex balanced
//! exactly when `c^{ν_z}` is proportional to that kernel on every class,
//! which is a linear system in `ln c` with one free offset per class. The
//! least-squares solution is exponentiated and polished by Gauss-Newton on the
//! balance residual.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::graph::tarjan_scc;
use crate::kinetics::monomial;
use crate::linalg::{determinant, ln_rational, rational_from_f64};
use crate::network::Network;
use crate::structure::{conservation_laws, is_weakly_reversible, linkage_classes};

/// Largest class handled with exact rational determinants; larger classes
/// use floating LU.
const EXACT_TREE_LIMIT: usize = 12;
const LOG_LINEAR_TOL: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const ACCEPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("concentration vector must be strictly positive")]
    NonPositiveC,
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linkage class is not strongly connected")]
    NotStronglyConnected,
    #[error("network is not weakly reversible, so no complex-balanced equilibrium exists")]
    NotWeaklyReversible,
    #[error("no complex-balanced equilibrium (log-linear residual {residual:.3e})")]
    NotComplexBalanced { residual: f64 },
    #[error("equilibrium solver did not converge (residual {residual:.3e})")]
    SolverDiverged { residual: f64 },
    #[error("network is not reversible")]
    NotReversibleNetwork,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    TreeLogLinear,
    NewtonRefined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub c: Vec<f64>,
    /// `max_z |inflow(z) − outflow(z)|` at `c`.
    #[serde(rename = "residual")]
    pub residual_inf_norm: f64,
    pub method: SolveMethod,
}

/// Kirchhoff kernel of one linkage class.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConstants {
    pub complexes: Vec<usize>,
    pub kernel: Vec<f64>,
    pub ln_kernel: Vec<f64>,
}

fn check_dims(expected: usize, got: usize) -> Result<(), EquilibriumError> {
    if expected != got {
        return Err(EquilibriumError::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn fluxes(net: &Network, rates: &[f64], c: &[f64]) -> Vec<f64> {
    (0..net.n_reactions())
        .map(|k| rates[k] * monomial(net.source(k), c))
        .collect()
}

fn balance(net: &Network, flux: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; net.n_complexes()];
    for (r, &f) in net.reactions().iter().zip(flux) {
        out[r.source] -= f;
        out[r.product] += f;
    }
    out
}

/// Inflow minus outflow at each complex.
pub fn complex_balance_residual(net: &Network, rates: &[f64], c: &[f64]) -> Result<Vec<f64>, EquilibriumError> {
    check_dims(net.n_reactions(), rates.len())?;
    check_dims(net.n_species(), c.len())?;
    if c.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(EquilibriumError::NonPositiveC);
    }
    Ok(balance(net, &fluxes(net, rates, c)))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Kernel of the class Laplacian: `K_z` sums, over spanning trees directed
/// toward `z`, the product of edge rate constants.
pub fn tree_constants(net: &Network, rates: &[f64], class: &[usize]) -> Result<TreeConstants, EquilibriumError> {
    check_dims(net.n_reactions(), rates.len())?;
    let n = class.len();
    let local = |z: usize| class.iter().position(|&q| q == z);
    let mut adj = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for (k, r) in net.reactions().iter().enumerate() {
        if let (Some(a), Some(b)) = (local(r.source), local(r.product)) {
            adj[a].push(b);
            edges.push((a, b, rates[k]));
        }
    }
    if tarjan_scc(&adj).len() != 1 {
        return Err(EquilibriumError::NotStronglyConnected);
    }

    let (kernel, ln_kernel) = if n <= EXACT_TREE_LIMIT {
        let mut lap = vec![vec![BigRational::zero(); n]; n];
        for &(a, b, r) in &edges {
            let q = rational_from_f64(r);
            lap[a][a] += &q;
            lap[a][b] -= &q;
        }
        let dets: Vec<BigRational> = (0..n).map(|z| determinant(minor(&lap, z))).collect();
        if dets.iter().any(|d| !d.is_positive()) {
            return Err(EquilibriumError::NotStronglyConnected);
        }
        let ln: Vec<f64> = dets.iter().map(ln_rational).collect();
        let k = dets
            .iter()
            .zip(&ln)
            .map(|(d, l)| d.to_f64().filter(|v| v.is_normal()).unwrap_or_else(|| l.exp()))
            .collect();
        (k, ln)
    } else {
        let mut lap = DMatrix::<f64>::zeros(n, n);
        for &(a, b, r) in &edges {
            lap[(a, a)] += r;
            lap[(a, b)] -= r;
        }
        let mut k = Vec::with_capacity(n);
        for z in 0..n {
            let keep: Vec<usize> = (0..n).filter(|&i| i != z).collect();
            let sub = DMatrix::from_fn(n - 1, n - 1, |i, j| lap[(keep[i], keep[j])]);
            let d = sub.lu().determinant();
            if !(d > 0.0) {
                return Err(EquilibriumError::NotStronglyConnected);
            }
            k.push(d);
        }
        let ln = k.iter().map(|v| v.ln()).collect();
        (k, ln)
    };
    Ok(TreeConstants {
        complexes: class.to_vec(),
        kernel,
        ln_kernel,
    })
}

fn minor<T: Clone>(a: &[Vec<T>], skip: usize) -> Vec<Vec<T>> {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != skip)
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect()
}

fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let eps = max_sv * 1e-12 * (a.nrows().max(a.ncols()) as f64);
    svd.solve(b, eps).expect("svd computed with u and v")
}

fn flux_scale(flux: &[f64], net: &Network) -> f64 {
    let mut out = vec![0.0; net.n_complexes()];
    for (r, &f) in net.reactions().iter().zip(flux) {
        out[r.source] += f;
    }
    out.into_iter().fold(0.0f64, f64::max)
}

/// Gauss-Newton on the balance residual in `ln c`. Returns the refined `c`,
/// its residual, and whether any step was taken.
fn newton_refine(net: &Network, rates: &[f64], mut c: Vec<f64>) -> (Vec<f64>, f64, bool) {
    let m = net.n_species();
    let nc = net.n_complexes();
    let mut flux = fluxes(net, rates, &c);
    let mut res = balance(net, &flux);
    let mut norm = inf_norm(&res);
    let mut stepped = false;
    for _ in 0..NEWTON_MAX_ITER {
        if norm <= NEWTON_TOL * flux_scale(&flux, net).max(1.0) * 1e-2 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(nc, m);
        for (k, r) in net.reactions().iter().enumerate() {
            for (i, &nu) in net.source(k).coeffs().iter().enumerate() {
                if nu == 0 {
                    continue;
                }
                let d = flux[k] * f64::from(nu);
                jac[(r.product, i)] += d;
                jac[(r.source, i)] -= d;
            }
        }
        let rhs = DVector::from_iterator(nc, res.iter().map(|v| -v));
        let step = pinv_solve(&jac, &rhs);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = c.iter().enumerate().map(|(i, &ci)| ci * (t * step[i]).exp()).collect();
            let tf = fluxes(net, rates, &trial);
            let tr = balance(net, &tf);
            let tn = inf_norm(&tr);
            if tn < norm {
                c = trial;
                flux = tf;
                res = tr;
                norm = tn;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
        stepped = true;
    }
    (c, norm, stepped)
}

/// Finds a complex-balanced equilibrium, or reports why none exists.
pub fn solve_complex_balanced(net: &Network, rates: &[f64]) -> Result<Equilibrium, EquilibriumError> {
    check_dims(net.n_reactions(), rates.len())?;
    if rates.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(EquilibriumError::NonPositiveC);
    }
    if !is_weakly_reversible(net) {
        return Err(EquilibriumError::NotWeaklyReversible);
    }
    let m = net.n_species();
    let classes = linkage_classes(net);
    let l = classes.len();
    let nc = net.n_complexes();

    let mut a = DMatrix::<f64>::zeros(nc, m + l);
    let mut rhs = DVector::<f64>::zeros(nc);
    for (ci, class) in classes.iter().enumerate() {
        let tc = tree_constants(net, rates, class)?;
        for (&z, &lnk) in tc.complexes.iter().zip(&tc.ln_kernel) {
            for (i, &nu) in net.complexes()[z].coeffs().iter().enumerate() {
                a[(z, i)] = f64::from(nu);
            }
            a[(z, m + ci)] = -1.0;
            rhs[z] = lnk;
        }
    }
    let u = pinv_solve(&a, &rhs);
    let lin_res = (&a * &u - &rhs).amax();
    let scale = rhs.amax().max(1.0);
    if lin_res > LOG_LINEAR_TOL * scale {
        return Err(EquilibriumError::NotComplexBalanced { residual: lin_res });
    }
    let c0: Vec<f64> = (0..m).map(|i| u[i].exp()).collect();
    finish(net, rates, c0)
}

fn finish(net: &Network, rates: &[f64], c0: Vec<f64>) -> Result<Equilibrium, EquilibriumError> {
    let flux0 = fluxes(net, rates, &c0);
    let r0 = inf_norm(&balance(net, &flux0));
    let scale = flux_scale(&flux0, net).max(1.0);
    let (c, residual, stepped) = if r0 <= NEWTON_TOL * scale * 1e-2 {
        (c0, r0, false)
    } else {
        newton_refine(net, rates, c0)
    };
    if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) || residual > ACCEPT_TOL * scale {
        return Err(EquilibriumError::SolverDiverged { residual });
    }
    Ok(Equilibrium {
        c,
        residual_inf_norm: residual,
        method: if stepped {
            SolveMethod::NewtonRefined
        } else {
            SolveMethod::TreeLogLinear
        },
    })
}

/// Complex-balanced equilibrium lying in the stoichiometric compatibility
/// class of `point`: `w · c = w · point` for every conservation law `w`.
///
/// All complex-balanced equilibria differ in `ln c` by elements of `S⊥`, so
/// this minimizes the convex `Σᵢ cᵢ(α) − α·(W point)` over `ln c = ln c₀ + Wᵀα`.
pub fn solve_complex_balanced_in_class(
    net: &Network,
    rates: &[f64],
    point: &[f64],
) -> Result<Equilibrium, EquilibriumError> {
    check_dims(net.n_species(), point.len())?;
    let base = solve_complex_balanced(net, rates)?;
    let laws = conservation_laws(net).map_err(|_| EquilibriumError::SolverDiverged { residual: f64::NAN })?;
    if laws.basis.is_empty() {
        return Ok(base);
    }
    let m = net.n_species();
    let p = laws.basis.len();
    let w = DMatrix::from_fn(p, m, |j, i| laws.basis[j][i] as f64);
    let target = &w * DVector::from_column_slice(point);
    let u0 = DVector::from_iterator(m, base.c.iter().map(|v| v.ln()));
    let tscale = target.amax().max(1.0);

    let objective = |alpha: &DVector<f64>| -> (f64, DVector<f64>) {
        let u = &u0 + w.transpose() * alpha;
        let c = u.map(f64::exp);
        (c.sum() - alpha.dot(&target), c)
    };
    let mut alpha = DVector::<f64>::zeros(p);
    let (mut fval, mut c) = objective(&alpha);
    for _ in 0..200 {
        let grad = &w * &c - &target;
        if grad.amax() <= 1e-13 * tscale {
            break;
        }
        let hess = &w * DMatrix::from_diagonal(&c) * w.transpose();
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => pinv_solve(&hess, &(-&grad)),
        };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = &alpha + &step * t;
            let (tf, tc) = objective(&trial);
            if tf.is_finite() && tf <= fval + 1e-4 * t * grad.dot(&step) {
                alpha = trial;
                fval = tf;
                c = tc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let grad = &w * &c - &target;
    if grad.amax() > 1e-9 * tscale {
        return Err(EquilibriumError::SolverDiverged { residual: grad.amax() });
    }
    finish(net, rates, c.iter().copied().collect())
}

/// Pairwise balance `κ_k c^{ν_k} = κ_{k'} c^{ν'_k}` for every reversible
/// pair, to relative tolerance `rel_tol`.
pub fn is_detailed_balanced(net: &Network, rates: &[f64], c: &[f64], rel_tol: f64) -> Result<bool, EquilibriumError> {
    check_dims(net.n_reactions(), rates.len())?;
    check_dims(net.n_species(), c.len())?;
    if c.iter().any(|&v| !(v > 0.0)) {
        return Err(EquilibriumError::NonPositiveC);
    }
    let flux = fluxes(net, rates, c);
    for k in 0..net.n_reactions() {
        let rev = net.reverse_of(k).ok_or(EquilibriumError::NotReversibleNetwork)?;
        if rev < k {
            continue;
        }
        let (a, b) = (flux[k], flux[rev]);
        if (a - b).abs() > rel_tol * a.max(b) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Right-hand side `Σ_k κ_k x^{ν_k} (ν'_k − ν_k)` of the mass-action ODE.
pub fn ode_rhs(net: &Network, rates: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; net.n_species()];
    for k in 0..net.n_reactions() {
        let f = rates[k] * monomial(net.source(k), x);
        if f == 0.0 {
            continue;
        }
        for (o, d) in out.iter_mut().zip(net.reaction_vector(k)) {
            *o += f * d as f64;
        }
    }
    out
}
