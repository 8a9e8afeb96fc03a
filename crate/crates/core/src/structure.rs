//! Structural analysis of a reaction network: linkage classes, weak
//! reversibility, exact stoichiometric rank, deficiency and conservation laws.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{tarjan_scc, undirected_components};
use crate::linalg::{bareiss_rank, nullspace, primitive_integer, rref};
use crate::network::Network;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("rank inconsistency: |C|={complexes}, l={linkage}, s={rank} gives negative deficiency")]
    InternalRankInconsistency {
        complexes: usize,
        linkage: usize,
        rank: usize,
    },
    #[error("conservation coefficient does not fit in 64 bits")]
    CoefficientOverflow,
}

/// Conservation laws `w · (ν'_k − ν_k) = 0` in canonical form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationLaws {
    /// Reduced row-echelon basis of `S⊥`, each row scaled to coprime integers.
    pub basis: Vec<Vec<i64>>,
    /// Some `w ∈ S⊥` is strictly positive, so every compatibility class is
    /// bounded.
    pub positive_vector_exists: bool,
    /// Species whose count is bounded on every compatibility class (some
    /// nonnegative conservation law involves it).
    pub bounded_species: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub n_species: usize,
    pub n_complexes: usize,
    pub n_linkage_classes: usize,
    pub stoich_dim: usize,
    pub deficiency: usize,
    pub weakly_reversible: bool,
    pub reversible: bool,
    pub linkage_partition: Vec<Vec<usize>>,
    pub conservation_basis: Vec<Vec<i64>>,
    pub positive_conservation: bool,
    pub bounded_species: Vec<bool>,
}

/// Connected components of the undirected reaction graph on complexes.
pub fn linkage_classes(net: &Network) -> Vec<Vec<usize>> {
    undirected_components(
        net.n_complexes(),
        net.reactions().iter().map(|r| (r.source, r.product)),
    )
}

pub(crate) fn complex_adjacency(net: &Network) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); net.n_complexes()];
    for r in net.reactions() {
        adj[r.source].push(r.product);
    }
    adj
}

/// Strong components of the directed reaction graph on complexes.
pub fn strong_components(net: &Network) -> Vec<Vec<usize>> {
    tarjan_scc(&complex_adjacency(net))
}

/// True iff every linkage class is a single strongly connected component.
pub fn is_weakly_reversible(net: &Network) -> bool {
    strong_components(net).len() == linkage_classes(net).len()
}

pub fn stoich_rank(net: &Network) -> usize {
    bareiss_rank(&net.reaction_vectors())
}

pub fn deficiency(net: &Network) -> Result<usize, StructureError> {
    let complexes = net.n_complexes();
    let linkage = linkage_classes(net).len();
    let rank = stoich_rank(net);
    complexes
        .checked_sub(linkage + rank)
        .ok_or(StructureError::InternalRankInconsistency {
            complexes,
            linkage,
            rank,
        })
}

pub fn conservation_laws(net: &Network) -> Result<ConservationLaws, StructureError> {
    let m = net.n_species();
    let ns = nullspace(&net.reaction_vectors(), m);
    let (canon, _) = rref(ns);
    let basis = canon
        .iter()
        .map(|row| {
            primitive_integer(row)
                .iter()
                .map(|v| v.to_i64().ok_or(StructureError::CoefficientOverflow))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let bounded_species = nonnegative_support(&basis, m);
    Ok(ConservationLaws {
        positive_vector_exists: m > 0 && bounded_species.iter().all(|&b| b),
        bounded_species,
        basis,
    })
}

/// Largest support of a nonnegative vector in the span of `basis`.
///
/// Solves `max Σ tᵢ` subject to `w = Σ aⱼ bⱼ`, `wᵢ ≥ tᵢ`, `0 ≤ tᵢ ≤ 1`. The
/// feasible cone is closed under addition, so one optimum saturates every
/// coordinate that any nonnegative conservation law can reach.
fn nonnegative_support(basis: &[Vec<i64>], m: usize) -> Vec<bool> {
    if basis.is_empty() {
        return vec![false; m];
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let coeffs: Vec<_> = basis
        .iter()
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let slack: Vec<_> = (0..m).map(|_| lp.add_var(1.0, (0.0, 1.0))).collect();
    for i in 0..m {
        let mut expr: Vec<_> = coeffs
            .iter()
            .zip(basis)
            .filter(|(_, b)| b[i] != 0)
            .map(|(&a, b)| (a, b[i] as f64))
            .collect();
        expr.push((slack[i], -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
    }
    match lp.solve() {
        Ok(sol) => slack.iter().map(|&t| sol[t] > 0.5).collect(),
        // The LP is always feasible (a = 0, t = 0) and bounded.
        Err(_) => vec![false; m],
    }
}

/// Largest count of each species over the compatibility class of `x0`
/// (real relaxation, rounded down); `None` for unbounded species.
pub fn species_upper_bounds(laws: &ConservationLaws, x0: &[i64]) -> Vec<Option<i64>> {
    let m = x0.len();
    (0..m)
        .map(|j| {
            if !laws.bounded_species.get(j).copied().unwrap_or(false) {
                return None;
            }
            let mut lp = Problem::new(OptimizationDirection::Maximize);
            let vars: Vec<_> = (0..m)
                .map(|i| lp.add_var(if i == j { 1.0 } else { 0.0 }, (0.0, f64::INFINITY)))
                .collect();
            for w in &laws.basis {
                let expr: Vec<_> = vars
                    .iter()
                    .zip(w)
                    .filter(|(_, &c)| c != 0)
                    .map(|(&v, &c)| (v, c as f64))
                    .collect();
                let rhs: i64 = w.iter().zip(x0).map(|(a, b)| a * b).sum();
                lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, rhs as f64);
            }
            lp.solve().ok().map(|sol| (sol.objective() + 1e-7).floor() as i64)
        })
        .collect()
}

pub fn analyze(net: &Network) -> Result<StructureReport, StructureError> {
    let partition = linkage_classes(net);
    let rank = stoich_rank(net);
    let deficiency = deficiency(net)?;
    let laws = conservation_laws(net)?;
    debug_assert_eq!(rank + laws.basis.len(), net.n_species());
    Ok(StructureReport {
        n_species: net.n_species(),
        n_complexes: net.n_complexes(),
        n_linkage_classes: partition.len(),
        stoich_dim: rank,
        deficiency,
        weakly_reversible: is_weakly_reversible(net),
        reversible: net.is_reversible(),
        linkage_partition: partition,
        conservation_basis: laws.basis,
        positive_conservation: laws.positive_vector_exists,
        bounded_species: laws.bounded_species,
    })
}
