use std::collections::BTreeMap;
use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use super::OracleError;
use crate::statespace::GeneratorMatrix;

/// A method for the stationary vector `πQ = 0`, `Σπ = 1` of an irreducible
/// generator.
pub trait StationarySolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Largest state count the method is meant for.
    fn max_states(&self) -> usize;

    fn solve(&self, q: &GeneratorMatrix) -> Result<Vec<f64>, OracleError>;
}

/// Grassmann-Taksar-Heyman elimination on a dense copy. Subtraction-free, so
/// small probabilities keep full relative accuracy.
#[derive(Debug, Clone, Copy, Default)]
pub struct GthDense;

impl StationarySolver for GthDense {
    fn name(&self) -> &'static str {
        "gth-dense"
    }

    fn max_states(&self) -> usize {
        2000
    }

    fn solve(&self, q: &GeneratorMatrix) -> Result<Vec<f64>, OracleError> {
        let n = q.dim();
        let mut a = vec![0.0; n * n];
        for (i, j, v) in q.triplets() {
            if i != j {
                a[i * n + j] = v;
            }
        }
        for k in (1..n).rev() {
            let s: f64 = a[k * n..k * n + k].iter().sum();
            if s <= 0.0 {
                return Err(OracleError::SingularBeyondNullity { components: 2 });
            }
            for i in 0..k {
                a[i * n + k] /= s;
            }
            for i in 0..k {
                let aik = a[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..k {
                    a[i * n + j] += aik * a[k * n + j];
                }
            }
        }
        let mut x = vec![0.0; n];
        if n > 0 {
            x[0] = 1.0;
        }
        for j in 1..n {
            x[j] = (0..j).map(|i| x[i] * a[i * n + j]).sum();
        }
        let total: f64 = x.iter().sum();
        Ok(x.into_iter().map(|v| v / total).collect())
    }
}

/// Sparse LU of `Qᵀ` with one equation replaced by `π_r = 1`; the caller
/// normalizes. A dense row of ones would do the same job but makes `AᵀA`
/// dense and defeats the fill-reducing column ordering.
///
/// The pinned state should carry real mass or the solve is badly scaled, so
/// `r` starts at the anchor and moves to the heaviest state if the anchor
/// turns out to be light.
#[derive(Debug, Clone, Copy, Default)]
pub struct SparseLu;

impl SparseLu {
    fn solve_pinned(q: &GeneratorMatrix, r: usize) -> Result<Vec<f64>, OracleError> {
        let n = q.dim();
        let scale = q.max_rate().max(f64::MIN_POSITIVE);
        let mut entries: Vec<Triplet<usize, usize, f64>> = q
            .triplets()
            .filter(|&(_, j, _)| j != r)
            .map(|(i, j, v)| Triplet::new(j, i, v))
            .collect();
        entries.push(Triplet::new(r, r, scale));
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
            .map_err(|e| OracleError::Factorization(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| OracleError::Factorization(format!("{e:?}")))?;
        let rhs = Mat::<f64>::from_fn(n, 1, |i, _| if i == r { scale } else { 0.0 });
        let x = lu.solve(&rhs);
        Ok((0..n).map(|i| x[(i, 0)]).collect())
    }
}

impl StationarySolver for SparseLu {
    fn name(&self) -> &'static str {
        "sparse-lu"
    }

    fn max_states(&self) -> usize {
        50_000
    }

    fn solve(&self, q: &GeneratorMatrix) -> Result<Vec<f64>, OracleError> {
        if q.dim() == 1 {
            return Ok(vec![1.0]);
        }
        let x = Self::solve_pinned(q, 0)?;
        let (heaviest, peak) = x
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
        if peak.is_finite() && peak <= 1e3 {
            return Ok(x);
        }
        Self::solve_pinned(q, heaviest)
    }
}

/// Gauss-Seidel sweeps on `πQ = 0` for classes too large to factor.
#[derive(Debug, Clone, Copy)]
pub struct GaussSeidel {
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for GaussSeidel {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_sweeps: 100_000,
        }
    }
}

impl StationarySolver for GaussSeidel {
    fn name(&self) -> &'static str {
        "gauss-seidel"
    }

    fn max_states(&self) -> usize {
        usize::MAX
    }

    fn solve(&self, q: &GeneratorMatrix) -> Result<Vec<f64>, OracleError> {
        let n = q.dim();
        let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for &(j, v) in q.row(i) {
                incoming[j].push((i, v));
            }
        }
        let mut pi = vec![1.0 / n as f64; n];
        let mut residual = f64::INFINITY;
        for _ in 0..self.max_sweeps {
            for j in 0..n {
                let d = -q.diag(j);
                if d > 0.0 {
                    pi[j] = incoming[j].iter().map(|&(i, v)| pi[i] * v).sum::<f64>() / d;
                }
            }
            let total: f64 = pi.iter().sum();
            for p in &mut pi {
                *p /= total;
            }
            residual = q.left_apply(&pi).iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if residual <= self.rel_tol * q.max_rate() / n as f64 {
                return Ok(pi);
            }
        }
        Err(OracleError::NotConverged { residual })
    }
}

/// Name → solver table. `select` picks the first registered solver, in
/// order of capacity, that accepts the state count.
#[derive(Clone)]
pub struct SolverRegistry {
    solvers: BTreeMap<String, Arc<dyn StationarySolver>>,
    auto_order: Vec<String>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut reg = Self {
            solvers: BTreeMap::new(),
            auto_order: Vec::new(),
        };
        reg.register(Arc::new(GthDense));
        reg.register(Arc::new(SparseLu));
        reg.register(Arc::new(GaussSeidel::default()));
        reg.auto_order = vec!["sparse-lu".into(), "gauss-seidel".into()];
        reg
    }
}

impl SolverRegistry {
    pub fn register(&mut self, solver: Arc<dyn StationarySolver>) {
        self.solvers.insert(solver.name().to_string(), solver);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.solvers.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn StationarySolver>, OracleError> {
        if name == "auto" {
            return Err(OracleError::UnknownSolver(name.into()));
        }
        self.solvers
            .get(name)
            .cloned()
            .ok_or_else(|| OracleError::UnknownSolver(name.into()))
    }

    /// Resolves `name`, with `auto` choosing by state count.
    pub fn select(&self, name: &str, n_states: usize) -> Result<Arc<dyn StationarySolver>, OracleError> {
        if name != "auto" {
            let s = self.get(name)?;
            if n_states > s.max_states() {
                return Err(OracleError::TooLarge {
                    solver: s.name().into(),
                    states: n_states,
                    limit: s.max_states(),
                });
            }
            return Ok(s);
        }
        self.auto_order
            .iter()
            .filter_map(|n| self.solvers.get(n))
            .find(|s| n_states <= s.max_states())
            .cloned()
            .ok_or_else(|| OracleError::UnknownSolver("auto".into()))
    }
}
