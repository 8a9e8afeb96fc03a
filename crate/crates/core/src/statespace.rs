//! Closed irreducible classes of the counting process and their generators.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::graph::tarjan_scc;
use crate::kinetics::{Kinetics, KineticsError};
use crate::network::Network;
use crate::structure::{conservation_laws, is_weakly_reversible};

pub type State = Vec<i64>;

pub const DEFAULT_CAP: usize = 250_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateSpaceError {
    #[error("state must be nonnegative with {expected} coordinates")]
    InvalidState { expected: usize },
    #[error(
        "class exceeds {cap} states ({})",
        if *positive_conservation { "a positive conservation law exists, raise the cap" } else { "no positive conservation law, the class may be infinite" }
    )]
    CapExceeded { cap: usize, positive_conservation: bool },
    #[error("closure of the initial state splits into {n_components} communicating classes ({n_closed} closed)")]
    NotIrreducible {
        n_components: usize,
        n_closed: usize,
        components: Vec<Vec<State>>,
    },
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

/// A set of mutually reachable lattice points, indexed densely.
#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibleClass {
    states: Vec<State>,
    index: HashMap<State, usize>,
    anchor: State,
    /// Complete closed class (as opposed to a box window of a larger one).
    bounded: bool,
    /// Per-species upper bounds of the window, when truncated.
    window: Option<Vec<i64>>,
}

impl IrreducibleClass {
    fn from_states(states: Vec<State>, anchor: State, bounded: bool, window: Option<Vec<i64>>) -> Self {
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self {
            states,
            index,
            anchor,
            bounded,
            window,
        }
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.index.contains_key(x)
    }

    pub fn anchor(&self) -> &[i64] {
        &self.anchor
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    pub fn window(&self) -> Option<&[i64]> {
        self.window.as_deref()
    }

    /// One JSON array per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            out.push_str(&serde_json::to_string(s).expect("integer vector"));
            out.push('\n');
        }
        out
    }
}

fn check_state(net: &Network, x0: &[i64]) -> Result<(), StateSpaceError> {
    if x0.len() != net.n_species() || x0.iter().any(|&v| v < 0) {
        return Err(StateSpaceError::InvalidState {
            expected: net.n_species(),
        });
    }
    Ok(())
}

fn step(x: &[i64], delta: &[i64]) -> State {
    x.iter().zip(delta).map(|(a, b)| a + b).collect()
}

/// Breadth-first closure of `x0`, restricted to `upper` when given.
fn closure(
    net: &Network,
    kin: &Kinetics,
    x0: &[i64],
    upper: Option<&[i64]>,
    cap: usize,
) -> Result<Option<Vec<State>>, StateSpaceError> {
    let deltas: Vec<Vec<i64>> = (0..net.n_reactions()).map(|k| net.reaction_vector(k)).collect();
    let inside = |y: &[i64]| match upper {
        Some(u) => y.iter().zip(u).all(|(a, b)| a <= b),
        None => true,
    };
    let mut seen: HashSet<State> = HashSet::new();
    let mut order = vec![x0.to_vec()];
    seen.insert(x0.to_vec());
    let mut queue = VecDeque::from([x0.to_vec()]);
    while let Some(x) = queue.pop_front() {
        for (k, d) in deltas.iter().enumerate() {
            if kin.intensity(net, k, &x)? <= 0.0 {
                continue;
            }
            let y = step(&x, d);
            if !inside(&y) || seen.contains(&y) {
                continue;
            }
            if order.len() >= cap {
                return Ok(None);
            }
            seen.insert(y.clone());
            order.push(y.clone());
            queue.push_back(y);
        }
    }
    Ok(Some(order))
}

fn transition_graph(net: &Network, kin: &Kinetics, states: &[State]) -> Result<Vec<Vec<usize>>, StateSpaceError> {
    let index: HashMap<&[i64], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut adj = vec![Vec::new(); states.len()];
    for (i, x) in states.iter().enumerate() {
        for k in 0..net.n_reactions() {
            if kin.intensity(net, k, x)? <= 0.0 {
                continue;
            }
            let y = step(x, &net.reaction_vector(k));
            if let Some(&j) = index.get(y.as_slice()) {
                if j != i {
                    adj[i].push(j);
                }
            }
        }
    }
    Ok(adj)
}

/// True when the positive-rate transition graph on `states` is strongly
/// connected.
pub fn is_strongly_connected(net: &Network, kin: &Kinetics, states: &[State]) -> Result<bool, StateSpaceError> {
    Ok(tarjan_scc(&transition_graph(net, kin, states)?).len() <= 1)
}

/// The closed irreducible class containing `x0`.
///
/// For weakly reversible networks the forward closure is irreducible because
/// every reaction can be undone along a directed cycle of complexes; otherwise
/// strong connectivity of the closure is checked explicitly.
pub fn enumerate_class(
    net: &Network,
    kin: &Kinetics,
    x0: &[i64],
    cap: usize,
) -> Result<IrreducibleClass, StateSpaceError> {
    check_state(net, x0)?;
    let Some(states) = closure(net, kin, x0, None, cap)? else {
        let positive_conservation = conservation_laws(net)
            .map(|l| l.positive_vector_exists)
            .unwrap_or(false);
        return Err(StateSpaceError::CapExceeded {
            cap,
            positive_conservation,
        });
    };
    if !is_weakly_reversible(net) {
        let adj = transition_graph(net, kin, &states)?;
        let comps = tarjan_scc(&adj);
        if comps.len() > 1 {
            let comp_of: Vec<usize> = {
                let mut v = vec![0; states.len()];
                for (ci, c) in comps.iter().enumerate() {
                    for &s in c {
                        v[s] = ci;
                    }
                }
                v
            };
            let n_closed = comps
                .iter()
                .enumerate()
                .filter(|(ci, c)| c.iter().all(|&s| adj[s].iter().all(|&t| comp_of[t] == *ci)))
                .count();
            return Err(StateSpaceError::NotIrreducible {
                n_components: comps.len(),
                n_closed,
                components: comps
                    .into_iter()
                    .map(|c| c.into_iter().map(|i| states[i].clone()).collect())
                    .collect(),
            });
        }
    }
    Ok(IrreducibleClass::from_states(states, x0.to_vec(), true, None))
}

/// States of the class of `x0` reachable without leaving the box
/// `x ≤ upper`. Used as a truncation of infinite classes.
pub fn enumerate_window(
    net: &Network,
    kin: &Kinetics,
    x0: &[i64],
    upper: &[i64],
    cap: usize,
) -> Result<IrreducibleClass, StateSpaceError> {
    check_state(net, x0)?;
    if upper.len() != x0.len() || x0.iter().zip(upper).any(|(a, b)| a > b) {
        return Err(StateSpaceError::InvalidState {
            expected: net.n_species(),
        });
    }
    let states = closure(net, kin, x0, Some(upper), cap)?.ok_or_else(|| StateSpaceError::CapExceeded {
        cap,
        positive_conservation: conservation_laws(net)
            .map(|l| l.positive_vector_exists)
            .unwrap_or(false),
    })?;
    Ok(IrreducibleClass::from_states(states, x0.to_vec(), false, Some(upper.to_vec())))
}

/// Sparse generator on a finite class. Transitions leaving the class are
/// dropped, so a window behaves as a reflecting truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorMatrix {
    n: usize,
    /// Off-diagonal entries per row, sorted by column.
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl GeneratorMatrix {
    /// Builds from off-diagonal rates; duplicates are summed.
    pub fn from_rates(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, j, r) in entries {
            if i != j && r > 0.0 {
                *maps[i].entry(j).or_insert(0.0) += r;
            }
        }
        let rows: Vec<Vec<(usize, f64)>> = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        let diag = rows.iter().map(|r| -r.iter().map(|e| e.1).sum::<f64>()).collect();
        Self { n, rows, diag }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map(|p| self.rows[i][p].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.n + self.rows.iter().map(Vec::len).sum::<usize>()
    }

    /// Largest exit rate `max_i |Q_ii|`.
    pub fn max_rate(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |a, &d| a.max(-d))
    }

    /// All entries including the diagonal, row-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            std::iter::once((i, i, self.diag[i])).chain(self.rows[i].iter().map(move |&(j, v)| (i, j, v)))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// `(πQ)_j`.
    pub fn left_apply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = pi.iter().zip(&self.diag).map(|(p, d)| p * d).collect();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out[j] += pi[i] * v;
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,value\n");
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i},{j},{v:?}");
        }
        s
    }
}

pub fn generator_matrix(net: &Network, kin: &Kinetics, class: &IrreducibleClass) -> Result<GeneratorMatrix, StateSpaceError> {
    let deltas: Vec<Vec<i64>> = (0..net.n_reactions()).map(|k| net.reaction_vector(k)).collect();
    let mut entries = Vec::new();
    for (i, x) in class.states().iter().enumerate() {
        for (k, d) in deltas.iter().enumerate() {
            let rate = kin.intensity(net, k, x)?;
            if rate <= 0.0 {
                continue;
            }
            if let Some(j) = class.index_of(&step(x, d)) {
                entries.push((i, j, rate));
            }
        }
    }
    Ok(GeneratorMatrix::from_rates(class.len(), entries))
}
