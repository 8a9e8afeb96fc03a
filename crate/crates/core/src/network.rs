//! Immutable representation of a chemical reaction network.
//!
//! A network is the triple of species, complexes and reactions. Complexes are
//! stored once in a canonical table (first-appearance order) and reactions
//! refer to them by index, so counts such as the number of complexes or the
//! deficiency are read directly off the table.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("duplicate species name `{0}`")]
    DuplicateSpeciesName(String),
    #[error("invalid species name `{0}`")]
    InvalidSpeciesName(String),
    #[error("reaction {reaction} has identical source and product complexes")]
    SelfLoopReaction { reaction: usize },
    #[error("reaction {reaction} duplicates reaction {first}")]
    DuplicateReaction { reaction: usize, first: usize },
    #[error("network has no reactions")]
    EmptyNetwork,
    #[error("reaction {reaction}: complex has {got} coefficients, expected {expected}")]
    DimensionMismatch {
        reaction: usize,
        expected: usize,
        got: usize,
    },
    #[error("reaction {reaction}: stoichiometric coefficient {value} out of range")]
    CoefficientOutOfRange { reaction: usize, value: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SpeciesId {
    pub index: usize,
    pub name: String,
}

/// Nonnegative stoichiometric coefficient vector. The zero vector is the
/// empty complex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Complex(Vec<i32>);

impl Complex {
    pub fn new(coeffs: Vec<i32>) -> Self {
        debug_assert!(coeffs.iter().all(|&c| c >= 0));
        Self(coeffs)
    }

    pub fn coeffs(&self) -> &[i32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Molecularity `|ν| = Σ νᵢ`.
    pub fn order(&self) -> i64 {
        self.0.iter().map(|&c| i64::from(c)).sum()
    }

    /// True when `x ≥ ν` componentwise.
    pub fn fits_in(&self, x: &[i64]) -> bool {
        self.0.iter().zip(x).all(|(&c, &xi)| xi >= i64::from(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Reaction {
    pub source: usize,
    pub product: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    species: Vec<SpeciesId>,
    complexes: Vec<Complex>,
    reactions: Vec<Reaction>,
}

pub(crate) fn valid_species_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Builds a network from species names and `(source, product)` coefficient
/// vectors, deduplicating complexes in first-appearance order.
pub fn build_network<S: AsRef<str>>(
    species: &[S],
    reactions: &[(Vec<i64>, Vec<i64>)],
) -> Result<Network, NetworkError> {
    let mut seen = HashMap::new();
    let mut ids = Vec::with_capacity(species.len());
    for (index, name) in species.iter().enumerate() {
        let name = name.as_ref();
        if !valid_species_name(name) {
            return Err(NetworkError::InvalidSpeciesName(name.to_string()));
        }
        if seen.insert(name.to_string(), index).is_some() {
            return Err(NetworkError::DuplicateSpeciesName(name.to_string()));
        }
        ids.push(SpeciesId {
            index,
            name: name.to_string(),
        });
    }
    if reactions.is_empty() {
        return Err(NetworkError::EmptyNetwork);
    }

    let m = ids.len();
    let mut table: Vec<Complex> = Vec::new();
    let mut lookup: HashMap<Complex, usize> = HashMap::new();
    let mut intern = |k: usize, coeffs: &[i64]| -> Result<usize, NetworkError> {
        if coeffs.len() != m {
            return Err(NetworkError::DimensionMismatch {
                reaction: k,
                expected: m,
                got: coeffs.len(),
            });
        }
        let mut v = Vec::with_capacity(m);
        for &c in coeffs {
            if c < 0 || c > i64::from(i32::MAX) {
                return Err(NetworkError::CoefficientOutOfRange {
                    reaction: k,
                    value: c,
                });
            }
            v.push(c as i32);
        }
        let complex = Complex(v);
        if let Some(&idx) = lookup.get(&complex) {
            return Ok(idx);
        }
        table.push(complex.clone());
        lookup.insert(complex, table.len() - 1);
        Ok(table.len() - 1)
    };

    let mut out = Vec::with_capacity(reactions.len());
    let mut pairs: HashMap<(usize, usize), usize> = HashMap::new();
    for (k, (src, prod)) in reactions.iter().enumerate() {
        let source = intern(k, src)?;
        let product = intern(k, prod)?;
        if source == product {
            return Err(NetworkError::SelfLoopReaction { reaction: k });
        }
        if let Some(&first) = pairs.get(&(source, product)) {
            return Err(NetworkError::DuplicateReaction { reaction: k, first });
        }
        pairs.insert((source, product), k);
        out.push(Reaction { source, product });
    }

    Ok(Network {
        species: ids,
        complexes: table,
        reactions: out,
    })
}

impl Network {
    pub fn species(&self) -> &[SpeciesId] {
        &self.species
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn complexes(&self) -> &[Complex] {
        &self.complexes
    }

    pub fn n_complexes(&self) -> usize {
        self.complexes.len()
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn source(&self, k: usize) -> &Complex {
        &self.complexes[self.reactions[k].source]
    }

    pub fn product(&self, k: usize) -> &Complex {
        &self.complexes[self.reactions[k].product]
    }

    /// `ν'_k − ν_k`.
    pub fn reaction_vector(&self, k: usize) -> Vec<i64> {
        self.source(k)
            .coeffs()
            .iter()
            .zip(self.product(k).coeffs())
            .map(|(&s, &p)| i64::from(p) - i64::from(s))
            .collect()
    }

    pub fn reaction_vectors(&self) -> Vec<Vec<i64>> {
        (0..self.n_reactions())
            .map(|k| self.reaction_vector(k))
            .collect()
    }

    /// Index of the reaction `product → source` for reaction `k`, if present.
    pub fn reverse_of(&self, k: usize) -> Option<usize> {
        let r = self.reactions[k];
        self.reactions
            .iter()
            .position(|q| q.source == r.product && q.product == r.source)
    }

    /// Every reaction has its reverse in the network.
    pub fn is_reversible(&self) -> bool {
        (0..self.n_reactions()).all(|k| self.reverse_of(k).is_some())
    }

    /// Every complex has molecularity zero or one.
    pub fn is_first_order(&self) -> bool {
        self.complexes.iter().all(|c| c.order() <= 1)
    }

    /// Human-readable form of a complex, e.g. `2A + B` or `0`.
    pub fn format_complex(&self, idx: usize) -> String {
        let c = &self.complexes[idx];
        if c.is_zero() {
            return "0".to_string();
        }
        let terms: Vec<String> = c
            .coeffs()
            .iter()
            .zip(&self.species)
            .filter(|(&n, _)| n > 0)
            .map(|(&n, s)| {
                if n == 1 {
                    s.name.clone()
                } else {
                    format!("{n}{}", s.name)
                }
            })
            .collect();
        terms.join(" + ")
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, r) in self.reactions.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "{} -> {}",
                self.format_complex(r.source),
                self.format_complex(r.product)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s1s2_has_two_complexes() {
        let net = build_network(
            &["S1", "S2"],
            &[(vec![1, 0], vec![0, 1]), (vec![0, 1], vec![1, 0])],
        )
        .unwrap();
        assert_eq!(net.n_complexes(), 2);
        assert_eq!(net.n_reactions(), 2);
        assert_eq!(net.reaction_vectors(), vec![vec![-1, 1], vec![1, -1]]);
        assert!(net.is_reversible());
    }

    #[test]
    fn self_loop_rejected() {
        let err = build_network(&["A"], &[(vec![1], vec![1])]).unwrap_err();
        assert_eq!(err, NetworkError::SelfLoopReaction { reaction: 0 });
    }

    #[test]
    fn duplicate_species_and_empty() {
        assert_eq!(
            build_network(&["A", "A"], &[(vec![1, 0], vec![0, 1])]).unwrap_err(),
            NetworkError::DuplicateSpeciesName("A".into())
        );
        assert_eq!(
            build_network::<&str>(&["A"], &[]).unwrap_err(),
            NetworkError::EmptyNetwork
        );
    }

    #[test]
    fn enzyme1_table() {
        // E, S, ES, P
        let r = |a: [i64; 4], b: [i64; 4]| (a.to_vec(), b.to_vec());
        let net = build_network(
            &["E", "S", "ES", "P"],
            &[
                r([1, 1, 0, 0], [0, 0, 1, 0]),
                r([0, 0, 1, 0], [1, 1, 0, 0]),
                r([0, 0, 1, 0], [1, 0, 0, 1]),
                r([1, 0, 0, 1], [0, 0, 1, 0]),
                r([1, 0, 0, 0], [0, 0, 0, 0]),
                r([0, 0, 0, 0], [1, 0, 0, 0]),
                r([0, 0, 0, 0], [0, 1, 0, 0]),
                r([0, 1, 0, 0], [0, 0, 0, 0]),
            ],
        )
        .unwrap();
        assert_eq!(net.n_complexes(), 6);
        assert_eq!(net.n_reactions(), 8);
        assert_eq!(net.reaction_vector(0), vec![-1, -1, 1, 0]);
        assert_eq!(net.format_complex(0), "E + S");
    }

    #[test]
    fn inflow_reaction_vector() {
        let net = build_network(&["S1", "S2"], &[(vec![0, 0], vec![1, 1])]).unwrap();
        assert_eq!(net.reaction_vectors(), vec![vec![1, 1]]);
        assert!(net.complexes()[0].is_zero());
    }

    #[test]
    fn coefficient_overflow_is_an_error() {
        let err = build_network(&["A"], &[(vec![1 << 40], vec![0])]).unwrap_err();
        assert!(matches!(err, NetworkError::CoefficientOutOfRange { .. }));
    }
}
