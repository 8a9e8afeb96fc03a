//! Reaction-network analysis: deficiency and weak reversibility from
//! structure alone, complex-balanced equilibria, explicit product-form
//! stationary distributions of the stochastic model, and an independent
//! Markov-chain oracle plus exact stochastic simulation to check them.

pub mod config;
pub mod equilibrium;
pub mod fixtures;
pub mod graph;
pub mod kinetics;
pub mod linalg;
pub mod netparse;
pub mod network;
pub mod oracle;
pub mod special;
pub mod ssa;
pub mod stationary;
pub mod statespace;
pub mod structure;

pub use kinetics::{Kinetics, KineticsDecl, KineticsRegistry, RateLaw, Theta};
pub use netparse::{parse, serialize, NetworkDocument, ParseError};
pub use network::{build_network, Complex, Network, Reaction, SpeciesId};
pub use equilibrium::{solve_complex_balanced, solve_complex_balanced_in_class, Equilibrium};
pub use oracle::{compare_distribution, solve_stationary_oracle, ComparisonReport, OracleSolution};
pub use ssa::{ensemble, simulate, time_average, Trajectory};
pub use stationary::{product_form, ProductFormDistribution, Support};
pub use statespace::{enumerate_class, enumerate_window, generator_matrix, IrreducibleClass};
pub use structure::{analyze, StructureReport};
