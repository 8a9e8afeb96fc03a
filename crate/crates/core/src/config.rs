//! Numeric defaults shared by the library and the command line.
//!
//! The CLI exposes each of these as a flag; `CRN_TOL` and `CRN_SEED` override
//! the verification tolerance and seed when the flag is absent.

/// Residual target for iterative stationary solvers.
pub const SOLVER_TOL: f64 = 1e-9;
/// Total-variation threshold for formula vs. oracle.
pub const VERIFY_TV: f64 = 1e-10;
/// Largest class enumerated before giving up.
pub const STATE_CAP: usize = crate::statespace::DEFAULT_CAP;
/// Tail mass allowed outside an automatically chosen window.
pub const TAIL_TOL: f64 = 1e-10;
/// Jump budget per SSA path.
pub const MAX_JUMPS: u64 = crate::ssa::DEFAULT_MAX_JUMPS;
pub const SEED: u64 = 0;
pub const T_FINAL: f64 = 100.0;
/// Relative flux-defect tolerance for pairwise reversibility.
pub const REVERSIBILITY_TOL: f64 = crate::oracle::REVERSIBILITY_TOL;
/// Relative tolerance on `κ c^ν = κ' c^ν'` for detailed balance.
pub const DETAILED_BALANCE_TOL: f64 = 1e-9;

/// `name = value` rows for documentation and `--help` output.
pub fn table() -> Vec<(&'static str, String)> {
    vec![
        ("solver_tol", SOLVER_TOL.to_string()),
        ("verify_tv", VERIFY_TV.to_string()),
        ("state_cap", STATE_CAP.to_string()),
        ("tail_tol", TAIL_TOL.to_string()),
        ("max_jumps", MAX_JUMPS.to_string()),
        ("seed", SEED.to_string()),
        ("t_final", T_FINAL.to_string()),
        ("reversibility_tol", REVERSIBILITY_TOL.to_string()),
        ("detailed_balance_tol", DETAILED_BALANCE_TOL.to_string()),
    ]
}
