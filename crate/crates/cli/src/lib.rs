//! The `crn` command line: parse a `.crn` file, run one pipeline stage and
//! report JSON, CSV or plain text.

pub mod args;
pub mod commands;
pub mod error;

use std::fmt::Write as _;

use crnkit::oracle::Verdict;
use serde::Serialize;

pub use args::{Command, Format, RunConfig};
pub use error::{exit, CliError};

/// What a run prints and how the process exits.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonnegative_state(name: &str, x: &[i64]) -> Result<(), CliError> {
    if x.iter().any(|&v| v < 0) {
        return Err(CliError::Usage(format!("{name} must be nonnegative")));
    }
    Ok(())
}

impl RunConfig {
    /// Range checks on the numeric options, before any file is read.
    pub fn validate(&self) -> Result<(), CliError> {
        let class = |c: &args::ClassArgs| -> Result<(), CliError> {
            nonnegative_state("--x0", &c.x0)?;
            if let Some(w) = &c.window {
                nonnegative_state("--window", w)?;
            }
            if let Some(v) = c.volume {
                positive("--volume", v)?;
            }
            positive("--tail-tol", c.tail_tol)?;
            if c.cap == 0 {
                return Err(CliError::Usage("--cap must be at least 1".into()));
            }
            Ok(())
        };
        match &self.command {
            Command::Stationary(a) => class(&a.class),
            Command::Verify(a) => {
                class(&a.class)?;
                positive("--tol", a.tol)?;
                if let Some(t) = a.ssa_time {
                    positive("--ssa-time", t)?;
                }
                Ok(())
            }
            Command::Simulate(a) => {
                nonnegative_state("--x0", &a.x0)?;
                positive("--t-final", a.t_final)?;
                if let Some(v) = a.volume {
                    positive("--volume", v)?;
                }
                if !(a.burn_in >= 0.0 && a.burn_in < a.t_final) {
                    return Err(CliError::Usage(format!(
                        "--burn-in {} must lie in [0, t-final)",
                        a.burn_in
                    )));
                }
                if a.replicas == 0 {
                    return Err(CliError::Usage("--replicas must be at least 1".into()));
                }
                Ok(())
            }
            Command::Equilibrium(a) => match &a.x0 {
                Some(p) if p.iter().any(|v| !(*v >= 0.0 && v.is_finite())) => {
                    Err(CliError::Usage("--x0 must be nonnegative".into()))
                }
                _ => Ok(()),
            },
            Command::Analyze(_) | Command::Defaults => Ok(()),
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(", ")
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => exit::OK,
        Verdict::Fail => exit::VERIFY_FAIL,
        Verdict::Inconclusive => exit::INCONCLUSIVE,
    }
}

/// Runs the configured subcommand.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let fmt = cfg.format;
    let ok = |stdout: String| Ok(Outcome { stdout, code: exit::OK });
    match &cfg.command {
        Command::Defaults => {
            let rows = crnkit::config::table();
            match fmt {
                Format::Json => ok(json(&rows.into_iter().collect::<std::collections::BTreeMap<_, _>>())),
                _ => ok(rows.iter().map(|(k, v)| format!("{k},{v}\n")).collect()),
            }
        }
        Command::Analyze(a) => {
            let r = commands::analyze_doc(&commands::load(&a.file)?)?;
            match fmt {
                Format::Json => ok(json(&r)),
                Format::Csv => ok(format!(
                    "complexes,linkage_classes,stoich_dim,deficiency,weakly_reversible\n{},{},{},{},{}\n",
                    r.structure.n_complexes,
                    r.structure.n_linkage_classes,
                    r.structure.stoich_dim,
                    r.structure.deficiency,
                    r.structure.weakly_reversible
                )),
                Format::Human => {
                    let s = &r.structure;
                    let mut out = String::new();
                    let _ = writeln!(out, "species            {}", r.species.join(" "));
                    let _ = writeln!(out, "complexes          {} ({})", s.n_complexes, r.complexes.join(", "));
                    let _ = writeln!(out, "linkage classes    {}", s.n_linkage_classes);
                    let _ = writeln!(out, "stoichiometric dim {}", s.stoich_dim);
                    let _ = writeln!(out, "deficiency         {}", s.deficiency);
                    let _ = writeln!(out, "weakly reversible  {}", s.weakly_reversible);
                    ok(out)
                }
            }
        }
        Command::Equilibrium(a) => {
            let r = commands::equilibrium(&commands::load(&a.file)?, a)?;
            match fmt {
                Format::Json => ok(json(&r)),
                Format::Csv => {
                    let mut out = String::from("species,c\n");
                    for (n, c) in r.species.iter().zip(&r.c) {
                        let _ = writeln!(out, "{n},{c:e}");
                    }
                    ok(out)
                }
                Format::Human => ok(format!(
                    "c = ({})\nresidual {:.3e}\ndetailed balanced {:?}\n",
                    fmt_vec(&r.c),
                    r.residual,
                    r.detailed_balanced
                )),
            }
        }
        Command::Stationary(a) => {
            let r = commands::stationary(&commands::load(&a.class.file)?, a)?;
            match fmt {
                Format::Json => ok(json(&r)),
                Format::Csv => ok(r.csv.clone()),
                Format::Human => ok(format!(
                    "support {} ({} states)\nnormalizer {:?}\nsummability {:?}\nmeans ({})\n",
                    r.summary.support,
                    r.summary.support_size.unwrap_or(0),
                    r.summary.normalizer,
                    r.summability.verdict,
                    fmt_vec(&r.summary.means)
                )),
            }
        }
        Command::Simulate(a) => {
            let r = commands::simulate(&commands::load(&a.file)?, a)?;
            match fmt {
                Format::Json => ok(json(&r)),
                Format::Csv => ok(r.csv().to_string()),
                Format::Human => ok(match &r {
                    commands::SimulateReport::Path { n_jumps, final_state, .. } => {
                        format!("{n_jumps} jumps, final state {final_state:?}\n")
                    }
                    commands::SimulateReport::TimeAverage { means, .. } => format!("time-average means ({})\n", fmt_vec(means)),
                    commands::SimulateReport::Ensemble { means, standard_errors, .. } => {
                        format!("means ({})\nstandard errors ({})\n", fmt_vec(means), fmt_vec(standard_errors))
                    }
                }),
            }
        }
        Command::Verify(a) => {
            let r = commands::verify(&commands::load(&a.class.file)?, a)?;
            let code = verdict_code(r.verdict);
            let stdout = match fmt {
                Format::Json => json(&r),
                Format::Csv => {
                    let mut out = String::from("state,oracle,formula,rel_error\n");
                    for o in &r.comparison.worst {
                        let st: Vec<String> = o.state.iter().map(i64::to_string).collect();
                        let _ = writeln!(out, "{},{:e},{:e},{:e}", st.join(" "), o.oracle, o.formula, o.rel_error);
                    }
                    out
                }
                Format::Human => format!(
                    "{:?}: TV {:.3e} (threshold {:.1e}) over {} states, solver {}, max relative residual {:.3e}\n",
                    r.verdict,
                    r.comparison.total_variation,
                    r.comparison.threshold,
                    r.comparison.n_states,
                    r.solver,
                    r.stationary_residual.max_relative
                ),
            };
            Ok(Outcome { stdout, code })
        }
    }
}
