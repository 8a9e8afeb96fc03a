use serde::Serialize;

use super::KineticsError;
use crate::special::{ln_binomial, ln_factorial};

/// Per-species "rate of association" function θᵢ. Every variant vanishes
/// for `x ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Theta {
    /// θ(x) = x, which recovers stochastic mass action.
    Linear,
    /// θ(x) = v·x / (k + x).
    MichaelisMenten { v: f64, k: f64 },
    /// θ(x) = min(n, x): an M/M/n server pool.
    MinServers { n: u32 },
    /// θ(j) = values[j − 1] for 1 ≤ j ≤ len; lookups past the table fail.
    Tabulated { values: Vec<f64> },
}

impl Theta {
    pub fn validate(&self) -> Result<(), KineticsError> {
        let bad = |what: String| Err(KineticsError::InvalidSpec(what));
        match self {
            Theta::Linear => Ok(()),
            Theta::MichaelisMenten { v, k } => {
                if !(v.is_finite() && *v > 0.0 && k.is_finite() && *k > 0.0) {
                    return bad(format!("mm(v={v}, k={k}) needs v > 0 and k > 0"));
                }
                Ok(())
            }
            Theta::MinServers { n } => {
                if *n == 0 {
                    return bad("minn(n) needs n >= 1".into());
                }
                Ok(())
            }
            Theta::Tabulated { values } => {
                if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return bad("tabulated theta values must be positive".into());
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: i64) -> Result<f64, KineticsError> {
        if x <= 0 {
            return Ok(0.0);
        }
        let xf = x as f64;
        Ok(match self {
            Theta::Linear => xf,
            Theta::MichaelisMenten { v, k } => v * xf / (k + xf),
            Theta::MinServers { n } => xf.min(f64::from(*n)),
            Theta::Tabulated { values } => *values
                .get(x as usize - 1)
                .ok_or(KineticsError::OutOfTable { x, len: values.len() })?,
        })
    }

    /// `Σ_{j=1}^{x} ln θ(j)`, the log of the cumulative product.
    pub fn ln_cumulative(&self, x: i64) -> Result<f64, KineticsError> {
        if x <= 0 {
            return Ok(0.0);
        }
        match self {
            Theta::Linear => Ok(ln_factorial(x as u64)),
            Theta::MichaelisMenten { v, k } if k.fract() == 0.0 && *k < 1e6 => {
                let k = *k as u64;
                let x = x as u64;
                Ok(x as f64 * v.ln() - ln_binomial(k + x, x))
            }
            Theta::MinServers { n } => {
                let n = i64::from(*n);
                let head = ln_factorial(x.min(n) as u64);
                Ok(head + (x - n).max(0) as f64 * (n as f64).ln())
            }
            _ => {
                let mut acc = 0.0;
                for j in 1..=x {
                    acc += self.eval(j)?.ln();
                }
                Ok(acc)
            }
        }
    }

    /// `lim_{j→∞} θ(j)`, `None` when the tail is not defined (tables).
    pub fn limit(&self) -> Option<f64> {
        match self {
            Theta::Linear => Some(f64::INFINITY),
            Theta::MichaelisMenten { v, .. } => Some(*v),
            Theta::MinServers { n } => Some(f64::from(*n)),
            Theta::Tabulated { .. } => None,
        }
    }

    /// θ is nondecreasing on the positive integers.
    pub fn is_monotone(&self) -> bool {
        match self {
            Theta::Tabulated { values } => values.windows(2).all(|w| w[0] <= w[1]),
            _ => true,
        }
    }
}
