//! Log-factorials, log-binomials and log-sum-exp accumulation.

use std::sync::OnceLock;

const TABLE_LEN: usize = 4096;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for n in 1..TABLE_LEN {
            acc += (n as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln n!`, tabulated below 4096 and by the Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return ln_factorial_table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Streaming `ln Σ exp(aᵢ)` with a running maximum. Summation order is the
/// insertion order, so results are reproducible.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn add(&mut self, a: f64) {
        if a == f64::NEG_INFINITY {
            return;
        }
        if a <= self.max {
            self.sum += (a - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - a).exp() + 1.0;
            self.max = a;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if self.max == f64::NEG_INFINITY {
            *self = *other;
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogSumExp::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
