//! Exact linear algebra over the integers and rationals.
//!
//! Rank uses fraction-free (Bareiss) elimination on big integers; null spaces
//! and determinants go through rational Gauss-Jordan elimination. Nothing here
//! touches floating point except the final `ln` helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Rank of an integer matrix by Bareiss fraction-free elimination.
pub fn bareiss_rank(rows: &[Vec<i64>]) -> usize {
    let Some(ncols) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let nrows = a.len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..nrows {
            for c in col + 1..ncols {
                let v = &a[rank][col] * &a[r][c] - &a[r][col] * &a[rank][c];
                // Bareiss: the division is exact.
                a[r][c] = v / &prev;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

pub fn to_rational_rows(rows: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect()
        })
        .collect()
}

/// Reduced row-echelon form. Returns the nonzero rows and pivot columns.
pub fn rref(mut a: Vec<Vec<BigRational>>) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let nrows = a.len();
    let ncols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == nrows {
            break;
        }
        let Some(p) = (row..nrows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for v in a[row].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[row].clone();
        for (r, target) in a.iter_mut().enumerate() {
            if r == row || target[col].is_zero() {
                continue;
            }
            let f = target[col].clone();
            for (t, p) in target.iter_mut().zip(&pivot_row) {
                *t -= &f * p;
            }
        }
        pivots.push(col);
        row += 1;
    }
    a.truncate(row);
    (a, pivots)
}

/// Basis of `{w : A w = 0}` for an integer matrix `A` with `ncols` columns.
pub fn nullspace(rows: &[Vec<i64>], ncols: usize) -> Vec<Vec<BigRational>> {
    let (r, pivots) = rref(to_rational_rows(rows));
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut w = vec![BigRational::zero(); ncols];
            w[f] = BigRational::one();
            for (row, &p) in r.iter().zip(&pivots) {
                w[p] = -row[f].clone();
            }
            w
        })
        .collect()
}

/// Scales a rational vector to coprime integers with a positive leading entry.
pub fn primitive_integer(row: &[BigRational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = row.iter().map(|v| (v * &lcm).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if gcd.is_zero() {
        return ints;
    }
    let sign = match ints.iter().find(|v| !v.is_zero()) {
        Some(v) if v.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter().map(|v| v / &gcd * &sign).collect()
}

/// Determinant by rational Gaussian elimination.
pub fn determinant(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &pivot;
            for c in col..n {
                let v = &f * &a[col][c];
                a[r][c] -= v;
            }
        }
    }
    det
}

fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigInt = v >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational without intermediate overflow.
pub fn ln_rational(v: &BigRational) -> f64 {
    debug_assert!(v.is_positive());
    ln_bigint(v.numer()) - ln_bigint(v.denom())
}

pub fn rational_from_f64(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite float")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn rank_of_cycle_vectors() {
        // B−A, C−B, A−C for A→B→C→A
        let rows = vec![vec![-1, 1, 0], vec![0, -1, 1], vec![1, 0, -1]];
        assert_eq!(bareiss_rank(&rows), 2);
    }

    #[test]
    fn nullspace_of_s1s2() {
        let ns = nullspace(&[vec![-1, 1], vec![1, -1]], 2);
        assert_eq!(ns.len(), 1);
        assert_eq!(primitive_integer(&ns[0]), vec![1.into(), 1.into()]);
    }

    #[test]
    fn determinant_small() {
        let a = vec![vec![q(2), q(1)], vec![q(7), q(4)]];
        assert_eq!(determinant(a), q(1));
        assert_eq!(determinant(vec![vec![q(0), q(1)], vec![q(1), q(0)]]), q(-1));
    }

    #[test]
    fn ln_of_huge_rational() {
        let big = BigRational::new(BigInt::from(3) << 5000usize, BigInt::from(7) << 4990usize);
        let expect = (3.0f64 / 7.0).ln() + 10.0 * std::f64::consts::LN_2;
        assert!((ln_rational(&big) - expect).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bareiss_agrees_with_rref(rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 4), 0..6)) {
            let r = bareiss_rank(&rows);
            let (echelon, _) = rref(to_rational_rows(&rows));
            prop_assert_eq!(r, echelon.len());
        }

        #[test]
        fn nullspace_is_annihilated(rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 5), 1..5)) {
            let ns = nullspace(&rows, 5);
            prop_assert_eq!(ns.len() + bareiss_rank(&rows), 5);
            for w in &ns {
                for r in &rows {
                    let dot = r.iter().zip(w).fold(BigRational::zero(), |acc, (&a, b)| acc + q(a) * b);
                    prop_assert!(dot.is_zero());
                }
            }
        }
    }
}
