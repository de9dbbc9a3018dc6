//! Just enough dense linear algebra for stationary vectors and the dual
//! ascent.  Matrices here are tiny (state counts of recoded shifts), so a
//! plain row-major `Vec` with Gaussian elimination is both simpler and easier
//! to keep deterministic than an external solver.

use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Scalar};

#[derive(Clone, Debug)]
pub struct DenseMatrix<T> {
    pub dim: usize,
    pub data: Vec<T>, // row-major
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.dim + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }
}

/// Solves `a x = b` in place via Gaussian elimination with partial pivoting.
/// `a` is destroyed.  Deterministic: ties in pivot selection keep the first
/// (smallest-index) row.
pub fn solve_in_place<T: Scalar>(a: &mut DenseMatrix<T>, b: &mut [T]) -> Result<()> {
    let n = a.dim;
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a.at(col, col).abs();
        for r in col + 1..n {
            let v = a.at(r, col).abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == T::zero() {
            return Err(Error::invalid(
                "linear solve",
                format!("singular system at column {col}"),
            ));
        }
        if pivot != col {
            for c in 0..n {
                let tmp = a.at(col, c);
                a.set(col, c, a.at(pivot, c));
                a.set(pivot, c, tmp);
            }
            b.swap(col, pivot);
        }
        let d = a.at(col, col);
        for r in col + 1..n {
            let factor = a.at(r, col) / d;
            if factor != T::zero() {
                for c in col..n {
                    let v = a.at(r, c) - factor * a.at(col, c);
                    a.set(r, c, v);
                }
                b[r] = b[r] - factor * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in col + 1..n {
            acc = acc - a.at(col, c) * b[c];
        }
        b[col] = acc / a.at(col, col);
    }
    Ok(())
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut k = KahanSum::new();
    for (x, y) in a.iter().zip(b) {
        k.add(*x * *y);
    }
    k.value()
}

pub fn norm2<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

pub fn norm_inf<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// log(exp(a) + exp(b)) without leaving the log domain.
#[inline]
pub fn log_add<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Kahan-compensated log-sum-exp over values in their given (fixed) order.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let m = values.iter().fold(T::neg_infinity(), |acc, v| acc.max(*v));
    if m == T::neg_infinity() {
        return T::neg_infinity();
    }
    let mut k = KahanSum::new();
    for v in values {
        k.add((*v - m).exp());
    }
    m + k.value().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, 2.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 3.0);
        let mut b = vec![5.0f64, 10.0];
        solve_in_place(&mut a, &mut b).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-14);
        assert!((b[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_system_is_reported() {
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        let mut b = vec![1.0, 2.0];
        assert!(solve_in_place(&mut a, &mut b).is_err());
    }

    #[test]
    fn log_sum_exp_matches_direct_computation() {
        let vals = [0.1f64, -2.0, 3.5, 1.0];
        let direct: f64 = vals.iter().map(|v| v.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&vals) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_survives_large_shifts() {
        let vals = [1000.0f64, 1000.0 + (2.0f64).ln()];
        assert!((log_sum_exp(&vals) - (1000.0 + (3.0f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn log_add_handles_neg_infinity() {
        assert_eq!(log_add(f64::NEG_INFINITY, 2.0), 2.0);
        assert_eq!(log_add(2.0, f64::NEG_INFINITY), 2.0);
    }
}
