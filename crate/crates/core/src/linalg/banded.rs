use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field operations needed by [`BandedLu`].
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

/// LU factorization with partial pivoting of a banded matrix, stored in the
/// LAPACK `gbtrf` layout: entry `(i, j)` lives at row `kl + ku + i - j` of
/// column `j`, leaving `kl` extra superdiagonals for pivoting fill.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<T>,
    ipiv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    /// Factors the `n x n` matrix given as `(row, col, value)` entries;
    /// duplicates are summed.
    pub fn factor(n: usize, entries: &[(usize, usize, T)]) -> Result<Self> {
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in entries {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch { what: "banded entry", expected: n, actual: i.max(j) });
            }
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let ld = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, ab: vec![T::zero(); ld * n], ipiv: vec![0; n] };
        for &(i, j, v) in entries {
            let k = lu.idx(i, j);
            lu.ab[k] = lu.ab[k] + v;
        }
        lu.factor_in_place()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + j * (2 * self.kl + self.ku + 1)
    }

    fn factor_in_place(&mut self) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let m = self.ab[self.idx(j + r, j)].modulus();
                if m > best {
                    best = m;
                    jp = r;
                }
            }
            self.ipiv[j] = j + jp;
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::FactorizationFailure(format!("zero pivot in column {j}")));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let (a, b) = (self.idx(j, c), self.idx(j + jp, c));
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let pivot = self.ab[self.idx(j, j)];
                for r in 1..=km {
                    let k = self.idx(j + r, j);
                    self.ab[k] = self.ab[k] / pivot;
                }
                for c in j + 1..=ju {
                    let ujc = self.ab[self.idx(j, c)];
                    if ujc == T::zero() {
                        continue;
                    }
                    for r in 1..=km {
                        let l = self.ab[self.idx(j + r, j)];
                        let k = self.idx(j + r, c);
                        self.ab[k] = self.ab[k] - l * ujc;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot modulus of `U`.
    pub fn min_pivot(&self) -> f64 {
        (0..self.n).map(|j| self.ab[self.idx(j, j)].modulus()).fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            for r in 1..=self.kl.min(n - 1 - j) {
                b[j + r] = b[j + r] - self.ab[self.idx(j + r, j)] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] = b[j] / self.ab[self.idx(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(kv)..j {
                b[i] = b[i] - self.ab[self.idx(i, j)] * bj;
            }
        }
    }

    /// Solves `A^T x = b` in place (plain transpose, no conjugation).
    pub fn solve_transpose_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let mut s = b[j];
            for i in j.saturating_sub(kv)..j {
                s = s - self.ab[self.idx(i, j)] * b[i];
            }
            b[j] = s / self.ab[self.idx(j, j)];
        }
        for j in (0..n).rev() {
            let mut s = b[j];
            for r in 1..=self.kl.min(n - 1 - j) {
                s = s - self.ab[self.idx(j + r, j)] * b[j + r];
            }
            b[j] = s;
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
        }
    }

    /// Solves `A^H x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [T]) {
        for v in b.iter_mut() {
            *v = v.conj();
        }
        self.solve_transpose_in_place(b);
        for v in b.iter_mut() {
            *v = v.conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul<T: Scalar>(n: usize, e: &[(usize, usize, T)], x: &[T], transpose: bool) -> Vec<T> {
        let mut y = vec![T::zero(); n];
        for &(i, j, v) in e {
            if transpose {
                y[j] = y[j] + v * x[i];
            } else {
                y[i] = y[i] + v * x[j];
            }
        }
        y
    }

    fn test_matrix(n: usize) -> Vec<(usize, usize, f64)> {
        // nonsymmetric, needs pivoting (zero diagonal in places)
        let mut e = Vec::new();
        for i in 0..n {
            if i % 3 != 1 {
                e.push((i, i, 0.5 + i as f64 * 0.1));
            }
            if i + 1 < n {
                e.push((i, i + 1, 1.0 + (i as f64).sin()));
                e.push((i + 1, i, -2.0 + (i as f64).cos()));
            }
            if i + 3 < n {
                e.push((i + 3, i, 0.3));
            }
        }
        e
    }

    #[test]
    fn real_solve_and_transpose_solve() {
        let n = 17;
        let e = test_matrix(n);
        let lu = BandedLu::factor(n, &e).unwrap();
        let x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).cos()).collect();
        let mut b = dense_mul(n, &e, &x, false);
        lu.solve_in_place(&mut b);
        assert!(b.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-11), "{b:?}");
        let mut bt = dense_mul(n, &e, &x, true);
        lu.solve_transpose_in_place(&mut bt);
        assert!(bt.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-11));
    }

    #[test]
    fn complex_adjoint_solve() {
        let n = 12;
        let e: Vec<(usize, usize, Complex64)> = test_matrix(n)
            .into_iter()
            .map(|(i, j, v)| (i, j, Complex64::new(v, 0.3 * (i as f64 - j as f64) + if i == j { 1.0 } else { 0.0 })))
            .collect();
        let lu = BandedLu::factor(n, &e).unwrap();
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let mut b = dense_mul(n, &e, &x, false);
        lu.solve_in_place(&mut b);
        assert!(b.iter().zip(&x).all(|(p, q)| (p - q).norm() < 1e-11));
        let conj_e: Vec<_> = e.iter().map(|&(i, j, v)| (i, j, v.conj())).collect();
        let mut bh = dense_mul(n, &conj_e, &x, true);
        lu.solve_adjoint_in_place(&mut bh);
        assert!(bh.iter().zip(&x).all(|(p, q)| (p - q).norm() < 1e-11));
    }

    #[test]
    fn singular_detected() {
        let e = vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)];
        assert!(BandedLu::factor(2, &e).is_err());
    }
}
