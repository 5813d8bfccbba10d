use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix given by its diagonal and first
/// off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Lower bidiagonal factor `L` with `A = L L^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bidiagonal {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        Self { diag: vec![0.0; n], off: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Adds `v` at `(i, j)` and, off the diagonal, at `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        match i.abs_diff(j) {
            0 => self.diag[i] += v,
            1 => self.off[i.min(j)] += v,
            _ => panic!("entry ({i}, {j}) outside the tridiagonal band"),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * x[i] * x[i];
            if i + 1 < n {
                s += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        s
    }

    /// Bilinear form `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * x[i] * y[i];
            if i + 1 < n {
                s += self.off[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
            }
        }
        s
    }

    /// Cholesky factorization; fails unless the matrix is positive definite.
    pub fn cholesky(&self) -> Result<Bidiagonal> {
        let n = self.dim();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut d = self.diag[i];
            if i > 0 {
                sub[i - 1] = self.off[i - 1] / diag[i - 1];
                d -= sub[i - 1] * sub[i - 1];
            }
            if !(d > 0.0) {
                return Err(Error::FactorizationFailure(format!("matrix not positive definite at row {i}")));
            }
            diag[i] = d.sqrt();
        }
        Ok(Bidiagonal { diag, sub })
    }

    /// Solves `A x = b` in place with the Thomas algorithm (no pivoting; the
    /// matrices passed here are symmetric positive definite).
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let l = self.cholesky()?;
        l.solve_in_place(b);
        l.solve_transpose_in_place(b);
        Ok(())
    }
}

impl Bidiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `x <- L^{-1} x`.
    pub fn solve_in_place<T>(&self, x: &mut [T])
    where
        T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Div<f64, Output = T>,
    {
        for i in 0..self.dim() {
            if i > 0 {
                x[i] = x[i] - x[i - 1] * self.sub[i - 1];
            }
            x[i] = x[i] / self.diag[i];
        }
    }

    /// `x <- L^{-T} x`.
    pub fn solve_transpose_in_place<T>(&self, x: &mut [T])
    where
        T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Div<f64, Output = T>,
    {
        for i in (0..self.dim()).rev() {
            if i + 1 < self.dim() {
                x[i] = x[i] - x[i + 1] * self.sub[i];
            }
            x[i] = x[i] / self.diag[i];
        }
    }

    /// `x <- L x`.
    pub fn mul_in_place<T>(&self, x: &mut [T])
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        for i in (0..self.dim()).rev() {
            let mut s = x[i] * self.diag[i];
            if i > 0 {
                s = s + x[i - 1] * self.sub[i - 1];
            }
            x[i] = s;
        }
    }

    /// `x <- L^T x`.
    pub fn mul_transpose_in_place<T>(&self, x: &mut [T])
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        for i in 0..self.dim() {
            let mut s = x[i] * self.diag[i];
            if i + 1 < self.dim() {
                s = s + x[i + 1] * self.sub[i];
            }
            x[i] = s;
        }
    }
}
