//! Piecewise Chebyshev representations of functions on `[0, 1]`.
//!
//! A [`PanelFunction`] stores one Chebyshev series per panel. Fitting splits
//! panels until the trailing coefficients fall below the tolerance, and
//! [`PanelFunction::antiderivative`] integrates the series exactly, so nested
//! integrals `int_0^x ... int_0^s` reduce to repeated antiderivatives on the
//! same panels.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Chebyshev points per panel.
pub const POINTS_PER_PANEL: usize = 24;
const MAX_SPLIT_DEPTH: usize = 40;
const TAIL_TERMS: usize = 3;

#[derive(Debug, Clone)]
pub struct PanelFunction {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

fn chebyshev_coefficients(values: &[f64]) -> Vec<f64> {
    let p = values.len();
    let mut c = vec![0.0; p];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, v) in values.iter().enumerate() {
            acc += v * (PI * j as f64 * (k as f64 + 0.5) / p as f64).cos();
        }
        *cj = 2.0 * acc / p as f64;
    }
    c[0] *= 0.5;
    c
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c[0]
}

fn sample_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Vec<f64> {
    let p = POINTS_PER_PANEL;
    let values: Vec<f64> = (0..p)
        .map(|k| {
            let t = (PI * (k as f64 + 0.5) / p as f64).cos();
            f(0.5 * (a + b) + 0.5 * (b - a) * t)
        })
        .collect();
    chebyshev_coefficients(&values)
}

fn resolved(c: &[f64], tol: f64) -> bool {
    let scale = c.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tail = c[c.len() - TAIL_TERMS..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    tail <= tol * scale
}

impl PanelFunction {
    /// Fits `f` on the panels delimited by `breaks` (sorted, covering the
    /// domain), splitting each panel until its series is resolved to `tol`.
    ///
    /// When `exempt_first` is set the first panel is accepted as sampled; it
    /// is meant for a tiny panel `[0, eps]` carrying an integrable
    /// singularity.
    pub fn fit<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64, exempt_first: bool) -> Result<Self> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("panel breaks must be strictly increasing".into()));
        }
        let mut out_breaks = vec![breaks[0]];
        let mut coeffs = Vec::new();
        for (i, w) in breaks.windows(2).enumerate() {
            let mut stack = vec![(w[0], w[1], 0usize)];
            while let Some((a, b, depth)) = stack.pop() {
                let c = sample_panel(&f, a, b);
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::DivergedQuadrature { a, b, tol, estimate: f64::INFINITY });
                }
                if (i == 0 && exempt_first) || resolved(&c, tol) {
                    out_breaks.push(b);
                    coeffs.push(c);
                } else if depth >= MAX_SPLIT_DEPTH {
                    return Err(Error::DivergedQuadrature { a, b, tol, estimate: c[c.len() - 1].abs() });
                } else {
                    let m = 0.5 * (a + b);
                    // right half pushed first so panels come out in order
                    stack.push((m, b, depth + 1));
                    stack.push((a, m, depth + 1));
                }
            }
        }
        Ok(Self { breaks: out_breaks, coeffs })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn panel_count(&self) -> usize {
        self.coeffs.len()
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.coeffs.len();
        match self.breaks.binary_search_by(|b| b.total_cmp(&x)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Evaluates the representation; points outside the domain use the
    /// nearest panel's series.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let (a, b) = (self.breaks[i], self.breaks[i + 1]);
        let t = (2.0 * x - a - b) / (b - a);
        clenshaw(&self.coeffs[i], t)
    }

    /// Antiderivative vanishing at the left end of the domain.
    pub fn antiderivative(&self) -> Self {
        let mut offset = 0.0;
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let half = 0.5 * (self.breaks[i + 1] - self.breaks[i]);
            let p = c.len();
            let mut big = vec![0.0; p + 1];
            for (j, &cj) in c.iter().enumerate() {
                match j {
                    0 => big[1] += cj,
                    1 => big[2] += 0.25 * cj,
                    _ => {
                        big[j + 1] += cj / (2.0 * (j as f64 + 1.0));
                        big[j - 1] -= cj / (2.0 * (j as f64 - 1.0));
                    }
                }
            }
            for v in big.iter_mut() {
                *v *= half;
            }
            let at_left: f64 = big
                .iter()
                .enumerate()
                .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
                .sum();
            big[0] += offset - at_left;
            offset = big.iter().sum();
            coeffs.push(big);
        }
        Self { breaks: self.breaks.clone(), coeffs }
    }

    /// The same function plus a constant.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for panel in out.coeffs.iter_mut() {
            panel[0] += c;
        }
        out
    }

    /// Integral over the whole domain.
    pub fn integral(&self) -> f64 {
        self.antiderivative().eval(*self.breaks.last().unwrap_or(&0.0))
    }
}

/// Breakpoints `0, eps, 2 eps, ..., 1/2, 1` with `eps = 2^-levels`.
pub fn dyadic_breaks(levels: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    for k in (1..=levels).rev() {
        b.push(0.5_f64.powi(k as i32));
    }
    b.push(1.0);
    b
}

/// Merges extra interior breakpoints into a sorted break list.
pub fn merge_breaks(base: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = base.iter().chain(extra.iter()).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
    all
}
