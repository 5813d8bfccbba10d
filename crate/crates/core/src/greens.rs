//! Explicit inverse of the continuous generator at `lambda = 0`.
//!
//! For data `(f, g, h)` the solution of `A (u, v, theta) = (f, g, h)` is
//! `v = f` and, with `F = kappa f' + h` and `Phi(x) = int_0^x F`,
//!
//! ```text
//! WDP: theta(x) = int_0^x Phi/a + C2 W(x),   C2 = int_0^1 (W(s) - W(1))/W(1) F(s) ds
//! SDP: theta(x) = -int_x^1 Phi/a
//! u(x)  = kappa int_0^x theta + int_0^x int_0^s g + C1 x
//! C1    = int_0^1 omega(s) F(s) ds + int_0^1 (s - 1) g(s) ds
//! ```
//!
//! with `omega = kappa((1 - W~(1)/W(1) - s) W + W~)` (WDP) or `kappa W~` (SDP).
//! Nested integrals are built as exact antiderivatives of piecewise
//! Chebyshev fits on panels refined dyadically towards `x = 0`.
//!
//! The temperature kernel is `K(x, s) = W(min)(W(max) - W(1))/W(1)` for WDP
//! and `-W(max(x, s))` for SDP, so that `theta = int_0^1 K(x, s) F(s) ds`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{eval_w, eval_w_tilde, DegeneracyClass, DegeneracyProfile, Mesh, ProfileKind};
use crate::operator::{assemble, DiscreteOperator, StateVector};
use crate::panels::{dyadic_breaks, merge_breaks, PanelFunction};
use crate::quadrature;

/// Default absolute tolerance of [`inverse_apply`].
pub const DEFAULT_TOL: f64 = 1e-8;

type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Right-hand side `(f, g, h)` with access to `f'`.
#[derive(Clone)]
pub struct RhsTriple {
    f: Func,
    df: Func,
    g: Func,
    h: Func,
    /// points where the data may be non-smooth
    knots: Vec<f64>,
}

impl std::fmt::Debug for RhsTriple {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("RhsTriple").field("knots", &self.knots.len()).finish_non_exhaustive()
    }
}

impl RhsTriple {
    pub fn from_fns<F, DF, G, H>(f: F, df: DF, g: G, h: H) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        DF: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), df: Arc::new(df), g: Arc::new(g), h: Arc::new(h), knots: Vec::new() }
    }

    pub fn zero() -> Self {
        Self::from_fns(|_| 0.0, |_| 0.0, |_| 0.0, |_| 0.0)
    }

    /// Nodal tables on `0 = x_0 < ... < x_m = 1`, interpolated linearly.
    /// `f'` is taken from spacing-aware centred differences (one-sided at
    /// the ends) and interpolated linearly as well.
    pub fn from_table(x: &[f64], f: &[f64], g: &[f64], h: &[f64]) -> Result<Self> {
        let m = x.len();
        if m < 2 || f.len() != m || g.len() != m || h.len() != m {
            return Err(Error::InvalidArgument("rhs tables need equal lengths >= 2".into()));
        }
        if x[0] != 0.0 || x[m - 1] != 1.0 || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("rhs abscissae must increase from 0 to 1".into()));
        }
        if f[0].abs() > 1e-10 || f[m - 1].abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "f must vanish at both ends, got f(0) = {}, f(1) = {}",
                f[0],
                f[m - 1]
            )));
        }
        let mut df = vec![0.0; m];
        df[0] = (f[1] - f[0]) / (x[1] - x[0]);
        df[m - 1] = (f[m - 1] - f[m - 2]) / (x[m - 1] - x[m - 2]);
        for i in 1..m - 1 {
            let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            df[i] = (h1 * h1 * f[i + 1] - h2 * h2 * f[i - 1] + (h2 * h2 - h1 * h1) * f[i]) / (h1 * h2 * (h1 + h2));
        }
        let table = |vals: Vec<f64>| -> Func {
            let xs = x.to_vec();
            Arc::new(move |t: f64| linear_interp(&xs, &vals, t))
        };
        Ok(Self {
            f: table(f.to_vec()),
            df: table(df),
            g: table(g.to_vec()),
            h: table(h.to_vec()),
            knots: x[1..m - 1].to_vec(),
        })
    }

    /// `a * r1 + b * r2`.
    pub fn combine(a: f64, r1: &Self, b: f64, r2: &Self) -> Self {
        let lin = |p: &Func, q: &Func| -> Func {
            let (p, q) = (p.clone(), q.clone());
            Arc::new(move |x| a * p(x) + b * q(x))
        };
        let knots = merge_breaks(&r1.knots, &r2.knots);
        Self { f: lin(&r1.f, &r2.f), df: lin(&r1.df, &r2.df), g: lin(&r1.g, &r2.g), h: lin(&r1.h, &r2.h), knots }
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn df(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn h(&self, x: f64) -> f64 {
        (self.h)(x)
    }

    /// `kappa f'(x) + h(x)`.
    pub fn driving(&self, kappa: f64, x: f64) -> f64 {
        kappa * (self.df)(x) + (self.h)(x)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

fn linear_interp(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let i = match xs.binary_search_by(|p| p.total_cmp(&t)) {
        Ok(i) => return ys[i],
        Err(0) => 0,
        Err(i) if i >= xs.len() => xs.len() - 2,
        Err(i) => i - 1,
    };
    let w = (t - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// `W` and `W~` for repeated evaluation: closed forms for power laws,
/// panel fits of the segment-wise values otherwise.
#[derive(Debug, Clone)]
struct Weights {
    profile: DegeneracyProfile,
    w_fit: Option<PanelFunction>,
    wt_fit: Option<PanelFunction>,
    w1: f64,
    wt1: f64,
}

impl Weights {
    fn new(profile: &DegeneracyProfile) -> Result<Self> {
        let (w_fit, wt_fit) = match profile.kind() {
            ProfileKind::PowerLaw => (None, None),
            ProfileKind::Tabulated => {
                let knots: Vec<f64> = profile.samples().unwrap_or(&[]).iter().map(|s| s.0).collect();
                let breaks = merge_breaks(&dyadic_breaks(60), &knots);
                let w = PanelFunction::fit(|x| eval_w(profile, x).unwrap_or(f64::NAN), &breaks, 1e-12, true)?;
                let wt = PanelFunction::fit(|x| eval_w_tilde(profile, x).unwrap_or(f64::NAN), &breaks, 1e-12, true)?;
                (Some(w), Some(wt))
            }
        };
        Ok(Self { profile: profile.clone(), w_fit, wt_fit, w1: eval_w(profile, 1.0)?, wt1: eval_w_tilde(profile, 1.0)? })
    }

    fn w(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.w_fit {
            Some(p) if x > 0.0 => p.eval(x),
            _ => eval_w(&self.profile, x).unwrap_or(f64::NAN),
        }
    }

    fn w_tilde(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.wt_fit {
            Some(p) => p.eval(x),
            None => eval_w_tilde(&self.profile, x).unwrap_or(f64::NAN),
        }
    }

    fn kernel_k(&self, x: f64, s: f64) -> f64 {
        let (lo, hi) = if x < s { (x, s) } else { (s, x) };
        match self.profile.class() {
            DegeneracyClass::Wdp => self.w(lo) * (self.w(hi) - self.w1) / self.w1,
            _ => -self.w(hi),
        }
    }

    fn omega(&self, kappa: f64, s: f64) -> f64 {
        match self.profile.class() {
            DegeneracyClass::Wdp => kappa * ((1.0 - self.wt1 / self.w1 - s) * self.w(s) + self.w_tilde(s)),
            _ => kappa * self.w_tilde(s),
        }
    }
}

fn check_unit(x: f64, s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("kernel arguments ({x}, {s}) outside [0, 1]^2")))
    }
}

/// Temperature kernel `K(x, s)`.
pub fn kernel_k(profile: &DegeneracyProfile, x: f64, s: f64) -> Result<f64> {
    profile.require_supported()?;
    check_unit(x, s)?;
    let (lo, hi) = if x < s { (x, s) } else { (s, x) };
    match profile.class() {
        DegeneracyClass::Wdp => {
            let w1 = eval_w(profile, 1.0)?;
            Ok(eval_w(profile, lo)? * (eval_w(profile, hi)? - w1) / w1)
        }
        _ => Ok(-eval_w(profile, hi)?),
    }
}

/// Kernel `M(x, s)` of `u'` against `kappa f' + h`.
pub fn kernel_m(profile: &DegeneracyProfile, kappa: f64, x: f64, s: f64) -> Result<f64> {
    let k = kernel_k(profile, x, s)?;
    let wt = eval_w_tilde(profile, s)?;
    match profile.class() {
        DegeneracyClass::Wdp => {
            let (w1, wt1) = (eval_w(profile, 1.0)?, eval_w_tilde(profile, 1.0)?);
            Ok(kappa * ((1.0 - wt1 / w1 - s) * eval_w(profile, s)? + wt + k))
        }
        _ => Ok(kappa * k + kappa * wt),
    }
}

/// Kernel `N(x, s)` of `u'` against `g`: `s` for `s < x`, `s - 1` otherwise.
pub fn kernel_n(x: f64, s: f64) -> f64 {
    if s < x {
        s
    } else {
        s - 1.0
    }
}

/// Solution of `A (u, v, theta) = (f, g, h)`.
#[derive(Debug, Clone)]
pub struct GreensSolution {
    class: DegeneracyClass,
    kappa: f64,
    tol: f64,
    rhs: RhsTriple,
    weights: Weights,
    phi: PanelFunction,
    /// `int_0^x Phi/a`
    p: PanelFunction,
    theta: PanelFunction,
    theta_int: PanelFunction,
    g1: PanelFunction,
    g2: PanelFunction,
    c1: f64,
    c2: Option<f64>,
    driving_norm: f64,
}

/// Number of dyadic levels so that the unresolved panel `[0, 2^-K]`
/// carries less than `tol * 1e-3` of `int Phi/a`.
fn dyadic_levels(profile: &DegeneracyProfile, tol: f64) -> usize {
    let p = profile.near_zero_exponent().min(1.999);
    let k = ((1.0 / (tol * 1e-3)).log2() / (2.0 - p)).ceil();
    (k.max(20.0) as usize).min(400)
}

/// Evaluates the explicit inverse for the data `rhs`.
pub fn inverse_apply(profile: &DegeneracyProfile, kappa: f64, rhs: &RhsTriple, tol: f64) -> Result<GreensSolution> {
    profile.require_supported()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let class = profile.class();
    let weights = Weights::new(profile)?;
    let mut knots: Vec<f64> = rhs.knots.iter().copied().filter(|&x| x > 0.0 && x < 1.0).collect();
    if let Some(s) = profile.samples() {
        knots.extend(s.iter().map(|p| p.0).filter(|&x| x < 1.0));
    }
    let breaks = merge_breaks(&dyadic_breaks(dyadic_levels(profile, tol)), &knots);
    let fit_tol = (tol * 1e-4).max(1e-14);
    let fit = |f: &dyn Fn(f64) -> f64| PanelFunction::fit(f, &breaks, fit_tol, true);

    let drive = fit(&|x| rhs.driving(kappa, x))?;
    let phi = drive.antiderivative();
    let driving_norm = fit(&|x| drive.eval(x).powi(2))?.integral().max(0.0).sqrt();
    let p = fit(&|x| phi.eval(x) / profile.eval(x))?.antiderivative();
    let p1 = p.eval(1.0);

    let (theta, c2) = match class {
        DegeneracyClass::Wdp => {
            let w1 = weights.w1;
            let c2 = fit(&|s| (weights.w(s) - w1) / w1 * drive.eval(s))?.integral();
            let c2_boundary = -p1 / w1;
            check_identity("C2 formula vs theta(1) = 0", c2, c2_boundary, tol)?;
            (fit(&|x| p.eval(x) + c2 * weights.w(x))?, Some(c2))
        }
        _ => (p.shifted(-p1), None),
    };
    let theta_int = theta.antiderivative();
    let g1 = fit(&|x| rhs.g(x))?.antiderivative();
    let g2 = g1.antiderivative();

    let c1 = fit(&|s| weights.omega(kappa, s) * drive.eval(s))?.integral()
        + fit(&|s| (s - 1.0) * rhs.g(s))?.integral();
    let c1_boundary = -kappa * theta_int.eval(1.0) - g2.eval(1.0);
    check_identity("C1 formula vs u(1) = 0", c1, c1_boundary, tol)?;

    Ok(GreensSolution {
        class,
        kappa,
        tol,
        rhs: rhs.clone(),
        weights,
        phi,
        p,
        theta,
        theta_int,
        g1,
        g2,
        c1,
        c2,
        driving_norm,
    })
}

fn check_identity(what: &'static str, first: f64, second: f64, tol: f64) -> Result<()> {
    if (first - second).abs() <= 10.0 * tol * first.abs().max(1.0) {
        Ok(())
    } else {
        Err(Error::IdentityMismatch { what, first, second })
    }
}

impl GreensSolution {
    pub fn class(&self) -> DegeneracyClass {
        self.class
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// `None` in the SDP case.
    pub fn c2(&self) -> Option<f64> {
        self.c2
    }

    pub fn u(&self, x: f64) -> f64 {
        self.kappa * self.theta_int.eval(x) + self.g2.eval(x) + self.c1 * x
    }

    pub fn v(&self, x: f64) -> f64 {
        self.rhs.f(x)
    }

    pub fn theta(&self, x: f64) -> f64 {
        match self.c2 {
            Some(c2) => self.p.eval(x) + c2 * self.weights.w(x),
            None => self.theta.eval(x),
        }
    }

    /// `u'(x) = kappa theta + int_0^x g + C1`.
    pub fn du(&self, x: f64) -> f64 {
        self.kappa * self.theta(x) + self.g1.eval(x) + self.c1
    }

    /// Heat flux `(a theta')(x) = Phi(x) + C2`.
    pub fn flux(&self, x: f64) -> f64 {
        self.phi.eval(x) + self.c2.unwrap_or(0.0)
    }

    /// `||kappa f' + h||_{L^2}`.
    pub fn driving_norm(&self) -> f64 {
        self.driving_norm
    }

    /// `theta(x)` through the kernel form `int_0^1 K(x, s) F(s) ds`,
    /// evaluated by adaptive quadrature split at `x`.
    pub fn theta_by_kernel(&self, x: f64) -> Result<f64> {
        let integrand = |s: f64| self.weights.kernel_k(x, s) * self.rhs.driving(self.kappa, s);
        Ok(quadrature::integrate(integrand, 0.0, x, self.tol / 10.0)?
            + quadrature::integrate(integrand, x, 1.0, self.tol / 10.0)?)
    }

    /// `u'(x)` through the kernel form `int M(x, s) F(s) ds + int N(x, s) g(s) ds`.
    pub fn du_by_kernel(&self, x: f64) -> Result<f64> {
        let kappa = self.kappa;
        let integrand = |s: f64| {
            let m = kappa * self.weights.kernel_k(x, s) + self.weights.omega(kappa, s);
            m * self.rhs.driving(kappa, s) + kernel_n(x, s) * self.rhs.g(s)
        };
        Ok(quadrature::integrate(integrand, 0.0, x, self.tol / 10.0)?
            + quadrature::integrate(integrand, x, 1.0, self.tol / 10.0)?)
    }

    /// Amount by which the flux bound `|a theta' - c| <= sqrt(x) ||F||`
    /// is exceeded at `x` (non-positive when it holds). `c = C2` for WDP,
    /// where the flux need not vanish at the origin, and `0` for SDP.
    pub fn flux_bound_excess(&self, x: f64) -> f64 {
        (self.flux(x) - self.c2.unwrap_or(0.0)).abs() - x.sqrt() * self.driving_norm
    }
}

/// Discrete residual of the interpolated Green's solution,
/// `||A_h^{-1} (A_h I(sol) - P(rhs))||_G = ||I(sol) - A_h^{-1} P(rhs)||_G`.
///
/// `I` is nodal interpolation and `P` the `G`-orthogonal projection onto the
/// discrete space. The defect is measured through `A_h^{-1}`: near the
/// degenerate end `theta` behaves like a fractional power of `x`, and the
/// nodal interpolation defect it leaves in the coupling rows does not tend to
/// zero in the plain `G`-norm for every profile.
pub fn residual_check(
    profile: &DegeneracyProfile,
    kappa: f64,
    rhs: &RhsTriple,
    sol: &GreensSolution,
    mesh: &Mesh,
) -> Result<f64> {
    let op = assemble(mesh, profile, kappa)?;
    residual_on(&op, rhs, sol)
}

/// As [`residual_check`] on an assembled operator.
pub fn residual_on(op: &DiscreteOperator, rhs: &RhsTriple, sol: &GreensSolution) -> Result<f64> {
    if sol.class != op.class() {
        return Err(Error::InvalidArgument("solution and operator belong to different classes".into()));
    }
    let state = op.interpolate(|x| sol.u(x), |x| sol.v(x), |x| sol.theta(x));
    let mut r = op.apply_k(&state)?;
    let load = load_vector(op, rhs)?;
    for (ri, bi) in r.u.iter_mut().zip(&load.u) {
        *ri -= bi;
    }
    for (ri, bi) in r.v.iter_mut().zip(&load.v) {
        *ri -= bi;
    }
    for (ri, bi) in r.theta.iter_mut().zip(&load.theta) {
        *ri -= bi;
    }
    let e = op.solve_k(&r)?;
    Ok(op.inner(&e, &e)?.max(0.0).sqrt())
}

/// `G P(rhs)`: `(S I(f), int g phi_i, int h psi_j)`.
pub fn load_vector(op: &DiscreteOperator, rhs: &RhsTriple) -> Result<StateVector> {
    let x = op.mesh().nodes();
    let n = op.mesh().n();
    let mut out = op.zero_state();
    let fi: Vec<f64> = op.u_nodes().iter().map(|&k| rhs.f(x[k])).collect();
    op.stiffness().mul(&fi, &mut out.u);
    let th_first = op.theta_nodes()[0];
    for e in 0..n {
        let (xl, xr) = (x[e], x[e + 1]);
        let h = xr - xl;
        let tol = 1e-14 * h.max(1e-300);
        let left = |s: f64| (xr - s) / h;
        let right = |s: f64| (s - xl) / h;
        let gl = quadrature::integrate(|s| rhs.g(s) * left(s), xl, xr, tol)?;
        let gr = quadrature::integrate(|s| rhs.g(s) * right(s), xl, xr, tol)?;
        let hl = quadrature::integrate(|s| rhs.h(s) * left(s), xl, xr, tol)?;
        let hr = quadrature::integrate(|s| rhs.h(s) * right(s), xl, xr, tol)?;
        if e >= 1 {
            out.v[e - 1] += gl;
        }
        if e + 1 < n {
            out.v[e] += gr;
        }
        if e >= th_first {
            out.theta[e - th_first] += hl;
        }
        if e + 1 < n {
            out.theta[e + 1 - th_first] += hr;
        }
    }
    Ok(out)
}

/// Least-squares slope of `-log r` against `log n`.
pub fn convergence_order(ns: &[usize], residuals: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| -r.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(alpha: f64) -> DegeneracyProfile {
        DegeneracyProfile::power_law(alpha).unwrap()
    }

    fn heat_only() -> RhsTriple {
        RhsTriple::from_fns(|_| 0.0, |_| 0.0, |_| 0.0, |_| 1.0)
    }

    fn smooth_rhs() -> RhsTriple {
        use std::f64::consts::PI;
        RhsTriple::from_fns(
            |x| (PI * x).sin() + 0.3 * (2.0 * PI * x).sin(),
            |x| PI * (PI * x).cos() + 0.6 * PI * (2.0 * PI * x).cos(),
            |x| (PI * x).cos() - 0.5,
            |x| 1.0 + x * x,
        )
    }

    #[test]
    fn kernel_examples() {
        assert!((kernel_k(&pl(1.0), 0.5, 0.25).unwrap() + 2.0_f64.ln()).abs() < 1e-14);
        assert!((kernel_k(&pl(0.5), 0.25, 0.5).unwrap() - (2.0_f64.sqrt() - 2.0) / 2.0).abs() < 1e-14);
        for s in [0.0, 0.3, 0.99] {
            assert_eq!(kernel_k(&pl(0.5), 1.0, s).unwrap(), 0.0);
        }
        assert_eq!(kernel_n(0.5, 0.25), 0.25);
        assert_eq!(kernel_n(0.25, 0.5), -0.5);
        let m = kernel_m(&pl(1.0), 0.1, 0.5, 0.25).unwrap();
        assert!((m - 0.1 * (-(2.0_f64.ln()) + 0.75)).abs() < 1e-14);
        assert_eq!(kernel_m(&pl(0.5), 0.0, 0.3, 0.6).unwrap(), 0.0);
        assert!(kernel_k(&pl(2.0), 0.5, 0.5).is_err());
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        for alpha in [0.5, 1.0] {
            let sol = inverse_apply(&pl(alpha), 0.1, &RhsTriple::zero(), DEFAULT_TOL).unwrap();
            assert_eq!(sol.c1(), 0.0);
            assert!(sol.c2().unwrap_or(0.0) == 0.0);
            for x in [0.0, 0.3, 1.0] {
                assert_eq!((sol.u(x), sol.v(x), sol.theta(x)), (0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn wdp_closed_form() {
        let sol = inverse_apply(&pl(0.5), 0.0, &heat_only(), DEFAULT_TOL).unwrap();
        assert!((sol.theta(0.25) + 0.25).abs() < 1e-9);
        assert!((sol.c2().unwrap() + 1.0 / 3.0).abs() < 1e-9);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let exact = 2.0 / 3.0 * (x.powf(1.5) - x.sqrt());
            assert!((sol.theta(x) - exact).abs() < 1e-9, "x={x}");
            assert_eq!(sol.v(x), 0.0);
            assert!(sol.u(x).abs() < 1e-12);
        }
    }

    #[test]
    fn sdp_closed_form() {
        let sol = inverse_apply(&pl(1.0), 0.0, &heat_only(), DEFAULT_TOL).unwrap();
        assert!(sol.c2().is_none());
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((sol.theta(x) - (x - 1.0)).abs() < 1e-9);
            assert!((sol.flux(x) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_conditions_and_kernel_routes() {
        let rhs = smooth_rhs();
        for alpha in [0.25, 0.5, 1.0, 1.5] {
            let sol = inverse_apply(&pl(alpha), 0.1, &rhs, DEFAULT_TOL).unwrap();
            assert!(sol.theta(1.0).abs() <= DEFAULT_TOL);
            assert!(sol.u(0.0).abs() <= DEFAULT_TOL && sol.u(1.0).abs() <= DEFAULT_TOL);
            if sol.class() == DegeneracyClass::Wdp {
                assert!(sol.theta(0.0).abs() <= DEFAULT_TOL);
            } else {
                assert!(sol.flux(0.0).abs() <= DEFAULT_TOL);
            }
            for i in 1..20 {
                let x = i as f64 / 20.0 - 0.013;
                let t = sol.theta_by_kernel(x).unwrap();
                assert!((t - sol.theta(x)).abs() <= 10.0 * DEFAULT_TOL, "alpha={alpha} x={x}");
                let d = sol.du_by_kernel(x).unwrap();
                assert!((d - sol.du(x)).abs() <= 10.0 * DEFAULT_TOL, "alpha={alpha} x={x}");
                assert!(sol.flux_bound_excess(x) <= 1e-6);
            }
        }
    }

    #[test]
    fn linearity() {
        let (r1, r2) = (smooth_rhs(), heat_only());
        let combo = RhsTriple::combine(2.0, &r1, -0.5, &r2);
        for alpha in [0.5, 1.5] {
            let p = pl(alpha);
            let s1 = inverse_apply(&p, 0.1, &r1, DEFAULT_TOL).unwrap();
            let s2 = inverse_apply(&p, 0.1, &r2, DEFAULT_TOL).unwrap();
            let sc = inverse_apply(&p, 0.1, &combo, DEFAULT_TOL).unwrap();
            for x in [0.1, 0.5, 0.9] {
                assert!((sc.u(x) - (2.0 * s1.u(x) - 0.5 * s2.u(x))).abs() < 1e-8);
                assert!((sc.theta(x) - (2.0 * s1.theta(x) - 0.5 * s2.theta(x))).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn tabulated_data_matches_callables() {
        let m = 2001;
        let xs: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let f: Vec<f64> = xs.iter().map(|&x| x * (1.0 - x)).collect();
        let g: Vec<f64> = xs.iter().map(|&x| x).collect();
        let h: Vec<f64> = vec![1.0; m];
        let table = RhsTriple::from_table(&xs, &f, &g, &h).unwrap();
        let exact = RhsTriple::from_fns(|x| x * (1.0 - x), |x| 1.0 - 2.0 * x, |x| x, |_| 1.0);
        let p = pl(0.5);
        let a = inverse_apply(&p, 0.1, &table, 1e-8).unwrap();
        let b = inverse_apply(&p, 0.1, &exact, 1e-8).unwrap();
        for x in [0.2, 0.6] {
            assert!((a.theta(x) - b.theta(x)).abs() < 1e-6);
            assert!((a.u(x) - b.u(x)).abs() < 1e-6);
        }
        assert!(RhsTriple::from_table(&[0.0, 1.0], &[0.0, 0.5], &[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn residual_decreases_with_refinement() {
        let rhs = smooth_rhs();
        for alpha in [0.25, 0.5, 1.0, 1.5] {
            let p = pl(alpha);
            let sol = inverse_apply(&p, 0.1, &rhs, DEFAULT_TOL).unwrap();
            let ns = [64, 128, 256, 512];
            let res: Vec<f64> = ns
                .iter()
                .map(|&n| residual_check(&p, 0.1, &rhs, &sol, &Mesh::graded(n, Mesh::default_gamma(alpha)).unwrap()).unwrap())
                .collect();
            let order = convergence_order(&ns, &res);
            eprintln!("alpha={alpha} res={res:?} order={order}");
            assert!(res.windows(2).all(|w| w[1] < w[0]));
            assert!(order >= 1.0, "alpha={alpha}: {res:?}");
        }
    }

    #[test]
    fn zero_rhs_has_zero_residual() {
        let p = pl(1.0);
        let sol = inverse_apply(&p, 0.1, &RhsTriple::zero(), DEFAULT_TOL).unwrap();
        let r = residual_check(&p, 0.1, &RhsTriple::zero(), &sol, &Mesh::graded(16, 2.0).unwrap()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn tabulated_profile_solution() {
        let samples: Vec<(f64, f64)> = [0.001_f64, 0.1, 0.4, 1.0].iter().map(|&x| (x, x.powf(0.5))).collect();
        let t = DegeneracyProfile::tabulated(samples).unwrap();
        let sol = inverse_apply(&t, 0.0, &heat_only(), DEFAULT_TOL).unwrap();
        assert!((sol.theta(0.25) + 0.25).abs() < 1e-7);
    }
}
