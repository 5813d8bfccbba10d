//! Built-in right-hand sides and initial data.
//!
//! Random inputs are trigonometric sums with `MODES` terms whose
//! coefficients are drawn uniformly from `[-1, 1)` by [`Lcg`], in the order
//! `a_1..a_M`, `b_1..b_M`, `c_1..c_M`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::greens::RhsTriple;
use crate::grid::DegeneracyClass;
use crate::operator::{DiscreteOperator, StateVector};
use crate::rng::Lcg;

/// Number of terms in every random trigonometric sum.
pub const MODES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Coefficients {
    pub fn draw(seed: u64) -> Self {
        let mut g = Lcg::new(seed);
        let mut take = || (0..MODES).map(|_| g.uniform_in(-1.0, 1.0)).collect::<Vec<_>>();
        let a = take();
        let b = take();
        let c = take();
        Self { a, b, c }
    }
}

fn sum(coef: &[f64], x: f64, term: impl Fn(f64, f64) -> f64) -> f64 {
    coef.iter().enumerate().map(|(i, &c)| c * term((i + 1) as f64, x)).sum()
}

/// `h = 1`, `f = g = 0`: the data of the closed-form Green's solutions.
pub fn unit_heat_source() -> RhsTriple {
    RhsTriple::from_fns(|_| 0.0, |_| 0.0, |_| 0.0, |_| 1.0)
}

/// `f = sum a_k sin(k pi x)/k^2`, `g = sum b_k cos(k pi x)/k`,
/// `h = sum c_k cos(k pi x)/k`.
pub fn random_rhs(seed: u64) -> RhsTriple {
    let Coefficients { a, b, c } = Coefficients::draw(seed);
    let a2 = a.clone();
    RhsTriple::from_fns(
        move |x| sum(&a, x, |k, x| (k * PI * x).sin() / (k * k)),
        move |x| sum(&a2, x, |k, x| PI * (k * PI * x).cos() / k),
        move |x| sum(&b, x, |k, x| (k * PI * x).cos() / k),
        move |x| sum(&c, x, |k, x| (k * PI * x).cos() / k),
    )
}

/// Temperature modes compatible with the boundary conditions of each class.
fn theta_mode(class: DegeneracyClass, k: f64, x: f64) -> f64 {
    match class {
        DegeneracyClass::Sdp => ((k - 0.5) * PI * x).cos(),
        _ => (k * PI * x).sin(),
    }
}

/// Nodal values of `u0 = sum a_k sin(k pi x)/k^4`,
/// `v0 = sum b_k sin(k pi x)/k^3`, `theta0 = sum c_k phi_k(x)/k^3` with
/// `phi_k = sin(k pi x)` (WDP) or `cos((k - 1/2) pi x)` (SDP).
pub fn smooth_initial_state(op: &DiscreteOperator, seed: u64) -> StateVector {
    let Coefficients { a, b, c } = Coefficients::draw(seed);
    let class = op.class();
    op.interpolate(
        |x| sum(&a, x, |k, x| (k * PI * x).sin() / k.powi(4)),
        |x| sum(&b, x, |k, x| (k * PI * x).sin() / k.powi(3)),
        |x| sum(&c, x, |k, x| theta_mode(class, k, x) / k.powi(3)),
    )
}

/// Coefficient vector with every entry uniform in `[-1, 1)`, drawn in flat
/// `(u, v, theta)` order.
pub fn random_state(op: &DiscreteOperator, g: &mut Lcg) -> StateVector {
    let flat: Vec<f64> = (0..op.n_dof()).map(|_| g.uniform_in(-1.0, 1.0)).collect();
    StateVector::from_flat(&flat, op.n_u())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DegeneracyProfile, Mesh};
    use crate::operator::assemble;

    #[test]
    fn coefficients_follow_draw_order() {
        let c = Coefficients::draw(42);
        let mut g = Lcg::new(42);
        let flat: Vec<f64> = (0..3 * MODES).map(|_| g.uniform_in(-1.0, 1.0)).collect();
        assert_eq!(c.a, flat[..MODES]);
        assert_eq!(c.b, flat[MODES..2 * MODES]);
        assert_eq!(c.c, flat[2 * MODES..]);
    }

    #[test]
    fn random_rhs_derivative_is_consistent() {
        let r = random_rhs(5);
        for x in [0.1, 0.37, 0.9] {
            let d = (r.f(x + 1e-6) - r.f(x - 1e-6)) / 2e-6;
            assert!((d - r.df(x)).abs() < 1e-7);
        }
        assert!(r.f(0.0).abs() < 1e-15 && r.f(1.0).abs() < 1e-14);
    }

    #[test]
    fn initial_theta_respects_boundary_conditions() {
        for alpha in [0.5, 1.5] {
            let p = DegeneracyProfile::power_law(alpha).unwrap();
            let op = assemble(&Mesh::graded(16, 2.0).unwrap(), &p, 0.1).unwrap();
            let s = smooth_initial_state(&op, 42);
            assert!(s.is_finite());
            assert_eq!(s.theta.len(), op.n_theta());
            if p.class() == DegeneracyClass::Sdp {
                // node 0 is free and carries sum c_k / k^3
                let c = Coefficients::draw(42).c;
                let expect: f64 = c.iter().enumerate().map(|(i, c)| c / ((i + 1) as f64).powi(3)).sum();
                assert!((s.theta[0] - expect).abs() < 1e-15);
            }
        }
    }
}
