//! The weight functions `W`, `W~` and the norms built from them.
//!
//! WDP: `W(x) = int_0^x 1/a`, `W~(x) = int_0^x W`.
//! SDP: `W(x) = int_x^1 1/a`, `W~(x) = int_x^1 s/a(s) ds`.

use crate::error::{Error, Result};
use crate::panels::{dyadic_breaks, merge_breaks, PanelFunction};
use crate::quadrature::{self, integrate_from_zero};

use super::{DegeneracyClass, DegeneracyProfile, ProfileKind};

/// Absolute tolerance of the adaptive quadratures in this module.
pub const QUAD_TOL: f64 = 1e-10;
/// Relative agreement required between the two routes of [`w_l1_norm`].
pub const W_L1_AGREEMENT: f64 = 1e-8;

fn check_x(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("x = {x} outside [0, 1]")))
    }
}

/// `W(x)`; infinite at `x = 0` in the SDP case.
pub fn eval_w(profile: &DegeneracyProfile, x: f64) -> Result<f64> {
    profile.require_supported()?;
    check_x(x)?;
    let alpha = profile.alpha();
    match (profile.kind(), profile.class()) {
        (ProfileKind::PowerLaw, DegeneracyClass::Wdp) => Ok(x.powf(1.0 - alpha) / (1.0 - alpha)),
        (ProfileKind::PowerLaw, _) => Ok(sdp_power_w(alpha, x)),
        (ProfileKind::Tabulated, DegeneracyClass::Wdp) => Ok(profile.moment_over_a(0.0, 0.0, x)),
        (ProfileKind::Tabulated, _) => Ok(if x == 0.0 { f64::INFINITY } else { profile.moment_over_a(0.0, x, 1.0) }),
    }
}

fn sdp_power_w(alpha: f64, x: f64) -> f64 {
    if x == 0.0 {
        return f64::INFINITY;
    }
    if alpha == 1.0 {
        -x.ln()
    } else {
        // (x^{1-alpha} - 1)/(alpha - 1), accurate near x = 1
        ((1.0 - alpha) * x.ln()).exp_m1() / (alpha - 1.0)
    }
}

/// `W~(x)`; finite on `[0, 1]` for both classes.
pub fn eval_w_tilde(profile: &DegeneracyProfile, x: f64) -> Result<f64> {
    profile.require_supported()?;
    check_x(x)?;
    let alpha = profile.alpha();
    match (profile.kind(), profile.class()) {
        (ProfileKind::PowerLaw, DegeneracyClass::Wdp) => {
            Ok(x.powf(2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha)))
        }
        (ProfileKind::PowerLaw, _) => Ok((1.0 - x.powf(2.0 - alpha)) / (2.0 - alpha)),
        // int_0^x W = int_0^x (x - s)/a(s) ds
        (ProfileKind::Tabulated, DegeneracyClass::Wdp) => {
            Ok(x * profile.moment_over_a(0.0, 0.0, x) - profile.moment_over_a(1.0, 0.0, x))
        }
        (ProfileKind::Tabulated, _) => Ok(profile.moment_over_a(1.0, x, 1.0)),
    }
}

/// `int_0^1 W(x) dx`.
///
/// Evaluated by quadrature of `W`. In the SDP case the identity
/// `int_0^1 W = int_0^1 x/a(x) dx` is evaluated as well and the two values
/// must agree to [`W_L1_AGREEMENT`] relative, otherwise
/// [`Error::IdentityMismatch`] is returned.
pub fn w_l1_norm(profile: &DegeneracyProfile) -> Result<f64> {
    profile.require_supported()?;
    let by_definition = match profile.class() {
        DegeneracyClass::Wdp => quadrature::integrate(|x| eval_w(profile, x).unwrap_or(f64::NAN), 0.0, 1.0, QUAD_TOL)?,
        _ => integrate_from_zero(|x| eval_w(profile, x).unwrap_or(f64::NAN), 1.0, QUAD_TOL)?,
    };
    if profile.class() == DegeneracyClass::Sdp {
        let identity = match profile.kind() {
            ProfileKind::PowerLaw => 1.0 / (2.0 - profile.alpha()),
            ProfileKind::Tabulated => profile.moment_over_a(1.0, 0.0, 1.0),
        };
        if (by_definition - identity).abs() > W_L1_AGREEMENT * identity.abs().max(1.0) {
            return Err(Error::IdentityMismatch { what: "int W vs int x/a", first: by_definition, second: identity });
        }
    }
    Ok(by_definition)
}

/// Hilbert-Schmidt norm of the temperature kernel `K`.
///
/// SDP: `K(x, s) = -W(max(x, s))`, so `||K||^2 = 2 int_0^1 x W(x)^2 dx`.
/// WDP: `K(x, s) = W(min)(W(max) - W(1))/W(1)`, and the double integral
/// reduces to `(2/W(1)^2) int_0^1 (W(x) - W(1))^2 Q(x) dx` with
/// `Q(x) = int_0^x W^2`.
pub fn hs_norm_k(profile: &DegeneracyProfile) -> Result<f64> {
    profile.require_supported()?;
    let alpha = profile.alpha();
    let squared = match (profile.kind(), profile.class()) {
        (ProfileKind::PowerLaw, DegeneracyClass::Sdp) => {
            if alpha == 1.0 {
                0.5
            } else {
                2.0 * (1.0 / (4.0 - 2.0 * alpha) - 2.0 / (3.0 - alpha) + 0.5) / ((alpha - 1.0) * (alpha - 1.0))
            }
        }
        (ProfileKind::PowerLaw, _) => {
            let beta = 1.0 - alpha;
            let c = 1.0 / beta;
            let bracket = 1.0 / (4.0 * beta + 2.0) - 2.0 / (3.0 * beta + 2.0) + 1.0 / (2.0 * beta + 2.0);
            2.0 * c * c / (2.0 * beta + 1.0) * bracket
        }
        (ProfileKind::Tabulated, DegeneracyClass::Sdp) => {
            // split at the samples so no panel straddles a kink of a
            let f = |x: f64| x * eval_w(profile, x).unwrap_or(f64::NAN).powi(2);
            let knots: Vec<f64> = profile.samples().unwrap_or(&[]).iter().map(|s| s.0).collect();
            let mut total = integrate_from_zero(f, knots[0], QUAD_TOL)?;
            for k in knots.windows(2) {
                total += quadrature::integrate(f, k[0], k[1], QUAD_TOL)?;
            }
            2.0 * total
        }
        (ProfileKind::Tabulated, _) => {
            // W is continuous on [0, 1]; represent it once and integrate W^2 exactly
            let knots: Vec<f64> = profile.samples().unwrap_or(&[]).iter().map(|s| s.0).collect();
            let breaks = merge_breaks(&dyadic_breaks(40), &knots);
            let w = PanelFunction::fit(|x| eval_w(profile, x).unwrap_or(f64::NAN), &breaks, 1e-13, true)?;
            let w1 = eval_w(profile, 1.0)?;
            let q = PanelFunction::fit(|x| w.eval(x).powi(2), w.breaks(), 1e-13, true)?.antiderivative();
            let inner = quadrature::integrate(|x| (w.eval(x) - w1).powi(2) * q.eval(x), 0.0, 1.0, QUAD_TOL)?;
            2.0 * inner / (w1 * w1)
        }
    };
    if !squared.is_finite() || squared < 0.0 {
        return Err(Error::DivergedQuadrature { a: 0.0, b: 1.0, tol: QUAD_TOL, estimate: squared });
    }
    Ok(squared.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(alpha: f64) -> DegeneracyProfile {
        DegeneracyProfile::power_law(alpha).unwrap()
    }

    #[test]
    fn unsupported_classes_rejected() {
        for alpha in [0.0, 2.0, 3.0] {
            assert!(matches!(eval_w(&pl(alpha), 0.5), Err(Error::UnsupportedClass(_))));
            assert!(matches!(hs_norm_k(&pl(alpha)), Err(Error::UnsupportedClass(_))));
        }
    }

    #[test]
    fn w_examples() {
        assert!((eval_w(&pl(0.5), 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(eval_w(&pl(0.5), 0.0).unwrap(), 0.0);
        assert!((eval_w(&pl(1.0), (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-14);
        assert!((eval_w_tilde(&pl(0.5), 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!((eval_w_tilde(&pl(1.0), 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(eval_w_tilde(&pl(0.3), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn l1_norm_examples() {
        assert!((w_l1_norm(&pl(1.0)).unwrap() - 1.0).abs() < 1e-9);
        assert!((w_l1_norm(&pl(0.5)).unwrap() - 4.0 / 3.0).abs() < 1e-9);
        assert!((w_l1_norm(&pl(1.5)).unwrap() - 2.0).abs() < 1e-8);
        // int x^{-3/4} converges slowly at the origin; value 1 / (2 - alpha)
        assert!((w_l1_norm(&pl(1.75)).unwrap() - 4.0).abs() < 1e-8);
        assert!((w_l1_norm(&pl(1.95)).unwrap() - 20.0).abs() < 1e-7);
    }

    #[test]
    fn hs_norm_closed_forms_match_quadrature() {
        assert!((hs_norm_k(&pl(1.0)).unwrap() - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!((hs_norm_k(&pl(0.5)).unwrap() - (1.0_f64 / 21.0).sqrt()).abs() < 1e-12);
        // SDP, alpha = 1.5: W = 2(x^{-1/2} - 1), 2 int x W^2 = 8 (1 - 4/3 + 1/2)
        assert!((hs_norm_k(&pl(1.5)).unwrap() - (8.0_f64 / 6.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tabulated_routes_agree_with_power_law() {
        for alpha in [0.5, 1.0, 1.5] {
            let samples: Vec<(f64, f64)> = [0.001_f64, 0.2, 0.5, 1.0].iter().map(|&x| (x, x.powf(alpha))).collect();
            let t = DegeneracyProfile::tabulated(samples).unwrap();
            let p = pl(alpha);
            for &x in &[0.01, 0.3, 0.8, 1.0] {
                let (a, b) = (eval_w(&t, x).unwrap(), eval_w(&p, x).unwrap());
                assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "W alpha={alpha} x={x}: {a} vs {b}");
                let (a, b) = (eval_w_tilde(&t, x).unwrap(), eval_w_tilde(&p, x).unwrap());
                assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "W~ alpha={alpha} x={x}: {a} vs {b}");
            }
            let (a, b) = (w_l1_norm(&t).unwrap(), w_l1_norm(&p).unwrap());
            assert!((a - b).abs() < 1e-8 * b, "l1 alpha={alpha}");
        }
    }

    #[test]
    fn tabulated_hs_norm_matches_closed_form() {
        for alpha in [0.5, 1.0] {
            let samples: Vec<(f64, f64)> = [0.01_f64, 0.5, 1.0].iter().map(|&x| (x, x.powf(alpha))).collect();
            let t = DegeneracyProfile::tabulated(samples).unwrap();
            let (a, b) = (hs_norm_k(&t).unwrap(), hs_norm_k(&pl(alpha)).unwrap());
            assert!((a - b).abs() < 1e-7, "alpha={alpha}: {a} vs {b}");
        }
    }

    #[test]
    fn tabulated_hs_norm_with_kinks() {
        // a = x^{1.2} (1 + x) sampled on a uniform grid: SDP, kinked at every sample
        let samples: Vec<(f64, f64)> = (1..=64).map(|k| k as f64 / 64.0).map(|x| (x, x.powf(1.2) * (1.0 + x))).collect();
        let t = DegeneracyProfile::tabulated(samples.clone()).unwrap();
        let hs = hs_norm_k(&t).unwrap();
        // brute force: W by quadrature on each side of every knot
        let w = |x: f64| {
            let mut cuts = vec![x];
            cuts.extend(samples.iter().map(|s| s.0).filter(|&k| k > x));
            cuts.windows(2).map(|c| quadrature::integrate(|s| 1.0 / t.eval(s), c[0], c[1], 1e-12).unwrap()).sum::<f64>()
        };
        let mut sq = integrate_from_zero(|x| x * w(x).powi(2), samples[0].0, 1e-9).unwrap();
        for k in samples.windows(2) {
            sq += quadrature::integrate(|x| x * w(x).powi(2), k[0].0, k[1].0, 1e-10).unwrap();
        }
        let oracle = (2.0 * sq).sqrt();
        assert!((hs - oracle).abs() < 1e-7, "{hs} vs {oracle}");
    }
}
