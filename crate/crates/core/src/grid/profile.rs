use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// How `a(x)` is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    PowerLaw,
    Tabulated,
}

/// Degeneracy class of a profile at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegeneracyClass {
    NonDegenerate,
    /// weakly degenerate: `1/a` integrable, Dirichlet condition on theta at 0
    #[serde(rename = "WDP")]
    Wdp,
    /// strongly degenerate: `1/a` not integrable but `1/sqrt(a)` is; natural
    /// condition `(a theta')(0) = 0`
    #[serde(rename = "SDP")]
    Sdp,
    Unsupported,
}

impl DegeneracyClass {
    pub fn is_supported(self) -> bool {
        matches!(self, Self::Wdp | Self::Sdp)
    }
}

impl fmt::Display for DegeneracyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NonDegenerate => "NonDegenerate",
            Self::Wdp => "WDP",
            Self::Sdp => "SDP",
            Self::Unsupported => "Unsupported",
        })
    }
}

/// Result of the integrability probes behind a classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integrability {
    pub inv_a: bool,
    pub inv_sqrt_a: bool,
}

/// Diffusion coefficient `a(x)` on `[0, 1]` together with its class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyProfile {
    kind: ProfileKind,
    alpha: f64,
    samples: Option<Vec<(f64, f64)>>,
    class: DegeneracyClass,
    integrability: Integrability,
    c1_unverified: bool,
}

/// Number of dyadic probe intervals `[2^{-k-1}, 2^{-k}]` used for tabulated
/// profiles.
pub const PROBE_LEVELS: usize = 40;
const PROBE_REL_INCREMENT: f64 = 1e-10;
const PROBE_EXPONENT_MARGIN: f64 = 1e-8;

impl DegeneracyProfile {
    /// `a(x) = x^alpha`.
    pub fn power_law(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidProfile(format!("exponent must be finite and >= 0, got {alpha}")));
        }
        let class = power_law_class(alpha);
        Ok(Self {
            kind: ProfileKind::PowerLaw,
            alpha,
            samples: None,
            class,
            integrability: Integrability { inv_a: alpha < 1.0, inv_sqrt_a: alpha < 2.0 },
            c1_unverified: false,
        })
    }

    /// Tabulated profile from samples `(x_i, a_i)` with `0 < x_0 < ... < x_m = 1`
    /// and `a_i > 0`.
    ///
    /// Between samples `a` is interpolated as a piecewise power law
    /// (linear in log-log coordinates); below `x_0` the first segment's
    /// exponent is extrapolated, which fixes the behaviour at the origin.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidProfile("a tabulated profile needs at least two samples".into()));
        }
        for &(x, a) in &samples {
            if !x.is_finite() || !a.is_finite() || x <= 0.0 || x > 1.0 {
                return Err(Error::InvalidProfile(format!("sample abscissa {x} outside (0, 1]")));
            }
            if a <= 0.0 {
                return Err(Error::NonPositiveCoefficient { x, value: a });
            }
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidProfile("sample abscissae must be strictly increasing".into()));
        }
        if samples.last().map(|s| s.0) != Some(1.0) {
            return Err(Error::InvalidProfile("the last sample must sit at x = 1".into()));
        }
        let p0 = segment_exponent(samples[0], samples[1]);
        if p0 < 0.0 {
            return Err(Error::InvalidProfile(format!(
                "profile grows towards x = 0 (local exponent {p0}); a must be continuous on [0, 1]"
            )));
        }
        let mut profile = Self {
            kind: ProfileKind::Tabulated,
            alpha: p0,
            samples: Some(samples),
            class: DegeneracyClass::Unsupported,
            integrability: Integrability { inv_a: false, inv_sqrt_a: false },
            c1_unverified: false,
        };
        let (class, integrability) = probe_class(&profile)?;
        profile.class = class;
        profile.integrability = integrability;
        profile.c1_unverified = class == DegeneracyClass::Sdp;
        Ok(profile)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Power-law exponent, or the extrapolated exponent at the origin for a
    /// tabulated profile.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn samples(&self) -> Option<&[(f64, f64)]> {
        self.samples.as_deref()
    }

    pub fn class(&self) -> DegeneracyClass {
        self.class
    }

    pub fn integrability(&self) -> Integrability {
        self.integrability
    }

    /// Set for tabulated SDP profiles, whose `C^1([0,1])` regularity cannot
    /// be checked from samples.
    pub fn c1_unverified(&self) -> bool {
        self.c1_unverified
    }

    /// Exponent `p` with `a(x) ~ x^p` as `x -> 0`.
    pub fn near_zero_exponent(&self) -> f64 {
        self.alpha
    }

    /// Evaluates `a(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.samples {
            None => {
                if self.alpha == 0.0 {
                    1.0
                } else {
                    x.powf(self.alpha)
                }
            }
            Some(s) => eval_tabulated(s, x),
        }
    }

    /// `int_lo^hi a(x) dx`, exact for power laws.
    pub fn integral(&self, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        match self.kind {
            ProfileKind::PowerLaw => Ok(power_integral(self.alpha, lo, hi)),
            ProfileKind::Tabulated => quadrature::integrate(|x| self.eval(x), lo, hi, tol),
        }
    }

    /// `int_lo^hi x^m / a(x) dx` for `0 <= lo <= hi <= 1`, exact on every
    /// power-law segment; infinite when the integrand is not integrable at 0.
    pub(crate) fn moment_over_a(&self, m: f64, lo: f64, hi: f64) -> f64 {
        let Some(s) = &self.samples else {
            return power_integral(m - self.alpha, lo, hi);
        };
        let mut total = 0.0;
        for i in 0..s.len() - 1 {
            let seg_lo = if i == 0 { 0.0 } else { s[i].0 };
            let (l, h) = (lo.max(seg_lo), hi.min(s[i + 1].0));
            if l >= h {
                continue;
            }
            // a = a_i (x / x_i)^p on the segment
            let p = segment_exponent(s[i], s[i + 1]);
            total += s[i].0.powf(p) / s[i].1 * power_integral(m - p, l, h);
        }
        total
    }

    /// Returns `true` when the class admits a generator (WDP or SDP).
    pub fn is_supported(&self) -> bool {
        self.class.is_supported()
    }

    pub(crate) fn require_supported(&self) -> Result<()> {
        if self.is_supported() {
            Ok(())
        } else {
            Err(Error::UnsupportedClass(self.class))
        }
    }
}

fn power_law_class(alpha: f64) -> DegeneracyClass {
    if alpha == 0.0 {
        DegeneracyClass::NonDegenerate
    } else if alpha < 1.0 {
        DegeneracyClass::Wdp
    } else if alpha < 2.0 {
        DegeneracyClass::Sdp
    } else {
        DegeneracyClass::Unsupported
    }
}

/// `int_lo^hi x^p dx` written to avoid cancellation on short intervals.
pub(crate) fn power_integral(p: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return if hi == lo { 0.0 } else { -power_integral(p, hi, lo) };
    }
    let q = p + 1.0;
    if lo <= 0.0 {
        return if q > 0.0 { hi.powf(q) / q } else { f64::INFINITY };
    }
    if q == 0.0 {
        return (hi / lo).ln();
    }
    // lo^q * ((hi/lo)^q - 1) / q
    lo.powf(q) * (q * (hi / lo).ln()).exp_m1() / q
}

fn segment_exponent(left: (f64, f64), right: (f64, f64)) -> f64 {
    (right.1 / left.1).ln() / (right.0 / left.0).ln()
}

fn eval_tabulated(s: &[(f64, f64)], x: f64) -> f64 {
    if x <= 0.0 {
        let p0 = segment_exponent(s[0], s[1]);
        return if p0 > 0.0 { 0.0 } else { s[0].1 };
    }
    let i = match s.binary_search_by(|p| p.0.total_cmp(&x)) {
        Ok(i) => return s[i].1,
        Err(0) => 0,
        Err(i) if i >= s.len() => s.len() - 2,
        Err(i) => i - 1,
    };
    let (left, right) = (s[i], s[i + 1]);
    let p = segment_exponent(left, right);
    left.1 * (x / left.0).powf(p)
}

/// Classifies a profile: the exact exponent rule for power laws, dyadic
/// integrability probes near the origin for tabulated input.
pub fn classify(profile: &DegeneracyProfile) -> Result<DegeneracyClass> {
    match profile.kind {
        ProfileKind::PowerLaw => Ok(power_law_class(profile.alpha)),
        ProfileKind::Tabulated => probe_class(profile).map(|(c, _)| c),
    }
}

fn probe_class(profile: &DegeneracyProfile) -> Result<(DegeneracyClass, Integrability)> {
    if let Some(s) = profile.samples() {
        for &(x, a) in s {
            if a <= 0.0 {
                return Err(Error::NonPositiveCoefficient { x, value: a });
            }
        }
    }
    let inv_a = probe_integrable(|x| 1.0 / profile.eval(x))?;
    let inv_sqrt_a = probe_integrable(|x| 1.0 / profile.eval(x).sqrt())?;
    let integrability = Integrability { inv_a, inv_sqrt_a };
    let class = if profile.eval(0.0) > 0.0 {
        DegeneracyClass::NonDegenerate
    } else if inv_a {
        DegeneracyClass::Wdp
    } else if inv_sqrt_a {
        DegeneracyClass::Sdp
    } else {
        DegeneracyClass::Unsupported
    };
    Ok((class, integrability))
}

/// Decides integrability of `f` on `(0, 1/2]` from the dyadic pieces
/// `I_k = int_{2^{-k-1}}^{2^{-k}} f`, `k = 1..PROBE_LEVELS`.
///
/// Integrable when the partial sums settle (relative increment below
/// `1e-10`) or when the pieces decay geometrically, i.e. the estimated local
/// exponent `p` in `f ~ x^{-p}` satisfies `p < 1`.
pub(crate) fn probe_integrable<F: Fn(f64) -> f64>(f: F) -> Result<bool> {
    let mut partial = 0.0;
    let mut pieces = Vec::with_capacity(PROBE_LEVELS);
    for k in 1..=PROBE_LEVELS {
        let hi = 0.5_f64.powi(k as i32);
        let scale = (f(0.75 * hi) * 0.5 * hi).abs();
        let piece = quadrature::integrate(&f, 0.5 * hi, hi, 1e-12 * scale)?;
        if piece < 0.0 {
            return Err(Error::NonPositiveCoefficient { x: hi, value: piece });
        }
        partial += piece;
        pieces.push(piece);
        if partial > 0.0 && piece / partial < PROBE_REL_INCREMENT {
            return Ok(true);
        }
    }
    let n = pieces.len();
    let ratio = pieces[n - 1] / pieces[n - 2];
    // I_k ~ 2^{-k(1 - p)}  =>  p = 1 + log2(ratio)
    let p = 1.0 + ratio.log2();
    Ok(p < 1.0 - PROBE_EXPONENT_MARGIN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_rule() {
        let c = |a| DegeneracyProfile::power_law(a).unwrap().class();
        assert_eq!(c(0.0), DegeneracyClass::NonDegenerate);
        assert_eq!(c(0.5), DegeneracyClass::Wdp);
        assert_eq!(c(0.999), DegeneracyClass::Wdp);
        assert_eq!(c(1.0), DegeneracyClass::Sdp);
        assert_eq!(c(1.99), DegeneracyClass::Sdp);
        assert_eq!(c(2.0), DegeneracyClass::Unsupported);
        assert_eq!(c(2.5), DegeneracyClass::Unsupported);
    }

    #[test]
    fn negative_exponent_rejected() {
        assert!(DegeneracyProfile::power_law(-0.1).is_err());
        assert!(DegeneracyProfile::power_law(f64::NAN).is_err());
    }

    #[test]
    fn class_implies_integrability_flags() {
        for alpha in [0.25, 0.5, 1.0, 1.5] {
            let p = DegeneracyProfile::power_law(alpha).unwrap();
            let i = p.integrability();
            match p.class() {
                DegeneracyClass::Wdp => assert!(i.inv_a),
                DegeneracyClass::Sdp => assert!(!i.inv_a && i.inv_sqrt_a),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn power_integral_matches_naive() {
        let v = power_integral(1.5, 0.2, 0.7);
        let naive = (0.7_f64.powf(2.5) - 0.2_f64.powf(2.5)) / 2.5;
        assert!((v - naive).abs() < 1e-15);
        assert_eq!(power_integral(0.5, 0.0, 1.0), 1.0 / 1.5);
    }

    fn sampled(alpha: f64) -> Vec<(f64, f64)> {
        [0.01_f64, 0.1, 0.3, 0.6, 1.0].iter().map(|&x| (x, x.powf(alpha))).collect()
    }

    #[test]
    fn tabulated_power_samples_classify_like_power_law() {
        for (alpha, expect) in [
            (0.5, DegeneracyClass::Wdp),
            (0.25, DegeneracyClass::Wdp),
            (1.0, DegeneracyClass::Sdp),
            (1.5, DegeneracyClass::Sdp),
            (2.5, DegeneracyClass::Unsupported),
        ] {
            let p = DegeneracyProfile::tabulated(sampled(alpha)).unwrap();
            assert_eq!(p.class(), expect, "alpha={alpha}");
            assert_eq!(classify(&p).unwrap(), expect);
            assert_eq!(p.c1_unverified(), expect == DegeneracyClass::Sdp);
        }
    }

    #[test]
    fn tabulated_interpolation_reproduces_power_law() {
        let p = DegeneracyProfile::tabulated(sampled(0.7)).unwrap();
        for &x in &[1e-5, 0.05, 0.2, 0.45, 0.9, 1.0] {
            assert!((p.eval(x) - x.powf(0.7)).abs() < 1e-14);
        }
        assert_eq!(p.eval(0.0), 0.0);
    }

    #[test]
    fn tabulated_constant_is_nondegenerate() {
        let p = DegeneracyProfile::tabulated(vec![(0.5, 2.0), (1.0, 2.0)]).unwrap();
        assert_eq!(p.class(), DegeneracyClass::NonDegenerate);
    }

    #[test]
    fn tabulated_rejects_nonpositive() {
        let err = DegeneracyProfile::tabulated(vec![(0.5, 0.0), (1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveCoefficient { .. }));
        assert!(DegeneracyProfile::tabulated(vec![(0.5, 1.0), (0.9, 1.0)]).is_err());
    }

    #[test]
    fn segment_moments_match_quadrature() {
        let samples: Vec<(f64, f64)> = [0.05_f64, 0.3, 0.7, 1.0].iter().map(|&x| (x, x.powf(1.3) * (1.0 + x))).collect();
        let p = DegeneracyProfile::tabulated(samples).unwrap();
        for (m, lo, hi) in [(0.0, 0.1, 1.0), (1.0, 0.0, 1.0), (1.0, 0.02, 0.5), (0.0, 0.3, 0.7)] {
            let exact = p.moment_over_a(m, lo, hi);
            let f = |x: f64| x.powf(m) / p.eval(x);
            let mut q = 0.0;
            let cuts = [lo, 0.05, 0.3, 0.7, hi];
            for w in cuts.windows(2) {
                let (l, h) = (w[0].max(lo), w[1].min(hi));
                if l < h {
                    q += if l == 0.0 { quadrature::integrate_from_zero(f, h, 1e-13).unwrap() } else { quadrature::integrate(f, l, h, 1e-13).unwrap() };
                }
            }
            assert!((exact - q).abs() < 1e-11 * q.abs().max(1.0), "m={m} [{lo}, {hi}]: {exact} vs {q}");
        }
        assert_eq!(p.moment_over_a(0.0, 0.0, 0.5), f64::INFINITY);
    }

    #[test]
    fn power_integral_edge_exponents() {
        assert!((power_integral(-1.0, 0.5, 2.0) - 4.0f64.ln()).abs() < 1e-15);
        assert_eq!(power_integral(-1.5, 0.0, 1.0), f64::INFINITY);
        assert!((power_integral(-0.5, 0.0, 4.0) - 4.0).abs() < 1e-15);
    }
}
