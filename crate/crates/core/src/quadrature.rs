//! Adaptive Gauss-Kronrod quadrature with helpers for integrands that are
//! integrably singular at `x = 0`.

use crate::error::{Error, Result};

/// Default cap on the number of subintervals of one adaptive run.
pub const MAX_SUBDIVISIONS: usize = 4000;

// Kronrod 15-point abscissae (positive half, descending) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss 7-point weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]` to absolute
/// tolerance `tol`. The integrand is never evaluated at the endpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_capped(&f, a, b, tol, MAX_SUBDIVISIONS)
}

pub fn integrate_capped<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_subdivisions: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_capped(f, b, a, tol, max_subdivisions).map(|v| -v);
    }
    let mut segments = vec![gk15(f, a, b)];
    loop {
        let (value, error) = segments
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() {
            return Err(Error::DivergedQuadrature { a, b, tol, estimate: f64::INFINITY });
        }
        if error <= tol {
            return Ok(value);
        }
        if segments.len() >= max_subdivisions {
            return Err(Error::DivergedQuadrature { a, b, tol, estimate: error });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // interval exhausted at machine resolution
            return Err(Error::DivergedQuadrature { a, b, tol, estimate: error });
        }
        segments.push(gk15(f, s.a, mid));
        segments.push(gk15(f, mid, s.b));
    }
}

/// Integral of `f` over `(0, b]` for integrands with an integrable algebraic
/// singularity at 0.
///
/// Sums the dyadic pieces `[b 2^{-k-1}, b 2^{-k}]`, piece `k` to tolerance
/// `tol / (20 (k + 1)^2)`, and stops once the
/// geometric tail estimate drops below `tol / 10`.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, b: f64, tol: f64) -> Result<f64> {
    const MAX_LEVELS: usize = 1000;
    if b <= 0.0 {
        return Ok(0.0);
    }
    let piece_tol = tol / 20.0;
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let mut hi = b;
    for level in 0..MAX_LEVELS {
        let lo = 0.5 * hi;
        // summable, and slow enough to stay above round-off on pieces that
        // shrink like a small power of the panel length
        let level_tol = piece_tol / ((level + 1) * (level + 1)) as f64;
        let piece = integrate_capped(&f, lo, hi, level_tol, MAX_SUBDIVISIONS)?;
        total += piece;
        if let Some(p) = prev {
            let ratio = if p != 0.0 { (piece / p).abs() } else { 0.0 };
            if ratio < 1.0 {
                let tail = piece.abs() * ratio / (1.0 - ratio);
                if tail <= tol / 10.0 {
                    return Ok(total);
                }
            }
        }
        if piece == 0.0 && prev == Some(0.0) {
            return Ok(total);
        }
        prev = Some(piece);
        hi = lo;
        if hi < f64::MIN_POSITIVE {
            break;
        }
    }
    Err(Error::DivergedQuadrature { a: 0.0, b, tol, estimate: prev.unwrap_or(f64::NAN).abs() })
}

/// Integral over `[a, b]` with `0 < a < b` for integrands that are steep near
/// the origin: the interval is cut at `a, 2a, 4a, ...` so every piece has a
/// bounded ratio of endpoints.
pub fn integrate_graded<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a <= 0.0 {
        return integrate_from_zero(&f, b, tol);
    }
    if a >= b {
        return if a == b { Ok(0.0) } else { integrate_graded(f, b, a, tol).map(|v| -v) };
    }
    let pieces = ((b / a).log2().ceil() as usize).max(1);
    let piece_tol = tol / pieces as f64;
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (2.0 * lo).min(b);
        total += integrate_capped(&f, lo, hi, piece_tol, MAX_SUBDIVISIONS)?;
        lo = hi;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 3.0 * x * x + 2.0 * x + 1.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - 14.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let v = integrate(|x: f64| x.sin(), std::f64::consts::PI, 0.0, 1e-12).unwrap();
        assert!((v + 2.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_from_zero() {
        let v = integrate_from_zero(|x: f64| x.powf(-0.5), 1.0, 1e-11).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn strong_singularity_from_zero() {
        // x^{-3/4}: antiderivative 4 x^{1/4}
        let v = integrate_from_zero(|x: f64| x.powf(-0.75), 1.0, 1e-10).unwrap();
        assert!((v - 4.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn slowly_decaying_pieces_from_zero() {
        // x^{-0.9}: antiderivative 10 x^{0.1}, pieces shrink like 2^{-k/10}
        let v = integrate_from_zero(|x: f64| x.powf(-0.9), 1.0, 1e-9).unwrap();
        assert!((v - 10.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn log_singularity() {
        // int_0^1 x ln^2 x dx = 1/4
        let v = integrate_from_zero(|x: f64| x * x.ln().powi(2), 1.0, 1e-12).unwrap();
        assert!((v - 0.25).abs() < 1e-11);
    }

    #[test]
    fn graded_matches_log() {
        let v = integrate_graded(|s| 1.0 / s, 1e-9, 1.0, 1e-12).unwrap();
        assert!((v - 9.0 * std::f64::consts::LN_10).abs() < 1e-10);
    }

    #[test]
    fn nonintegrable_hits_cap() {
        let err = integrate_capped(&|x: f64| 1.0 / x, 0.0, 1.0, 1e-10, 50).unwrap_err();
        assert!(matches!(err, Error::DivergedQuadrature { .. }));
    }
}
