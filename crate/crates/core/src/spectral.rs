//! Spectrum of the discrete generator and resolvent norms along the
//! imaginary axis in the energy norm.
//!
//! With the Gram factorization `G = L L^T`, the generator `A_h = G^{-1} K` is
//! similar to `B = L^{-1} K L^{-T}`, and `||(i lambda - A_h)^{-1}||_G` equals
//! `1 / sigma_min(i lambda - B)`. The dense routes form `B` explicitly. The
//! production resolvent route uses `Z = L^T (i lambda G - K)^{-1} L`, which is
//! unitarily the same operator, through a banded LU and Lanczos on `Z^* Z`.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{lanczos_max_eigenvalue, BandedLu};
use crate::operator::DiscreteOperator;

/// Largest problem handled by the dense eigen and singular value routes.
pub const DENSE_LIMIT: usize = 6000;
/// Eigenvalues with `|Re| <= IMAG_AXIS_TOL` and `|Im| >= IMAG_AXIS_TOL`
/// count as lying on the imaginary axis.
pub const IMAG_AXIS_TOL: f64 = 1e-8;
/// Shifts with `sigma_min` below this are reported as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// A refined sweep peak above this norm flags unbounded growth.
pub const UNBOUNDED_NORM: f64 = 1e10;

const LANCZOS_TOL: f64 = 1e-11;
const LANCZOS_MAX_ITER: usize = 500;
const REFINE_MAX_ITER: usize = 80;
const REFINE_REL_WIDTH: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenDecomposition {
    /// Sorted by descending real part, ties by ascending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub abscissa: f64,
    pub n_dof: usize,
}

impl EigenDecomposition {
    /// Eigenvalues on the imaginary axis in the sense of [`IMAG_AXIS_TOL`].
    pub fn imaginary_axis_eigenvalues(&self) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|z| z.re.abs() <= IMAG_AXIS_TOL && z.im.abs() >= IMAG_AXIS_TOL)
            .collect()
    }

    /// Distance from `z` to the spectrum.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.eigenvalues.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from an eigenvalue to the nearest conjugate of an
    /// eigenvalue; zero up to rounding for a real operator.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues.iter().map(|e| self.distance(e.conj())).fold(0.0, f64::max)
    }
}

fn check_dense(op: &DiscreteOperator) -> Result<()> {
    if op.n_dof() > DENSE_LIMIT {
        return Err(Error::TooLarge { n_dof: op.n_dof(), limit: DENSE_LIMIT });
    }
    Ok(())
}

/// Block offsets of the flat `(u, v, theta)` layout.
fn blocks(op: &DiscreteOperator) -> [(usize, usize); 3] {
    let (n_u, n_th) = (op.n_u(), op.n_theta());
    [(0, n_u), (n_u, 2 * n_u), (2 * n_u, 2 * n_u + n_th)]
}

macro_rules! blockwise {
    ($name:ident, $method:ident, $($bound:tt)+) => {
        fn $name<T>(op: &DiscreteOperator, x: &mut [T])
        where
            T: $($bound)+,
        {
            let (s, mu, mth) = op.gram_factors();
            let [b0, b1, b2] = blocks(op);
            s.$method(&mut x[b0.0..b0.1]);
            mu.$method(&mut x[b1.0..b1.1]);
            mth.$method(&mut x[b2.0..b2.1]);
        }
    };
}

blockwise!(solve_l, solve_in_place, Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Div<f64, Output = T>);
blockwise!(mul_l, mul_in_place, Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>);
blockwise!(mul_lt, mul_transpose_in_place, Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>);

/// Dense `B = L^{-1} K L^{-T}`.
pub fn symmetrized_generator(op: &DiscreteOperator) -> Result<Mat<f64>> {
    check_dense(op)?;
    let n = op.n_dof();
    let mut k = vec![0.0; n * n];
    for (i, j, v) in op.k_triplets() {
        k[j * n + i] += v;
    }
    // columns of L^{-1} K
    for col in k.chunks_mut(n) {
        solve_l(op, col);
    }
    // rows of (L^{-1} K) L^{-T} are L^{-1} applied to rows of L^{-1} K
    let mut row = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            row[j] = k[j * n + i];
        }
        solve_l(op, &mut row);
        for j in 0..n {
            k[j * n + i] = row[j];
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| k[j * n + i]))
}

/// Eigenvalues of `A_h` by a dense eigensolve of the similar matrix `B`.
pub fn spectrum(op: &DiscreteOperator) -> Result<EigenDecomposition> {
    let b = symmetrized_generator(op)?;
    let mut eigenvalues = b.eigenvalues().map_err(|e| Error::EigenSolverFailure(format!("{e:?}")))?;
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let abscissa = eigenvalues.first().map_or(f64::NEG_INFINITY, |z| z.re);
    Ok(EigenDecomposition { eigenvalues, abscissa, n_dof: op.n_dof() })
}

pub fn spectral_abscissa(op: &DiscreteOperator) -> Result<f64> {
    Ok(spectrum(op)?.abscissa)
}

/// `||(i lambda - A_h)^{-1}||_G` as `1 / sigma_min(i lambda - B)` by a dense
/// singular value decomposition.
pub fn resolvent_norm_dense(op: &DiscreteOperator, lambda: f64) -> Result<f64> {
    let b = symmetrized_generator(op)?;
    let n = op.n_dof();
    let shifted = Mat::<Complex64>::from_fn(n, n, |i, j| {
        let diag = if i == j { Complex64::new(0.0, lambda) } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(b[(i, j)], 0.0)
    });
    let sv = shifted.singular_values().map_err(|e| Error::EigenSolverFailure(format!("{e:?}")))?;
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    if sigma_min < SINGULAR_TOL {
        return Err(Error::SingularShift { lambda, sigma_min });
    }
    Ok(1.0 / sigma_min)
}

/// Banded LU of `i lambda G - K` in node-major ordering.
struct ShiftedSolver<'a> {
    op: &'a DiscreteOperator,
    perm: Vec<usize>,
    lu: BandedLu<Complex64>,
}

impl<'a> ShiftedSolver<'a> {
    fn new(op: &'a DiscreteOperator, lambda: f64) -> Result<Self> {
        let perm = op.interleaving();
        let shift = Complex64::new(0.0, lambda);
        let entries: Vec<(usize, usize, Complex64)> = op
            .gram_triplets()
            .into_iter()
            .map(|(i, j, v)| (perm[i], perm[j], shift * v))
            .chain(op.k_triplets().into_iter().map(|(i, j, v)| (perm[i], perm[j], Complex64::new(-v, 0.0))))
            .collect();
        let lu = match BandedLu::factor(op.n_dof(), &entries) {
            Ok(lu) => lu,
            Err(Error::FactorizationFailure(_)) => return Err(Error::SingularShift { lambda, sigma_min: 0.0 }),
            Err(e) => return Err(e),
        };
        Ok(Self { op, perm, lu })
    }

    /// `x <- L^T P^{-1} L x`, or with `P^{-*}` when `adjoint`.
    fn apply(&self, x: &mut [Complex64], scratch: &mut [Complex64], adjoint: bool) {
        mul_l(self.op, x);
        for (i, &p) in self.perm.iter().enumerate() {
            scratch[p] = x[i];
        }
        if adjoint {
            self.lu.solve_adjoint_in_place(scratch);
        } else {
            self.lu.solve_in_place(scratch);
        }
        for (i, &p) in self.perm.iter().enumerate() {
            x[i] = scratch[p];
        }
        mul_lt(self.op, x);
    }
}

/// `||(i lambda - A_h)^{-1}||_G`: banded LU of the shifted pencil and Lanczos
/// on `Z^* Z`.
pub fn resolvent_norm(op: &DiscreteOperator, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite, got {lambda}")));
    }
    let solver = ShiftedSolver::new(op, lambda)?;
    let n = op.n_dof();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let top = lanczos_max_eigenvalue(
        n,
        |x, y| {
            y.copy_from_slice(x);
            solver.apply(y, &mut scratch, false);
            solver.apply(y, &mut scratch, true);
            Ok(())
        },
        LANCZOS_TOL,
        LANCZOS_MAX_ITER,
    )?;
    let norm = top.eigenvalue.max(0.0).sqrt();
    if !norm.is_finite() || norm * SINGULAR_TOL > 1.0 {
        return Err(Error::SingularShift { lambda, sigma_min: 1.0 / norm });
    }
    Ok(norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    SingularShift,
    Failed,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::SingularShift => "singular_shift",
            SampleStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventSample {
    pub lambda: f64,
    /// `None` unless `status` is `Ok`.
    pub norm: Option<f64>,
    pub status: SampleStatus,
    pub message: Option<String>,
}

impl ResolventSample {
    fn evaluate(op: &DiscreteOperator, lambda: f64) -> Self {
        match resolvent_norm(op, lambda) {
            Ok(norm) => Self { lambda, norm: Some(norm), status: SampleStatus::Ok, message: None },
            Err(e @ Error::SingularShift { .. }) => {
                Self { lambda, norm: None, status: SampleStatus::SingularShift, message: Some(e.to_string()) }
            }
            Err(e) => Self { lambda, norm: None, status: SampleStatus::Failed, message: Some(e.to_string()) },
        }
    }

    /// Norm used when comparing samples: singular shifts count as infinite.
    fn height(&self) -> f64 {
        match self.status {
            SampleStatus::Ok => self.norm.unwrap_or(f64::NAN),
            SampleStatus::SingularShift => f64::INFINITY,
            SampleStatus::Failed => f64::NAN,
        }
    }
}

/// A grid local maximum and the maximum found inside its bracket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peak {
    pub grid_lambda: f64,
    pub grid_norm: f64,
    pub lambda: f64,
    /// Infinite when the refinement reached a singular shift.
    pub norm: f64,
    pub unbounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub samples: Vec<ResolventSample>,
    /// Largest sampled norm and where it occurs.
    pub grid_sup: f64,
    pub grid_argmax: f64,
    /// Largest norm over samples and refined peaks.
    pub sup: f64,
    pub argmax: f64,
    /// The supremum sits on an end of the sampled range.
    pub boundary: bool,
    /// Some peak exceeded [`UNBOUNDED_NORM`] or hit a singular shift.
    pub unbounded: bool,
    pub peaks: Vec<Peak>,
    pub failures: usize,
}

/// Maximizes the resolvent norm on `[lo, hi]` by golden-section search,
/// starting from the known value `(x0, f0)`.
fn refine_peak(op: &DiscreteOperator, lo: f64, hi: f64, x0: f64, f0: f64) -> Peak {
    let eval = |x: f64| match resolvent_norm(op, x) {
        Ok(v) => v,
        Err(Error::SingularShift { .. }) => f64::INFINITY,
        Err(_) => f64::NAN,
    };
    let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let (mut best_x, mut best_f) = (x0, f0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..REFINE_MAX_ITER {
        for (x, f) in [(c, fc), (d, fd)] {
            if f > best_f || (f == best_f && x < best_x) {
                best_x = x;
                best_f = f;
            }
        }
        if best_f > UNBOUNDED_NORM || (b - a) <= REFINE_REL_WIDTH * best_x.abs().max(1.0) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d);
        }
    }
    Peak { grid_lambda: x0, grid_norm: f0, lambda: best_x, norm: best_f, unbounded: best_f > UNBOUNDED_NORM }
}

/// Resolvent norms on `count` uniformly spaced `lambda` in
/// `[lambda_min, lambda_max]`, with every interior grid local maximum refined
/// inside its bracket. `count = 1` is allowed only for an empty range.
///
/// Samples are evaluated in parallel; the result does not depend on the
/// number of threads and ties are broken toward smaller `lambda`.
pub fn resolvent_sweep(op: &DiscreteOperator, lambda_min: f64, lambda_max: f64, count: usize) -> Result<SweepReport> {
    if !lambda_min.is_finite() || !lambda_max.is_finite() || lambda_min > lambda_max {
        return Err(Error::InvalidArgument(format!("invalid range [{lambda_min}, {lambda_max}]")));
    }
    if count == 0 || (count == 1 && lambda_min != lambda_max) || (count >= 2 && lambda_min == lambda_max) {
        return Err(Error::InvalidArgument(format!(
            "count = {count} does not fit the range [{lambda_min}, {lambda_max}]"
        )));
    }
    let grid: Vec<f64> = if count == 1 {
        vec![lambda_min]
    } else {
        let step = (lambda_max - lambda_min) / (count - 1) as f64;
        (0..count).map(|i| if i + 1 == count { lambda_max } else { lambda_min + step * i as f64 }).collect()
    };
    let samples: Vec<ResolventSample> = grid.par_iter().map(|&l| ResolventSample::evaluate(op, l)).collect();
    let heights: Vec<f64> = samples.iter().map(ResolventSample::height).collect();
    let failures = samples.iter().filter(|s| s.status != SampleStatus::Ok).count();

    let brackets: Vec<usize> = (1..count.saturating_sub(1))
        .filter(|&i| heights[i].is_finite() && heights[i] >= heights[i - 1] && heights[i] >= heights[i + 1])
        .collect();
    let mut peaks: Vec<Peak> = brackets
        .par_iter()
        .map(|&i| refine_peak(op, grid[i - 1], grid[i + 1], grid[i], heights[i]))
        .collect();
    for (i, s) in samples.iter().enumerate() {
        if s.status == SampleStatus::SingularShift {
            peaks.push(Peak { grid_lambda: grid[i], grid_norm: f64::INFINITY, lambda: grid[i], norm: f64::INFINITY, unbounded: true });
        }
    }
    peaks.sort_by(|a, b| a.grid_lambda.total_cmp(&b.grid_lambda));

    let mut grid_sup = f64::NEG_INFINITY;
    let mut grid_argmax = f64::NAN;
    for (&l, &h) in grid.iter().zip(&heights) {
        if h > grid_sup {
            grid_sup = h;
            grid_argmax = l;
        }
    }
    let (mut sup, mut argmax) = (grid_sup, grid_argmax);
    for p in &peaks {
        if p.norm > sup || (p.norm == sup && p.lambda < argmax) {
            sup = p.norm;
            argmax = p.lambda;
        }
    }
    let boundary = count >= 2 && (argmax == grid[0] || argmax == grid[count - 1]);
    let unbounded = peaks.iter().any(|p| p.unbounded);
    Ok(SweepReport {
        lambda_min,
        lambda_max,
        samples,
        grid_sup,
        grid_argmax,
        sup,
        argmax,
        boundary,
        unbounded,
        peaks,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DegeneracyProfile, Mesh};
    use crate::operator::{assemble, StateVector};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn op(n: usize, alpha: f64, kappa: f64) -> DiscreteOperator {
        let p = DegeneracyProfile::power_law(alpha).unwrap();
        assemble(&Mesh::graded(n, Mesh::default_gamma(alpha)).unwrap(), &p, kappa).unwrap()
    }

    fn pseudo_state(op: &DiscreteOperator, seed: u64) -> StateVector {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let flat: Vec<f64> = (0..op.n_dof())
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        StateVector::from_flat(&flat, op.n_u())
    }

    #[test]
    fn symmetrized_generator_is_similar() {
        // B L^T x = L^T A_h x
        let o = op(10, 0.5, 0.2);
        let b = symmetrized_generator(&o).unwrap();
        let x = pseudo_state(&o, 3);
        let mut lhs = x.to_flat();
        mul_lt(&o, &mut lhs);
        let blx: Vec<f64> = (0..o.n_dof()).map(|i| (0..o.n_dof()).map(|j| b[(i, j)] * lhs[j]).sum()).collect();
        let mut rhs = o.apply_generator(&x).unwrap().to_flat();
        mul_lt(&o, &mut rhs);
        for (a, c) in blx.iter().zip(&rhs) {
            assert!((a - c).abs() < 1e-10 * (1.0 + c.abs()), "{a} vs {c}");
        }
    }

    #[test]
    fn damped_spectrum_off_axis() {
        let d = spectrum(&op(256, 0.5, 0.1)).unwrap();
        assert!(d.abscissa < 0.0);
        assert!(d.imaginary_axis_eigenvalues().is_empty());
        assert!(d.conjugation_defect() < 1e-10);
        assert_eq!(d.eigenvalues.len(), d.n_dof);
    }

    #[test]
    fn undamped_wave_frequencies() {
        let o = op(256, 0.5, 0.0);
        let d = spectrum(&o).unwrap();
        assert!(d.abscissa.abs() <= 1e-6, "abscissa {}", d.abscissa);
        let mut freqs: Vec<f64> = d.eigenvalues.iter().filter(|z| z.re.abs() < 1e-8 && z.im > 0.0).map(|z| z.im).collect();
        freqs.sort_by(f64::total_cmp);
        let h = o.mesh().h_max();
        for k in 1..=5 {
            let exact = k as f64 * PI;
            assert!((freqs[k - 1] - exact).abs() < 10.0 * exact.powi(3) * h * h, "k={k}: {}", freqs[k - 1]);
        }
    }

    #[test]
    fn too_large_rejected() {
        let o = op(2100, 0.5, 0.1);
        assert!(matches!(spectrum(&o), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn banded_route_matches_dense() {
        for (alpha, kappa) in [(0.5, 0.1), (1.5, 0.1), (0.25, 0.0), (1.0, 0.3)] {
            let o = op(24, alpha, kappa);
            for lambda in [0.0, 1.3, -4.0, 25.0] {
                let (a, b) = (resolvent_norm(&o, lambda).unwrap(), resolvent_norm_dense(&o, lambda).unwrap());
                assert!((a - b).abs() < 1e-8 * b, "alpha={alpha} lambda={lambda}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn resolvent_at_zero_bounds_inverse_action() {
        let o = op(64, 0.5, 0.1);
        let norm = resolvent_norm(&o, 0.0).unwrap();
        for seed in 0..10 {
            let w = pseudo_state(&o, seed);
            // A_h^{-1} w = K^{-1} G w
            let aw = o.solve_k(&o.gram_mul(&w).unwrap()).unwrap();
            let ratio = o.inner(&aw, &aw).unwrap().sqrt() / o.inner(&w, &w).unwrap().sqrt();
            assert!(ratio <= norm * (1.0 + 1e-10), "{ratio} > {norm}");
        }
    }

    #[test]
    fn resolvent_bounded_below_by_spectral_distance() {
        let o = op(256, 0.5, 0.1);
        let d = spectrum(&o).unwrap();
        for lambda in [PI, 0.0, 7.5, -30.0] {
            let norm = resolvent_norm(&o, lambda).unwrap();
            let dist = d.distance(Complex64::new(0.0, lambda));
            assert!(norm >= (1.0 - 1e-9) / dist, "lambda={lambda}: {norm} < 1/{dist}");
        }
    }

    #[test]
    fn resolvent_is_even_in_lambda() {
        let o = op(64, 1.5, 0.1);
        for k in 1..=10 {
            let lambda = 1.7 * k as f64;
            let (a, b) = (resolvent_norm(&o, lambda).unwrap(), resolvent_norm(&o, -lambda).unwrap());
            assert!((a - b).abs() <= 1e-8 * a, "lambda={lambda}: {a} vs {b}");
        }
    }

    #[test]
    fn eigenvalue_shift_is_singular() {
        let o = op(16, 0.5, 0.0);
        let d = spectrum(&o).unwrap();
        let z = d.eigenvalues.iter().find(|z| z.re.abs() < 1e-12 && z.im > 1.0).unwrap();
        let err = resolvent_norm_dense(&o, z.im).unwrap_err();
        assert!(matches!(err, Error::SingularShift { .. }), "{err:?}");
    }

    #[test]
    fn single_point_sweep() {
        let o = op(32, 0.5, 0.1);
        let r = resolvent_sweep(&o, 2.0, 2.0, 1).unwrap();
        assert_eq!(r.samples.len(), 1);
        assert_eq!(r.samples[0].norm, Some(resolvent_norm(&o, 2.0).unwrap()));
        assert_eq!(r.sup, r.samples[0].norm.unwrap());
        assert!(resolvent_sweep(&o, 1.0, 2.0, 1).is_err());
        assert!(resolvent_sweep(&o, 1.0, 2.0, 0).is_err());
    }

    #[test]
    fn sweep_refines_and_flags() {
        let o = op(64, 0.5, 0.1);
        let r = resolvent_sweep(&o, -20.0, 20.0, 41).unwrap();
        assert_eq!(r.failures, 0);
        assert!(r.sup >= r.grid_sup);
        assert!(!r.unbounded && !r.boundary);
        for p in &r.peaks {
            assert!(p.norm >= p.grid_norm);
        }
        let undamped = resolvent_sweep(&op(64, 0.5, 0.0), -20.0, 20.0, 41).unwrap();
        assert!(undamped.unbounded);
    }

    #[test]
    fn sweep_is_deterministic() {
        let o = op(32, 1.5, 0.1);
        let a = resolvent_sweep(&o, -10.0, 10.0, 21).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| resolvent_sweep(&o, -10.0, 10.0, 21).unwrap());
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn abscissa_nonpositive(alpha in prop::sample::select(vec![0.25, 0.5, 1.0, 1.5]), kappa in 0.0f64..1.0, n in 4usize..40) {
            prop_assert!(spectral_abscissa(&op(n, alpha, kappa)).unwrap() <= 1e-10);
        }
    }
}
