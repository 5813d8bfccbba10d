//! Galerkin discretization of the generator on continuous piecewise-linear
//! elements.
//!
//! Unknowns are nodal values: `u`, `v` on the interior nodes; `theta` on the
//! interior nodes (WDP) or on nodes `0..n-1` (SDP, node 0 free). With the
//! Gram matrix `G = blockdiag(S, M_u, M_th)` the scheme reads
//!
//! ```text
//! u' = v
//! M_u v'  = -S u - kappa C theta
//! M_th theta' = -S_a theta + kappa C^T v
//! ```
//!
//! where `C_pj = int phi_p psi_j'`. Writing `K = G A`, the coupling blocks of
//! `K` are skew and `Re <A U, U>_G = -theta^T S_a theta` holds exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{power_integral, DegeneracyClass, DegeneracyProfile, Mesh, ProfileKind};
use crate::linalg::{BandedLu, Bidiagonal, SymTridiag};
use crate::quadrature;

/// Nodal coefficients `(u, v, theta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateVector {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

impl StateVector {
    pub fn zeros(n_u: usize, n_theta: usize) -> Self {
        Self { u: vec![0.0; n_u], v: vec![0.0; n_u], theta: vec![0.0; n_theta] }
    }

    /// Splits a flat vector `[u, v, theta]`.
    pub fn from_flat(flat: &[f64], n_u: usize) -> Self {
        Self {
            u: flat[..n_u].to_vec(),
            v: flat[n_u..2 * n_u].to_vec(),
            theta: flat[2 * n_u..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.u);
        out.extend_from_slice(&self.v);
        out.extend_from_slice(&self.theta);
        out
    }

    pub fn len(&self) -> usize {
        self.u.len() + self.v.len() + self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).chain(&self.theta).all(|x| x.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = |x: &Vec<f64>| x.iter().map(|v| c * v).collect();
        Self { u: f(&self.u), v: f(&self.v), theta: f(&self.theta) }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        let f = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x + c * y).collect();
        Self { u: f(&self.u, &other.u), v: f(&self.v, &other.v), theta: f(&self.theta, &other.theta) }
    }
}

/// Assembled discrete generator with its Gram and damping forms.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    mesh: Mesh,
    profile: DegeneracyProfile,
    kappa: f64,
    class: DegeneracyClass,
    s: SymTridiag,
    m_u: SymTridiag,
    s_a: SymTridiag,
    m_th: SymTridiag,
    /// `(u row, theta column, value)`
    coupling: Vec<(usize, usize, f64)>,
    m_u_chol: Bidiagonal,
    m_th_chol: Bidiagonal,
    s_chol: Bidiagonal,
}

/// Quadrature tolerance for element integrals of tabulated profiles.
const ELEMENT_TOL: f64 = 1e-13;

/// Effective diffusivity `d_e` of one element, `S_a|_e = d_e/h [[1, -1], [-1, 1]]`.
///
/// SDP: the mean `(1/h) int_e a`. WDP: the harmonic mean `h / int_e (1/a)`,
/// which reproduces a constant flux exactly. The WDP temperature carries a
/// nonzero flux into the Dirichlet end, so it behaves like `W(x)` there and
/// the arithmetic mean would miss the flux by a fixed factor on every element
/// of the graded layer.
fn element_diffusivity(profile: &DegeneracyProfile, xl: f64, xr: f64) -> Result<f64> {
    let h = xr - xl;
    let tol = ELEMENT_TOL * h.max(1e-300);
    match (profile.class(), profile.kind()) {
        (DegeneracyClass::Wdp, ProfileKind::PowerLaw) => Ok(h / power_integral(-profile.alpha(), xl, xr)),
        (DegeneracyClass::Wdp, ProfileKind::Tabulated) => Ok(h / profile.moment_over_a(0.0, xl, xr)),
        (_, ProfileKind::PowerLaw) => Ok(power_integral(profile.alpha(), xl, xr) / h),
        (_, ProfileKind::Tabulated) => Ok(quadrature::integrate(|x| profile.eval(x), xl, xr, tol)? / h),
    }
}

/// Assembles the operator for `profile` on `mesh` with coupling `kappa`.
pub fn assemble(mesh: &Mesh, profile: &DegeneracyProfile, kappa: f64) -> Result<DiscreteOperator> {
    profile.require_supported()?;
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidArgument(format!("kappa must be finite and >= 0, got {kappa}")));
    }
    let class = profile.class();
    let n = mesh.n();
    let n_u = n - 1;
    let n_th = theta_dim(class, n);
    let u_dof = |k: usize| (1..n).contains(&k).then(|| k - 1);
    let th_dof = |k: usize| theta_dof(class, n, k);

    let mut s = SymTridiag::zeros(n_u);
    let mut m_u = SymTridiag::zeros(n_u);
    let mut s_a = SymTridiag::zeros(n_th);
    let mut m_th = SymTridiag::zeros(n_th);
    let mut coupling = Vec::with_capacity(2 * n_u);

    for e in 0..n {
        let (xl, xr) = mesh.element(e);
        let h = xr - xl;
        let wstiff = element_diffusivity(profile, xl, xr)? / h;
        let stiff = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
        let mass = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        let nodes = [e, e + 1];
        for a in 0..2 {
            for b in 0..2 {
                if let (Some(i), Some(j)) = (u_dof(nodes[a]), u_dof(nodes[b])) {
                    if i <= j {
                        s.add(i, j, stiff[a][b]);
                        m_u.add(i, j, mass[a][b]);
                    }
                }
                if let (Some(i), Some(j)) = (th_dof(nodes[a]), th_dof(nodes[b])) {
                    if i <= j {
                        s_a.add(i, j, wstiff * stiff[a][b] * h);
                        m_th.add(i, j, mass[a][b]);
                    }
                }
                // int_e phi_a psi_b' = (+-1/h) (h/2)
                if let (Some(i), Some(j)) = (u_dof(nodes[a]), th_dof(nodes[b])) {
                    let sign = if b == 0 { -1.0 } else { 1.0 };
                    coupling.push((i, j, 0.5 * sign));
                }
            }
        }
    }
    coupling = merge_entries(coupling);

    if s_a.diag.iter().chain(&s_a.off).any(|x| !x.is_finite()) {
        return Err(Error::DivergedQuadrature { a: 0.0, b: 1.0, tol: ELEMENT_TOL, estimate: f64::NAN });
    }
    let m_u_chol = m_u.cholesky()?;
    let m_th_chol = m_th.cholesky()?;
    let s_chol = s.cholesky()?;
    Ok(DiscreteOperator {
        mesh: mesh.clone(),
        profile: profile.clone(),
        kappa,
        class,
        s,
        m_u,
        s_a,
        m_th,
        coupling,
        m_u_chol,
        m_th_chol,
        s_chol,
    })
}

fn theta_dim(class: DegeneracyClass, n: usize) -> usize {
    if class == DegeneracyClass::Sdp {
        n
    } else {
        n - 1
    }
}

fn theta_dof(class: DegeneracyClass, n: usize, k: usize) -> Option<usize> {
    if class == DegeneracyClass::Sdp {
        (k < n).then_some(k)
    } else {
        (1..n).contains(&k).then(|| k - 1)
    }
}

/// Sums duplicate `(i, j)` entries and drops exact zeros.
fn merge_entries(mut e: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    e.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(e.len());
    for (i, j, v) in e {
        match out.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += v,
            _ => out.push((i, j, v)),
        }
    }
    out.retain(|x| x.2 != 0.0);
    out
}

fn tridiag_triplets(m: &SymTridiag, r0: usize, c0: usize, scale: f64, out: &mut Vec<(usize, usize, f64)>) {
    for i in 0..m.dim() {
        out.push((r0 + i, c0 + i, scale * m.diag[i]));
        if i + 1 < m.dim() {
            out.push((r0 + i, c0 + i + 1, scale * m.off[i]));
            out.push((r0 + i + 1, c0 + i, scale * m.off[i]));
        }
    }
}

impl DiscreteOperator {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn profile(&self) -> &DegeneracyProfile {
        &self.profile
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn class(&self) -> DegeneracyClass {
        self.class
    }

    /// Dirichlet stiffness `S`.
    pub fn stiffness(&self) -> &SymTridiag {
        &self.s
    }

    pub fn mass_u(&self) -> &SymTridiag {
        &self.m_u
    }

    /// Weighted stiffness `S_a` (damping form).
    pub fn weighted_stiffness(&self) -> &SymTridiag {
        &self.s_a
    }

    pub fn mass_theta(&self) -> &SymTridiag {
        &self.m_th
    }

    /// Coupling entries `(u row, theta column, C_ij)`.
    pub fn coupling(&self) -> &[(usize, usize, f64)] {
        &self.coupling
    }

    /// Cholesky factors of the Gram blocks `(S, M_u, M_th)`.
    pub fn gram_factors(&self) -> (&Bidiagonal, &Bidiagonal, &Bidiagonal) {
        (&self.s_chol, &self.m_u_chol, &self.m_th_chol)
    }

    pub fn n_u(&self) -> usize {
        self.s.dim()
    }

    pub fn n_theta(&self) -> usize {
        self.s_a.dim()
    }

    pub fn n_dof(&self) -> usize {
        2 * self.n_u() + self.n_theta()
    }

    /// Mesh node carrying each theta unknown.
    pub fn theta_nodes(&self) -> Vec<usize> {
        let off = if self.class == DegeneracyClass::Sdp { 0 } else { 1 };
        (0..self.n_theta()).map(|j| j + off).collect()
    }

    /// Mesh node carrying each u (and v) unknown.
    pub fn u_nodes(&self) -> Vec<usize> {
        (1..self.mesh.n()).collect()
    }

    pub fn zero_state(&self) -> StateVector {
        StateVector::zeros(self.n_u(), self.n_theta())
    }

    /// Nodal interpolant of the functions `(u, v, theta)`.
    pub fn interpolate(
        &self,
        u: impl Fn(f64) -> f64,
        v: impl Fn(f64) -> f64,
        theta: impl Fn(f64) -> f64,
    ) -> StateVector {
        let x = self.mesh.nodes();
        let un = self.u_nodes();
        StateVector {
            u: un.iter().map(|&k| u(x[k])).collect(),
            v: un.iter().map(|&k| v(x[k])).collect(),
            theta: self.theta_nodes().iter().map(|&k| theta(x[k])).collect(),
        }
    }

    pub fn check_dims(&self, s: &StateVector) -> Result<()> {
        let check = |what, expected, actual| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { what, expected, actual })
            }
        };
        check("u", self.n_u(), s.u.len())?;
        check("v", self.n_u(), s.v.len())?;
        check("theta", self.n_theta(), s.theta.len())
    }

    /// `y <- C theta`.
    pub fn coupling_mul(&self, theta: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, c) in &self.coupling {
            y[i] += c * theta[j];
        }
    }

    /// `y <- C^T v`.
    pub fn coupling_mul_transpose(&self, v: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|x| *x = 0.0);
        for &(i, j, c) in &self.coupling {
            y[j] += c * v[i];
        }
    }

    /// `K U = G A U` without the mass solves.
    pub fn apply_k(&self, state: &StateVector) -> Result<StateVector> {
        self.check_dims(state)?;
        let (n_u, n_th) = (self.n_u(), self.n_theta());
        let mut a = vec![0.0; n_u];
        self.s.mul(&state.v, &mut a);
        let mut b = vec![0.0; n_u];
        self.s.mul(&state.u, &mut b);
        let mut ct = vec![0.0; n_u];
        self.coupling_mul(&state.theta, &mut ct);
        for i in 0..n_u {
            b[i] = -b[i] - self.kappa * ct[i];
        }
        let mut c = vec![0.0; n_th];
        self.s_a.mul(&state.theta, &mut c);
        let mut ctv = vec![0.0; n_th];
        self.coupling_mul_transpose(&state.v, &mut ctv);
        for j in 0..n_th {
            c[j] = -c[j] + self.kappa * ctv[j];
        }
        Ok(StateVector { u: a, v: b, theta: c })
    }

    /// Solves `K U = b` by a banded LU in node-major ordering.
    pub fn solve_k(&self, b: &StateVector) -> Result<StateVector> {
        self.check_dims(b)?;
        let perm = self.interleaving();
        let entries: Vec<(usize, usize, f64)> =
            self.k_triplets().into_iter().map(|(i, j, v)| (perm[i], perm[j], v)).collect();
        let lu = BandedLu::factor(self.n_dof(), &entries)?;
        let flat = b.to_flat();
        let mut y = vec![0.0; flat.len()];
        for (i, &p) in perm.iter().enumerate() {
            y[p] = flat[i];
        }
        lu.solve_in_place(&mut y);
        let out: Vec<f64> = perm.iter().map(|&p| y[p]).collect();
        Ok(StateVector::from_flat(&out, self.n_u()))
    }

    /// `y <- G^{-1} y` blockwise.
    pub fn gram_solve(&self, y: &mut StateVector) {
        self.s_chol.solve_in_place(&mut y.u);
        self.s_chol.solve_transpose_in_place(&mut y.u);
        self.m_u_chol.solve_in_place(&mut y.v);
        self.m_u_chol.solve_transpose_in_place(&mut y.v);
        self.m_th_chol.solve_in_place(&mut y.theta);
        self.m_th_chol.solve_transpose_in_place(&mut y.theta);
    }

    /// `G U`.
    pub fn gram_mul(&self, state: &StateVector) -> Result<StateVector> {
        self.check_dims(state)?;
        let mut out = self.zero_state();
        self.s.mul(&state.u, &mut out.u);
        self.m_u.mul(&state.v, &mut out.v);
        self.m_th.mul(&state.theta, &mut out.theta);
        Ok(out)
    }

    /// `<U, V>_G`.
    pub fn inner(&self, a: &StateVector, b: &StateVector) -> Result<f64> {
        self.check_dims(a)?;
        self.check_dims(b)?;
        Ok(self.s.bilinear(&a.u, &b.u) + self.m_u.bilinear(&a.v, &b.v) + self.m_th.bilinear(&a.theta, &b.theta))
    }

    /// Generator action `A_h U`.
    pub fn apply_generator(&self, state: &StateVector) -> Result<StateVector> {
        self.check_dims(state)?;
        let mut out = self.apply_k(state)?;
        // first block of K U is S v; S^{-1} S v = v is returned exactly
        out.u.copy_from_slice(&state.v);
        self.m_u_chol.solve_in_place(&mut out.v);
        self.m_u_chol.solve_transpose_in_place(&mut out.v);
        self.m_th_chol.solve_in_place(&mut out.theta);
        self.m_th_chol.solve_transpose_in_place(&mut out.theta);
        Ok(out)
    }

    /// Adjoint action `A_h^* U = G^{-1} K^T U` with respect to `<.,.>_G`:
    /// `(-v, M_u^{-1}(S u + kappa C theta), M_th^{-1}(-S_a theta - kappa C^T v))`.
    pub fn adjoint_apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check_dims(state)?;
        let k = self.apply_k(state)?;
        let mut out = StateVector {
            u: state.v.iter().map(|x| -x).collect(),
            v: k.v.iter().map(|x| -x).collect(),
            theta: vec![0.0; self.n_theta()],
        };
        let mut sa = vec![0.0; self.n_theta()];
        self.s_a.mul(&state.theta, &mut sa);
        let mut ctv = vec![0.0; self.n_theta()];
        self.coupling_mul_transpose(&state.v, &mut ctv);
        for j in 0..self.n_theta() {
            out.theta[j] = -sa[j] - self.kappa * ctv[j];
        }
        self.m_u_chol.solve_in_place(&mut out.v);
        self.m_u_chol.solve_transpose_in_place(&mut out.v);
        self.m_th_chol.solve_in_place(&mut out.theta);
        self.m_th_chol.solve_transpose_in_place(&mut out.theta);
        Ok(out)
    }

    /// `E = 1/2 <U, U>_G`.
    pub fn energy(&self, state: &StateVector) -> Result<f64> {
        self.check_dims(state)?;
        Ok(0.5
            * (self.s.quadratic_form(&state.u)
                + self.m_u.quadratic_form(&state.v)
                + self.m_th.quadratic_form(&state.theta)))
    }

    /// Damping `theta^T S_a theta`.
    pub fn damping(&self, state: &StateVector) -> Result<f64> {
        self.check_dims(state)?;
        Ok(self.s_a.quadratic_form(&state.theta))
    }

    /// `Re <A_h U, U>_G + theta^T S_a theta`, zero up to rounding.
    pub fn dissipation_residual(&self, state: &StateVector) -> Result<f64> {
        let au = self.apply_generator(state)?;
        Ok(self.inner(&au, state)? + self.damping(state)?)
    }

    /// Entries of `K = G A` in block ordering `[u, v, theta]`:
    /// `[[0, S, 0], [-S, 0, -kappa C], [0, kappa C^T, -S_a]]`.
    pub fn k_triplets(&self) -> Vec<(usize, usize, f64)> {
        let (n_u, k) = (self.n_u(), self.kappa);
        let mut out = Vec::new();
        tridiag_triplets(&self.s, 0, n_u, 1.0, &mut out);
        tridiag_triplets(&self.s, n_u, 0, -1.0, &mut out);
        tridiag_triplets(&self.s_a, 2 * n_u, 2 * n_u, -1.0, &mut out);
        if k != 0.0 {
            for &(i, j, c) in &self.coupling {
                out.push((n_u + i, 2 * n_u + j, -k * c));
                out.push((2 * n_u + j, n_u + i, k * c));
            }
        }
        out
    }

    /// Entries of `G = blockdiag(S, M_u, M_th)` in block ordering.
    pub fn gram_triplets(&self) -> Vec<(usize, usize, f64)> {
        let n_u = self.n_u();
        let mut out = Vec::new();
        tridiag_triplets(&self.s, 0, 0, 1.0, &mut out);
        tridiag_triplets(&self.m_u, n_u, n_u, 1.0, &mut out);
        tridiag_triplets(&self.m_th, 2 * n_u, 2 * n_u, 1.0, &mut out);
        out
    }

    /// Permutation from block ordering to node-major ordering, in which `K`
    /// and `G` have half-bandwidth at most 5.
    pub fn interleaving(&self) -> Vec<usize> {
        let n = self.mesh.n();
        let n_u = self.n_u();
        let mut perm = vec![0; self.n_dof()];
        let mut next = 0;
        let th_off = if self.class == DegeneracyClass::Sdp { 0 } else { 1 };
        for k in 0..n {
            if (1..n).contains(&k) {
                perm[k - 1] = next;
                perm[n_u + k - 1] = next + 1;
                next += 2;
            }
            if k >= th_off && k - th_off < self.n_theta() {
                perm[2 * n_u + k - th_off] = next;
                next += 1;
            }
        }
        debug_assert_eq!(next, self.n_dof());
        perm
    }
}
