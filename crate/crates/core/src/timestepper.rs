//! Implicit time integration of `U' = A_h U` with energy bookkeeping.
//!
//! Both schemes are written in Gram form so that one banded LU per
//! `(operator, dt, scheme)` serves every step:
//! backward Euler `(G - dt K) U+ = G U`, implicit midpoint
//! `(G - dt/2 K) U+ = (G + dt/2 K) U`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::BandedLu;
use crate::operator::{DiscreteOperator, StateVector};

/// At most this many states are kept in a trajectory, plus the initial one.
pub const MAX_STORED_STATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    BackwardEuler,
    ImplicitMidpoint,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::BackwardEuler => "backward_euler",
            Scheme::ImplicitMidpoint => "implicit_midpoint",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backward_euler" => Ok(Scheme::BackwardEuler),
            "implicit_midpoint" | "midpoint" => Ok(Scheme::ImplicitMidpoint),
            _ => Err(Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        }
    }
}

/// Cached factorization for one `(operator, dt, scheme)`.
pub struct Stepper<'a> {
    op: &'a DiscreteOperator,
    dt: f64,
    scheme: Scheme,
    perm: Vec<usize>,
    lu: BandedLu<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a DiscreteOperator, dt: f64, scheme: Scheme) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let c = match scheme {
            Scheme::BackwardEuler => dt,
            Scheme::ImplicitMidpoint => 0.5 * dt,
        };
        let perm = op.interleaving();
        let entries: Vec<(usize, usize, f64)> = op
            .gram_triplets()
            .into_iter()
            .chain(op.k_triplets().into_iter().map(|(i, j, v)| (i, j, -c * v)))
            .map(|(i, j, v)| (perm[i], perm[j], v))
            .collect();
        let lu = BandedLu::factor(op.n_dof(), &entries)?;
        Ok(Self { op, dt, scheme, perm, lu })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn step(&self, state: &StateVector) -> Result<StateVector> {
        let mut rhs = self.op.gram_mul(state)?;
        if self.scheme == Scheme::ImplicitMidpoint {
            let k = self.op.apply_k(state)?;
            rhs = rhs.add_scaled(0.5 * self.dt, &k);
        }
        let flat = rhs.to_flat();
        let mut y = vec![0.0; flat.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = flat[i];
        }
        self.lu.solve_in_place(&mut y);
        let out: Vec<f64> = self.perm.iter().map(|&p| y[p]).collect();
        Ok(StateVector::from_flat(&out, self.op.n_u()))
    }

    /// Residual of the scheme's exact energy balance for the step
    /// `before -> after`, relative to the energy before the step.
    ///
    /// Midpoint: `E+ - E + dt theta_m^T S_a theta_m = 0`.
    /// Backward Euler: `E+ - E + dt theta+^T S_a theta+ + 1/2 ||U+ - U||_G^2 = 0`.
    pub fn balance_residual(&self, before: &StateVector, after: &StateVector) -> Result<f64> {
        let (e0, e1) = (self.op.energy(before)?, self.op.energy(after)?);
        let defect = match self.scheme {
            Scheme::ImplicitMidpoint => {
                let mid = before.scaled(0.5).add_scaled(0.5, after);
                e1 - e0 + self.dt * self.op.damping(&mid)?
            }
            Scheme::BackwardEuler => {
                let jump = after.add_scaled(-1.0, before);
                e1 - e0 + self.dt * self.op.damping(after)? + self.op.energy(&jump)?
            }
        };
        Ok(if e0 > 0.0 { defect.abs() / e0 } else { defect.abs() })
    }
}

/// Single step, factoring afresh; prefer [`Stepper`] in loops.
pub fn step(op: &DiscreteOperator, state: &StateVector, dt: f64, scheme: Scheme) -> Result<StateVector> {
    Stepper::new(op, dt, scheme)?.step(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `E(t_k)` for every step.
    pub energies: Vec<f64>,
    /// `theta^T S_a theta` at every `t_k`.
    pub dissipation: Vec<f64>,
    /// [`Stepper::balance_residual`] of every step.
    pub balance_residuals: Vec<f64>,
    /// Thinned `(t, U)` pairs: the initial state and every `stride`-th step.
    pub states: Vec<(f64, StateVector)>,
    pub stride: usize,
}

impl Trajectory {
    pub fn max_balance_residual(&self) -> f64 {
        self.balance_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the first step at which the energy increases, if any.
    pub fn first_energy_increase(&self) -> Option<usize> {
        self.energies.windows(2).position(|w| w[1] > w[0])
    }

    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.last().map(|(_, s)| s)
    }
}

/// Number of steps for `(t_final, dt)`; `t_final` must be a whole number of
/// steps up to rounding.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !t_final.is_finite() || t_final <= 0.0 || !dt.is_finite() || dt <= 0.0 || dt > t_final {
        return Err(Error::InvalidArgument(format!("need 0 < dt <= T, got dt = {dt}, T = {t_final}")));
    }
    let ratio = t_final / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio {
        return Err(Error::InvalidArgument(format!("T = {t_final} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

/// Integrates from `state0` to `t_final`, recording energies every step and
/// every `ceil(steps / MAX_STORED_STATES)`-th state.
pub fn simulate(op: &DiscreteOperator, state0: &StateVector, t_final: f64, dt: f64, scheme: Scheme) -> Result<Trajectory> {
    op.check_dims(state0)?;
    let steps = step_count(t_final, dt)?;
    let stepper = Stepper::new(op, dt, scheme)?;
    let stride = steps.div_ceil(MAX_STORED_STATES).max(1);
    let mut traj = Trajectory {
        scheme,
        dt,
        times: Vec::with_capacity(steps + 1),
        energies: Vec::with_capacity(steps + 1),
        dissipation: Vec::with_capacity(steps + 1),
        balance_residuals: Vec::with_capacity(steps),
        states: vec![(0.0, state0.clone())],
        stride,
    };
    traj.times.push(0.0);
    traj.energies.push(op.energy(state0)?);
    traj.dissipation.push(op.damping(state0)?);
    let mut state = state0.clone();
    for k in 1..=steps {
        let next = stepper.step(&state)?;
        if !next.is_finite() {
            return Err(Error::FactorizationFailure(format!("non-finite state at step {k}")));
        }
        let t = k as f64 * dt;
        traj.balance_residuals.push(stepper.balance_residual(&state, &next)?);
        traj.times.push(t);
        traj.energies.push(op.energy(&next)?);
        traj.dissipation.push(op.damping(&next)?);
        if k % stride == 0 || k == steps {
            traj.states.push((t, next.clone()));
        }
        state = next;
    }
    Ok(traj)
}

/// Decay rate `-slope` of the least-squares line through `log E` over the
/// final `tail_fraction` of the time span.
pub fn fit_decay_rate(traj: &Trajectory, tail_fraction: f64) -> Result<f64> {
    fit_decay_rate_of(&traj.times, &traj.energies, tail_fraction)
}

/// As [`fit_decay_rate`] on raw `(t, E)` samples.
pub fn fit_decay_rate_of(times: &[f64], energies: &[f64], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("tail_fraction must lie in (0, 1), got {tail_fraction}")));
    }
    if times.len() != energies.len() || times.is_empty() {
        return Err(Error::DegenerateWindow("times and energies must be nonempty and of equal length".into()));
    }
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let start = t1 - tail_fraction * (t1 - t0);
    let window: Vec<(f64, f64)> =
        times.iter().zip(energies).filter(|(t, _)| **t >= start).map(|(&t, &e)| (t, e)).collect();
    if window.len() < 10 {
        return Err(Error::DegenerateWindow(format!("{} samples in the tail window, need 10", window.len())));
    }
    if window.iter().any(|&(_, e)| !(e.is_finite() && e >= f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateWindow("tail energies must be positive and normal".into()));
    }
    let m = window.len() as f64;
    let mt = window.iter().map(|w| w.0).sum::<f64>() / m;
    let ml = window.iter().map(|w| w.1.ln()).sum::<f64>() / m;
    let sxy: f64 = window.iter().map(|&(t, e)| (t - mt) * (e.ln() - ml)).sum();
    let sxx: f64 = window.iter().map(|&(t, _)| (t - mt) * (t - mt)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateWindow("tail window spans no time".into()));
    }
    Ok(-sxy / sxx)
}
