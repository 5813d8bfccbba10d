use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::output::{num, Artifacts};
use super::{EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_OK, EXIT_UNSUPPORTED};
use crate::checks::{greens_suite, GreensSuiteSpec};
use crate::config::{InitialData, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{hs_norm_k, w_l1_norm, DegeneracyClass};
use crate::operator::{assemble, DiscreteOperator};
use crate::samples::smooth_initial_state;
use crate::spectral::{resolvent_sweep, spectrum, SampleStatus, DENSE_LIMIT};
use crate::timestepper::{fit_decay_rate, simulate};

/// Relative band around `2 |abscissa|` accepted for the fitted decay rate.
pub const DECAY_CROSS_CHECK: f64 = 0.25;

type Out<'w> = &'w mut dyn Write;

fn say(out: Out<'_>, line: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| Error::Io(e.to_string()))
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn operator(cfg: &RunConfig) -> Result<DiscreteOperator> {
    let profile = cfg.profile()?;
    assemble(&cfg.mesh(&profile)?, &profile, cfg.problem.kappa)
}

#[derive(Serialize)]
struct ClassifyResult {
    class: DegeneracyClass,
    near_zero_exponent: f64,
    inv_a_integrable: bool,
    inv_sqrt_a_integrable: bool,
    c1_unverified: bool,
    w_l1: Option<f64>,
    hs_norm_k: Option<f64>,
}

pub fn classify(cfg: &RunConfig, art: &mut Artifacts, out: Out<'_>) -> Result<i32> {
    let start = Instant::now();
    let profile = cfg.profile()?;
    let class = profile.class();
    let (w_l1, hs) = if class.is_supported() { (Some(w_l1_norm(&profile)?), Some(hs_norm_k(&profile)?)) } else { (None, None) };
    let integ = profile.integrability();
    say(out, format!("class={class}"))?;
    if let (Some(w), Some(h)) = (w_l1, hs) {
        say(out, format!("w_l1={w:.6}"))?;
        say(out, format!("hs={h:.6}"))?;
    }
    if profile.c1_unverified() {
        say(out, "warning: tabulated profile, C1 regularity near 0 not verified")?;
    }
    let result = ClassifyResult {
        class,
        near_zero_exponent: profile.near_zero_exponent(),
        inv_a_integrable: integ.inv_a,
        inv_sqrt_a_integrable: integ.inv_sqrt_a,
        c1_unverified: profile.c1_unverified(),
        w_l1,
        hs_norm_k: hs,
    };
    let (code, status) = if class.is_supported() { (EXIT_OK, "pass") } else { (EXIT_UNSUPPORTED, "unsupported") };
    art.summary("classify.json", "classify", status, &result, start.elapsed().as_secs_f64())?;
    Ok(code)
}

pub fn greens_check(cfg: &RunConfig, art: &mut Artifacts, out: Out<'_>) -> Result<i32> {
    let start = Instant::now();
    let profile = cfg.profile()?;
    profile.require_supported()?;
    let spec = GreensSuiteSpec {
        ladder: cfg.greens.ladder.clone(),
        gamma: cfg.gamma(&profile),
        tol: cfg.discretization.quad_tol,
        min_order: cfg.greens.min_order,
        random_rhs: cfg.greens.random_rhs,
        seed: cfg.random.seed,
        flux_points: cfg.greens.flux_points,
    };
    let cases = greens_suite(&profile, cfg.problem.kappa, &spec)?;
    for c in &cases {
        let res: Vec<String> = c.residuals.iter().map(|r| format!("{r:.3e}")).collect();
        say(
            out,
            format!(
                "case={} residuals=[{}] order={} monotone={} flux_bound={}",
                c.name,
                res.join(", "),
                if c.exact { "exact".to_string() } else { format!("{:.3}", c.order) },
                c.monotone,
                pass_fail(c.flux_pass)
            ),
        )?;
    }
    let ok = cases.iter().all(|c| c.pass());
    say(out, format!("order check (>= {}): {}", spec.min_order, pass_fail(cases.iter().all(|c| c.order_pass))))?;
    say(out, format!("flux bound check: {}", pass_fail(cases.iter().all(|c| c.flux_pass))))?;
    art.csv(
        "greens_check.csv",
        &["case", "n", "residual"],
        cases.iter().flat_map(|c| c.ladder.iter().zip(&c.residuals).map(|(n, r)| vec![c.name.clone(), n.to_string(), num(*r)])),
    )?;
    art.summary("greens_check.json", "greens-check", pass_fail(ok), &cases, start.elapsed().as_secs_f64())?;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn spectrum_cmd(cfg: &RunConfig, art: &mut Artifacts, out: Out<'_>) -> Result<i32> {
    let start = Instant::now();
    let op = operator(cfg)?;
    let d = spectrum(&op)?;
    let on_axis = d.imaginary_axis_eigenvalues();
    let checked = cfg.problem.kappa > 0.0;
    say(out, format!("n_dof={}", d.n_dof))?;
    say(out, format!("abscissa={:.6e}", d.abscissa))?;
    let verdict = if checked { pass_fail(on_axis.is_empty()) } else { "N/A (kappa = 0)" };
    say(out, format!("no imaginary-axis eigenvalues: {verdict}"))?;
    art.csv("spectrum.csv", &["re", "im"], d.eigenvalues.iter().map(|z| vec![num(z.re), num(z.im)]))?;
    let ok = !checked || on_axis.is_empty();
    let result = json!({
        "n_dof": d.n_dof,
        "abscissa": d.abscissa,
        "imaginary_axis_count": on_axis.len(),
        "conjugation_defect": d.conjugation_defect(),
        "leading": d.eigenvalues.iter().take(10).collect::<Vec<_>>(),
    });
    art.summary("spectrum.json", "spectrum", if checked { pass_fail(ok) } else { "n/a" }, &result, start.elapsed().as_secs_f64())?;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn sweep(cfg: &RunConfig, art: &mut Artifacts, out: Out<'_>) -> Result<i32> {
    let start = Instant::now();
    let op = operator(cfg)?;
    let s = &cfg.spectral;
    let r = resolvent_sweep(&op, s.lambda_min, s.lambda_max, s.count)?;
    say(out, format!("sup={} at lambda={}", num(r.sup), num(r.argmax)))?;
    say(out, format!("grid_sup={} at lambda={}", num(r.grid_sup), num(r.grid_argmax)))?;
    say(out, format!("boundary argmax: {}", if r.boundary { "yes (inconclusive tail)" } else { "no" }))?;
    say(out, format!("unbounded-growth flag: {}", if r.unbounded { "RAISED" } else { "clear" }))?;
    if r.failures > 0 {
        say(out, format!("failed samples: {}", r.failures))?;
    }
    art.csv(
        "sweep.csv",
        &["lambda", "norm", "status"],
        r.samples.iter().map(|x| {
            let norm = match x.status {
                SampleStatus::Ok => num(x.norm.unwrap_or(f64::NAN)),
                SampleStatus::SingularShift => "inf".into(),
                SampleStatus::Failed => "nan".into(),
            };
            vec![num(x.lambda), norm, x.status.as_str().to_string()]
        }),
    )?;
    let caveat = "a finite sweep cannot distinguish slow growth from boundedness; the supremum is certified only on the sampled range";
    let mut result = serde_json::to_value(&r).map_err(|e| Error::Io(e.to_string()))?;
    if let Value::Object(m) = &mut result {
        m.remove("samples");
        m.insert("caveat".into(), Value::from(caveat));
    }
    let hard_failures = r.samples.iter().filter(|x| x.status == SampleStatus::Failed).count();
    let status = if hard_failures > 0 { "failed" } else if r.unbounded { "unbounded" } else { "bounded" };
    art.summary("sweep.json", "sweep", status, &result, start.elapsed().as_secs_f64())?;
    Ok(if hard_failures > 0 { EXIT_NUMERICAL } else { EXIT_OK })
}

pub fn simulate_cmd(cfg: &RunConfig, art: &mut Artifacts, out: Out<'_>) -> Result<i32> {
    let start = Instant::now();
    let op = operator(cfg)?;
    let t = &cfg.time;
    let u0 = match t.initial {
        InitialData::Smooth => smooth_initial_state(&op, cfg.random.seed),
        InitialData::Zero => op.zero_state(),
    };
    let traj = simulate(&op, &u0, t.t_final, t.dt, t.scheme)?;
    art.csv(
        "trajectory.csv",
        &["t", "E", "dissipation"],
        traj.times.iter().zip(&traj.energies).zip(&traj.dissipation).map(|((t, e), d)| vec![num(*t), num(*e), num(*d)]),
    )?;
    let monotone = traj.first_energy_increase().is_none();
    say(out, format!("E(0)={} E(T)={}", num(traj.energies[0]), num(*traj.energies.last().unwrap_or(&f64::NAN))))?;
    say(out, format!("energy monotone: {}", pass_fail(monotone)))?;
    say(out, format!("max balance residual={}", num(traj.max_balance_residual())))?;

    let rate = fit_decay_rate(&traj, t.tail_fraction);
    let abscissa = if op.n_dof() <= DENSE_LIMIT { Some(spectrum(&op)?.abscissa) } else { None };
    let mut result = json!({
        "steps": traj.balance_residuals.len(),
        "initial_energy": traj.energies[0],
        "final_energy": traj.energies.last(),
        "energy_monotone": monotone,
        "max_balance_residual": traj.max_balance_residual(),
        "abscissa": abscissa,
    });
    let code = match &rate {
        Ok(rate) => {
            say(out, format!("rate={rate:.6e}"))?;
            result["rate"] = json!(rate);
            let cross = abscissa.filter(|a| *a < 0.0).map(|a| {
                let ratio = rate / (2.0 * a.abs());
                (ratio, (ratio - 1.0).abs() <= DECAY_CROSS_CHECK)
            });
            if let Some((ratio, ok)) = cross {
                say(out, format!("rate / (2|abscissa|)={ratio:.4}: {}", pass_fail(ok)))?;
                result["rate_over_twice_abscissa"] = json!(ratio);
                result["cross_check_pass"] = json!(ok);
            }
            if monotone && cross.map_or(true, |c| c.1) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            let kind = match e {
                Error::DegenerateWindow(_) => "DegenerateWindow",
                _ => "error",
            };
            say(out, format!("rate={kind} error: {e}"))?;
            result["rate"] = Value::Null;
            result["rate_error"] = json!(e.to_string());
            EXIT_NUMERICAL
        }
    };
    let status = if code == EXIT_OK { "pass" } else if code == EXIT_NUMERICAL { "failed" } else { "fail" };
    art.summary("simulate.json", "simulate", status, &result, start.elapsed().as_secs_f64())?;
    Ok(code)
}
