//! Run configuration: flat `section.key = value` lines (a TOML subset),
//! validated as a whole before any work starts.
//!
//! ```text
//! problem.alpha = 0.5
//! problem.kappa = 0.1
//! discretization.n = 256
//! time.scheme = "implicit_midpoint"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DegeneracyProfile, Mesh, ProfileKind};
use crate::rng::DEFAULT_SEED;
use crate::timestepper::{step_count, Scheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Exponent of `a(x) = x^alpha`; ignored for tabulated profiles.
    pub alpha: f64,
    pub kappa: f64,
    pub profile_kind: ProfileKind,
    /// `[x, a(x)]` pairs of a tabulated profile.
    pub samples: Option<Vec<[f64; 2]>>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { alpha: 0.5, kappa: 0.1, profile_kind: ProfileKind::PowerLaw, samples: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub n: usize,
    /// Mesh grading; [`Mesh::default_gamma`] when absent.
    pub gamma: Option<f64>,
    /// Tolerance of the Green's solution quadratures.
    pub quad_tol: f64,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self { n: 256, gamma: None, quad_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { lambda_min: -200.0, lambda_max: 200.0, count: 801 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub tail_fraction: f64,
    /// `smooth` (seeded trigonometric data) or `zero`.
    pub initial: InitialData,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t_final: 50.0, dt: 0.01, scheme: Scheme::ImplicitMidpoint, tail_fraction: 0.5, initial: InitialData::Smooth }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    Smooth,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
    /// Include wall-clock timings in JSON summaries. Disable for
    /// byte-identical reruns.
    pub record_timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec![Format::Csv, Format::Json], record_timings: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensConfig {
    /// Refinement ladder of `residual_check`.
    pub ladder: Vec<usize>,
    /// Number of seeded random right-hand sides besides the closed-form one.
    pub random_rhs: usize,
    pub min_order: f64,
    /// Points per solution at which the flux bound is checked.
    pub flux_points: usize,
}

impl Default for GreensConfig {
    fn default() -> Self {
        Self { ladder: vec![64, 128, 256, 512], random_rhs: 3, min_order: 1.0, flux_points: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomConfig {
    pub seed: u64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub discretization: DiscretizationConfig,
    pub spectral: SpectralConfig,
    pub time: TimeConfig,
    pub output: OutputConfig,
    pub greens: GreensConfig,
    pub random: RandomConfig,
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("{path}: {msg}"))
}

fn require(ok: bool, path: &str, msg: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(path, msg))
    }
}

impl RunConfig {
    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks every range constraint of the downstream modules.
    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        match p.profile_kind {
            ProfileKind::PowerLaw => {
                require(p.alpha.is_finite() && p.alpha >= 0.0, "problem.alpha", "must be finite and >= 0")?;
                require(p.samples.is_none(), "problem.samples", "only allowed with profile_kind = \"tabulated\"")?;
            }
            ProfileKind::Tabulated => {
                require(p.samples.is_some(), "problem.samples", "required with profile_kind = \"tabulated\"")?;
                self.profile().map_err(|e| invalid("problem.samples", e))?;
            }
        }
        require(p.kappa.is_finite() && p.kappa >= 0.0, "problem.kappa", "must be finite and >= 0")?;

        let d = &self.discretization;
        require((2..=1_000_000).contains(&d.n), "discretization.n", "must lie in [2, 1000000]")?;
        if let Some(g) = d.gamma {
            require(g.is_finite() && (1.0..=10.0).contains(&g), "discretization.gamma", "must lie in [1, 10]")?;
        }
        require(d.quad_tol > 0.0 && d.quad_tol <= 1e-2, "discretization.quad_tol", "must lie in (0, 1e-2]")?;

        let s = &self.spectral;
        require(s.lambda_min.is_finite(), "spectral.lambda_min", "must be finite")?;
        require(s.lambda_max.is_finite() && s.lambda_max >= s.lambda_min, "spectral.lambda_max", "must be finite and >= lambda_min")?;
        require(s.count >= 1, "spectral.count", "must be >= 1")?;
        require(
            (s.count == 1) == (s.lambda_min == s.lambda_max),
            "spectral.count",
            "must be 1 exactly when lambda_min = lambda_max",
        )?;

        let t = &self.time;
        require(t.t_final.is_finite() && t.t_final > 0.0, "time.T", "must be finite and > 0")?;
        require(t.dt.is_finite() && t.dt > 0.0 && t.dt <= t.t_final, "time.dt", "must satisfy 0 < dt <= T")?;
        step_count(t.t_final, t.dt).map_err(|e| invalid("time.dt", e))?;
        require(t.tail_fraction > 0.0 && t.tail_fraction < 1.0, "time.tail_fraction", "must lie in (0, 1)")?;

        let o = &self.output;
        require(!o.directory.is_empty(), "output.directory", "must not be empty")?;
        require(!o.formats.is_empty(), "output.formats", "must name at least one of \"csv\", \"json\"")?;

        let g = &self.greens;
        require(g.ladder.len() >= 2, "greens.ladder", "needs at least two mesh sizes")?;
        require(
            g.ladder.iter().all(|&n| n >= 2) && g.ladder.windows(2).all(|w| w[1] > w[0]),
            "greens.ladder",
            "must be strictly increasing with entries >= 2",
        )?;
        require(g.random_rhs <= 100, "greens.random_rhs", "must be <= 100")?;
        require(g.min_order.is_finite() && g.min_order > 0.0, "greens.min_order", "must be finite and > 0")?;
        require(g.flux_points >= 1, "greens.flux_points", "must be >= 1")?;
        Ok(())
    }

    pub fn profile(&self) -> Result<DegeneracyProfile> {
        match self.problem.profile_kind {
            ProfileKind::PowerLaw => DegeneracyProfile::power_law(self.problem.alpha),
            ProfileKind::Tabulated => {
                let samples = self.problem.samples.as_deref().unwrap_or(&[]);
                DegeneracyProfile::tabulated(samples.iter().map(|s| (s[0], s[1])).collect())
            }
        }
    }

    pub fn gamma(&self, profile: &DegeneracyProfile) -> f64 {
        self.discretization.gamma.unwrap_or_else(|| Mesh::default_gamma(profile.alpha()))
    }

    pub fn mesh(&self, profile: &DegeneracyProfile) -> Result<Mesh> {
        Mesh::graded(self.discretization.n, self.gamma(profile))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}
