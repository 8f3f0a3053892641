//! Seeded identity sampling, the numeric oracle and the verification suites.

mod oracle;
mod suites;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalCache, EvalError, Point};
use crate::field::FieldError;
use crate::space::HamiltonSpace;
use crate::tensor::DTensor;

pub use oracle::{central_difference, oracle_christoffel, oracle_riemann, NumericMetric, ORACLE_INNER_STEP, ORACLE_OUTER_STEP};
pub use suites::build_checks;

/// Sampling and tolerance settings of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub count: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub fd_step: f64,
    pub max_resample: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            seed: 42,
            count: 100,
            tol_abs: 1e-8,
            tol_rel: 1e-6,
            fd_step: 1e-6,
            max_resample: 10,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.count == 0 {
            return Err(VerifyError::InvalidConfig("sample count must be at least 1".into()));
        }
        for (name, v) in [("tol_abs", self.tol_abs), ("tol_rel", self.tol_rel), ("fd_step", self.fd_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(VerifyError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("the sampling domain has an interval of zero width")]
    DegenerateDomain,
    #[error("no valid point found after {attempts} resamples: {last}")]
    ResampleExhausted { attempts: usize, last: EvalError },
    #[error("invalid sampling configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl VerifyError {
    pub fn code(&self) -> &'static str {
        match self {
            VerifyError::DegenerateDomain => "degenerate_domain",
            VerifyError::ResampleExhausted { .. } => "resample_exhausted",
            VerifyError::InvalidConfig(_) => "invalid_config",
            VerifyError::UnknownSuite(_) => "unknown_suite",
            VerifyError::Field(_) => "invalid_kappa",
        }
    }
}

/// Identity families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Metricity,
    Tables,
    Deflection,
    Maxwell,
    Einstein,
    Conservation,
    Oracle,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Metricity,
        Suite::Tables,
        Suite::Deflection,
        Suite::Maxwell,
        Suite::Einstein,
        Suite::Conservation,
        Suite::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Metricity => "metricity",
            Suite::Tables => "tables",
            Suite::Deflection => "deflection",
            Suite::Maxwell => "maxwell",
            Suite::Einstein => "einstein",
            Suite::Conservation => "conservation",
            Suite::Oracle => "oracle",
            Suite::All => "all",
        }
    }

    /// The concrete suites this selector runs.
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::EACH.to_vec(),
            s => vec![s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| VerifyError::UnknownSuite(s.to_string()))
    }
}

/// Whether a failing identity fails the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Required,
    ReportOnly,
}

/// How residuals are normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// `|L - R| / max(|L|, |R|)`, zero when both sides vanish.
    Relative,
    /// `|L - R| / max(1, |L|, |R|)`, the finite-difference criterion
    /// `|L - R| <= tol * max(1, |v|)`.
    Magnitude,
}

type NumericSides = dyn Fn(&Point, &mut EvalCache) -> Result<(Vec<f64>, Vec<f64>), EvalError> + Send + Sync;

enum Sides {
    Tensors(DTensor, DTensor),
    Numeric(Box<NumericSides>),
}

/// One identity to sample.
pub struct Check {
    pub name: String,
    pub construct: String,
    pub mode: Mode,
    pub scale: Scale,
    /// Fixed `(abs, rel)` tolerances replacing the run's.
    pub tolerance: Option<(f64, f64)>,
    sides: Sides,
}

impl Check {
    pub fn tensors(name: impl Into<String>, construct: impl Into<String>, lhs: DTensor, rhs: DTensor) -> Check {
        assert_eq!(lhs.extents(), rhs.extents(), "check sides disagree in shape");
        Check {
            name: name.into(),
            construct: construct.into(),
            mode: Mode::Required,
            scale: Scale::Relative,
            tolerance: None,
            sides: Sides::Tensors(lhs, rhs),
        }
    }

    /// A tensor that must vanish.
    pub fn zero(name: impl Into<String>, construct: impl Into<String>, t: DTensor) -> Check {
        let (m, n) = t.dims();
        let z = DTensor::zeros("0", &t.slots, m, n);
        Check::tensors(name, construct, t, z)
    }

    pub fn numeric<F>(name: impl Into<String>, construct: impl Into<String>, f: F) -> Check
    where
        F: Fn(&Point, &mut EvalCache) -> Result<(Vec<f64>, Vec<f64>), EvalError> + Send + Sync + 'static,
    {
        Check {
            name: name.into(),
            construct: construct.into(),
            mode: Mode::Required,
            scale: Scale::Magnitude,
            tolerance: None,
            sides: Sides::Numeric(Box::new(f)),
        }
    }

    pub fn report_only(mut self) -> Check {
        self.mode = Mode::ReportOnly;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Check {
        self.mode = mode;
        self
    }

    pub fn with_tolerance(mut self, abs: f64, rel: f64) -> Check {
        self.tolerance = Some((abs, rel));
        self
    }

    pub fn with_scale(mut self, scale: Scale) -> Check {
        self.scale = scale;
        self
    }

    fn evaluate(&self, pt: &Point, cache: &mut EvalCache) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
        match &self.sides {
            Sides::Tensors(l, r) => Ok((l.eval_cached(pt, cache)?.values, r.eval_cached(pt, cache)?.values)),
            Sides::Numeric(f) => f(pt, cache),
        }
    }

    fn residuals(&self, pt: &Point, cache: &mut EvalCache) -> Result<(f64, f64), EvalError> {
        let (l, r) = self.evaluate(pt, cache)?;
        let mut worst = (0.0f64, 0.0f64);
        for (a, b) in l.iter().zip(&r) {
            let abs = (a - b).abs();
            let denom = match self.scale {
                Scale::Relative => a.abs().max(b.abs()),
                Scale::Magnitude => a.abs().max(b.abs()).max(1.0),
            };
            let rel = if abs == 0.0 { 0.0 } else { abs / denom };
            worst.0 = worst.0.max(abs);
            worst.1 = worst.1.max(rel);
        }
        Ok(worst)
    }
}

/// Outcome of sampling one identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResult {
    pub identity: String,
    pub paper_ref: String,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    pub worst_point: Point,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_only: Option<bool>,
}

impl IdentityResult {
    /// True unless a pass-required identity failed.
    pub fn ok(&self) -> bool {
        self.pass != Some(false)
    }

    pub fn is_report_only(&self) -> bool {
        self.report_only == Some(true)
    }
}

fn check_domain(space: &HamiltonSpace) -> Result<(), VerifyError> {
    if space.domain.is_degenerate() {
        Err(VerifyError::DegenerateDomain)
    } else {
        Ok(())
    }
}

/// Evaluate the space data itself (metrics, Hamiltonian) at `pt`.
fn probe_space(space: &HamiltonSpace, pt: &Point) -> Result<(), EvalError> {
    let mut cache = EvalCache::new();
    let mats = [&space.h, &space.h_inv, &space.g, &space.g_inv, &space.u];
    for mat in mats {
        for e in mat.iter().flatten() {
            e.eval_cached(pt, &mut cache)?;
        }
    }
    space.hamiltonian().eval_cached(pt, &mut cache)?;
    Ok(())
}

/// Draw `count` points, replacing every point `valid` rejects by fresh
/// draws (at most `max_resample` per slot). Draws happen in slot order, so
/// the result depends only on the seed.
fn draw_points<V>(space: &HamiltonSpace, cfg: &SampleConfig, valid: V) -> Result<Vec<Point>, VerifyError>
where
    V: Fn(&Point) -> Result<(), EvalError> + Sync,
{
    cfg.validate()?;
    check_domain(space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points: Vec<Point> = (0..cfg.count).map(|_| space.domain.sample(&mut rng)).collect();
    let mut pending: Vec<usize> = (0..cfg.count).collect();
    let mut attempts = vec![0usize; cfg.count];
    loop {
        let failures: Vec<(usize, EvalError)> = pending
            .par_iter()
            .filter_map(|&k| valid(&points[k]).err().map(|e| (k, e)))
            .collect();
        if failures.is_empty() {
            return Ok(points);
        }
        pending.clear();
        for (k, err) in failures {
            attempts[k] += 1;
            if attempts[k] > cfg.max_resample {
                return Err(VerifyError::ResampleExhausted { attempts: cfg.max_resample, last: err });
            }
            points[k] = space.domain.sample(&mut rng);
            pending.push(k);
        }
    }
}

/// Seeded uniform sample of the space's domain box, avoiding points where
/// the space data cannot be evaluated.
pub fn sample_points(space: &HamiltonSpace, cfg: &SampleConfig) -> Result<Vec<Point>, VerifyError> {
    draw_points(space, cfg, |pt| probe_space(space, pt))
}

/// Sample every check at common points and summarize.
pub fn run_checks(space: &HamiltonSpace, checks: &[Check], cfg: &SampleConfig) -> Result<Vec<IdentityResult>, VerifyError> {
    let points = draw_points(space, cfg, |pt| {
        probe_space(space, pt)?;
        let mut cache = EvalCache::new();
        for c in checks {
            c.evaluate(pt, &mut cache)?;
        }
        Ok(())
    })?;
    let per_point: Vec<Vec<(f64, f64)>> = points
        .par_iter()
        .map(|pt| {
            let mut cache = EvalCache::new();
            checks
                .iter()
                .map(|c| c.residuals(pt, &mut cache).expect("point was validated"))
                .collect()
        })
        .collect();
    let results = checks
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (mut abs, mut rel, mut worst) = (0.0f64, 0.0f64, 0usize);
            for (p, row) in per_point.iter().enumerate() {
                let (a, r) = row[k];
                if a > abs {
                    abs = a;
                    worst = p;
                }
                rel = rel.max(r);
            }
            let (tol_abs, tol_rel) = c.tolerance.unwrap_or((cfg.tol_abs, cfg.tol_rel));
            let pass = abs <= tol_abs || rel <= tol_rel;
            let (pass, report_only) = match c.mode {
                Mode::Required => (Some(pass), None),
                Mode::ReportOnly => (None, Some(true)),
            };
            IdentityResult {
                identity: c.name.clone(),
                paper_ref: c.construct.clone(),
                max_abs_residual: abs,
                max_rel_residual: rel,
                worst_point: points[worst].clone(),
                pass,
                report_only,
            }
        })
        .collect();
    Ok(results)
}

/// Run one suite (or all of them) on a space.
pub fn run_suite(space: &HamiltonSpace, suite: Suite, cfg: &SampleConfig, kappa: f64) -> Result<Vec<IdentityResult>, VerifyError> {
    cfg.validate()?;
    check_domain(space)?;
    let checks = build_checks(space, suite, cfg, kappa)?;
    run_checks(space, &checks, cfg)
}
