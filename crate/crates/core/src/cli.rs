//! Command-line front end.
//!
//! Every invocation, whether a subcommand or a line of a batch file, is
//! turned into a [`JobSpec`] and executed by [`execute`], so both paths emit
//! identical records.
//!
//! Exit codes: 0 success, 2 invalid input, 3 quadrature or iteration did not
//! converge (the last estimate is still printed with `"converged": false`),
//! 1 internal failure. In batch mode the worst record decides, in the order
//! 2, 1, 3.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cdf::{cdf, quantile, CdfEstimate, GammaSumParams, QuadratureConfig};
use crate::error::Error;
use crate::gfun::{g_closed, g_series};
use crate::mvgamma::{mv_cdf, MvGammaParams};
use crate::oracles::{mc_cdf, mc_mvgamma, mc_qform, series_cdf, McResult, SeriesResult};
use crate::qform::{qform_cdf, SymMatrix};
use crate::special::lower_gamma_p;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GammaSum,
    Qform,
    Mvgamma,
    Quantile,
    Selfcheck,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::GammaSum => "gamma-sum",
            CommandKind::Qform => "qform",
            CommandKind::Mvgamma => "mvgamma",
            CommandKind::Quantile => "quantile",
            CommandKind::Selfcheck => "selfcheck",
        }
    }
}

/// Partial quadrature settings; unset fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    /// Contour radius in (max|c_j|, 1); chosen automatically when omitted.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Absolute tolerance on successive refinements.
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_start: Option<usize>,
    #[arg(long, global = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl QuadratureOverrides {
    fn apply(&self, base: &QuadratureConfig) -> QuadratureConfig {
        QuadratureConfig {
            r: self.r.or(base.r),
            tol: self.tol.unwrap_or(base.tol),
            n_start: self.n_start.unwrap_or(base.n_start),
            n_max: self.n_max.unwrap_or(base.n_max),
        }
    }

    fn merged_over(&self, base: &QuadratureOverrides) -> QuadratureOverrides {
        QuadratureOverrides {
            r: self.r.or(base.r),
            tol: self.tol.or(base.tol),
            n_start: self.n_start.or(base.n_start),
            n_max: self.n_max.or(base.n_max),
        }
    }
}

/// One unit of work: a command, its payload, and output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: CommandKind,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub quadrature: Option<QuadratureOverrides>,
    #[serde(default)]
    pub output_format: Option<OutputFormat>,
}

/// A matrix given as rows or as one of the shorthands `I<k>` and `diag:a,b,…`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Rows(Vec<Vec<f64>>),
    Text(String),
}

impl MatrixInput {
    pub fn resolve(&self) -> Result<SymMatrix, Error> {
        match self {
            MatrixInput::Rows(rows) => SymMatrix::from_rows(rows.clone()),
            MatrixInput::Text(s) => parse_matrix(s),
        }
    }
}

pub fn parse_matrix(text: &str) -> Result<SymMatrix, Error> {
    let s = text.trim();
    if let Some(k) = s.strip_prefix('I') {
        let k: usize = k
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad identity shorthand {s:?}")))?;
        if k == 0 || k > crate::qform::MAX_DIM {
            return Err(Error::InvalidParams(format!(
                "identity dimension {k} out of range"
            )));
        }
        return Ok(SymMatrix::identity(k));
    }
    if let Some(list) = s.strip_prefix("diag:") {
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidParams(format!("bad diagonal {list:?}: {e}")))?;
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("bad diagonal {list:?}")));
        }
        return Ok(SymMatrix::diag(&values));
    }
    let rows: Vec<Vec<f64>> = serde_json::from_str(s).map_err(|e| {
        Error::InvalidParams(format!(
            "matrix {s:?} is neither JSON rows nor a shorthand: {e}"
        ))
    })?;
    SymMatrix::from_rows(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaSumPayload {
    alphas: Vec<f64>,
    lambdas: Vec<f64>,
    x: f64,
    #[serde(default)]
    series: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mc_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QformPayload {
    sigma: MatrixInput,
    c: MatrixInput,
    x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mc_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MvGammaPayload {
    alpha: f64,
    sigma: MatrixInput,
    xs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mc_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantilePayload {
    alphas: Vec<f64>,
    lambdas: Vec<f64>,
    p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    NonConvergence,
    Internal,
    Validation,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Validation => 2,
            Status::NonConvergence => 3,
            Status::Internal => 1,
        }
    }

    fn of(e: &Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::InvalidParams(_)
            | Error::Config(_)
            | Error::NotPositiveDefinite(_)
            | Error::Precision(_) => Status::Validation,
            Error::NonConvergence { .. } => Status::NonConvergence,
            Error::BranchTracking(_) | Error::Normalization(_) => Status::Internal,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorObject {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// One output record. Probabilities carry 15 significant digits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Record {
    pub command: String,
    pub input_echo: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile: Option<f64>,
    pub err_estimate: Option<f64>,
    pub converged: bool,
    pub r_used: Option<f64>,
    pub nodes_used: Option<usize>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckOutcome>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorObject>,
}

fn round15(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.14e}").parse().unwrap_or(v)
    } else {
        v
    }
}

impl Record {
    fn blank(command: &str, input_echo: Value) -> Self {
        Self {
            command: command.to_string(),
            input_echo,
            cdf: None,
            quantile: None,
            err_estimate: None,
            converged: false,
            r_used: None,
            nodes_used: None,
            warnings: Vec::new(),
            series: None,
            monte_carlo: None,
            checks: None,
            error: None,
        }
    }

    fn with_estimate(mut self, e: &CdfEstimate, converged: bool) -> Self {
        self.cdf = Some(round15(e.value));
        self.err_estimate = Some(round15(e.err_estimate));
        self.r_used = e.r_used.map(round15);
        self.nodes_used = Some(e.nodes_used);
        self.warnings = e.warnings.clone();
        self.converged = converged;
        self
    }

    fn failed(mut self, e: &Error) -> (Self, Status) {
        let status = Status::of(e);
        let kind = match status {
            Status::Validation => "validation",
            Status::NonConvergence => "non_convergence",
            _ => "internal",
        };
        self.error = Some(ErrorObject {
            kind: kind.into(),
            message: e.to_string(),
        });
        (self, status)
    }

    fn render(&self, format: OutputFormat, header: bool) -> String {
        match format {
            OutputFormat::Json => serde_json::to_string(self).expect("records serialize"),
            OutputFormat::Csv => {
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let value = self.cdf.or(self.quantile);
                let kind = if self.quantile.is_some() {
                    "quantile"
                } else {
                    "cdf"
                };
                let row = [
                    self.command.clone(),
                    kind.to_string(),
                    opt(value),
                    opt(self.err_estimate),
                    self.converged.to_string(),
                    opt(self.r_used),
                    self.nodes_used.map(|n| n.to_string()).unwrap_or_default(),
                    csv_field(&self.warnings.join("; ")),
                    csv_field(
                        &self
                            .error
                            .as_ref()
                            .map(|e| e.message.clone())
                            .unwrap_or_default(),
                    ),
                ]
                .join(",");
                if header {
                    format!("command,kind,value,err_estimate,converged,r_used,nodes_used,warnings,error\n{row}")
                } else {
                    row
                }
            }
            OutputFormat::Plain => {
                let mut s = self.command.clone();
                if let Some(v) = self.cdf {
                    let _ = write!(s, " cdf={v}");
                }
                if let Some(v) = self.quantile {
                    let _ = write!(s, " quantile={v}");
                }
                if let Some(v) = self.err_estimate {
                    let _ = write!(s, " err={v:e}");
                }
                let _ = write!(s, " converged={}", self.converged);
                if let Some(checks) = &self.checks {
                    let passed = checks.iter().filter(|c| c.passed).count();
                    let _ = write!(s, " checks={passed}/{}", checks.len());
                }
                if let Some(e) = &self.error {
                    let _ = write!(s, " error=\"{}\"", e.message);
                }
                for w in &self.warnings {
                    let _ = write!(s, " warning=\"{w}\"");
                }
                s
            }
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn decode<T: serde::de::DeserializeOwned>(params: &Value) -> Result<T, Error> {
    serde_json::from_value(params.clone())
        .map_err(|e| Error::InvalidParams(format!("bad params: {e}")))
}

/// The estimate itself, or the one carried by a quadrature non-convergence.
fn estimate_outcome(record: Record, result: Result<CdfEstimate, Error>) -> (Record, Status) {
    match result {
        Ok(e) => (record.with_estimate(&e, true), Status::Ok),
        Err(Error::NonConvergence {
            context,
            estimate: Some(e),
        }) => {
            let mut r = record.with_estimate(&e, false);
            r.error = Some(ErrorObject {
                kind: "non_convergence".into(),
                message: format!("no convergence in {context}"),
            });
            (r, Status::NonConvergence)
        }
        Err(e) => record.failed(&e),
    }
}

/// Runs one job against `base` quadrature settings.
pub fn execute(job: &JobSpec, base: &QuadratureConfig) -> (Record, Status) {
    let cfg = job
        .quadrature
        .as_ref()
        .map_or_else(|| base.clone(), |q| q.apply(base));
    let name = job.command.name();
    let fail = |e: Error| Record::blank(name, job.params.clone()).failed(&e);
    match job.command {
        CommandKind::GammaSum => {
            let payload: GammaSumPayload = match decode(&job.params) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let echo = serde_json::to_value(&payload).expect("payload serializes");
            let params = match GammaSumParams::new(payload.alphas.clone(), payload.lambdas.clone())
            {
                Ok(p) => p,
                Err(e) => return Record::blank(name, echo).failed(&e),
            };
            let (mut record, mut status) =
                estimate_outcome(Record::blank(name, echo), cdf(&params, payload.x, &cfg));
            if record.error.is_some() && status != Status::NonConvergence {
                return (record, status);
            }
            if payload.series {
                match series_cdf(&params, payload.x, cfg.tol) {
                    Ok(s) => record.series = Some(s),
                    Err(e) => record.warnings.push(format!("series oracle: {e}")),
                }
            }
            if let Some(n) = payload.mc_samples {
                match mc_cdf(&params, payload.x, n, payload.seed.unwrap_or(DEFAULT_SEED)) {
                    Ok(m) => record.monte_carlo = Some(m),
                    Err(e) => {
                        let (r, s) = record.failed(&e);
                        record = r;
                        status = status.max(s);
                    }
                }
            }
            (record, status)
        }
        CommandKind::Qform => {
            let payload: QformPayload = match decode(&job.params) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let matrices = payload
                .sigma
                .resolve()
                .and_then(|s| Ok((s, payload.c.resolve()?)));
            let (sigma, c) = match matrices {
                Ok(m) => m,
                Err(e) => return fail(e),
            };
            let echo = serde_json::json!({
                "sigma": sigma.rows(),
                "c": c.rows(),
                "x": payload.x,
                "mc_samples": payload.mc_samples,
                "seed": payload.seed,
            });
            let (mut record, mut status) = estimate_outcome(
                Record::blank(name, echo),
                qform_cdf(&sigma, &c, payload.x, &cfg),
            );
            if record.error.is_some() && status != Status::NonConvergence {
                return (record, status);
            }
            if let Some(n) = payload.mc_samples {
                match mc_qform(
                    &sigma,
                    &c,
                    payload.x,
                    n,
                    payload.seed.unwrap_or(DEFAULT_SEED),
                ) {
                    Ok(m) => record.monte_carlo = Some(m),
                    Err(e) => {
                        let (r, s) = record.failed(&e);
                        record = r;
                        status = status.max(s);
                    }
                }
            }
            (record, status)
        }
        CommandKind::Mvgamma => {
            let payload: MvGammaPayload = match decode(&job.params) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let params = match payload
                .sigma
                .resolve()
                .and_then(|s| MvGammaParams::new(payload.alpha, s))
            {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let echo = serde_json::json!({
                "alpha": payload.alpha,
                "sigma": params.sigma().rows(),
                "xs": payload.xs,
                "mc_samples": payload.mc_samples,
                "seed": payload.seed,
            });
            let (mut record, mut status) = estimate_outcome(
                Record::blank(name, echo),
                mv_cdf(&params, &payload.xs, &cfg),
            );
            if record.error.is_some() && status != Status::NonConvergence {
                return (record, status);
            }
            if let Some(n) = payload.mc_samples {
                let seed = payload.seed.unwrap_or(DEFAULT_SEED);
                match mc_mvgamma(params.sigma(), params.alpha(), &payload.xs, n, seed) {
                    Ok(m) => record.monte_carlo = Some(m),
                    Err(e) => {
                        let (r, s) = record.failed(&e);
                        record = r;
                        status = status.max(s);
                    }
                }
            }
            (record, status)
        }
        CommandKind::Quantile => {
            let payload: QuantilePayload = match decode(&job.params) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let echo = serde_json::to_value(&payload).expect("payload serializes");
            let record = Record::blank(name, echo);
            let params = match GammaSumParams::new(payload.alphas.clone(), payload.lambdas.clone())
            {
                Ok(p) => p,
                Err(e) => return record.failed(&e),
            };
            let x = match quantile(&params, payload.p, &cfg) {
                Ok(x) => x,
                Err(e) => return record.failed(&e),
            };
            match cdf(&params, x, &cfg) {
                Ok(e) => {
                    let mut r = record.with_estimate(&e, true);
                    r.cdf = None;
                    r.quantile = Some(round15(x));
                    (r, Status::Ok)
                }
                Err(e) => record.failed(&e),
            }
        }
        CommandKind::Selfcheck => {
            let checks = selfcheck(base);
            let all = checks.iter().all(|c| c.passed);
            let mut record = Record::blank(name, Value::Object(Default::default()));
            record.converged = all;
            record.checks = Some(checks);
            if all {
                (record, Status::Ok)
            } else {
                record.error = Some(ErrorObject {
                    kind: "internal".into(),
                    message: "one or more self-checks failed".into(),
                });
                (record, Status::Internal)
            }
        }
    }
}

fn check(name: &str, got: Result<f64, Error>, want: f64, tol: f64) -> CheckOutcome {
    match got {
        Ok(v) => CheckOutcome {
            name: name.into(),
            passed: (v - want).abs() <= tol,
            detail: format!("got {v:.15e}, expected {want:.15e}, tolerance {tol:e}"),
        },
        Err(e) => CheckOutcome {
            name: name.into(),
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Closed-form goldens and oracle cross-checks.
pub fn selfcheck(base: &QuadratureConfig) -> Vec<CheckOutcome> {
    let cfg = base.clone();
    let gs = |a: &[f64], l: &[f64]| GammaSumParams::new(a.to_vec(), l.to_vec());
    let mut out = Vec::new();

    let ln2 = std::f64::consts::LN_2;
    out.push(check(
        "exponential median",
        gs(&[1.0], &[1.0])
            .and_then(|p| cdf(&p, ln2, &cfg))
            .map(|e| e.value),
        0.5,
        1e-12,
    ));
    out.push(check(
        "equal scales",
        gs(&[0.5, 1.5], &[2.0, 2.0])
            .and_then(|p| cdf(&p, 3.0, &cfg))
            .map(|e| e.value),
        lower_gamma_p(2.0, 1.5),
        1e-10,
    ));
    let hypo = 1.0 - 2.0 * (-1.0f64).exp() + (-2.0f64).exp();
    out.push(check(
        "hypoexponential",
        gs(&[1.0, 1.0], &[1.0, 2.0])
            .and_then(|p| cdf(&p, 2.0, &cfg))
            .map(|e| e.value),
        hypo,
        1e-10,
    ));
    out.push(check(
        "chi-square 3",
        qform_cdf(&SymMatrix::identity(3), &SymMatrix::identity(3), 2.5, &cfg).map(|e| e.value),
        lower_gamma_p(1.5, 1.25),
        1e-10,
    ));
    let y = num_complex::Complex64::new(-0.3, 0.5);
    out.push(check(
        "G series vs closed form",
        g_series(1.7, 2.2, y, 1e-14)
            .and_then(|s| Ok((s.value - g_closed(1.7, 2.2, y, 1e-14)?).norm())),
        0.0,
        1e-9,
    ));
    let three = gs(&[0.7, 1.3, 2.0], &[0.5, 1.0, 4.0]);
    out.push(check(
        "three-summand reference",
        three
            .clone()
            .and_then(|p| cdf(&p, 6.0, &cfg))
            .map(|e| e.value),
        0.298_712_166_374_491_7,
        1e-9,
    ));
    out.push(check(
        "series oracle",
        three
            .clone()
            .and_then(|p| series_cdf(&p, 6.0, 1e-12))
            .map(|s| s.value),
        0.298_712_166_374_491_7,
        1e-9,
    ));
    let mc = three.and_then(|p| mc_cdf(&p, 6.0, 200_000, DEFAULT_SEED));
    out.push(match mc {
        Ok(m) => CheckOutcome {
            name: "Monte Carlo oracle".into(),
            passed: (m.estimate - 0.298_712_166_374_491_7).abs() <= 4.0 * m.std_error,
            detail: format!("estimate {} ± {}", m.estimate, m.std_error),
        },
        Err(e) => CheckOutcome {
            name: "Monte Carlo oracle".into(),
            passed: false,
            detail: e.to_string(),
        },
    });
    out.push(check(
        "multivariate independence",
        MvGammaParams::new(1.5, SymMatrix::identity(2).scaled(2.0))
            .and_then(|p| mv_cdf(&p, &[1.0, 3.0], &cfg))
            .map(|e| e.value),
        lower_gamma_p(1.5, 0.5) * lower_gamma_p(1.5, 1.5),
        1e-8,
    ));
    out
}

#[derive(Debug, Parser)]
#[command(
    name = "gammasum",
    version,
    about = "CDFs of gamma sums, Gaussian quadratic forms and multivariate gamma laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    quadrature: QuadratureOverrides,
    /// Seed for Monte Carlo oracles.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// P{Σ λ_j X_j ≤ x} for independent X_j ~ Gamma(α_j, 1).
    GammaSum {
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        alphas: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        lambdas: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        /// Also evaluate the series oracle.
        #[arg(long)]
        series: bool,
        /// Also run a Monte Carlo oracle with this many samples.
        #[arg(long)]
        mc_samples: Option<u64>,
    },
    /// P{XᵀCX ≤ x} for X ~ N(0, Σ).
    Qform {
        /// JSON rows, `I<k>` or `diag:a,b,…`.
        #[arg(long)]
        sigma: String,
        #[arg(long)]
        c: String,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long)]
        mc_samples: Option<u64>,
    },
    /// Joint CDF of the p-variate gamma law with Laplace transform |I + ΣT|^{−α}.
    Mvgamma {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        sigma: String,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        xs: Vec<f64>,
        #[arg(long)]
        mc_samples: Option<u64>,
    },
    /// Inverse CDF of a gamma sum.
    Quantile {
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        alphas: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        lambdas: Vec<f64>,
        #[arg(long)]
        p: f64,
    },
    /// Closed-form goldens and oracle cross-checks.
    Selfcheck,
    /// Line-delimited JSON jobs from a file, or stdin when omitted or `-`.
    Batch { input: Option<std::path::PathBuf> },
}

fn job_from(cmd: Cmd, seed: Option<u64>) -> Option<JobSpec> {
    let (command, params) = match cmd {
        Cmd::GammaSum {
            alphas,
            lambdas,
            x,
            series,
            mc_samples,
        } => (
            CommandKind::GammaSum,
            serde_json::to_value(GammaSumPayload {
                alphas,
                lambdas,
                x,
                series,
                mc_samples,
                seed,
            }),
        ),
        Cmd::Qform {
            sigma,
            c,
            x,
            mc_samples,
        } => (
            CommandKind::Qform,
            serde_json::to_value(QformPayload {
                sigma: MatrixInput::Text(sigma),
                c: MatrixInput::Text(c),
                x,
                mc_samples,
                seed,
            }),
        ),
        Cmd::Mvgamma {
            alpha,
            sigma,
            xs,
            mc_samples,
        } => (
            CommandKind::Mvgamma,
            serde_json::to_value(MvGammaPayload {
                alpha,
                sigma: MatrixInput::Text(sigma),
                xs,
                mc_samples,
                seed,
            }),
        ),
        Cmd::Quantile { alphas, lambdas, p } => (
            CommandKind::Quantile,
            serde_json::to_value(QuantilePayload { alphas, lambdas, p }),
        ),
        Cmd::Selfcheck => (
            CommandKind::Selfcheck,
            Ok(Value::Object(Default::default())),
        ),
        Cmd::Batch { .. } => return None,
    };
    Some(JobSpec {
        command,
        params: params.expect("payload serializes"),
        quadrature: None,
        output_format: None,
    })
}

/// Processes line-delimited jobs; blank lines are skipped.
pub fn batch(
    input: impl BufRead,
    out: &mut impl Write,
    defaults: &QuadratureOverrides,
    default_format: OutputFormat,
) -> std::io::Result<i32> {
    let lines: Vec<String> = input
        .lines()
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .collect();
    let base = QuadratureConfig::default();
    let results: Vec<(String, Status)> = lines
        .par_iter()
        .enumerate()
        .map(|(i, line)| match serde_json::from_str::<JobSpec>(line) {
            Ok(mut job) => {
                let q = job
                    .quadrature
                    .take()
                    .unwrap_or_default()
                    .merged_over(defaults);
                job.quadrature = Some(q);
                let format = job.output_format.unwrap_or(default_format);
                let (record, status) = execute(&job, &base);
                (record.render(format, false), status)
            }
            Err(e) => {
                let mut record = Record::blank("invalid", Value::String(line.clone()));
                record.error = Some(ErrorObject {
                    kind: "validation".into(),
                    message: format!("line {}: {e}", i + 1),
                });
                (record.render(default_format, false), Status::Validation)
            }
        })
        .collect();
    let mut worst = Status::Ok;
    for (line, status) in results {
        writeln!(out, "{line}")?;
        worst = worst.max(status);
    }
    Ok(worst.exit_code())
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let format = cli.format.unwrap_or_default();
    if let Cmd::Batch { input } = &cli.command {
        let result = match input.as_deref() {
            None => batch(std::io::stdin().lock(), out, &cli.quadrature, format),
            Some(p) if p.as_os_str() == "-" => {
                batch(std::io::stdin().lock(), out, &cli.quadrature, format)
            }
            Some(p) => match std::fs::File::open(p) {
                Ok(f) => batch(std::io::BufReader::new(f), out, &cli.quadrature, format),
                Err(e) => {
                    let _ = writeln!(err, "cannot open {}: {e}", p.display());
                    return 2;
                }
            },
        };
        return match result {
            Ok(code) => code,
            Err(e) => {
                let _ = writeln!(err, "i/o error: {e}");
                1
            }
        };
    }
    let job = job_from(cli.command, cli.seed).expect("batch handled above");
    let base = cli.quadrature.apply(&QuadratureConfig::default());
    let (record, status) = execute(&job, &base);
    if writeln!(out, "{}", record.render(format, true)).is_err() {
        return 1;
    }
    status.exit_code()
}
