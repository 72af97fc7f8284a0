//! Command-line front end: argument parsing, dispatch, and artifact output.
//!
//! Exit status: 0 success, 2 invalid input, 3 non-convergence, 4 a theorem
//! check failed.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::build_grid;
use crate::record::{
    format_f64, to_json, ConfigRecord, ReportRecord, ResidualRecord, ResultRecord, StateRecord,
    Timings, SCHEMA,
};
use crate::reference_nls::{solve_nls_action, solve_soliton, solve_soliton_auto, SolitonResult};
use crate::solvers::{
    default_grading, default_r_max, solve_action_min, solve_ground_state, solve_ground_state_auto,
    SolveOptions, SolveResult,
};
use crate::state::{el_residual, functionals, DecomposedState, Params};
use crate::verify::{
    dmin_singular_family, lambda_window, pipeline_from_ground_state, reference_soliton,
    LambdaWindow, Pipeline,
};

#[derive(Debug, Parser)]
#[command(name = "pointnls", version, about = "Ground states of the 3D NLS with a point interaction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground state at fixed mass.
    SolveGs(RunArgs),
    /// Action minimizer at fixed frequency.
    SolveAction(RunArgs),
    /// Reference NLS soliton at fixed mass (or NLS action minimizer with --omega).
    Soliton(RunArgs),
    /// Ground state, action minimizer and references, then every theorem check.
    Verify(RunArgs),
    /// Ground states (or action minimizers) over comma-separated lists of p, alpha, mu (or omega).
    Sweep(RunArgs),
    /// Infimum of the action over the pure singular Nehari family.
    Dmin(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub grid_n: usize,
    /// Outer radius; by default `20/√ω` at the solution's own frequency.
    #[arg(long, allow_hyphen_values = true)]
    pub rmax: Option<f64>,
    /// Grading exponent; by default 2, or up to 3 for p close to 3.
    #[arg(long, allow_hyphen_values = true)]
    pub grading: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol_grad: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol_residual: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub multistart: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// λ samples for `dmin`.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock seconds (records are then no longer reproducible byte for byte).
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    SolveGs,
    SolveAction,
    Soliton,
    Verify,
    Sweep,
    Dmin,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::SolveGs => "solve-gs",
            CommandKind::SolveAction => "solve-action",
            CommandKind::Soliton => "soliton",
            CommandKind::Verify => "verify",
            CommandKind::Sweep => "sweep",
            CommandKind::Dmin => "dmin",
        }
    }
}

/// Mass or frequency, whichever the command is driven by.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Mu(Vec<f64>),
    Omega(Vec<f64>),
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub p: Vec<f64>,
    pub alpha: Vec<f64>,
    pub target: Target,
    pub grid_n: usize,
    pub rmax: Option<f64>,
    pub grading: Option<f64>,
    pub opts: SolveOptions,
    pub samples: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub wall_time: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Invalid = 2,
    NotConverged = 3,
    CheckFailed = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn worst(self, other: ExitStatus) -> ExitStatus {
        if other.code() > self.code() {
            other
        } else {
            self
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub status: ExitStatus,
    pub artifact: String,
    /// Human-readable notes for stderr.
    pub messages: Vec<String>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn single(name: &str, values: &[f64]) -> Result<f64> {
    match values {
        [v] => Ok(*v),
        [] => Err(invalid(format!("--{name} is required"))),
        _ => Err(invalid(format!("--{name} takes a single value for this command"))),
    }
}

impl RunConfig {
    pub fn from_args(command: CommandKind, args: &RunArgs) -> Result<Self> {
        let target = match (args.mu.is_empty(), args.omega.is_empty()) {
            (false, true) => Target::Mu(args.mu.clone()),
            (true, false) => Target::Omega(args.omega.clone()),
            (false, false) => return Err(invalid("give exactly one of --mu and --omega")),
            (true, true) => {
                return Err(invalid(match command {
                    CommandKind::SolveGs | CommandKind::Verify => "--mu is required",
                    CommandKind::SolveAction | CommandKind::Dmin => "--omega is required",
                    _ => "give exactly one of --mu and --omega",
                }))
            }
        };
        let defaults = SolveOptions::default();
        let config = RunConfig {
            command,
            p: args.p.clone(),
            alpha: args.alpha.clone(),
            target,
            grid_n: args.grid_n,
            rmax: args.rmax,
            grading: args.grading,
            opts: SolveOptions {
                max_iter: args.max_iter.unwrap_or(defaults.max_iter),
                step0: defaults.step0,
                tol_grad: args.tol_grad.unwrap_or(defaults.tol_grad),
                tol_residual: args.tol_residual.unwrap_or(defaults.tol_residual),
                n_multistart: args.multistart.unwrap_or(defaults.n_multistart),
                seed: args.seed,
            },
            samples: args.samples,
            format: args.format,
            out: args.out.clone(),
            wall_time: args.wall_time,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.command, &self.target) {
            (CommandKind::SolveGs | CommandKind::Verify, Target::Omega(_)) => {
                return Err(invalid(format!("{} takes --mu, not --omega", self.command.name())))
            }
            (CommandKind::SolveAction | CommandKind::Dmin, Target::Mu(_)) => {
                return Err(invalid(format!("{} takes --omega, not --mu", self.command.name())))
            }
            _ => {}
        }
        if self.command != CommandKind::Sweep {
            single("p", &self.p)?;
            single("alpha", &self.alpha)?;
            match &self.target {
                Target::Mu(v) => single("mu", v)?,
                Target::Omega(v) => single("omega", v)?,
            };
        }
        if self.p.is_empty() || self.alpha.is_empty() {
            return Err(invalid("--p and --alpha need at least one value"));
        }
        for &p in &self.p {
            for &alpha in &self.alpha {
                Params::new(p, alpha)?;
            }
        }
        let (name, values) = match &self.target {
            Target::Mu(v) => ("mu", v),
            Target::Omega(v) => ("omega", v),
        };
        if values.is_empty() {
            return Err(invalid(format!("--{name} needs at least one value")));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("{name} must be positive, got {v}")));
        }
        if let Target::Omega(omegas) = &self.target {
            if matches!(self.command, CommandKind::SolveAction | CommandKind::Sweep) {
                for &alpha in &self.alpha {
                    let wa = crate::solvers::omega_alpha(alpha);
                    if let Some(&w) = omegas.iter().find(|&&w| w <= wa) {
                        return Err(Error::FrequencyOutOfRange {
                            omega: w,
                            omega_alpha: wa,
                        });
                    }
                }
            }
        }
        if self.grid_n < 16 {
            return Err(invalid(format!("grid-n must be at least 16, got {}", self.grid_n)));
        }
        if let Some(r) = self.rmax {
            if !(r.is_finite() && r > 0.0) {
                return Err(invalid(format!("rmax must be positive, got {r}")));
            }
        }
        if let Some(g) = self.grading {
            if !(g.is_finite() && g >= 1.0) {
                return Err(invalid(format!("grading must be >= 1, got {g}")));
            }
        }
        if self.samples < 4 {
            return Err(invalid(format!("samples must be at least 4, got {}", self.samples)));
        }
        self.opts.validate()
    }

    fn config_record(&self, p: f64, alpha: f64, mu: Option<f64>, omega: Option<f64>) -> ConfigRecord {
        ConfigRecord {
            command: self.command.name().to_string(),
            p,
            alpha,
            mu,
            omega,
            grid_n: self.grid_n,
            rmax: self.rmax,
            grading: self.grading,
            solver: self.opts,
        }
    }

    fn grading_for(&self, p: f64) -> f64 {
        self.grading.unwrap_or_else(|| default_grading(p))
    }
}

fn status_of(result: &SolveResult) -> ExitStatus {
    if result.converged {
        ExitStatus::Success
    } else {
        ExitStatus::NotConverged
    }
}

fn ground_state(config: &RunConfig, params: Params, mu: f64) -> Result<SolveResult> {
    let grading = config.grading_for(params.p);
    match config.rmax {
        Some(r) => {
            let grid = Arc::new(build_grid(config.grid_n, r, grading)?);
            solve_ground_state(params, mu, &grid, &config.opts)
        }
        None => solve_ground_state_auto(params, mu, config.grid_n, grading, &config.opts),
    }
}

fn action_min(config: &RunConfig, params: Params, omega: f64) -> Result<SolveResult> {
    let r = config.rmax.unwrap_or_else(|| default_r_max(omega));
    let grid = Arc::new(build_grid(config.grid_n, r, config.grading_for(params.p))?);
    solve_action_min(params, omega, &grid, &config.opts)
}

fn soliton_record(
    config: ConfigRecord,
    sol: &SolitonResult,
    params: Params,
    omega: f64,
    wall: Option<f64>,
) -> Result<ResultRecord> {
    let state = DecomposedState::regular(sol.grid.clone(), omega.max(f64::MIN_POSITIVE), sol.profile.clone())?;
    let report = functionals(&state, &params, omega)?;
    Ok(ResultRecord {
        schema: SCHEMA.to_string(),
        config,
        grid: sol.grid.spec(),
        state: StateRecord::from_state(&state, params),
        report: ReportRecord {
            functionals: report,
            omega_recovered: sol.omega0,
            converged: true,
            postconditions_ok: sol.is_positive_decreasing(crate::verify::MONOTONE_SLACK),
            multistart_spread: 0.0,
            monotone: true,
        },
        residuals: ResidualRecord {
            boundary: f64::NAN,
            euler_lagrange: el_residual(&state, &params, omega)?,
            gradient_norm: sol.gradient_norm,
        },
        theorem_checks: None,
        timings: Timings {
            iterations: sol.iterations,
            evaluations: 0,
            wall_seconds: wall,
        },
    })
}

/// One CSV row: inputs, levels, residuals and pass flags.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub p: String,
    pub alpha: String,
    pub mu: String,
    pub omega: String,
    pub energy: String,
    pub action: String,
    pub omega_recovered: String,
    pub q: String,
    pub boundary_residual: String,
    pub el_residual: String,
    pub converged: bool,
    pub postconditions_ok: bool,
    /// `E < E⁰ < 0` for ground states, `d < d⁰` for action minimizers.
    pub below_reference: bool,
}

fn row(
    params: Params,
    mu: Option<f64>,
    omega: Option<f64>,
    result: &SolveResult,
    below_reference: bool,
) -> SweepRow {
    let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    SweepRow {
        p: format_f64(params.p),
        alpha: format_f64(params.alpha),
        mu: opt(mu),
        omega: opt(omega),
        energy: format_f64(result.report.energy),
        action: format_f64(result.report.action),
        omega_recovered: format_f64(result.omega_recovered),
        q: format_f64(result.state.q()),
        boundary_residual: format_f64(result.residuals.boundary),
        el_residual: format_f64(result.residuals.euler_lagrange),
        converged: result.converged,
        postconditions_ok: result.postconditions_ok,
        below_reference,
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Solves one sweep tuple and its reference level.
fn sweep_one(config: &RunConfig, params: Params, target: Target) -> Result<(SweepRow, ExitStatus)> {
    match target {
        Target::Mu(v) => {
            let mu = v[0];
            let gs = ground_state(config, params, mu)?;
            let soliton = reference_soliton(mu, params, gs.state.grid(), &config.opts)?;
            let below = gs.report.energy < soliton.energy0 && soliton.energy0 < 0.0;
            Ok((row(params, Some(mu), None, &gs, below), status_of(&gs)))
        }
        Target::Omega(v) => {
            let omega = v[0];
            let am = action_min(config, params, omega)?;
            let d0 = solve_nls_action(omega, params, am.state.grid(), &config.opts)?.action_level0;
            let below = am.report.action < d0;
            Ok((row(params, None, Some(omega), &am, below), status_of(&am)))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct DminRecord {
    schema: &'static str,
    config: ConfigRecord,
    window: LambdaWindow,
    value: f64,
    argmin_lambda: f64,
    samples: usize,
}

#[derive(Debug, Clone, Serialize)]
struct CheckRow {
    name: String,
    passed: bool,
    value: String,
    tolerance: String,
}

fn emit_record(config: &RunConfig, rec: &ResultRecord, params: Params, mu: Option<f64>, omega: Option<f64>, result: Option<&SolveResult>) -> Result<String> {
    match config.format {
        Format::Json => to_json(rec).map(|s| s + "\n"),
        Format::Csv => match result {
            Some(r) => to_csv(&[row(params, mu, omega, r, true)]),
            None => {
                let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
                to_csv(&[SweepRow {
                    p: format_f64(params.p),
                    alpha: format_f64(params.alpha),
                    mu: opt(mu),
                    omega: opt(omega),
                    energy: format_f64(rec.report.functionals.energy),
                    action: format_f64(rec.report.functionals.action),
                    omega_recovered: format_f64(rec.report.omega_recovered),
                    q: format_f64(rec.state.q),
                    boundary_residual: format_f64(rec.residuals.boundary),
                    el_residual: format_f64(rec.residuals.euler_lagrange),
                    converged: rec.report.converged,
                    postconditions_ok: rec.report.postconditions_ok,
                    below_reference: true,
                }])
            }
        },
    }
}

/// Executes a validated configuration.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let start = Instant::now();
    let wall = |s: Instant| config.wall_time.then(|| s.elapsed().as_secs_f64());
    let mut messages = Vec::new();

    if config.command == CommandKind::Sweep {
        let mut tuples = Vec::new();
        for &p in &config.p {
            for &alpha in &config.alpha {
                let params = Params::new(p, alpha)?;
                match &config.target {
                    Target::Mu(v) => tuples.extend(v.iter().map(|&m| (params, Target::Mu(vec![m])))),
                    Target::Omega(v) => tuples.extend(v.iter().map(|&w| (params, Target::Omega(vec![w])))),
                }
            }
        }
        let results: Vec<Result<(SweepRow, ExitStatus)>> = tuples
            .into_par_iter()
            .map(|(params, target)| sweep_one(config, params, target))
            .collect();
        let mut rows = Vec::new();
        let mut status = ExitStatus::Success;
        for r in results {
            match r {
                Ok((row, s)) => {
                    status = status.worst(s);
                    rows.push(row);
                }
                Err(e @ Error::NotConverged { .. }) | Err(e @ Error::Degenerate(_)) => {
                    messages.push(e.to_string());
                    status = status.worst(ExitStatus::NotConverged);
                }
                Err(e) => return Err(e),
            }
        }
        let artifact = match config.format {
            Format::Csv => to_csv(&rows)?,
            Format::Json => serde_json::to_string(&rows).map_err(|e| Error::Format(e.to_string()))? + "\n",
        };
        return Ok(RunOutput {
            status,
            artifact,
            messages,
        });
    }

    let p = config.p[0];
    let alpha = config.alpha[0];
    let params = Params::new(p, alpha)?;
    let (mu, omega) = match &config.target {
        Target::Mu(v) => (Some(v[0]), None),
        Target::Omega(v) => (None, Some(v[0])),
    };
    let cfg = config.config_record(p, alpha, mu, omega);

    match config.command {
        CommandKind::SolveGs | CommandKind::SolveAction => {
            let result = match (mu, omega) {
                (Some(mu), _) => ground_state(config, params, mu)?,
                (_, Some(omega)) => action_min(config, params, omega)?,
                _ => unreachable!("validated target"),
            };
            let rec = ResultRecord::from_result(cfg, &result, wall(start));
            let artifact = emit_record(config, &rec, params, mu, omega, Some(&result))?;
            Ok(RunOutput {
                status: status_of(&result),
                artifact,
                messages,
            })
        }
        CommandKind::Soliton => {
            let (sol, level_omega) = match (mu, omega) {
                (Some(mu), _) => {
                    let sol = match config.rmax {
                        Some(r) => {
                            let grid = Arc::new(build_grid(config.grid_n, r, config.grading_for(p))?);
                            solve_soliton(mu, params, &grid, &config.opts)?
                        }
                        None => solve_soliton_auto(mu, params, config.grid_n, config.grading_for(p), &config.opts)?,
                    };
                    let w = sol.omega0;
                    (sol, w)
                }
                (_, Some(omega)) => {
                    let r = config.rmax.unwrap_or_else(|| default_r_max(omega));
                    let grid = Arc::new(build_grid(config.grid_n, r, config.grading_for(p))?);
                    (solve_nls_action(omega, params, &grid, &config.opts)?, omega)
                }
                _ => unreachable!("validated target"),
            };
            let rec = soliton_record(cfg, &sol, params, level_omega, wall(start))?;
            let artifact = emit_record(config, &rec, params, mu, omega, None)?;
            Ok(RunOutput {
                status: ExitStatus::Success,
                artifact,
                messages,
            })
        }
        CommandKind::Verify => {
            let mu = mu.expect("validated target");
            let gs = ground_state(config, params, mu)?;
            let pipeline = pipeline_from_ground_state(gs, params, mu, &config.opts)?;
            let mut rec = ResultRecord::from_result(cfg, &pipeline.ground_state, wall(start));
            rec.theorem_checks = Some(pipeline.report.clone());
            let status = verify_status(&pipeline);
            for c in pipeline.report.failed() {
                messages.push(format!(
                    "check {} failed: value {} (tolerance {})",
                    c.name, c.value, c.tolerance
                ));
            }
            let artifact = match config.format {
                Format::Json => to_json(&rec)? + "\n",
                Format::Csv => to_csv(
                    &pipeline
                        .report
                        .checks
                        .iter()
                        .map(|c| CheckRow {
                            name: c.name.clone(),
                            passed: c.passed,
                            value: format_f64(c.value),
                            tolerance: format_f64(c.tolerance),
                        })
                        .collect::<Vec<_>>(),
                )?,
            };
            Ok(RunOutput {
                status,
                artifact,
                messages,
            })
        }
        CommandKind::Dmin => {
            let omega = omega.expect("validated target");
            let window = lambda_window(omega, alpha)?;
            let (value, argmin) = dmin_singular_family(omega, &params, config.samples)?;
            let rec = DminRecord {
                schema: SCHEMA,
                config: cfg,
                window,
                value,
                argmin_lambda: argmin,
                samples: config.samples,
            };
            let artifact = match config.format {
                Format::Json => to_json(&rec)? + "\n",
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["p", "alpha", "omega", "value", "argmin_lambda"])
                        .and_then(|_| {
                            w.write_record([
                                format_f64(p),
                                format_f64(alpha),
                                format_f64(omega),
                                format_f64(value),
                                format_f64(argmin),
                            ])
                        })
                        .map_err(|e| Error::Format(e.to_string()))?;
                    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
                    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?
                }
            };
            Ok(RunOutput {
                status: ExitStatus::Success,
                artifact,
                messages,
            })
        }
        CommandKind::Sweep => unreachable!("handled above"),
    }
}

/// Exit status of `verify`: non-convergence outranks a failed check.
pub fn verify_status(pipeline: &Pipeline) -> ExitStatus {
    if !(pipeline.ground_state.converged && pipeline.action.converged) {
        ExitStatus::NotConverged
    } else if !pipeline.report.overall {
        ExitStatus::CheckFailed
    } else {
        ExitStatus::Success
    }
}

/// Exit status for an error raised before or during a run.
pub fn error_status(err: &Error) -> ExitStatus {
    match err {
        Error::NotConverged { .. } | Error::Degenerate(_) => ExitStatus::NotConverged,
        _ => ExitStatus::Invalid,
    }
}

/// Parses `args` (program name first), runs, writes the artifact to
/// `--out` or `stdout`, and returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { ExitStatus::Invalid.code() } else { 0 };
        }
    };
    let (kind, args) = match &cli.command {
        Command::SolveGs(a) => (CommandKind::SolveGs, a),
        Command::SolveAction(a) => (CommandKind::SolveAction, a),
        Command::Soliton(a) => (CommandKind::Soliton, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
        Command::Dmin(a) => (CommandKind::Dmin, a),
    };
    let outcome = RunConfig::from_args(kind, args).and_then(|config| {
        let out = run(&config)?;
        match &config.out {
            Some(path) => std::fs::write(path, &out.artifact)?,
            None => stdout.write_all(out.artifact.as_bytes())?,
        }
        Ok(out)
    });
    match outcome {
        Ok(out) => {
            for m in &out.messages {
                let _ = writeln!(stderr, "{m}");
            }
            out.status.code()
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            error_status(&e).code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(std::iter::once("pointnls").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn invalid_p_names_the_constraint() {
        let (code, _, err) = run_args(&["solve-gs", "--p", "3.5", "--mu", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("p must lie in (2,3)"), "{err}");
    }

    #[test]
    fn low_frequency_action_is_a_validation_error() {
        let (code, _, err) = run_args(&["solve-action", "--p", "2.5", "--alpha", "-1", "--omega", "50"]);
        assert_eq!(code, 2);
        assert!(err.contains("omega_alpha"), "{err}");
    }

    #[test]
    fn target_must_match_command() {
        assert_eq!(run_args(&["solve-gs", "--p", "2.5", "--omega", "1"]).0, 2);
        assert_eq!(run_args(&["solve-gs", "--p", "2.5"]).0, 2);
        assert_eq!(run_args(&["solve-gs", "--p", "2.5", "--mu", "1", "--omega", "1"]).0, 2);
        assert_eq!(run_args(&["solve-gs", "--p", "2.5,2.6", "--mu", "1"]).0, 2);
        assert_eq!(run_args(&["dmin", "--p", "2.5", "--mu", "1"]).0, 2);
        assert_eq!(run_args(&["solve-gs", "--p", "2.5", "--mu", "-1"]).0, 2);
        assert_eq!(run_args(&["bogus"]).0, 2);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn dmin_json_and_csv() {
        let (code, out, _) = run_args(&["dmin", "--p", "2.5", "--alpha", "0", "--omega", "1"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["value"].as_f64().unwrap() <= 0.7958);
        assert_eq!(v["window"]["kind"], "all_admissible");
        let (code, out, _) = run_args(&["dmin", "--p", "2.5", "--alpha", "-1", "--omega", "100", "--format", "csv"]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "p,alpha,omega,value,argmin_lambda");
        assert!(lines.next().unwrap().starts_with("2.5000000000000000e0,-1.0000000000000000e0,"));
    }
}
