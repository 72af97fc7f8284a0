//! Reference solver for the standard NLS (no point interaction): soliton of
//! prescribed mass and the action level at prescribed frequency.

use std::sync::Arc;

use crate::descent::{Constraint, DescentSettings, Outcome, Problem};
use crate::error::{domain, Error, Result};
use crate::functional::{Evaluator, Functional};
use crate::grid::{build_grid, tail_decayed, RadialGrid};
use crate::solvers::SolveOptions;
use crate::state::Params;

/// A converged radial NLS ground state.
#[derive(Debug, Clone)]
pub struct SolitonResult {
    pub profile: Vec<f64>,
    pub grid: Arc<RadialGrid>,
    pub mu: f64,
    pub omega0: f64,
    /// `E⁰` of the profile.
    pub energy0: f64,
    /// `S̃` of the profile; equals `d⁰(ω₀)`.
    pub action_level0: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl SolitonResult {
    fn from_outcome(out: &Outcome, grid: &Arc<RadialGrid>, p: f64) -> Self {
        let c = &out.components;
        SolitonResult {
            profile: out.phi.clone(),
            grid: grid.clone(),
            mu: c.mass,
            omega0: (c.lp_pow - c.dirichlet) / c.mass,
            energy0: 0.5 * c.dirichlet - c.lp_pow / p,
            action_level0: (p - 2.0) / (2.0 * p) * c.lp_pow,
            iterations: out.iterations,
            gradient_norm: out.gradient_norm,
        }
    }

    /// Whether the profile is positive and non-increasing up to `tol·max`.
    pub fn is_positive_decreasing(&self, tol: f64) -> bool {
        let max = self.profile.iter().cloned().fold(0.0, f64::max);
        self.profile.iter().all(|&v| v > 0.0)
            && self.profile.windows(2).all(|w| w[1] <= w[0] + tol * max)
    }
}

/// Gaussian bump `exp(-(r/ℓ)²)`.
pub(crate) fn gaussian(grid: &RadialGrid, width: f64) -> Vec<f64> {
    grid.sample(|r| (-(r / width).powi(2)).exp())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn not_converged(out: Outcome) -> Error {
    Error::NotConverged {
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
        last_iterate: crate::error::LastIterate(out.phi),
    }
}

/// Descent at zero charge. The preconditioning shift tracks the recovered
/// frequency; a second pass is made when the first guess was far off.
fn run_plain(
    grid: &RadialGrid,
    params: Params,
    functional: Functional,
    omega: f64,
    constraint: Constraint,
    init: &[f64],
    shift0: f64,
    opts: &SolveOptions,
) -> Option<Outcome> {
    let ev = Evaluator::new(grid, params, 1.0);
    let settings = DescentSettings {
        max_iter: opts.max_iter,
        tol_grad: opts.tol_grad,
        step0: opts.step0,
    };
    let mut shift = shift0;
    let mut start = init.to_vec();
    let mut total = 0;
    for _ in 0..3 {
        let problem = Problem {
            ev: &ev,
            functional,
            omega,
            constraint,
            free_charge: false,
            shift,
        };
        let mut out = problem.minimize(&start, 0.0, settings)?;
        total += out.iterations;
        out.iterations = total;
        let c = &out.components;
        let w = (c.lp_pow - c.dirichlet) / c.mass;
        if out.converged || !(w > 0.0) || (w / shift > 0.25 && w / shift < 4.0) {
            return Some(out);
        }
        shift = w;
        start = out.phi;
    }
    None
}

/// Minimizer of `E⁰` at mass `mu`, started from a Gaussian bump.
pub fn solve_soliton(
    mu: f64,
    params: Params,
    grid: &Arc<RadialGrid>,
    opts: &SolveOptions,
) -> Result<SolitonResult> {
    let width = grid.r_max() / 10.0;
    solve_soliton_with_init(mu, params, grid, opts, &gaussian(grid, width))
}

pub fn solve_soliton_with_init(
    mu: f64,
    params: Params,
    grid: &Arc<RadialGrid>,
    opts: &SolveOptions,
    init: &[f64],
) -> Result<SolitonResult> {
    params.validate()?;
    check_positive("mu", mu)?;
    opts.validate()?;
    grid.check_len(init.len())?;
    let shift = (10.0 / grid.r_max()).powi(2);
    let out = run_plain(
        grid,
        params,
        Functional::Energy,
        0.0,
        Constraint::Mass(mu),
        init,
        shift,
        opts,
    )
    .ok_or_else(|| Error::Degenerate("initial profile has zero mass".into()))?;
    if !out.converged {
        return Err(not_converged(out));
    }
    Ok(SolitonResult::from_outcome(&out, grid, params.p))
}

/// Minimizer of the NLS action at frequency `omega` via the quotient
/// `(‖∇v‖² + ω‖v‖²)/‖v‖_p²`, rescaled onto the Nehari manifold.
pub fn solve_nls_action(
    omega: f64,
    params: Params,
    grid: &Arc<RadialGrid>,
    opts: &SolveOptions,
) -> Result<SolitonResult> {
    params.validate()?;
    check_positive("omega", omega)?;
    opts.validate()?;
    let init = gaussian(grid, 1.0 / omega.sqrt());
    let ev = Evaluator::new(grid, params, 1.0);
    let problem = Problem {
        ev: &ev,
        functional: Functional::Quotient,
        omega,
        constraint: Constraint::Nehari,
        free_charge: false,
        shift: omega,
    };
    let settings = DescentSettings {
        max_iter: opts.max_iter,
        tol_grad: opts.tol_grad,
        step0: opts.step0,
    };
    let out = problem
        .minimize(&init, 0.0, settings)
        .ok_or_else(|| Error::Degenerate("initial profile is degenerate".into()))?;
    if !out.converged {
        return Err(not_converged(out));
    }
    Ok(SolitonResult::from_outcome(&out, grid, params.p))
}

/// Soliton on a grid sized to its own decay length, `r_max = 20/√ω₀`.
/// The grid is rebuilt once if the first guess was off by more than 1.5×.
pub fn solve_soliton_auto(
    mu: f64,
    params: Params,
    n: usize,
    grading: f64,
    opts: &SolveOptions,
) -> Result<SolitonResult> {
    let mut r_max = 30.0;
    let mut last = None;
    for _ in 0..4 {
        let grid = Arc::new(build_grid(n, r_max, grading)?);
        let sol = solve_soliton(mu, params, &grid, opts)?;
        let wanted = crate::solvers::default_r_max(sol.omega0);
        let ratio = wanted / r_max;
        last = Some(sol);
        if (1.0 / 1.5..=1.5).contains(&ratio) {
            break;
        }
        r_max = wanted;
    }
    let sol = last.expect("loop runs at least once");
    if !tail_decayed(&sol.profile) {
        return Err(Error::Degenerate("soliton does not decay on its grid".into()));
    }
    Ok(sol)
}
