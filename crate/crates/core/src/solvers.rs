//! Ground states at fixed mass and action minimizers at fixed frequency,
//! both computed on the decomposed unknowns `(φ_λ, q)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descent::{Constraint, DescentSettings, Outcome, Problem};
use crate::error::{domain, Error, Result};
use crate::functional::{Evaluator, Functional, PairGradient};
use crate::grid::{build_grid, RadialGrid};
use crate::reference_nls::{gaussian, solve_soliton};
use crate::state::{
    boundary_residual, el_residual, functionals, DecomposedState, FunctionalReport, Params,
};

/// `ω_α = (4πα)²` for `α < 0`, zero otherwise.
pub fn omega_alpha(alpha: f64) -> f64 {
    if alpha < 0.0 {
        (4.0 * PI * alpha).powi(2)
    } else {
        0.0
    }
}

/// Outer radius used when a grid is sized automatically.
pub fn default_r_max(omega_scale: f64) -> f64 {
    20.0 / omega_scale.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub step0: f64,
    pub tol_grad: f64,
    pub tol_residual: f64,
    pub n_multistart: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            step0: 1.0,
            tol_grad: 1e-7,
            tol_residual: 1e-3,
            n_multistart: 3,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.n_multistart == 0 {
            return Err(Error::Argument(
                "max_iter and multistart must be positive".into(),
            ));
        }
        for (name, v) in [
            ("step0", self.step0),
            ("tol_grad", self.tol_grad),
            ("tol_residual", self.tol_residual),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub boundary: f64,
    pub euler_lagrange: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub state: DecomposedState,
    pub params: Params,
    pub omega_recovered: f64,
    pub report: FunctionalReport,
    pub residuals: Residuals,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// `q > 0`, `u > 0` and `ω > ω_α` all hold.
    pub postconditions_ok: bool,
    /// Relative spread of the final objective over converged starts.
    pub multistart_spread: f64,
    /// Objective never increased across accepted steps, in every start.
    pub monotone: bool,
}

/// Frequency recovered from the Nehari balance, `(‖u‖_p^p - Q(u)) / ‖u‖₂²`.
fn recovered_omega(c: &crate::functional::Components) -> f64 {
    (c.lp_pow - c.quadratic) / c.mass
}

struct Start {
    phi: Vec<f64>,
    q: f64,
}

/// Initial guesses: (a) a profile with a charge matching the boundary
/// condition, (b) the pure singular state, then random positive bumps with
/// random charge. Every run gets its own stream of the seeded generator.
fn starts(
    grid: &RadialGrid,
    lambda: f64,
    alpha: f64,
    base: &[f64],
    width: f64,
    opts: &SolveOptions,
) -> Vec<Start> {
    let coef = alpha + lambda.sqrt() / (4.0 * PI);
    let mut out = Vec::with_capacity(opts.n_multistart);
    for k in 0..opts.n_multistart {
        let start = match k {
            0 => Start {
                phi: base.to_vec(),
                q: grid.extrapolate_origin(base).max(0.0) / coef,
            },
            1 => Start {
                phi: vec![0.0; grid.len()],
                q: 1.0,
            },
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(k as u64);
                let bumps: Vec<(f64, f64, f64)> = (0..3)
                    .map(|_| {
                        (
                            rng.gen_range(0.2..1.0),
                            rng.gen_range(0.0..2.0) * width,
                            rng.gen_range(0.5..2.0) * width,
                        )
                    })
                    .collect();
                let phi = grid.sample(|r| {
                    bumps
                        .iter()
                        .map(|(a, m, l)| a * (-((r - m) / l).powi(2)).exp())
                        .sum()
                });
                let q = rng.gen_range(0.0..2.0) * grid.extrapolate_origin(&phi) / coef;
                Start { phi, q }
            }
        };
        out.push(start);
    }
    out
}

struct Multistart {
    best: Outcome,
    spread: f64,
    iterations: usize,
    evaluations: usize,
    monotone: bool,
}

fn multistart(problem: &Problem, starts: &[Start], settings: DescentSettings) -> Result<Multistart> {
    let mut outcomes = Vec::new();
    for s in starts {
        if let Some(out) = problem.minimize(&s.phi, s.q, settings) {
            outcomes.push(out);
        }
    }
    if outcomes.is_empty() {
        return Err(Error::Degenerate("no initial guess could be normalized".into()));
    }
    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let monotone = outcomes.iter().all(|o| o.history_nonincreasing);
    let values: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.converged)
        .map(|o| o.value)
        .collect();
    let spread = if values.len() < 2 {
        0.0
    } else {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / lo.abs().max(f64::MIN_POSITIVE)
    };
    // prefer converged runs, then the lowest objective
    let best = outcomes
        .into_iter()
        .min_by(|a, b| (!a.converged, a.value).partial_cmp(&(!b.converged, b.value)).unwrap())
        .expect("non-empty");
    Ok(Multistart {
        best,
        spread,
        iterations,
        evaluations,
        monotone,
    })
}

fn settings(opts: &SolveOptions) -> DescentSettings {
    DescentSettings {
        max_iter: opts.max_iter,
        tol_grad: opts.tol_grad,
        step0: opts.step0,
    }
}

/// Working decomposition parameter `max(2ω, 1.5ω_α + 1)`.
pub fn working_lambda(omega_guess: f64, params: &Params) -> f64 {
    (2.0 * omega_guess).max(1.5 * params.omega_alpha() + 1.0)
}

fn finish(
    grid: &Arc<RadialGrid>,
    params: Params,
    lambda: f64,
    ms: Multistart,
    omega: Option<f64>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let out = ms.best;
    let state = DecomposedState::new(grid.clone(), lambda, out.q, out.phi)?;
    let omega_recovered = recovered_omega(&out.components);
    let omega_eval = omega.unwrap_or(omega_recovered);
    let report = functionals(&state, &params, omega_eval)?;
    let boundary = if state.q() > 0.0 {
        boundary_residual(&state, &params)?
    } else {
        f64::INFINITY
    };
    let residuals = Residuals {
        boundary,
        euler_lagrange: el_residual(&state, &params, omega_eval)?,
        gradient_norm: out.gradient_norm,
    };
    let positive = state.samples().iter().all(|&v| v > 0.0);
    let postconditions_ok =
        state.q() > 0.0 && positive && omega_recovered > params.omega_alpha();
    Ok(SolveResult {
        converged: out.converged && boundary < opts.tol_residual,
        state,
        params,
        omega_recovered,
        report,
        residuals,
        iterations: ms.iterations,
        evaluations: ms.evaluations,
        postconditions_ok,
        multistart_spread: ms.spread,
        monotone: ms.monotone,
    })
}

/// Minimizes the energy at mass `mu` over `(φ, q)`.
pub fn solve_ground_state(
    params: Params,
    mu: f64,
    grid: &Arc<RadialGrid>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    params.validate()?;
    opts.validate()?;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(domain(format!("mu must be positive, got {mu}")));
    }
    // the plain soliton on this grid seeds start (a) and the frequency scale
    let soliton_opts = SolveOptions {
        max_iter: opts.max_iter.min(2000),
        tol_grad: opts.tol_grad.max(1e-6),
        ..*opts
    };
    let (base, omega0) = match solve_soliton(mu, params, grid, &soliton_opts) {
        Ok(s) => (s.profile, s.omega0),
        Err(_) => {
            let width = grid.r_max() / 10.0;
            (gaussian(grid, width), (10.0 / grid.r_max()).powi(2))
        }
    };
    let mut lambda = working_lambda(omega0.max(params.omega_alpha()), &params);
    let width = 1.0 / omega0.max(params.omega_alpha()).sqrt();
    let mut total_iter = 0;
    let mut total_eval = 0;

    // Short pilot runs from start (a) raise λ until it clears the recovered
    // frequency: positivity of φ_λ, hence the clipping, needs λ > ω.
    let pilot_settings = DescentSettings {
        max_iter: opts.max_iter.min(PILOT_ITERATIONS),
        ..settings(opts)
    };
    let single = SolveOptions {
        n_multistart: 1,
        ..*opts
    };
    for _ in 0..8 {
        let ev = Evaluator::new(grid, params, lambda);
        let problem = ground_problem(&ev, mu, lambda);
        let pilot = multistart(
            &problem,
            &starts(grid, lambda, params.alpha, &base, width, &single),
            pilot_settings,
        )?;
        total_iter += pilot.iterations;
        total_eval += pilot.evaluations;
        let omega = recovered_omega(&pilot.best.components);
        if omega * LAMBDA_MARGIN < lambda {
            break;
        }
        lambda = working_lambda(omega, &params);
    }

    let ev = Evaluator::new(grid, params, lambda);
    let problem = ground_problem(&ev, mu, lambda);
    let mut ms = multistart(
        &problem,
        &starts(grid, lambda, params.alpha, &base, width, opts),
        settings(opts),
    )?;
    ms.iterations += total_iter;
    ms.evaluations += total_eval;
    finish(grid, params, lambda, ms, None, opts)
}

/// Ratio by which the working λ must exceed the recovered frequency.
const LAMBDA_MARGIN: f64 = 1.25;
const PILOT_ITERATIONS: usize = 400;

fn ground_problem<'e, 'g>(ev: &'e Evaluator<'g>, mu: f64, lambda: f64) -> Problem<'e, 'g> {
    Problem {
        ev,
        functional: Functional::Energy,
        omega: 0.0,
        constraint: Constraint::Mass(mu),
        free_charge: true,
        shift: lambda,
    }
}

/// Ground state on a grid sized to its own frequency: `r_max = 20/√ω`,
/// rebuilt until the recovered `ω` agrees with the grid within 1.5×.
pub fn solve_ground_state_auto(
    params: Params,
    mu: f64,
    n: usize,
    grading: f64,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    params.validate()?;
    let soliton = crate::reference_nls::solve_soliton_auto(mu, params, n, grading, opts)?;
    let mut r_max = default_r_max(soliton.omega0.max(params.omega_alpha()));
    let mut result = None;
    for _ in 0..4 {
        let grid = Arc::new(build_grid(n, r_max, grading)?);
        let res = solve_ground_state(params, mu, &grid, opts)?;
        let wanted = default_r_max(res.omega_recovered.max(f64::MIN_POSITIVE));
        result = Some(res);
        if (1.0 / 1.5..=1.5).contains(&(wanted / r_max)) {
            break;
        }
        r_max = wanted;
    }
    Ok(result.expect("loop runs at least once"))
}

/// Default grading exponent: 2, raised to 3 when `φ_λ ~ r^{3-p}` is too
/// steep at the origin for a quadratic mesh.
pub fn default_grading(p: f64) -> f64 {
    (1.0 / (3.0 - p)).clamp(2.0, 3.0)
}

/// Minimizes the action at frequency `omega` on the Nehari manifold through
/// the quotient `Q_ω(v) / ‖v‖_p²`.
pub fn solve_action_min(
    params: Params,
    omega: f64,
    grid: &Arc<RadialGrid>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    params.validate()?;
    opts.validate()?;
    if !omega.is_finite() {
        return Err(domain("omega must be finite"));
    }
    let wa = params.omega_alpha();
    if omega <= wa {
        return Err(Error::FrequencyOutOfRange {
            omega,
            omega_alpha: wa,
        });
    }
    let lambda = working_lambda(omega, &params);
    let width = 1.0 / omega.sqrt();
    let base = gaussian(grid, width);
    let starts = starts(grid, lambda, params.alpha, &base, width, opts);
    let ev = Evaluator::new(grid, params, lambda);
    let problem = Problem {
        ev: &ev,
        functional: Functional::Quotient,
        omega,
        constraint: Constraint::Nehari,
        free_charge: true,
        shift: lambda,
    };
    let ms = multistart(&problem, &starts, settings(opts))?;
    finish(grid, params, lambda, ms, Some(omega), opts)
}

/// `t·state` with `t^{p-2} = Q_ω / ‖u‖_p^p`, which lies on `I_ω = 0`.
pub fn nehari_rescale(
    state: &DecomposedState,
    params: &Params,
    omega: f64,
) -> Result<DecomposedState> {
    let rep = functionals(state, params, omega)?;
    if !(rep.quadratic_omega > 0.0 && rep.lp_pow > 0.0) {
        return Err(Error::Degenerate(format!(
            "Nehari rescaling needs Q_omega > 0 and a nonzero state (Q_omega = {}, Lp = {})",
            rep.quadratic_omega, rep.lp_pow
        )));
    }
    let t = (rep.quadratic_omega / rep.lp_pow).powf(1.0 / (params.p - 2.0));
    state.scaled(t)
}

/// Relative mismatch between the analytic directional derivative along
/// `(dphi, dq)` and an extrapolated central difference with step `h`. Returns 0 when
/// both vanish.
pub fn directional_error(
    state: &DecomposedState,
    params: &Params,
    omega: f64,
    functional: Functional,
    dphi: &[f64],
    dq: f64,
    h: f64,
) -> Result<f64> {
    params.validate()?;
    state.grid().check_len(dphi.len())?;
    let ev = state.evaluator(*params);
    let (phi, q) = (state.phi(), state.q());
    let (_, _, g) = ev.value_and_gradient(functional, omega, phi, q);
    let dir = PairGradient {
        phi: dphi.to_vec(),
        q: dq,
    };
    let analytic = g.dot(&dir);
    let shifted = |t: f64| {
        let p: Vec<f64> = phi.iter().zip(dphi).map(|(a, b)| a + t * b).collect();
        ev.value(functional, omega, &p, q + t * dq)
    };
    // Richardson-extrapolated central differences, O(h⁴)
    let central = |h: f64| (shifted(h) - shifted(-h)) / (2.0 * h);
    let fd = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    let scale = analytic.abs().max(fd.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((analytic - fd).abs() / scale)
}

/// Largest directional-derivative error over 19 random dense directions
/// and the charge direction, step `1e-3` relative to the state's scale.
pub fn gradient_check(
    state: &DecomposedState,
    params: &Params,
    omega: f64,
    functional: Functional,
) -> Result<f64> {
    let grid = state.grid();
    let u = state.samples();
    let w = grid.weights();
    let rms = (grid.dot(&u, &u) / w.iter().sum::<f64>()).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (dphi, dq) = if k == 19 {
            (vec![0.0; grid.len()], state.q().max(1e-3))
        } else {
            let d: Vec<f64> = state
                .phi()
                .iter()
                .map(|f| (f.abs() + 1e-2 * rms) * rng.gen_range(-1.0..1.0))
                .collect();
            (d, state.q().max(1e-3) * rng.gen_range(-1.0..1.0))
        };
        let err = directional_error(state, params, omega, functional, &dphi, dq, h)?;
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn grading_follows_the_singularity() {
        assert_eq!(default_grading(2.2), 2.0);
        assert_eq!(default_grading(2.5), 2.0);
        assert!((default_grading(2.6) - 2.5).abs() < 1e-12);
        assert_eq!(default_grading(2.8), 3.0);
        assert_eq!(default_grading(2.99), 3.0);
    }

    #[test]
    fn omega_alpha_values() {
        assert!((omega_alpha(-1.0) - 157.913_670_417_429_7).abs() < 1e-9);
        assert_eq!(omega_alpha(0.0), 0.0);
        assert_eq!(omega_alpha(2.0), 0.0);
    }

    fn smooth_state(grid: &Arc<RadialGrid>, lambda: f64, q: f64) -> DecomposedState {
        let phi = grid.sample(|r| 0.3 * (-(r * r) / 2.0).exp() + 0.1 * (-r).exp());
        DecomposedState::new(grid.clone(), lambda, q, phi).unwrap()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let grid = Arc::new(build_grid(400, 30.0, 2.0).unwrap());
        let params = Params::new(2.5, 0.3).unwrap();
        let s = smooth_state(&grid, 2.0, 0.4);
        for f in [Functional::Energy, Functional::Action, Functional::Quotient] {
            let e = gradient_check(&s, &params, 1.0, f).unwrap();
            assert!(e < 1e-5, "{f:?}: {e}");
        }
        let sing = DecomposedState::singular(grid.clone(), 1.0, 10.0).unwrap();
        let e = gradient_check(&sing, &params, 1.0, Functional::Action).unwrap();
        assert!(e < 1e-5, "{e}");
    }

    #[test]
    fn zero_direction_is_guarded() {
        let grid = Arc::new(build_grid(100, 30.0, 2.0).unwrap());
        let params = Params::new(2.5, 0.0).unwrap();
        let s = smooth_state(&grid, 1.0, 0.1);
        let zero = vec![0.0; grid.len()];
        let e = directional_error(&s, &params, 1.0, Functional::Energy, &zero, 0.0, 1e-5);
        assert_eq!(e.unwrap(), 0.0);
    }

    #[test]
    fn nehari_rescale_properties() {
        let grid = Arc::new(build_grid(400, 30.0, 2.0).unwrap());
        let params = Params::new(2.5, 0.0).unwrap();
        let s = smooth_state(&grid, 1.0, 0.2);
        let n1 = nehari_rescale(&s, &params, 1.0).unwrap();
        let rep = functionals(&n1, &params, 1.0).unwrap();
        assert!(rep.nehari.abs() < 1e-9 * rep.quadratic_omega);
        let again = nehari_rescale(&n1, &params, 1.0).unwrap();
        assert!((again.q() / n1.q() - 1.0).abs() < 1e-10);
        let doubled = nehari_rescale(&s.scaled(2.0).unwrap(), &params, 1.0).unwrap();
        assert!((doubled.q() / n1.q() - 1.0).abs() < 1e-12);
        let zero = DecomposedState::new(grid.clone(), 1.0, 0.0, vec![0.0; grid.len()]).unwrap();
        assert!(nehari_rescale(&zero, &params, 1.0).is_err());
    }

    #[test]
    fn action_refuses_low_frequency() {
        let grid = Arc::new(build_grid(100, 3.0, 2.0).unwrap());
        let params = Params::new(2.5, -1.0).unwrap();
        let err = solve_action_min(params, 0.5 * omega_alpha(-1.0), &grid, &SolveOptions::default());
        assert!(matches!(err, Err(Error::FrequencyOutOfRange { .. })));
    }
}
