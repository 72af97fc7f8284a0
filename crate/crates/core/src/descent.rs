//! Preconditioned projected descent shared by every minimization.
//!
//! Directions are gradients in the metric of the coercive quadratic form
//! `Q + σM = ‖∇φ‖² + σ‖φ‖² + (α + √σ/4π) q²` (block diagonal at `σ = λ`),
//! combined Polak–Ribière style and followed by Armijo backtracking. After
//! each trial step the iterate is clipped to `φ ≥ 0, q ≥ 0` and retracted
//! onto the constraint set by a global rescaling.

use crate::functional::{functional_value, Components, Evaluator, Functional, PairGradient};
use crate::grid::solve_shifted_stiffness;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Constraint {
    /// `‖u‖₂² = μ`.
    Mass(f64),
    /// `I_ω(u) = 0`, used with the scale-invariant quotient.
    Nehari,
}

pub(crate) struct Problem<'e, 'g> {
    pub ev: &'e Evaluator<'g>,
    pub functional: Functional,
    pub omega: f64,
    pub constraint: Constraint,
    /// When false the charge stays at zero (plain NLS).
    pub free_charge: bool,
    /// Shift `σ` of the preconditioning form.
    pub shift: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DescentSettings {
    pub max_iter: usize,
    pub tol_grad: f64,
    pub step0: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub phi: Vec<f64>,
    pub q: f64,
    pub value: f64,
    pub components: Components,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Objective values at accepted iterates, first entry the start.
    pub history_nonincreasing: bool,
}

const ARMIJO_C1: f64 = 1e-4;
const STALL_WINDOW: usize = 10;
const STALL_REL_CHANGE: f64 = 1e-10;

impl Problem<'_, '_> {
    fn p(&self) -> f64 {
        self.ev.params.p
    }

    fn value_of(&self, c: &Components) -> f64 {
        functional_value(self.functional, self.p(), self.omega, c)
    }

    /// Clips and rescales onto the constraint. Returns `None` when the
    /// point cannot be retracted (zero or indefinite).
    fn retract(&self, phi: &mut [f64], q: &mut f64) -> Option<Components> {
        for v in phi.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if !self.free_charge || *q < 0.0 {
            *q = 0.0;
        }
        let c = self.ev.components(phi, *q);
        let scale = match self.constraint {
            Constraint::Mass(mu) => {
                if !(c.mass > 0.0) {
                    return None;
                }
                (mu / c.mass).sqrt()
            }
            Constraint::Nehari => {
                let qw = c.quadratic + self.omega * c.mass;
                if !(qw > 0.0 && c.lp_pow > 0.0) {
                    return None;
                }
                (qw / c.lp_pow).powf(1.0 / (self.p() - 2.0))
            }
        };
        if !scale.is_finite() {
            return None;
        }
        phi.iter_mut().for_each(|v| *v *= scale);
        *q *= scale;
        Some(c.scaled(scale, self.p()))
    }

    fn precondition(&self, g: &PairGradient) -> PairGradient {
        let mut phi = g.phi.clone();
        let diag: Vec<f64> = self.ev.grid.weights().iter().map(|w| self.shift * w).collect();
        solve_shifted_stiffness(self.ev.grid, &diag, &mut phi);
        let q = if self.free_charge {
            let coef = self.ev.params.alpha + self.shift.sqrt() / (4.0 * std::f64::consts::PI);
            g.q / coef.max(1e-3 * self.shift.sqrt())
        } else {
            0.0
        };
        PairGradient { phi, q }
    }

    /// Norm of `(φ, q)` in the preconditioning metric.
    fn metric_sq(&self, phi: &[f64], q: f64) -> f64 {
        let k = self.ev.grid.grad_l2_sq_unchecked(phi);
        let m = self.ev.grid.dot(phi, phi);
        let coef = self.ev.params.alpha + self.shift.sqrt() / (4.0 * std::f64::consts::PI);
        k + self.shift * m + coef.abs() * q * q
    }

    fn gradient(&self, phi: &[f64], q: f64) -> (PairGradient, Components) {
        let (_, c, mut g) = self.ev.value_and_gradient(self.functional, self.omega, phi, q);
        if !self.free_charge {
            g.q = 0.0;
        }
        (g, c)
    }

    fn constraint_gradient(&self, phi: &[f64], q: f64, c: &Components) -> Option<PairGradient> {
        match self.constraint {
            Constraint::Mass(_) => {
                let mut m = self.ev.mass_gradient(phi, q, c);
                if !self.free_charge {
                    m.q = 0.0;
                }
                Some(m)
            }
            Constraint::Nehari => None,
        }
    }

    /// Projected preconditioned gradient `d` with `g·d ≥ 0`.
    fn direction(&self, g: &PairGradient, m: Option<&PairGradient>) -> PairGradient {
        let mut d = self.precondition(g);
        if let Some(m) = m {
            let b = self.precondition(m);
            let mb = m.dot(&b);
            if mb > 0.0 {
                let beta = m.dot(&d) / mb;
                d.axpy(-beta, &b);
            }
        }
        d
    }

    fn project_tangent(&self, s: &mut PairGradient, m: Option<&PairGradient>) {
        if let Some(m) = m {
            let b = self.precondition(m);
            let mb = m.dot(&b);
            if mb > 0.0 {
                let beta = m.dot(s) / mb;
                s.axpy(-beta, &b);
            }
        }
    }

    fn relative_gradient(&self, g_dot_d: f64, value: f64, phi: &[f64], q: f64) -> f64 {
        let metric = self.metric_sq(phi, q);
        match self.constraint {
            Constraint::Mass(_) => (g_dot_d.max(0.0) / metric.max(f64::MIN_POSITIVE)).sqrt(),
            Constraint::Nehari => (g_dot_d.max(0.0) * metric).sqrt() / value.abs(),
        }
    }

    /// Natural step length along `-A⁻¹g`. The quotient is homogeneous of
    /// degree zero, so its curvature is `R/‖v‖²_A` and unit steps need the
    /// direction stretched by the inverse.
    fn step_unit(&self, value: f64, phi: &[f64], q: f64) -> f64 {
        match self.functional {
            Functional::Quotient if value > 0.0 => self.metric_sq(phi, q) / value,
            _ => 1.0,
        }
    }

    pub fn minimize(&self, phi0: &[f64], q0: f64, settings: DescentSettings) -> Option<Outcome> {
        let mut phi = phi0.to_vec();
        let mut q = q0;
        let mut comps = self.retract(&mut phi, &mut q)?;
        let mut value = self.value_of(&comps);
        let mut evaluations = 1;

        let mut history: Vec<f64> = vec![value];
        let mut nonincreasing = true;
        let mut tau = settings.step0;
        let mut prev: Option<(PairGradient, PairGradient, PairGradient)> = None; // g, d, s
        let mut rel_grad = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < settings.max_iter {
            let (g, c) = self.gradient(&phi, q);
            comps = c;
            evaluations += 1;
            let m = self.constraint_gradient(&phi, q, &comps);
            let d = self.direction(&g, m.as_ref());
            let gd = g.dot(&d);
            rel_grad = self.relative_gradient(gd, value, &phi, q);

            let stalled = history.len() > STALL_WINDOW && {
                let old = history[history.len() - 1 - STALL_WINDOW];
                (old - value).abs() <= STALL_REL_CHANGE * value.abs().max(f64::MIN_POSITIVE)
            };
            if rel_grad < settings.tol_grad && stalled {
                converged = true;
                break;
            }
            if !(gd > 0.0) {
                // zero gradient: stationary up to round-off
                converged = rel_grad < settings.tol_grad || gd == 0.0;
                break;
            }

            // Polak–Ribière+ combination, restarted when not a descent direction
            let unit = self.step_unit(value, &phi, q);
            let mut s = d.clone();
            s.scale(-unit);
            if let Some((gp, dp, sp)) = &prev {
                let num = g.dot(&d) - g.dot(dp);
                let den = gp.dot(dp);
                let gamma = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
                if gamma > 0.0 {
                    s.axpy(gamma, sp);
                    self.project_tangent(&mut s, m.as_ref());
                }
            }
            let mut slope = g.dot(&s);
            if !(slope < 0.0) {
                s = d.clone();
                s.scale(-unit);
                slope = -unit * gd;
            }

            let mut accepted = None;
            let mut t = tau;
            for _ in 0..60 {
                let mut trial_phi: Vec<f64> =
                    phi.iter().zip(&s.phi).map(|(x, y)| x + t * y).collect();
                let mut trial_q = q + t * s.q;
                if let Some(tc) = self.retract(&mut trial_phi, &mut trial_q) {
                    evaluations += 1;
                    let tv = self.value_of(&tc);
                    if tv <= value + ARMIJO_C1 * t * slope {
                        accepted = Some((trial_phi, trial_q, tv));
                        break;
                    }
                }
                t *= 0.5;
            }
            iterations += 1;
            match accepted {
                Some((np, nq, nv)) => {
                    if nv > value {
                        nonincreasing = false;
                    }
                    phi = np;
                    q = nq;
                    value = nv;
                    history.push(value);
                    tau = (t * 2.0).min(1e3 * settings.step0);
                    prev = Some((g, d, s));
                }
                None => {
                    if prev.is_none() {
                        // steepest descent also failed: at round-off level
                        converged = rel_grad < settings.tol_grad;
                        break;
                    }
                    prev = None;
                    tau = settings.step0;
                }
            }
        }
        let comps = self.ev.components(&phi, q);
        Some(Outcome {
            value: self.value_of(&comps),
            phi,
            q,
            components: comps,
            gradient_norm: rel_grad,
            iterations,
            evaluations,
            converged,
            history_nonincreasing: nonincreasing,
        })
    }
}
