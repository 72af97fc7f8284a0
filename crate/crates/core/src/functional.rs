//! Discrete functionals on the pair `(φ, q)` at a fixed decomposition
//! parameter λ, with exact gradients of the discrete expressions.
//!
//! With `u = φ + q G_λ` sampled on the grid:
//!
//! * mass `M = ∫φ² + 2q∫φG_λ + q²‖G_λ‖²`, the last term in closed form;
//! * `Q = ‖∇φ‖² - λ(M - ∫φ²) + (α + √λ/4π) q²`;
//! * `P = ‖u‖_p^p = |q|^p ‖G_λ‖_p^p + ∫(|u|^p - |qG_λ|^p)`, so that the
//!   non-integrable-looking part near the origin is carried by the closed form.

use std::f64::consts::PI;

use crate::greens::{green_l2_sq, green_lr_norm_pow, green_unchecked};
use crate::grid::RadialGrid;
use crate::state::Params;

/// Gradient with respect to the samples of φ and the charge.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub phi: Vec<f64>,
    pub q: f64,
}

impl PairGradient {
    pub fn zeros(n: usize) -> Self {
        Self {
            phi: vec![0.0; n],
            q: 0.0,
        }
    }

    pub(crate) fn axpy(&mut self, a: f64, other: &PairGradient) {
        for (x, y) in self.phi.iter_mut().zip(&other.phi) {
            *x += a * y;
        }
        self.q += a * other.q;
    }

    pub(crate) fn scale(&mut self, a: f64) {
        self.phi.iter_mut().for_each(|x| *x *= a);
        self.q *= a;
    }

    pub fn dot(&self, other: &PairGradient) -> f64 {
        self.phi.iter().zip(&other.phi).map(|(a, b)| a * b).sum::<f64>() + self.q * other.q
    }
}

/// Scalar pieces from which every functional is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Components {
    pub dirichlet: f64,
    pub phi_sq: f64,
    pub phi_green: f64,
    pub mass: f64,
    pub quadratic: f64,
    pub lp_pow: f64,
}

/// Which functional a gradient or a check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Energy,
    Action,
    Quotient,
}

/// Per-λ cache of Green's function samples.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub(crate) grid: &'a RadialGrid,
    pub(crate) params: Params,
    pub(crate) lambda: f64,
    pub(crate) green: Vec<f64>,
    green_pow: Vec<f64>,
    green_sq: f64,
    green_p: f64,
    boundary_coef: f64,
}

impl<'a> Evaluator<'a> {
    /// `lambda` must be positive; callers validate.
    pub fn new(grid: &'a RadialGrid, params: Params, lambda: f64) -> Self {
        let green = grid.sample(|r| green_unchecked(lambda, r));
        let green_pow = green.iter().map(|g| g.powf(params.p)).collect();
        Self {
            grid,
            params,
            lambda,
            green,
            green_pow,
            green_sq: green_l2_sq(lambda).expect("lambda validated by caller"),
            green_p: green_lr_norm_pow(lambda, params.p).expect("p validated by caller"),
            boundary_coef: params.alpha + lambda.sqrt() / (4.0 * PI),
        }
    }

    pub fn green(&self) -> &[f64] {
        &self.green
    }

    /// `α + √λ / 4π`.
    pub fn boundary_coef(&self) -> f64 {
        self.boundary_coef
    }

    pub fn regular_mass_only(&self, phi: &[f64]) -> f64 {
        self.grid.dot(phi, phi)
    }

    pub fn components(&self, phi: &[f64], q: f64) -> Components {
        let dirichlet = self.grid.grad_l2_sq_unchecked(phi);
        let phi_sq = self.grid.dot(phi, phi);
        let phi_green = if q == 0.0 {
            0.0
        } else {
            self.grid.dot(phi, &self.green)
        };
        let mass = phi_sq + 2.0 * q * phi_green + q * q * self.green_sq;
        let quadratic = dirichlet + self.lambda * (phi_sq - mass) + self.boundary_coef * q * q;
        Components {
            dirichlet,
            phi_sq,
            phi_green,
            mass,
            quadratic,
            lp_pow: self.lp_pow(phi, q),
        }
    }

    pub fn lp_pow(&self, phi: &[f64], q: f64) -> f64 {
        let p = self.params.p;
        let w = self.grid.weights();
        if q == 0.0 {
            return phi.iter().zip(w).map(|(f, w)| w * f.abs().powf(p)).sum();
        }
        let aq = q.abs();
        let sq = q.signum();
        let mut acc = 0.0;
        for i in 0..phi.len() {
            let sing = aq * self.green[i];
            let sing_p = aq.powf(p) * self.green_pow[i];
            let t = sq * phi[i] / sing;
            let rem = if sing > 0.0 && t > -0.5 && t < 1.0 {
                sing_p * (p * t.ln_1p()).exp_m1()
            } else {
                (phi[i] + q * self.green[i]).abs().powf(p) - sing_p
            };
            acc += w[i] * rem;
        }
        aq.powf(p) * self.green_p + acc
    }

    pub fn mass_gradient(&self, phi: &[f64], q: f64, c: &Components) -> PairGradient {
        let w = self.grid.weights();
        let grad_phi = (0..phi.len())
            .map(|i| 2.0 * w[i] * (phi[i] + q * self.green[i]))
            .collect();
        let phi_green = if q == 0.0 {
            self.grid.dot(phi, &self.green)
        } else {
            c.phi_green
        };
        PairGradient {
            phi: grad_phi,
            q: 2.0 * phi_green + 2.0 * q * self.green_sq,
        }
    }

    pub fn quadratic_gradient(&self, phi: &[f64], q: f64, c: &Components) -> PairGradient {
        let w = self.grid.weights();
        let mut grad_phi = vec![0.0; phi.len()];
        self.grid.stiffness_apply(phi, &mut grad_phi);
        for i in 0..phi.len() {
            grad_phi[i] = 2.0 * grad_phi[i] - 2.0 * self.lambda * q * w[i] * self.green[i];
        }
        let phi_green = if q == 0.0 {
            self.grid.dot(phi, &self.green)
        } else {
            c.phi_green
        };
        PairGradient {
            phi: grad_phi,
            q: -2.0 * self.lambda * (phi_green + q * self.green_sq)
                + 2.0 * self.boundary_coef * q,
        }
    }

    pub fn lp_gradient(&self, phi: &[f64], q: f64) -> PairGradient {
        let p = self.params.p;
        let w = self.grid.weights();
        let mut grad_phi = Vec::with_capacity(phi.len());
        let mut grad_q = 0.0;
        let aq = q.abs();
        let sq = q.signum();
        for i in 0..phi.len() {
            let u = phi[i] + q * self.green[i];
            let du = p * u.abs().powf(p - 2.0) * u;
            grad_phi.push(w[i] * du);
            if q != 0.0 {
                // p G (|u|^{p-2}u - |q|^{p-2}q G^{p-1}), written to avoid cancellation
                let sing = aq * self.green[i];
                let t = sq * phi[i] / sing;
                let diff = if sing > 0.0 && t > -0.5 && t < 1.0 {
                    sq * p * sing.powf(p - 1.0) * ((p - 1.0) * t.ln_1p()).exp_m1()
                } else {
                    du - sq * p * sing.powf(p - 1.0)
                };
                grad_q += w[i] * self.green[i] * diff;
            }
        }
        if q != 0.0 {
            grad_q += p * aq.powf(p - 2.0) * q * self.green_p;
        }
        PairGradient {
            phi: grad_phi,
            q: grad_q,
        }
    }

    /// Value and gradient of a functional.
    pub fn value_and_gradient(
        &self,
        which: Functional,
        omega: f64,
        phi: &[f64],
        q: f64,
    ) -> (f64, Components, PairGradient) {
        let c = self.components(phi, q);
        let p = self.params.p;
        let gq = self.quadratic_gradient(phi, q, &c);
        let gp = self.lp_gradient(phi, q);
        match which {
            Functional::Energy => {
                let mut g = gq;
                g.scale(0.5);
                g.axpy(-1.0 / p, &gp);
                (0.5 * c.quadratic - c.lp_pow / p, c, g)
            }
            Functional::Action => {
                let gm = self.mass_gradient(phi, q, &c);
                let mut g = gq;
                g.scale(0.5);
                g.axpy(-1.0 / p, &gp);
                g.axpy(0.5 * omega, &gm);
                (
                    0.5 * c.quadratic - c.lp_pow / p + 0.5 * omega * c.mass,
                    c,
                    g,
                )
            }
            Functional::Quotient => {
                let gm = self.mass_gradient(phi, q, &c);
                let num = c.quadratic + omega * c.mass;
                let den = c.lp_pow.powf(2.0 / p);
                let mut g = gq;
                g.axpy(omega, &gm);
                g.scale(1.0 / den);
                g.axpy(-(2.0 / p) * num / (den * c.lp_pow), &gp);
                (num / den, c, g)
            }
        }
    }

    pub fn value(&self, which: Functional, omega: f64, phi: &[f64], q: f64) -> f64 {
        let c = self.components(phi, q);
        functional_value(which, self.params.p, omega, &c)
    }
}

pub fn functional_value(which: Functional, p: f64, omega: f64, c: &Components) -> f64 {
    match which {
        Functional::Energy => 0.5 * c.quadratic - c.lp_pow / p,
        Functional::Action => 0.5 * c.quadratic - c.lp_pow / p + 0.5 * omega * c.mass,
        Functional::Quotient => (c.quadratic + omega * c.mass) / c.lp_pow.powf(2.0 / p),
    }
}

impl Components {
    /// Components of `c·(φ, q)` from those of `(φ, q)`.
    pub fn scaled(&self, c: f64, p: f64) -> Self {
        let c2 = c * c;
        Self {
            dirichlet: c2 * self.dirichlet,
            phi_sq: c2 * self.phi_sq,
            phi_green: c * self.phi_green,
            mass: c2 * self.mass,
            quadratic: c2 * self.quadratic,
            lp_pow: c.powf(p) * self.lp_pow,
        }
    }
}
