//! The decomposed state `u = φ_λ + q G_λ` and the scalar functionals
//! evaluated on it.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::functional::{Components, Evaluator};
use crate::greens::green_unchecked;
use crate::grid::{tail_decayed, RadialGrid};
use crate::solvers::omega_alpha;

/// Nonlinearity power `p ∈ (2, 3)` and point-interaction strength `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub alpha: f64,
}

impl Params {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        let params = Self { p, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 2.0 && self.p < 3.0) {
            return Err(Error::Argument(format!("p must lie in (2,3), got {}", self.p)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Argument("alpha must be finite".into()));
        }
        Ok(())
    }

    pub fn omega_alpha(&self) -> f64 {
        omega_alpha(self.alpha)
    }
}

/// A radial state stored through its regular part at one decomposition
/// parameter. The charge is kept real and nonnegative (phase fixed).
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedState {
    lambda: f64,
    q: f64,
    phi: Vec<f64>,
    grid: Arc<RadialGrid>,
}

impl DecomposedState {
    pub fn new(grid: Arc<RadialGrid>, lambda: f64, q: f64, phi: Vec<f64>) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(domain(format!("lambda must be positive, got {lambda}")));
        }
        if !(q.is_finite() && q >= 0.0) {
            return Err(domain(format!("charge must be finite and >= 0, got {q}")));
        }
        grid.check_len(phi.len())?;
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(domain("regular part has non-finite samples"));
        }
        Ok(Self {
            lambda,
            q,
            phi,
            grid,
        })
    }

    /// Pure singular state `q G_λ`.
    pub fn singular(grid: Arc<RadialGrid>, lambda: f64, q: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, lambda, q, vec![0.0; n])
    }

    /// State with no charge.
    pub fn regular(grid: Arc<RadialGrid>, lambda: f64, phi: Vec<f64>) -> Result<Self> {
        Self::new(grid, lambda, 0.0, phi)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn into_parts(self) -> (f64, f64, Vec<f64>) {
        (self.lambda, self.q, self.phi)
    }

    /// Samples of `u = φ + q G_λ` at the nodes.
    pub fn samples(&self) -> Vec<f64> {
        self.grid
            .nodes()
            .iter()
            .zip(&self.phi)
            .map(|(&r, f)| f + self.q * green_unchecked(self.lambda, r))
            .collect()
    }

    /// Whether `|φ(r_max)| < 1e-6 max|φ|`.
    pub fn is_decayed(&self) -> bool {
        tail_decayed(&self.phi)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(domain(format!("scale factor must be >= 0, got {c}")));
        }
        Ok(Self {
            lambda: self.lambda,
            q: c * self.q,
            phi: self.phi.iter().map(|v| c * v).collect(),
            grid: self.grid.clone(),
        })
    }

    pub(crate) fn evaluator(&self, params: Params) -> Evaluator<'_> {
        Evaluator::new(&self.grid, params, self.lambda)
    }
}

/// Every scalar functional of one state at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub omega: f64,
    pub mass: f64,
    pub lp_pow: f64,
    pub dirichlet: f64,
    #[serde(rename = "Q")]
    pub quadratic: f64,
    pub energy: f64,
    #[serde(rename = "Q_omega")]
    pub quadratic_omega: f64,
    pub action: f64,
    pub nehari: f64,
    pub s_tilde: f64,
}

impl FunctionalReport {
    pub(crate) fn from_components(c: &Components, p: f64, omega: f64) -> Self {
        let energy = 0.5 * c.quadratic - c.lp_pow / p;
        let quadratic_omega = c.quadratic + omega * c.mass;
        Self {
            omega,
            mass: c.mass,
            lp_pow: c.lp_pow,
            dirichlet: c.dirichlet,
            quadratic: c.quadratic,
            energy,
            quadratic_omega,
            action: energy + 0.5 * omega * c.mass,
            nehari: quadratic_omega - c.lp_pow,
            s_tilde: (p - 2.0) / (2.0 * p) * c.lp_pow,
        }
    }
}

/// `‖u‖₂²`.
pub fn mass(state: &DecomposedState) -> f64 {
    let grid = &state.grid;
    let phi_sq = grid.dot(&state.phi, &state.phi);
    if state.q == 0.0 {
        return phi_sq;
    }
    let green = grid.sample(|r| green_unchecked(state.lambda, r));
    let phi_green = grid.dot(&state.phi, &green);
    phi_sq + 2.0 * state.q * phi_green + state.q.powi(2) / (8.0 * PI * state.lambda.sqrt())
}

/// The working decomposition parameter for evaluations: for α < 0 the
/// parameter must exceed `ω_α` so that `α + √λ/4π > 0`.
pub fn working_lambda_for_evaluation(lambda: f64, params: &Params) -> f64 {
    let wa = params.omega_alpha();
    if params.alpha < 0.0 && lambda <= wa {
        1.5 * wa + 1.0
    } else {
        lambda
    }
}

pub fn functionals(state: &DecomposedState, params: &Params, omega: f64) -> Result<FunctionalReport> {
    params.validate()?;
    let lambda = working_lambda_for_evaluation(state.lambda, params);
    let c = if lambda == state.lambda {
        state.evaluator(*params).components(&state.phi, state.q)
    } else {
        let moved = reparametrize(state, lambda)?;
        moved.evaluator(*params).components(&moved.phi, moved.q)
    };
    Ok(FunctionalReport::from_components(&c, params.p, omega))
}

/// Same `u`, regular part taken with respect to `G_{new_lambda}`.
pub fn reparametrize(state: &DecomposedState, new_lambda: f64) -> Result<DecomposedState> {
    if !(new_lambda.is_finite() && new_lambda > 0.0) {
        return Err(domain(format!("lambda must be positive, got {new_lambda}")));
    }
    if new_lambda == state.lambda || state.q == 0.0 {
        return Ok(DecomposedState {
            lambda: new_lambda,
            ..state.clone()
        });
    }
    let phi = state
        .grid
        .nodes()
        .iter()
        .zip(&state.phi)
        .map(|(&r, f)| {
            f + state.q * (green_unchecked(state.lambda, r) - green_unchecked(new_lambda, r))
        })
        .collect();
    DecomposedState::new(state.grid.clone(), new_lambda, state.q, phi)
}

/// `c` in the leading non-smooth term `-c r^{3-p}` of `φ_λ` at the origin,
/// fixed by `-Δ(-c r^{3-p}) = -(q/4π r)^{p-1}`.
fn leading_coefficient(q: f64, p: f64) -> f64 {
    (q / (4.0 * PI)).powf(p - 1.0) / ((3.0 - p) * (4.0 - p))
}

/// Mismatch in `φ_λ(0) = (α + √λ/4π) q`, relative to `max(q, 1)`.
///
/// `φ_λ(0⁺)` is the quadratic extrapolation through the three innermost
/// nodes, applied after removing the term `-c r^{3-p}` (which vanishes at
/// the origin but is not polynomial there).
pub fn boundary_residual(state: &DecomposedState, params: &Params) -> Result<f64> {
    if state.q <= 0.0 {
        return Err(Error::Precondition(
            "boundary condition is void for a state with zero charge".into(),
        ));
    }
    let c = leading_coefficient(state.q, params.p);
    let smooth: Vec<f64> = state.grid.nodes()[..3]
        .iter()
        .zip(&state.phi)
        .map(|(&x, f)| f + c * x.powf(3.0 - params.p))
        .collect();
    let phi0 = state.grid.extrapolate_origin(&smooth);
    let target = (params.alpha + state.lambda.sqrt() / (4.0 * PI)) * state.q;
    Ok((phi0 - target).abs() / state.q.max(1.0))
}

/// Node index of `r_5` on a quadratically graded grid.
pub const EL_FIRST_NODE: usize = 4;

/// Smallest checked radius: `r_max (5/n)²`, the 5th node of a quadratic grid.
/// Steeper gradings resolve the origin with more nodes and start later.
pub fn el_first_node(grid: &RadialGrid) -> usize {
    let n = grid.len();
    let r_min = grid.r_max() * ((EL_FIRST_NODE + 1) as f64 / n as f64).powi(2);
    let from_radius = grid.nodes().partition_point(|&x| x < r_min * (1.0 - 1e-12));
    from_radius.max(EL_FIRST_NODE)
}

/// Relative L² residual of `H_α u + ωu - |u|^{p-2}u` on
/// `r ∈ [r_min, 0.8 r_max]` (see [`el_first_node`]), with `H_α u = -Δφ_λ - qλG_λ`.
///
/// Near the origin `φ_λ` carries the term `ψ = -c r^{3-p}` with
/// `c = (q/4π)^{p-1} / ((3-p)(4-p))`, balancing `|qG|^{p-1}`. Its Laplacian
/// is taken in closed form and the difference stencil is applied to `φ - ψ`.
pub fn el_residual(state: &DecomposedState, params: &Params, omega: f64) -> Result<f64> {
    el_residual_from(state, params, omega, el_first_node(&state.grid))
}

/// [`el_residual`] with the check starting at node `first`.
pub fn el_residual_from(
    state: &DecomposedState,
    params: &Params,
    omega: f64,
    first: usize,
) -> Result<f64> {
    params.validate()?;
    let grid = &state.grid;
    let r = grid.nodes();
    let p = params.p;
    let lead = (state.q / (4.0 * PI)).powf(p - 1.0);
    let c = leading_coefficient(state.q, p);
    let smooth: Vec<f64> = r
        .iter()
        .zip(&state.phi)
        .map(|(&x, f)| f + c * x.powf(3.0 - p))
        .collect();
    let lap = grid.laplacian_radial(&smooth)?;
    let u = state.samples();
    let w = grid.weights();
    let (mut num, mut den) = (0.0, 0.0);
    for i in first.max(1)..r.len() - 1 {
        if r[i] > 0.8 * grid.r_max() {
            break;
        }
        let lap_phi = lap[i - 1] - lead * r[i].powf(1.0 - p);
        let hu = -lap_phi - state.q * state.lambda * green_unchecked(state.lambda, r[i]);
        let res = hu + omega * u[i] - u[i].abs().powf(p - 2.0) * u[i];
        num += w[i] * res * res;
        den += w[i] * u[i] * u[i];
    }
    if den == 0.0 {
        return Err(Error::Degenerate("zero state".into()));
    }
    Ok((num / den).sqrt())
}

/// Radially decreasing rearrangement of nonnegative nodal samples.
///
/// Each grid cell carries the cubic through its four nearest nodes, split at
/// its critical points into monotone pieces. The distribution function
/// `μ(t) = |{f > t}|` of that interpolant is exact piece by piece, and
/// `f*(r_i)` is the level where `μ` equals the ball volume `4πr_i³/3`.
/// A profile that is already non-increasing is returned unchanged.
pub fn decreasing_rearrangement(samples: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    grid.check_len(samples.len())?;
    if samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(domain("rearrangement requires finite nonnegative samples"));
    }
    if samples.windows(2).all(|w| w[1] <= w[0]) {
        return Ok(samples.to_vec());
    }
    let r = grid.nodes();
    let n = samples.len();

    let mut pieces = Vec::with_capacity(2 * n);
    for i in 0..n {
        let a = if i == 0 { 0.0 } else { r[i - 1] };
        let j0 = i.saturating_sub(2).min(n - 4);
        let cubic = Cubic::through(&r[j0..j0 + 4], &samples[j0..j0 + 4], 0.5 * (a + r[i]));
        let mut cuts = vec![a];
        cuts.extend(cubic.critical_points(a, r[i]));
        cuts.push(r[i]);
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                pieces.push(Piece::new(cubic, w[0], w[1]));
            }
        }
    }

    // Sweep the levels downward. Between consecutive piece endpoints the set
    // of pieces straddling the level is fixed, so μ is exact and monotone
    // on each band and can be inverted by bisection.
    let mut events: Vec<(f64, usize, bool)> = Vec::with_capacity(2 * pieces.len());
    for (k, pc) in pieces.iter().enumerate() {
        if pc.hi > 0.0 {
            events.push((pc.hi, k, true));
            events.push((pc.lo, k, false));
        }
    }
    events.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.2.cmp(&x.2)));

    let targets: Vec<f64> = r.iter().map(|&x| ball_volume(x)).collect();
    let mut out = vec![0.0; n];
    let mut next = 0;
    let mut full = 0.0;
    let mut active: Vec<usize> = Vec::new();
    let mut top = events.first().map_or(0.0, |e| e.0);
    let mut e = 0;
    while e < events.len() && next < n {
        let level = events[e].0;
        if level < top {
            let mu = |t: f64| full + active.iter().map(|&k| pieces[k].volume_above(t)).sum::<f64>();
            while next < n && targets[next] <= mu(level) {
                out[next] = invert(&mu, targets[next], level, top);
                next += 1;
            }
            top = level;
        }
        while e < events.len() && events[e].0 == level {
            let (_, k, enter) = events[e];
            if enter {
                active.push(k);
            } else {
                active.retain(|&j| j != k);
                full += pieces[k].volume;
            }
            e += 1;
        }
    }
    // levels at or below zero: whatever volume remains has f* = 0;
    // the running minimum only absorbs root-finding round-off
    for i in 1..n {
        out[i] = out[i].min(out[i - 1]);
    }
    Ok(out)
}

fn ball_volume(r: f64) -> f64 {
    4.0 / 3.0 * PI * r.powi(3)
}

/// Level `t` in `[lo, hi]` with `mu(t) = target`, for `mu` non-increasing.
fn invert(mu: &impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64) -> f64 {
    let g_hi = mu(hi) - target;
    if g_hi >= 0.0 {
        return hi;
    }
    illinois(|t| mu(t) - target, lo, hi, mu(lo) - target, g_hi)
}

/// Root of `g` bracketed by `[x0, x1]` with `g(x0)`, `g(x1)` of opposite sign
/// (or zero), by the Illinois variant of regula falsi.
fn illinois(g: impl Fn(f64) -> f64, mut x0: f64, mut x1: f64, mut g0: f64, mut g1: f64) -> f64 {
    if g0 == 0.0 {
        return x0;
    }
    if g1 == 0.0 {
        return x1;
    }
    let mut side = 0;
    for _ in 0..200 {
        let mut x = (x0 * g1 - x1 * g0) / (g1 - g0);
        if !(x > x0.min(x1) && x < x0.max(x1)) {
            x = 0.5 * (x0 + x1);
        }
        if (x1 - x0).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return x;
        }
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if (gx > 0.0) == (g1 > 0.0) {
            x1 = x;
            g1 = gx;
            if side == -1 {
                g0 *= 0.5;
            }
            side = -1;
        } else {
            x0 = x;
            g0 = gx;
            if side == 1 {
                g1 *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (x0 + x1)
}

/// Cubic `a0 + a1 y + a2 y² + a3 y³` in `y = x - center`.
#[derive(Debug, Clone, Copy)]
struct Cubic {
    center: f64,
    a: [f64; 4],
}

impl Cubic {
    fn through(xs: &[f64], fs: &[f64], center: f64) -> Self {
        // Newton divided differences, then expansion about `center`
        let c1 = [
            (fs[1] - fs[0]) / (xs[1] - xs[0]),
            (fs[2] - fs[1]) / (xs[2] - xs[1]),
            (fs[3] - fs[2]) / (xs[3] - xs[2]),
        ];
        let c2 = [(c1[1] - c1[0]) / (xs[2] - xs[0]), (c1[2] - c1[1]) / (xs[3] - xs[1])];
        let c3 = (c2[1] - c2[0]) / (xs[3] - xs[0]);
        let (c0, c1, c2) = (fs[0], c1[0], c2[0]);
        let d = [xs[0] - center, xs[1] - center, xs[2] - center];
        let a = [
            c0 - c1 * d[0] + c2 * d[0] * d[1] - c3 * d[0] * d[1] * d[2],
            c1 - c2 * (d[0] + d[1]) + c3 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]),
            c2 - c3 * (d[0] + d[1] + d[2]),
            c3,
        ];
        Cubic { center, a }
    }

    fn eval(&self, x: f64) -> f64 {
        let y = x - self.center;
        let a = &self.a;
        (a[0] + y * (a[1] + y * (a[2] + y * a[3]))).max(0.0)
    }

    /// Zeros of the derivative strictly inside `(lo, hi)`, ascending.
    fn critical_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (qa, qb, qc) = (3.0 * self.a[3], 2.0 * self.a[2], self.a[1]);
        let mut roots = Vec::new();
        if qa == 0.0 {
            if qb != 0.0 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                // numerically stable pair
                let s = -0.5 * (qb + qb.signum() * disc.sqrt());
                if s != 0.0 {
                    roots.push(s / qa);
                    roots.push(qc / s);
                } else {
                    roots.push(0.0);
                }
            }
        }
        let mut xs: Vec<f64> = roots
            .into_iter()
            .map(|y| y + self.center)
            .filter(|&x| x > lo && x < hi)
            .collect();
        xs.sort_by(f64::total_cmp);
        xs
    }
}

/// A monotone stretch `[a, b]` of a cell's cubic.
#[derive(Debug, Clone, Copy)]
struct Piece {
    cubic: Cubic,
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    increasing: bool,
    volume: f64,
}

impl Piece {
    fn new(cubic: Cubic, a: f64, b: f64) -> Self {
        let (fa, fb) = (cubic.eval(a), cubic.eval(b));
        Piece {
            cubic,
            a,
            b,
            lo: fa.min(fb),
            hi: fa.max(fb),
            increasing: fb > fa,
            volume: ball_volume(b) - ball_volume(a),
        }
    }

    /// Volume of the part of the shell where the cubic exceeds `t`.
    fn volume_above(&self, t: f64) -> f64 {
        if t >= self.hi {
            return 0.0;
        }
        if t < self.lo {
            return self.volume;
        }
        let (fa, fb) = (self.cubic.eval(self.a), self.cubic.eval(self.b));
        let x = illinois(|x| self.cubic.eval(x) - t, self.a, self.b, fa - t, fb - t);
        if self.increasing {
            ball_volume(self.b) - ball_volume(x)
        } else {
            ball_volume(x) - ball_volume(self.a)
        }
    }
}
