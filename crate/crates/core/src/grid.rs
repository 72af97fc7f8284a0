//! Graded radial mesh on `(0, r_max]` with quadrature weights for
//! `∫ f(|x|) dx = ∫₀^∞ f(r) 4πr² dr` and low-order radial operators.
//!
//! Nodes are `r_i = r_max (i/n)^γ`, i.e. uniform in the graded coordinate
//! `s = (r / r_max)^{1/γ}`. The quadrature is the trapezoid rule in `s`
//! applied to `f(r(s)) · 4πr² dr/ds`, with Gregory end corrections at both
//! ends. The jacobian vanishes at `s = 0`, so the origin carries no node.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters that fully determine a grid; this is what gets serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub r_max: f64,
    pub grading_exponent: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<RadialGrid> {
        build_grid(self.n, self.r_max, self.grading_exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    spec: GridSpec,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `4π ∫_{r_i}^{r_{i+1}} r² dr / (r_{i+1} - r_i)²` for each cell,
    /// the last entry belonging to the Dirichlet ghost cell beyond `r_max`.
    /// Only used as a tridiagonal approximation of the Dirichlet form.
    stiffness: Vec<f64>,
    dirichlet: Vec<GaussTerm>,
}

/// One Gauss point of the Dirichlet form: `weight · (Σ coef_j f_{start+j})²`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct GaussTerm {
    start: usize,
    coef: [f64; 4],
    weight: f64,
}

/// Derivatives at `x` of the Lagrange basis on four nodes.
fn lagrange_derivative(xs: &[f64; 4], x: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for a in 0..4 {
        let mut sum = 0.0;
        for k in (0..4).filter(|&k| k != a) {
            let mut term = 1.0 / (xs[a] - xs[k]);
            for b in (0..4).filter(|&b| b != a && b != k) {
                term *= (x - xs[b]) / (xs[a] - xs[b]);
            }
            sum += term;
        }
        out[a] = sum;
    }
    out
}

pub fn build_grid(n: usize, r_max: f64, grading_exponent: f64) -> Result<RadialGrid> {
    if n < 16 {
        return Err(Error::Argument(format!("grid needs n >= 16 nodes, got {n}")));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::Argument(format!("r_max must be positive, got {r_max}")));
    }
    if !(grading_exponent.is_finite() && grading_exponent >= 1.0) {
        return Err(Error::Argument(format!(
            "grading exponent must be >= 1, got {grading_exponent}"
        )));
    }
    let g = grading_exponent;
    let h = 1.0 / n as f64;
    let radius = |i: usize| r_max * (i as f64 * h).powf(g);

    let nodes: Vec<f64> = (1..=n).map(radius).collect();
    if !(nodes[0] > 0.0 && nodes.windows(2).all(|w| w[1] > w[0]) && radius(n + 2).is_finite()) {
        return Err(Error::Argument(format!(
            "grid (n = {n}, r_max = {r_max}, grading {g}) has coincident or non-finite nodes"
        )));
    }

    // jacobian of s -> r, including the 4πr² volume factor
    let jac = |s: f64| 4.0 * PI * g * r_max.powi(3) * s.powf(3.0 * g - 1.0);
    let mut weights: Vec<f64> = (1..=n).map(|i| h * jac(i as f64 * h)).collect();
    // Gregory: 3/8, 7/6, 23/24 at each end (the origin weight multiplies 0)
    weights[0] *= 7.0 / 6.0;
    weights[1] *= 23.0 / 24.0;
    weights[n - 1] *= 3.0 / 8.0;
    weights[n - 2] *= 7.0 / 6.0;
    weights[n - 3] *= 23.0 / 24.0;

    let ghost = |k: usize| if k < n { nodes[k] } else { radius(k + 1) };
    let mut stiffness = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (nodes[i], ghost(i + 1));
        let vol = 4.0 * PI * (b.powi(3) - a.powi(3)) / 3.0;
        stiffness.push(vol / (b - a).powi(2));
    }

    // Dirichlet form: on each cell [r_k, r_{k+1}] the derivative of the cubic
    // through the four surrounding nodes, squared and integrated by 2-point
    // Gauss. Two ghost nodes beyond r_max carry f = 0; the innermost cell
    // [0, r_1] has zero slope.
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut dirichlet = Vec::with_capacity(2 * n);
    for k in 0..n {
        let start = k.saturating_sub(1);
        let xs = [ghost(start), ghost(start + 1), ghost(start + 2), ghost(start + 3)];
        let (a, b) = (nodes[k], ghost(k + 1));
        for t in gauss {
            let x = a + t * (b - a);
            let mut coef = lagrange_derivative(&xs, x);
            for (j, c) in coef.iter_mut().enumerate() {
                if start + j >= n {
                    *c = 0.0;
                }
            }
            dirichlet.push(GaussTerm {
                start,
                coef,
                weight: 0.5 * (b - a) * 4.0 * PI * x * x,
            });
        }
    }

    Ok(RadialGrid {
        spec: GridSpec {
            n,
            r_max,
            grading_exponent,
        },
        nodes,
        weights,
        stiffness,
        dirichlet,
    })
}

impl RadialGrid {
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn r_max(&self) -> f64 {
        self.spec.r_max
    }

    pub fn grading_exponent(&self) -> f64 {
        self.spec.grading_exponent
    }

    pub(crate) fn stiffness(&self) -> &[f64] {
        &self.stiffness
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if found == self.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.len(),
                found,
            })
        }
    }

    /// Samples a function at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// Approximates `∫₀^∞ f(r) 4πr² dr` from samples at the nodes.
    pub fn quad(&self, samples: &[f64]) -> Result<f64> {
        self.check_len(samples.len())?;
        Ok(self.quad_unchecked(samples))
    }

    pub(crate) fn quad_unchecked(&self, samples: &[f64]) -> f64 {
        self.weights.iter().zip(samples).map(|(w, f)| w * f).sum()
    }

    /// Weighted inner product `∫ f g dx`.
    pub(crate) fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// `4π ∫ f'(r)² r² dr` with piecewise-linear interpolation between
    /// nodes, zero slope on the innermost cell and `f = 0` imposed at the
    /// first node beyond `r_max`.
    pub fn grad_l2_sq(&self, samples: &[f64]) -> Result<f64> {
        self.check_len(samples.len())?;
        Ok(self.grad_l2_sq_unchecked(samples))
    }

    /// As [`grad_l2_sq`](Self::grad_l2_sq), also reporting whether the tail
    /// sample fails the decay check `|f(r_max)| < 1e-6 max|f|`.
    pub fn grad_l2_sq_checked(&self, samples: &[f64]) -> Result<(f64, bool)> {
        let value = self.grad_l2_sq(samples)?;
        Ok((value, !tail_decayed(samples)))
    }

    pub(crate) fn grad_l2_sq_unchecked(&self, f: &[f64]) -> f64 {
        self.dirichlet
            .iter()
            .map(|t| {
                let d: f64 = (0..4)
                    .filter(|j| t.start + j < f.len())
                    .map(|j| t.coef[j] * f[t.start + j])
                    .sum();
                t.weight * d * d
            })
            .sum()
    }

    /// `y = S f` where `f·S f` is [`grad_l2_sq`](Self::grad_l2_sq).
    pub(crate) fn stiffness_apply(&self, f: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let n = f.len();
        for t in &self.dirichlet {
            let end = (t.start + 4).min(n);
            let d: f64 = (t.start..end).map(|j| t.coef[j - t.start] * f[j]).sum();
            for j in t.start..end {
                y[j] += t.weight * d * t.coef[j - t.start];
            }
        }
    }

    /// `y = S₁ f` for the tridiagonal piecewise-linear stiffness `S₁`.
    #[cfg(test)]
    fn p1_apply(&self, f: &[f64], y: &mut [f64]) {
        let n = f.len();
        let c = &self.stiffness;
        for i in 0..n {
            let mut v = c[i] * f[i];
            if i + 1 < n {
                v -= c[i] * f[i + 1];
            }
            if i > 0 {
                v += c[i - 1] * (f[i] - f[i - 1]);
            }
            y[i] = v;
        }
    }

    /// Radial Laplacian `Δf = (1/r)(r f)''` at the interior nodes
    /// `r_2 … r_{N-1}` (the returned vector has `N - 2` entries).
    ///
    /// `(r f)'' = r f'' + 2 f'` is taken from the local quadratic interpolant
    /// of `f` through three neighbouring nodes, which is exact for quadratics.
    pub fn laplacian_radial(&self, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_len(samples.len())?;
        let r = &self.nodes;
        let f = samples;
        let mut out = Vec::with_capacity(r.len().saturating_sub(2));
        for i in 1..r.len() - 1 {
            let (hm, hp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let (dp, dm) = (f[i + 1] - f[i], f[i] - f[i - 1]);
            let denom = hm * hp * (hm + hp);
            let d2 = 2.0 * (hm * dp - hp * dm) / denom;
            let d1 = (hm * hm * dp + hp * hp * dm) / denom;
            out.push(d2 + 2.0 * d1 / r[i]);
        }
        Ok(out)
    }

    /// Value at `r = 0⁺` of the quadratic through the three innermost nodes.
    pub fn extrapolate_origin(&self, samples: &[f64]) -> f64 {
        let (r1, r2, r3) = (self.nodes[0], self.nodes[1], self.nodes[2]);
        let l1 = r2 * r3 / ((r1 - r2) * (r1 - r3));
        let l2 = r1 * r3 / ((r2 - r1) * (r2 - r3));
        let l3 = r1 * r2 / ((r3 - r1) * (r3 - r2));
        l1 * samples[0] + l2 * samples[1] + l3 * samples[2]
    }

    /// Volume of the ball of radius `r_max`.
    pub fn ball_volume(&self) -> f64 {
        4.0 * PI * self.spec.r_max.powi(3) / 3.0
    }
}

pub(crate) fn tail_decayed(f: &[f64]) -> bool {
    let max = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    match f.last() {
        Some(last) => max == 0.0 || last.abs() < 1e-6 * max,
        None => true,
    }
}

/// Solves the symmetric tridiagonal system `(S₁ + diag(d)) x = b` in place,
/// where `S₁` is the piecewise-linear stiffness matrix of the grid.
pub(crate) fn solve_shifted_stiffness(grid: &RadialGrid, diag: &[f64], b: &mut [f64]) {
    let n = b.len();
    let c = grid.stiffness();
    // main diagonal: c[i] + c[i-1] + d[i]; off diagonal: -c[i]
    let mut cp = vec![0.0; n];
    let mut denom = c[0] + diag[0];
    cp[0] = -c[0] / denom;
    b[0] /= denom;
    for i in 1..n {
        let main = c[i] + c[i - 1] + diag[i];
        denom = main + c[i - 1] * cp[i - 1];
        if i + 1 < n {
            cp[i] = -c[i] / denom;
        }
        b[i] = (b[i] + c[i - 1] * b[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        b[i] -= cp[i] * b[i + 1];
    }
}
