//! Randomized invariants of the functionals, closed forms and window.

use std::f64::consts::PI;
use std::sync::Arc;

use pointnls::greens::{green_diff_grad_sq, green_diff_l2_sq, green_l2_sq};
use pointnls::grid::build_grid;
use pointnls::state::{functionals, mass, reparametrize, DecomposedState, Params};
use pointnls::verify::{lambda_window, window_bracket, WindowKind};
use proptest::prelude::*;

fn state(lambda: f64, q: f64, amp: f64, width: f64) -> DecomposedState {
    let grid = Arc::new(build_grid(800, 30.0, 2.0).unwrap());
    let phi = grid.sample(|r| amp * (-(r / width).powi(2)).exp());
    DecomposedState::new(grid, lambda, q, phi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn report_identities_hold(
        p in 2.01f64..2.99, alpha in -2.0f64..2.0, omega in 0.01f64..50.0,
        lambda in 0.1f64..20.0, q in 0.0f64..2.0, amp in 0.0f64..2.0, width in 0.5f64..3.0,
    ) {
        let params = Params::new(p, alpha).unwrap();
        let s = state(lambda, q, amp, width);
        prop_assume!(mass(&s) > 0.0);
        let r = functionals(&s, &params, omega).unwrap();
        let tol = 1e-12 * (1.0 + r.quadratic_omega.abs() + r.lp_pow + r.energy.abs());
        prop_assert!((r.action - (r.energy + 0.5 * omega * r.mass)).abs() <= tol);
        prop_assert!((r.nehari - (r.quadratic_omega - r.lp_pow)).abs() <= tol);
        prop_assert!((r.s_tilde - (p - 2.0) / (2.0 * p) * r.lp_pow).abs() <= tol);
        prop_assert!(r.mass >= 0.0 && r.lp_pow >= 0.0 && r.dirichlet >= 0.0);
    }

    #[test]
    fn decomposition_parameter_is_immaterial(
        p in 2.01f64..2.99, alpha in -1.0f64..1.0, lambda in 0.5f64..10.0,
        factor in 0.25f64..4.0, q in 0.01f64..1.0, width in 0.5f64..3.0,
    ) {
        let params = Params::new(p, alpha).unwrap();
        let s = state(lambda, q, 0.5, width);
        let moved = reparametrize(&s, lambda * factor).unwrap();
        let (a, b) = (functionals(&s, &params, 1.0).unwrap(), functionals(&moved, &params, 1.0).unwrap());
        prop_assert!((a.mass - b.mass).abs() < 1e-7 * a.mass);
        prop_assert!((a.energy - b.energy).abs() < 1e-6 * (1.0 + a.energy.abs()));
        prop_assert_eq!(moved.q(), s.q());
    }

    #[test]
    fn mass_is_quadratic(c in 0.01f64..10.0, q in 0.0f64..2.0) {
        let s = state(1.0, q, 0.7, 1.3);
        let scaled = s.scaled(c).unwrap();
        prop_assert!((mass(&scaled) - c * c * mass(&s)).abs() <= 1e-13 * c * c * mass(&s));
    }

    #[test]
    fn green_closed_forms_are_consistent(l in 0.01f64..100.0, nu in 0.01f64..100.0) {
        prop_assume!((l / nu - 1.0).abs() > 1e-6);
        let d = green_diff_l2_sq(l, nu).unwrap();
        prop_assert!((d - green_diff_l2_sq(nu, l).unwrap()).abs() <= 1e-14 * d);
        prop_assert!(d > 0.0);
        // ‖G_λ - G_ν‖² ≤ (‖G_λ‖ + ‖G_ν‖)²
        let bound = (green_l2_sq(l).unwrap().sqrt() + green_l2_sq(nu).unwrap().sqrt()).powi(2);
        prop_assert!(d <= bound);
        let g = green_diff_grad_sq(l, nu).unwrap();
        prop_assert!(g > 0.0 && (g - green_diff_grad_sq(nu, l).unwrap()).abs() <= 1e-13 * g);
    }

    #[test]
    fn window_endpoints_solve_the_bracket(alpha in -2.0f64..-0.01, frac in 0.01f64..0.99) {
        let wa = (4.0 * PI * alpha).powi(2);
        let omega = frac * wa;
        let w = lambda_window(omega, alpha).unwrap();
        prop_assert_eq!(w.kind, WindowKind::TwoComponents);
        let (l1, l2) = (w.lambda1.unwrap(), w.lambda2.unwrap());
        prop_assert!(l1 < l2);
        prop_assert!((l1 * l2 / (omega * omega) - 1.0).abs() < 1e-12);
        for l in [l1, l2] {
            prop_assert!(window_bracket(l, omega, alpha).abs() < 1e-9 * 8.0 * PI * alpha.abs());
        }
        let mid = (l1 * l2).sqrt();
        prop_assert!(window_bracket(mid, omega, alpha) < 0.0 && !w.contains(mid));
        prop_assert!(w.contains(0.5 * l1) && w.contains(2.0 * l2));
    }
}
