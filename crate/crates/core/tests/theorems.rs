//! Certification on real solves, and its response to tampered inputs.

use std::sync::OnceLock;

use pointnls::cli::{verify_status, ExitStatus};
use pointnls::solvers::SolveOptions;
use pointnls::state::Params;
use pointnls::verify::{check_theorems, run_pipeline, Pipeline};
use pointnls::Error;

fn pipeline() -> &'static Pipeline {
    static CELL: OnceLock<Pipeline> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = Params::new(2.5, 1.0).unwrap();
        run_pipeline(params, 1.0, 1500, &SolveOptions::default()).unwrap()
    })
}

fn recheck(pl: &Pipeline) -> pointnls::Result<pointnls::verify::TheoremReport> {
    check_theorems(
        &pl.ground_state,
        &pl.action,
        (&pl.soliton, &pl.nls_action),
        &pl.ground_state.params,
        1.0,
    )
}

#[test]
fn untouched_pipeline_passes() {
    let pl = pipeline();
    assert!(pl.report.overall, "{:?}", pl.report.failed().collect::<Vec<_>>());
    assert_eq!(verify_status(pl), ExitStatus::Success);
    assert_eq!(recheck(pl).unwrap(), pl.report);
}

#[test]
fn lowered_reference_energy_fails_the_energy_check() {
    let mut pl = pipeline().clone();
    pl.soliton.energy0 = pl.ground_state.report.energy - 1.0;
    let report = recheck(&pl).unwrap();
    assert!(!report.get("energy_below_soliton").unwrap().passed);
    assert!(!report.overall);
    pl.report = report;
    assert_eq!(verify_status(&pl), ExitStatus::CheckFailed);
}

#[test]
fn lowered_nls_action_fails_the_action_check() {
    let mut pl = pipeline().clone();
    pl.nls_action.action_level0 = 0.5 * pl.action.report.action;
    let report = recheck(&pl).unwrap();
    assert!(!report.get("action_below_nls").unwrap().passed);
    assert!(report.get("energy_below_soliton").unwrap().passed);
}

#[test]
fn unconverged_input_is_a_precondition_error() {
    let mut pl = pipeline().clone();
    pl.action.converged = false;
    assert!(matches!(recheck(&pl), Err(Error::Precondition(_))));
    assert_eq!(verify_status(&pl), ExitStatus::NotConverged);
}

#[test]
fn mismatched_action_state_breaks_consistency() {
    let mut pl = pipeline().clone();
    // an action state at a different frequency no longer matches S_ω(u_gs)
    let grid = pl.ground_state.state.grid().clone();
    let omega = 3.0 * pl.ground_state.omega_recovered;
    pl.action = pointnls::solvers::solve_action_min(pl.ground_state.params, omega, &grid, &SolveOptions::default())
        .unwrap();
    let report = recheck(&pl).unwrap();
    assert!(!report.get("action_consistency").unwrap().passed);
}
