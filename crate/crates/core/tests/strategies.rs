mod common;

use common::{calm, farm, synthetic_grids, toy_grids};
use offshore_om::access::Daylight;
use offshore_om::eval::{run_scenario, TrueAccess};
use offshore_om::host::{assemble, IterationInputs, ModelOptions};
use offshore_om::params::MaintenanceKind;
use offshore_om::rolling::{believed_access, run_with, AccessBelief, Planner, RollingState};
use offshore_om::strategies::{RulePlanner, Strategy};
use om_milp::SolverConfig;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn strategy_names_round_trip() {
    for k in Strategy::ALL {
        assert_eq!(k.label().to_lowercase().parse::<Strategy>().unwrap(), k);
    }
    assert!("nope".parse::<Strategy>().is_err());
}

#[test]
fn cms_ignores_a_healthy_fleet() {
    let inst = farm(&[3, 6]);
    let g = toy_grids(2, 8, 0.5, 80.0, calm(8));
    let state = RollingState::new(&inst, 8, &[]).unwrap();
    let plan = RulePlanner::corrective().plan(&inst, &g, &state).unwrap();
    assert!(plan.actions.is_empty());
    assert!(!plan.vessel);
}

#[test]
fn cms_repairs_at_the_first_daylight_slot() {
    // failed at the end of day 1, daylight from 08:00
    let inst = farm(&[1]);
    let mut g = toy_grids(1, 4, 0.5, 80.0, |_, _| true);
    g.access.daylight = Daylight { start: 8, end: 20 };
    let mut state = RollingState::new(&inst, 4, &[]).unwrap();
    state.iteration = 2;
    let plan = RulePlanner::corrective().plan(&inst, &g, &state).unwrap();
    assert_eq!(plan.actions.len(), 1);
    assert_eq!(plan.actions[0].start, 24 + 8);
    assert_eq!(plan.actions[0].kind, MaintenanceKind::Corrective);
}

#[test]
fn cms_never_does_preventive_work() {
    let inst = offshore_om::params::FarmInstance::case_study_one();
    let grids = synthetic_grids(&inst);
    let run = run_scenario(&inst, &grids, 0, 60, &[], Strategy::Cms, &cfg()).unwrap();
    assert_eq!(run.metrics.pm_actions, 0);
    assert_eq!(run.metrics.cm_actions, 10);
}

#[test]
fn tbs_plans_on_the_last_day_before_the_rle() {
    let inst = farm(&[5]);
    let g = toy_grids(1, 8, 0.5, 80.0, calm(8));
    let mut tbs = RulePlanner::time_based();
    let out = run_with(&inst, &g, 8, &[], &mut tbs, &mut TrueAccess).unwrap();
    let planned: Vec<_> = out.plans.iter().filter(|p| !p.actions.is_empty()).collect();
    assert_eq!(planned.len(), 1);
    assert_eq!(planned[0].iteration, 5);
    assert_eq!(planned[0].actions[0].start, 4 * 24 + 6);
    assert_eq!(out.executed[0].kind, MaintenanceKind::Preventive);
}

#[test]
fn tbs_abort_turns_into_a_corrective_repair() {
    // weather closes day 5 only
    let inst = farm(&[5]);
    let g = toy_grids(1, 9, 0.5, 80.0, |i, t| t / 24 != 4 && calm(8)(i, t));
    let run = offshore_om::eval::ExecutionLog::from_schedule(
        &inst,
        &run_with(
            &inst,
            &g,
            9,
            &[],
            &mut RulePlanner::time_based(),
            &mut TrueAccess,
        )
        .unwrap(),
    );
    assert_eq!(run.aborted.len(), 1);
    assert_eq!(run.aborted[0].start, 4 * 24 + 6);
    assert_eq!(run.executed.len(), 1);
    assert_eq!(run.executed[0].kind, MaintenanceKind::Corrective);
    assert_eq!(run.executed[0].start, 5 * 24 + 6);
    assert_eq!(run.rental_days, vec![5, 6]);
    assert_eq!(run.dispatched_days, vec![6]);
}

#[test]
fn tbs_rents_one_vessel_per_task_without_grouping() {
    let inst = farm(&[2, 4, 6]);
    let g = toy_grids(3, 8, 0.5, 80.0, calm(8));
    let out = run_with(
        &inst,
        &g,
        8,
        &[],
        &mut RulePlanner::time_based(),
        &mut TrueAccess,
    )
    .unwrap();
    let log = offshore_om::eval::ExecutionLog::from_schedule(&inst, &out);
    assert_eq!(log.rental_days, vec![2, 4, 6]);
}

/// Constraint-by-constraint differences between two assembled models.
fn model_diff(a: &om_milp::MilpModel, b: &om_milp::MilpModel) -> Vec<String> {
    assert_eq!(a.num_vars(), b.num_vars());
    assert_eq!(a.num_constraints(), b.num_constraints());
    let mut out = Vec::new();
    for (x, y) in a.vars().iter().zip(b.vars()) {
        if x != y {
            out.push(format!("var {}", x.name));
        }
    }
    for (x, y) in a.constraints().iter().zip(b.constraints()) {
        assert_eq!(x.name, y.name);
        if x.relation != y.relation || x.expr != y.expr {
            out.push(format!("row {}", x.name));
        } else if x.rhs != y.rhs {
            out.push(format!("rhs {}", x.name));
        }
    }
    out
}

#[test]
fn benchmarks_differ_from_host_only_where_stated() {
    let inst = offshore_om::params::FarmInstance::case_study_one();
    let grids = synthetic_grids(&inst).window(20, 60).unwrap();
    let state = RollingState::new(&inst, 60, &[]).unwrap();
    let hs = state.horizon_state().unwrap();
    let build = |belief, opts: &ModelOptions| {
        let access = believed_access(belief, &inst, &grids);
        let inp = IterationInputs::from_grids(&grids, &access, &hs).unwrap();
        assemble(&inst, &hs, &inp, opts).unwrap().0
    };
    let host = build(AccessBelief::Forecast, &ModelOptions::default());
    let besn = build(AccessBelief::WeatherBlind, &ModelOptions::default());
    let pbos = build(
        AccessBelief::WeatherBlind,
        &ModelOptions {
            vessel_cost: Some(0.0),
            ..ModelOptions::default()
        },
    );
    let d = model_diff(&host, &besn);
    assert!(!d.is_empty(), "this window has closed hours");
    assert!(d.iter().all(|s| s.starts_with("rhs access")), "{d:?}");
    let d = model_diff(&besn, &pbos);
    assert!(!d.is_empty());
    assert!(d.iter().all(|s| s.starts_with("row profit")), "{d:?}");
}

#[test]
fn besn_matches_host_in_calm_weather() {
    let inst = farm(&[2, 3, 5]);
    let g = toy_grids(3, 7, 0.5, 80.0, calm(8));
    let host = run_scenario(&inst, &g, 0, 7, &[], Strategy::Host, &cfg()).unwrap();
    let besn = run_scenario(&inst, &g, 0, 7, &[], Strategy::Besn, &cfg()).unwrap();
    assert!(
        (host.metrics.total_cost - besn.metrics.total_cost).abs() < 1e-6 * host.metrics.total_cost
    );
    assert_eq!(host.metrics.vessel_rentals, besn.metrics.vessel_rentals);
    assert_eq!(besn.metrics.aborts, 0);
}

#[test]
fn pbos_puts_work_into_the_lull() {
    // windy everywhere except day 3, when the farm barely turns
    // two crews fit two 8 h tasks in a day
    let inst = farm(&[4, 5]);
    let mut g = toy_grids(2, 7, 0.9, 80.0, calm(8));
    for i in 0..2 {
        for t in 48..72 {
            g.power[i][t] = 0.05;
        }
        g.power_daily[i][2] = 0.05;
    }
    let run = run_scenario(&inst, &g, 0, 7, &[], Strategy::Pbos, &cfg()).unwrap();
    assert_eq!(run.log.executed.len(), 2);
    assert!(
        run.log.executed.iter().all(|a| a.start / 24 == 2),
        "{:?}",
        run.log.executed
    );
}

#[test]
fn access_blind_plan_into_a_storm_aborts() {
    let inst = farm(&[3]);
    // closed on days 1-2; the calm day 3 holds the lowest production
    let mut g = toy_grids(1, 6, 0.8, 80.0, |i, t| t >= 48 && calm(8)(i, t));
    for t in 0..24 {
        g.power[0][t] = 0.01;
    }
    g.power_daily[0][0] = 0.01;
    let run = run_scenario(&inst, &g, 0, 6, &[], Strategy::Pbos, &cfg()).unwrap();
    assert!(!run.log.aborted.is_empty());
    assert!(run.log.aborted[0].start < 24);
    let host = run_scenario(&inst, &g, 0, 6, &[], Strategy::Host, &cfg()).unwrap();
    assert!(host.log.aborted.is_empty());
}
