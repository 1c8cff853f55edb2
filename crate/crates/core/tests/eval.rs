mod common;

use common::{calm, farm, synthetic_grids, toy_grids};
use offshore_om::eval::*;
use offshore_om::host::{solve_iteration, HorizonState, IterationInputs, ModelOptions};
use offshore_om::params::{FarmInstance, MaintenanceKind};
use offshore_om::strategies::Strategy;
use om_milp::SolverConfig;
use proptest::prelude::*;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn windless_pm_costs_downtime_but_no_energy() {
    let inst = farm(&[1]);
    let g = toy_grids(1, 2, 0.0, 80.0, calm(8));
    let run = run_scenario(&inst, &g, 0, 2, &[], Strategy::Host, &cfg()).unwrap();
    let m = &run.metrics;
    assert_eq!(m.pm_actions, 1);
    assert_eq!(m.downtime_hours, 8.0);
    assert_eq!(m.production_loss_mwh, 0.0);
    assert_eq!(m.lost_revenue, 0.0);
    let c = &inst.costs;
    let want = c.pm + 8.0 * c.crew_hourly + c.vessel_daily;
    assert!(
        (m.total_cost - want).abs() < 1e-9,
        "{} vs {want}",
        m.total_cost
    );
}

#[test]
fn corrective_downtime_runs_from_failure_to_repair_end() {
    let inst = farm(&[2]);
    let g = toy_grids(1, 4, 0.5, 80.0, |_, _| true);
    let run = run_scenario(&inst, &g, 0, 4, &[], Strategy::Cms, &cfg()).unwrap();
    assert_eq!(run.log.executed.len(), 1);
    let a = &run.log.executed[0];
    assert_eq!(a.kind, MaintenanceKind::Corrective);
    assert_eq!(a.start / 24, 2, "repaired on the day after the failure");
    let gap = (a.end() - 48) as f64;
    assert_eq!(run.metrics.downtime_hours, gap);
    assert_eq!(run.metrics.access_downtime_hours, 0.0);
    assert!((run.metrics.production_loss_mwh - gap * 0.5 * inst.rated_mw).abs() < 1e-9);
}

#[test]
fn utilization_counts_dispatch_days_over_rentals() {
    let inst = farm(&[3]);
    let g = toy_grids(1, 8, 0.5, 80.0, calm(8));
    let log = ExecutionLog {
        horizon_days: 8,
        executed: Vec::new(),
        aborted: Vec::new(),
        rental_days: vec![1, 2, 3, 4, 5, 6],
        dispatched_days: vec![1, 2, 3, 5, 6],
        overtime_hours: 0.0,
        available: vec![vec![true; 24 * 8]],
        failed: vec![vec![false; 24 * 8]],
    };
    let m = compute_metrics(&inst, &g, &log).unwrap();
    assert!((m.utilization - 500.0 / 6.0).abs() < 1e-9);
    assert_eq!(m.vessel_cost, 6.0 * inst.costs.vessel_daily);
    assert_eq!(m.total_cost, m.vessel_cost);

    let idle = ExecutionLog {
        rental_days: vec![],
        dispatched_days: vec![],
        ..log.clone()
    };
    assert_eq!(
        compute_metrics(&inst, &g, &idle).unwrap().utilization,
        100.0
    );

    let short = ExecutionLog {
        available: vec![vec![true; 24]],
        ..log
    };
    assert!(matches!(
        compute_metrics(&inst, &g, &short),
        Err(EvalError::LogGap { .. })
    ));
}

#[test]
fn curtailment_caps_the_lost_revenue() {
    // half the farm's potential is curtailed all day: losing one of two
    // turbines costs nothing
    let inst = farm(&[1, 9]);
    let mut g = toy_grids(2, 2, 0.5, 80.0, |i, t| i == 0 && calm(8)(i, t));
    g.curtailment = vec![0.5; 48];
    let log = ExecutionLog {
        horizon_days: 2,
        executed: Vec::new(),
        aborted: Vec::new(),
        rental_days: vec![],
        dispatched_days: vec![],
        overtime_hours: 0.0,
        available: vec![
            (0..48).map(|t| !(6..14).contains(&t)).collect(),
            vec![true; 48],
        ],
        failed: vec![vec![false; 48]; 2],
    };
    let m = compute_metrics(&inst, &g, &log).unwrap();
    assert_eq!(m.downtime_hours, 8.0);
    assert!((m.production_loss_mwh - 8.0 * 6.0).abs() < 1e-9);
    assert_eq!(m.lost_revenue, 0.0);
}

#[test]
fn host_operating_cost_matches_the_planned_sth_costs() {
    let inst = FarmInstance::case_study_one();
    let grids = synthetic_grids(&inst);
    let run = run_scenario(&inst, &grids, 3, 60, &[], Strategy::Host, &cfg()).unwrap();
    assert_eq!(run.metrics.aborts, 0);
    let planned: f64 = run
        .schedule
        .plans
        .iter()
        .filter_map(|p| p.solve.as_ref())
        .map(|s| s.sth_cost)
        .sum();
    let got = run.metrics.operating_cost();
    assert!(
        (got - planned).abs() <= 1e-6 * planned,
        "metrics {got} vs planned {planned}"
    );
}

#[test]
fn weather_blind_pm_into_a_storm_becomes_corrective() {
    // open only on windy day 1, storm on days 2-6, calm after; days 2-3
    // are a production lull
    let inst = farm(&[3]);
    let mut g = toy_grids(1, 8, 0.8, 80.0, |i, t| {
        !(24..6 * 24).contains(&t) && calm(8)(i, t)
    });
    for t in 24..72 {
        g.power[0][t] = 0.05;
    }
    g.power_daily[0][1] = 0.05;
    g.power_daily[0][2] = 0.05;
    let besn = run_scenario(&inst, &g, 0, 8, &[], Strategy::Besn, &cfg()).unwrap();
    assert!(besn.metrics.aborts >= 1);
    assert_eq!(besn.metrics.pm_actions, 0);
    assert_eq!(besn.metrics.cm_actions, 1);
    assert!(
        besn.metrics.downtime_hours >= 72.0,
        "{}",
        besn.metrics.downtime_hours
    );
    assert!(besn.metrics.access_downtime_hours > 0.0);

    let host = run_scenario(&inst, &g, 0, 8, &[], Strategy::Host, &cfg()).unwrap();
    assert_eq!(host.metrics.pm_actions, 1);
    assert_eq!(host.metrics.downtime_hours, 8.0);
    assert!(host.metrics.total_cost < besn.metrics.total_cost);
}

#[test]
fn calm_weather_rentals() {
    let inst = farm(&[2, 3, 5, 6]);
    let g = toy_grids(4, 8, 0.5, 80.0, calm(8));
    let rentals: Vec<(Strategy, usize)> = Strategy::ALL
        .iter()
        .map(|&k| {
            let r = run_scenario(&inst, &g, 0, 8, &[], k, &cfg()).unwrap();
            (k, r.metrics.vessel_rentals)
        })
        .collect();
    let host = rentals[0].1;
    assert_eq!(rentals[1], (Strategy::Besn, host));
    assert!(rentals.iter().all(|&(_, r)| host <= r), "{rentals:?}");
}

#[test]
fn benchmark_report_means_and_improvement() {
    let inst = farm(&[2, 4]);
    let g = toy_grids(2, 12, 0.5, 80.0, calm(8));
    let spec = BenchmarkSpec {
        horizon_days: 6,
        scenarios: 3,
        strategies: vec![Strategy::Host, Strategy::Tbs],
        events: vec![],
        solver: cfg(),
    };
    let rep = run_benchmark(&inst, &g, &spec).unwrap();
    assert_eq!(rep.cells.len(), 6);
    let tbs = rep
        .summaries
        .iter()
        .find(|s| s.strategy == Strategy::Tbs)
        .unwrap();
    let mean: f64 = (0..3)
        .map(|s| rep.cell(s, Strategy::Tbs).unwrap().metrics.total_cost)
        .sum::<f64>()
        / 3.0;
    assert!((tbs.mean.total_cost - mean).abs() < 1e-9);
    let host = rep
        .summaries
        .iter()
        .find(|s| s.strategy == Strategy::Host)
        .unwrap();
    let want = 100.0 * (mean - host.mean.total_cost) / mean;
    assert_eq!(rep.improvement, vec![(Strategy::Tbs, want)]);
    assert!(want >= 0.0);

    let long = BenchmarkSpec {
        scenarios: 8,
        ..spec
    };
    assert!(matches!(
        run_benchmark(&inst, &g, &long),
        Err(EvalError::InsufficientData { .. })
    ));
}

#[test]
fn improvement_is_relative_to_the_benchmark() {
    assert_eq!(improvement_pct(90.0, 100.0), 10.0);
    assert_eq!(improvement_pct(120.0, 100.0), -20.0);
}

#[test]
fn runs_are_deterministic() {
    let inst = FarmInstance::case_study_one();
    let grids = synthetic_grids(&inst);
    let a = run_scenario(&inst, &grids, 5, 60, &[], Strategy::Besn, &cfg()).unwrap();
    let b = run_scenario(&inst, &grids, 5, 60, &[], Strategy::Besn, &cfg()).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn relaxed_assignment_count_has_a_closed_form() {
    // 18 starts per turbine; subtract triples whose span is under 7 h
    let clash: usize = 18 + (1..7).map(|r| 6 * r * (18 - r)).sum::<usize>();
    assert_eq!(18usize.pow(3) - clash, 4092);
    assert_eq!(relaxed_count_closed_form(18, 7), 4092);
    let starts = vec![(0..18).collect::<Vec<_>>(); 3];
    assert_eq!(count_two_crew_triples(&starts, 7), 4092);
}

#[test]
fn sensitivity_study_on_synthetic_data() {
    let inst = sensitivity_instance();
    let grids = synthetic_grids(&inst);
    let day = first_open_day(&inst, &grids).expect("an open day");
    let relaxed = sensitivity_shift(&inst, &grids, day, true).unwrap();
    assert_eq!(relaxed.count, 4092);
    assert_eq!(relaxed.losses.len(), 4092);
    assert_eq!(relaxed.losses[0], 0.0);
    assert!(relaxed.losses.iter().all(|&l| l >= 0.0));
    assert!(relaxed.q1 <= relaxed.q2 && relaxed.q2 <= relaxed.q3 && relaxed.q3 <= relaxed.mad);
    assert!((0.0..=1.0).contains(&relaxed.nmad));
    let mean = relaxed.losses.iter().sum::<f64>() / 4092.0;
    assert!((relaxed.nmad - mean / relaxed.mad).abs() < 1e-12);

    let strict = sensitivity_shift(&inst, &grids, day, false).unwrap();
    let starts = candidate_starts(&inst, &grids, day, false);
    assert_eq!(strict.count, count_two_crew_triples(&starts, 7));
    assert!(strict.count <= relaxed.count);
    assert!(strict.optimum_lost_revenue >= relaxed.optimum_lost_revenue - 1e-9);
}

#[test]
fn sensitivity_optimum_agrees_with_the_milp() {
    let inst = sensitivity_instance();
    let full = synthetic_grids(&inst);
    let day = first_open_day(&inst, &full).unwrap();
    let stats = sensitivity_shift(&inst, &full, day, true).unwrap();

    // one-day horizon, curtailment off, every task-fitting start allowed
    let mut g = full.window(day, 1).unwrap();
    g.curtailment = vec![1.0; 24];
    for row in &mut g.access.hourly {
        for (k, a) in row.iter_mut().enumerate() {
            *a = k + 7 <= 24;
        }
    }
    let hs = HorizonState::new(1, 1, vec![true; 3], vec![1; 3]).unwrap();
    let inp = IterationInputs::from_grids(&g, &g.access, &hs).unwrap();
    let res = solve_iteration(
        &inst,
        &hs,
        &inp,
        &ModelOptions::default(),
        &SolverConfig::exact(),
    )
    .unwrap();
    assert_eq!(res.schedule.sth.len(), 3);
    let milp: f64 = res
        .schedule
        .sth
        .iter()
        .map(|a| task_lost_revenue(&inst, &full, day, a.turbine, a.start))
        .sum();
    let tol = 1e-6 * stats.optimum_lost_revenue.max(1.0);
    assert!(
        (milp - stats.optimum_lost_revenue).abs() <= tol,
        "milp {milp} vs enumeration {}",
        stats.optimum_lost_revenue
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triple_count_matches_enumeration(mask in proptest::collection::vec(proptest::bits::u32::between(0, 18), 3)) {
        let starts: Vec<Vec<usize>> = mask.iter().map(|m| (0..18).filter(|k| m & (1 << k) != 0).collect()).collect();
        let brute = {
            let mut c = 0;
            for &a in &starts[0] { for &b in &starts[1] { for &d in &starts[2] {
                let ok = (0..24).all(|h| [a, b, d].iter().filter(|&&s| s <= h && h < s + 7).count() <= 2);
                c += ok as usize;
            }}}
            c
        };
        prop_assert_eq!(count_two_crew_triples(&starts, 7), brute);
    }

    #[test]
    fn quantiles_are_monotone(mut v in proptest::collection::vec(0.0f64..1e4, 1..40)) {
        v.sort_by(f64::total_cmp);
        let qs: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&q| quantile(&v, q)).collect();
        prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(qs[0], v[0]);
        prop_assert_eq!(qs[4], *v.last().unwrap());
    }

    #[test]
    fn metrics_are_consistent(rles in proptest::collection::vec(1u32..5, 1..4), closed in 0usize..3, k in 0usize..5) {
        let inst = farm(&rles);
        let n = rles.len();
        let g = toy_grids(n, 6, 0.6, 70.0, move |i, t| !(24..24 * (1 + closed)).contains(&t) && calm(8)(i, t));
        let run = run_scenario(&inst, &g, 0, 6, &[], Strategy::ALL[k], &cfg()).unwrap();
        let m = &run.metrics;
        prop_assert!((m.total_cost - m.operating_cost() - m.lost_revenue).abs() < 1e-6);
        prop_assert!(m.access_downtime_hours <= m.downtime_hours);
        prop_assert!((0.0..=100.0).contains(&m.utilization));
        prop_assert!(m.lost_revenue >= -1e-9);
        let busy: f64 = run.log.executed.iter().map(|a| f64::from(a.duration)).sum();
        prop_assert!(m.downtime_hours >= busy);
        prop_assert_eq!(m.pm_actions + m.cm_actions, run.log.executed.len());
    }
}
