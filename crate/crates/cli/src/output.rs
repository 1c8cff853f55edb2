//! Plot-ready CSV and JSON writers. Everything here is deterministic: no
//! timings, fixed float formatting, sorted rows.

use std::fmt::Write as _;

use offshore_om::eval::{BenchmarkReport, Metrics, ScenarioRun, SensitivityStats};
use offshore_om::rolling::FullSchedule;
use offshore_om::strategies::Strategy;
use serde_json::{json, Value};

const METRIC_COLUMNS: &str = "strategy,scenarios,vessel_rentals,utilization_pct,downtime_h,\
access_downtime_h,production_loss_mwh,pm,cm,aborts,maintenance_cost,crew_cost,overtime_cost,\
vessel_cost,lost_revenue,total_cost,host_improvement_pct";

fn metric_row(
    out: &mut String,
    label: &str,
    scenarios: usize,
    m: &Metrics,
    counts: [f64; 4],
    imp: Option<f64>,
) {
    let [rentals, pm, cm, aborts] = counts;
    let _ = writeln!(
        out,
        "{label},{scenarios},{rentals:.2},{:.2},{:.2},{:.2},{:.3},{pm:.2},{cm:.2},{aborts:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{}",
        m.utilization,
        m.downtime_hours,
        m.access_downtime_hours,
        m.production_loss_mwh,
        m.maintenance_cost,
        m.crew_cost,
        m.overtime_cost,
        m.vessel_cost,
        m.lost_revenue,
        m.total_cost,
        imp.map_or(String::new(), |v| format!("{v:.2}")),
    );
}

/// One row per strategy, means over scenarios.
pub fn metrics_csv(header: &str, report: &BenchmarkReport) -> String {
    let mut out = String::from(header);
    out.push_str(METRIC_COLUMNS);
    out.push('\n');
    for s in &report.summaries {
        let imp = report
            .improvement
            .iter()
            .find(|(k, _)| *k == s.strategy)
            .map(|&(_, v)| v);
        metric_row(
            &mut out,
            s.strategy.label(),
            s.scenarios,
            &s.mean,
            [s.mean_rentals, s.mean_pm, s.mean_cm, s.mean_aborts],
            imp,
        );
    }
    out
}

/// Metrics of a single run in the same columns.
pub fn run_metrics_csv(header: &str, run: &ScenarioRun) -> String {
    let m = &run.metrics;
    let mut out = String::from(header);
    out.push_str(METRIC_COLUMNS);
    out.push('\n');
    metric_row(
        &mut out,
        run.strategy.label(),
        1,
        m,
        [
            m.vessel_rentals as f64,
            m.pm_actions as f64,
            m.cm_actions as f64,
            m.aborts as f64,
        ],
        None,
    );
    out
}

/// Total cost per scenario (rows) and strategy (columns).
pub fn costs_by_scenario_csv(header: &str, report: &BenchmarkReport) -> String {
    let strategies: Vec<Strategy> = report.summaries.iter().map(|s| s.strategy).collect();
    let mut scenarios: Vec<usize> = report.cells.iter().map(|c| c.scenario).collect();
    scenarios.dedup();
    let mut out = String::from(header);
    out.push_str("scenario");
    for k in &strategies {
        let _ = write!(out, ",{}", k.label());
    }
    out.push('\n');
    for s in scenarios {
        let _ = write!(out, "{s}");
        for &k in &strategies {
            match report.cell(s, k) {
                Some(c) => {
                    let _ = write!(out, ",{:.2}", c.metrics.total_cost);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Planned and carried-out actions; turbines and days 1-based.
pub fn schedule_csv(header: &str, scenario: usize, sched: &FullSchedule) -> String {
    let mut out = String::from(header);
    out.push_str("strategy,scenario,iteration,turbine,kind,day,hour,duration_h,outcome\n");
    for (plan, done) in sched.plans.iter().zip(&sched.outcomes) {
        for (a, &ok) in plan.actions.iter().zip(done) {
            let _ = writeln!(
                out,
                "{},{scenario},{},{},{},{},{},{},{}",
                sched.strategy,
                plan.iteration,
                a.turbine + 1,
                a.kind.label(),
                a.start / 24 + 1,
                a.start % 24,
                a.duration,
                if ok { "executed" } else { "aborted" }
            );
        }
    }
    out
}

/// Per-iteration plan and solver log.
pub fn iterations_json(seeds: &[(&str, u64)], scenario: usize, sched: &FullSchedule) -> Value {
    let iterations: Vec<Value> = sched
        .plans
        .iter()
        .zip(&sched.outcomes)
        .map(|(p, done)| {
            json!({
                "iteration": p.iteration,
                "vessel": p.vessel,
                "overtime_hours": p.overtime_hours,
                "actions": p.actions.iter().zip(done).map(|(a, &ok)| json!({
                    "turbine": a.turbine + 1,
                    "kind": a.kind.label(),
                    "start_hour": a.start,
                    "duration_h": a.duration,
                    "executed": ok,
                })).collect::<Vec<_>>(),
                "lth": p.lth.iter().map(|a| json!({
                    "turbine": a.turbine + 1,
                    "kind": a.kind.label(),
                    "day": a.day,
                })).collect::<Vec<_>>(),
                "vessel_days": p.vessel_days,
                "relaxed": p.relaxed.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "solve": p.solve.as_ref().map(|s| json!({
                    "objective": s.objective,
                    "sth_cost": s.sth_cost,
                    "gap": s.gap,
                    "status": format!("{:?}", s.status),
                    "nodes": s.nodes,
                    "num_vars": s.num_vars,
                    "num_constraints": s.num_constraints,
                })),
            })
        })
        .collect();
    json!({
        "seeds": seeds.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "strategy": sched.strategy,
        "scenario": scenario,
        "horizon_days": sched.horizon_days,
        "unresolved": sched.unresolved.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "iterations": iterations,
    })
}

/// Loss statistics of both access modes, one row each.
pub fn sensitivity_csv(header: &str, rows: &[SensitivityStats]) -> String {
    let mut out = String::from(header);
    out.push_str("mode,day,count,optimum_lost_revenue,optimum_starts,mad,q1,q2,q3,nmad\n");
    for s in rows {
        let starts: Vec<String> = s.optimum_starts.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{},{:.2},{:.2},{:.2},{:.2},{:.4}",
            if s.relaxed { "relaxed" } else { "constrained" },
            s.day + 1,
            s.count,
            s.optimum_lost_revenue,
            starts.join(" "),
            s.mad,
            s.q1,
            s.q2,
            s.q3,
            s.nmad
        );
    }
    out
}

/// Every enumerated loss, for distribution plots.
pub fn losses_csv(header: &str, rows: &[SensitivityStats]) -> String {
    let mut out = String::from(header);
    out.push_str("mode,loss\n");
    for s in rows {
        let mode = if s.relaxed { "relaxed" } else { "constrained" };
        for l in &s.losses {
            let _ = writeln!(out, "{mode},{l:.2}");
        }
    }
    out
}
