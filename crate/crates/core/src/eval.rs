//! Execution of plans against the true weather, O&M metrics, the scenario
//! benchmark and the start-time sensitivity study.

use thiserror::Error;

use crate::params::{FailureEvent, FarmInstance, MaintenanceKind};
use crate::rolling::{
    run_with, DayPlan, ExecutedAction, Executor, FullSchedule, RollingError, RollingState,
};
use crate::scenario::Grids;
use crate::strategies::Strategy;
use om_milp::SolverConfig;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Rolling(#[from] RollingError),
    #[error("data covers {have} days; {scenarios} scenarios of {horizon} days need {need}")]
    InsufficientData {
        have: usize,
        need: usize,
        scenarios: usize,
        horizon: usize,
    },
    #[error("execution log covers {have} hours, horizon has {need}")]
    LogGap { have: usize, need: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Carries out a planned action iff its start is truly accessible, i.e. the
/// whole τ-hour window is within limits and in daylight.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrueAccess;

impl Executor for TrueAccess {
    fn execute(
        &mut self,
        _: &FarmInstance,
        grids: &Grids,
        _: &RollingState,
        plan: &DayPlan,
    ) -> Vec<bool> {
        plan.actions
            .iter()
            .map(|a| grids.access.hourly[a.turbine][a.start])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortCause {
    /// Wind, waves or daylight do not allow the full task window.
    ClosedWindow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abort {
    pub turbine: usize,
    pub start: usize,
    pub cause: AbortCause,
}

/// What happened in the field over one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionLog {
    pub horizon_days: usize,
    pub executed: Vec<ExecutedAction>,
    pub aborted: Vec<Abort>,
    /// 1-based days a vessel was rented.
    pub rental_days: Vec<usize>,
    /// 1-based days on which at least one task was carried out.
    pub dispatched_days: Vec<usize>,
    pub overtime_hours: f64,
    /// Turbine-hour availability as realized.
    pub available: Vec<Vec<bool>>,
    /// Turbine-hours down because failed (not counting repair hours).
    pub failed: Vec<Vec<bool>>,
}

impl ExecutionLog {
    pub fn from_schedule(inst: &FarmInstance, sched: &FullSchedule) -> Self {
        let n = inst.num_turbines();
        let hours = 24 * sched.horizon_days;
        let mut aborted = Vec::new();
        let mut rental_days = Vec::new();
        let mut dispatched_days = Vec::new();
        let mut overtime = 0.0;
        for (plan, done) in sched.plans.iter().zip(&sched.outcomes) {
            if plan.vessel || !plan.actions.is_empty() {
                rental_days.push(plan.iteration);
            }
            if done.iter().any(|&d| d) {
                dispatched_days.push(plan.iteration);
            }
            let mut worked = 0u32;
            for (a, &ok) in plan.actions.iter().zip(done) {
                if ok {
                    worked += a.duration;
                } else {
                    aborted.push(Abort {
                        turbine: a.turbine,
                        start: a.start,
                        cause: AbortCause::ClosedWindow,
                    });
                }
            }
            overtime += (f64::from(worked) - inst.crew_hours()).max(0.0);
        }

        let mut available = vec![vec![true; hours]; n];
        let mut failed = vec![vec![false; hours]; n];
        for i in 0..n {
            // events and repairs of turbine i in time order; failures first
            // on ties since they apply before the day's work
            let mut timeline: Vec<(usize, u8, Option<&ExecutedAction>)> = sched
                .failures
                .iter()
                .filter(|e| e.turbine == i)
                .map(|e| (24 * (e.day as usize - 1), 0, None))
                .chain(
                    sched
                        .executed
                        .iter()
                        .filter(|a| a.turbine == i)
                        .map(|a| (a.start, 1, Some(a))),
                )
                .collect();
            timeline.sort_by_key(|&(h, k, _)| (h, k));
            let mut fail_from: Option<usize> = inst.turbines[i]
                .needs_maintenance
                .then(|| 24 * sched.initial_deadline[i] as usize);
            let mut armed = inst.turbines[i].needs_maintenance;
            let mark_failed = |failed: &mut Vec<Vec<bool>>, from: usize, to: usize| {
                for h in from.min(hours)..to.min(hours) {
                    failed[i][h] = true;
                }
            };
            for (h, _, action) in timeline {
                match action {
                    None => {
                        fail_from = Some(if armed {
                            fail_from.map_or(h, |f| f.min(h))
                        } else {
                            h
                        });
                        armed = true;
                    }
                    Some(a) => {
                        if let Some(f) = fail_from.filter(|_| armed) {
                            mark_failed(&mut failed, f, a.start);
                        }
                        for hh in a.start..a.end().min(hours) {
                            available[i][hh] = false;
                        }
                        armed = false;
                        fail_from = None;
                    }
                }
            }
            if let Some(f) = fail_from.filter(|_| armed) {
                mark_failed(&mut failed, f, hours);
            }
            for h in 0..hours {
                if failed[i][h] {
                    available[i][h] = false;
                }
            }
        }

        ExecutionLog {
            horizon_days: sched.horizon_days,
            executed: sched.executed.clone(),
            aborted,
            rental_days,
            dispatched_days,
            overtime_hours: overtime,
            available,
            failed,
        }
    }
}

/// O&M metrics of one strategy on one scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub vessel_rentals: usize,
    /// Dispatched over rented days, %.
    pub utilization: f64,
    pub downtime_hours: f64,
    pub access_downtime_hours: f64,
    pub production_loss_mwh: f64,
    pub pm_actions: usize,
    pub cm_actions: usize,
    pub aborts: usize,
    pub maintenance_cost: f64,
    pub crew_cost: f64,
    pub overtime_cost: f64,
    pub vessel_cost: f64,
    pub lost_revenue: f64,
    pub total_cost: f64,
}

impl Metrics {
    /// Everything except lost revenue.
    pub fn operating_cost(&self) -> f64 {
        self.maintenance_cost + self.crew_cost + self.overtime_cost + self.vessel_cost
    }
}

pub fn compute_metrics(
    inst: &FarmInstance,
    grids: &Grids,
    log: &ExecutionLog,
) -> Result<Metrics, EvalError> {
    let hours = 24 * log.horizon_days;
    let n = inst.num_turbines();
    if log.available.len() != n || log.available.iter().any(|r| r.len() != hours) {
        let have = log.available.first().map_or(0, Vec::len);
        return Err(EvalError::LogGap { have, need: hours });
    }
    if grids.num_hours() < hours {
        return Err(EvalError::LogGap {
            have: grids.num_hours(),
            need: hours,
        });
    }
    let c = &inst.costs;
    let r = inst.rated_mw;
    let mut m = Metrics {
        vessel_rentals: log.rental_days.len(),
        utilization: if log.rental_days.is_empty() {
            100.0
        } else {
            100.0 * log.dispatched_days.len() as f64 / log.rental_days.len() as f64
        },
        aborts: log.aborted.len(),
        ..Metrics::default()
    };
    for a in &log.executed {
        match a.kind {
            MaintenanceKind::Preventive => {
                m.pm_actions += 1;
                m.maintenance_cost += c.pm;
            }
            MaintenanceKind::Corrective => {
                m.cm_actions += 1;
                m.maintenance_cost += c.cm;
            }
        }
        m.crew_cost += c.crew_hourly * f64::from(a.duration);
    }
    m.overtime_cost = c.overtime_hourly * log.overtime_hours;
    m.vessel_cost = c.vessel_daily * log.rental_days.len() as f64;
    for t in 0..hours {
        let mut potential = 0.0;
        let mut produced = 0.0;
        for i in 0..n {
            let e = r * grids.power[i][t];
            potential += e;
            if log.available[i][t] {
                produced += e;
            } else {
                m.downtime_hours += 1.0;
                m.production_loss_mwh += e;
                if log.failed[i][t] && !grids.access.daily[i][t / 24] {
                    m.access_downtime_hours += 1.0;
                }
            }
        }
        let cap = grids.curtailment[t] * potential;
        m.lost_revenue += grids.price[t] * (cap - produced.min(cap));
    }
    m.total_cost = m.operating_cost() + m.lost_revenue;
    Ok(m)
}

/// One strategy over one scenario: plan, execute against the true weather
/// and measure.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub scenario: usize,
    pub strategy: Strategy,
    pub schedule: FullSchedule,
    pub log: ExecutionLog,
    pub metrics: Metrics,
}

pub fn run_scenario(
    inst: &FarmInstance,
    grids: &Grids,
    scenario: usize,
    horizon_days: usize,
    events: &[FailureEvent],
    strategy: Strategy,
    solver: &SolverConfig,
) -> Result<ScenarioRun, EvalError> {
    let window = grids
        .window(scenario, horizon_days)
        .map_err(|_| EvalError::InsufficientData {
            have: grids.num_days(),
            need: scenario + horizon_days,
            scenarios: scenario + 1,
            horizon: horizon_days,
        })?;
    let mut planner = strategy.planner(solver);
    let schedule = run_with(
        inst,
        &window,
        horizon_days,
        events,
        planner.as_mut(),
        &mut TrueAccess,
    )?;
    let log = ExecutionLog::from_schedule(inst, &schedule);
    let metrics = compute_metrics(inst, &window, &log)?;
    Ok(ScenarioRun {
        scenario,
        strategy,
        schedule,
        log,
        metrics,
    })
}

impl Metrics {
    /// Field-wise mean.
    pub fn mean(all: &[Metrics]) -> Metrics {
        let k = all.len().max(1) as f64;
        let avg = |f: &dyn Fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / k;
        // counts are averaged too and rounded only for display
        Metrics {
            vessel_rentals: 0,
            utilization: avg(&|m| m.utilization),
            downtime_hours: avg(&|m| m.downtime_hours),
            access_downtime_hours: avg(&|m| m.access_downtime_hours),
            production_loss_mwh: avg(&|m| m.production_loss_mwh),
            pm_actions: 0,
            cm_actions: 0,
            aborts: 0,
            maintenance_cost: avg(&|m| m.maintenance_cost),
            crew_cost: avg(&|m| m.crew_cost),
            overtime_cost: avg(&|m| m.overtime_cost),
            vessel_cost: avg(&|m| m.vessel_cost),
            lost_revenue: avg(&|m| m.lost_revenue),
            total_cost: avg(&|m| m.total_cost),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub horizon_days: usize,
    pub scenarios: usize,
    pub strategies: Vec<Strategy>,
    pub events: Vec<FailureEvent>,
    pub solver: SolverConfig,
}

impl BenchmarkSpec {
    /// The (scenario, strategy) grid, scenario-major.
    pub fn cells(&self) -> Vec<(usize, Strategy)> {
        (0..self.scenarios)
            .flat_map(|s| self.strategies.iter().map(move |&k| (s, k)))
            .collect()
    }

    pub fn check_data(&self, grids: &Grids) -> Result<(), EvalError> {
        let need = self.scenarios.saturating_sub(1) + self.horizon_days;
        if self.scenarios == 0 || self.strategies.is_empty() {
            return Err(EvalError::Invalid(
                "benchmark needs at least one scenario and one strategy".into(),
            ));
        }
        if grids.num_days() < need {
            return Err(EvalError::InsufficientData {
                have: grids.num_days(),
                need,
                scenarios: self.scenarios,
                horizon: self.horizon_days,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub scenario: usize,
    pub strategy: Strategy,
    pub metrics: Metrics,
    pub unresolved: usize,
    pub iterations: usize,
    pub solve_seconds: f64,
}

impl From<&ScenarioRun> for CellResult {
    fn from(r: &ScenarioRun) -> Self {
        CellResult {
            scenario: r.scenario,
            strategy: r.strategy,
            metrics: r.metrics.clone(),
            unresolved: r.schedule.unresolved.len(),
            iterations: r.schedule.plans.len(),
            solve_seconds: r
                .schedule
                .plans
                .iter()
                .filter_map(|p| p.solve.as_ref())
                .map(|s| s.solve_time.as_secs_f64())
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub scenarios: usize,
    pub mean: Metrics,
    pub mean_rentals: f64,
    pub mean_pm: f64,
    pub mean_cm: f64,
    pub mean_aborts: f64,
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub cells: Vec<CellResult>,
    pub summaries: Vec<StrategySummary>,
    /// Mean-cost improvement of HOST over each other strategy, %.
    pub improvement: Vec<(Strategy, f64)>,
}

impl BenchmarkReport {
    pub fn from_cells(mut cells: Vec<CellResult>) -> Self {
        cells.sort_by_key(|c| (c.scenario, c.strategy));
        let mut strategies: Vec<Strategy> = cells.iter().map(|c| c.strategy).collect();
        strategies.sort();
        strategies.dedup();
        let summaries: Vec<StrategySummary> = strategies
            .iter()
            .map(|&k| {
                let mine: Vec<&CellResult> = cells.iter().filter(|c| c.strategy == k).collect();
                let metrics: Vec<Metrics> = mine.iter().map(|c| c.metrics.clone()).collect();
                let n = mine.len().max(1) as f64;
                let avg = |f: &dyn Fn(&Metrics) -> usize| {
                    metrics.iter().map(|m| f(m) as f64).sum::<f64>() / n
                };
                StrategySummary {
                    strategy: k,
                    scenarios: mine.len(),
                    mean: Metrics::mean(&metrics),
                    mean_rentals: avg(&|m| m.vessel_rentals),
                    mean_pm: avg(&|m| m.pm_actions),
                    mean_cm: avg(&|m| m.cm_actions),
                    mean_aborts: avg(&|m| m.aborts),
                    unresolved: mine.iter().map(|c| c.unresolved).sum(),
                }
            })
            .collect();
        let host = summaries
            .iter()
            .find(|s| s.strategy == Strategy::Host)
            .map(|s| s.mean.total_cost);
        let improvement = match host {
            Some(h) => summaries
                .iter()
                .filter(|s| s.strategy != Strategy::Host)
                .map(|s| (s.strategy, improvement_pct(h, s.mean.total_cost)))
                .collect(),
            None => Vec::new(),
        };
        BenchmarkReport {
            cells,
            summaries,
            improvement,
        }
    }

    pub fn cell(&self, scenario: usize, strategy: Strategy) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.strategy == strategy)
    }
}

/// (other − host) / other, %.
pub fn improvement_pct(host: f64, other: f64) -> f64 {
    if other == 0.0 {
        0.0
    } else {
        100.0 * (other - host) / other
    }
}

/// Runs every cell in turn; see [`BenchmarkSpec::cells`] for parallel use.
pub fn run_benchmark(
    inst: &FarmInstance,
    grids: &Grids,
    spec: &BenchmarkSpec,
) -> Result<BenchmarkReport, EvalError> {
    spec.check_data(grids)?;
    let cells = spec
        .cells()
        .into_iter()
        .map(|(s, k)| {
            run_scenario(
                inst,
                grids,
                s,
                spec.horizon_days,
                &spec.events,
                k,
                &spec.solver,
            )
            .map(|r| CellResult::from(&r))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchmarkReport::from_cells(cells))
}

// ---------------------------------------------------------------------------
// start-time sensitivity

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityStats {
    pub relaxed: bool,
    /// Absolute day (0-based) of the grids that was studied.
    pub day: usize,
    /// Feasible start-time assignments enumerated.
    pub count: usize,
    /// Lost revenue of the best assignment, $.
    pub optimum_lost_revenue: f64,
    /// Start hours (0-based within the day) of the best assignment.
    pub optimum_starts: Vec<usize>,
    /// Largest loss relative to the optimum, $.
    pub mad: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// Mean loss over the loss range.
    pub nmad: f64,
    /// Loss of every assignment, ascending.
    pub losses: Vec<f64>,
}

/// Candidate start hours per turbine on `day`: any start whose task ends by
/// midnight when relaxed, else the truly accessible ones.
pub fn candidate_starts(
    inst: &FarmInstance,
    grids: &Grids,
    day: usize,
    relaxed: bool,
) -> Vec<Vec<usize>> {
    (0..inst.num_turbines())
        .map(|i| {
            let tau = inst.turbines[i].repair_hours as usize;
            (0..24)
                .filter(|&k| k + tau <= 24 && (relaxed || grids.access.hourly[i][24 * day + k]))
                .collect()
        })
        .collect()
}

/// Revenue a task of turbine `i` starting at hour `k` of `day` gives up.
pub fn task_lost_revenue(
    inst: &FarmInstance,
    grids: &Grids,
    day: usize,
    i: usize,
    k: usize,
) -> f64 {
    let tau = inst.turbines[i].repair_hours as usize;
    (24 * day + k..24 * day + k + tau)
        .map(|t| grids.price[t] * inst.rated_mw * grids.power[i][t])
        .sum()
}

/// Every start assignment within the crew bound, with its lost revenue.
pub fn enumerate_assignments(
    inst: &FarmInstance,
    grids: &Grids,
    day: usize,
    relaxed: bool,
) -> Vec<(Vec<usize>, f64)> {
    let starts = candidate_starts(inst, grids, day, relaxed);
    let cost: Vec<Vec<f64>> = starts
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.iter()
                .map(|&k| task_lost_revenue(inst, grids, day, i, k))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut pick = vec![0usize; starts.len()];
    let mut busy = [0u32; 24];
    fn rec(
        i: usize,
        inst: &FarmInstance,
        starts: &[Vec<usize>],
        cost: &[Vec<f64>],
        pick: &mut Vec<usize>,
        busy: &mut [u32; 24],
        acc: f64,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if i == starts.len() {
            out.push((pick.clone(), acc));
            return;
        }
        let tau = inst.turbines[i].repair_hours as usize;
        for (j, &k) in starts[i].iter().enumerate() {
            if busy[k..k + tau].iter().any(|&b| b >= inst.crews) {
                continue;
            }
            busy[k..k + tau].iter_mut().for_each(|b| *b += 1);
            pick[i] = k;
            rec(i + 1, inst, starts, cost, pick, busy, acc + cost[i][j], out);
            busy[k..k + tau].iter_mut().for_each(|b| *b -= 1);
        }
    }
    rec(0, inst, &starts, &cost, &mut pick, &mut busy, 0.0, &mut out);
    out
}

/// Linear-interpolation quantile of ascending data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn sensitivity_shift(
    inst: &FarmInstance,
    grids: &Grids,
    day: usize,
    relaxed: bool,
) -> Result<SensitivityStats, EvalError> {
    if 24 * (day + 1) > grids.num_hours() {
        return Err(EvalError::Invalid(format!("day {day} outside the data")));
    }
    let all = enumerate_assignments(inst, grids, day, relaxed);
    let Some((best_starts, best)) = all.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned() else {
        return Err(EvalError::Invalid(format!(
            "no feasible start assignment on day {day}"
        )));
    };
    let mut losses: Vec<f64> = all.iter().map(|(_, v)| v - best).collect();
    losses.sort_by(f64::total_cmp);
    let max = *losses.last().expect("nonempty");
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    Ok(SensitivityStats {
        relaxed,
        day,
        count: losses.len(),
        optimum_lost_revenue: best,
        optimum_starts: best_starts,
        mad: max,
        q1: quantile(&losses, 0.25),
        q2: quantile(&losses, 0.5),
        q3: quantile(&losses, 0.75),
        nmad: if max > 0.0 { mean / max } else { 0.0 },
        losses,
    })
}

/// Counts assignments of three equal-length tasks with at most two crews
/// without enumerating hours: all triples minus those whose three intervals
/// share an hour (start range below τ).
pub fn count_two_crew_triples(starts: &[Vec<usize>], tau: usize) -> usize {
    assert_eq!(starts.len(), 3, "three turbines");
    let total: usize = starts.iter().map(Vec::len).product();
    let mut clash = 0;
    for &a in &starts[0] {
        for &b in &starts[1] {
            for &c in &starts[2] {
                if a.max(b).max(c) - a.min(b).min(c) < tau {
                    clash += 1;
                }
            }
        }
    }
    total - clash
}

/// Closed form of the same count when every start in `0..slots` is allowed:
/// ordered triples spanning exactly r hours number 6r (r ≥ 1).
pub fn relaxed_count_closed_form(slots: usize, tau: usize) -> usize {
    let clash: usize = slots
        + (1..tau.min(slots))
            .map(|r| 6 * r * (slots - r))
            .sum::<usize>();
    slots.pow(3) - clash
}

/// First day on which every turbine has a truly accessible start.
pub fn first_open_day(inst: &FarmInstance, grids: &Grids) -> Option<usize> {
    (0..grids.num_days()).find(|&d| {
        candidate_starts(inst, grids, d, false)
            .iter()
            .all(|s| !s.is_empty())
    })
}

/// The three-turbine, 7-hour-repair farm of the sensitivity study.
pub fn sensitivity_instance() -> FarmInstance {
    let mut inst = FarmInstance::staggered(3, 7);
    for t in &mut inst.turbines {
        t.rle_days = 1;
    }
    inst
}
