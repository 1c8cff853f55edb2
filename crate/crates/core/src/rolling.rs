//! The daily rolling-horizon loop: each iteration re-plans the remaining
//! horizon, only the day-ahead (STH) part is executed, and the maintenance
//! flags are updated from what was actually carried out.

use std::borrow::Cow;
use std::time::Duration;

use log::{debug, info, warn};
use om_milp::{SolveStatus, SolverConfig};
use thiserror::Error;

use crate::access::AccessGrid;
use crate::host::{
    solve_iteration, HorizonState, IterationInputs, LongTermAction, ModelOptions, PlanError,
    PlannedAction,
};
use crate::params::{FailureEvent, FarmInstance, MaintenanceKind, ParamError};
use crate::scenario::Grids;

#[derive(Debug, Error)]
pub enum RollingError {
    #[error(
        "horizon of {horizon} days must exceed every residual life (turbine {turbine} has {rle})"
    )]
    HorizonTooShort {
        horizon: usize,
        turbine: usize,
        rle: u32,
    },
    #[error("scenario covers {have} days, horizon needs {need}")]
    ShortData { have: usize, need: usize },
    #[error("failure event on day {day} outside the {horizon}-day horizon")]
    EventOutsideHorizon { day: u32, horizon: usize },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Maintenance state carried between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingState {
    /// ℓ, 1-based.
    pub iteration: usize,
    pub horizon_days: usize,
    /// θ_i
    pub armed: Vec<bool>,
    /// Absolute day through which turbine i runs; it is failed from hour
    /// 24·deadline on (0-based) until repaired.
    pub deadline: Vec<u32>,
    /// Unexpected failures not yet applied, ordered by day.
    pub pending: Vec<FailureEvent>,
}

impl RollingState {
    pub fn new(
        inst: &FarmInstance,
        horizon_days: usize,
        events: &[FailureEvent],
    ) -> Result<Self, RollingError> {
        inst.validate()?;
        for (i, t) in inst.turbines.iter().enumerate() {
            if t.needs_maintenance && t.rle_days as usize >= horizon_days {
                return Err(RollingError::HorizonTooShort {
                    horizon: horizon_days,
                    turbine: i,
                    rle: t.rle_days,
                });
            }
        }
        let mut pending = events.to_vec();
        for e in &pending {
            if e.turbine >= inst.num_turbines() {
                return Err(ParamError::UnknownTurbine(e.turbine).into());
            }
            if e.day < 1 || e.day as usize > horizon_days {
                return Err(RollingError::EventOutsideHorizon {
                    day: e.day,
                    horizon: horizon_days,
                });
            }
        }
        pending.sort_by_key(|e| (e.day, e.turbine));
        Ok(RollingState {
            iteration: 1,
            horizon_days,
            armed: inst.turbines.iter().map(|t| t.needs_maintenance).collect(),
            deadline: inst.turbines.iter().map(|t| t.rle_days).collect(),
            pending,
        })
    }

    /// Loop guard: days left and something to maintain now or later.
    pub fn active(&self) -> bool {
        self.iteration <= self.horizon_days
            && (self.armed.iter().any(|&a| a) || !self.pending.is_empty())
    }

    /// λ_i relative to the current iteration; 0 once failed.
    pub fn residual_life(&self, i: usize) -> u32 {
        self.deadline[i].saturating_sub(self.iteration as u32 - 1)
    }

    pub fn first_hour(&self) -> usize {
        24 * (self.iteration - 1)
    }

    /// Arms every turbine whose failure is due today; returns the events.
    pub fn apply_events(&mut self) -> Vec<FailureEvent> {
        let today = self.iteration as u32;
        let (due, later): (Vec<_>, Vec<_>) = self.pending.iter().partition(|e| e.day <= today);
        self.pending = later;
        for e in &due {
            let failed_from = e.day - 1;
            self.deadline[e.turbine] = if self.armed[e.turbine] {
                self.deadline[e.turbine].min(failed_from)
            } else {
                failed_from
            };
            self.armed[e.turbine] = true;
        }
        due
    }

    pub fn horizon_state(&self) -> Result<HorizonState, PlanError> {
        let rle = (0..self.armed.len())
            .map(|i| self.residual_life(i))
            .collect();
        Ok(HorizonState::new(
            self.iteration,
            self.horizon_days,
            self.armed.clone(),
            rle,
        )?)
    }

    /// Type an action gets when carried out at `start` (0-based hour).
    pub fn kind_at(&self, turbine: usize, start: usize) -> MaintenanceKind {
        if start < 24 * self.deadline[turbine] as usize {
            MaintenanceKind::Preventive
        } else {
            MaintenanceKind::Corrective
        }
    }
}

/// Solver statistics of one planning iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveLog {
    pub objective: f64,
    /// STH cost components of the solution, see [`crate::host::IterationResult`].
    pub sth_cost: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub solve_time: Duration,
    pub nodes: usize,
    pub num_vars: usize,
    pub num_constraints: usize,
}

/// A planner's intentions for one iteration. Only `actions` (the STH) are
/// handed to execution; the LTH part is informational.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DayPlan {
    pub iteration: usize,
    pub actions: Vec<PlannedAction>,
    /// A vessel is rented for the STH day.
    pub vessel: bool,
    pub lth: Vec<LongTermAction>,
    /// 1-based days with a planned LTH rental.
    pub vessel_days: Vec<usize>,
    pub overtime_hours: f64,
    /// Armed turbines whose maintenance requirement had to be dropped to
    /// make the iteration feasible.
    pub relaxed: Vec<usize>,
    pub solve: Option<SolveLog>,
}

pub trait Planner {
    fn name(&self) -> &str;
    fn plan(
        &mut self,
        inst: &FarmInstance,
        grids: &Grids,
        state: &RollingState,
    ) -> Result<DayPlan, PlanError>;
}

/// Decides which planned actions are actually carried out.
pub trait Executor {
    /// One flag per `plan.actions` entry.
    fn execute(
        &mut self,
        inst: &FarmInstance,
        grids: &Grids,
        state: &RollingState,
        plan: &DayPlan,
    ) -> Vec<bool>;
}

/// Deterministic forecasts: everything planned happens.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrustPlan;

impl Executor for TrustPlan {
    fn execute(
        &mut self,
        _: &FarmInstance,
        _: &Grids,
        _: &RollingState,
        plan: &DayPlan,
    ) -> Vec<bool> {
        vec![true; plan.actions.len()]
    }
}

/// How a planner believes the turbines can be reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessBelief {
    /// The true (perfectly forecast) access grid.
    Forecast,
    /// Any start whose task fits in daylight.
    WeatherBlind,
}

pub fn believed_access<'a>(
    belief: AccessBelief,
    inst: &FarmInstance,
    grids: &'a Grids,
) -> Cow<'a, AccessGrid> {
    match belief {
        AccessBelief::Forecast => Cow::Borrowed(&grids.access),
        AccessBelief::WeatherBlind => {
            let tau: Vec<u32> = inst.turbines.iter().map(|t| t.repair_hours).collect();
            Cow::Owned(AccessGrid::weather_blind(
                inst.num_turbines(),
                grids.num_hours(),
                &tau,
                grids.access.daylight,
            ))
        }
    }
}

/// Plans with the two-stage MILP on the remaining horizon.
#[derive(Debug, Clone)]
pub struct MilpPlanner {
    pub name: String,
    pub belief: AccessBelief,
    pub options: ModelOptions,
    pub solver: SolverConfig,
}

impl MilpPlanner {
    pub fn new(
        name: impl Into<String>,
        belief: AccessBelief,
        options: ModelOptions,
        solver: SolverConfig,
    ) -> Self {
        MilpPlanner {
            name: name.into(),
            belief,
            options,
            solver,
        }
    }

    pub fn host(solver: SolverConfig) -> Self {
        Self::new(
            "HOST",
            AccessBelief::Forecast,
            ModelOptions::default(),
            solver,
        )
    }
}

/// Whether turbine i has any believed start in the iteration's horizon.
fn reachable(inp: &IterationInputs, i: usize) -> bool {
    inp.access[i].iter().any(|&a| a) || inp.access_daily[i].iter().any(|&a| a)
}

impl Planner for MilpPlanner {
    fn name(&self) -> &str {
        &self.name
    }

    fn plan(
        &mut self,
        inst: &FarmInstance,
        grids: &Grids,
        state: &RollingState,
    ) -> Result<DayPlan, PlanError> {
        let mut hs = state.horizon_state()?;
        let access = believed_access(self.belief, inst, grids);
        let inp = IterationInputs::from_grids(grids, &access, &hs)?;
        let mut relaxed = Vec::new();
        let mut attempt = 0;
        let res = loop {
            match solve_iteration(inst, &hs, &inp, &self.options, &self.solver) {
                Err(PlanError::Infeasible { iteration }) if attempt < 2 => {
                    attempt += 1;
                    for i in 0..hs.armed.len() {
                        if hs.required[i] && (attempt == 2 || !reachable(&inp, i)) {
                            hs.required[i] = false;
                            relaxed.push(i);
                        }
                    }
                    warn!("iteration {iteration} infeasible; dropping the requirement for turbines {relaxed:?}");
                }
                other => break other?,
            }
        };
        debug!(
            "{} iteration {}: objective {:.2}, gap {:.2e}, {} nodes, {:?}",
            self.name, state.iteration, res.objective, res.gap, res.nodes, res.solve_time
        );
        Ok(DayPlan {
            iteration: state.iteration,
            actions: res.schedule.sth,
            vessel: res.schedule.vessel_sth,
            lth: res.schedule.lth,
            vessel_days: res.schedule.vessel_days,
            overtime_hours: res.schedule.overtime_hours,
            relaxed,
            solve: Some(SolveLog {
                objective: res.objective,
                sth_cost: res.sth_cost,
                gap: res.gap,
                status: res.status,
                solve_time: res.solve_time,
                nodes: res.nodes,
                num_vars: res.num_vars,
                num_constraints: res.num_constraints,
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutedAction {
    pub turbine: usize,
    pub kind: MaintenanceKind,
    /// 0-based hour from the scenario start.
    pub start: usize,
    pub duration: u32,
}

impl ExecutedAction {
    pub fn end(&self) -> usize {
        self.start + self.duration as usize
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSchedule {
    pub strategy: String,
    pub horizon_days: usize,
    /// Executed actions in execution order.
    pub executed: Vec<ExecutedAction>,
    /// Every iteration's plan, including aborted actions.
    pub plans: Vec<DayPlan>,
    /// Per plan, one flag per planned action.
    pub outcomes: Vec<Vec<bool>>,
    /// Failure events as applied.
    pub failures: Vec<FailureEvent>,
    /// Deadlines at the start of the horizon.
    pub initial_deadline: Vec<u32>,
    /// Turbines still awaiting maintenance when the loop ended.
    pub unresolved: Vec<usize>,
}

/// Runs the loop with an arbitrary planner and executor over a scenario
/// whose grids start at its first day.
pub fn run_with(
    inst: &FarmInstance,
    grids: &Grids,
    horizon_days: usize,
    events: &[FailureEvent],
    planner: &mut dyn Planner,
    executor: &mut dyn Executor,
) -> Result<FullSchedule, RollingError> {
    if grids.num_days() < horizon_days {
        return Err(RollingError::ShortData {
            have: grids.num_days(),
            need: horizon_days,
        });
    }
    let mut state = RollingState::new(inst, horizon_days, events)?;
    let mut out = FullSchedule {
        strategy: planner.name().to_string(),
        horizon_days,
        executed: Vec::new(),
        plans: Vec::new(),
        outcomes: Vec::new(),
        failures: Vec::new(),
        initial_deadline: state.deadline.clone(),
        unresolved: Vec::new(),
    };
    while state.active() {
        out.failures.extend(state.apply_events());
        if state.armed.iter().any(|&a| a) {
            let plan = planner.plan(inst, grids, &state)?;
            let done = executor.execute(inst, grids, &state, &plan);
            for (a, _) in plan.actions.iter().zip(&done).filter(|(_, &ok)| ok) {
                out.executed.push(ExecutedAction {
                    turbine: a.turbine,
                    kind: state.kind_at(a.turbine, a.start),
                    start: a.start,
                    duration: a.duration,
                });
                state.armed[a.turbine] = false;
            }
            out.plans.push(plan);
            out.outcomes.push(done);
        }
        state.iteration += 1;
    }
    out.unresolved = (0..state.armed.len()).filter(|&i| state.armed[i]).collect();
    info!(
        "{}: {} actions executed over {} iterations, {} unresolved",
        out.strategy,
        out.executed.len(),
        out.plans.len(),
        out.unresolved.len()
    );
    Ok(out)
}

/// HOST over one scenario under deterministic forecasts.
pub fn run(
    inst: &FarmInstance,
    grids: &Grids,
    horizon_days: usize,
    events: &[FailureEvent],
    solver: &SolverConfig,
) -> Result<FullSchedule, RollingError> {
    run_with(
        inst,
        grids,
        horizon_days,
        events,
        &mut MilpPlanner::host(solver.clone()),
        &mut TrustPlan,
    )
}
