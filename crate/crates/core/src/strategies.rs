//! The holistic strategy and its four benchmarks. HOST, BESN and PBOS share
//! the MILP planner and differ only in what the planner is told; TBS and CMS
//! are rule-based.

use std::fmt;
use std::str::FromStr;

use om_milp::SolverConfig;

use crate::access::AccessGrid;
use crate::host::{ModelOptions, PlanError, PlannedAction};
use crate::params::{FarmInstance, MaintenanceKind};
use crate::rolling::{believed_access, AccessBelief, DayPlan, MilpPlanner, Planner, RollingState};
use crate::scenario::Grids;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Access-, production- and dispatch-aware.
    Host,
    /// Production and dispatch, but weather-blind.
    Besn,
    /// Production only: weather-blind and no rental grouping incentive.
    Pbos,
    /// Time-based: PM on the last day before the RLE.
    Tbs,
    /// Corrective only.
    Cms,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Host,
        Strategy::Besn,
        Strategy::Pbos,
        Strategy::Tbs,
        Strategy::Cms,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Host => "HOST",
            Strategy::Besn => "BESN",
            Strategy::Pbos => "PBOS",
            Strategy::Tbs => "TBS",
            Strategy::Cms => "CMS",
        }
    }

    /// The MILP planner behind HOST, BESN and PBOS; `None` for the rules.
    pub fn milp_planner(self, solver: &SolverConfig) -> Option<MilpPlanner> {
        let (belief, options) = match self {
            Strategy::Host => (AccessBelief::Forecast, ModelOptions::default()),
            Strategy::Besn => (AccessBelief::WeatherBlind, ModelOptions::default()),
            Strategy::Pbos => (
                AccessBelief::WeatherBlind,
                ModelOptions {
                    vessel_cost: Some(0.0),
                    ..ModelOptions::default()
                },
            ),
            Strategy::Tbs | Strategy::Cms => return None,
        };
        Some(MilpPlanner::new(
            self.label(),
            belief,
            options,
            solver.clone(),
        ))
    }

    pub fn planner(self, solver: &SolverConfig) -> Box<dyn Planner + Send> {
        match self {
            Strategy::Tbs => Box::new(RulePlanner::time_based()),
            Strategy::Cms => Box::new(RulePlanner::corrective()),
            milp => Box::new(milp.milp_planner(solver).expect("MILP strategy")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!("unknown strategy '{s}' (expected host, besn, pbos, tbs or cms)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    TimeBased,
    Corrective,
}

/// TBS and CMS: weather-blind, earliest daylight slot, lowest turbine id
/// first, at most B tasks at any hour.
#[derive(Debug, Clone)]
pub struct RulePlanner {
    rule: Rule,
}

impl RulePlanner {
    pub fn time_based() -> Self {
        RulePlanner {
            rule: Rule::TimeBased,
        }
    }

    pub fn corrective() -> Self {
        RulePlanner {
            rule: Rule::Corrective,
        }
    }

    fn due(&self, state: &RollingState, i: usize) -> Option<MaintenanceKind> {
        match (self.rule, state.residual_life(i)) {
            (_, 0) => Some(MaintenanceKind::Corrective),
            (Rule::TimeBased, 1) => Some(MaintenanceKind::Preventive),
            _ => None,
        }
    }
}

/// Greedy slotting of `(turbine, kind)` requests into the day starting at
/// hour `h0`, in request order.
pub fn earliest_slots(
    inst: &FarmInstance,
    access: &AccessGrid,
    h0: usize,
    requests: &[(usize, MaintenanceKind)],
) -> Vec<PlannedAction> {
    let mut busy = [0u32; 24];
    let mut out = Vec::new();
    for &(i, kind) in requests {
        let tau = inst.turbines[i].repair_hours as usize;
        let slot = (0..24usize).find(|&k| {
            k + tau <= 24
                && access.hourly[i][h0 + k]
                && busy[k..k + tau].iter().all(|&b| b < inst.crews)
        });
        if let Some(k) = slot {
            busy[k..k + tau].iter_mut().for_each(|b| *b += 1);
            out.push(PlannedAction {
                turbine: i,
                kind,
                start: h0 + k,
                duration: tau as u32,
            });
        }
    }
    out.sort_by_key(|a| (a.start, a.turbine));
    out
}

impl Planner for RulePlanner {
    fn name(&self) -> &str {
        match self.rule {
            Rule::TimeBased => "TBS",
            Rule::Corrective => "CMS",
        }
    }

    fn plan(
        &mut self,
        inst: &FarmInstance,
        grids: &Grids,
        state: &RollingState,
    ) -> Result<DayPlan, PlanError> {
        let requests: Vec<_> = (0..state.armed.len())
            .filter(|&i| state.armed[i])
            .filter_map(|i| self.due(state, i).map(|k| (i, k)))
            .collect();
        let access = believed_access(AccessBelief::WeatherBlind, inst, grids);
        let actions = earliest_slots(inst, &access, state.first_hour(), &requests);
        let worked: u32 = actions.iter().map(|a| a.duration).sum();
        Ok(DayPlan {
            iteration: state.iteration,
            overtime_hours: (f64::from(worked) - inst.crew_hours()).max(0.0),
            vessel: !actions.is_empty(),
            actions,
            ..DayPlan::default()
        })
    }
}
