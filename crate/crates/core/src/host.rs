//! The two-stage maintenance MILP of one rolling-horizon iteration: an hourly
//! short-term horizon (STH) of 24 hours followed by a daily long-term
//! horizon (LTH) up to the last day of the optimization horizon.
//!
//! Time is indexed relative to the iteration: STH hours t = 1..24 and LTH
//! days d = 2..d_J with d_J = J - ℓ + 1; residual lives are the days left
//! at the start of the iteration.

use std::time::Duration;

use om_milp::{
    solve, LinExpr, MilpModel, MilpSolution, ModelError, Relation, Sense, SolveStatus,
    SolverConfig, VarId, VarKind,
};
use thiserror::Error;

use crate::access::AccessGrid;
use crate::params::{FarmInstance, MaintenanceKind, ParamError};
use crate::scenario::Grids;

const STH: usize = 24;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("missing {what} for t={t}, i={i}")]
    MissingHour {
        what: &'static str,
        t: usize,
        i: usize,
    },
    #[error("missing {what} for d={d}, i={i}")]
    MissingDay {
        what: &'static str,
        d: usize,
        i: usize,
    },
    #[error("invalid horizon: {0}")]
    Horizon(String),
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("{var} = {value} is not integral")]
    Fractional { var: String, value: f64 },
    #[error("turbine {turbine} has {count} actions in one iteration")]
    MultipleActions { turbine: usize, count: usize },
    #[error("solution has no values")]
    NoIncumbent,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("iteration {iteration} is infeasible")]
    Infeasible { iteration: usize },
    #[error("iteration {iteration}: solver stopped without a solution ({status:?})")]
    NoSolution {
        iteration: usize,
        status: SolveStatus,
    },
    #[error("objective audit mismatch: solver {solver}, recomputed {audit}")]
    Audit { solver: f64, audit: f64 },
}

/// Iteration ℓ's view of the maintenance state.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonState {
    /// ℓ, 1-based.
    pub iteration: usize,
    /// J
    pub horizon_days: usize,
    /// θ_i
    pub armed: Vec<bool>,
    /// Whether the maintenance requirement forces a task for an armed turbine; cleared only when a
    /// turbine can no longer be served within the horizon.
    pub required: Vec<bool>,
    /// Days of residual life left at the start of the iteration (0 = failed).
    pub rle: Vec<u32>,
}

impl HorizonState {
    pub fn new(
        iteration: usize,
        horizon_days: usize,
        armed: Vec<bool>,
        rle: Vec<u32>,
    ) -> Result<Self, AssemblyError> {
        if iteration < 1 || iteration > horizon_days {
            return Err(AssemblyError::Horizon(format!(
                "iteration {iteration} outside 1..={horizon_days}"
            )));
        }
        if armed.len() != rle.len() {
            return Err(AssemblyError::Horizon(
                "one residual life per turbine".into(),
            ));
        }
        let state = HorizonState {
            iteration,
            horizon_days,
            required: armed.clone(),
            armed,
            rle,
        };
        if state.lth_days() > 0 {
            if let Some(i) = (0..state.rle.len())
                .find(|&i| state.armed[i] && state.rle[i] as usize > state.last_day())
            {
                return Err(AssemblyError::Horizon(format!(
                    "turbine {i}: residual life {} exceeds the last horizon day {}",
                    state.rle[i],
                    state.last_day()
                )));
            }
        }
        Ok(state)
    }

    /// 0-based index of the first STH hour, 24(ℓ-1).
    pub fn first_hour(&self) -> usize {
        STH * (self.iteration - 1)
    }

    /// |D| = J - ℓ
    pub fn lth_days(&self) -> usize {
        self.horizon_days - self.iteration
    }

    /// d_J in relative days.
    pub fn last_day(&self) -> usize {
        self.horizon_days - self.iteration + 1
    }

    /// 1-based absolute day of relative day `d`.
    pub fn absolute_day(&self, d: usize) -> usize {
        self.iteration + d - 1
    }
}

/// Weather- and market-dependent parameters of one iteration.
/// Hourly vectors are indexed `[i][t-1]`, daily ones `[i][d-2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationInputs {
    pub power: Vec<Vec<f64>>,
    pub access: Vec<Vec<bool>>,
    pub price: Vec<f64>,
    pub curtailment: Vec<f64>,
    pub power_daily: Vec<Vec<f64>>,
    pub access_daily: Vec<Vec<bool>>,
    pub price_daily: Vec<f64>,
}

impl IterationInputs {
    /// Reads iteration ℓ's slice of scenario grids, with `access` as
    /// the planner's belief about accessibility.
    pub fn from_grids(
        grids: &Grids,
        access: &AccessGrid,
        state: &HorizonState,
    ) -> Result<Self, AssemblyError> {
        let n = state.armed.len();
        let h0 = state.first_hour();
        let d0 = state.iteration; // 0-based index of relative day 2
        let nd = state.lth_days();
        let hour_slice = |v: &Vec<Vec<f64>>, what| -> Result<Vec<Vec<f64>>, AssemblyError> {
            (0..n)
                .map(|i| {
                    let row = v
                        .get(i)
                        .ok_or(AssemblyError::MissingHour { what, t: 1, i })?;
                    row.get(h0..h0 + STH)
                        .map(<[f64]>::to_vec)
                        .ok_or(AssemblyError::MissingHour {
                            what,
                            t: row.len().saturating_sub(h0) + 1,
                            i,
                        })
                })
                .collect()
        };
        let power = hour_slice(&grids.power, "power")?;
        let access_h = (0..n)
            .map(|i| {
                let row = access.hourly.get(i).ok_or(AssemblyError::MissingHour {
                    what: "access",
                    t: 1,
                    i,
                })?;
                row.get(h0..h0 + STH)
                    .map(<[bool]>::to_vec)
                    .ok_or(AssemblyError::MissingHour {
                        what: "access",
                        t: row.len().saturating_sub(h0) + 1,
                        i,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let price = grids
            .price
            .get(h0..h0 + STH)
            .ok_or(AssemblyError::MissingHour {
                what: "price",
                t: 1,
                i: 0,
            })?
            .to_vec();
        let curtailment = grids
            .curtailment
            .get(h0..h0 + STH)
            .ok_or(AssemblyError::MissingHour {
                what: "curtailment",
                t: 1,
                i: 0,
            })?
            .to_vec();
        let power_daily = (0..n)
            .map(|i| {
                grids
                    .power_daily
                    .get(i)
                    .and_then(|r| r.get(d0..d0 + nd))
                    .map(<[f64]>::to_vec)
                    .ok_or(AssemblyError::MissingDay {
                        what: "daily power",
                        d: 2,
                        i,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let access_daily = (0..n)
            .map(|i| {
                access
                    .daily
                    .get(i)
                    .and_then(|r| r.get(d0..d0 + nd))
                    .map(<[bool]>::to_vec)
                    .ok_or(AssemblyError::MissingDay {
                        what: "daily access",
                        d: 2,
                        i,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let price_daily = grids
            .price_daily
            .get(d0..d0 + nd)
            .ok_or(AssemblyError::MissingDay {
                what: "daily price",
                d: 2,
                i: 0,
            })?
            .to_vec();
        Ok(IterationInputs {
            power,
            access: access_h,
            price,
            curtailment,
            power_daily,
            access_daily,
            price_daily,
        })
    }

    fn check(&self, n: usize, nd: usize) -> Result<(), AssemblyError> {
        let hourly_f = [("power", &self.power)];
        for (what, grid) in hourly_f {
            for i in 0..n {
                let len = grid.get(i).map_or(0, Vec::len);
                if len < STH {
                    return Err(AssemblyError::MissingHour {
                        what,
                        t: len + 1,
                        i,
                    });
                }
            }
        }
        for i in 0..n {
            let len = self.access.get(i).map_or(0, Vec::len);
            if len < STH {
                return Err(AssemblyError::MissingHour {
                    what: "access",
                    t: len + 1,
                    i,
                });
            }
            let len = self.power_daily.get(i).map_or(0, Vec::len);
            if len < nd {
                return Err(AssemblyError::MissingDay {
                    what: "daily power",
                    d: len + 2,
                    i,
                });
            }
            let len = self.access_daily.get(i).map_or(0, Vec::len);
            if len < nd {
                return Err(AssemblyError::MissingDay {
                    what: "daily access",
                    d: len + 2,
                    i,
                });
            }
        }
        if self.price.len() < STH {
            return Err(AssemblyError::MissingHour {
                what: "price",
                t: self.price.len() + 1,
                i: 0,
            });
        }
        if self.curtailment.len() < STH {
            return Err(AssemblyError::MissingHour {
                what: "curtailment",
                t: self.curtailment.len() + 1,
                i: 0,
            });
        }
        if self.price_daily.len() < nd {
            return Err(AssemblyError::MissingDay {
                what: "daily price",
                d: self.price_daily.len() + 2,
                i: 0,
            });
        }
        Ok(())
    }
}

/// Planning-objective modifications used by the benchmark strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    /// Replaces Ω in the objective.
    pub vessel_cost: Option<f64>,
    /// Adds rows that cut fractional task splitting: at most one task per
    /// turbine and iteration, hourly crew occupancy per started task, vessel
    /// rental per STH task, and crew capacity (hourly, overtime and LTH)
    /// only while a vessel is rented.
    /// Optimal plans never need a second task on one turbine unless Φ is
    /// below the production a double-counted failure relief would unlock.
    pub tighten: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            vessel_cost: None,
            tighten: true,
        }
    }
}

impl ModelOptions {
    /// The model exactly as formulated, without tightening rows.
    pub fn literal() -> Self {
        ModelOptions {
            tighten: false,
            ..Self::default()
        }
    }
}

/// Ids of every model variable. Hourly entries are `[i][t-1]`, daily ones
/// `[i][d-2]` or `[d-2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableMap {
    pub m: Vec<Vec<VarId>>,
    pub n: Vec<Vec<VarId>>,
    pub x: Vec<Vec<VarId>>,
    pub y: Vec<Vec<VarId>>,
    pub p: Vec<Vec<VarId>>,
    pub m_l: Vec<Vec<VarId>>,
    pub n_l: Vec<Vec<VarId>>,
    pub y_l: Vec<Vec<VarId>>,
    pub p_l: Vec<Vec<VarId>>,
    pub v: VarId,
    pub v_l: Vec<VarId>,
    pub q: VarId,
    pub s: VarId,
    pub l: Vec<VarId>,
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Builds the iteration model: profit objective plus all task, crew, vessel,
/// availability, power and access rows.
pub fn assemble(
    inst: &FarmInstance,
    st: &HorizonState,
    inp: &IterationInputs,
    opts: &ModelOptions,
) -> Result<(MilpModel, VariableMap), AssemblyError> {
    inst.validate()?;
    let ni = inst.num_turbines();
    if st.armed.len() != ni || st.required.len() != ni || st.rle.len() != ni {
        return Err(AssemblyError::Horizon(
            "state does not match the turbine count".into(),
        ));
    }
    let nd = st.lth_days();
    inp.check(ni, nd)?;

    let costs = &inst.costs;
    let omega = opts.vessel_cost.unwrap_or(costs.vessel_daily);
    let r = inst.rated_mw;
    let bw = inst.crew_hours();
    let beta = inst.beta;
    let t_f = STH as f64;
    let d_j = st.last_day() as f64;

    let mut md = MilpModel::named(format!("host{}", st.iteration), Sense::Maximize);
    let hourly =
        |md: &mut MilpModel, sym: &str, kind: VarKind, ub: &dyn Fn(usize, usize) -> f64| {
            (0..ni)
                .map(|i| {
                    (0..STH)
                        .map(|k| {
                            md.add_var_bounded(
                                format!("{sym}_{}_{}", k + 1, i + 1),
                                kind,
                                0.0,
                                ub(i, k),
                                0.0,
                            )
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        };
    let decision_ub = |i: usize, _| indicator(st.armed[i]);
    let m = hourly(&mut md, "m", VarKind::Binary, &decision_ub)?;
    let n = hourly(&mut md, "n", VarKind::Binary, &decision_ub)?;
    let x = hourly(&mut md, "x", VarKind::Binary, &decision_ub)?;
    let y = hourly(&mut md, "y", VarKind::Binary, &|_, _| 1.0)?;
    let p = hourly(&mut md, "p", VarKind::Continuous, &|i, k| {
        r * inp.power[i][k]
    })?;

    let daily = |md: &mut MilpModel, sym: &str, kind: VarKind, ub: &dyn Fn(usize, usize) -> f64| {
        (0..ni)
            .map(|i| {
                (0..nd)
                    .map(|k| {
                        md.add_var_bounded(
                            format!("{sym}_{}_{}", k + 2, i + 1),
                            kind,
                            0.0,
                            ub(i, k),
                            0.0,
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let m_l = daily(&mut md, "mL", VarKind::Binary, &decision_ub)?;
    let n_l = daily(&mut md, "nL", VarKind::Binary, &decision_ub)?;
    let y_l = daily(&mut md, "yL", VarKind::Binary, &|_, _| 1.0)?;
    let p_l = daily(&mut md, "pL", VarKind::Continuous, &|i, k| {
        24.0 * r * inp.power_daily[i][k]
    })?;

    let v = md.add_var("v", VarKind::Binary, 0.0)?;
    let v_l = (0..nd)
        .map(|k| md.add_var(format!("vL_{}", k + 2), VarKind::Binary, 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    let q = md.add_var_bounded("q", VarKind::Integer, 0.0, (STH * ni) as f64, 0.0)?;
    let s = md.add_var_bounded(
        "s",
        VarKind::Continuous,
        f64::NEG_INFINITY,
        f64::INFINITY,
        1.0,
    )?;
    let l = (0..nd)
        .map(|k| {
            md.add_var_bounded(
                format!("l_{}", k + 2),
                VarKind::Continuous,
                f64::NEG_INFINITY,
                f64::INFINITY,
                1.0,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    // short-term profit
    let mut e = LinExpr::new().term(s, 1.0);
    for i in 0..ni {
        for k in 0..STH {
            e.add(p[i][k], -inp.price[k]);
            e.add(m[i][k], costs.pm);
            e.add(n[i][k], costs.cm);
            e.add(x[i][k], costs.crew_hourly);
        }
    }
    e.add(v, omega);
    e.add(q, costs.overtime_hourly);
    md.add_constraint("profit_sth", e, Relation::Eq, 0.0)?;

    // long-term daily profit
    for k in 0..nd {
        let mut e = LinExpr::new().term(l[k], 1.0);
        for i in 0..ni {
            let tau = f64::from(inst.turbines[i].repair_hours);
            e.add(p_l[i][k], -inp.price_daily[k]);
            e.add(m_l[i][k], costs.pm + costs.crew_hourly * tau);
            e.add(n_l[i][k], costs.cm + costs.crew_hourly * tau);
        }
        e.add(v_l[k], omega);
        md.add_constraint(format!("profit_d{}", k + 2), e, Relation::Eq, 0.0)?;
    }

    for i in 0..ni {
        if !st.armed[i] {
            continue;
        }
        let tau = inst.turbines[i].repair_hours as usize;
        let lam = f64::from(st.rle[i]);
        let wt = i + 1;

        // maintenance requirement
        if st.required[i] {
            let mut e = LinExpr::new();
            for k in 0..STH {
                e.add(m[i][k], 1.0);
                e.add(n[i][k], 1.0);
            }
            for k in 0..nd {
                e.add(m_l[i][k], 1.0);
                e.add(n_l[i][k], 1.0);
            }
            md.add_constraint(format!("require_{wt}"), e, Relation::Ge, 1.0)?;
        }

        for k in 0..STH {
            let t = (k + 1) as f64;
            // crew occupied for τ consecutive hours
            let mut e: LinExpr = (k..(k + tau).min(STH)).map(|kk| (x[i][kk], 1.0)).collect();
            e.add(m[i][k], -(tau as f64));
            e.add(n[i][k], -(tau as f64));
            md.add_constraint(format!("occupy_{}_{wt}", k + 1), e, Relation::Ge, 0.0)?;
            // PM only up to the RLE
            md.add_constraint(
                format!("pm_deadline_{}_{wt}", k + 1),
                LinExpr::new().term(m[i][k], 1.0),
                Relation::Le,
                indicator(t <= 24.0 * lam),
            )?;
            // CM only after the RLE
            md.add_constraint(
                format!("cm_after_{}_{wt}", k + 1),
                LinExpr::new().term(n[i][k], 1.0),
                Relation::Le,
                t / (24.0 * lam + beta),
            )?;
            // failed turbine unavailable until its CM
            let den = t_f - t + beta;
            let mut e = LinExpr::new().term(y[i][k], 1.0);
            for kk in 0..STH {
                let tt = (kk + 1) as f64;
                e.add(n[i][kk], -(t_f - tt) / den);
            }
            md.add_constraint(
                format!("avail_{}_{wt}", k + 1),
                e,
                Relation::Le,
                indicator(t <= 24.0 * lam),
            )?;
            // unavailable while maintained
            md.add_constraint(
                format!("busy_{}_{wt}", k + 1),
                LinExpr::new().term(y[i][k], 1.0).term(x[i][k], 1.0),
                Relation::Le,
                1.0,
            )?;
            // vessel rented for any STH task
            md.add_constraint(
                format!("vessel_{}_{wt}", k + 1),
                LinExpr::new()
                    .term(v, 1.0)
                    .term(m[i][k], -1.0)
                    .term(n[i][k], -1.0),
                Relation::Ge,
                0.0,
            )?;
            // access
            md.add_constraint(
                format!("access_{}_{wt}", k + 1),
                LinExpr::new().term(m[i][k], 1.0).term(n[i][k], 1.0),
                Relation::Le,
                indicator(inp.access[i][k]),
            )?;
        }

        for k in 0..nd {
            let d = (k + 2) as f64;
            // PM by the RLE day
            md.add_constraint(
                format!("pm_deadline_d{}_{wt}", k + 2),
                LinExpr::new().term(m_l[i][k], 1.0),
                Relation::Le,
                indicator(d <= lam),
            )?;
            // CM after the RLE day
            md.add_constraint(
                format!("cm_after_d{}_{wt}", k + 2),
                LinExpr::new().term(n_l[i][k], 1.0),
                Relation::Le,
                (d_j - lam) / (d_j - d + beta),
            )?;
            // failed until repaired (daily)
            let den = d_j - d + beta;
            let mut e = LinExpr::new().term(y_l[i][k], 1.0);
            for kk in 0..nd {
                e.add(n_l[i][kk], (kk + 2) as f64 / den);
            }
            md.add_constraint(
                format!("avail_d{}_{wt}", k + 2),
                e,
                Relation::Le,
                indicator(d <= lam) + d_j / den,
            )?;
            // vessel rented for any LTH task
            md.add_constraint(
                format!("vessel_d{}_{wt}", k + 2),
                LinExpr::new()
                    .term(v_l[k], 1.0)
                    .term(m_l[i][k], -1.0)
                    .term(n_l[i][k], -1.0),
                Relation::Ge,
                0.0,
            )?;
            // daily access
            md.add_constraint(
                format!("access_d{}_{wt}", k + 2),
                LinExpr::new().term(m_l[i][k], 1.0).term(n_l[i][k], 1.0),
                Relation::Le,
                indicator(inp.access_daily[i][k]),
            )?;
        }
    }

    if opts.tighten {
        for i in (0..ni).filter(|&i| st.armed[i]) {
            let tau = inst.turbines[i].repair_hours as usize;
            let wt = i + 1;
            let mut once = LinExpr::new();
            let mut rent = LinExpr::new().term(v, 1.0);
            for k in 0..STH {
                for id in [m[i][k], n[i][k]] {
                    once.add(id, 1.0);
                    rent.add(id, -1.0);
                }
                // the crew is on turbine i during hour k if any task started
                // in the τ hours up to k
                let mut cover = LinExpr::new().term(x[i][k], 1.0);
                for kk in (k + 1).saturating_sub(tau)..=k {
                    cover.add(m[i][kk], -1.0);
                    cover.add(n[i][kk], -1.0);
                }
                md.add_constraint(format!("cover_{}_{wt}", k + 1), cover, Relation::Ge, 0.0)?;
            }
            for k in 0..nd {
                once.add(m_l[i][k], 1.0);
                once.add(n_l[i][k], 1.0);
            }
            md.add_constraint(format!("once_{wt}"), once, Relation::Le, 1.0)?;
            md.add_constraint(format!("rent_{wt}"), rent, Relation::Ge, 0.0)?;

            // Disaggregated availability after the RLE: a CM whose linking
            // coefficient is below one forces the turbine down, so only CMs
            // that finish early enough can lift it.
            let lam = f64::from(st.rle[i]);
            for k in 0..STH {
                let t = (k + 1) as f64;
                if t <= 24.0 * lam {
                    continue;
                }
                let den = t_f - t + beta;
                let mut e = LinExpr::new().term(y[i][k], 1.0);
                for kk in 0..STH {
                    if t_f - (kk + 1) as f64 >= den {
                        e.add(n[i][kk], -1.0);
                    }
                }
                md.add_constraint(format!("avail_cut_{}_{wt}", k + 1), e, Relation::Le, 0.0)?;
            }
            for k in 0..nd {
                let d = (k + 2) as f64;
                if d <= lam {
                    continue;
                }
                let den = d_j - d + beta;
                let mut e = LinExpr::new().term(y_l[i][k], 1.0);
                for kk in 0..nd {
                    if d_j - ((kk + 2) as f64) < den {
                        e.add(n_l[i][kk], 1.0);
                    }
                }
                md.add_constraint(format!("avail_cut_d{}_{wt}", k + 2), e, Relation::Le, 1.0)?;
            }
        }
    }

    // crew bound; tightened, crews only work from a rented vessel
    let crews = f64::from(inst.crews);
    for k in 0..STH {
        let mut e: LinExpr = (0..ni).map(|i| (x[i][k], 1.0)).collect();
        if opts.tighten {
            e.add(v, -crews);
            md.add_constraint(format!("crews_{}", k + 1), e, Relation::Le, 0.0)?;
        } else {
            md.add_constraint(format!("crews_{}", k + 1), e, Relation::Le, crews)?;
        }
    }
    // overtime
    let mut e: LinExpr = (0..ni)
        .flat_map(|i| x[i].iter().map(|&xv| (xv, 1.0)))
        .collect();
    e.add(q, -1.0);
    if opts.tighten {
        e.add(v, -bw);
        md.add_constraint("overtime", e, Relation::Le, 0.0)?;
    } else {
        md.add_constraint("overtime", e, Relation::Le, bw)?;
    }
    // LTH crew hours
    for k in 0..nd {
        let mut e = LinExpr::new();
        for i in 0..ni {
            let tau = f64::from(inst.turbines[i].repair_hours);
            e.add(m_l[i][k], tau);
            e.add(n_l[i][k], tau);
        }
        if opts.tighten {
            e.add(v_l[k], -bw);
            md.add_constraint(format!("crew_hours_d{}", k + 2), e, Relation::Le, 0.0)?;
        } else {
            md.add_constraint(format!("crew_hours_d{}", k + 2), e, Relation::Le, bw)?;
        }
    }
    // power
    for i in 0..ni {
        for k in 0..STH {
            md.add_constraint(
                format!("power_{}_{}", k + 1, i + 1),
                LinExpr::new()
                    .term(p[i][k], 1.0)
                    .term(y[i][k], -r * inp.power[i][k]),
                Relation::Eq,
                0.0,
            )?;
        }
        let tau = f64::from(inst.turbines[i].repair_hours);
        for k in 0..nd {
            let f = inp.power_daily[i][k];
            md.add_constraint(
                format!("power_d{}_{}", k + 2, i + 1),
                LinExpr::new()
                    .term(p_l[i][k], 1.0)
                    .term(y_l[i][k], -24.0 * r * f)
                    .term(m_l[i][k], r * f * tau),
                Relation::Eq,
                0.0,
            )?;
        }
    }
    // curtailment
    for k in 0..STH {
        let e: LinExpr = (0..ni).map(|i| (p[i][k], 1.0)).collect();
        let cap = inp.curtailment[k] * r * (0..ni).map(|i| inp.power[i][k]).sum::<f64>();
        md.add_constraint(format!("curtail_{}", k + 1), e, Relation::Le, cap)?;
    }

    // vessel rentals settle the most objective per branch, then task starts
    md.set_priority(v, 2);
    for &id in &v_l {
        md.set_priority(id, 2);
    }
    for ids in [&m, &n, &m_l, &n_l] {
        for &id in ids.iter().flatten() {
            md.set_priority(id, 1);
        }
    }

    let map = VariableMap {
        m,
        n,
        x,
        y,
        p,
        m_l,
        n_l,
        y_l,
        p_l,
        v,
        v_l,
        q,
        s,
        l,
    };
    Ok((md, map))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedAction {
    pub turbine: usize,
    pub kind: MaintenanceKind,
    /// 0-based hour from the start of the scenario: relative hour t of
    /// iteration ℓ maps to 24(ℓ-1) + t - 1.
    pub start: usize,
    pub duration: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongTermAction {
    pub turbine: usize,
    pub kind: MaintenanceKind,
    /// 1-based scenario day.
    pub day: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    pub iteration: usize,
    pub sth: Vec<PlannedAction>,
    pub lth: Vec<LongTermAction>,
    pub vessel_sth: bool,
    /// 1-based scenario days with a planned LTH rental.
    pub vessel_days: Vec<usize>,
    pub overtime_hours: f64,
}

const INT_TOL: f64 = 1e-6;

fn as_bit(model: &MilpModel, values: &[f64], id: VarId) -> Result<bool, DecodeError> {
    let v = values[id.0];
    if (v - v.round()).abs() > INT_TOL {
        return Err(DecodeError::Fractional {
            var: model.var(id).name.clone(),
            value: v,
        });
    }
    Ok(v > 0.5)
}

/// Decodes `m`/`n` decisions into actions; `model` supplies names for
/// diagnostics.
pub fn extract_schedule(
    model: &MilpModel,
    values: &[f64],
    map: &VariableMap,
    inst: &FarmInstance,
    st: &HorizonState,
) -> Result<Schedule, DecodeError> {
    if values.len() != model.num_vars() {
        return Err(DecodeError::NoIncumbent);
    }
    let mut sched = Schedule {
        iteration: st.iteration,
        ..Schedule::default()
    };
    for i in 0..map.m.len() {
        let mut count = 0;
        let duration = inst.turbines[i].repair_hours;
        for k in 0..STH {
            for (ids, kind) in [
                (&map.m, MaintenanceKind::Preventive),
                (&map.n, MaintenanceKind::Corrective),
            ] {
                if as_bit(model, values, ids[i][k])? {
                    count += 1;
                    sched.sth.push(PlannedAction {
                        turbine: i,
                        kind,
                        start: st.first_hour() + k,
                        duration,
                    });
                }
            }
        }
        for k in 0..map.m_l[i].len() {
            for (ids, kind) in [
                (&map.m_l, MaintenanceKind::Preventive),
                (&map.n_l, MaintenanceKind::Corrective),
            ] {
                if as_bit(model, values, ids[i][k])? {
                    count += 1;
                    sched.lth.push(LongTermAction {
                        turbine: i,
                        kind,
                        day: st.absolute_day(k + 2),
                    });
                }
            }
        }
        if count > 1 {
            return Err(DecodeError::MultipleActions { turbine: i, count });
        }
    }
    sched.sth.sort_by_key(|a| (a.start, a.turbine));
    sched.vessel_sth = as_bit(model, values, map.v)?;
    for (k, &id) in map.v_l.iter().enumerate() {
        if as_bit(model, values, id)? {
            sched.vessel_days.push(st.absolute_day(k + 2));
        }
    }
    let q = values[map.q.0];
    if (q - q.round()).abs() > INT_TOL {
        return Err(DecodeError::Fractional {
            var: "q".into(),
            value: q,
        });
    }
    sched.overtime_hours = q.round();
    Ok(sched)
}

/// Recomputes s + Σ l_d from decoded values by direct arithmetic (power from
/// availability, costs from decisions), bypassing the model rows.
pub fn objective_audit(
    values: &[f64],
    map: &VariableMap,
    inst: &FarmInstance,
    inp: &IterationInputs,
    opts: &ModelOptions,
) -> f64 {
    let c = &inst.costs;
    let omega = opts.vessel_cost.unwrap_or(c.vessel_daily);
    let r = inst.rated_mw;
    let val = |id: VarId| values[id.0];
    let mut s = 0.0;
    for i in 0..map.m.len() {
        for k in 0..STH {
            s += inp.price[k] * r * inp.power[i][k] * val(map.y[i][k])
                - c.pm * val(map.m[i][k])
                - c.cm * val(map.n[i][k])
                - c.crew_hourly * val(map.x[i][k]);
        }
    }
    s -= omega * val(map.v) + c.overtime_hourly * val(map.q);
    let mut long = 0.0;
    for k in 0..map.v_l.len() {
        let mut l = 0.0;
        for i in 0..map.m.len() {
            let tau = f64::from(inst.turbines[i].repair_hours);
            let (ml, nl) = (val(map.m_l[i][k]), val(map.n_l[i][k]));
            l += inp.price_daily[k]
                * 24.0
                * r
                * inp.power_daily[i][k]
                * (val(map.y_l[i][k]) - ml * tau / 24.0)
                - c.pm * ml
                - c.cm * nl
                - c.crew_hourly * tau * (ml + nl);
        }
        long += l - omega * val(map.v_l[k]);
    }
    s + long
}

#[derive(Debug, Clone)]
pub struct IterationResult {
    pub schedule: Schedule,
    pub objective: f64,
    /// STH cost components at the solution: K·Σm + Φ·Σn + Ψ·Σx + Ω·v + Q·q,
    /// with Ω as planned.
    pub sth_cost: f64,
    pub audit: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub solve_time: Duration,
    pub nodes: usize,
    pub num_vars: usize,
    pub num_constraints: usize,
}

/// Assembles, solves, decodes and audits one iteration.
pub fn solve_iteration(
    inst: &FarmInstance,
    st: &HorizonState,
    inp: &IterationInputs,
    opts: &ModelOptions,
    cfg: &SolverConfig,
) -> Result<IterationResult, PlanError> {
    let (model, map) = assemble(inst, st, inp, opts)?;
    let sol: MilpSolution = solve(&model, cfg);
    match sol.status {
        SolveStatus::Infeasible => {
            return Err(PlanError::Infeasible {
                iteration: st.iteration,
            })
        }
        status if !sol.has_incumbent() => {
            return Err(PlanError::NoSolution {
                iteration: st.iteration,
                status,
            })
        }
        _ => {}
    }
    let schedule = extract_schedule(&model, &sol.values, &map, inst, st)?;
    let audit = objective_audit(&sol.values, &map, inst, inp, opts);
    let costs = &inst.costs;
    let val = |id: VarId| sol.values[id.0];
    let mut sth_cost = opts.vessel_cost.unwrap_or(costs.vessel_daily) * val(map.v)
        + costs.overtime_hourly * val(map.q);
    for i in 0..map.m.len() {
        for k in 0..STH {
            sth_cost += costs.pm * val(map.m[i][k])
                + costs.cm * val(map.n[i][k])
                + costs.crew_hourly * val(map.x[i][k]);
        }
    }
    if (audit - sol.objective).abs() > 1e-6 * sol.objective.abs().max(1.0) {
        return Err(PlanError::Audit {
            solver: sol.objective,
            audit,
        });
    }
    Ok(IterationResult {
        schedule,
        objective: sol.objective,
        sth_cost,
        audit,
        gap: sol.gap,
        status: sol.status,
        solve_time: sol.elapsed,
        nodes: sol.nodes,
        num_vars: model.num_vars(),
        num_constraints: model.num_constraints(),
    })
}
