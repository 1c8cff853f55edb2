use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use offshore_om::access::{access_stats, access_stats_direct};
use offshore_om::data::{
    fit_power_curve_with, read_curve, read_power_pairs, read_prices, read_weather, write_curve,
    PowerCurve,
};
use offshore_om::eval::{
    first_open_day, run_scenario, sensitivity_instance, sensitivity_shift, BenchmarkReport,
    BenchmarkSpec, CellResult, EvalError, TrueAccess,
};
use offshore_om::host::{assemble, IterationInputs, PlanError};
use offshore_om::params::FarmInstance;
use offshore_om::rolling::{
    believed_access, run_with, DayPlan, MilpPlanner, Planner, RollingState,
};
use offshore_om::scenario::Grids;
use offshore_om::strategies::Strategy;
use offshore_om::synth::{
    synthetic_power_pairs, synthetic_prices, synthetic_weather, write_power_pairs, write_prices,
    write_weather,
};
use om_milp::{read_mps, write_mps, MilpModel};

use crate::config::{RunConfig, Source};
use crate::output;

const SYNTHETIC_PAIRS: usize = 20_000;

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

pub fn power_curve(cfg: &RunConfig) -> Result<PowerCurve> {
    if let Some(p) = &cfg.curve {
        let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        return Ok(read_curve(BufReader::new(f))?);
    }
    let pairs = match &cfg.power_pairs {
        Source::Synthetic => synthetic_power_pairs(SYNTHETIC_PAIRS, cfg.data_seed),
        Source::File(p) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            read_power_pairs(BufReader::new(f))?
        }
    };
    Ok(fit_power_curve_with(
        &pairs,
        cfg.bin_width,
        cfg.cut_in,
        cfg.cut_out,
    )?)
}

pub fn load_grids(cfg: &RunConfig, inst: &FarmInstance) -> Result<Grids> {
    let weather = match &cfg.weather {
        Source::Synthetic => synthetic_weather(cfg.data_hours, cfg.data_seed),
        Source::File(p) => read_weather(p)?,
    };
    let prices = if cfg.price_mode == "market" {
        Some(match &cfg.prices {
            Source::Synthetic => synthetic_prices(weather.len(), cfg.data_seed),
            Source::File(p) => read_prices(p)?,
        })
    } else {
        None
    };
    let curve = power_curve(cfg)?;
    Ok(Grids::build(
        inst,
        &weather,
        prices.as_ref(),
        &curve,
        &cfg.grid_config(),
    )?)
}

pub fn generate_data(cfg: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let w = synthetic_weather(cfg.data_hours, cfg.data_seed);
    write_weather(File::create(dir.join("weather.csv"))?, &w)?;
    let p = synthetic_prices(cfg.data_hours, cfg.data_seed);
    write_prices(File::create(dir.join("prices.csv"))?, &p)?;
    let pairs = synthetic_power_pairs(SYNTHETIC_PAIRS, cfg.data_seed);
    write_power_pairs(File::create(dir.join("power_pairs.csv"))?, &pairs)?;
    info!("wrote {} hours of data to {}", w.len(), dir.display());
    Ok(())
}

pub fn fit_curve(cfg: &RunConfig, out: &Path) -> Result<()> {
    let curve = power_curve(cfg)?;
    let mut buf = Vec::new();
    write_curve(&mut buf, &curve)?;
    write(out, &String::from_utf8(buf)?)
}

pub fn plan(cfg: &RunConfig, strategy: Strategy, scenario: usize, out: &Path) -> Result<()> {
    let inst = cfg.instance();
    let grids = load_grids(cfg, &inst)?;
    let t0 = Instant::now();
    let run = run_scenario(
        &inst,
        &grids,
        scenario,
        cfg.horizon_days,
        &cfg.failures,
        strategy,
        &cfg.solver(),
    )?;
    info!(
        "{strategy} scenario {scenario}: {} iterations in {:.1?}, total cost {:.0}",
        run.schedule.plans.len(),
        t0.elapsed(),
        run.metrics.total_cost
    );
    if !run.schedule.unresolved.is_empty() {
        warn!(
            "turbines {:?} were never maintained",
            run.schedule
                .unresolved
                .iter()
                .map(|i| i + 1)
                .collect::<Vec<_>>()
        );
    }
    let header = cfg.header();
    write(
        &out.join("schedule.csv"),
        &output::schedule_csv(&header, scenario, &run.schedule),
    )?;
    write(
        &out.join("metrics.csv"),
        &output::run_metrics_csv(&header, &run),
    )?;
    let log = output::iterations_json(&cfg.seeds(), scenario, &run.schedule);
    write(
        &out.join("iterations.json"),
        &(serde_json::to_string_pretty(&log)? + "\n"),
    )
}

pub fn benchmark(
    cfg: &RunConfig,
    scenarios: usize,
    strategies: &[Strategy],
    out: &Path,
) -> Result<BenchmarkReport> {
    let inst = cfg.instance();
    let grids = load_grids(cfg, &inst)?;
    let spec = BenchmarkSpec {
        horizon_days: cfg.horizon_days,
        scenarios,
        strategies: strategies.to_vec(),
        events: cfg.failures.clone(),
        solver: cfg.solver(),
    };
    spec.check_data(&grids)?;
    let t0 = Instant::now();
    let cells: Vec<CellResult> = spec
        .cells()
        .into_par_iter()
        .map(|(s, k)| {
            let r = run_scenario(
                &inst,
                &grids,
                s,
                spec.horizon_days,
                &spec.events,
                k,
                &spec.solver,
            )
            .with_context(|| format!("scenario {s}, {k}"))?;
            info!("scenario {s} {k}: total cost {:.0}", r.metrics.total_cost);
            Ok(CellResult::from(&r))
        })
        .collect::<Result<_>>()?;
    let report = BenchmarkReport::from_cells(cells);
    info!("{} cells in {:.1?}", report.cells.len(), t0.elapsed());
    for (k, v) in &report.improvement {
        info!("HOST vs {k}: {v:.1}% lower mean cost");
    }
    let header = cfg.header();
    write(
        &out.join("metrics.csv"),
        &output::metrics_csv(&header, &report),
    )?;
    write(
        &out.join("costs_by_scenario.csv"),
        &output::costs_by_scenario_csv(&header, &report),
    )?;
    Ok(report)
}

pub fn sensitivity(cfg: &RunConfig, day: Option<usize>, out: &Path) -> Result<()> {
    let mut inst = sensitivity_instance();
    let base = cfg.instance();
    inst.costs = base.costs;
    inst.crews = base.crews;
    inst.rated_mw = base.rated_mw;
    inst.wind_limit = base.wind_limit;
    inst.wave_limit = base.wave_limit;
    let grids = load_grids(cfg, &inst)?;
    let day = match day {
        Some(d) if d >= 1 => d - 1,
        Some(_) => bail!("days are numbered from 1"),
        None => first_open_day(&inst, &grids)
            .ok_or_else(|| anyhow!("no day gives every turbine an accessible start"))?,
    };
    let rows = [true, false]
        .iter()
        .map(|&relaxed| sensitivity_shift(&inst, &grids, day, relaxed))
        .collect::<Result<Vec<_>, EvalError>>()?;
    for s in &rows {
        info!(
            "{} day {}: {} assignments, MAD {:.0}, NMAD {:.3}",
            if s.relaxed { "relaxed" } else { "constrained" },
            s.day + 1,
            s.count,
            s.mad,
            s.nmad
        );
    }
    let header = cfg.header();
    write(
        &out.join("sensitivity.csv"),
        &output::sensitivity_csv(&header, &rows),
    )?;
    write(
        &out.join("sensitivity_losses.csv"),
        &output::losses_csv(&header, &rows),
    )
}

/// Plans with a MILP planner up to iteration `at`, keeps the model it
/// would solve there and plans nothing from then on.
struct Capture {
    inner: MilpPlanner,
    at: usize,
    model: Option<MilpModel>,
}

impl Planner for Capture {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn plan(
        &mut self,
        inst: &FarmInstance,
        grids: &Grids,
        state: &RollingState,
    ) -> Result<DayPlan, PlanError> {
        if state.iteration < self.at {
            return self.inner.plan(inst, grids, state);
        }
        if state.iteration == self.at {
            let hs = state.horizon_state()?;
            let access = believed_access(self.inner.belief, inst, grids);
            let inp = IterationInputs::from_grids(grids, &access, &hs)?;
            self.model = Some(assemble(inst, &hs, &inp, &self.inner.options)?.0);
        }
        Ok(DayPlan {
            iteration: state.iteration,
            ..DayPlan::default()
        })
    }
}

pub fn export_mps(
    cfg: &RunConfig,
    strategy: Strategy,
    scenario: usize,
    iteration: usize,
    out: &Path,
) -> Result<()> {
    let inner = strategy
        .milp_planner(&cfg.solver())
        .ok_or_else(|| anyhow!("{strategy} is rule-based and builds no model"))?;
    if iteration < 1 || iteration > cfg.horizon_days {
        bail!("iteration {iteration} outside 1..={}", cfg.horizon_days);
    }
    let inst = cfg.instance();
    let grids = load_grids(cfg, &inst)?.window(scenario, cfg.horizon_days)?;
    let mut cap = Capture {
        inner,
        at: iteration,
        model: None,
    };
    run_with(
        &inst,
        &grids,
        cfg.horizon_days,
        &cfg.failures,
        &mut cap,
        &mut TrueAccess,
    )?;
    let model = cap
        .model
        .ok_or_else(|| anyhow!("the loop ended before iteration {iteration}"))?;
    let text = write_mps(&model);
    let back = read_mps(&text).context("re-reading the written MPS")?;
    if back.num_vars() != model.num_vars() || back.num_constraints() != model.num_constraints() {
        bail!("MPS round trip changed the model dimensions");
    }
    info!(
        "iteration {iteration}: {} columns, {} rows",
        model.num_vars(),
        model.num_constraints()
    );
    write(out, &text)
}

pub fn scaling(cfg: &RunConfig, sizes: &[usize], out: &Path) -> Result<()> {
    let mut text = cfg.header();
    text.push_str("turbines,num_vars,num_constraints,solve_s,nodes,gap,status\n");
    for &n in sizes {
        let mut c = cfg.clone();
        c.turbines = n;
        c.rle_days.clear();
        c.failures.clear();
        let inst = c.instance();
        let grids = load_grids(&c, &inst)?.window(0, c.horizon_days)?;
        let state = RollingState::new(&inst, c.horizon_days, &[])?;
        let mut planner = MilpPlanner::host(c.solver());
        let plan = planner.plan(&inst, &grids, &state)?;
        let s = plan.solve.expect("MILP plans carry a solve log");
        info!(
            "{n} turbines: {} x {} model, {:.2?}",
            s.num_vars, s.num_constraints, s.solve_time
        );
        text.push_str(&format!(
            "{n},{},{},{:.3},{},{:.2e},{:?}\n",
            s.num_vars,
            s.num_constraints,
            s.solve_time.as_secs_f64(),
            s.nodes,
            s.gap,
            s.status
        ));
    }
    write(out, &text)
}

/// Returns whether both computations agree.
pub fn access_report(cfg: &RunConfig) -> Result<bool> {
    let inst = cfg.instance();
    let grids = load_grids(cfg, &inst)?;
    let (nu, eta) = (inst.wind_limit, inst.wave_limit);
    let a = access_stats(&grids.wind, &grids.wave, nu, eta, &grids.access);
    let tau: Vec<u32> = inst.turbines.iter().map(|t| t.repair_hours).collect();
    let b = access_stats_direct(
        &grids.wind,
        &grids.wave,
        nu,
        eta,
        &tau,
        grids.access.daylight,
    );
    println!("path,inaccessible_fraction,max_closed_days");
    println!("grid,{:.6},{}", a.inaccessible_fraction, a.max_closed_days);
    println!(
        "direct,{:.6},{}",
        b.inaccessible_fraction, b.max_closed_days
    );
    Ok(a == b)
}
