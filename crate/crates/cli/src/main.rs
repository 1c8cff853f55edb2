mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use offshore_om::strategies::Strategy;

use config::{default_config_text, ConfigError, RunConfig};

/// Rolling-horizon O&M planning for offshore wind farms.
#[derive(Parser, Debug)]
#[command(name = "om", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set turbines=20`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the commented default configuration.
    InitConfig,
    /// Write the synthetic weather, price and power-pair series.
    GenerateData {
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Fit the power curve by the method of bins.
    FitCurve {
        #[arg(long, default_value = "out/curve.csv")]
        out: PathBuf,
    },
    /// Run one strategy over one scenario.
    Plan {
        #[arg(long, default_value = "host")]
        strategy: Strategy,
        /// 0-based day offset of the scenario in the data.
        #[arg(long, default_value_t = 0)]
        scenario: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every strategy over every scenario.
    Benchmark {
        /// Defaults to `scenarios` from the configuration.
        #[arg(long)]
        scenarios: Option<usize>,
        /// `all` or a comma-separated list.
        #[arg(long, default_value = "all")]
        strategies: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Start-time sensitivity of a three-turbine day.
    Sensitivity {
        /// 1-based day; defaults to the first day every turbine can be reached.
        #[arg(long)]
        day: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Dump one iteration's model as MPS.
    ExportMps {
        #[arg(long, default_value_t = 1)]
        iteration: usize,
        #[arg(long, default_value = "host")]
        strategy: Strategy,
        #[arg(long, default_value_t = 0)]
        scenario: usize,
        #[arg(long, default_value = "out/model.mps")]
        out: PathBuf,
    },
    /// Single-iteration solve times for several farm sizes.
    Scaling {
        #[arg(long, value_delimiter = ',', default_value = "10,20,30")]
        turbines: Vec<usize>,
        #[arg(long, default_value = "out/scaling.csv")]
        out: PathBuf,
    },
    /// Inaccessibility statistics, computed two ways.
    AccessStats,
}

fn parse_strategies(s: &str) -> Result<Vec<Strategy>, ConfigError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Strategy::ALL.to_vec());
    }
    let mut out: Vec<Strategy> = s
        .split(',')
        .map(|k| {
            k.parse().map_err(|why| ConfigError::Value {
                key: "--strategies".into(),
                value: k.into(),
                why,
            })
        })
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for pair in &cli.overrides {
        cfg.set_pair(pair)?;
    }
    if !matches!(
        cli.command,
        Command::InitConfig | Command::GenerateData { .. }
    ) {
        cfg.validate()?;
    }
    Ok(cfg)
}

fn threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("OM_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| ConfigError::Value {
        key: "OM_THREADS".into(),
        value: v.clone(),
        why: "expected a thread count".into(),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::Invalid(e.to_string()))
}

fn execute(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::InitConfig => print!("{}", default_config_text()),
        Command::GenerateData { out } => run::generate_data(cfg, out)?,
        Command::FitCurve { out } => run::fit_curve(cfg, out)?,
        Command::Plan {
            strategy,
            scenario,
            out,
        } => run::plan(cfg, *strategy, *scenario, out)?,
        Command::Benchmark {
            scenarios,
            strategies,
            out,
        } => {
            let ks = parse_strategies(strategies)?;
            let report = run::benchmark(cfg, scenarios.unwrap_or(cfg.scenarios), &ks, out)?;
            for s in &report.summaries {
                println!(
                    "{:<5} mean total cost {:>12.0}  rentals {:>5.1}  PM {:>4.1}  CM {:>4.1}",
                    s.strategy.label(),
                    s.mean.total_cost,
                    s.mean_rentals,
                    s.mean_pm,
                    s.mean_cm
                );
            }
            for (k, v) in &report.improvement {
                println!("HOST vs {:<5} {v:>6.1}%", k.label());
            }
        }
        Command::Sensitivity { day, out } => run::sensitivity(cfg, *day, out)?,
        Command::ExportMps {
            iteration,
            strategy,
            scenario,
            out,
        } => run::export_mps(cfg, *strategy, *scenario, *iteration, out)?,
        Command::Scaling { turbines, out } => run::scaling(cfg, turbines, out)?,
        Command::AccessStats => {
            if !run::access_report(cfg)? {
                error!("the two access computations disagree");
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match threads().and_then(|()| load_config(&cli)) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(1);
        }
    };
    match execute(&cli, &cfg) {
        Ok(code) => code,
        Err(e) => {
            if let Some(c) = e.downcast_ref::<ConfigError>() {
                error!("{c}");
                return ExitCode::from(1);
            }
            error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
