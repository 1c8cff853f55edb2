//! Flat `key = value` run configuration. `#` starts a comment; unknown keys
//! are errors so typos don't silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use offshore_om::access::Daylight;
use offshore_om::data::{DEFAULT_BIN_WIDTH, DEFAULT_CUT_IN, DEFAULT_CUT_OUT};
use offshore_om::params::{FailureEvent, FarmInstance, PriceMode};
use offshore_om::scenario::GridConfig;
use offshore_om::synth::DEFAULT_SEED;
use om_milp::{BranchRule, SolverConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: cannot parse `{value}`: {why}")]
    Value {
        key: String,
        value: String,
        why: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{0}: file not found")]
    MissingFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairMode {
    Fixed,
    Random,
}

/// Where a series comes from: a CSV file or the built-in generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Synthetic,
    File(PathBuf),
}

impl Source {
    fn parse(v: &str) -> Source {
        if v == "synthetic" {
            Source::Synthetic
        } else {
            Source::File(PathBuf::from(v))
        }
    }

    fn show(&self) -> String {
        match self {
            Source::Synthetic => "synthetic".into(),
            Source::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub weather: Source,
    pub prices: Source,
    pub power_pairs: Source,
    /// Fitted curve to use instead of fitting `power_pairs`.
    pub curve: Option<PathBuf>,
    pub data_seed: u64,
    pub data_hours: usize,

    pub turbines: usize,
    /// Explicit RLEs; empty means 5, 10, .. in 5-day steps.
    pub rle_days: Vec<u32>,
    pub repair_mode: RepairMode,
    pub repair_hours: u32,
    pub repair_mean: f64,
    pub repair_std: f64,
    pub repair_seed: u64,
    pub crews: u32,
    pub shift_hours: u32,
    pub rated_mw: f64,
    pub wind_limit: f64,
    pub wave_limit: f64,
    pub beta: f64,
    pub big_m: f64,
    pub cost_pm: f64,
    pub cost_cm: f64,
    pub cost_crew_hourly: f64,
    pub cost_vessel_daily: f64,
    pub cost_overtime_hourly: f64,

    pub price_mode: String,
    pub lcoe: f64,
    pub ptc_credit: f64,
    pub curtailment: f64,
    pub daylight_start: u32,
    pub daylight_end: u32,
    pub wind_sigma: f64,
    pub wind_seed: u64,
    pub bin_width: f64,
    pub cut_in: f64,
    pub cut_out: f64,

    pub horizon_days: usize,
    pub scenarios: usize,
    /// 1-based `turbine:day` pairs.
    pub failures: Vec<FailureEvent>,

    pub rel_gap: f64,
    pub int_tol: f64,
    pub time_limit_s: f64,
    pub node_limit: usize,
    pub branching: BranchRule,
}

impl Default for RunConfig {
    fn default() -> Self {
        let inst = FarmInstance::case_study_one();
        let c = &inst.costs;
        RunConfig {
            weather: Source::File("data/weather.csv".into()),
            prices: Source::File("data/prices.csv".into()),
            power_pairs: Source::File("data/power_pairs.csv".into()),
            curve: None,
            data_seed: DEFAULT_SEED,
            data_hours: 2400,
            turbines: inst.num_turbines(),
            rle_days: Vec::new(),
            repair_mode: RepairMode::Fixed,
            repair_hours: 8,
            repair_mean: 7.5,
            repair_std: 3.0,
            repair_seed: 11,
            crews: inst.crews,
            shift_hours: inst.shift_hours,
            rated_mw: inst.rated_mw,
            wind_limit: inst.wind_limit,
            wave_limit: inst.wave_limit,
            beta: inst.beta,
            big_m: inst.big_m,
            cost_pm: c.pm,
            cost_cm: c.cm,
            cost_crew_hourly: c.crew_hourly,
            cost_vessel_daily: c.vessel_daily,
            cost_overtime_hourly: c.overtime_hourly,
            price_mode: "constant".into(),
            lcoe: 80.0,
            ptc_credit: 24.0,
            curtailment: 1.0,
            daylight_start: Daylight::default().start,
            daylight_end: Daylight::default().end,
            wind_sigma: GridConfig::default().wind_sigma,
            wind_seed: GridConfig::default().wind_seed,
            bin_width: DEFAULT_BIN_WIDTH,
            cut_in: DEFAULT_CUT_IN,
            cut_out: DEFAULT_CUT_OUT,
            horizon_days: 60,
            scenarios: 30,
            failures: offshore_om::params::case_study_one_failures(),
            rel_gap: SolverConfig::default().rel_gap,
            int_tol: SolverConfig::default().int_tol,
            time_limit_s: 0.0,
            node_limit: SolverConfig::default().node_limit,
            branching: BranchRule::MostFractional,
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.into(),
        value: value.into(),
        why: e.to_string(),
    })
}

fn bad(key: &str, value: &str, why: &str) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        value: value.into(),
        why: why.into(),
    }
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn failures(key: &str, value: &str) -> Result<Vec<FailureEvent>, ConfigError> {
    if value == "none" {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (t, d) = pair
                .split_once(':')
                .ok_or_else(|| bad(key, pair, "expected turbine:day"))?;
            let turbine: usize = num(key, t.trim())?;
            if turbine == 0 {
                return Err(bad(key, pair, "turbines are numbered from 1"));
            }
            Ok(FailureEvent {
                turbine: turbine - 1,
                day: num(key, d.trim())?,
            })
        })
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                text: raw.trim().into(),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: pair.into(),
        })?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "weather_csv" => self.weather = Source::parse(v),
            "price_csv" => self.prices = Source::parse(v),
            "power_pairs_csv" => self.power_pairs = Source::parse(v),
            "curve_csv" => self.curve = (!v.is_empty()).then(|| PathBuf::from(v)),
            "data_seed" => self.data_seed = num(key, v)?,
            "data_hours" => self.data_hours = num(key, v)?,
            "turbines" => self.turbines = num(key, v)?,
            "rle_days" => self.rle_days = list(key, v)?,
            "repair_mode" => {
                self.repair_mode = match v {
                    "fixed" => RepairMode::Fixed,
                    "random" => RepairMode::Random,
                    _ => return Err(bad(key, v, "expected fixed or random")),
                }
            }
            "repair_hours" => self.repair_hours = num(key, v)?,
            "repair_mean" => self.repair_mean = num(key, v)?,
            "repair_std" => self.repair_std = num(key, v)?,
            "repair_seed" => self.repair_seed = num(key, v)?,
            "crews" => self.crews = num(key, v)?,
            "shift_hours" => self.shift_hours = num(key, v)?,
            "rated_mw" => self.rated_mw = num(key, v)?,
            "wind_limit" => self.wind_limit = num(key, v)?,
            "wave_limit" => self.wave_limit = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "big_m" => self.big_m = num(key, v)?,
            "cost_pm" => self.cost_pm = num(key, v)?,
            "cost_cm" => self.cost_cm = num(key, v)?,
            "cost_crew_hourly" => self.cost_crew_hourly = num(key, v)?,
            "cost_vessel_daily" => self.cost_vessel_daily = num(key, v)?,
            "cost_overtime_hourly" => self.cost_overtime_hourly = num(key, v)?,
            "price_mode" => match v {
                "constant" | "market" => self.price_mode = v.into(),
                _ => return Err(bad(key, v, "expected constant or market")),
            },
            "lcoe" => self.lcoe = num(key, v)?,
            "ptc_credit" => self.ptc_credit = num(key, v)?,
            "curtailment" => self.curtailment = num(key, v)?,
            "daylight_start" => self.daylight_start = num(key, v)?,
            "daylight_end" => self.daylight_end = num(key, v)?,
            "wind_sigma" => self.wind_sigma = num(key, v)?,
            "wind_seed" => self.wind_seed = num(key, v)?,
            "bin_width" => self.bin_width = num(key, v)?,
            "cut_in" => self.cut_in = num(key, v)?,
            "cut_out" => self.cut_out = num(key, v)?,
            "horizon_days" => self.horizon_days = num(key, v)?,
            "scenarios" => self.scenarios = num(key, v)?,
            "failures" => self.failures = failures(key, v)?,
            "rel_gap" => self.rel_gap = num(key, v)?,
            "int_tol" => self.int_tol = num(key, v)?,
            "time_limit_s" => self.time_limit_s = num(key, v)?,
            "node_limit" => self.node_limit = num(key, v)?,
            "branching" => {
                self.branching = match v {
                    "most_fractional" => BranchRule::MostFractional,
                    "first_fractional" => BranchRule::FirstFractional,
                    _ => return Err(bad(key, v, "expected most_fractional or first_fractional")),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inst = self.instance();
        inst.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.solver()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.turbines == 0 {
            return Err(ConfigError::Invalid("turbines must be at least 1".into()));
        }
        if !self.rle_days.is_empty() && self.rle_days.len() != self.turbines {
            return Err(ConfigError::Invalid(format!(
                "rle_days lists {} values for {} turbines",
                self.rle_days.len(),
                self.turbines
            )));
        }
        if self.daylight_start >= self.daylight_end || self.daylight_end > 24 {
            return Err(ConfigError::Invalid(format!(
                "daylight {}..{} is not a window within the day",
                self.daylight_start, self.daylight_end
            )));
        }
        if !(0.0..=1.0).contains(&self.curtailment) {
            return Err(ConfigError::Invalid(format!(
                "curtailment {} outside [0, 1]",
                self.curtailment
            )));
        }
        if self.horizon_days < 1 || self.scenarios < 1 {
            return Err(ConfigError::Invalid(
                "horizon_days and scenarios must be at least 1".into(),
            ));
        }
        if let Some(e) = self.failures.iter().find(|e| e.turbine >= self.turbines) {
            return Err(ConfigError::Invalid(format!(
                "failure of turbine {} but the farm has {}",
                e.turbine + 1,
                self.turbines
            )));
        }
        for src in [&self.weather, &self.power_pairs] {
            if let Source::File(p) = src {
                if !p.exists() {
                    return Err(ConfigError::MissingFile(p.clone()));
                }
            }
        }
        if self.price_mode == "market" {
            if let Source::File(p) = &self.prices {
                if !p.exists() {
                    return Err(ConfigError::MissingFile(p.clone()));
                }
            }
        }
        if let Some(p) = &self.curve {
            if !p.exists() {
                return Err(ConfigError::MissingFile(p.clone()));
            }
        }
        Ok(())
    }

    pub fn instance(&self) -> FarmInstance {
        let mut inst = FarmInstance::staggered(self.turbines, self.repair_hours);
        if !self.rle_days.is_empty() {
            for (t, &r) in inst.turbines.iter_mut().zip(&self.rle_days) {
                t.rle_days = r;
            }
        }
        if self.repair_mode == RepairMode::Random {
            let window = self.daylight_end.saturating_sub(self.daylight_start);
            inst.randomize_repairs(self.repair_mean, self.repair_std, self.repair_seed, window);
        }
        inst.crews = self.crews;
        inst.shift_hours = self.shift_hours;
        inst.rated_mw = self.rated_mw;
        inst.wind_limit = self.wind_limit;
        inst.wave_limit = self.wave_limit;
        inst.beta = self.beta;
        inst.big_m = self.big_m;
        let c = &mut inst.costs;
        c.pm = self.cost_pm;
        c.cm = self.cost_cm;
        c.crew_hourly = self.cost_crew_hourly;
        c.vessel_daily = self.cost_vessel_daily;
        c.overtime_hourly = self.cost_overtime_hourly;
        inst
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            price_mode: if self.price_mode == "market" {
                PriceMode::Market {
                    credit: self.ptc_credit,
                }
            } else {
                PriceMode::Constant(self.lcoe)
            },
            curtailment: self.curtailment,
            daylight: Daylight {
                start: self.daylight_start,
                end: self.daylight_end,
            },
            wind_sigma: self.wind_sigma,
            wind_seed: self.wind_seed,
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            rel_gap: self.rel_gap,
            int_tol: self.int_tol,
            time_limit: (self.time_limit_s > 0.0)
                .then(|| Duration::from_secs_f64(self.time_limit_s)),
            node_limit: self.node_limit,
            branching: self.branching,
            record_nodes: false,
        }
    }

    /// Seeds and sources, one `# key=value` line each, for output headers.
    pub fn header(&self) -> String {
        let mut seeds = BTreeMap::new();
        seeds.insert("data_seed", self.data_seed.to_string());
        seeds.insert("wind_seed", self.wind_seed.to_string());
        if self.repair_mode == RepairMode::Random {
            seeds.insert("repair_seed", self.repair_seed.to_string());
        }
        seeds.insert("weather", self.weather.show());
        seeds.insert("prices", self.prices.show());
        seeds.insert("price_mode", self.price_mode.clone());
        let mut out = String::new();
        for (k, v) in seeds {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }

    /// The seeds alone, for JSON outputs.
    pub fn seeds(&self) -> Vec<(&'static str, u64)> {
        let mut s = vec![("data_seed", self.data_seed), ("wind_seed", self.wind_seed)];
        if self.repair_mode == RepairMode::Random {
            s.push(("repair_seed", self.repair_seed));
        }
        s
    }
}

/// Commented default configuration, as written by `om init-config`.
pub fn default_config_text() -> String {
    let d = RunConfig::default();
    let show = |v: &Source| v.show();
    format!(
        "\
# offshore O&M run configuration; every key is optional.

# data: a CSV path or `synthetic`
weather_csv = {weather}
price_csv = {prices}
power_pairs_csv = {pairs}
# curve_csv = curve.csv       # use a fitted curve instead of the pairs
data_seed = {data_seed}
data_hours = {data_hours}     # length of generated series

# farm
turbines = {turbines}
# rle_days = 5,10,15          # default: 5-day steps
repair_mode = fixed           # fixed | random
repair_hours = {repair_hours}
repair_mean = {repair_mean}
repair_std = {repair_std}
repair_seed = {repair_seed}
crews = {crews}
shift_hours = {shift}
rated_mw = {rated}
wind_limit = {nu}             # m/s
wave_limit = {eta}            # m
beta = {beta}
big_m = {big_m}

# costs, $
cost_pm = {pm}
cost_cm = {cm}
cost_crew_hourly = {crew}
cost_vessel_daily = {vessel}
cost_overtime_hourly = {ot}

# market and weather
price_mode = constant         # constant (lcoe) | market (hourly price + ptc_credit)
lcoe = {lcoe}
ptc_credit = {ptc}
curtailment = {curt}          # sellable fraction of farm output
daylight_start = {dl0}
daylight_end = {dl1}
wind_sigma = {sigma}
wind_seed = {wseed}
bin_width = {bw}
cut_in = {cin}
cut_out = {cout}

# runs
horizon_days = {j}
scenarios = {scen}
failures = 1:17,3:36         # turbine:day, 1-based; `none` for no failures

# solver
rel_gap = {gap}
int_tol = {itol}
time_limit_s = 0              # per iteration; 0 = none
node_limit = {nodes}
branching = most_fractional   # most_fractional | first_fractional
",
        weather = show(&d.weather),
        prices = show(&d.prices),
        pairs = show(&d.power_pairs),
        data_seed = d.data_seed,
        data_hours = d.data_hours,
        turbines = d.turbines,
        repair_hours = d.repair_hours,
        repair_mean = d.repair_mean,
        repair_std = d.repair_std,
        repair_seed = d.repair_seed,
        crews = d.crews,
        shift = d.shift_hours,
        rated = d.rated_mw,
        nu = d.wind_limit,
        eta = d.wave_limit,
        beta = d.beta,
        big_m = d.big_m,
        pm = d.cost_pm,
        cm = d.cost_cm,
        crew = d.cost_crew_hourly,
        vessel = d.cost_vessel_daily,
        ot = d.cost_overtime_hourly,
        lcoe = d.lcoe,
        ptc = d.ptc_credit,
        curt = d.curtailment,
        dl0 = d.daylight_start,
        dl1 = d.daylight_end,
        sigma = d.wind_sigma,
        wseed = d.wind_seed,
        bw = d.bin_width,
        cin = d.cut_in,
        cout = d.cut_out,
        j = d.horizon_days,
        scen = d.scenarios,
        gap = d.rel_gap,
        itol = d.int_tol,
        nodes = d.node_limit,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(&default_config_text()).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn overrides_and_errors() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("turbines = 3 # small\nrle_days = 2, 4 ,6\nfailures = none\n")
            .unwrap();
        assert_eq!(cfg.turbines, 3);
        assert_eq!(cfg.rle_days, vec![2, 4, 6]);
        assert!(cfg.failures.is_empty());
        let inst = cfg.instance();
        assert_eq!(inst.turbines[2].rle_days, 6);

        assert!(matches!(
            cfg.apply_text("tubines = 3"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            cfg.apply_text("crews"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            cfg.set("crews", "two"),
            Err(ConfigError::Value { .. })
        ));
        assert!(cfg.set("failures", "0:3").is_err());
        cfg.set("failures", "4:3").unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn random_repairs_follow_the_seed() {
        let mut cfg = RunConfig::default();
        cfg.set("repair_mode", "random").unwrap();
        let a = cfg.instance();
        assert_eq!(a, cfg.instance());
        cfg.set("repair_seed", "12").unwrap();
        assert_ne!(a, cfg.instance());
        assert!(cfg.header().contains("# repair_seed=12"));
    }
}
