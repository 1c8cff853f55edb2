//! Derived hourly and daily grids (power fractions, access, prices) and
//! their per-scenario windows.

use crate::access::{build_grid, AccessGrid, Daylight};
use crate::data::{
    daily_aggregate, normalized_power, synthesize_turbine_winds, DataError, PowerCurve,
    PriceSeries, WeatherSeries,
};
use crate::params::{FarmInstance, PriceMode};

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub price_mode: PriceMode,
    /// C_t, constant over time.
    pub curtailment: f64,
    pub daylight: Daylight,
    /// Spread of turbine winds around the buoy, m/s.
    pub wind_sigma: f64,
    pub wind_seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            price_mode: PriceMode::default(),
            curtailment: 1.0,
            daylight: Daylight::default(),
            wind_sigma: 1.0,
            wind_seed: 7,
        }
    }
}

/// Everything weather- and market-dependent the planners and the executor
/// read, indexed from midnight of the first day.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    /// Hub-height wind per turbine and hour, m/s.
    pub wind: Vec<Vec<f64>>,
    pub wave: Vec<f64>,
    /// f_{t,i}
    pub power: Vec<Vec<f64>>,
    /// f^L_{d,i}, from the daily-mean wind speed.
    pub power_daily: Vec<Vec<f64>>,
    pub access: AccessGrid,
    /// Π_t, $/MWh
    pub price: Vec<f64>,
    /// Π_d, $/MWh
    pub price_daily: Vec<f64>,
    /// C_t
    pub curtailment: Vec<f64>,
}

impl Grids {
    pub fn num_turbines(&self) -> usize {
        self.wind.len()
    }

    pub fn num_hours(&self) -> usize {
        self.wave.len()
    }

    pub fn num_days(&self) -> usize {
        self.wave.len() / 24
    }

    /// Builds grids from turbine winds that are already synthesized.
    pub fn from_turbine_winds(
        instance: &FarmInstance,
        wind: Vec<Vec<f64>>,
        wave: Vec<f64>,
        hourly_price: Option<&[f64]>,
        curve: &PowerCurve,
        cfg: &GridConfig,
    ) -> Result<Self, DataError> {
        let hours = wave.len();
        if hours == 0 || hours % 24 != 0 {
            return Err(DataError::PartialDay { len: hours });
        }
        if wind.len() != instance.num_turbines() {
            return Err(DataError::Invalid(format!(
                "{} wind series for {} turbines",
                wind.len(),
                instance.num_turbines()
            )));
        }
        if let Some(i) = wind.iter().position(|w| w.len() != hours) {
            return Err(DataError::Invalid(format!(
                "turbine {i}: wind series length differs from waves"
            )));
        }
        if !(0.0..=1.0).contains(&cfg.curtailment) {
            return Err(DataError::Invalid(format!(
                "curtailment {} outside [0, 1]",
                cfg.curtailment
            )));
        }
        let price: Vec<f64> = match cfg.price_mode {
            PriceMode::Constant(p) => vec![p; hours],
            PriceMode::Market { credit } => {
                let series = hourly_price.ok_or_else(|| {
                    DataError::Invalid("market price mode needs an hourly price series".into())
                })?;
                if series.len() < hours {
                    return Err(DataError::Invalid(format!(
                        "price series has {} hours, weather has {hours}",
                        series.len()
                    )));
                }
                series[..hours].iter().map(|p| p + credit).collect()
            }
        };
        let price_daily = daily_aggregate(&price)?;
        let power = wind
            .iter()
            .map(|w| w.iter().map(|&v| normalized_power(curve, v)).collect())
            .collect();
        let power_daily = wind
            .iter()
            .map(|w| {
                daily_aggregate(w).map(|d| d.iter().map(|&v| normalized_power(curve, v)).collect())
            })
            .collect::<Result<_, _>>()?;
        let tau: Vec<u32> = instance.turbines.iter().map(|t| t.repair_hours).collect();
        let access = build_grid(
            &wind,
            &wave,
            instance.wind_limit,
            instance.wave_limit,
            &tau,
            cfg.daylight,
        );
        Ok(Grids {
            wind,
            wave,
            power,
            power_daily,
            access,
            price,
            price_daily,
            curtailment: vec![cfg.curtailment; hours],
        })
    }

    /// Synthesizes turbine winds from the buoy and builds all grids.
    pub fn build(
        instance: &FarmInstance,
        weather: &WeatherSeries,
        prices: Option<&PriceSeries>,
        curve: &PowerCurve,
        cfg: &GridConfig,
    ) -> Result<Self, DataError> {
        if weather.first_hour() != 0 {
            return Err(DataError::Invalid(
                "weather series must start at midnight".into(),
            ));
        }
        let wind = synthesize_turbine_winds(
            &weather.wind,
            instance.num_turbines(),
            cfg.wind_sigma,
            cfg.wind_seed,
        )?;
        Self::from_turbine_winds(
            instance,
            wind,
            weather.wave.clone(),
            prices.map(|p| p.hourly.as_slice()),
            curve,
            cfg,
        )
    }

    /// The `days`-day window starting at day `offset` (0-based).
    pub fn window(&self, offset: usize, days: usize) -> Result<Grids, DataError> {
        if offset + days > self.num_days() {
            return Err(DataError::Invalid(format!(
                "window of {days} days at offset {offset} needs {} days of data, have {}",
                offset + days,
                self.num_days()
            )));
        }
        let (h0, h1) = (24 * offset, 24 * (offset + days));
        let hours = |v: &Vec<Vec<f64>>| v.iter().map(|r| r[h0..h1].to_vec()).collect::<Vec<_>>();
        Ok(Grids {
            wind: hours(&self.wind),
            wave: self.wave[h0..h1].to_vec(),
            power: hours(&self.power),
            power_daily: self
                .power_daily
                .iter()
                .map(|r| r[offset..offset + days].to_vec())
                .collect(),
            access: AccessGrid {
                hourly: self
                    .access
                    .hourly
                    .iter()
                    .map(|r| r[h0..h1].to_vec())
                    .collect(),
                daily: self
                    .access
                    .daily
                    .iter()
                    .map(|r| r[offset..offset + days].to_vec())
                    .collect(),
                daylight: self.access.daylight,
            },
            price: self.price[h0..h1].to_vec(),
            price_daily: self.price_daily[offset..offset + days].to_vec(),
            curtailment: self.curtailment[h0..h1].to_vec(),
        })
    }
}
