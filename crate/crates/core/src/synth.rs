//! Seeded generators for the bundled sample data: buoy weather with
//! multi-day storms, an hourly market price and noisy SCADA power pairs.

use std::io::Write;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{DataError, PriceSeries, WeatherSeries};

pub const DEFAULT_SEED: u64 = 20_250_801;

fn start_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 3, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid start date")
}

fn stamps(hours: usize) -> Vec<NaiveDateTime> {
    let t0 = start_time();
    (0..hours).map(|h| t0 + Duration::hours(h as i64)).collect()
}

/// Hourly buoy wind (m/s) and significant wave height (m).
///
/// A slow synoptic AR(1) component sets storm episodes lasting days, a fast
/// one adds gusts; waves follow a smoothed copy of the wind with their own
/// swell noise.
pub fn synthetic_weather(hours: usize, seed: u64) -> WeatherSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let (phi_slow, phi_fast) = (0.975f64, 0.8f64);
    let mut slow = unit.sample(&mut rng);
    let mut fast = 0.0;
    let mut swell = 0.0;
    let mut sea = 0.0;
    let mut wind = Vec::with_capacity(hours);
    let mut wave = Vec::with_capacity(hours);
    for h in 0..hours {
        slow = phi_slow * slow + (1.0 - phi_slow * phi_slow).sqrt() * unit.sample(&mut rng);
        fast = phi_fast * fast + (1.0 - phi_fast * phi_fast).sqrt() * unit.sample(&mut rng);
        let diurnal = 0.8 * ((h % 24) as f64 / 24.0 * std::f64::consts::TAU - 2.0).sin();
        let w = (11.0 + 4.5 * slow + 1.6 * fast + diurnal).max(0.2);
        // waves build and decay over ~10 hours
        sea = 0.9 * sea + 0.1 * w;
        swell = 0.97 * swell + 0.243 * unit.sample(&mut rng);
        let hs = (0.075 * sea + 0.003 * sea * sea + 0.3 * swell + 0.2).max(0.1);
        wind.push((w * 100.0).round() / 100.0);
        wave.push((hs * 100.0).round() / 100.0);
    }
    WeatherSeries {
        timestamps: stamps(hours),
        wind,
        wave,
    }
}

/// Hourly wholesale price, $/MWh: a daily double peak, a weekly dip and
/// lognormal noise.
pub fn synthetic_prices(hours: usize, seed: u64) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5052_4943);
    let noise = Normal::new(0.0, 0.18).expect("price noise");
    let mut level = 0.0f64;
    let hourly = (0..hours)
        .map(|h| {
            let hod = (h % 24) as f64;
            let peaks = 9.0 * (-((hod - 8.0) / 2.5f64).powi(2)).exp()
                + 14.0 * (-((hod - 18.0) / 3.0f64).powi(2)).exp();
            let weekend = if (h / 24) % 7 >= 5 { -6.0 } else { 0.0 };
            level = 0.95 * level + noise.sample(&mut rng);
            let p = (30.0 + peaks + weekend) * (0.35 * level).exp();
            (p.max(2.0) * 100.0).round() / 100.0
        })
        .collect();
    PriceSeries {
        timestamps: stamps(hours),
        hourly,
    }
}

/// The normalized power curve the SCADA pairs scatter around: cubic ramp
/// between cut-in and rated speed, flat to cut-out.
pub fn reference_power(speed: f64) -> f64 {
    const CUT_IN: f64 = 3.0;
    const RATED: f64 = 12.0;
    const CUT_OUT: f64 = 25.0;
    if !(CUT_IN..CUT_OUT).contains(&speed) {
        0.0
    } else if speed >= RATED {
        1.0
    } else {
        (speed.powi(3) - CUT_IN.powi(3)) / (RATED.powi(3) - CUT_IN.powi(3))
    }
}

/// `(wind, normalized power)` pairs with measurement noise, clipped to
/// [0, 1].
pub fn synthetic_power_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5343_4144);
    let noise = Normal::new(0.0, 0.03).expect("power noise");
    (0..count)
        .map(|_| {
            let v: f64 = rng.random_range(0.0..27.0);
            let p = reference_power(v);
            let p = if p > 0.0 {
                (p + noise.sample(&mut rng)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (
                (v * 100.0).round() / 100.0,
                (p * 10_000.0).round() / 10_000.0,
            )
        })
        .collect()
}

fn fmt_time(t: &NaiveDateTime) -> String {
    t.format("%Y-%m-%d %H:%M").to_string()
}

pub fn write_weather<W: Write>(out: W, w: &WeatherSeries) -> Result<(), DataError> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["timestamp", "wind_ms", "wave_m"])?;
    for ((t, v), h) in w.timestamps.iter().zip(&w.wind).zip(&w.wave) {
        wr.write_record([fmt_time(t), v.to_string(), h.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_prices<W: Write>(out: W, p: &PriceSeries) -> Result<(), DataError> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["timestamp", "price_usd_mwh"])?;
    for (t, v) in p.timestamps.iter().zip(&p.hourly) {
        wr.write_record([fmt_time(t), v.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_power_pairs<W: Write>(out: W, pairs: &[(f64, f64)]) -> Result<(), DataError> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["wind_ms", "power"])?;
    for (v, p) in pairs {
        wr.write_record([v.to_string(), p.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}
