#![allow(dead_code)]

use offshore_om::access::{AccessGrid, Daylight};
use offshore_om::params::FarmInstance;
use offshore_om::scenario::Grids;

/// Grids with constant power fraction `f`, price `price` and access given
/// per (turbine, absolute hour); waves and winds are placeholders.
pub fn toy_grids(
    n: usize,
    days: usize,
    f: f64,
    price: f64,
    open: impl Fn(usize, usize) -> bool,
) -> Grids {
    let hours = 24 * days;
    let hourly: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..hours).map(|t| open(i, t)).collect())
        .collect();
    let daily = hourly
        .iter()
        .map(|r| r.chunks(24).map(|d| d.iter().any(|&a| a)).collect())
        .collect();
    Grids {
        wind: vec![vec![8.0; hours]; n],
        wave: vec![0.5; hours],
        power: vec![vec![f; hours]; n],
        power_daily: vec![vec![f; days]; n],
        access: AccessGrid {
            hourly,
            daily,
            daylight: Daylight::default(),
        },
        price: vec![price; hours],
        price_daily: vec![price; days],
        curtailment: vec![1.0; hours],
    }
}

/// Open wherever a `tau`-hour task fits in the default daylight window.
pub fn calm(tau: usize) -> impl Fn(usize, usize) -> bool {
    move |_, t| {
        let h = t % 24;
        h >= 6 && h + tau <= 20
    }
}

/// `n` turbines with the given residual lives and 8 h repairs.
pub fn farm(rles: &[u32]) -> FarmInstance {
    let mut inst = FarmInstance::staggered(rles.len(), 8);
    for (t, &r) in inst.turbines.iter_mut().zip(rles) {
        t.rle_days = r;
    }
    inst
}

pub fn synthetic_grids(inst: &FarmInstance) -> Grids {
    use offshore_om::data::fit_power_curve;
    use offshore_om::scenario::GridConfig;
    use offshore_om::synth::*;
    let weather = synthetic_weather(2400, DEFAULT_SEED);
    let curve = fit_power_curve(&synthetic_power_pairs(20_000, DEFAULT_SEED), 0.5).unwrap();
    Grids::build(inst, &weather, None, &curve, &GridConfig::default()).unwrap()
}
