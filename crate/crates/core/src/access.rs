//! Hourly and daily accessibility from wind/wave limits, repair durations
//! and daylight.

use log::warn;

/// Daylight hours `[start, end)` of every day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Daylight {
    pub start: u32,
    pub end: u32,
}

impl Default for Daylight {
    fn default() -> Self {
        Daylight { start: 6, end: 20 }
    }
}

impl Daylight {
    pub fn hours(&self) -> u32 {
        self.end.saturating_sub(self.start)
    }

    pub fn contains(&self, hour_of_day: u32) -> bool {
        hour_of_day >= self.start && hour_of_day < self.end
    }

    /// Whether a task of `tau` hours started at `hour_of_day` ends before dark.
    pub fn fits(&self, hour_of_day: u32, tau: u32) -> bool {
        self.contains(hour_of_day) && hour_of_day + tau <= self.end
    }
}

/// α per turbine and hour, α^L per turbine and day. Hour 0 is midnight.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessGrid {
    pub hourly: Vec<Vec<bool>>,
    pub daily: Vec<Vec<bool>>,
    pub daylight: Daylight,
}

impl AccessGrid {
    pub fn num_turbines(&self) -> usize {
        self.hourly.len()
    }

    pub fn num_hours(&self) -> usize {
        self.hourly.first().map_or(0, Vec::len)
    }

    pub fn num_days(&self) -> usize {
        self.daily.first().map_or(0, Vec::len)
    }

    /// Access belief that ignores weather: open wherever the task fits in
    /// daylight.
    pub fn weather_blind(
        n_turbines: usize,
        n_hours: usize,
        tau: &[u32],
        daylight: Daylight,
    ) -> Self {
        let hourly: Vec<Vec<bool>> = (0..n_turbines)
            .map(|i| {
                (0..n_hours)
                    .map(|t| daylight.fits((t % 24) as u32, tau[i]))
                    .collect()
            })
            .collect();
        let daily = hourly.iter().map(|row| daily_row(row)).collect();
        AccessGrid {
            hourly,
            daily,
            daylight,
        }
    }
}

#[inline]
fn safe(wind: f64, wave: f64, nu: f64, eta: f64) -> bool {
    wind < nu && wave < eta
}

/// α_{t,i} = 1 iff every hour of `[t, t+τ_i)` is within limits, in daylight
/// and inside the series.
pub fn hourly_access(
    wind: &[Vec<f64>],
    wave: &[f64],
    nu: f64,
    eta: f64,
    tau: &[u32],
    daylight: Daylight,
) -> Vec<Vec<bool>> {
    assert!(nu > 0.0 && eta > 0.0, "limits must be positive");
    assert_eq!(wind.len(), tau.len(), "one repair time per turbine");
    wind.iter()
        .zip(tau)
        .enumerate()
        .map(|(i, (w, &tau))| {
            assert!(tau >= 1, "repair time must be at least one hour");
            assert_eq!(w.len(), wave.len(), "turbine {i}: wind and wave lengths differ");
            if tau > daylight.hours() {
                warn!("turbine {i}: repair time {tau} h exceeds the daylight window; never accessible");
                return vec![false; w.len()];
            }
            let n = w.len();
            // run[h] = number of consecutive usable hours starting at h
            let mut run = vec![0u32; n + 1];
            for h in (0..n).rev() {
                let ok = daylight.contains((h % 24) as u32) && safe(w[h], wave[h], nu, eta);
                run[h] = if ok { run[h + 1] + 1 } else { 0 };
            }
            (0..n).map(|h| run[h] >= tau).collect()
        })
        .collect()
}

fn daily_row(hourly: &[bool]) -> Vec<bool> {
    hourly.chunks(24).map(|d| d.iter().any(|&a| a)).collect()
}

/// α^L_{d,i}: any open start hour in day `day` (0-based).
pub fn daily_access(hourly: &[bool], day: usize) -> bool {
    hourly[24 * day..24 * (day + 1)].iter().any(|&a| a)
}

pub fn build_grid(
    wind: &[Vec<f64>],
    wave: &[f64],
    nu: f64,
    eta: f64,
    tau: &[u32],
    daylight: Daylight,
) -> AccessGrid {
    let hourly = hourly_access(wind, wave, nu, eta, tau, daylight);
    let daily = hourly.iter().map(|row| daily_row(row)).collect();
    AccessGrid {
        hourly,
        daily,
        daylight,
    }
}

/// Inaccessibility summary over a farm.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessStats {
    /// Turbine-hours violating a wind or wave limit, over all turbine-hours.
    pub inaccessible_fraction: f64,
    /// Longest run of days without any feasible start, over all turbines.
    pub max_closed_days: usize,
}

/// Statistics read off an access grid and the raw limit checks.
pub fn access_stats(
    wind: &[Vec<f64>],
    wave: &[f64],
    nu: f64,
    eta: f64,
    grid: &AccessGrid,
) -> AccessStats {
    let mut bad = 0usize;
    let mut total = 0usize;
    for w in wind {
        for (h, &v) in w.iter().enumerate() {
            total += 1;
            if !safe(v, wave[h], nu, eta) {
                bad += 1;
            }
        }
    }
    let mut longest = 0;
    for row in &grid.daily {
        let mut run = 0;
        for &open in row {
            run = if open { 0 } else { run + 1 };
            longest = longest.max(run);
        }
    }
    AccessStats {
        inaccessible_fraction: bad as f64 / total.max(1) as f64,
        max_closed_days: longest,
    }
}

/// The same statistics recomputed without the grid: each day is closed iff
/// no start hour has τ usable hours after it, checked window by window, and
/// runs are measured as gaps between open days.
pub fn access_stats_direct(
    wind: &[Vec<f64>],
    wave: &[f64],
    nu: f64,
    eta: f64,
    tau: &[u32],
    daylight: Daylight,
) -> AccessStats {
    let total = wind.len() * wave.len();
    let bad: usize = wind
        .iter()
        .map(|w| {
            w.iter()
                .zip(wave)
                .filter(|(&v, &h)| v >= nu || h >= eta)
                .count()
        })
        .sum();
    let days = wave.len() / 24;
    let mut longest = 0usize;
    for (w, &tau) in wind.iter().zip(tau) {
        let open_days: Vec<usize> = (0..days)
            .filter(|&d| {
                (0..24u32).any(|s| {
                    let start = 24 * d + s as usize;
                    s + tau <= 24
                        && start + tau as usize <= w.len()
                        && (0..tau).all(|k| {
                            let h = start + k as usize;
                            daylight.contains(s + k) && w[h] < nu && wave[h] < eta
                        })
                })
            })
            .collect();
        let mut prev: isize = -1;
        for &d in open_days.iter().chain(std::iter::once(&days)) {
            longest = longest.max((d as isize - prev - 1) as usize);
            prev = d as isize;
        }
    }
    AccessStats {
        inaccessible_fraction: bad as f64 / total.max(1) as f64,
        max_closed_days: longest,
    }
}
