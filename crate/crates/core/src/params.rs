//! Farm, cost and operating parameters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("turbine {turbine}: repair time must be at least one hour")]
    RepairTime { turbine: usize },
    #[error("{name} must be nonnegative, got {value}")]
    NegativeCost { name: &'static str, value: f64 },
    #[error("{name} must be at least 1")]
    TooSmall { name: &'static str },
    #[error("beta must lie strictly between 0 and 1, got {0}")]
    Beta(f64),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("failure event for unknown turbine {0}")]
    UnknownTurbine(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaintenanceKind {
    Preventive,
    Corrective,
}

impl MaintenanceKind {
    pub fn label(self) -> &'static str {
        match self {
            MaintenanceKind::Preventive => "PM",
            MaintenanceKind::Corrective => "CM",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turbine {
    /// Maintenance required at the start of the horizon.
    pub needs_maintenance: bool,
    /// Residual life estimate, days.
    pub rle_days: u32,
    /// Repair time, hours.
    pub repair_hours: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Costs {
    /// K, $/task
    pub pm: f64,
    /// Φ, $/task
    pub cm: f64,
    /// Ψ, $/h per crew
    pub crew_hourly: f64,
    /// Ω, $/day
    pub vessel_daily: f64,
    /// Q, $/h
    pub overtime_hourly: f64,
}

impl Default for Costs {
    fn default() -> Self {
        Costs {
            pm: 4000.0,
            cm: 16000.0,
            crew_hourly: 250.0,
            vessel_daily: 2500.0,
            overtime_hourly: 125.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarmInstance {
    pub turbines: Vec<Turbine>,
    pub costs: Costs,
    /// B
    pub crews: u32,
    /// W, standard hours per crew and day
    pub shift_hours: u32,
    /// R, MW
    pub rated_mw: f64,
    /// ν, m/s
    pub wind_limit: f64,
    /// η, m
    pub wave_limit: f64,
    /// Stability constant of the CM-eligibility and availability fractions.
    pub beta: f64,
    /// Exponent of the original availability device. Only documented: the
    /// assembled model uses its exact 0/1 limit.
    pub big_m: f64,
}

impl FarmInstance {
    /// Ten-turbine farm with RLEs 5, 10, .., 50 days and 8 h repairs.
    pub fn case_study_one() -> Self {
        Self::staggered(10, 8)
    }

    /// `n` turbines, all flagged, RLEs cycling through 5, 10, .., 50 days.
    pub fn staggered(n: usize, repair_hours: u32) -> Self {
        let turbines = (0..n)
            .map(|i| Turbine {
                needs_maintenance: true,
                rle_days: 5 * (i as u32 % 10 + 1),
                repair_hours,
            })
            .collect();
        FarmInstance {
            turbines,
            costs: Costs::default(),
            crews: 2,
            shift_hours: 8,
            rated_mw: 12.0,
            wind_limit: 15.0,
            wave_limit: 1.5,
            beta: 0.5,
            big_m: 100.0,
        }
    }

    /// Draws every repair time from N(mean, std), rounded to whole hours and
    /// clamped to `1..=max_hours`.
    pub fn randomize_repairs(&mut self, mean: f64, std: f64, seed: u64, max_hours: u32) {
        let dist = Normal::new(mean, std.max(0.0)).expect("finite std");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &mut self.turbines {
            let h = dist.sample(&mut rng).round();
            t.repair_hours = h.clamp(1.0, f64::from(max_hours.max(1))) as u32;
        }
    }

    pub fn num_turbines(&self) -> usize {
        self.turbines.len()
    }

    /// B·W
    pub fn crew_hours(&self) -> f64 {
        f64::from(self.crews * self.shift_hours)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (i, t) in self.turbines.iter().enumerate() {
            if t.repair_hours < 1 {
                return Err(ParamError::RepairTime { turbine: i });
            }
        }
        let c = &self.costs;
        for (name, value) in [
            ("K", c.pm),
            ("Phi", c.cm),
            ("Psi", c.crew_hourly),
            ("Omega", c.vessel_daily),
            ("Q", c.overtime_hourly),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(ParamError::NegativeCost { name, value });
            }
        }
        if self.crews < 1 {
            return Err(ParamError::TooSmall { name: "B" });
        }
        if self.shift_hours < 1 {
            return Err(ParamError::TooSmall { name: "W" });
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ParamError::Beta(self.beta));
        }
        for (name, value) in [
            ("R", self.rated_mw),
            ("nu", self.wind_limit),
            ("eta", self.wave_limit),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        Ok(())
    }
}

/// An unexpected failure: turbine `turbine` (0-based) fails at the start of
/// horizon day `day` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureEvent {
    pub turbine: usize,
    pub day: u32,
}

/// WT1 on day 17 and WT3 on day 36.
pub fn case_study_one_failures() -> Vec<FailureEvent> {
    vec![
        FailureEvent {
            turbine: 0,
            day: 17,
        },
        FailureEvent {
            turbine: 2,
            day: 36,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceMode {
    /// Flat selling price, $/MWh (LCOE).
    Constant(f64),
    /// Hourly market price plus a production tax credit, $/MWh.
    Market { credit: f64 },
}

impl Default for PriceMode {
    fn default() -> Self {
        PriceMode::Constant(80.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_case_one() {
        let f = FarmInstance::case_study_one();
        assert_eq!(f.num_turbines(), 10);
        let rles: Vec<u32> = f.turbines.iter().map(|t| t.rle_days).collect();
        assert_eq!(rles, vec![5, 10, 15, 20, 25, 30, 35, 40, 45, 50]);
        assert_eq!(f.crew_hours(), 16.0);
        assert!(f.validate().is_ok());
    }

    #[test]
    fn random_repairs_are_seeded_and_bounded() {
        let mut a = FarmInstance::staggered(200, 8);
        let mut b = a.clone();
        a.randomize_repairs(7.5, 3.0, 3, 14);
        b.randomize_repairs(7.5, 3.0, 3, 14);
        assert_eq!(a, b);
        let h: Vec<u32> = a.turbines.iter().map(|t| t.repair_hours).collect();
        assert!(h.iter().all(|&x| (1..=14).contains(&x)));
        let mean = h.iter().sum::<u32>() as f64 / 200.0;
        assert!((mean - 7.5).abs() < 0.6, "{mean}");
    }

    #[test]
    fn rejects_bad_beta_and_costs() {
        let mut f = FarmInstance::case_study_one();
        f.beta = 1.0;
        assert_eq!(f.validate(), Err(ParamError::Beta(1.0)));
        let mut f = FarmInstance::case_study_one();
        f.costs.cm = -1.0;
        assert!(matches!(f.validate(), Err(ParamError::NegativeCost { .. })));
        let mut f = FarmInstance::case_study_one();
        f.turbines[3].repair_hours = 0;
        assert_eq!(f.validate(), Err(ParamError::RepairTime { turbine: 3 }));
    }
}
