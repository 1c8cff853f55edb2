//! Offshore wind-farm maintenance scheduling: data handling, weather access,
//! the rolling-horizon maintenance MILP and benchmark strategies.

pub mod access;
pub mod data;
pub mod eval;
pub mod host;
pub mod params;
pub mod rolling;
pub mod scenario;
pub mod strategies;
pub mod synth;
