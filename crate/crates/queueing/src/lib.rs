//! Analytic queueing model of managed UAS traffic: PGF arithmetic, per-zone
//! queueing systems, Markov modulation, fixed-point solution and the
//! level-by-level spread estimate.

pub mod modulation;
pub mod pgf;
pub mod solver;
pub mod spread;
pub mod stream0;
pub mod streamx;
pub mod zone;

pub use pgf::{departures, expected_counts, pgf_shift_div, Pgf};
pub use solver::{solve_fixed_point, Root, SolverOptions};
pub use spread::{expected_spread, AnalyticScenario, AnalyticZone, ExogenousInput, SpreadResult};
pub use zone::{Congestion, ZoneInputs, ZoneModelOutputs};
