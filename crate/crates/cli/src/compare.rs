//! Side-by-side comparison of simulated and analytic per-zone statistics.

use rayon::prelude::*;
use serde::Serialize;
use uasflow_core::draws::derive_seed;
use uasflow_core::sim::{LevelSpread, Metrics};
use uasflow_core::Scenario;
use uasflow_queueing::{expected_spread, AnalyticScenario};

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    /// Busy fraction against modulated congestion probability.
    pub theta0: f64,
    /// Streams per side for level spreads.
    pub spread: i32,
    /// Zones `(X, Y)` whose congestion is gated; all zones when empty.
    /// Spreads are gated on the levels of these zones.
    pub zones: Vec<(i32, i32)>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { theta0: 0.05, spread: 1, zones: Vec::new() }
    }
}

impl Tolerances {
    fn gates_zone(&self, stream: i32, level: i32) -> bool {
        self.zones.is_empty() || self.zones.contains(&(stream, level))
    }

    fn gates_level(&self, level: i32) -> bool {
        self.zones.is_empty() || self.zones.iter().any(|z| z.1 == level)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub stream: i32,
    pub level: i32,
    pub sim_busy_fraction: f64,
    pub theta0_star: f64,
    pub delta_theta0: f64,
    pub sim_in_service: f64,
    pub analytic_in_service: f64,
    pub delta_in_service: f64,
    pub sim_in_queue: f64,
    pub analytic_in_queue: f64,
    pub delta_in_queue: f64,
    pub sim_overflow: f64,
    pub analytic_overflow: f64,
    pub delta_overflow: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadDelta {
    pub level: i32,
    pub sim: (i32, i32),
    pub analytic: (i32, i32),
    pub delta_min: i32,
    pub delta_max: i32,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub seeds: Vec<u64>,
    pub tolerances: Tolerances,
    pub max_delta_theta0: f64,
    pub failures: usize,
    pub pass: bool,
    pub spread: Vec<SpreadDelta>,
    pub zones: Vec<CompareRow>,
}

/// Per-zone means over replications.
fn average(runs: &[Metrics]) -> Vec<(i32, i32, [f64; 4])> {
    let n = runs.len() as f64;
    runs[0]
        .zones
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let mut acc = [0.0; 4];
            for r in runs {
                let q = &r.zones[i];
                acc[0] += q.busy_fraction / n;
                acc[1] += q.mean_in_service / n;
                acc[2] += q.mean_in_queue / n;
                acc[3] += q.overflow_rate / n;
            }
            (z.stream, z.level, acc)
        })
        .collect()
}

fn spread_from(rows: &[(i32, i32, [f64; 4])], level: i32) -> (i32, i32) {
    rows.iter()
        .filter(|(s, l, v)| *l == level && (*s == 0 || v[1] >= 1.0))
        .fold((0, 0), |(lo, hi), (s, _, _)| (lo.min(*s), hi.max(*s)))
}

pub fn compare(sc: &Scenario, replications: u32, tol: &Tolerances) -> Result<CompareReport, CliError> {
    let analytic = AnalyticScenario::from_scenario(sc).map_err(|e| CliError::Config(e.to_string()))?;
    let an = expected_spread(&analytic, &crate::scan_all());
    let seeds: Vec<u64> = (0..replications as u64).map(|i| derive_seed(sc.seed, i)).collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let mut s = sc.clone();
            s.seed = seed;
            uasflow_core::run(&s)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Runtime(e.into()))?;
    let sim = average(&runs);
    let mut zones = Vec::new();
    for &(stream, level, v) in &sim {
        let Some(a) = an.zone(stream, level) else { continue };
        let o = &a.out;
        let d = (v[0] - o.theta0_star).abs();
        zones.push(CompareRow {
            stream,
            level,
            sim_busy_fraction: v[0],
            theta0_star: o.theta0_star,
            delta_theta0: d,
            sim_in_service: v[1],
            analytic_in_service: o.mean_in_service,
            delta_in_service: (v[1] - o.mean_in_service).abs(),
            sim_in_queue: v[2],
            analytic_in_queue: o.mean_in_queue,
            delta_in_queue: (v[2] - o.mean_in_queue).abs(),
            sim_overflow: v[3],
            analytic_overflow: o.phi,
            delta_overflow: (v[3] - o.phi).abs(),
            flagged: tol.gates_zone(stream, level) && d > tol.theta0,
        });
    }
    let spread: Vec<SpreadDelta> = an
        .spread
        .iter()
        .map(|&LevelSpread { level, x_min, x_max }| {
            let s = spread_from(&sim, level);
            let (dmin, dmax) = ((s.0 - x_min).abs(), (s.1 - x_max).abs());
            SpreadDelta {
                level,
                sim: s,
                analytic: (x_min, x_max),
                delta_min: dmin,
                delta_max: dmax,
                flagged: tol.gates_level(level) && (dmin > tol.spread || dmax > tol.spread),
            }
        })
        .collect();
    let failures = zones.iter().filter(|z| z.flagged).count() + spread.iter().filter(|s| s.flagged).count();
    Ok(CompareReport {
        seeds,
        tolerances: tol.clone(),
        max_delta_theta0: zones.iter().map(|z| z.delta_theta0).fold(0.0, f64::max),
        failures,
        pass: failures == 0,
        spread,
        zones,
    })
}
