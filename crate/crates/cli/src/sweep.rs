//! Parameter grids evaluated concurrently, one output file per point.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use uasflow_core::draws::derive_seed;
use uasflow_core::sim::LevelSpread;
use uasflow_core::Scenario;
use uasflow_queueing::{expected_spread, AnalyticScenario};

use crate::output::{write_csv, write_json};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    pub lambda: Vec<f64>,
    pub m: Vec<u32>,
    pub eta: Vec<f64>,
}

impl SweepGrid {
    pub fn validate(&self, base: &Scenario) -> Result<(), String> {
        if self.lambda.is_empty() || self.m.is_empty() || self.eta.is_empty() {
            return Err("sweep grid is empty".into());
        }
        for (i, _) in self.points().enumerate() {
            self.scenario(base, i).validate().map_err(|e| format!("sweep point {i}: {e}"))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lambda.len() * self.m.len() * self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(lambda, M, eta)` in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, u32, f64)> + '_ {
        self.lambda
            .iter()
            .flat_map(move |&l| self.m.iter().flat_map(move |&m| self.eta.iter().map(move |&e| (l, m, e))))
    }

    /// Scenario of point `i` with its derived seed.
    pub fn scenario(&self, base: &Scenario, i: usize) -> Scenario {
        let (lambda, m, eta) = self.points().nth(i).expect("point index in range");
        let mut s = base.clone();
        s.lambda = lambda;
        s.grid.params.m = m;
        s.grid.params.eta = eta;
        s.seed = derive_seed(base.seed, i as u64);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: usize,
    pub lambda: f64,
    pub m: u32,
    pub eta: f64,
    pub seed: u64,
    pub stream: i32,
    pub level: i32,
    pub theta0: f64,
    pub theta0_star: f64,
    pub mean_in_service: f64,
    pub mean_in_queue: f64,
    pub phi: f64,
    pub sigma: f64,
    pub pi: f64,
    pub sim_busy_fraction: Option<f64>,
    pub sim_mean_in_service: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointSpread {
    pub point: usize,
    pub analytic: Vec<LevelSpread>,
    pub simulated: Option<Vec<LevelSpread>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointFailure {
    pub point: usize,
    pub error: String,
}

pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub spreads: Vec<PointSpread>,
    pub failed: Vec<PointFailure>,
}

fn run_point(sc: &Scenario, i: usize, simulate: bool) -> Result<(Vec<SweepRow>, PointSpread), String> {
    let analytic = AnalyticScenario::from_scenario(sc).map_err(|e| e.to_string())?;
    let an = expected_spread(&analytic, &crate::scan_all());
    let flagged = an.flagged();
    if !flagged.is_empty() {
        return Err(format!("fixed point above tolerance in zones {flagged:?}"));
    }
    let sim = if simulate { Some(uasflow_core::run(sc).map_err(|e| e.to_string())?) } else { None };
    let p = sc.params();
    let rows = an
        .zones
        .iter()
        .map(|z| {
            let s = sim.as_ref().and_then(|m| m.zone(z.stream, z.level));
            SweepRow {
                point: i,
                lambda: sc.lambda,
                m: p.m,
                eta: p.eta,
                seed: sc.seed,
                stream: z.stream,
                level: z.level,
                theta0: z.out.theta0,
                theta0_star: z.out.theta0_star,
                mean_in_service: z.out.mean_in_service,
                mean_in_queue: z.out.mean_in_queue,
                phi: z.out.phi,
                sigma: z.out.sigma,
                pi: z.out.pi,
                sim_busy_fraction: s.map(|s| s.busy_fraction),
                sim_mean_in_service: s.map(|s| s.mean_in_service),
            }
        })
        .collect();
    Ok((rows, PointSpread { point: i, analytic: an.spread.clone(), simulated: sim.map(|m| m.spread) }))
}

pub fn sweep(base: &Scenario, grid: &SweepGrid, simulate: bool, out: &Path) -> Result<SweepResult, CliError> {
    let dir = out.join("points");
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(e.into()))?;
    let results: Vec<_> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let sc = grid.scenario(base, i);
            let r = run_point(&sc, i, simulate);
            if let Ok((rows, _)) = &r {
                write_csv(&dir.join(format!("point_{i:04}.csv")), rows.iter()).map_err(|e| e.to_string())?;
            }
            r
        })
        .collect();
    let mut res = SweepResult { rows: Vec::new(), spreads: Vec::new(), failed: Vec::new() };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((rows, spread)) => {
                res.rows.extend(rows);
                res.spreads.push(spread);
            }
            Err(error) => res.failed.push(PointFailure { point: i, error }),
        }
    }
    write_csv(&out.join("sweep.csv"), res.rows.iter())?;
    write_json(&out.join("sweep_spread.json"), &res.spreads)?;
    write_json(&out.join("sweep_failures.json"), &res.failed)?;
    Ok(res)
}
