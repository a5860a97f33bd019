//! Level-by-level sweep of the grid of queueing systems and the resulting
//! expected stream spread.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use uasflow_core::scenario::{ExogenousMode, Scenario, ScenarioError};
use uasflow_core::sim::LevelSpread;
use uasflow_core::{DesignParams, ZoneKey};

use crate::pgf::Pgf;
use crate::solver::SolverOptions;
use crate::stream0::{overflow0, solve_stream0, stream0_queue_recursion};
use crate::streamx::solve_streamx;
use crate::zone::{Congestion, ZoneInputs, ZoneModelOutputs};

#[derive(Clone, Debug, PartialEq)]
pub struct ExogenousInput {
    pub lambda_e: f64,
    /// Level of the zones the stream crosses.
    pub level: i32,
    /// Slots each exogenous UAS spends in a zone.
    pub slots: u32,
}

/// Everything the analytic sweep needs from a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticScenario {
    pub params: DesignParams,
    pub lambda: f64,
    pub exogenous: Option<ExogenousInput>,
    pub no_fly: HashSet<ZoneKey>,
    /// Threshold per zone level, indexed by level; levels past the end use the
    /// last entry.
    pub m_by_level: Vec<u32>,
}

impl AnalyticScenario {
    pub fn nominal(params: DesignParams, lambda: f64) -> Self {
        let m = params.m;
        let levels = params.y_e as usize + 2;
        AnalyticScenario { params, lambda, exogenous: None, no_fly: HashSet::new(), m_by_level: vec![m; levels] }
    }

    pub fn from_scenario(sc: &Scenario) -> Result<Self, ScenarioError> {
        sc.validate()?;
        let grid = sc.grid.build()?;
        let p = sc.params().clone();
        let no_fly = grid.zones().iter().filter(|z| z.no_fly).map(|z| z.key).collect();
        let m_by_level = (0..=p.y_e as i32 + 1).map(|y| sc.m_for_level(y.max(1))).collect();
        let exogenous = sc.exogenous.as_ref().map(|e| ExogenousInput {
            lambda_e: e.lambda_e,
            level: e.level,
            slots: match e.mode {
                ExogenousMode::InPlane => p.s(),
                ExogenousMode::OutOfPlane => 1,
            },
        });
        Ok(AnalyticScenario { params: p, lambda: sc.lambda, exogenous, no_fly, m_by_level })
    }

    fn m_at(&self, level: i32) -> u32 {
        let i = (level.max(0) as usize).min(self.m_by_level.len() - 1);
        self.m_by_level[i]
    }

    fn no_fly(&self, k: ZoneKey) -> bool {
        self.no_fly.contains(&k)
    }

    fn congestion(&self, k: ZoneKey) -> Congestion {
        if k.level < self.params.y_e as i32 && self.no_fly(k.up()) {
            Congestion::Blocked
        } else if k.inward().is_some_and(|i| self.no_fly(i)) || k.inward_diag().is_some_and(|i| self.no_fly(i)) {
            Congestion::Free
        } else {
            Congestion::Solve
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyticZone {
    pub stream: i32,
    pub level: i32,
    pub no_fly: bool,
    #[serde(flatten)]
    pub out: ZoneModelOutputs,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpreadResult {
    pub zones: Vec<AnalyticZone>,
    pub spread: Vec<LevelSpread>,
}

impl SpreadResult {
    pub fn zone(&self, stream: i32, level: i32) -> Option<&AnalyticZone> {
        self.zones.iter().find(|z| z.stream == stream && z.level == level)
    }

    pub fn level_spread(&self, level: i32) -> Option<LevelSpread> {
        self.spread.iter().copied().find(|s| s.level == level)
    }

    /// Zones whose fixed point missed the residual tolerance.
    pub fn flagged(&self) -> Vec<(i32, i32)> {
        self.zones.iter().filter(|z| z.out.flagged()).map(|z| (z.stream, z.level)).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.zones.iter().filter_map(|z| z.out.root.as_ref()).map(|r| r.residual).fold(0.0, f64::max)
    }
}

/// Streams visited inward to outward: `0, 1, -1, 2, -2, ...`.
fn sweep_order(xe: i32) -> impl Iterator<Item = i32> {
    std::iter::once(0).chain((1..=xe).flat_map(|x| [x, -x]))
}

pub fn expected_spread(sc: &AnalyticScenario, opts: &SolverOptions) -> SpreadResult {
    let p = &sc.params;
    let (l, xe, ye) = (p.l, p.x_e as i32, p.y_e as i32);
    let mut zones = Vec::new();
    let mut spread = Vec::new();
    // Departures of the level below, feeding nodal and outward arrivals.
    let mut below: HashMap<i32, Pgf> = HashMap::new();
    for y in 1..=ye {
        let m = sc.m_at(y + 1);
        let mut inward_overflow: HashMap<i32, Pgf> = HashMap::new();
        let mut sigma: HashMap<i32, f64> = HashMap::new();
        let mut level = HashMap::new();
        for x in sweep_order(xe) {
            let k = ZoneKey::new(x, y);
            let nodal = |s: i32| -> Pgf {
                if y == 1 {
                    if s == 0 { Pgf::bernoulli(sc.lambda) } else { Pgf::unit() }
                } else {
                    below.get(&s).cloned().unwrap_or_else(Pgf::unit)
                }
            };
            let a_o = if x == 0 {
                Pgf::bernoulli(1.0 - nodal(1).at0() * nodal(-1).at0())
            } else {
                nodal(x + x.signum())
            };
            let e0 = match &sc.exogenous {
                Some(e) if e.level == y + 1 => Pgf::bernoulli(e.lambda_e),
                _ => Pgf::unit(),
            };
            let inp = ZoneInputs {
                a: nodal(x),
                a_i: inward_overflow.remove(&x).unwrap_or_else(Pgf::unit),
                a_o,
                b: if x == 0 { Pgf::unit() } else { Pgf::bernoulli(sigma[&(x - x.signum())]) },
                exo_slots: sc.exogenous.as_ref().map_or(p.s(), |e| e.slots),
                e0,
                l,
                s: p.s(),
                m,
                eta: p.eta,
            };
            let no_fly = sc.no_fly(k);
            let out = if no_fly {
                ZoneModelOutputs::empty()
            } else if x == 0 {
                solve_stream0(&inp, sc.congestion(k), opts)
            } else {
                solve_streamx(&inp, sc.congestion(k), opts)
            };
            if x == 0 {
                let v = stream0_queue_recursion(&inp.a, out.theta0_star, l);
                let (_, neg, pos) = if no_fly {
                    (0.0, Pgf::unit(), Pgf::unit())
                } else {
                    overflow0(&inp.a, &v, out.theta0_star, out.w1_0_star, &inp)
                };
                inward_overflow.insert(-1, neg);
                inward_overflow.insert(1, pos);
            } else {
                inward_overflow.insert(x + x.signum(), Pgf::bernoulli(out.phi));
            }
            sigma.insert(x, out.sigma);
            level.insert(x, out.departures.clone());
            zones.push(AnalyticZone { stream: x, level: y, no_fly, out });
        }
        let members = zones
            .iter()
            .filter(|z| z.level == y && (z.stream == 0 || z.out.mean_in_service >= 1.0))
            .map(|z| z.stream);
        let (lo, hi) = members.fold((0, 0), |(lo, hi), s| (lo.min(s), hi.max(s)));
        spread.push(LevelSpread { level: y, x_min: lo, x_max: hi });
        below = level;
    }
    zones.sort_by_key(|z| (z.level, z.stream));
    SpreadResult { zones, spread }
}
