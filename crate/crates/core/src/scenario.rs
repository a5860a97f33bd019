//! Scenario configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DesignParams, GridConfig, GridError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExogenousMode {
    /// A row of cells crossing the grid; each UAS stays `S` slots in a zone.
    #[default]
    InPlane,
    /// Per-zone presence for a single slot, occupying no cells.
    OutOfPlane,
}

/// A crossing stream orthogonal to the nominal segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExogenousConfig {
    pub lambda_e: f64,
    pub level: i32,
    /// Row offset from the node row, in `[-L, L] \ {0}`; defaults to `-L`.
    #[serde(default)]
    pub offset: Option<i32>,
    /// +1 crosses toward +x (left to right facing upstream).
    #[serde(default = "default_dx")]
    pub dx: i32,
    #[serde(default)]
    pub mode: ExogenousMode,
}

fn default_dx() -> i32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopConfig {
    #[serde(default)]
    pub uas: Option<u64>,
    #[serde(default)]
    pub slots: Option<u64>,
    /// Maximum slots allowed to deliver the last UAS after deployment stops.
    #[serde(default = "default_drain_cap")]
    pub drain_cap: u64,
}

fn default_drain_cap() -> u64 {
    50_000
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig { uas: Some(1200), slots: None, drain_cap: default_drain_cap() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricsConfig {
    /// Slots excluded from averages at the start; defaults to `Y_e * S`.
    #[serde(default)]
    pub warmup: Option<u64>,
    #[serde(default)]
    pub include_drain: bool,
    #[serde(default)]
    pub log_events: bool,
}

/// Override of `M` for a range of levels, optionally limited to a slot range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub levels: [i32; 2],
    #[serde(default)]
    pub slots: Option<[u64; 2]>,
    pub m: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub grid: GridConfig,
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exogenous: Option<ExogenousConfig>,
    #[serde(default)]
    pub stop: StopConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub schedule: Vec<ScheduleEntry>,
}

impl Scenario {
    /// Straight segment along +y with the given design parameters.
    pub fn nominal(params: DesignParams, lambda: f64, seed: u64) -> Self {
        Scenario {
            grid: GridConfig::nominal(params),
            lambda,
            seed,
            exogenous: None,
            stop: StopConfig::default(),
            metrics: MetricsConfig::default(),
            schedule: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn params(&self) -> &DesignParams {
        &self.grid.params
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        self.grid.params.validate()?;
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda = {} outside [0, 1]", self.lambda));
        }
        let p = &self.grid.params;
        if let Some(e) = &self.exogenous {
            if !(0.0..=1.0).contains(&e.lambda_e) {
                return bad(format!("lambda_e = {} outside [0, 1]", e.lambda_e));
            }
            if e.level < 1 || e.level > p.y_e as i32 {
                return bad(format!("exogenous level {} outside [1, {}]", e.level, p.y_e));
            }
            let r = e.offset.unwrap_or(-(p.l as i32));
            if r == 0 || r.unsigned_abs() > p.l {
                return bad(format!("exogenous row offset {r} must be nonzero and within L"));
            }
            if e.dx.abs() != 1 {
                return bad("exogenous dx must be +1 or -1".into());
            }
        }
        match (self.stop.uas, self.stop.slots) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return bad("stop needs exactly one of `uas` or `slots`".into()),
        }
        for s in &self.schedule {
            if s.m < 1 || s.m > p.s() {
                return bad(format!("scheduled M = {} outside [1, S]", s.m));
            }
            if s.levels[0] > s.levels[1] {
                return bad("schedule level range is reversed".into());
            }
        }
        Ok(())
    }

    /// Threshold applied to zones of `level` at `slot`. Levels above the
    /// grid use the last level's value.
    pub fn m_at(&self, level: i32, slot: u64) -> u32 {
        let level = level.min(self.grid.params.y_e as i32);
        self.schedule
            .iter()
            .rev()
            .find(|s| {
                (s.levels[0]..=s.levels[1]).contains(&level)
                    && s.slots.is_none_or(|[a, b]| (a..b).contains(&slot))
            })
            .map_or(self.grid.params.m, |s| s.m)
    }

    /// Slot-independent threshold per level, as used by the analytic model.
    pub fn m_for_level(&self, level: i32) -> u32 {
        let level = level.min(self.grid.params.y_e as i32);
        self.schedule
            .iter()
            .rev()
            .find(|s| s.slots.is_none() && (s.levels[0]..=s.levels[1]).contains(&level))
            .map_or(self.grid.params.m, |s| s.m)
    }

    pub fn warmup(&self) -> u64 {
        self.metrics.warmup.unwrap_or((self.grid.params.y_e * self.grid.params.s()) as u64)
    }

    pub fn exogenous_offset(&self) -> Option<i32> {
        self.exogenous.as_ref().map(|e| e.offset.unwrap_or(-(self.grid.params.l as i32)))
    }
}
