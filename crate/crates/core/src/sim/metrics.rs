//! Run statistics.

use serde::{Deserialize, Serialize};

/// Statistics of the queueing system feeding `(stream, level + 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneMetrics {
    pub stream: i32,
    pub level: i32,
    /// Fraction of slots with `Z_UP` congested.
    pub busy_fraction: f64,
    /// Managed UAS in service toward `Z_UP` plus exogenous UAS inside it.
    pub mean_in_service: f64,
    pub mean_in_queue: f64,
    /// Lateral exits to the outward neighbour per slot.
    pub overflow_rate: f64,
    /// Node conflicts per slot.
    pub rule6_rate: f64,
    /// Fraction of slots with a UAS able to enter service.
    pub availability: f64,
    pub max_in_service: u32,
    /// Mean exogenous count inside this zone.
    pub mean_exogenous: f64,
    /// Histogram of the exogenous count inside this zone.
    pub exogenous_hist: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpread {
    pub level: i32,
    pub x_min: i32,
    pub x_max: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub upstream: u64,
    pub diagonal: u64,
    pub lateral: u64,
}

/// Violation counters; every field except the event counts should be zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct InvariantReport {
    pub service_time: u64,
    pub reroute_length: u64,
    pub delivery_transitions: u64,
    pub flight_duration: u64,
    pub queue_deadline: u64,
    pub overflow_target: u64,
    pub conservation: u64,
    /// Zone-slots with more than `M` unforced managed UAS in service.
    pub occupancy_exceedances: u64,
    /// Zone-slots with more than `M` intrusions.
    pub conflict_exceedances: u64,
    pub rule6_events: u64,
    pub rule7_forced_entries: u64,
    pub zone_slots: u64,
    pub max_queue_age_beta: u32,
    pub max_queue_age_gamma: u32,
}

impl InvariantReport {
    pub fn violations(&self) -> u64 {
        self.service_time
            + self.reroute_length
            + self.delivery_transitions
            + self.flight_duration
            + self.queue_deadline
            + self.overflow_target
            + self.conservation
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub seed: u64,
    pub slots: u64,
    pub window_slots: u64,
    pub deployed: u64,
    pub delivered: u64,
    /// Managed-managed cell sharing, counted as pairs per slot.
    pub internal_conflicts: u64,
    /// Managed-exogenous cell sharing, counted as pairs per slot.
    pub exogenous_conflicts: u64,
    pub mean_delay: f64,
    pub max_delay: u64,
    pub transitions: TransitionCounts,
    /// Empirical probability that consecutive deployments are at most one slot apart.
    pub conflict_risk: f64,
    pub zones: Vec<ZoneMetrics>,
    pub spread: Vec<LevelSpread>,
    pub invariants: InvariantReport,
}

impl Metrics {
    pub fn zone(&self, stream: i32, level: i32) -> Option<&ZoneMetrics> {
        self.zones.iter().find(|z| z.stream == stream && z.level == level)
    }

    pub fn level_spread(&self, level: i32) -> Option<LevelSpread> {
        self.spread.iter().copied().find(|s| s.level == level)
    }

    pub fn total_conflicts(&self) -> u64 {
        self.internal_conflicts + self.exogenous_conflicts
    }

    /// Per-zone rows for CSV output.
    pub fn zone_rows(&self) -> impl Iterator<Item = ZoneRow> + '_ {
        self.zones.iter().map(|z| ZoneRow {
            stream: z.stream,
            level: z.level,
            busy_fraction: z.busy_fraction,
            mean_in_service: z.mean_in_service,
            mean_in_queue: z.mean_in_queue,
            overflow_rate: z.overflow_rate,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneRow {
    pub stream: i32,
    pub level: i32,
    pub busy_fraction: f64,
    pub mean_in_service: f64,
    pub mean_in_queue: f64,
    pub overflow_rate: f64,
}

/// Per-zone running sums.
#[derive(Clone, Debug, Default)]
pub(crate) struct ZoneAcc {
    pub busy: u64,
    pub in_service: u64,
    pub queue: u64,
    pub overflow: u64,
    pub rule6: u64,
    pub available: u64,
    pub max_in_service: u32,
    pub exo: u64,
    pub exo_hist: Vec<u64>,
}

pub(crate) fn spread_of(zones: &[ZoneMetrics], level: i32) -> LevelSpread {
    let xs = zones.iter().filter(|z| z.level == level && (z.stream == 0 || z.mean_in_service >= 1.0));
    let (lo, hi) = xs.fold((0, 0), |(lo, hi), z| (lo.min(z.stream), hi.max(z.stream)));
    LevelSpread { level, x_min: lo, x_max: hi }
}
