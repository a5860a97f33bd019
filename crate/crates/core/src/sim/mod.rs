//! Slotted-time simulator.
//!
//! Each slot: draw the source arrival and exogenous entries, take a
//! snapshot, decide every managed UAS from that snapshot, then apply all
//! moves at once. Draws are consumed in a fixed order (arrival, exogenous,
//! then per level the descend tie break followed by branch choices in zone
//! and id order), so a seed fully determines a run.

pub mod events;
pub mod metrics;

use thiserror::Error;

use crate::draws::{ChaChaDraws, DrawKind, DrawSource};
use crate::grid::{lateral_j, Cell, Grid, GridError, Side, ZoneKey};
use crate::rules::{
    decide_zone, descend_condition, perceived_up_congested, predict_positions, step_decision, zone_congested,
    CongestionView, Motion, RuleError, ServiceLeg, TransitionCommand, TransitionTag, UasState, ZoneContext,
    ZoneCounts,
};
use crate::scenario::{ExogenousMode, Scenario, ScenarioError};

pub use events::{Event, EventTag};
pub use metrics::{InvariantReport, LevelSpread, Metrics, TransitionCounts, ZoneMetrics, ZoneRow};
use metrics::{spread_of, ZoneAcc};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("internal-invariant-violation at slot {slot}: {msg}")]
    Invariant { slot: u64, msg: String },
    #[error("rule failure at slot {slot}: {source}")]
    Rule { slot: u64, source: RuleError },
    #[error("non-termination-cap-exceeded: {in_flight} UAS still in flight after {cap} drain slots")]
    NonTerminationCapExceeded { cap: u64, in_flight: usize },
}

#[derive(Clone, Debug)]
struct Agent {
    state: UasState,
    deploy_slot: u64,
    service_moves: u64,
    lateral_moves: u64,
}

const EXO_ID_BASE: u64 = 1 << 48;

pub struct Simulation {
    scenario: Scenario,
    grid: Grid,
    draws: Box<dyn DrawSource>,
    slot: u64,
    next_id: u64,
    next_exo_id: u64,
    agents: Vec<Agent>,
    exo: Vec<UasState>,
    oop_present: Vec<ZoneKey>,
    deploying: bool,
    drain_start: Option<u64>,
    deployed: u64,
    delivered: u64,
    last_deploy: Option<u64>,
    gaps: u64,
    short_gaps: u64,
    acc: Vec<ZoneAcc>,
    window_slots: u64,
    internal_conflicts: u64,
    exogenous_conflicts: u64,
    delays: Vec<u64>,
    transitions: TransitionCounts,
    inv: InvariantReport,
    events: Option<Vec<Event>>,
}

/// Run a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<Metrics, SimError> {
    let mut sim = Simulation::new(scenario.clone())?;
    while sim.step()? {}
    Ok(sim.metrics())
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let draws = Box::new(ChaChaDraws::new(scenario.seed));
        Self::with_draws(scenario, draws)
    }

    pub fn with_draws(scenario: Scenario, draws: Box<dyn DrawSource>) -> Result<Self, SimError> {
        scenario.validate()?;
        let grid = scenario.grid.build()?;
        let s = grid.s() as usize;
        let acc = vec![ZoneAcc { exo_hist: vec![0; s + 1], ..Default::default() }; grid.zones().len()];
        let events = scenario.metrics.log_events.then(Vec::new);
        let mut sim = Simulation {
            scenario,
            grid,
            draws,
            slot: 0,
            next_id: 1,
            next_exo_id: EXO_ID_BASE,
            agents: Vec::new(),
            exo: Vec::new(),
            oop_present: Vec::new(),
            deploying: true,
            drain_start: None,
            deployed: 0,
            delivered: 0,
            last_deploy: None,
            gaps: 0,
            short_gaps: 0,
            acc,
            window_slots: 0,
            internal_conflicts: 0,
            exogenous_conflicts: 0,
            delays: Vec::new(),
            transitions: TransitionCounts { upstream: 0, diagonal: 0, lateral: 0 },
            inv: InvariantReport::default(),
            events,
        };
        sim.prefill_exogenous();
        Ok(sim)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Managed UAS in id order.
    pub fn managed(&self) -> impl Iterator<Item = &UasState> {
        self.agents.iter().map(|a| &a.state)
    }

    pub fn exogenous(&self) -> &[UasState] {
        &self.exo
    }

    pub fn events(&self) -> &[Event] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn in_flight(&self) -> usize {
        self.agents.len()
    }

    /// Row of the in-plane exogenous stream and its lateral extent.
    fn exo_row(&self) -> Option<(i32, i32, i32)> {
        let e = self.scenario.exogenous.as_ref()?;
        if e.mode != ExogenousMode::InPlane {
            return None;
        }
        let (l, s, xe) = (self.grid.l(), self.grid.s(), self.grid.x_e());
        let y = (e.level - 1) * s + l + self.scenario.exogenous_offset().unwrap_or(-l);
        Some((y, -xe * s - l, xe * s + l))
    }

    fn prefill_exogenous(&mut self) {
        let Some((y, x0, x1)) = self.exo_row() else { return };
        let (lambda_e, dx) = {
            let e = self.scenario.exogenous.as_ref().expect("row implies config");
            (e.lambda_e, e.dx)
        };
        for x in x0..=x1 {
            if self.draws.draw(DrawKind::Exogenous) < lambda_e {
                self.push_exo(Cell::new(x, y), dx);
            }
        }
    }

    fn push_exo(&mut self, cell: Cell, dx: i32) {
        self.exo.push(UasState { id: self.next_exo_id, cell, motion: Motion::Exogenous { dx } });
        self.next_exo_id += 1;
    }

    fn log(&mut self, slot: u64, uas: u64, cell: Cell, tag: EventTag, zone: Option<ZoneKey>, to: Option<ZoneKey>) {
        if let Some(ev) = self.events.as_mut() {
            let cell = self.grid.frame().to_world(cell);
            ev.push(Event { slot, uas, cell, tag, zone, to });
        }
    }

    fn invariant(&self, msg: String) -> SimError {
        SimError::Invariant { slot: self.slot, msg }
    }

    fn stop_reached(&self) -> bool {
        match (self.scenario.stop.uas, self.scenario.stop.slots) {
            (Some(n), _) => self.deployed >= n,
            (_, Some(n)) => self.slot >= n,
            _ => true,
        }
    }

    /// Advance one slot. Returns `false` once deployment has stopped and
    /// every managed UAS has been delivered.
    pub fn step(&mut self) -> Result<bool, SimError> {
        if self.deploying && self.stop_reached() {
            self.deploying = false;
            self.drain_start = Some(self.slot);
        }
        if !self.deploying && self.agents.is_empty() {
            return Ok(false);
        }
        if let Some(d) = self.drain_start {
            let cap = self.scenario.stop.drain_cap;
            if self.slot - d > cap {
                return Err(SimError::NonTerminationCapExceeded { cap, in_flight: self.agents.len() });
            }
        }
        let k = self.slot;

        let deploy = self.deploying && self.draws.draw(DrawKind::Arrival) < self.scenario.lambda;
        let mut spawn = false;
        if let Some(e) = self.scenario.exogenous.clone() {
            match e.mode {
                ExogenousMode::InPlane => spawn = self.draws.draw(DrawKind::Exogenous) < e.lambda_e,
                ExogenousMode::OutOfPlane => {
                    self.oop_present.clear();
                    for x in -self.grid.x_e()..=self.grid.x_e() {
                        if self.draws.draw(DrawKind::Exogenous) < e.lambda_e {
                            self.oop_present.push(ZoneKey::new(x, e.level));
                        }
                    }
                }
            }
        }

        // Snapshot.
        let world: Vec<UasState> = self.agents.iter().map(|a| a.state).chain(self.exo.iter().copied()).collect();
        let preds = predict_positions(&self.grid, &world);
        let mut counts = ZoneCounts::from_predictions(&self.grid, &preds);
        for z in &self.oop_present {
            counts.add(*z, 1);
        }
        let nz = self.grid.zones().len();
        let mut occ: Vec<Vec<usize>> = vec![Vec::new(); nz];
        for (i, a) in self.agents.iter().enumerate() {
            if let Motion::Lateral { zone, .. } = a.state.motion {
                let zi = self.grid.index_of(zone).ok_or_else(|| self.invariant(format!("UAS {} off grid", a.state.id)))?;
                if self.grid.zones()[zi].no_fly {
                    return Err(self.invariant(format!("UAS {} inside no-fly zone {zone}", a.state.id)));
                }
                occ[zi].push(i);
            }
        }
        let in_window = k >= self.scenario.warmup() && (self.deploying || self.scenario.metrics.include_drain);
        if in_window {
            self.window_slots += 1;
            self.record_window(k, &counts, &occ);
        }
        self.record_intrusions(k)?;

        // Decisions.
        let mut cmds: Vec<Option<TransitionCommand>> = vec![None; self.agents.len()];
        let xe = self.grid.x_e();
        let eta = self.scenario.params().eta;
        for level in 1..=self.grid.y_e() {
            let m_up = self.scenario.m_at(level + 1, k);
            let mut desc = vec![false; (2 * xe + 1) as usize];
            for x in -xe..=xe {
                let z = ZoneKey::new(x, level);
                let zi = self.grid.index_of(z).expect("zone in grid");
                let has_arrival = occ[zi].iter().any(|&i| {
                    let u = &self.agents[i].state;
                    u.cell == self.grid.node(z) && matches!(u.motion, Motion::Lateral { from_service: true, .. })
                });
                if has_arrival {
                    let inward_occ = z.inward().and_then(|zin| self.grid.index_of(zin)).is_some_and(|i| !occ[i].is_empty());
                    desc[(x + xe) as usize] = descend_condition(&self.grid, &counts, inward_occ, z, m_up);
                }
            }
            let (il, ir) = ((xe - 1) as usize, (xe + 1) as usize);
            if desc[il] && desc[ir] {
                if self.draws.draw(DrawKind::Tie) < eta {
                    desc[il] = false;
                } else {
                    desc[ir] = false;
                }
            }
            for x in -xe..=xe {
                let z = ZoneKey::new(x, level);
                let zi = self.grid.index_of(z).expect("zone in grid");
                if occ[zi].is_empty() {
                    continue;
                }
                let ctx = ZoneContext {
                    up_congested: perceived_up_congested(&self.grid, &counts, z, m_up),
                    up_congested_actual: zone_congested(&self.grid, &counts, z.up(), m_up),
                    descend_ok: desc[(x + xe) as usize],
                };
                let occupants: Vec<UasState> = occ[zi].iter().map(|&i| self.agents[i].state).collect();
                let d = decide_zone(&self.grid, z, &occupants, &ctx, self.draws.as_mut())
                    .map_err(|source| SimError::Rule { slot: k, source })?;
                if d.rule6 {
                    self.inv.rule6_events += 1;
                    if in_window {
                        self.acc[zi].rule6 += 1;
                    }
                    let node = self.grid.node(z);
                    for &i in &occ[zi] {
                        if self.agents[i].state.cell == node {
                            self.log(k, self.agents[i].state.id, node, EventTag::Rule6, Some(z), None);
                        }
                    }
                }
                self.inv.rule7_forced_entries += d.forced.len() as u64;
                for id in d.forced {
                    let cell = occupants.iter().find(|u| u.id == id).map_or(self.grid.node(z), |u| u.cell);
                    self.log(k, id, cell, EventTag::Rule7Forced, Some(z), None);
                }
                for (c, &i) in d.commands.into_iter().zip(&occ[zi]) {
                    cmds[i] = Some(c);
                }
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            if cmds[i].is_none() {
                let c = step_decision(&self.grid, &a.state, &CongestionView::default(), 0.0)
                    .map_err(|source| SimError::Rule { slot: k, source })?;
                cmds[i] = Some(c);
            }
        }

        // Apply.
        let agents = std::mem::take(&mut self.agents);
        let mut kept = Vec::with_capacity(agents.len() + 1);
        for (mut a, cmd) in agents.into_iter().zip(cmds) {
            let cmd = cmd.expect("every UAS has a command");
            if self.apply(k, &mut a, cmd, in_window)? {
                kept.push(a);
            }
        }
        self.agents = kept;
        if deploy {
            let node = self.grid.source();
            let id = self.next_id;
            self.next_id += 1;
            self.deployed += 1;
            if let Some(prev) = self.last_deploy {
                self.gaps += 1;
                self.short_gaps += (k + 1 - prev - 1 <= 1) as u64;
            }
            self.last_deploy = Some(k + 1);
            self.agents.push(Agent {
                state: UasState {
                    id,
                    cell: node,
                    motion: Motion::Lateral { zone: ZoneKey::new(0, 1), queue_age: 0, from_service: true },
                },
                deploy_slot: k + 1,
                service_moves: 0,
                lateral_moves: 0,
            });
            self.log(k + 1, id, node, EventTag::Deploy, Some(ZoneKey::new(0, 1)), None);
        }
        if let Some((y, x0, x1)) = self.exo_row() {
            let dx = self.scenario.exogenous.as_ref().map_or(1, |e| e.dx);
            for e in &mut self.exo {
                e.cell.x += dx;
            }
            self.exo.retain(|e| (x0..=x1).contains(&e.cell.x));
            if spawn {
                self.push_exo(Cell::new(if dx > 0 { x0 } else { x1 }, y), dx);
            }
        }
        if self.deployed != self.delivered + self.agents.len() as u64 {
            self.inv.conservation += 1;
        }
        self.slot += 1;
        Ok(true)
    }

    /// Apply one command; returns `false` when the UAS is delivered.
    fn apply(&mut self, k: u64, a: &mut Agent, cmd: TransitionCommand, in_window: bool) -> Result<bool, SimError> {
        let (from, to) = (a.state.cell, cmd.target);
        let (dx, dy) = (to.x - from.x, to.y - from.y);
        if dx.abs() > 1 || dy.abs() > 1 || (dx == 0 && dy == 0) || dy < 0 {
            return Err(self.invariant(format!("UAS {} commanded from {from:?} to {to:?}", a.state.id)));
        }
        let tz = self.grid.zone_of(to);
        if tz.stream.abs() > self.grid.x_e() || self.grid.zone(tz).is_some_and(|z| z.no_fly) {
            return Err(self.invariant(format!("UAS {} commanded into blocked zone {tz}", a.state.id)));
        }
        if dy == 0 {
            a.lateral_moves += 1;
            self.transitions.lateral += 1;
        } else {
            a.service_moves += 1;
            if dx == 0 {
                self.transitions.upstream += 1;
            } else {
                self.transitions.diagonal += 1;
            }
        }
        let id = a.state.id;
        let prev = a.state.motion;

        if matches!(cmd.tag, TransitionTag::EnterService | TransitionTag::Descend) {
            if let Motion::Service(leg) = cmd.next {
                if !self.reroute_matches(&leg) {
                    self.inv.reroute_length += 1;
                }
                self.log(k + 1, id, to, cmd.tag.into(), Some(leg.origin), Some(leg.target));
            }
        } else if cmd.tag == TransitionTag::Outward {
            if let (Motion::Lateral { zone: z0, .. }, Motion::Lateral { zone: z1, .. }) = (prev, cmd.next) {
                if z0 != z1 {
                    let side = Side::from_sign(dx).expect("lateral move");
                    let j1 = lateral_j(z1, to.x - self.grid.node(z1).x, self.grid.l());
                    if z1 != z0.outward(side) || j1 != 1 {
                        self.inv.overflow_target += 1;
                    }
                    if in_window {
                        if let Some(i) = self.grid.index_of(z0) {
                            self.acc[i].overflow += 1;
                        }
                    }
                    self.log(k + 1, id, to, EventTag::Overflow, Some(z0), Some(z1));
                } else {
                    self.log(k + 1, id, to, EventTag::Outward, Some(z0), None);
                }
            }
        } else if self.events.is_some() {
            let z = match prev {
                Motion::Service(leg) => Some(leg.origin),
                _ => None,
            };
            self.log(k + 1, id, to, cmd.tag.into(), z, None);
        }

        a.state = UasState { id, cell: to, motion: cmd.next };
        match (prev, cmd.next) {
            (Motion::Service(leg), Motion::Lateral { zone, .. }) => {
                if leg.age + 1 != self.grid.s() as u32 || to != self.grid.node(zone) || zone != leg.target {
                    self.inv.service_time += 1;
                }
                if zone.level > self.grid.y_e() {
                    self.deliver(k + 1, a);
                    return Ok(false);
                }
            }
            (_, Motion::Lateral { zone, queue_age, .. }) => {
                let j = lateral_j(zone, to.x - self.grid.node(zone).x, self.grid.l()) as i32;
                let l = self.grid.l();
                if j < l + 1 {
                    self.inv.max_queue_age_beta = self.inv.max_queue_age_beta.max(queue_age);
                    if queue_age as i32 > l - 1 {
                        self.inv.queue_deadline += 1;
                    }
                } else if j > l + 1 {
                    self.inv.max_queue_age_gamma = self.inv.max_queue_age_gamma.max(queue_age);
                    if queue_age as i32 > l {
                        self.inv.queue_deadline += 1;
                    }
                }
            }
            _ => {}
        }
        Ok(true)
    }

    /// Compare a freshly entered leg with the grid's path geometry.
    fn reroute_matches(&self, leg: &ServiceLeg) -> bool {
        let Ok(mut expected) = self.grid.path_cells(leg.origin, leg.kind) else { return false };
        let end = self.grid.node(leg.target);
        let mut last = *expected.last().unwrap_or(&leg.start);
        while last.y < end.y {
            last = last.offset(0, 1);
            expected.push(last);
        }
        let s = self.grid.s() as u32;
        expected.len() as u32 == s && (1..=s).all(|t| leg.cell_at(t) == expected[(t - 1) as usize])
    }

    fn deliver(&mut self, slot: u64, a: &Agent) {
        self.delivered += 1;
        let nominal = (self.grid.y_e() * self.grid.s()) as u64;
        if a.service_moves != nominal {
            self.inv.delivery_transitions += 1;
        }
        let flight = slot - a.deploy_slot;
        if a.service_moves + a.lateral_moves != flight {
            self.inv.flight_duration += 1;
        }
        self.delays.push(flight.saturating_sub(nominal));
        self.log(slot, a.state.id, a.state.cell, EventTag::Deliver, None, None);
    }

    fn record_window(&mut self, k: u64, counts: &ZoneCounts, occ: &[Vec<usize>]) {
        let grid = &self.grid;
        let l = grid.l();
        let nz = grid.zones().len();
        let mut svc = vec![0u32; nz];
        let mut unforced = vec![0u32; nz];
        for a in &self.agents {
            if let Motion::Service(leg) = a.state.motion {
                if let Some(i) = grid.index_of(leg.target.down()) {
                    svc[i] += 1;
                    unforced[i] += (!leg.forced) as u32;
                }
            }
        }
        let mut exo = vec![0u32; nz];
        for e in &self.exo {
            if let Some(i) = grid.index_of(grid.zone_of(e.cell)) {
                exo[i] += 1;
            }
        }
        for z in &self.oop_present {
            if let Some(i) = grid.index_of(*z) {
                exo[i] += 1;
            }
        }
        for (zi, zone) in grid.zones().iter().enumerate() {
            let z = zone.key;
            let up = z.up();
            let m_up = self.scenario.m_at(up.level, k);
            let exo_up = grid.index_of(up).map_or(0, |i| exo[i]);
            let acc = &mut self.acc[zi];
            acc.busy += zone_congested(grid, counts, up, m_up) as u64;
            acc.in_service += (svc[zi] + exo_up) as u64;
            acc.max_in_service = acc.max_in_service.max(svc[zi]);
            if unforced[zi] > m_up {
                self.inv.occupancy_exceedances += 1;
            }
            self.inv.zone_slots += 1;
            let node = grid.node(z);
            acc.queue += occ[zi]
                .iter()
                .filter(|&&i| {
                    let j = lateral_j(z, self.agents[i].state.cell.x - node.x, l);
                    j != 1 && j as i32 != l + 1
                })
                .count() as u64;
            let outward_arrival = [Side::Left, Side::Right].iter().any(|&s| {
                let on = z.outward(s);
                (z.stream == 0 || s == Side::Right)
                    && grid.index_of(on).is_some_and(|oi| {
                        occ[oi].iter().any(|&i| {
                            let u = &self.agents[i].state;
                            u.cell == grid.node(on) && matches!(u.motion, Motion::Lateral { from_service: true, .. })
                        })
                    })
            });
            acc.available += (!occ[zi].is_empty() || outward_arrival) as u64;
            acc.exo += exo[zi] as u64;
            let h = (exo[zi] as usize).min(acc.exo_hist.len() - 1);
            acc.exo_hist[h] += 1;
        }
    }

    fn record_intrusions(&mut self, k: u64) -> Result<(), SimError> {
        let mut cells: Vec<(Cell, bool)> = self
            .agents
            .iter()
            .map(|a| (a.state.cell, true))
            .chain(self.exo.iter().map(|e| (e.cell, false)))
            .collect();
        cells.sort_unstable_by_key(|&(c, m)| (c.x, c.y, !m));
        let mut per_zone: Vec<u32> = vec![0; self.grid.zones().len()];
        let mut i = 0;
        while i < cells.len() {
            let c = cells[i].0;
            let mut j = i;
            let (mut n, mut e) = (0u64, 0u64);
            while j < cells.len() && cells[j].0 == c {
                if cells[j].1 {
                    n += 1;
                } else {
                    e += 1;
                }
                j += 1;
            }
            let pairs = n * n.saturating_sub(1) / 2 + n * e;
            if pairs > 0 {
                let z = self.grid.zone_of(c);
                if n >= 2 && c != self.grid.node(z) {
                    return Err(self.invariant(format!("{n} managed UAS share non-node cell {c:?}")));
                }
                self.internal_conflicts += n * n.saturating_sub(1) / 2;
                self.exogenous_conflicts += n * e;
                if let Some(zi) = self.grid.index_of(z) {
                    per_zone[zi] += pairs as u32;
                }
                if self.events.is_some() {
                    let tag = if n >= 2 { EventTag::Conflict } else { EventTag::ExogenousConflict };
                    let id = self.agents.iter().find(|a| a.state.cell == c).map_or(0, |a| a.state.id);
                    self.log(k, id, c, tag, Some(z), None);
                }
            }
            i = j;
        }
        for (zi, &p) in per_zone.iter().enumerate() {
            let level = self.grid.zones()[zi].key.level;
            if p > self.scenario.m_at(level, k) {
                self.inv.conflict_exceedances += 1;
            }
        }
        Ok(())
    }

    pub fn metrics(&self) -> Metrics {
        let w = self.window_slots.max(1) as f64;
        let zones: Vec<ZoneMetrics> = self
            .grid
            .zones()
            .iter()
            .zip(&self.acc)
            .map(|(z, a)| ZoneMetrics {
                stream: z.key.stream,
                level: z.key.level,
                busy_fraction: a.busy as f64 / w,
                mean_in_service: a.in_service as f64 / w,
                mean_in_queue: a.queue as f64 / w,
                overflow_rate: a.overflow as f64 / w,
                rule6_rate: a.rule6 as f64 / w,
                availability: a.available as f64 / w,
                max_in_service: a.max_in_service,
                mean_exogenous: a.exo as f64 / w,
                exogenous_hist: a.exo_hist.clone(),
            })
            .collect();
        let spread = (1..=self.grid.y_e()).map(|y| spread_of(&zones, y)).collect();
        let n = self.delays.len().max(1) as f64;
        Metrics {
            seed: self.scenario.seed,
            slots: self.slot,
            window_slots: self.window_slots,
            deployed: self.deployed,
            delivered: self.delivered,
            internal_conflicts: self.internal_conflicts,
            exogenous_conflicts: self.exogenous_conflicts,
            mean_delay: self.delays.iter().sum::<u64>() as f64 / n,
            max_delay: self.delays.iter().copied().max().unwrap_or(0),
            transitions: self.transitions,
            conflict_risk: if self.gaps == 0 { 0.0 } else { self.short_gaps as f64 / self.gaps as f64 },
            zones,
            spread,
            invariants: self.inv.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DesignParams;

    fn scenario(lambda: f64, m: u32, uas: u64, seed: u64) -> Scenario {
        let mut s = Scenario::nominal(DesignParams::new(5, m, 0.5, 5, 10), lambda, seed);
        s.stop.uas = Some(uas);
        s
    }

    #[test]
    fn first_deployment_lands_on_source() {
        let mut sim = Simulation::new(scenario(1.0, 2, 10, 1)).unwrap();
        assert!(sim.step().unwrap());
        let u: Vec<_> = sim.managed().collect();
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].cell, Cell::new(0, 5));
    }

    #[test]
    fn source_yields_when_up_zone_congested() {
        let mut sim = Simulation::new(scenario(0.0, 3, 1, 1)).unwrap();
        let grid = sim.grid().clone();
        let z = ZoneKey::new(0, 1);
        let mut id = 10;
        for age in [2u32, 4, 6] {
            let mut leg = crate::rules::entry_leg(&grid, z, grid.node(z), false);
            leg.age = age;
            sim.agents.push(Agent {
                state: UasState { id, cell: leg.cell_at(age), motion: Motion::Service(leg) },
                deploy_slot: 0,
                service_moves: age as u64,
                lateral_moves: 0,
            });
            id += 1;
        }
        sim.agents.push(Agent {
            state: UasState {
                id,
                cell: grid.node(z),
                motion: Motion::Lateral { zone: z, queue_age: 0, from_service: true },
            },
            deploy_slot: 0,
            service_moves: 0,
            lateral_moves: 0,
        });
        sim.deployed = 4;
        sim.step().unwrap();
        let moved = sim.managed().find(|u| u.id == id).unwrap();
        assert_eq!(moved.cell.y, grid.node(z).y);
        assert_eq!((moved.cell.x - grid.node(z).x).abs(), 1);
    }

    #[test]
    fn light_traffic_keeps_to_nominal() {
        let m = run(&scenario(0.05, 2, 200, 3)).unwrap();
        assert_eq!(m.delivered, 200);
        assert_eq!(m.invariants.violations(), 0);
        assert!(m.spread.iter().all(|s| s.x_min == 0 && s.x_max == 0));
    }

    #[test]
    fn replay_is_identical() {
        let mut s = scenario(0.6, 2, 150, 9);
        s.metrics.log_events = true;
        let mut a = Simulation::new(s.clone()).unwrap();
        while a.step().unwrap() {}
        let mut b = Simulation::new(s).unwrap();
        while b.step().unwrap() {}
        assert_eq!(a.events(), b.events());
        assert_eq!(a.metrics(), b.metrics());
    }

    #[test]
    fn slot_stop_and_drain() {
        let mut s = scenario(0.5, 2, 0, 4);
        s.stop = crate::scenario::StopConfig { uas: None, slots: Some(300), drain_cap: 5_000 };
        let m = run(&s).unwrap();
        assert_eq!(m.deployed, m.delivered);
        assert!(m.slots >= 300);
    }

    #[test]
    fn drain_cap_is_enforced() {
        let mut s = scenario(1.0, 2, 50, 4);
        s.stop.drain_cap = 3;
        assert!(matches!(run(&s), Err(SimError::NonTerminationCapExceeded { cap: 3, .. })));
    }
}
