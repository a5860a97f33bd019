//! Per-UAS decision logic: look-ahead predictions, congestion views and the
//! rerouting rules applied at each zone's lateral path.

use serde::Serialize;
use thiserror::Error;

use crate::draws::{DrawKind, DrawSource};
use crate::grid::{lateral_j, Cell, Grid, PathKind, Side, ZoneKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("empty-occupant-set")]
    EmptyOccupantSet,
    #[error("invoked-without-conflict: node of {0} is not shared by a service and a lateral arrival")]
    InvokedWithoutConflict(ZoneKey),
    #[error("UAS {uas} in {zone} has no lawful move (upstream and outward both blocked)")]
    Trapped { uas: u64, zone: ZoneKey },
    #[error("node of {zone} holds an unresolvable set of {count} UAS")]
    NodeOverload { zone: ZoneKey, count: usize },
    #[error("UAS {0} is not on a lateral path")]
    NotLateral(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Managed,
    Exogenous,
}

/// An upstream or diagonal leg of exactly `S` transitions ending at a node.
///
/// The first `diag` transitions shift `dx` laterally; the rest are straight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ServiceLeg {
    pub origin: ZoneKey,
    pub target: ZoneKey,
    pub kind: PathKind,
    pub start: Cell,
    pub dx: i32,
    pub diag: u32,
    pub age: u32,
    /// Entered while `Z_UP` actually held `M` or more predictions.
    pub forced: bool,
}

impl ServiceLeg {
    /// Position `t` transitions after the start; continues straight past the end.
    pub fn cell_at(&self, t: u32) -> Cell {
        self.start.offset(self.dx * t.min(self.diag) as i32, t as i32)
    }

    fn tag_at(&self, t: u32) -> TransitionTag {
        if t > self.diag || self.dx == 0 {
            TransitionTag::Upstream
        } else if self.origin.stream != 0 && self.dx == self.origin.outward_sign() {
            TransitionTag::OutwardDiag
        } else {
            TransitionTag::InwardDiag
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Motion {
    /// On the β→γ path of `zone` (the node included).
    Lateral { zone: ZoneKey, queue_age: u32, from_service: bool },
    Service(ServiceLeg),
    Exogenous { dx: i32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct UasState {
    pub id: u64,
    pub cell: Cell,
    pub motion: Motion,
}

impl UasState {
    pub fn origin(&self) -> Origin {
        match self.motion {
            Motion::Exogenous { .. } => Origin::Exogenous,
            _ => Origin::Managed,
        }
    }

    pub fn zone(&self, grid: &Grid) -> ZoneKey {
        match self.motion {
            Motion::Lateral { zone, .. } => zone,
            _ => grid.zone_of(self.cell),
        }
    }

    /// Relative position on the lateral path, if on one.
    pub fn j(&self, grid: &Grid) -> Option<u32> {
        match self.motion {
            Motion::Lateral { zone, .. } => Some(lateral_j(zone, self.cell.x - grid.node(zone).x, grid.l())),
            _ => None,
        }
    }

    pub fn psi(&self, grid: &Grid) -> Option<i32> {
        self.j(grid).map(|j| grid.l() + 1 - j as i32)
    }

    /// Path currently followed; `None` at a node or for exogenous traffic.
    pub fn path(&self, grid: &Grid) -> Option<PathKind> {
        match self.motion {
            Motion::Service(leg) => Some(leg.kind),
            Motion::Lateral { zone, .. } => {
                let off = self.cell.x - grid.node(zone).x;
                if off == 0 {
                    None
                } else if zone.stream != 0 && off.signum() != zone.outward_sign() {
                    Some(PathKind::Beta)
                } else {
                    Side::from_sign(off).map(PathKind::Gamma)
                }
            }
            Motion::Exogenous { .. } => None,
        }
    }

    fn at_node(&self, grid: &Grid) -> bool {
        matches!(self.motion, Motion::Lateral { zone, .. } if self.cell == grid.node(zone))
    }

    fn is_service_arrival(&self, grid: &Grid) -> bool {
        matches!(self.motion, Motion::Lateral { from_service: true, .. }) && self.at_node(grid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub uas_id: u64,
    pub cell: Cell,
}

/// `L`-slot look-ahead positions for every UAS whose next `L` moves are known.
pub fn predict_positions(grid: &Grid, world: &[UasState]) -> Vec<Prediction> {
    let l = grid.l();
    world
        .iter()
        .filter_map(|u| {
            let cell = match u.motion {
                Motion::Service(leg) => Some(leg.cell_at(leg.age + l as u32)),
                Motion::Exogenous { dx } => Some(u.cell.offset(l * dx, 0)),
                Motion::Lateral { zone, .. } => {
                    let off = u.cell.x - grid.node(zone).x;
                    let dir = if zone.stream != 0 { zone.outward_sign() } else { off.signum() };
                    (dir != 0 && grid.blocked(zone.up())).then(|| u.cell.offset(l * dir, 0))
                }
            };
            cell.map(|cell| Prediction { uas_id: u.id, cell })
        })
        .collect()
}

/// Prediction counts per zone, covering the destination band above the grid.
#[derive(Clone, Debug)]
pub struct ZoneCounts {
    x_e: i32,
    levels: i32,
    counts: Vec<u32>,
}

impl ZoneCounts {
    pub fn new(grid: &Grid) -> Self {
        let levels = grid.y_e() + 1;
        ZoneCounts { x_e: grid.x_e(), levels, counts: vec![0; ((2 * grid.x_e() + 1) * levels) as usize] }
    }

    pub fn from_predictions(grid: &Grid, preds: &[Prediction]) -> Self {
        let mut c = ZoneCounts::new(grid);
        for p in preds {
            c.add(grid.zone_of(p.cell), 1);
        }
        c
    }

    fn idx(&self, k: ZoneKey) -> Option<usize> {
        (k.level >= 1 && k.level <= self.levels && k.stream.abs() <= self.x_e)
            .then(|| ((k.level - 1) * (2 * self.x_e + 1) + k.stream + self.x_e) as usize)
    }

    pub fn add(&mut self, k: ZoneKey, n: u32) {
        if let Some(i) = self.idx(k) {
            self.counts[i] += n;
        }
    }

    pub fn get(&self, k: ZoneKey) -> u32 {
        self.idx(k).map_or(0, |i| self.counts[i])
    }
}

/// Congestion of `z` from predictions alone, with no-fly zones congested.
pub fn zone_congested(grid: &Grid, counts: &ZoneCounts, z: ZoneKey, m: u32) -> bool {
    grid.blocked(z) || counts.get(z) >= m
}

/// True when no lateral move out of `z` is possible.
pub fn outward_blocked(grid: &Grid, z: ZoneKey) -> bool {
    if z.stream == 0 {
        grid.blocked(z.outward(Side::Left)) && grid.blocked(z.outward(Side::Right))
    } else {
        grid.blocked(z.outward(Side::Right))
    }
}

/// `Z_UP` as perceived from `z`: uncongested whenever `Z_ON` is closed.
pub fn perceived_up_congested(grid: &Grid, counts: &ZoneCounts, z: ZoneKey, m_up: u32) -> bool {
    !outward_blocked(grid, z) && zone_congested(grid, counts, z.up(), m_up)
}

/// Descend test for a UAS arriving at the node of `z`.
pub fn descend_condition(
    grid: &Grid,
    counts: &ZoneCounts,
    inward_occupied: bool,
    z: ZoneKey,
    m_id: u32,
) -> bool {
    let (Some(zin), Some(zid)) = (z.inward(), z.inward_diag()) else {
        return false;
    };
    !grid.blocked(zin) && !inward_occupied && !zone_congested(grid, counts, zid, m_id)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub struct CongestionView {
    pub up_congested: bool,
    pub id_congested: bool,
    /// Descend permitted this slot (Rule 9 already applied).
    pub descend_ok: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionTag {
    Upstream,
    Outward,
    InwardDiag,
    OutwardDiag,
    EnterService,
    Descend,
    HoldExogenous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TransitionCommand {
    pub uas_id: u64,
    pub target: Cell,
    pub tag: TransitionTag,
    pub next: Motion,
}

/// Rule 4 route of an entrant, by transition type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reroute {
    pub psi: i32,
    pub outward_diag: u32,
    pub inward_diag: u32,
    pub upstream: u32,
}

impl Reroute {
    pub fn from_psi(psi: i32, l: u32) -> Self {
        let s = 2 * l + 1;
        let n = psi.unsigned_abs();
        Reroute {
            psi,
            outward_diag: if psi > 0 { n } else { 0 },
            inward_diag: if psi < 0 { n } else { 0 },
            upstream: s - n,
        }
    }

    pub fn len(&self) -> u32 {
        self.outward_diag + self.inward_diag + self.upstream
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transitions(&self) -> Vec<TransitionTag> {
        let diag = if self.psi > 0 { TransitionTag::OutwardDiag } else { TransitionTag::InwardDiag };
        std::iter::repeat_n(diag, (self.outward_diag + self.inward_diag) as usize)
            .chain(std::iter::repeat_n(TransitionTag::Upstream, self.upstream as usize))
            .collect()
    }
}

/// Highest-preference occupant (smallest `j`, then smallest id) and its route.
pub fn select_entrant(occupants: &[(u64, u32)], l: u32) -> Result<(u64, Reroute), RuleError> {
    let &(id, j) = occupants.iter().min_by_key(|&&(id, j)| (j, id)).ok_or(RuleError::EmptyOccupantSet)?;
    Ok((id, Reroute::from_psi(l as i32 + 1 - j as i32, l)))
}

/// Service leg for a UAS entering from lateral position `cell` of `z`.
pub fn entry_leg(grid: &Grid, z: ZoneKey, cell: Cell, forced: bool) -> ServiceLeg {
    let off = cell.x - grid.node(z).x;
    let n = off.unsigned_abs();
    let kind = if off == 0 {
        PathKind::Alpha
    } else if z.stream != 0 && off.signum() != z.outward_sign() {
        PathKind::BetaHat(grid.l() as u32 + 1 - n)
    } else {
        PathKind::GammaHat(n, Side::from_sign(off).expect("nonzero offset"))
    };
    ServiceLeg { origin: z, target: z.up(), kind, start: cell, dx: -off.signum(), diag: n, age: 0, forced }
}

fn descend_leg(grid: &Grid, z: ZoneKey) -> ServiceLeg {
    ServiceLeg {
        origin: z,
        target: z.inward_diag().expect("descend from Stream(X)"),
        kind: PathKind::DeltaHat,
        start: grid.node(z),
        dx: -z.outward_sign(),
        diag: grid.s() as u32,
        age: 0,
        forced: false,
    }
}

fn advance(grid: &Grid, id: u64, mut leg: ServiceLeg, tag: Option<TransitionTag>) -> TransitionCommand {
    leg.age += 1;
    let target = leg.cell_at(leg.age);
    let tag = tag.unwrap_or_else(|| leg.tag_at(leg.age));
    let next = if leg.age as i32 == grid.s() {
        Motion::Lateral { zone: leg.target, queue_age: 0, from_service: true }
    } else {
        Motion::Service(leg)
    };
    TransitionCommand { uas_id: id, target, tag, next }
}

/// True when `step_decision` would consume a branch draw for this UAS.
pub fn needs_branch_draw(grid: &Grid, uas: &UasState, view: &CongestionView) -> bool {
    match uas.motion {
        Motion::Lateral { zone, .. } => {
            zone.stream == 0
                && uas.at_node(grid)
                && view.up_congested
                && !grid.blocked(zone.outward(Side::Left))
                && !grid.blocked(zone.outward(Side::Right))
        }
        _ => false,
    }
}

/// The move of one UAS for the next slot given its view of the neighbourhood.
///
/// A lateral UAS enters service whenever `up_congested` is false, so callers
/// resolving a whole lateral path hand non-entrants a congested view.
pub fn step_decision(
    grid: &Grid,
    uas: &UasState,
    view: &CongestionView,
    draw: f64,
) -> Result<TransitionCommand, RuleError> {
    let id = uas.id;
    match uas.motion {
        Motion::Exogenous { dx } => Ok(TransitionCommand {
            uas_id: id,
            target: uas.cell.offset(dx, 0),
            tag: TransitionTag::HoldExogenous,
            next: uas.motion,
        }),
        Motion::Service(leg) => Ok(advance(grid, id, leg, None)),
        Motion::Lateral { zone, queue_age, from_service } => {
            let node = grid.node(zone);
            let off = uas.cell.x - node.x;
            if from_service && off == 0 && zone.stream != 0 && view.descend_ok {
                return Ok(advance(grid, id, descend_leg(grid, zone), Some(TransitionTag::Descend)));
            }
            if !view.up_congested {
                if grid.blocked(zone.up()) {
                    return Err(RuleError::Trapped { uas: id, zone });
                }
                let leg = entry_leg(grid, zone, uas.cell, false);
                return Ok(advance(grid, id, leg, Some(TransitionTag::EnterService)));
            }
            let dir = if zone.stream != 0 {
                zone.outward_sign()
            } else if off != 0 {
                off.signum()
            } else {
                let left = !grid.blocked(zone.outward(Side::Left));
                let right = !grid.blocked(zone.outward(Side::Right));
                match (left, right) {
                    (true, true) => {
                        if draw < grid.params().eta {
                            1
                        } else {
                            -1
                        }
                    }
                    (true, false) => -1,
                    (false, true) => 1,
                    (false, false) => return Err(RuleError::Trapped { uas: id, zone }),
                }
            };
            let target = uas.cell.offset(dir, 0);
            let next = if off * dir == grid.l() {
                let on = zone.outward(Side::from_sign(dir).expect("nonzero"));
                if grid.blocked(on) {
                    return Err(RuleError::Trapped { uas: id, zone });
                }
                Motion::Lateral { zone: on, queue_age: 0, from_service: false }
            } else if off + dir == 0 {
                Motion::Lateral { zone, queue_age: 0, from_service: false }
            } else {
                Motion::Lateral { zone, queue_age: queue_age + 1, from_service: false }
            };
            Ok(TransitionCommand { uas_id: id, target, tag: TransitionTag::Outward, next })
        }
    }
}

/// Commands for the two UAS sharing a node: the lateral arrival continues
/// upstream, the service arrival descends or yields outward.
pub fn resolve_node_conflict(
    grid: &Grid,
    ua_beta: &UasState,
    ua_up: &UasState,
    descend_ok: bool,
) -> Result<(TransitionCommand, TransitionCommand), RuleError> {
    let zone = ua_up.zone(grid);
    if !(ua_up.is_service_arrival(grid)
        && ua_beta.at_node(grid)
        && !ua_beta.is_service_arrival(grid)
        && ua_beta.zone(grid) == zone)
    {
        return Err(RuleError::InvokedWithoutConflict(zone));
    }
    let go = CongestionView { up_congested: false, ..Default::default() };
    let yield_view = CongestionView { up_congested: true, id_congested: !descend_ok, descend_ok };
    Ok((step_decision(grid, ua_beta, &go, 0.0)?, step_decision(grid, ua_up, &yield_view, 0.0)?))
}

/// Inputs for resolving one zone's lateral path.
#[derive(Clone, Copy, Debug)]
pub struct ZoneContext {
    pub up_congested: bool,
    /// Actual (not perceived) congestion of `Z_UP`, used to mark forced entries.
    pub up_congested_actual: bool,
    /// Descend permitted for a service arrival at the node.
    pub descend_ok: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ZoneDecision {
    pub commands: Vec<TransitionCommand>,
    pub rule6: bool,
    /// UAS entering only because the lateral path could not be left outward.
    pub forced: Vec<u64>,
}

/// Resolve every occupant of one zone's lateral path. `occupants` must be
/// sorted by id; branch draws are taken in that order.
pub fn decide_zone(
    grid: &Grid,
    zone: ZoneKey,
    occupants: &[UasState],
    ctx: &ZoneContext,
    draws: &mut dyn DrawSource,
) -> Result<ZoneDecision, RuleError> {
    let mut out = ZoneDecision::default();
    if occupants.is_empty() {
        return Ok(out);
    }
    let l = grid.l();
    let node_idx: Vec<usize> = (0..occupants.len()).filter(|&i| occupants[i].at_node(grid)).collect();
    let service_arrival = node_idx.iter().copied().find(|&i| occupants[i].is_service_arrival(grid));
    let lateral_arrival = node_idx.iter().copied().find(|&i| !occupants[i].is_service_arrival(grid));
    if node_idx.len() > 2 || (node_idx.len() == 2 && (service_arrival.is_none() || lateral_arrival.is_none())) {
        return Err(RuleError::NodeOverload { zone, count: node_idx.len() });
    }
    // A UAS on the last γ cell with nowhere to go outward must leave upstream.
    let stuck: Option<usize> = (0..occupants.len()).find(|&i| {
        let u = &occupants[i];
        let off = u.cell.x - grid.node(zone).x;
        let dir = if zone.stream != 0 { zone.outward_sign() } else { off.signum() };
        off != 0 && off * dir == l && grid.blocked(zone.outward(Side::from_sign(dir).expect("nonzero")))
    });

    let congested = CongestionView { up_congested: true, id_congested: true, descend_ok: false };
    let enter = CongestionView { up_congested: false, id_congested: true, descend_ok: false };
    let mut views = vec![congested; occupants.len()];
    let mut forced = vec![false; occupants.len()];

    match (service_arrival, lateral_arrival) {
        (Some(sa), Some(la)) => {
            if stuck.is_some() {
                return Err(RuleError::NodeOverload { zone, count: 3 });
            }
            out.rule6 = true;
            views[la] = enter;
            forced[la] = ctx.up_congested_actual;
            views[sa] = CongestionView { up_congested: true, id_congested: !ctx.descend_ok, descend_ok: ctx.descend_ok };
        }
        (Some(sa), None) if ctx.descend_ok && zone.stream != 0 => {
            views[sa] = CongestionView { up_congested: true, id_congested: false, descend_ok: true };
            if let Some(st) = stuck {
                views[st] = enter;
                forced[st] = ctx.up_congested_actual;
            }
        }
        _ if !ctx.up_congested => {
            let winner = match stuck {
                Some(st) => st,
                None => {
                    let occ: Vec<(u64, u32)> =
                        occupants.iter().map(|u| (u.id, u.j(grid).expect("lateral occupant"))).collect();
                    let (id, _) = select_entrant(&occ, l as u32)?;
                    occupants.iter().position(|u| u.id == id).expect("winner among occupants")
                }
            };
            views[winner] = enter;
            forced[winner] = ctx.up_congested_actual;
        }
        _ => {}
    }

    for (i, u) in occupants.iter().enumerate() {
        let draw = if needs_branch_draw(grid, u, &views[i]) { draws.draw(DrawKind::Branch) } else { 0.0 };
        let mut cmd = step_decision(grid, u, &views[i], draw)?;
        if forced[i] {
            if let Motion::Service(ref mut leg) = cmd.next {
                leg.forced = true;
            }
        }
        if stuck == Some(i) && cmd.tag == TransitionTag::EnterService {
            out.forced.push(u.id);
        }
        out.commands.push(cmd);
    }
    Ok(out)
}
