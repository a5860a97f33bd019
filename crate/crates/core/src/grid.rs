//! Zone grid built around a nominal segment.
//!
//! All geometry is computed in a grid-local lattice frame where the nominal
//! segment starts at the origin and runs along +y ("upstream"). Facing
//! upstream, "right" is +x. A [`Frame`] maps between this frame and world
//! cells for any axis-aligned segment.
//!
//! Zone `(X, Y)` has its node at `(X*S, (Y-1)*S + L)` and covers the
//! `S x S` block of cells centred on it, with `S = 2L + 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A lattice cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }
}

/// Stream-level index of a zone. Ordering is (level, stream), which is the
/// canonical iteration order for decisions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZoneKey {
    pub level: i32,
    pub stream: i32,
}

impl ZoneKey {
    /// Build from `(X, Y)` = (stream, level).
    pub const fn new(stream: i32, level: i32) -> Self {
        ZoneKey { level, stream }
    }

    /// +1 for streams right of the nominal segment, -1 for left, 0 on it.
    pub fn outward_sign(self) -> i32 {
        self.stream.signum()
    }

    pub fn up(self) -> ZoneKey {
        ZoneKey::new(self.stream, self.level + 1)
    }

    /// `Z_IN`; `None` for Stream(0).
    pub fn inward(self) -> Option<ZoneKey> {
        (self.stream != 0).then(|| ZoneKey::new(self.stream - self.outward_sign(), self.level))
    }

    /// `Z_ID`; `None` for Stream(0).
    pub fn inward_diag(self) -> Option<ZoneKey> {
        self.inward().map(ZoneKey::up)
    }

    /// `Z_ON`; for Stream(0) the neighbour on the given side.
    pub fn outward(self, side: Side) -> ZoneKey {
        let s = if self.stream == 0 { side.sign() } else { self.outward_sign() };
        ZoneKey::new(self.stream + s, self.level)
    }

    /// The queueing system whose servers end at this zone's node.
    pub fn down(self) -> ZoneKey {
        ZoneKey::new(self.stream, self.level - 1)
    }
}

impl std::fmt::Display for ZoneKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.stream, self.level)
    }
}

/// Lateral side, as seen facing upstream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> i32 {
        match self {
            Side::Left => -1,
            Side::Right => 1,
        }
    }

    pub fn from_sign(s: i32) -> Option<Side> {
        match s.signum() {
            -1 => Some(Side::Left),
            1 => Some(Side::Right),
            _ => None,
        }
    }

    pub fn mirror(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Paths of the heading-reference graph inside one zone.
///
/// `BetaHat(i)` starts at β cell `j = i`; `GammaHat(i, _)` starts at the
/// `i`-th γ cell counted outward from the node. The side on γ paths only
/// matters for Stream(0); elsewhere it must be the outward side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    Alpha,
    Beta,
    Gamma(Side),
    BetaHat(u32),
    GammaHat(u32, Side),
    DeltaHat,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("nominal segment must be axis-aligned and non-degenerate")]
    SegmentNotAxisAligned,
    #[error("segment-length-not-multiple-of-S: length {length} is not a multiple of S = {s}")]
    SegmentLengthNotMultipleOfS { length: i32, s: i32 },
    #[error("grid-exceeds-workspace: nominal zones do not fit inside the workspace")]
    GridExceedsWorkspace,
    #[error("segment spans {derived} levels but Y_e = {given}")]
    LevelMismatch { derived: i32, given: u32 },
    #[error("invalid design parameter: {0}")]
    InvalidParams(String),
    #[error("kind-invalid-for-stream-zero: {0:?} does not exist in Stream(0) zones")]
    KindInvalidForStreamZero(PathKind),
    #[error("{0:?} must use the outward side of zone {1}")]
    SideMismatch(PathKind, ZoneKey),
    #[error("path index {index} outside [1, {l}]")]
    PathIndexOutOfRange { index: u32, l: u32 },
    #[error("cell-not-on-lateral-path: ({x},{y}) is not on the lateral path of {zone}")]
    CellNotOnLateralPath { x: i32, y: i32, zone: ZoneKey },
    #[error("j-out-of-range: {j} not in [1, {s}]")]
    JOutOfRange { j: u32, s: u32 },
    #[error("zone {0} is not part of the grid")]
    ZoneOutsideGrid(ZoneKey),
}

/// UTM design parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    /// Look-ahead window in slots.
    pub l: u32,
    /// Predicted positions needed for a zone to count as congested.
    pub m: u32,
    /// Probability of picking the right branch at a nominal node.
    pub eta: f64,
    pub x_e: u32,
    pub y_e: u32,
    /// Cell edge in metres.
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    /// UAS safety radius in metres.
    #[serde(default = "default_safety_radius")]
    pub safety_radius: f64,
    /// Slot length in seconds.
    #[serde(default = "default_delta_t")]
    pub delta_t: f64,
}

fn default_cell_size() -> f64 {
    5.0
}
fn default_safety_radius() -> f64 {
    1.0
}
fn default_delta_t() -> f64 {
    2.5
}

impl DesignParams {
    pub fn new(l: u32, m: u32, eta: f64, x_e: u32, y_e: u32) -> Self {
        DesignParams {
            l,
            m,
            eta,
            x_e,
            y_e,
            cell_size: default_cell_size(),
            safety_radius: default_safety_radius(),
            delta_t: default_delta_t(),
        }
    }

    /// Zone edge `S = 2L + 1`.
    pub fn s(&self) -> u32 {
        2 * self.l + 1
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |m: String| Err(GridError::InvalidParams(m));
        if self.l < 1 {
            return bad("L must be at least 1".into());
        }
        if self.m < 2 || self.m > self.s() {
            return bad(format!("M = {} outside [2, S = {}]", self.m, self.s()));
        }
        if !(0.0..=1.0).contains(&self.eta) || self.eta.is_nan() {
            return bad(format!("eta = {} outside [0, 1]", self.eta));
        }
        if self.x_e < 1 || self.y_e < 1 {
            return bad("X_e and Y_e must be at least 1".into());
        }
        if !(self.delta_t > 0.0) {
            return bad("delta_t must be positive".into());
        }
        if !(self.safety_radius > 0.0) {
            return bad("safety radius must be positive".into());
        }
        let min = min_cell_edge(self.safety_radius);
        if self.cell_size < min {
            return bad(format!("cell edge {} m below minimum {:.4} m", self.cell_size, min));
        }
        Ok(())
    }
}

/// Smallest cell edge keeping neighbouring UAS peripheries disjoint.
pub fn min_cell_edge(r: f64) -> f64 {
    2.0 * 5f64.sqrt() * r
}

/// Preference of a UAS at relative position `j` on a β→γ path.
pub fn preference(j: u32, l: u32) -> Result<i32, GridError> {
    let s = 2 * l + 1;
    if j < 1 || j > s {
        return Err(GridError::JOutOfRange { j, s });
    }
    Ok(l as i32 + 1 - j as i32)
}

/// Inclusive rectangle of cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Cell,
    pub max: Cell,
}

impl Rect {
    pub fn new(a: Cell, b: Cell) -> Self {
        Rect {
            min: Cell::new(a.x.min(b.x), a.y.min(b.y)),
            max: Cell::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.min.x <= o.min.x && self.min.y <= o.min.y && o.max.x <= self.max.x && o.max.y <= self.max.y
    }
}

/// Direction of the nominal segment in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    PlusX,
    PlusY,
    MinusX,
    MinusY,
}

/// Rigid transform between world cells and the grid-local frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub origin: Cell,
    pub heading: Heading,
}

impl Frame {
    pub fn to_world(&self, c: Cell) -> Cell {
        let (x, y) = match self.heading {
            Heading::PlusY => (c.x, c.y),
            Heading::PlusX => (c.y, -c.x),
            Heading::MinusY => (-c.x, -c.y),
            Heading::MinusX => (-c.y, c.x),
        };
        Cell::new(self.origin.x + x, self.origin.y + y)
    }

    pub fn to_local(&self, w: Cell) -> Cell {
        let (wx, wy) = (w.x - self.origin.x, w.y - self.origin.y);
        match self.heading {
            Heading::PlusY => Cell::new(wx, wy),
            Heading::PlusX => Cell::new(-wy, wx),
            Heading::MinusY => Cell::new(-wx, -wy),
            Heading::MinusX => Cell::new(wy, -wx),
        }
    }

    pub fn rect_to_local(&self, r: &Rect) -> Rect {
        Rect::new(self.to_local(r.min), self.to_local(r.max))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Zone {
    pub key: ZoneKey,
    /// Node cell in the grid-local frame.
    pub node: Cell,
    pub no_fly: bool,
}

/// Zone neighbourhood relevant to the rules. Absent entries lie outside the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbors {
    pub up: Option<ZoneKey>,
    pub inward: Option<ZoneKey>,
    pub inward_diag: Option<ZoneKey>,
    /// One entry for Stream(X); up to two (left, right) for Stream(0).
    pub outward: Vec<ZoneKey>,
}

#[derive(Clone, Debug)]
pub struct Grid {
    params: DesignParams,
    frame: Frame,
    zones: Vec<Zone>,
}

/// Build the zone grid for an axis-aligned segment.
pub fn build_grid(start: Cell, end: Cell, params: &DesignParams, no_fly: &[Rect]) -> Result<Grid, GridError> {
    build_grid_in(start, end, params, no_fly, None)
}

/// As [`build_grid`], clipping against an optional workspace rectangle.
/// Lateral zones reaching outside the workspace become no-fly.
pub fn build_grid_in(
    start: Cell,
    end: Cell,
    params: &DesignParams,
    no_fly: &[Rect],
    workspace: Option<Rect>,
) -> Result<Grid, GridError> {
    params.validate()?;
    let (dx, dy) = (end.x - start.x, end.y - start.y);
    let heading = match (dx.signum(), dy.signum()) {
        (0, 1) => Heading::PlusY,
        (0, -1) => Heading::MinusY,
        (1, 0) => Heading::PlusX,
        (-1, 0) => Heading::MinusX,
        _ => return Err(GridError::SegmentNotAxisAligned),
    };
    let length = dx.abs() + dy.abs();
    let s = params.s() as i32;
    if length % s != 0 {
        return Err(GridError::SegmentLengthNotMultipleOfS { length, s });
    }
    let levels = length / s;
    if levels != params.y_e as i32 {
        return Err(GridError::LevelMismatch { derived: levels, given: params.y_e });
    }
    let frame = Frame { origin: start, heading };
    let local_no_fly: Vec<Rect> = no_fly.iter().map(|r| frame.rect_to_local(r)).collect();
    let local_ws = workspace.map(|w| frame.rect_to_local(&w));

    let xe = params.x_e as i32;
    let mut zones = Vec::with_capacity(((2 * xe + 1) * levels) as usize);
    for level in 1..=levels {
        for stream in -xe..=xe {
            let key = ZoneKey::new(stream, level);
            let ext = zone_extent(key, params.l as i32);
            let mut blocked = local_no_fly.iter().any(|r| r.intersects(&ext));
            if let Some(ws) = local_ws {
                if !ws.contains_rect(&ext) {
                    if stream == 0 {
                        return Err(GridError::GridExceedsWorkspace);
                    }
                    blocked = true;
                }
            }
            zones.push(Zone { key, node: node_of(key, params.l as i32), no_fly: blocked });
        }
    }
    Ok(Grid { params: params.clone(), frame, zones })
}

fn node_of(k: ZoneKey, l: i32) -> Cell {
    let s = 2 * l + 1;
    Cell::new(k.stream * s, (k.level - 1) * s + l)
}

fn zone_extent(k: ZoneKey, l: i32) -> Rect {
    let n = node_of(k, l);
    Rect { min: n.offset(-l, -l), max: n.offset(l, l) }
}

impl Grid {
    pub fn params(&self) -> &DesignParams {
        &self.params
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn l(&self) -> i32 {
        self.params.l as i32
    }

    pub fn s(&self) -> i32 {
        self.params.s() as i32
    }

    pub fn x_e(&self) -> i32 {
        self.params.x_e as i32
    }

    pub fn y_e(&self) -> i32 {
        self.params.y_e as i32
    }

    /// Zones in (level, stream) order.
    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn index_of(&self, k: ZoneKey) -> Option<usize> {
        let xe = self.x_e();
        if k.level < 1 || k.level > self.y_e() || k.stream.abs() > xe {
            return None;
        }
        Some(((k.level - 1) * (2 * xe + 1) + k.stream + xe) as usize)
    }

    pub fn zone(&self, k: ZoneKey) -> Option<&Zone> {
        self.index_of(k).map(|i| &self.zones[i])
    }

    pub fn contains(&self, k: ZoneKey) -> bool {
        self.index_of(k).is_some()
    }

    /// True when traffic may not enter `k`: no-fly zones, and anything
    /// laterally or downstream outside the grid. The band above the last
    /// level is the destination and is never blocked.
    pub fn blocked(&self, k: ZoneKey) -> bool {
        if k.level > self.y_e() && k.stream.abs() <= self.x_e() {
            return false;
        }
        self.zone(k).is_none_or(|z| z.no_fly)
    }

    /// Node cell of any zone key, including keys outside the grid.
    pub fn node(&self, k: ZoneKey) -> Cell {
        node_of(k, self.l())
    }

    /// Cells covered by a zone.
    pub fn extent(&self, k: ZoneKey) -> Rect {
        zone_extent(k, self.l())
    }

    /// Zone key of the block containing a local cell.
    pub fn zone_of(&self, c: Cell) -> ZoneKey {
        let (l, s) = (self.l(), self.s());
        ZoneKey::new((c.x + l).div_euclid(s), c.y.div_euclid(s) + 1)
    }

    /// Where managed UAS are deployed: the node of zone (0, 1).
    pub fn source(&self) -> Cell {
        self.node(ZoneKey::new(0, 1))
    }

    pub fn neighbors(&self, k: ZoneKey) -> Result<Neighbors, GridError> {
        if !self.contains(k) {
            return Err(GridError::ZoneOutsideGrid(k));
        }
        let keep = |z: ZoneKey| self.contains(z).then_some(z);
        let outward = if k.stream == 0 {
            [Side::Left, Side::Right].iter().filter_map(|&s| keep(k.outward(s))).collect()
        } else {
            keep(k.outward(Side::Right)).into_iter().collect()
        };
        Ok(Neighbors {
            up: keep(k.up()),
            inward: k.inward().and_then(keep),
            inward_diag: k.inward_diag().and_then(keep),
            outward,
        })
    }

    /// Lateral direction (+1 or -1 in x) of a γ path.
    fn gamma_dir(&self, k: ZoneKey, kind: PathKind, side: Side) -> Result<i32, GridError> {
        if k.stream == 0 || side.sign() == k.outward_sign() {
            Ok(side.sign())
        } else {
            Err(GridError::SideMismatch(kind, k))
        }
    }

    fn check_index(&self, i: u32) -> Result<(), GridError> {
        let l = self.params.l;
        if i < 1 || i > l {
            return Err(GridError::PathIndexOutOfRange { index: i, l });
        }
        Ok(())
    }

    /// Cells visited along a path, excluding its starting cell.
    ///
    /// `Alpha` and `DeltaHat` give `S` cells ending at the target node.
    /// `Beta` and `Gamma` list their `L` lateral cells in travel order.
    /// `BetaHat` and `GammaHat` give the diagonal leg up to the α line.
    pub fn path_cells(&self, k: ZoneKey, kind: PathKind) -> Result<Vec<Cell>, GridError> {
        let (l, s) = (self.l(), self.s());
        let node = self.node(k);
        let out = k.outward_sign();
        if k.stream == 0 && matches!(kind, PathKind::Beta | PathKind::BetaHat(_) | PathKind::DeltaHat) {
            return Err(GridError::KindInvalidForStreamZero(kind));
        }
        let cells = match kind {
            PathKind::Alpha => (1..=s).map(|t| node.offset(0, t)).collect(),
            PathKind::Beta => (1..=l).map(|j| node.offset((j - l - 1) * out, 0)).collect(),
            PathKind::Gamma(side) => {
                let d = self.gamma_dir(k, kind, side)?;
                (1..=l).map(|t| node.offset(t * d, 0)).collect()
            }
            PathKind::BetaHat(i) => {
                self.check_index(i)?;
                let psi = l + 1 - i as i32;
                let start = node.offset(-psi * out, 0);
                (1..=psi).map(|t| start.offset(t * out, t)).collect()
            }
            PathKind::GammaHat(i, side) => {
                self.check_index(i)?;
                let d = self.gamma_dir(k, kind, side)?;
                let i = i as i32;
                let start = node.offset(i * d, 0);
                (1..=i).map(|t| start.offset(-t * d, t)).collect()
            }
            PathKind::DeltaHat => (1..=s).map(|t| node.offset(-t * out, t)).collect(),
        };
        Ok(cells)
    }

    /// Relative position `j` of a local cell on the β→γ path of `k`.
    pub fn relative_position(&self, k: ZoneKey, c: Cell) -> Result<u32, GridError> {
        let node = self.node(k);
        let l = self.l();
        let off = c.x - node.x;
        if c.y != node.y || off.abs() > l {
            return Err(GridError::CellNotOnLateralPath { x: c.x, y: c.y, zone: k });
        }
        Ok(lateral_j(k, off, l))
    }
}

/// Relative position from a signed lateral offset to the node.
pub fn lateral_j(k: ZoneKey, offset: i32, l: i32) -> u32 {
    let o = if k.stream == 0 { offset.abs() } else { offset * k.outward_sign() };
    (o + l + 1) as u32
}

/// Serializable grid description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub start: Cell,
    pub end: Cell,
    #[serde(flatten)]
    pub params: DesignParams,
    #[serde(default)]
    pub no_fly: Vec<Rect>,
    #[serde(default)]
    pub workspace: Option<Rect>,
}

impl GridConfig {
    /// The straight segment along +y used throughout the reference scenarios.
    pub fn nominal(params: DesignParams) -> Self {
        let len = (params.s() * params.y_e) as i32;
        GridConfig { start: Cell::new(0, 0), end: Cell::new(0, len), params, no_fly: Vec::new(), workspace: None }
    }

    pub fn build(&self) -> Result<Grid, GridError> {
        build_grid_in(self.start, self.end, &self.params, &self.no_fly, self.workspace)
    }
}
