//! Line-delimited event records.

use serde::Serialize;

use crate::grid::{Cell, ZoneKey};
use crate::rules::TransitionTag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventTag {
    Deploy,
    Upstream,
    Outward,
    InwardDiag,
    OutwardDiag,
    EnterService,
    Descend,
    /// Lateral exit onto the outward neighbour's β path.
    Overflow,
    Deliver,
    /// Simultaneous service and lateral arrival at a node.
    Rule6,
    /// Entry taken because no outward move existed.
    Rule7Forced,
    Conflict,
    ExogenousConflict,
}

impl From<TransitionTag> for EventTag {
    fn from(t: TransitionTag) -> Self {
        match t {
            TransitionTag::Upstream | TransitionTag::HoldExogenous => EventTag::Upstream,
            TransitionTag::Outward => EventTag::Outward,
            TransitionTag::InwardDiag => EventTag::InwardDiag,
            TransitionTag::OutwardDiag => EventTag::OutwardDiag,
            TransitionTag::EnterService => EventTag::EnterService,
            TransitionTag::Descend => EventTag::Descend,
        }
    }
}

/// One record; `cell` is in world coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub slot: u64,
    pub uas: u64,
    pub cell: Cell,
    pub tag: EventTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zone: Option<ZoneKey>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<ZoneKey>,
}

/// Serialize events as JSON lines.
pub fn write_jsonl<W: std::io::Write>(events: &[Event], mut w: W) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
