//! Zone grid, traffic rules and a slotted simulator for congestion-aware
//! rerouting of dense UAS traffic along a nominal segment.

pub mod draws;
pub mod grid;
pub mod rules;
pub mod scenario;
pub mod sim;

pub use grid::{build_grid, Cell, DesignParams, Grid, GridConfig, GridError, PathKind, Side, ZoneKey};
pub use rules::{Motion, RuleError, TransitionCommand, TransitionTag, UasState};
pub use scenario::{Scenario, ScenarioError};
pub use sim::{run, Metrics, SimError, Simulation};
