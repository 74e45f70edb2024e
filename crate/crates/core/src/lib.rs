//! Simulation and limit analysis for networks of reciprocating agents.
//!
//! Each agent repeatedly acts on its neighbours, mixing the neighbour's last
//! action towards it, the average action it received from its whole
//! neighbourhood, and an anchor: its own kindness (`Fixed` attitude) or its
//! own previous action (`Floating` attitude).
//!
//! * [`model`]: agents, graphs, schedules, action vectors
//! * [`dynamics`]: the step map, trajectories, convergence classification
//! * [`spectral`]: the matrix form of a step, spectral radius, fixed points
//! * [`limits`]: closed-form limits and the optimal-coefficient rule
//! * [`analysis`]: parameter sweeps and property suites over trajectories
//! * [`cli`]: scenario files and the command-line workflows

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod limits;
pub mod model;
pub mod spectral;

pub use dynamics::{simulate, step, Classification, SimulationOptions, Trajectory};
pub use limits::{scenario_limit, LimitResult};
pub use model::{
    ActionVector, ActivationSchedule, AgentSpec, Attitude, InteractionGraph, Scenario, ScheduleKind,
};
