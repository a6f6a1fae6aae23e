//! Procedurally generated planar navigation environments and the tooling to
//! measure how hard they are to drive through.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`grid`]: occupancy rasters plus neighbor counting, ray casting and an
//!   exact Euclidean distance transform.
//! * [`envgen`]: cellular-automaton obstacle fields.
//! * [`cspace`]: footprint inflation into a configuration space.
//! * [`planner`]: edge endpoint selection, flood-fill connectivity and A*.
//! * [`metrics`]: the five geometric difficulty metrics and z-normalization.
//! * [`sim`]: a kinematic differential-drive simulator with a sampling
//!   (dynamic window) local planner that produces traversal-time labels.
//! * [`model`]: a small multilayer perceptron regressing traversal time from
//!   the normalized metrics.
//! * [`dataset`]: the full sweep, export formats, benchmarking and ranking.

pub mod cspace;
pub mod dataset;
pub mod envgen;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod model;
pub mod planner;
pub mod seed;
pub mod sim;
pub mod stats;

pub use cspace::RobotFootprint;
pub use envgen::AutomatonParams;
pub use error::{Error, Result};
pub use grid::{Cell, OccupancyGrid, Ray};
pub use metrics::{MetricStats, MetricVector};
pub use model::{LabeledExample, MlpModel};
pub use planner::Path;
pub use sim::{PlannerConfig, RobotState, TrialResult};

