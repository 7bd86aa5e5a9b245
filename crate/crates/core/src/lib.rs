//! Structured-grid simulator for a forager-scrounger-nutrient taxis system
//! with logistic scrounger growth, plus the functionals and checks used to
//! audit its a-priori estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod grid;
pub mod model;
pub mod par;
pub mod presets;
pub mod stepper;
pub mod weakform;

pub use diagnostics::{DiagnosticsError, DiagnosticsRecord};
pub use grid::{FluxField, GridError, GridSpec, ScalarField};
pub use model::{InitialData, ModelConfig, ModelError, ResupplySpec};
pub use stepper::{run, step, SimState, SnapshotSchedule, StepError, Trajectory};
