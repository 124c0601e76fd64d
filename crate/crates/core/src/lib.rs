//! False data injection detection for DC-modelled transmission networks.
//!
//! Numeric code is generic over [`Scalar`]; the `f64` aliases below are what
//! the harness and the command-line tool use.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod case_io;
pub mod detect;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod powerflow;
pub mod scalar;
pub mod sced;
pub mod state_estimation;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub use case_io::{load_network, Network};
pub use detect::{AlertLevel, DetectionReport, DetectorConfig};
pub use harness::{run_experiment, ExperimentReport, ScenarioConfig, Suite};

pub type Ptdf = powerflow::Ptdf<f64>;
pub type LinearProgram = lp::LinearProgram<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type Dispatch = sced::Dispatch<f64>;
pub type MeasurementSet = state_estimation::MeasurementSet<f64>;
pub type SeResult = state_estimation::SeResult<f64>;
pub type AttackSpec = attack::AttackSpec<f64>;
pub type AttackResult = attack::AttackResult<f64>;
pub type Snapshot = detect::Snapshot<f64>;
