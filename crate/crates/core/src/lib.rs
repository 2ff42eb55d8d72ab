//! Digital-twin-assisted resource demand prediction for multicast
//! short-video streaming.
//!
//! The pipeline per reservation interval: telemetry lands in per-user
//! digital twins ([`udt`]), a convolutional encoder compresses each twin
//! into a feature vector ([`encoder`]), a DDQN picks the group count and
//! K-means++ forms multicast groups ([`grouping`]), swipe statistics and
//! recommendations are abstracted per group ([`abstraction`]), and radio and
//! transcoding demand are predicted per group ([`predictor`]). [`sim`]
//! generates the ground truth the predictions are scored against.

pub mod abstraction;
pub mod config;
pub mod encoder;
pub mod exec;
pub mod experiment;
pub mod grouping;
pub mod predictor;
pub mod sim;
pub mod udt;

pub use config::{load_config, ConfigError, ScenarioConfig};
pub use exec::Execution;
pub use experiment::{run_experiment, ExperimentError, RunOutput, RunSummary};
pub use sim::{IntervalReport, Mode, SimError, World};
pub use udt::{AttributeKind, Sample, UdtStore, UserDigitalTwin};
