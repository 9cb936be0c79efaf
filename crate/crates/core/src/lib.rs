//! Online wrist-angle estimation from a strain-sensing wristband.
//!
//! A random-feature network (extreme learning machine) maps the divider
//! voltages of the band's strain sensors to wrist angles. Its hidden-node
//! count is chosen by particle swarm search on a short calibration window,
//! after which the output weights are trained online, chunk by chunk, against
//! IMU ground truth. Once training stops, angles are estimated from the strain
//! sensors alone.
//!
//! A synthetic sensor and motion simulator produces replay streams in the
//! same line format the hardware would.

pub mod acquisition;
pub mod alignment;
pub mod elm;
pub mod error;
pub mod evaluation;
pub mod oselm;
pub mod pso;
pub mod seed;
pub mod simulator;

pub use acquisition::{CircuitConfig, ImuFrame, StrainFrame};
pub use alignment::{align_streams, AlignQueue, AlignedSample};
pub use elm::{batch_fit, load_model, save_model, Activation, ElmModel, HiddenParams, OutputWeights};
pub use error::{Error, Result};
pub use evaluation::{mean_error, r_squared, EvalPoint, EvalReport};
pub use oselm::{run_online, Estimate, OnlineConfig, OnlineRun, OselmState};
pub use pso::{pso_search, PsoConfig, PsoOutcome};
pub use simulator::{emit_streams, ScenarioConfig, SensorResponseModel, StreamTiming, TrajectoryConfig};
