//! Load-aware initial cell search and selection.
//!
//! A UE examines candidate cells one at a time. For each cell it acquires
//! synchronization (one beam-sweep cycle), measures the SNR and, if the SNR
//! clears the admission threshold, reads the broadcast load factor `β`. The
//! cell is selected as soon as the selection metric `β·log₂(1 + SNR)` reaches
//! a connection threshold `μ`. Choosing `μ` is a maximal-rate-of-return
//! stopping problem whose optimum is the root of a one-dimensional fixed-point
//! equation.
//!
//! Module map:
//!
//! - [`model`]: system constants, channel/load models and the per-cell samplers.
//! - [`analytic`]: closed-form period durations, the binary-metric optimum,
//!   stopped-process laws and the ordinary-stopping value function.
//! - [`distribution`] and [`solver`]: the empirical reward distribution and the
//!   bisection / fixed-point-iteration solvers for the maximum throughput.
//! - [`sim`]: Monte Carlo simulation of full communication periods.
//! - [`twotier`]: the macro/micro load-balancing experiment and the comparison
//!   of scan strategies.
//! - [`stats`]: goodness-of-fit helpers used to validate simulated laws.

pub mod analytic;
pub mod distribution;
mod error;
pub mod model;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod stats;
pub mod twotier;

pub use analytic::{BinaryMetricModel, GeometricLaw, StoppedValueCdf};
pub use distribution::MetricDistribution;
pub use error::{Error, Result};
pub use model::{ActiveUeCount, CellObservation, ChannelModel, LoadModel, SystemParams};
pub use rng::RngStream;
pub use sim::{PeriodOutcome, SweepPoint, SweepResult, ThroughputEstimate};
pub use solver::{SolverSettings, StoppingSolution};
