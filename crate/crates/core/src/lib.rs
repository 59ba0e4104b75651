//! Energy-aware flow handover scheduling for replacing UAVs in a
//! software-defined UAV network.
//!
//! The core types are generic over [`Scalar`], so the same code runs on
//! `f32`, `f64` or exact [`Rational64`] arithmetic. The aliases below fix
//! the common choices.
//!
//! ```
//! use uav_handover::{model::reference_instance, sched, ExactInstance};
//!
//! let inst: ExactInstance = reference_instance();
//! let best = sched::exact_schedule_dp(&inst)?;
//! assert_eq!(best.energy, 46.into());
//! assert_eq!(best.schedule.order(), [3, 0, 2, 1]);
//! # Ok::<(), uav_handover::Error>(())
//! ```

pub mod error;
pub mod experiment;
pub mod io;
pub mod model;
pub mod netgen;
pub mod ordering;
pub mod scalar;
pub mod sched;

pub use num_rational::Rational64;

pub use error::{Error, Result};
pub use experiment::{run_experiment, summarize, ExperimentConfig, McmcResult, Metric, Summary};
pub use model::{compute_energy, handover_time, RuleCounts, Schedule};
pub use netgen::{generate_network, NetworkParams, UavNetwork};
pub use scalar::Scalar;
pub use sched::Method;

pub type Instance = model::ReplacementInstance<f64>;
pub type ExactInstance = model::ReplacementInstance<Rational64>;
pub type Flow = model::FlowSpec<f64>;
pub type ExactFlow = model::FlowSpec<Rational64>;
pub type Timings = model::RuleTimings<f64>;
pub type ExactTimings = model::RuleTimings<Rational64>;
pub type Energy = model::EnergyReport<f64>;
pub type ExactEnergy = model::EnergyReport<Rational64>;
pub type Solution = sched::SolverResult<f64>;
pub type ExactSolution = sched::SolverResult<Rational64>;
pub type Ilp = ordering::IlpModel<f64>;
