//! Multi-task principal-agent model of evaluation-driven effort distortion.
//!
//! An agent splits a finite effort budget across `N` quality dimensions. Only
//! the first `K` are evaluated, and the agent weighs the evaluator's reward
//! against the principal's true objective with an alignment gap `lambda`. The
//! crate solves first-best and agent equilibria, measures the resulting
//! distortion, sweeps coverage as the tool count grows, explores strategic
//! degradation of the evaluator, and checks revealed-preference consistency
//! of observed allocations.
//!
//! ```
//! use distortion::{analysis, model::{ProductionFunction, Scenario}};
//!
//! let s = Scenario::uniform(vec![1.0, 1.0], 1, vec![1.0], 0.5, 1.0, ProductionFunction::sqrt())?;
//! let loss = analysis::alignment_loss(&s)?;
//! assert!((loss.loss - 0.0725728).abs() < 1e-6);
//! # Ok::<(), distortion::Error>(())
//! ```

pub mod amplification;
pub mod analysis;
pub mod campbell;
pub mod error;
pub mod garp;
pub mod io;
pub mod model;
pub mod sampling;
pub mod solver;

pub use error::{Error, Result, Violation, ViolationKind};
pub use model::{Allocation, ProductionFunction, Scenario, ScenarioSpec};
