//! Unbiased Monte Carlo for path-dependent SDEs whose payoff depends on the
//! terminal state and an averaging functional `I_T = ∫ X_s dA_s`.
//!
//! Paths are simulated on a random renewal grid; the frozen-coefficient
//! scheme is corrected by products of Malliavin-type weights, so the
//! estimator has no discretisation bias.
//!
//! ```
//! use ubsim::{AveragingWeight, BachelierParams, Method, Problem, StepDistribution};
//!
//! let p = BachelierParams::new(0.05, 100.0, 0.05, 100.0, 1.0);
//! let problem = Problem {
//!     model: ubsim::model::bachelier_model(&p).unwrap(),
//!     weight: AveragingWeight::linear(),
//!     dist: StepDistribution::power_law(0.35, 1.0).unwrap(),
//! };
//! let stats = problem.simulate(Method::UnbiasedConstVol, 20_000, 42, 1).unwrap();
//! assert!((stats.mean - 2.718).abs() < 5.0 * stats.stderr().unwrap());
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod model;
pub mod path;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod steps;
pub mod tables;

pub use averaging::{AveragingMoments, AveragingWeight};
pub use error::{Error, Result};
pub use estimator::{EstimatorSample, IntegralRule};
pub use model::{BachelierParams, LocalVolParams, LocalVolVariant, Regularity, SdeModel};
pub use path::{PathRecord, TimeGrid};
pub use runner::{run, Method, Problem, RunConfig, RunOutput};
pub use stats::RunStats;
pub use steps::StepDistribution;
