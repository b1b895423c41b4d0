//! Sequential change detection against covert adversaries.
//!
//! The crate pairs Page's CuSum and Wald's SPRT with the closed-form
//! asymptotics that describe how long a detector takes to notice a change
//! whose post-change law drifts toward the pre-change law as the false-alarm
//! budget `gamma` grows. Every closed form has a simulation counterpart in
//! [`montecarlo`] and [`calibration`], so the asymptotics can be checked at
//! desk scale.
//!
//! Module map:
//!
//! - [`special`]: `erf`, both real Lambert W branches, the mapping `G(y)`.
//! - [`models`]: Gaussian and exponential change models, KL divergences,
//!   LLR sampling and LLR densities, `gamma`-indexed adversary schedules.
//! - [`detectors`]: CuSum and SPRT state machines.
//! - [`asymptotics`]: Wald, Khan and Lorden approximations, `h*(gamma)`,
//!   the three-regime `n(gamma)` and total damage.
//! - [`overshoot`]: closed-form bounds on conditional LLR overshoots.
//! - [`montecarlo`]: reproducible parallel estimators.
//! - [`calibration`]: Monte Carlo threshold calibration.
//! - [`experiment`]: JSON experiment specs and the CSV studies behind the
//!   `covert-qcd` binary.

pub mod asymptotics;
pub mod calibration;
pub mod detectors;
pub mod error;
pub mod experiment;
pub mod models;
pub mod montecarlo;
pub mod overshoot;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
