//! Control synthesis for the Kawahara equation on truncated unbounded
//! domains, under the integral overdetermination condition
//! `int u(t, x) w(x) dx = phi(t)`.
//!
//! The crate provides:
//!
//! * a banded implicit-explicit solver for the linear and nonlinear
//!   fifth-order equation on `[0, R]` and `[-L, R]` ([`solver`]);
//! * the observation functional, its derivative identity and the mass
//!   functional ([`observation`]);
//! * synthesis of the scalar control `f0(t)`: the affine contraction for
//!   the zero-data problem, its superposition with free evolution, and the
//!   outer fixed point handling the nonlinearity ([`control`]);
//! * the dilation symmetry and the minimal-horizon construction
//!   ([`scaling`]);
//! * discrete surrogates for the space-time restriction norms and an
//!   empirical bilinear-estimate probe ([`bourgain`]);
//! * problem files, run reports and the `kawactl` driver ([`config`],
//!   [`report`], [`run`]).
//!
//! Start with the `examples/` directory: each major capability has a
//! runnable walkthrough.

pub mod banded;
pub mod bourgain;
pub mod config;
pub mod control;
pub mod error;
pub mod grid;
pub mod interp;
pub mod io;
pub mod observation;
pub mod presets;
pub mod problem;
pub mod report;
pub mod run;
pub mod scaling;
pub mod signal;
pub mod solver;
pub mod source;
pub mod weight;

pub use error::{KawaError, Result};
pub use grid::{Domain, DomainKind, SpaceTimeGrid};
pub use problem::{Coefficients, Problem, ValidationReport};
pub use signal::{NormExponent, TimeSignal};
pub use solver::{Forcing, Trajectory};
pub use weight::{preset_weight, Weight, WeightKind};
