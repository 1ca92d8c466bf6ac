//! Spontaneous emission of a two-level atom in front of a mirror.
//!
//! The atom sits at the end of a semi-infinite one-dimensional waveguide. A
//! photon it emits returns after the round-trip delay `t_d` with phase `phi`,
//! and the excited-state amplitude obeys
//!
//! ```text
//! dε/dt = -(Γ/2) ε(t) + (Γ/2) e^{iφ} ε(t - t_d) Θ(t - t_d),   ε(0) = 1
//! ```
//!
//! The crate evaluates the exact series solution, integrates the delay
//! equation numerically as an independent check, and decides whether the
//! emission is Markovian (|ε| never grows) in the window `t ∈ [0, 2 t_d]`.
//!
//! Modules:
//! - [`params`]: physical parameters, validation, time grids.
//! - [`analytic`]: series solution, closed form on `[t_d, 2 t_d]`, the
//!   quadratic `p(x)` that controls the sign of `d|ε|²/dt`.
//! - [`dde`]: fixed-step RK4 integrator using the method of steps.
//! - [`classifier`]: Markovian/non-Markovian verdicts, thresholds, region maps.
//! - [`channel`]: the induced qubit channel, trace distance, information
//!   backflow witness.
//! - [`cli`] and [`verify`]: command-line front end and the self-check suite.

#![forbid(unsafe_code)]

pub mod analytic;
pub mod channel;
pub mod classifier;
pub mod cli;
pub mod dde;
mod error;
pub mod output;
pub mod params;
pub mod verify;

pub use error::{Error, Result};
pub use params::{ComplexAmplitude, Params, TimeGrid};
