//! Describing-function analysis for feedback oscillators.
//!
//! The crate separates an oscillator into a linear block G(s) and a
//! memoryless nonlinearity f(x), computes the describing function N(A) of
//! the nonlinearity, solves the harmonic-balance loop equation
//! G(jω)·N(A) = σ for candidate limit cycles, classifies their stability by
//! Nyquist encirclement counting, and cross-validates every prediction with
//! transient ODE simulation of the corresponding state-space model.
//!
//! Modules:
//! - [`nonlin`]: the nonlinearity catalog (saturation, relay, dead zone,
//!   hysteretic relay, tanh family, cubic, Hill, polynomial, tabulated).
//! - [`df`]: describing functions — closed forms, bias-aware quadrature,
//!   amplitude sweeps, critical loci, and tanh-series approximations.
//! - [`linear`]: rational transfer functions with period-fraction delays,
//!   Nyquist/Bode sampling, real-axis crossings, magnitude peaks.
//! - [`predict`]: the loop solver, stability classification, existence
//!   margins, and node-amplitude reports.
//! - [`sim`]: transient models of the case-study oscillators with fixed-step
//!   and adaptive integrators (event-located switching for the relay ring).
//! - [`metrics`]: steady-state amplitude/offset/period/THD extraction and
//!   prediction-vs-simulation comparison.
//! - [`presets`]: the bundled case studies with their parameters.

pub mod df;
pub mod error;
pub mod linear;
pub mod metrics;
pub mod nonlin;
pub mod predict;
pub mod presets;
pub mod sim;

pub use error::{Error, Result};
pub use linear::{FrequencyGrid, LinearBlock};
pub use nonlin::{Kind, Nonlinearity, ParamValue, Polarity, Symmetry};
pub use predict::{
    BiasMode, ExistenceMargin, LoopSpec, NodePath, PredictedOscillation, PredictionReport,
    SolveOptions, Stability,
};
pub use sim::{Method, ModelKind, OscModel, Trajectory};

pub use num_complex::Complex64;
