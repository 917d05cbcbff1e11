//! Pure-jump strict local martingales built from self-exciting affine processes.
//!
//! The state process `X` lives on `[0, ∞)`, jumps upward at a rate proportional
//! to its current value and drifts back down at a linear rate. For a Lévy
//! measure `μ` with `∫₁^∞ e^ξ μ(dξ) < ∞` the exponential `S = e^X − 1` is a local
//! martingale; whether it is a *true* martingale is decided by the behaviour of
//! the convex function
//!
//! ```text
//! R(u) = ∫ (e^{uξ} − 1 − uξ) μ(dξ) − b·u,     b = ∫ (e^ξ − 1 − ξ) μ(dξ)
//! ```
//!
//! near `u = 1`: `S` is strict exactly when `1/R` is integrable in a left
//! neighbourhood of 1, equivalently when `ġ = R(g), g(0) = 1` has a second,
//! non-constant solution.
//!
//! Modules:
//!
//! * [`measure`]: Lévy measure descriptions, moments, `R`, closed-form gamma
//!   identities and generator residuals.
//! * [`riccati`]: the Riccati ODE solver, the time map, the minimal solution
//!   through `u = 1` and the strict/true classifier.
//! * [`simulate`]: event-driven simulation of the conservative process and of
//!   its explosive dual.
//! * [`stats`]: Monte Carlo estimate bookkeeping shared with the std front end.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod measure;
pub mod quad;
pub mod riccati;
pub mod rng;
pub mod sampler;
pub mod simulate;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use measure::{LevyMeasureSpec, Measure, MeasureMoments, TestFunction};
pub use riccati::{Classification, Riccati, RiccatiSolution, Verdict};
pub use simulate::{EngineConfig, JumpEvent, Path, PathValue};
pub use stats::McEstimate;
