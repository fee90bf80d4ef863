//! Numerical toolkit for two-mode interferometric phase estimation.
//!
//! The crate models a Mach-Zehnder (equivalently Ramsey) interferometer on
//! angular-momentum sectors: a pure two-mode state is a set of amplitude
//! vectors over Dicke bases `|j,m>`, the phase shift is `exp(-i θ Jz)`, and
//! the conventional read-outs are particle counts on one or both output
//! ports or the population difference, optionally blurred by a Gaussian
//! detection resolution.
//!
//! Module map:
//!
//! - [`spin`] — exact SU(2) sector algebra: operators, rotations, Wigner
//!   small-d matrices, Hermitian evolution.
//! - [`states`] — probe-state constructors (coherent, one-axis twisted,
//!   two-axis counter-twisted, NOON, twin-Fock, multi-sector fixtures),
//!   symmetry classification and phase averaging.
//! - [`interferometer`] — the beam-splitter/phase-shift pipeline and the
//!   z-frame ↔ x-frame mapping between Ramsey and MZI pictures.
//! - [`fisher`] — outcome distributions with exact θ-derivatives, quantum and
//!   classical Fisher information, optimality classification, Husimi maps.
//! - [`bayes`] — seeded Monte-Carlo simulation of Bayesian phase estimation:
//!   posterior grids, MAP estimates, credible intervals, sequence statistics.
//!
//! All values are immutable after construction and all operations are pure
//! functions, so everything here is safe to call from concurrent workers.

pub mod bayes;
mod error;
pub mod fisher;
pub mod interferometer;
pub mod spin;
pub mod states;

pub use error::{Error, Result};

/// Library version embedded in serialized outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
