//! Simulation and analysis of planar multi-link omnidirectional multirotors.
//!
//! * [`dynamics`]: closed-form Euler-Lagrange model, equilibria, energy.
//! * [`oracle`]: independent derivation of the same model by exact
//!   differentiation of the Lagrangian, used for validation.
//! * [`analysis`]: wrench and decoupling ranks, omnidirectionality, zero
//!   dynamics.
//! * [`control`]: references and the dynamic feedback-linearizing tracker.
//! * [`simulate`]: fixed-step RK4 closed loop, disturbances, metrics.
//! * [`robustness`]: parameter ranges, Monte-Carlo worst case, disturbance
//!   tolerance.
//! * [`scenario`]: serializable scenario description shared by the CLI and
//!   the robustness harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod control;
pub mod dual;
pub mod dynamics;
mod error;
pub mod extended;
pub mod linalg;
pub mod oracle;
pub mod robustness;
pub mod scenario;
pub mod simulate;

pub use error::{Error, Result};
