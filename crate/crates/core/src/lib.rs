//! Flight dynamics and control library for jet-actuated articulated robots.
//!
//! The crate covers the full pipeline from multibody modeling to closed-loop
//! flight simulation:
//!
//! - [`model`] — floating-base kinematic tree: forward kinematics, Jacobians,
//!   centroidal momentum, and joint-space dynamics terms.
//! - [`aero`] — per-link aerodynamic models: the constrained sinusoidal
//!   axisymmetric force-area model with Lasso + least-squares fitting, and
//!   the generalized aerodynamic wrench.
//! - [`dataset`] — synthetic aerodynamic dataset generation (a deterministic
//!   oracle over a joint-configuration x wind-direction grid), mirroring
//!   augmentation, splitting, and CSV I/O.
//! - [`mlp`] — a from-scratch fully connected network: forward pass with
//!   inverted dropout, backpropagation, Adam, deterministic training, and
//!   binary weight serialization.
//! - [`control`] — aerodynamic-aware momentum controller: relative-degree
//!   augmented feedback linearization, tanh-shaped input bounds, closed-form
//!   box QP allocation, and the high-gain joint torque inner loop.
//! - [`sim`] — semi-implicit Euler flight simulator, wind profiles, reference
//!   envelopes, and scenario execution with CSV logging.
//!
//! All spatial 6-vectors use the (angular, linear) ordering. The stacked
//! system velocity is `nu = (base angular velocity, base linear velocity,
//! joint velocities)`, expressed in world coordinates (mixed representation).

pub mod aero;
pub mod cli;
pub mod control;
pub mod dataset;
pub mod math;
pub mod mlp;
pub mod model;
pub mod sim;

mod error;

pub use error::{Error, Result};
