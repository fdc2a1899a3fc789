//! Steering of two-qubit states whose steering ellipsoid touches the Bloch
//! sphere at a single pure state.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod ellipsoid;
pub mod error;
pub mod families;
pub mod oracle;
pub mod paulicore;
pub mod projective;
pub mod quartic;
pub mod report;
pub mod sampling;
pub mod tol;

pub use ellipsoid::{plane_section, steering_ellipsoid, tangency, tangency_for_state, PlaneSection, SteeringEllipsoid};
pub use error::{Result, SteeringError};
pub use paulicore::{state_from_pauli, Outcome, TwoQubitState};
