//! Planning and simulation toolkit for drone-show choreography.
//!
//! A show is a sequence of periodic swarm motion primitives ([`primitives`])
//! joined by transitions. Each transition solves a goal assignment
//! ([`assignment`]) over minimum-snap costs ([`trajopt`]), generates
//! state-constrained candidate trajectories and removes inter-drone conflicts
//! by sequential re-optimization ([`collision`]). Primitive references are
//! amplitude/phase compensated against a measured frequency response
//! ([`sync`]) and the whole show can be flown against a linear vehicle model
//! ([`sim`]).

pub mod assignment;
pub mod collision;
mod conic;
pub mod error;
pub mod primitives;
pub mod sim;
pub mod sync;
pub mod trajopt;

pub use error::{Error, Result};

/// Three-vector used for positions and their derivatives.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Position and derivatives up to snap: `[pos, vel, acc, jerk, snap]`.
pub type State = [Vec3; 5];
