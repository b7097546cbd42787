//! Geometric nonlinear PID tracking control for quadrotor UAVs on SE(3).
//!
//! The crate provides:
//!
//! - rotation-group primitives and the attitude error machinery ([`so3`]),
//! - the vehicle model with constant disturbances and the rotor allocation
//!   ([`vehicle`]),
//! - the attitude-mode and position-mode controllers with their combined
//!   rate + error integral terms ([`attitude`], [`position`]),
//! - a certifier that evaluates the sufficient stability conditions on a
//!   gain set and emits a machine-readable certificate ([`certify`]),
//! - a Lie-group Runge-Kutta simulator with flight-mode scheduling, CSV
//!   logging, and a library of built-in scenarios ([`sim`], [`scenarios`]).
//!
//! All numerics are generic over the scalar type through [`Real`]; `f64` is
//! the instantiation the aliases at the crate root refer to.

pub mod attitude;
pub mod certify;
pub mod error;
pub mod position;
pub mod real;
pub mod scenarios;
pub mod sim;
pub mod so3;
pub mod vehicle;

pub use error::{Error, Result};
pub use real::Real;

/// Double-precision 3-vector.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Double-precision 3x3 matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Double-precision rotation matrix.
pub type Rot3 = so3::RotationMatrix<f64>;
