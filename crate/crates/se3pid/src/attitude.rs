//! Attitude-mode controller: the control moment with combined
//! angular-velocity + attitude integral action.
//!
//! The moment law is
//!
//! ```text
//! M = -k_r e_R - k_omega e_Omega - k_i e_I
//!     + hat(R^T R_d Omega_d) J R^T R_d Omega_d + J R^T R_d dOmega_d
//! ```
//!
//! with `e_I = int (e_Omega + c2 e_R) dt`. The body cross term
//! `Omega x J Omega` is deliberately not cancelled.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::so3::{angular_velocity_error, error_function, error_vector, hat, RotationMatrix};
use crate::vehicle::RigidBodyState;

/// Attitude-loop gains.
///
/// `c2` blends the attitude error into the integral; the integral gains may
/// be zero to disable integral action entirely (the stability conditions
/// require them positive, which the certifier checks separately).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeGains<T: Real> {
    pub k_r: T,
    pub k_omega: T,
    pub k_i: T,
    pub c2: T,
}

impl<T: Real> AttitudeGains<T> {
    pub fn new(k_r: T, k_omega: T, k_i: T, c2: T) -> Result<Self> {
        for (name, v) in [("k_r", k_r), ("k_omega", k_omega), ("c2", c2)] {
            if !v.is_positive_finite() {
                return Err(Error::InvalidParameter(format!(
                    "attitude gain {name} must be positive"
                )));
            }
        }
        if !k_i.is_non_negative_finite() {
            return Err(Error::InvalidParameter(
                "attitude gain k_i must be non-negative".into(),
            ));
        }
        Ok(Self {
            k_r,
            k_omega,
            k_i,
            c2,
        })
    }
}

/// Smooth attitude reference: rotation, body angular velocity, and its
/// derivative, consistent with `R_d' = R_d hat(Omega_d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeCommand<T: Real> {
    pub rotation: RotationMatrix<T>,
    pub angular_velocity: Vector3<T>,
    pub angular_acceleration: Vector3<T>,
}

impl<T: Real> AttitudeCommand<T> {
    /// Constant attitude hold.
    pub fn hold(rotation: RotationMatrix<T>) -> Self {
        Self {
            rotation,
            angular_velocity: Vector3::zeros(),
            angular_acceleration: Vector3::zeros(),
        }
    }
}

/// Controller state: the integral `e_I`, starting at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeCtrlState<T: Real> {
    pub integral: Vector3<T>,
}

impl<T: Real> AttitudeCtrlState<T> {
    pub fn new() -> Self {
        Self {
            integral: Vector3::zeros(),
        }
    }
}

impl<T: Real> Default for AttitudeCtrlState<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Tracking errors `(Psi, e_R, e_Omega)` of a state against a command.
pub fn attitude_errors<T: Real>(
    state: &RigidBodyState<T>,
    cmd: &AttitudeCommand<T>,
) -> (T, Vector3<T>, Vector3<T>) {
    (
        error_function(&state.attitude, &cmd.rotation),
        error_vector(&state.attitude, &cmd.rotation),
        angular_velocity_error(
            &state.attitude,
            &cmd.rotation,
            &state.angular_velocity,
            &cmd.angular_velocity,
        ),
    )
}

/// Integrand of `e_I`: `e_Omega + c2 e_R`. The caller integrates this
/// alongside the plant ODE.
pub fn integral_rate<T: Real>(
    attitude_error: &Vector3<T>,
    rate_error: &Vector3<T>,
    gains: &AttitudeGains<T>,
) -> Vector3<T> {
    rate_error + attitude_error * gains.c2
}

/// Control moment of the attitude-mode controller.
pub fn control_moment<T: Real>(
    state: &RigidBodyState<T>,
    cmd: &AttitudeCommand<T>,
    ctrl: &AttitudeCtrlState<T>,
    gains: &AttitudeGains<T>,
    inertia: &Matrix3<T>,
) -> Vector3<T> {
    let (_, e_r, e_omega) = attitude_errors(state, cmd);
    // R^T R_d transports the commanded rates into the body frame.
    let transport = state.attitude.matrix().transpose() * cmd.rotation.matrix();
    let transported_rate = transport * cmd.angular_velocity;
    -e_r * gains.k_r - e_omega * gains.k_omega - ctrl.integral * gains.k_i
        + hat(&transported_rate) * (inertia * transported_rate)
        + inertia * (transport * cmd.angular_acceleration)
}
