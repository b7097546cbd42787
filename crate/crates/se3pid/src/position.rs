//! Position-mode controller: saturated translational integral, computed
//! attitude frame, thrust magnitude, and the moment that tracks the computed
//! frame.

use std::collections::VecDeque;

use nalgebra::Vector3;

use crate::attitude::{
    attitude_errors, control_moment, integral_rate, AttitudeCommand, AttitudeCtrlState,
    AttitudeGains,
};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::so3::{normalized_projection, skew_part_vee, RotationMatrix};
use crate::vehicle::{ControlWrench, QuadrotorParams, RigidBodyState};

/// The desired-force construction fails when `|A|` drops below this.
pub const DEGENERATE_FORCE_TOL: f64 = 1e-9;

/// Full gain set: translational gains plus the embedded attitude gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionGains<T: Real> {
    pub k_x: T,
    pub k_v: T,
    pub k_i: T,
    pub c1: T,
    pub sigma: T,
    pub attitude: AttitudeGains<T>,
}

impl<T: Real> PositionGains<T> {
    pub fn new(
        k_x: T,
        k_v: T,
        k_i: T,
        c1: T,
        sigma: T,
        attitude: AttitudeGains<T>,
    ) -> Result<Self> {
        for (name, v) in [("k_x", k_x), ("k_v", k_v), ("c1", c1), ("sigma", sigma)] {
            if !v.is_positive_finite() {
                return Err(Error::InvalidParameter(format!(
                    "position gain {name} must be positive"
                )));
            }
        }
        if !k_i.is_non_negative_finite() {
            return Err(Error::InvalidParameter(
                "position gain k_i must be non-negative".into(),
            ));
        }
        Ok(Self {
            k_x,
            k_v,
            k_i,
            c1,
            sigma,
            attitude,
        })
    }
}

/// Smooth position reference with the desired heading direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionCommand<T: Real> {
    pub position: Vector3<T>,
    pub velocity: Vector3<T>,
    pub acceleration: Vector3<T>,
    /// Unit heading reference `b_1d`; the first body axis converges to its
    /// projection onto the plane normal to the thrust axis.
    pub heading: Vector3<T>,
}

impl<T: Real> PositionCommand<T> {
    /// Constant setpoint with zero feedforward.
    pub fn hold(position: Vector3<T>, heading: Vector3<T>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
            heading,
        }
    }
}

/// Ring buffer of recent computed-attitude frames used to differentiate the
/// commanded rotation numerically. Cleared at mode switches.
#[derive(Clone, Debug, Default)]
pub struct FrameHistory<T: Real> {
    frames: VecDeque<(T, RotationMatrix<T>)>,
}

impl<T: Real> FrameHistory<T> {
    pub fn new() -> Self {
        Self {
            frames: VecDeque::with_capacity(3),
        }
    }

    pub fn push(&mut self, t: T, frame: RotationMatrix<T>) {
        if self.frames.len() == 3 {
            self.frames.pop_front();
        }
        self.frames.push_back((t, frame));
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Position-mode controller state: both integrals plus the frame history.
#[derive(Clone, Debug, Default)]
pub struct PosCtrlState<T: Real> {
    /// Translational integral `e_i` (raw, unsaturated).
    pub translation_integral: Vector3<T>,
    /// Attitude integral `e_I`.
    pub attitude_integral: Vector3<T>,
    pub frames: FrameHistory<T>,
}

impl<T: Real> PosCtrlState<T> {
    pub fn new() -> Self {
        Self {
            translation_integral: Vector3::zeros(),
            attitude_integral: Vector3::zeros(),
            frames: FrameHistory::new(),
        }
    }

    /// Zeroes the integrals and forgets the frame history (mode switch).
    pub fn reset(&mut self) {
        self.translation_integral = Vector3::zeros();
        self.attitude_integral = Vector3::zeros();
        self.frames.clear();
    }
}

/// Componentwise saturation to `[-sigma, sigma]`.
pub fn saturate<T: Real>(v: &Vector3<T>, sigma: T) -> Vector3<T> {
    v.map(|x| x.clamp(-sigma, sigma))
}

/// Desired force vector
/// `A = -k_x e_x - k_v e_v - k_i sat_sigma(e_i) - m g e3 + m xdd_d`.
///
/// Fails when `|A|` is numerically zero; the commanded thrust axis would be
/// undefined.
pub fn desired_force_vector<T: Real>(
    position_error: &Vector3<T>,
    velocity_error: &Vector3<T>,
    saturated_integral: &Vector3<T>,
    cmd: &PositionCommand<T>,
    gains: &PositionGains<T>,
    mass: T,
    gravity: T,
) -> Result<Vector3<T>> {
    let a = -position_error * gains.k_x
        - velocity_error * gains.k_v
        - saturated_integral * gains.k_i
        - Vector3::z() * (mass * gravity)
        + cmd.acceleration * mass;
    let norm = a.norm();
    if norm < T::lit(DEGENERATE_FORCE_TOL) {
        return Err(Error::DegenerateForceCommand {
            norm: norm.as_f64(),
        });
    }
    Ok(a)
}

/// Computed attitude `R_c = [b1_c, b3_c x b1_c, b3_c]` with
/// `b3_c = -A / |A|` and `b1_c` the normalized projection of the heading
/// reference onto the plane perpendicular to `b3_c`.
pub fn computed_attitude<T: Real>(
    desired_force: &Vector3<T>,
    heading: &Vector3<T>,
) -> Result<RotationMatrix<T>> {
    let norm = desired_force.norm();
    if norm < T::lit(DEGENERATE_FORCE_TOL) {
        return Err(Error::DegenerateForceCommand {
            norm: norm.as_f64(),
        });
    }
    let b3 = -desired_force / norm;
    let b1 = normalized_projection(heading, &b3)?;
    let b2 = b3.cross(&b1);
    Ok(RotationMatrix::from_matrix_unchecked(
        nalgebra::Matrix3::from_columns(&[b1, b2, b3]),
    ))
}

/// Thrust magnitude `f = -A . (R e3)`.
pub fn thrust_magnitude<T: Real>(desired_force: &Vector3<T>, attitude: &RotationMatrix<T>) -> T {
    -desired_force.dot(&(attitude.matrix() * Vector3::z()))
}

/// Commanded body rates from the stored frame history by central
/// differences.
///
/// With the three newest frames at `t - h`, `t`, `t + h`:
///
/// ```text
/// hat(Omega_c)  = skew(R_c(t)^T (R_c(t+h) - R_c(t-h)) / 2h)
/// hat(Omega_c') = skew(R_c(t)^T (R_c(t+h) - 2 R_c(t) + R_c(t-h)) / h^2)
/// ```
///
/// (the symmetric part of `R^T R''` carries no rate information, so taking
/// the skew part of the second difference is the central difference of
/// `Omega_c` itself). The values correspond to the middle frame. Fewer than
/// three frames: returns zeros (warm-up).
pub fn commanded_rates<T: Real>(history: &FrameHistory<T>) -> (Vector3<T>, Vector3<T>) {
    if history.frames.len() < 3 {
        return (Vector3::zeros(), Vector3::zeros());
    }
    let n = history.frames.len();
    let (t0, r0) = &history.frames[n - 3];
    let (_, r1) = &history.frames[n - 2];
    let (t2, r2) = &history.frames[n - 1];
    let h = (*t2 - *t0) * T::lit(0.5);
    let rt = r1.matrix().transpose();
    let first = rt * ((r2.matrix() - r0.matrix()) / (h + h));
    let second = rt * ((r2.matrix() - r1.matrix() * T::lit(2.0) + r0.matrix()) / (h * h));
    (skew_part_vee(&first), skew_part_vee(&second))
}

/// Everything one evaluation of the position controller produces: the wrench,
/// the diagnostics (all attitude quantities measured against the computed
/// frame), and the integrand vectors for the two integral states.
#[derive(Clone, Copy, Debug)]
pub struct PositionControlOutput<T: Real> {
    pub wrench: ControlWrench<T>,
    pub position_error: Vector3<T>,
    pub velocity_error: Vector3<T>,
    pub psi: T,
    pub attitude_error: Vector3<T>,
    pub angular_velocity_error: Vector3<T>,
    pub computed_frame: RotationMatrix<T>,
    pub translation_integral_rate: Vector3<T>,
    pub attitude_integral_rate: Vector3<T>,
}

/// Position controller with the commanded rates supplied by the caller
/// (frozen over one integration step).
#[allow(clippy::too_many_arguments)]
pub fn position_control_with_rates<T: Real>(
    state: &RigidBodyState<T>,
    cmd: &PositionCommand<T>,
    translation_integral: &Vector3<T>,
    attitude_integral: &Vector3<T>,
    frame_rate: &Vector3<T>,
    frame_accel: &Vector3<T>,
    gains: &PositionGains<T>,
    params: &QuadrotorParams<T>,
) -> Result<PositionControlOutput<T>> {
    let position_error = state.position - cmd.position;
    let velocity_error = state.velocity - cmd.velocity;
    let sat_integral = saturate(translation_integral, gains.sigma);
    let a = desired_force_vector(
        &position_error,
        &velocity_error,
        &sat_integral,
        cmd,
        gains,
        params.mass(),
        params.gravity(),
    )?;
    let computed_frame = computed_attitude(&a, &cmd.heading)?;
    let thrust = thrust_magnitude(&a, &state.attitude);
    let att_cmd = AttitudeCommand {
        rotation: computed_frame,
        angular_velocity: *frame_rate,
        angular_acceleration: *frame_accel,
    };
    let (psi, e_r, e_omega) = attitude_errors(state, &att_cmd);
    let moment = control_moment(
        state,
        &att_cmd,
        &AttitudeCtrlState {
            integral: *attitude_integral,
        },
        &gains.attitude,
        params.inertia(),
    );
    Ok(PositionControlOutput {
        wrench: ControlWrench { thrust, moment },
        position_error,
        velocity_error,
        psi,
        attitude_error: e_r,
        angular_velocity_error: e_omega,
        computed_frame,
        translation_integral_rate: velocity_error + position_error * gains.c1,
        attitude_integral_rate: integral_rate(&e_r, &e_omega, &gains.attitude),
    })
}

/// Full position controller step: records the computed frame in the history,
/// differentiates it for the commanded rates, and assembles the wrench.
pub fn position_control<T: Real>(
    state: &RigidBodyState<T>,
    cmd: &PositionCommand<T>,
    ctrl: &mut PosCtrlState<T>,
    t: T,
    gains: &PositionGains<T>,
    params: &QuadrotorParams<T>,
) -> Result<PositionControlOutput<T>> {
    let position_error = state.position - cmd.position;
    let velocity_error = state.velocity - cmd.velocity;
    let sat_integral = saturate(&ctrl.translation_integral, gains.sigma);
    let a = desired_force_vector(
        &position_error,
        &velocity_error,
        &sat_integral,
        cmd,
        gains,
        params.mass(),
        params.gravity(),
    )?;
    let frame = computed_attitude(&a, &cmd.heading)?;
    ctrl.frames.push(t, frame);
    let (frame_rate, frame_accel) = commanded_rates(&ctrl.frames);
    position_control_with_rates(
        state,
        cmd,
        &ctrl.translation_integral,
        &ctrl.attitude_integral,
        &frame_rate,
        &frame_accel,
        gains,
        params,
    )
}
