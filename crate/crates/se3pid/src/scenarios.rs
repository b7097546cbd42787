//! Built-in scenario library: the flipping maneuver (attitude tracking
//! followed by a recovery hover) and the Euler-angle attitude oscillation,
//! all on the reference vehicle.

use nalgebra::{Matrix3, Vector3};

use crate::attitude::AttitudeGains;
use crate::certify::{compute_b2, GainBounds};
use crate::position::PositionGains;
use crate::real::Real;
use crate::sim::{AttitudeReference, FlightMode, ModeReference, PositionReference, Scenario};
use crate::vehicle::{Disturbance, QuadrotorParams, RigidBodyState};

/// Reference vehicle: a 0.755 kg quadrotor with diagonal inertia
/// `diag(0.43, 0.43, 1.02) x 10^-2 kg m^2`, 0.169 m arms, and a 0.0132 m
/// torque-to-thrust coefficient.
pub fn reference_quadrotor<T: Real>() -> QuadrotorParams<T> {
    QuadrotorParams::new(
        T::lit(0.755),
        Matrix3::from_diagonal(&Vector3::new(T::lit(0.43e-2), T::lit(0.43e-2), T::lit(1.02e-2))),
        T::lit(0.169),
        T::lit(0.0132),
    )
    .expect("reference parameters are valid")
}

/// Reference disturbance: `[-0.5, 0.2, 1.0] N` on the translational dynamics
/// and `[0.2, -0.1, -0.02] N m` on the rotational dynamics.
pub fn reference_disturbance<T: Real>() -> Disturbance<T> {
    Disturbance {
        force: Vector3::new(T::lit(-0.5), T::lit(0.2), T::lit(1.0)),
        moment: Vector3::new(T::lit(0.2), T::lit(-0.1), T::lit(-0.02)),
    }
}

/// Reference gain set: `k_x = 12.8`, `k_v = 4.22`, `k_i = 1.28`,
/// `k_R = 0.65`, `k_Omega = 0.11`, `k_I = 0.06`, `c1 = 3.6`, `c2 = 0.8`,
/// `sigma = 1`.
pub fn reference_gains<T: Real>() -> PositionGains<T> {
    PositionGains::new(
        T::lit(12.8),
        T::lit(4.22),
        T::lit(1.28),
        T::lit(3.6),
        T::lit(1.0),
        AttitudeGains::new(T::lit(0.65), T::lit(0.11), T::lit(0.06), T::lit(0.8))
            .expect("reference attitude gains are valid"),
    )
    .expect("reference gains are valid")
}

fn reference_bounds<T: Real>(params: &QuadrotorParams<T>, rate_bound: T) -> GainBounds<T> {
    GainBounds {
        // Hover command: the acceleration term is m g, plus a 1% margin for
        // the strict inequality.
        b1: params.mass() * params.gravity() * T::lit(1.01),
        b2: compute_b2(params.inertia(), rate_bound),
        delta_x: T::lit(1.0),
        psi1: T::lit(0.9),
        psi2: T::lit(1.9),
        e_x_max: T::lit(1.0),
    }
}

/// Flipping maneuver: attitude tracking of the flip command for
/// `t in [0, 0.4)`, then a position-mode hover at the origin with heading
/// `e2` until `t = 4`. Starts from rest at the identity attitude.
pub fn flip<T: Real>() -> Scenario<T> {
    let params = reference_quadrotor();
    let attitude = AttitudeReference::Flip;
    let bounds = reference_bounds(&params, attitude.rate_bound());
    Scenario {
        params,
        disturbance: reference_disturbance(),
        gains: reference_gains(),
        bounds: Some(bounds),
        modes: vec![
            FlightMode {
                start: T::zero(),
                end: T::lit(0.4),
                reference: ModeReference::Attitude(attitude),
            },
            FlightMode {
                start: T::lit(0.4),
                end: T::lit(4.0),
                reference: ModeReference::Position(PositionReference::Hover {
                    position: Vector3::zeros(),
                    heading: Vector3::y(),
                }),
            },
        ],
        initial: RigidBodyState::at_rest(),
        dt: T::lit(1e-3),
        t_final: T::lit(4.0),
    }
}

/// The flip scenario with both integral gains zeroed (`k_i = k_I = 0`),
/// exposing the steady-state error the integral terms remove.
pub fn flip_no_integral<T: Real>() -> Scenario<T> {
    let mut scenario = flip();
    scenario.gains.k_i = T::zero();
    scenario.gains.attitude.k_i = T::zero();
    scenario
}

/// Attitude-mode-only scenario tracking the 3-2-1 Euler oscillation for
/// 20 s under the reference disturbances.
pub fn euler_attitude<T: Real>() -> Scenario<T> {
    let params = reference_quadrotor();
    let attitude = AttitudeReference::Euler321;
    let bounds = reference_bounds(&params, attitude.rate_bound());
    Scenario {
        params,
        disturbance: reference_disturbance(),
        gains: reference_gains(),
        bounds: Some(bounds),
        modes: vec![FlightMode {
            start: T::zero(),
            end: T::lit(20.0),
            reference: ModeReference::Attitude(attitude),
        }],
        initial: RigidBodyState::at_rest(),
        dt: T::lit(1e-3),
        t_final: T::lit(20.0),
    }
}
