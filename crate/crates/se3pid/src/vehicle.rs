//! Quadrotor parameters, rigid-body equations of motion with constant
//! disturbances, and the rotor force <-> wrench allocation.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::so3::RotationMatrix;

/// Default gravitational acceleration (m/s^2).
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Physical parameters of the vehicle.
///
/// The inertia inverse is computed once at construction and reused by the
/// dynamics. The frame convention is z-down: gravity acts along `+e3`, rotor
/// thrust along `-b3`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadrotorParams<T: Real> {
    mass: T,
    inertia: Matrix3<T>,
    inertia_inv: Matrix3<T>,
    arm_length: T,
    torque_coeff: T,
    gravity: T,
}

impl<T: Real> QuadrotorParams<T> {
    /// Validates and builds the parameter set with standard gravity.
    ///
    /// `torque_coeff` is the reaction-torque-to-thrust ratio of a rotor (m);
    /// `arm_length` the distance from the center of mass to each rotor (m).
    pub fn new(mass: T, inertia: Matrix3<T>, arm_length: T, torque_coeff: T) -> Result<Self> {
        if !mass.is_positive_finite() {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive and finite, got {}",
                mass.as_f64()
            )));
        }
        if !arm_length.is_positive_finite() {
            return Err(Error::InvalidParameter("arm length must be positive".into()));
        }
        if !torque_coeff.is_positive_finite() {
            return Err(Error::InvalidParameter(
                "torque-to-thrust coefficient must be positive".into(),
            ));
        }
        let sym_err = (inertia - inertia.transpose()).norm();
        if sym_err > T::lit(1e-9) {
            return Err(Error::InvalidParameter(format!(
                "inertia must be symmetric, asymmetry {:.3e}",
                sym_err.as_f64()
            )));
        }
        let eigs = inertia.symmetric_eigenvalues();
        if !eigs.min().is_positive_finite() {
            return Err(Error::InvalidParameter(
                "inertia must be positive definite".into(),
            ));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("inertia is not invertible".into()))?;
        Ok(Self {
            mass,
            inertia,
            inertia_inv,
            arm_length,
            torque_coeff,
            gravity: T::lit(STANDARD_GRAVITY),
        })
    }

    /// Replaces the gravitational acceleration (`0` turns gravity off, which
    /// the conservation tests rely on).
    pub fn with_gravity(mut self, gravity: T) -> Result<Self> {
        if !gravity.is_non_negative_finite() {
            return Err(Error::InvalidParameter(
                "gravity must be finite and non-negative".into(),
            ));
        }
        self.gravity = gravity;
        Ok(self)
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn inertia(&self) -> &Matrix3<T> {
        &self.inertia
    }

    pub fn inertia_inv(&self) -> &Matrix3<T> {
        &self.inertia_inv
    }

    pub fn arm_length(&self) -> T {
        self.arm_length
    }

    pub fn torque_coeff(&self) -> T {
        self.torque_coeff
    }

    pub fn gravity(&self) -> T {
        self.gravity
    }

    /// Minimum and maximum eigenvalue of the inertia matrix.
    pub fn inertia_eigen_range(&self) -> (T, T) {
        let eigs = self.inertia.symmetric_eigenvalues();
        (eigs.min(), eigs.max())
    }
}

/// Fixed, unstructured disturbance forces and moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disturbance<T: Real> {
    /// Force on the translational dynamics, inertial frame (N).
    pub force: Vector3<T>,
    /// Moment on the rotational dynamics, body frame (N m).
    pub moment: Vector3<T>,
}

impl<T: Real> Disturbance<T> {
    pub fn none() -> Self {
        Self {
            force: Vector3::zeros(),
            moment: Vector3::zeros(),
        }
    }
}

impl<T: Real> Default for Disturbance<T> {
    fn default() -> Self {
        Self::none()
    }
}

/// Rigid-body state of the vehicle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyState<T: Real> {
    /// Position of the center of mass, inertial frame (m).
    pub position: Vector3<T>,
    /// Velocity, inertial frame (m/s).
    pub velocity: Vector3<T>,
    /// Attitude: body-to-inertial rotation.
    pub attitude: RotationMatrix<T>,
    /// Angular velocity, body frame (rad/s).
    pub angular_velocity: Vector3<T>,
}

impl<T: Real> RigidBodyState<T> {
    /// Hover state at the origin: identity attitude, everything at rest.
    pub fn at_rest() -> Self {
        Self {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            attitude: RotationMatrix::identity(),
            angular_velocity: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.attitude.matrix().iter().all(|x| x.is_finite())
            && self.angular_velocity.iter().all(|x| x.is_finite())
    }
}

/// Control inputs: collective thrust magnitude and body moment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlWrench<T: Real> {
    /// Thrust magnitude along `-b3` (N).
    pub thrust: T,
    /// Moment in the body frame (N m).
    pub moment: Vector3<T>,
}

impl<T: Real> ControlWrench<T> {
    pub fn zero() -> Self {
        Self {
            thrust: T::zero(),
            moment: Vector3::zeros(),
        }
    }
}

/// Individual rotor thrusts `f1..f4` (N). Negative values are representable
/// (the allocation is exact either way) and flag actuator infeasibility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotorForces<T: Real> {
    pub forces: [T; 4],
}

impl<T: Real> RotorForces<T> {
    /// True when every rotor thrust is non-negative.
    pub fn is_feasible(&self) -> bool {
        self.forces.iter().all(|f| *f >= T::zero())
    }

    pub fn max(&self) -> T {
        self.forces.iter().copied().fold(self.forces[0], T::max)
    }

    pub fn min(&self) -> T {
        self.forces.iter().copied().fold(self.forces[0], T::min)
    }
}

/// Time derivative of the rigid-body state.
///
/// The attitude derivative is reported as the body angular velocity; the
/// integrator applies it multiplicatively (`R' = R hat(Omega)`).
#[derive(Clone, Copy, Debug)]
pub struct StateDerivative<T: Real> {
    pub velocity: Vector3<T>,
    pub acceleration: Vector3<T>,
    pub body_rate: Vector3<T>,
    pub angular_acceleration: Vector3<T>,
}

/// Equations of motion:
///
/// ```text
/// x' = v
/// m v' = m g e3 - f R e3 + Delta_force
/// R' = R hat(Omega)
/// J Omega' = M - Omega x J Omega + Delta_moment
/// ```
pub fn dynamics_derivative<T: Real>(
    state: &RigidBodyState<T>,
    wrench: &ControlWrench<T>,
    params: &QuadrotorParams<T>,
    disturbance: &Disturbance<T>,
) -> StateDerivative<T> {
    let e3 = Vector3::z();
    let thrust_vector = state.attitude.matrix() * e3 * wrench.thrust;
    let acceleration =
        (e3 * (params.mass * params.gravity) - thrust_vector + disturbance.force) / params.mass;
    let omega = state.angular_velocity;
    let angular_acceleration = params.inertia_inv
        * (wrench.moment - omega.cross(&(params.inertia * omega)) + disturbance.moment);
    StateDerivative {
        velocity: state.velocity,
        acceleration,
        body_rate: omega,
        angular_acceleration,
    }
}

/// Rotor geometry: rotor 1 on `+b1`, rotor 2 on `+b2`, rotor 3 on `-b1`,
/// rotor 4 on `-b2`, all thrusting along `-b3`; rotors 1/3 spin clockwise so
/// their reaction torque is `-c_tf f_i` about `b3`, rotors 2/4 the opposite.
/// The resulting allocation is
///
/// ```text
/// f  = f1 + f2 + f3 + f4
/// M1 = d (f4 - f2)
/// M2 = d (f1 - f3)
/// M3 = c_tf (-f1 + f2 - f3 + f4)
/// ```
pub fn rotor_forces_to_wrench<T: Real>(
    rotor_forces: &RotorForces<T>,
    params: &QuadrotorParams<T>,
) -> ControlWrench<T> {
    let [f1, f2, f3, f4] = rotor_forces.forces;
    let d = params.arm_length;
    let c = params.torque_coeff;
    ControlWrench {
        thrust: f1 + f2 + f3 + f4,
        moment: Vector3::new(d * (f4 - f2), d * (f1 - f3), c * (-f1 + f2 - f3 + f4)),
    }
}

/// Exact inverse of [`rotor_forces_to_wrench`].
pub fn wrench_to_rotor_forces<T: Real>(
    wrench: &ControlWrench<T>,
    params: &QuadrotorParams<T>,
) -> RotorForces<T> {
    let half = T::lit(0.5);
    let d = params.arm_length;
    let yaw_sum = wrench.moment.z / params.torque_coeff; // -f1 + f2 - f3 + f4
    let pair_13 = (wrench.thrust - yaw_sum) * half; // f1 + f3
    let pair_24 = (wrench.thrust + yaw_sum) * half; // f2 + f4
    let diff_13 = wrench.moment.y / d; // f1 - f3
    let diff_42 = wrench.moment.x / d; // f4 - f2
    RotorForces {
        forces: [
            (pair_13 + diff_13) * half,
            (pair_24 - diff_42) * half,
            (pair_13 - diff_13) * half,
            (pair_24 + diff_42) * half,
        ],
    }
}

/// Inertial angular momentum `R J Omega`; conserved by the free rigid body.
pub fn inertial_angular_momentum<T: Real>(
    state: &RigidBodyState<T>,
    params: &QuadrotorParams<T>,
) -> Vector3<T> {
    state.attitude.matrix() * (params.inertia * state.angular_velocity)
}
