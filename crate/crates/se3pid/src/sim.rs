//! Closed-loop simulation: a Lie-group Runge-Kutta integrator for the rigid
//! body with the controller integrals appended to the ODE state, flight-mode
//! scheduling, and CSV logging.

use std::io::{self, Write};

use nalgebra::Vector3;

use crate::attitude::{attitude_errors, control_moment, integral_rate, AttitudeCommand, AttitudeCtrlState};
use crate::certify::{check_attitude_conditions, check_position_conditions, Certificate, GainBounds};
use crate::error::{Error, Result};
use crate::position::{commanded_rates, position_control_with_rates, PosCtrlState, PositionCommand, PositionGains};
use crate::real::Real;
use crate::so3::{exp_so3, project_to_rotation, RotationMatrix};
use crate::vehicle::{
    dynamics_derivative, wrench_to_rotor_forces, ControlWrench, Disturbance, QuadrotorParams,
    RigidBodyState, RotorForces,
};

/// Orthogonality drift that triggers re-projection of the attitude.
pub const REPROJECT_TOL: f64 = 1e-12;

/// Attitude reference generators available to scenarios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AttitudeReference<T: Real> {
    /// Aggressive flip: simultaneous yaw at `pi` rad/s and pitch at `4 pi`
    /// rad/s, `R_d(t) = exp(pi t e3^) exp(4 pi t e2^)`.
    Flip,
    /// Combined rolling/pitching oscillation from 3-2-1 Euler angles:
    /// `roll = (pi/9) sin(pi t)`, `pitch = (pi/9) cos(pi t)`, `yaw = 0`.
    Euler321,
    /// Constant attitude hold.
    Hold(RotationMatrix<T>),
}

impl<T: Real> AttitudeReference<T> {
    pub fn command(&self, t: T) -> AttitudeCommand<T> {
        match self {
            AttitudeReference::Flip => attitude_command_flip(t),
            AttitudeReference::Euler321 => euler321_command(t),
            AttitudeReference::Hold(r) => AttitudeCommand::hold(*r),
        }
    }

    /// Exact upper bound of the commanded angular rate, used for `B2`.
    pub fn rate_bound(&self) -> T {
        match self {
            // |Omega_d|^2 = pi^2 + (4 pi)^2 for all t (the two terms stay
            // orthogonal).
            AttitudeReference::Flip => T::pi() * T::lit(17.0).sqrt(),
            // |Omega_d| = pi^2 / 9 for all t.
            AttitudeReference::Euler321 => T::pi() * T::pi() / T::lit(9.0),
            AttitudeReference::Hold(_) => T::zero(),
        }
    }
}

/// Position reference generators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PositionReference<T: Real> {
    /// Constant setpoint with a fixed heading reference.
    Hover {
        position: Vector3<T>,
        heading: Vector3<T>,
    },
}

impl<T: Real> PositionReference<T> {
    pub fn command(&self, _t: T) -> PositionCommand<T> {
        match self {
            PositionReference::Hover { position, heading } => {
                PositionCommand::hold(*position, *heading)
            }
        }
    }
}

/// Reference active during one flight-mode window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModeReference<T: Real> {
    Attitude(AttitudeReference<T>),
    Position(PositionReference<T>),
}

/// One flight mode: a reference active over `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlightMode<T: Real> {
    pub start: T,
    pub end: T,
    pub reference: ModeReference<T>,
}

/// Tag identifying the controller that produced a log record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeTag {
    Attitude,
    Position,
}

impl ModeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeTag::Attitude => "attitude",
            ModeTag::Position => "position",
        }
    }
}

/// Complete scenario definition.
#[derive(Clone, Debug)]
pub struct Scenario<T: Real> {
    pub params: QuadrotorParams<T>,
    pub disturbance: Disturbance<T>,
    pub gains: PositionGains<T>,
    /// Present: the matching gain certificate is evaluated before the run
    /// and attached to the result (FAIL is a warning, never an abort).
    pub bounds: Option<GainBounds<T>>,
    pub modes: Vec<FlightMode<T>>,
    pub initial: RigidBodyState<T>,
    pub dt: T,
    pub t_final: T,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_positive_finite() {
            return Err(Error::InvalidScenario("dt must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidScenario("at least one flight mode".into()));
        }
        if self.modes[0].start != T::zero() {
            return Err(Error::InvalidScenario(
                "first mode window must start at t = 0".into(),
            ));
        }
        for w in &self.modes {
            if !(w.end - w.start).is_positive_finite() {
                return Err(Error::InvalidScenario(
                    "mode windows must have positive length".into(),
                ));
            }
        }
        for pair in self.modes.windows(2) {
            if pair[0].end != pair[1].start {
                return Err(Error::InvalidScenario(
                    "mode windows must be contiguous and non-overlapping".into(),
                ));
            }
        }
        let last_end = self.modes.last().unwrap().end;
        if self.t_final < last_end {
            return Err(Error::InvalidScenario(
                "t_final must reach the last mode window".into(),
            ));
        }
        let steps = (self.t_final / self.dt).as_f64();
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::InvalidScenario(
                "t_final must be an integer multiple of dt".into(),
            ));
        }
        Ok(())
    }

    fn mode_index(&self, t: T) -> usize {
        for (i, w) in self.modes.iter().enumerate() {
            if t >= w.start && t < w.end {
                return i;
            }
        }
        self.modes.len() - 1
    }
}

/// ODE state: rigid body plus the two controller integrals.
#[derive(Clone, Copy, Debug)]
pub struct SimState<T: Real> {
    pub body: RigidBodyState<T>,
    pub translation_integral: Vector3<T>,
    pub attitude_integral: Vector3<T>,
}

impl<T: Real> SimState<T> {
    pub fn new(body: RigidBodyState<T>) -> Self {
        Self {
            body,
            translation_integral: Vector3::zeros(),
            attitude_integral: Vector3::zeros(),
        }
    }

    fn is_finite(&self) -> bool {
        self.body.is_finite()
            && self.translation_integral.iter().all(|x| x.is_finite())
            && self.attitude_integral.iter().all(|x| x.is_finite())
    }
}

/// Control evaluation at one integration stage: the wrench plus the
/// integrands of both integral states.
#[derive(Clone, Copy, Debug)]
pub struct ControlEval<T: Real> {
    pub wrench: ControlWrench<T>,
    pub translation_integral_rate: Vector3<T>,
    pub attitude_integral_rate: Vector3<T>,
}

impl<T: Real> ControlEval<T> {
    pub fn passive(wrench: ControlWrench<T>) -> Self {
        Self {
            wrench,
            translation_integral_rate: Vector3::zeros(),
            attitude_integral_rate: Vector3::zeros(),
        }
    }
}

#[derive(Clone, Copy)]
struct FlatDerivative<T: Real> {
    velocity: Vector3<T>,
    acceleration: Vector3<T>,
    angular_acceleration: Vector3<T>,
    ei_rate: Vector3<T>,
    ei_att_rate: Vector3<T>,
}

/// `dexp^{-1}` for the right-trivialized kinematics `R' = R hat(omega)`:
/// `v + [u, v]/2 + [u, [u, v]]/12` with the so(3) bracket (cross product),
/// truncated at the order a 4-stage scheme needs.
fn dexpinv_right<T: Real>(u: &Vector3<T>, v: &Vector3<T>) -> Vector3<T> {
    let half = T::lit(0.5);
    let twelfth = T::lit(1.0 / 12.0);
    v + u.cross(v) * half + u.cross(&u.cross(v)) * twelfth
}

/// One step of the Munthe-Kaas 4th-order Runge-Kutta scheme.
///
/// The flat components (position, velocity, body rate, integrals) take the
/// classical RK4 update; the attitude advances multiplicatively through
/// exponential increments of the `dexpinv`-corrected stage rates, so the
/// rotation invariants hold to machine precision at every step. If the
/// accumulated orthogonality drift still exceeds [`REPROJECT_TOL`], the
/// attitude is polar-projected back onto the rotation group.
pub fn step<T, F>(
    state: &SimState<T>,
    t: T,
    dt: T,
    params: &QuadrotorParams<T>,
    disturbance: &Disturbance<T>,
    control: &F,
) -> Result<SimState<T>>
where
    T: Real,
    F: Fn(T, &SimState<T>) -> Result<ControlEval<T>>,
{
    let eval = |t_stage: T, s: &SimState<T>| -> Result<FlatDerivative<T>> {
        let ce = control(t_stage, s)?;
        let d = dynamics_derivative(&s.body, &ce.wrench, params, disturbance);
        Ok(FlatDerivative {
            velocity: d.velocity,
            acceleration: d.acceleration,
            angular_acceleration: d.angular_acceleration,
            ei_rate: ce.translation_integral_rate,
            ei_att_rate: ce.attitude_integral_rate,
        })
    };

    let advance = |s0: &SimState<T>, d: &FlatDerivative<T>, h: T, u: &Vector3<T>| SimState {
        body: RigidBodyState {
            position: s0.body.position + d.velocity * h,
            velocity: s0.body.velocity + d.acceleration * h,
            attitude: s0.body.attitude * exp_so3(u),
            angular_velocity: s0.body.angular_velocity + d.angular_acceleration * h,
        },
        translation_integral: s0.translation_integral + d.ei_rate * h,
        attitude_integral: s0.attitude_integral + d.ei_att_rate * h,
    };

    let half = T::lit(0.5);
    let half_dt = dt * half;
    let two = T::lit(2.0);

    let d1 = eval(t, state)?;
    let k1 = state.body.angular_velocity; // dexpinv at u = 0

    let u2 = k1 * half_dt;
    let s2 = advance(state, &d1, half_dt, &u2);
    let d2 = eval(t + half_dt, &s2)?;
    let k2 = dexpinv_right(&u2, &s2.body.angular_velocity);

    let u3 = k2 * half_dt;
    let s3 = advance(state, &d2, half_dt, &u3);
    let d3 = eval(t + half_dt, &s3)?;
    let k3 = dexpinv_right(&u3, &s3.body.angular_velocity);

    let u4 = k3 * dt;
    let s4 = advance(state, &d3, dt, &u4);
    let d4 = eval(t + dt, &s4)?;
    let k4 = dexpinv_right(&u4, &s4.body.angular_velocity);

    let sixth_dt = dt / T::lit(6.0);
    let theta = (k1 + k2 * two + k3 * two + k4) * sixth_dt;
    let mut attitude = state.body.attitude * exp_so3(&theta);
    if attitude.orthogonality_error() > T::lit(REPROJECT_TOL) {
        attitude = project_to_rotation(attitude.matrix());
    }

    let combine = |a: Vector3<T>, b: Vector3<T>, c: Vector3<T>, d: Vector3<T>| {
        (a + b * two + c * two + d) * sixth_dt
    };
    let next = SimState {
        body: RigidBodyState {
            position: state.body.position
                + combine(d1.velocity, d2.velocity, d3.velocity, d4.velocity),
            velocity: state.body.velocity
                + combine(d1.acceleration, d2.acceleration, d3.acceleration, d4.acceleration),
            attitude,
            angular_velocity: state.body.angular_velocity
                + combine(
                    d1.angular_acceleration,
                    d2.angular_acceleration,
                    d3.angular_acceleration,
                    d4.angular_acceleration,
                ),
        },
        translation_integral: state.translation_integral
            + combine(d1.ei_rate, d2.ei_rate, d3.ei_rate, d4.ei_rate),
        attitude_integral: state.attitude_integral
            + combine(d1.ei_att_rate, d2.ei_att_rate, d3.ei_att_rate, d4.ei_att_rate),
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState { time: t.as_f64() });
    }
    Ok(next)
}

/// One logged record. The reference frame is the command the diagnostics are
/// measured against: `R_d` in attitude mode, the computed `R_c` in position
/// mode. Position-mode-only diagnostics are zero in attitude mode.
#[derive(Clone, Copy, Debug)]
pub struct LogRecord<T: Real> {
    pub t: T,
    pub state: RigidBodyState<T>,
    pub wrench: ControlWrench<T>,
    pub rotor_forces: RotorForces<T>,
    pub psi: T,
    pub attitude_error: Vector3<T>,
    pub angular_velocity_error: Vector3<T>,
    pub position_error: Vector3<T>,
    pub velocity_error: Vector3<T>,
    pub translation_integral: Vector3<T>,
    pub attitude_integral: Vector3<T>,
    pub reference_frame: RotationMatrix<T>,
    pub mode: ModeTag,
}

/// Time-stamped record of a complete run on a uniform grid (one record per
/// step plus the final state).
#[derive(Clone, Debug)]
pub struct ScenarioLog<T: Real> {
    pub records: Vec<LogRecord<T>>,
}

impl<T: Real> Default for ScenarioLog<T> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
        }
    }
}

impl<T: Real> ScenarioLog<T> {
    pub fn last(&self) -> Option<&LogRecord<T>> {
        self.records.last()
    }

    /// Largest single-rotor thrust over the run.
    pub fn max_rotor_thrust(&self) -> T {
        self.records
            .iter()
            .map(|r| r.rotor_forces.max())
            .fold(T::zero(), T::max)
    }

    /// Number of records with at least one negative rotor thrust.
    pub fn infeasible_rotor_records(&self) -> usize {
        self.records
            .iter()
            .filter(|r| !r.rotor_forces.is_feasible())
            .count()
    }

    /// Writes the log as CSV with the exact column set of the file contract;
    /// floats are printed with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", CSV_HEADER)?;
        for r in &self.records {
            let mut fields: Vec<String> = Vec::with_capacity(47);
            let mut push = |v: T| fields.push(format!("{:.16e}", v));
            push(r.t);
            for v in r.state.position.iter() {
                push(*v);
            }
            for v in r.state.velocity.iter() {
                push(*v);
            }
            let m = r.state.attitude.matrix();
            for row in 0..3 {
                for col in 0..3 {
                    push(m[(row, col)]);
                }
            }
            for v in r.state.angular_velocity.iter() {
                push(*v);
            }
            push(r.wrench.thrust);
            for v in r.wrench.moment.iter() {
                push(*v);
            }
            for v in r.rotor_forces.forces {
                push(v);
            }
            push(r.psi);
            for v in r.attitude_error.iter() {
                push(*v);
            }
            for v in r.angular_velocity_error.iter() {
                push(*v);
            }
            for v in r.position_error.iter() {
                push(*v);
            }
            for v in r.velocity_error.iter() {
                push(*v);
            }
            for v in r.translation_integral.iter() {
                push(*v);
            }
            for v in r.attitude_integral.iter() {
                push(*v);
            }
            fields.push(r.mode.as_str().to_string());
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Exact CSV header of the log file contract.
pub const CSV_HEADER: &str = "t,x1,x2,x3,v1,v2,v3,R11,R12,R13,R21,R22,R23,R31,R32,R33,W1,W2,W3,f,M1,M2,M3,f1,f2,f3,f4,Psi,eR1,eR2,eR3,eW1,eW2,eW3,ex1,ex2,ex3,ev1,ev2,ev3,ei1,ei2,ei3,eI1,eI2,eI3,mode";

/// How a run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioOutcome {
    Completed,
    /// A controller degeneracy or non-finite state aborted the run; the log
    /// holds everything up to the abort.
    Aborted { time: f64, reason: Error },
}

/// Result of a run: the (possibly partial) log, the outcome, and the gain
/// certificate when bounds were declared.
#[derive(Clone, Debug)]
pub struct ScenarioRun<T: Real> {
    pub log: ScenarioLog<T>,
    pub outcome: ScenarioOutcome,
    pub certificate: Option<Certificate<T>>,
}

impl<T: Real> ScenarioRun<T> {
    pub fn completed(&self) -> bool {
        self.outcome == ScenarioOutcome::Completed
    }
}

/// Thrust held in attitude mode: the attitude controller leaves the thrust
/// magnitude free, so the gravity-projection value `m g (e3 . R e3)` is used
/// (the position-mode law with all translational gains zero). Positive at
/// hover, smooth through inverted flight.
pub fn attitude_mode_thrust<T: Real>(params: &QuadrotorParams<T>, r: &RotationMatrix<T>) -> T {
    params.mass() * params.gravity() * r.matrix()[(2, 2)]
}

struct ModeRuntime<T: Real> {
    index: usize,
    ctrl: PosCtrlState<T>,
    /// Commanded frame rates frozen over the current step.
    frame_rate: Vector3<T>,
    frame_accel: Vector3<T>,
}

/// Runs a scenario to completion (or abort), producing the full log.
///
/// Controllers are re-evaluated at every integrator stage; in position mode
/// the numerically differentiated frame rates are frozen across the four
/// stages of a step. Mode switches reset both integrals and the frame
/// history; the rigid-body state carries over continuously.
pub fn run_scenario<T: Real>(scenario: &Scenario<T>) -> Result<ScenarioRun<T>> {
    scenario.validate()?;
    let certificate = scenario.bounds.as_ref().map(|bounds| {
        let position_mode = scenario
            .modes
            .iter()
            .any(|m| matches!(m.reference, ModeReference::Position(_)));
        if position_mode {
            check_position_conditions(&scenario.gains, &scenario.params, bounds)
        } else {
            check_attitude_conditions(&scenario.gains.attitude, scenario.params.inertia(), bounds)
        }
    });

    let n_steps = (scenario.t_final / scenario.dt).as_f64().round() as usize;
    let mut state = SimState::new(scenario.initial);
    let mut log = ScenarioLog::default();
    let mut runtime = ModeRuntime {
        index: usize::MAX,
        ctrl: PosCtrlState::new(),
        frame_rate: Vector3::zeros(),
        frame_accel: Vector3::zeros(),
    };

    for k in 0..=n_steps {
        let t = scenario.dt * T::from_usize(k).expect("step index fits the scalar");
        let mode_index = scenario.mode_index(t);
        if mode_index != runtime.index {
            if runtime.index != usize::MAX {
                state.translation_integral = Vector3::zeros();
                state.attitude_integral = Vector3::zeros();
            }
            runtime.index = mode_index;
            runtime.ctrl.reset();
            runtime.frame_rate = Vector3::zeros();
            runtime.frame_accel = Vector3::zeros();
        }
        runtime.ctrl.translation_integral = state.translation_integral;
        runtime.ctrl.attitude_integral = state.attitude_integral;

        let reference = scenario.modes[mode_index].reference;
        let record = match reference {
            ModeReference::Attitude(gen) => {
                let cmd = gen.command(t);
                let (psi, e_r, e_w) = attitude_errors(&state.body, &cmd);
                let moment = control_moment(
                    &state.body,
                    &cmd,
                    &AttitudeCtrlState {
                        integral: state.attitude_integral,
                    },
                    &scenario.gains.attitude,
                    scenario.params.inertia(),
                );
                let wrench = ControlWrench {
                    thrust: attitude_mode_thrust(&scenario.params, &state.body.attitude),
                    moment,
                };
                LogRecord {
                    t,
                    state: state.body,
                    wrench,
                    rotor_forces: wrench_to_rotor_forces(&wrench, &scenario.params),
                    psi,
                    attitude_error: e_r,
                    angular_velocity_error: e_w,
                    position_error: Vector3::zeros(),
                    velocity_error: Vector3::zeros(),
                    translation_integral: state.translation_integral,
                    attitude_integral: state.attitude_integral,
                    reference_frame: cmd.rotation,
                    mode: ModeTag::Attitude,
                }
            }
            ModeReference::Position(gen) => {
                let cmd = gen.command(t);
                let out = match crate::position::position_control(
                    &state.body,
                    &cmd,
                    &mut runtime.ctrl,
                    t,
                    &scenario.gains,
                    &scenario.params,
                ) {
                    Ok(out) => out,
                    Err(reason) => {
                        return Ok(ScenarioRun {
                            log,
                            outcome: ScenarioOutcome::Aborted {
                                time: t.as_f64(),
                                reason,
                            },
                            certificate,
                        })
                    }
                };
                let (frame_rate, frame_accel) = commanded_rates(&runtime.ctrl.frames);
                runtime.frame_rate = frame_rate;
                runtime.frame_accel = frame_accel;
                LogRecord {
                    t,
                    state: state.body,
                    wrench: out.wrench,
                    rotor_forces: wrench_to_rotor_forces(&out.wrench, &scenario.params),
                    psi: out.psi,
                    attitude_error: out.attitude_error,
                    angular_velocity_error: out.angular_velocity_error,
                    position_error: out.position_error,
                    velocity_error: out.velocity_error,
                    translation_integral: state.translation_integral,
                    attitude_integral: state.attitude_integral,
                    reference_frame: out.computed_frame,
                    mode: ModeTag::Position,
                }
            }
        };
        log.records.push(record);
        if k == n_steps {
            break;
        }

        let gains = &scenario.gains;
        let params = &scenario.params;
        let frame_rate = runtime.frame_rate;
        let frame_accel = runtime.frame_accel;
        let control = |t_stage: T, s: &SimState<T>| -> Result<ControlEval<T>> {
            match reference {
                ModeReference::Attitude(gen) => {
                    let cmd = gen.command(t_stage);
                    let (_, e_r, e_w) = attitude_errors(&s.body, &cmd);
                    let moment = control_moment(
                        &s.body,
                        &cmd,
                        &AttitudeCtrlState {
                            integral: s.attitude_integral,
                        },
                        &gains.attitude,
                        params.inertia(),
                    );
                    Ok(ControlEval {
                        wrench: ControlWrench {
                            thrust: attitude_mode_thrust(params, &s.body.attitude),
                            moment,
                        },
                        translation_integral_rate: Vector3::zeros(),
                        attitude_integral_rate: integral_rate(&e_r, &e_w, &gains.attitude),
                    })
                }
                ModeReference::Position(gen) => {
                    let cmd = gen.command(t_stage);
                    let out = position_control_with_rates(
                        &s.body,
                        &cmd,
                        &s.translation_integral,
                        &s.attitude_integral,
                        &frame_rate,
                        &frame_accel,
                        gains,
                        params,
                    )?;
                    Ok(ControlEval {
                        wrench: out.wrench,
                        translation_integral_rate: out.translation_integral_rate,
                        attitude_integral_rate: out.attitude_integral_rate,
                    })
                }
            }
        };
        state = match step(&state, t, scenario.dt, params, &scenario.disturbance, &control) {
            Ok(next) => next,
            Err(reason) => {
                return Ok(ScenarioRun {
                    log,
                    outcome: ScenarioOutcome::Aborted {
                        time: t.as_f64(),
                        reason,
                    },
                    certificate,
                })
            }
        };
    }

    Ok(ScenarioRun {
        log,
        outcome: ScenarioOutcome::Completed,
        certificate,
    })
}

/// Flip attitude command `R_d(t) = exp(pi t e3^) exp(4 pi t e2^)` with
/// closed-form rates:
/// `Omega_d = exp(-4 pi t e2^) (pi e3) + 4 pi e2` and
/// `dOmega_d = -4 pi e2 x Omega_d`.
pub fn attitude_command_flip<T: Real>(t: T) -> AttitudeCommand<T> {
    let pi = T::pi();
    let four_pi = T::lit(4.0) * pi;
    let yaw = exp_so3(&(Vector3::z() * (pi * t)));
    let pitch = exp_so3(&(Vector3::y() * (four_pi * t)));
    let rotation = yaw * pitch;
    let omega_d = pitch.transpose() * (Vector3::z() * pi) + Vector3::y() * four_pi;
    let omega_d_dot = -(Vector3::y() * four_pi).cross(&omega_d);
    AttitudeCommand {
        rotation,
        angular_velocity: omega_d,
        angular_acceleration: omega_d_dot,
    }
}

/// 3-2-1 Euler attitude command `roll = (pi/9) sin(pi t)`,
/// `pitch = (pi/9) cos(pi t)`, `yaw = 0`, with the body rates from the
/// standard 3-2-1 kinematic map.
pub fn euler321_command<T: Real>(t: T) -> AttitudeCommand<T> {
    let pi = T::pi();
    let amp = pi / T::lit(9.0);
    let roll = amp * (pi * t).sin();
    let pitch = amp * (pi * t).cos();
    let roll_rate = amp * pi * (pi * t).cos();
    let pitch_rate = -amp * pi * (pi * t).sin();
    let roll_acc = -amp * pi * pi * (pi * t).sin();
    let pitch_acc = -amp * pi * pi * (pi * t).cos();

    // R = Rz(yaw) Ry(pitch) Rx(roll) with yaw identically zero.
    let rotation = exp_so3(&(Vector3::y() * pitch)) * exp_so3(&(Vector3::x() * roll));
    // Body rates for yaw = 0: p = roll', q = pitch' cos(roll),
    // r = -pitch' sin(roll).
    let omega_d = Vector3::new(
        roll_rate,
        pitch_rate * roll.cos(),
        -pitch_rate * roll.sin(),
    );
    let omega_d_dot = Vector3::new(
        roll_acc,
        pitch_acc * roll.cos() - pitch_rate * roll_rate * roll.sin(),
        -pitch_acc * roll.sin() - pitch_rate * roll_rate * roll.cos(),
    );
    AttitudeCommand {
        rotation,
        angular_velocity: omega_d,
        angular_acceleration: omega_d_dot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attitude::AttitudeGains;
    use crate::vehicle::inertial_angular_momentum;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;

    fn params() -> QuadrotorParams<f64> {
        QuadrotorParams::new(
            0.755,
            Matrix3::from_diagonal(&Vector3::new(0.43e-2, 0.43e-2, 1.02e-2)),
            0.169,
            0.0132,
        )
        .unwrap()
    }

    fn zero_control(
        _t: f64,
        _s: &SimState<f64>,
    ) -> crate::error::Result<ControlEval<f64>> {
        Ok(ControlEval::passive(ControlWrench::zero()))
    }

    #[test]
    fn spin_about_principal_axis_matches_exponential() {
        let p = params().with_gravity(0.0).unwrap();
        let mut s = SimState::new(RigidBodyState::at_rest());
        s.body.angular_velocity = Vector3::z();
        let dt = 1e-3;
        for k in 0..1000 {
            s = step(&s, k as f64 * dt, dt, &p, &Disturbance::none(), &zero_control).unwrap();
        }
        let expected = exp_so3(&Vector3::z());
        let diff = (s.body.attitude.matrix() - expected.matrix()).norm();
        assert!(diff < 1e-10, "rotation error {diff:.3e}");
        assert!(s.body.velocity.norm() < 1e-14);
    }

    #[test]
    fn free_body_conserves_angular_momentum() {
        let p = params().with_gravity(0.0).unwrap();
        let mut s = SimState::new(RigidBodyState::at_rest());
        s.body.angular_velocity = Vector3::new(0.37, -0.82, 0.51);
        let pi0 = inertial_angular_momentum(&s.body, &p);
        let dt = 1e-3;
        for k in 0..10_000 {
            s = step(&s, k as f64 * dt, dt, &p, &Disturbance::none(), &zero_control).unwrap();
        }
        let drift = (inertial_angular_momentum(&s.body, &p) - pi0).norm() / pi0.norm();
        assert!(drift < 1e-8, "momentum drift {drift:.3e}");
        assert!(s.body.attitude.orthogonality_error() < 1e-9);
    }

    #[test]
    fn hover_is_stationary_per_step() {
        let p = params();
        let s = SimState::new(RigidBodyState::at_rest());
        let hover = |_t: f64, st: &SimState<f64>| -> crate::error::Result<ControlEval<f64>> {
            Ok(ControlEval::passive(ControlWrench {
                thrust: 0.755 * 9.81 * st.body.attitude.matrix()[(2, 2)],
                moment: Vector3::zeros(),
            }))
        };
        let next = step(&s, 0.0, 1e-3, &p, &Disturbance::none(), &hover).unwrap();
        assert!((next.body.position - s.body.position).norm() < 1e-13);
        assert!((next.body.velocity - s.body.velocity).norm() < 1e-13);
        assert!((next.body.attitude.matrix() - s.body.attitude.matrix()).norm() < 1e-13);
    }

    #[test]
    fn non_finite_state_aborts() {
        let p = params();
        let s = SimState::new(RigidBodyState::at_rest());
        let bad = |_t: f64, _s: &SimState<f64>| -> crate::error::Result<ControlEval<f64>> {
            Ok(ControlEval::passive(ControlWrench {
                thrust: f64::INFINITY,
                moment: Vector3::zeros(),
            }))
        };
        let err = step(&s, 0.0, 1e-3, &p, &Disturbance::none(), &bad).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }));
    }

    #[test]
    fn flip_command_closed_forms() {
        let pi = core::f64::consts::PI;
        let c0 = attitude_command_flip(0.0);
        assert_relative_eq!(*c0.rotation.matrix(), Matrix3::identity(), epsilon = 1e-14);
        assert_relative_eq!(
            c0.angular_velocity,
            Vector3::new(0.0, 4.0 * pi, pi),
            epsilon = 1e-12
        );
        // Half a pitch turn flips the yaw-rate contribution.
        let c = attitude_command_flip(0.25);
        assert_relative_eq!(
            c.angular_velocity,
            Vector3::new(0.0, 4.0 * pi, -pi),
            epsilon = 1e-10
        );
        // |Omega_d| is constant at pi sqrt(17).
        for &t in &[0.0, 0.1, 0.33, 0.4] {
            let cmd = attitude_command_flip(t);
            assert_relative_eq!(
                cmd.angular_velocity.norm(),
                pi * 17f64.sqrt(),
                epsilon = 1e-10
            );
        }
    }

    /// Central-difference check that the command generators satisfy
    /// `R_d' = R_d hat(Omega_d)` and `Omega_d' = dOmega_d`.
    fn check_command_kinematics(f: &dyn Fn(f64) -> AttitudeCommand<f64>, times: &[f64]) {
        let h = 1e-6;
        for &t in times {
            let c = f(t);
            let plus = f(t + h);
            let minus = f(t - h);
            let rdot = (plus.rotation.matrix() - minus.rotation.matrix()) / (2.0 * h);
            let omega_fd = crate::so3::skew_part_vee(&(c.rotation.matrix().transpose() * rdot));
            assert!(
                (omega_fd - c.angular_velocity).norm() < 1e-6,
                "rate mismatch {:.3e} at t = {t}",
                (omega_fd - c.angular_velocity).norm()
            );
            let acc_fd = (plus.angular_velocity - minus.angular_velocity) / (2.0 * h);
            assert!(
                (acc_fd - c.angular_acceleration).norm() < 1e-5,
                "acceleration mismatch {:.3e} at t = {t}",
                (acc_fd - c.angular_acceleration).norm()
            );
        }
    }

    #[test]
    fn flip_command_kinematic_consistency() {
        check_command_kinematics(&|t| attitude_command_flip(t), &[0.05, 0.17, 0.25, 0.39]);
    }

    #[test]
    fn euler321_command_kinematic_consistency() {
        check_command_kinematics(&|t| euler321_command(t), &[0.05, 0.4, 1.3, 1.9]);
    }

    #[test]
    fn euler321_examples() {
        let pi = core::f64::consts::PI;
        // t = 0: pure pitch by pi/9.
        let c = euler321_command(0.0);
        let expected = exp_so3(&(Vector3::y() * (pi / 9.0)));
        assert_relative_eq!(*c.rotation.matrix(), *expected.matrix(), epsilon = 1e-14);
        // Period 2 s.
        for &t in &[0.0, 0.3, 1.1] {
            let a = euler321_command(t);
            let b = euler321_command(t + 2.0);
            assert_relative_eq!(*a.rotation.matrix(), *b.rotation.matrix(), epsilon = 1e-12);
        }
        // Constant rate magnitude pi^2 / 9.
        assert_relative_eq!(
            c.angular_velocity.norm(),
            pi * pi / 9.0,
            epsilon = 1e-12
        );
    }

    fn small_scenario() -> Scenario<f64> {
        Scenario {
            params: params(),
            disturbance: Disturbance::none(),
            gains: PositionGains::new(
                12.8,
                4.22,
                1.28,
                3.6,
                1.0,
                AttitudeGains::new(0.65, 0.11, 0.06, 0.8).unwrap(),
            )
            .unwrap(),
            bounds: None,
            modes: vec![
                FlightMode {
                    start: 0.0,
                    end: 0.1,
                    reference: ModeReference::Attitude(AttitudeReference::Hold(
                        RotationMatrix::identity(),
                    )),
                },
                FlightMode {
                    start: 0.1,
                    end: 0.2,
                    reference: ModeReference::Position(PositionReference::Hover {
                        position: Vector3::zeros(),
                        heading: Vector3::x(),
                    }),
                },
            ],
            initial: RigidBodyState::at_rest(),
            dt: 1e-3,
            t_final: 0.2,
        }
    }

    #[test]
    fn scenario_validation_catches_bad_windows() {
        let mut sc = small_scenario();
        sc.modes[1].start = 0.15;
        assert!(matches!(sc.validate(), Err(Error::InvalidScenario(_))));
        let mut sc = small_scenario();
        sc.t_final = 0.15;
        assert!(sc.validate().is_err());
        let mut sc = small_scenario();
        sc.dt = -1.0;
        assert!(sc.validate().is_err());
    }

    #[test]
    fn mode_switch_resets_integrals_and_keeps_state() {
        let mut sc = small_scenario();
        sc.disturbance = Disturbance {
            force: Vector3::new(-0.05, 0.02, 0.1),
            moment: Vector3::new(0.002, -0.001, -0.0002),
        };
        let run = run_scenario(&sc).unwrap();
        assert!(run.completed());
        let records = &run.log.records;
        assert_eq!(records.len(), 201);
        let switch_idx = records.iter().position(|r| r.mode == ModeTag::Position).unwrap();
        assert_eq!(switch_idx, 100);
        let before = &records[switch_idx - 1];
        let at = &records[switch_idx];
        // Integrals reset at the switch, body state continuous.
        assert!(before.attitude_integral.norm() > 0.0);
        assert_eq!(at.attitude_integral, Vector3::zeros());
        assert_eq!(at.translation_integral, Vector3::zeros());
        assert!((at.state.position - before.state.position).norm() < 1e-2);
        assert!(
            (at.state.attitude.matrix() - before.state.attitude.matrix()).norm() < 1e-2
        );
        // Uniform time grid.
        for (k, r) in records.iter().enumerate() {
            assert_relative_eq!(r.t, k as f64 * sc.dt, epsilon = 1e-12);
        }
    }

    #[test]
    fn csv_round_and_header() {
        let sc = small_scenario();
        let run = run_scenario(&sc).unwrap();
        let text = run.log.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 47);
        assert!(first.ends_with(",attitude"));
        // Deterministic: a second run produces identical bytes.
        let run2 = run_scenario(&sc).unwrap();
        assert_eq!(text, run2.log.to_csv_string());
    }

    #[test]
    fn whole_stack_instantiates_at_f32() {
        let sc = Scenario::<f32> {
            params: crate::scenarios::reference_quadrotor(),
            disturbance: Disturbance::none(),
            gains: crate::scenarios::reference_gains(),
            bounds: None,
            modes: vec![FlightMode {
                start: 0.0,
                end: 0.05,
                reference: ModeReference::Attitude(AttitudeReference::Hold(
                    RotationMatrix::identity(),
                )),
            }],
            initial: RigidBodyState::at_rest(),
            dt: 1e-3,
            t_final: 0.05,
        };
        let run = run_scenario(&sc).unwrap();
        assert!(run.completed());
        assert_eq!(run.log.records.len(), 51);
        assert!(run.log.last().unwrap().state.velocity.norm() < 1e-3);
    }

    #[test]
    fn degenerate_position_command_aborts_with_partial_log() {
        let mut sc = small_scenario();
        sc.modes = vec![FlightMode {
            start: 0.0,
            end: 0.2,
            reference: ModeReference::Position(PositionReference::Hover {
                position: Vector3::zeros(),
                heading: Vector3::x(),
            }),
        }];
        // Start exactly where the proportional term cancels gravity.
        sc.initial.position = Vector3::new(0.0, 0.0, -0.755 * 9.81 / 12.8);
        let run = run_scenario(&sc).unwrap();
        match run.outcome {
            ScenarioOutcome::Aborted { reason, .. } => {
                assert!(matches!(reason, Error::DegenerateForceCommand { .. }))
            }
            _ => panic!("expected abort"),
        }
    }
}
