//! Cross-module invariants: error-dynamics identities, Lyapunov descent in
//! attitude mode, the domain geometry bounds, and the translational residual
//! along a full closed-loop run.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use se3pid::attitude::{attitude_errors, control_moment, AttitudeCtrlState};
use se3pid::position::saturate;
use se3pid::scenarios;
use se3pid::sim::{attitude_command_flip, euler321_command, run_scenario, ModeTag};
use se3pid::so3::{error_function, error_vector, exp_so3, RotationMatrix};
use se3pid::vehicle::{dynamics_derivative, ControlWrench, RigidBodyState};

fn random_rotation(rng: &mut ChaCha8Rng) -> RotationMatrix<f64> {
    let v = Vector3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let axis = if v.norm() > 1e-3 {
        v.normalize()
    } else {
        Vector3::x()
    };
    exp_so3(&(axis * rng.gen_range(0.0..core::f64::consts::PI)))
}

/// d/dt Psi = e_R . e_Omega and |e_R'| <= |e_Omega| along smooth
/// trajectories, checked by central finite differences. The trajectory and
/// command both come from the analytic command generators, which satisfy
/// R' = R hat(Omega) by construction.
#[test]
fn psi_rate_identity_and_error_vector_rate_bound() {
    let h = 1e-6;
    // Body trajectory: the Euler oscillation; command: a slowed-down flip.
    let body = |t: f64| euler321_command(t);
    let cmd = |t: f64| attitude_command_flip(0.05 * t);
    for &t in &[0.2, 0.7, 1.3, 2.1, 2.9] {
        let b = body(t);
        let c = cmd(t);
        // Command rates scale with the inner time derivative.
        let omega_d = c.angular_velocity * 0.05;
        let psi_plus = error_function(&body(t + h).rotation, &cmd(t + h).rotation);
        let psi_minus = error_function(&body(t - h).rotation, &cmd(t - h).rotation);
        let psi_rate_fd = (psi_plus - psi_minus) / (2.0 * h);
        let e_r = error_vector(&b.rotation, &c.rotation);
        let e_w = se3pid::so3::angular_velocity_error(
            &b.rotation,
            &c.rotation,
            &b.angular_velocity,
            &omega_d,
        );
        let expected = e_r.dot(&e_w);
        assert!(
            (psi_rate_fd - expected).abs() < 1e-6 * (1.0 + psi_rate_fd.abs()),
            "t = {t}: dPsi/dt = {psi_rate_fd:.8} vs e_R . e_W = {expected:.8}"
        );
        let e_r_plus = error_vector(&body(t + h).rotation, &cmd(t + h).rotation);
        let rate = (e_r_plus - e_r).norm() / h;
        assert!(
            rate <= e_w.norm() + 1e-3,
            "t = {t}: |e_R'| = {rate:.6} > |e_W| = {:.6}",
            e_w.norm()
        );
    }
}

/// At the equilibrium (e_R, e_Omega, e_I) = (0, 0, Delta_R / k_I) the
/// closed-loop angular acceleration matches the command's exactly.
#[test]
fn attitude_equilibrium_characterization() {
    let params = scenarios::reference_quadrotor::<f64>();
    let gains = scenarios::reference_gains::<f64>().attitude;
    let disturbance = scenarios::reference_disturbance::<f64>();
    for &t in &[0.0, 0.1, 0.27, 0.39] {
        let cmd = attitude_command_flip(t);
        let state = RigidBodyState {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            attitude: cmd.rotation,
            angular_velocity: cmd.angular_velocity,
        };
        let ctrl = AttitudeCtrlState {
            integral: disturbance.moment / gains.k_i,
        };
        let moment = control_moment(&state, &cmd, &ctrl, &gains, params.inertia());
        let d = dynamics_derivative(
            &state,
            &ControlWrench { thrust: 0.0, moment },
            &params,
            &disturbance,
        );
        // e_Omega' = Omega' - d/dt(R^T R_d Omega_d) collapses to
        // Omega' - dOmega_d at the equilibrium.
        let residual = params.inertia() * (d.angular_acceleration - cmd.angular_acceleration);
        assert!(
            residual.norm() < 1e-12,
            "t = {t}: equilibrium residual {:.3e}",
            residual.norm()
        );
    }
}

/// Closed-loop error dynamics identity: with the attitude controller in the
/// loop,
/// `J e_Omega' + k_R e_R + k_W e_W + k_I e_I - Delta_R = (J e_W + d)^ e_W`
/// with `d = (2J - tr(J) I) R^T R_d Omega_d`, and the right side is normal
/// to e_W.
#[test]
fn gyroscopic_form_identity() {
    let params = scenarios::reference_quadrotor::<f64>();
    let gains = scenarios::reference_gains::<f64>().attitude;
    let disturbance = scenarios::reference_disturbance::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let cmd = attitude_command_flip(rng.gen_range(0.0..0.4));
        let state = RigidBodyState {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            attitude: random_rotation(&mut rng),
            angular_velocity: Vector3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ),
        };
        let integral = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let ctrl = AttitudeCtrlState { integral };
        let moment = control_moment(&state, &cmd, &ctrl, &gains, params.inertia());
        let d = dynamics_derivative(
            &state,
            &ControlWrench { thrust: 0.0, moment },
            &params,
            &disturbance,
        );
        let (_, e_r, e_w) = attitude_errors(&state, &cmd);
        let transport = state.attitude.matrix().transpose() * cmd.rotation.matrix();
        let transported_rate = transport * cmd.angular_velocity;
        // e_Omega' = Omega' + Omega x (R^T R_d Omega_d) - R^T R_d dOmega_d.
        let e_w_rate = d.angular_acceleration
            + state.angular_velocity.cross(&transported_rate)
            - transport * cmd.angular_acceleration;
        let lhs = params.inertia() * e_w_rate + e_r * gains.k_r + e_w * gains.k_omega
            + integral * gains.k_i
            - disturbance.moment;
        let j = params.inertia();
        let coupling = (j + j - Matrix3::identity() * j.trace()) * transported_rate;
        let rhs = (j * e_w + coupling).cross(&e_w);
        assert!(
            (lhs - rhs).norm() < 1e-10,
            "identity residual {:.3e}",
            (lhs - rhs).norm()
        );
        assert!(lhs.dot(&e_w).abs() < 1e-10, "not normal to e_W");
    }
}

/// The attitude Lyapunov function V2 is non-increasing along an
/// attitude-mode run whose gains satisfy the certificate.
#[test]
fn attitude_lyapunov_descent() {
    let mut sc = scenarios::euler_attitude::<f64>();
    sc.gains.attitude.k_i = 0.5;
    sc.t_final = 10.0;
    sc.modes[0].end = 10.0;
    let gains = sc.gains.attitude;
    let cert = se3pid::certify::check_attitude_conditions(
        &gains,
        sc.params.inertia(),
        &sc.bounds.unwrap(),
    );
    assert!(cert.all_pass(), "{:?}", cert.violations());
    let dr = sc.disturbance.moment;
    let j = *sc.params.inertia();
    let run = run_scenario(&sc).unwrap();
    assert!(run.completed());
    let v2 = |r: &se3pid::sim::LogRecord<f64>| -> f64 {
        let shifted = r.attitude_integral * gains.k_i - dr;
        0.5 * r.angular_velocity_error.dot(&(j * r.angular_velocity_error))
            + gains.k_r * r.psi
            + gains.c2 * r.attitude_error.dot(&(j * r.angular_velocity_error))
            + 0.5 / gains.k_i * shifted.norm_squared()
    };
    let records = &run.log.records;
    let mut increases = 0usize;
    for pair in records.windows(2) {
        if v2(&pair[1]) > v2(&pair[0]) + 1e-9 {
            increases += 1;
        }
    }
    assert!(
        (increases as f64) < 0.01 * records.len() as f64,
        "V2 increased at {increases} of {} pairs",
        records.len()
    );
}

/// Domain geometry used by the position-mode proof, sampled over random
/// rotation pairs with Psi < 1:
/// `|(e3' Rc' R e3) R e3 - Rc e3| <= |e_R|` and `e3' Rc' R e3 >= 1 - Psi`.
#[test]
fn thrust_axis_geometry_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let e3 = Vector3::z();
    for _ in 0..2000 {
        let rc = random_rotation(&mut rng);
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let axis = if v.norm() > 1e-3 {
            v.normalize()
        } else {
            Vector3::y()
        };
        // Psi = 1 - cos(theta) < 1 iff theta < pi/2.
        let theta = rng.gen_range(0.0..core::f64::consts::FRAC_PI_2 * 0.999);
        let r = rc * exp_so3(&(axis * theta));
        let psi = error_function(&r, &rc);
        assert!(psi < 1.0);
        let e_r = error_vector(&r, &rc);
        let cos_angle = (rc.matrix() * e3).dot(&(r.matrix() * e3));
        let misalignment = (r.matrix() * e3 * cos_angle - rc.matrix() * e3).norm();
        assert!(
            misalignment <= e_r.norm() + 1e-12,
            "misalignment {misalignment:.6} > |e_R| {:.6}",
            e_r.norm()
        );
        assert!(
            cos_angle >= 1.0 - psi - 1e-12,
            "cos {cos_angle:.6} < 1 - Psi {:.6}",
            1.0 - psi
        );
    }
}

/// Translational error dynamics along the flip's position-mode log:
/// `m e_v' + k_x e_x + k_v e_v + k_i sat(e_i) + X - Delta_x = 0` up to the
/// finite-difference truncation of e_v'.
#[test]
fn translational_error_dynamics_residual() {
    let sc = scenarios::flip::<f64>();
    let gains = sc.gains;
    let mass = sc.params.mass();
    let dist = sc.disturbance;
    let run = run_scenario(&sc).unwrap();
    assert!(run.completed());
    let records = &run.log.records;
    // Rotation invariants hold at every logged step of the 4 s run.
    let max_ortho = records
        .iter()
        .map(|r| r.state.attitude.orthogonality_error())
        .fold(0.0, f64::max);
    assert!(max_ortho < 1e-9, "orthogonality drift {max_ortho:.3e}");
    let e3 = Vector3::z();
    let dt = sc.dt;
    let mut max_residual = 0.0f64;
    let mut checked = 0usize;
    for idx in 1..records.len() - 1 {
        let (prev, r, next) = (&records[idx - 1], &records[idx], &records[idx + 1]);
        // Interior position-mode records only (central stencil must not
        // straddle the mode switch, and the first two position-mode steps
        // run with warm-up rates).
        if prev.mode != ModeTag::Position || next.mode != ModeTag::Position || r.t < 0.45 {
            continue;
        }
        let ev_rate = (next.velocity_error - prev.velocity_error) / (2.0 * dt);
        let body_axis = r.state.attitude.matrix() * e3;
        let frame_axis = r.reference_frame.matrix() * e3;
        let cos_angle = frame_axis.dot(&body_axis);
        let x = (body_axis * cos_angle - frame_axis) * (r.wrench.thrust / cos_angle);
        let residual = ev_rate * mass
            + r.position_error * gains.k_x
            + r.velocity_error * gains.k_v
            + saturate(&r.translation_integral, gains.sigma) * gains.k_i
            + x
            - dist.force;
        max_residual = max_residual.max(residual.norm());
        checked += 1;
    }
    assert!(checked > 3000);
    // The residual is the O(dt^2) truncation of the central difference; at
    // dt = 1e-3 with |e_v'''| of order 1e3 early in the transient this is
    // comfortably below 1e-2 N.
    assert!(
        max_residual < 1e-2,
        "max residual {max_residual:.3e} over {checked} records"
    );
}

/// The integral rate of the attitude loop tends to zero as the flip's
/// position phase converges.
#[test]
fn integral_rate_settles() {
    let sc = scenarios::flip::<f64>();
    let c2 = sc.gains.attitude.c2;
    let run = run_scenario(&sc).unwrap();
    let last = run.log.last().unwrap();
    let rate = last.angular_velocity_error + last.attitude_error * c2;
    let early = &run.log.records[450];
    let early_rate = early.angular_velocity_error + early.attitude_error * c2;
    assert!(rate.norm() < 0.1 * early_rate.norm());
}
