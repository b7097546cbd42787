//! Gain certifier: evaluates every sufficient stability condition of the two
//! controllers and the associated Lyapunov 2x2 matrices, producing a
//! machine-readable certificate.
//!
//! All inequalities are strict, evaluated with no epsilon slack; boundary
//! cases fail. A certificate is a pure function of its inputs: identical
//! inputs render to identical text.

use nalgebra::{Matrix2, Matrix3};

use crate::attitude::AttitudeGains;
use crate::error::{Error, Result};
use crate::position::PositionGains;
use crate::real::Real;
use crate::vehicle::QuadrotorParams;

/// Problem bounds the conditions are evaluated against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainBounds<T: Real> {
    /// Bound on the commanded acceleration term `|-m g e3 + m xdd_d|` (N).
    pub b1: T,
    /// Bound on `|2J - tr(J) I| |Omega_d|`.
    pub b2: T,
    /// Bound on the infinity norm of the translational disturbance (N).
    pub delta_x: T,
    /// Initial attitude error bound for the position mode, in (0, 1).
    pub psi1: T,
    /// Attitude error bound for the exponential-stability domain, in (0, 2).
    pub psi2: T,
    /// Initial position error bound (m).
    pub e_x_max: T,
}

impl<T: Real> GainBounds<T> {
    pub fn validate(&self) -> Result<()> {
        let all_pos = self.b1 > T::zero()
            && self.b2 >= T::zero()
            && self.delta_x > T::zero()
            && self.e_x_max > T::zero();
        let psi_ok = self.psi1 > T::zero()
            && self.psi1 < T::one()
            && self.psi2 > T::zero()
            && self.psi2 < T::lit(2.0);
        if all_pos && psi_ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "bounds must be positive with psi1 < 1 and psi2 < 2".into(),
            ))
        }
    }
}

/// `B2 = |2J - tr(J) I|_2 * omega_d_max`, the tight choice for a declared
/// angular-rate bound.
pub fn compute_b2<T: Real>(inertia: &Matrix3<T>, omega_d_max: T) -> T {
    let tr = inertia.trace();
    let eigs = inertia.symmetric_eigenvalues();
    // 2J - tr(J) I is symmetric with eigenvalues 2 lambda_i - tr(J); its
    // 2-norm is the largest magnitude among them.
    let norm = eigs
        .iter()
        .map(|l| (*l + *l - tr).abs())
        .fold(T::zero(), T::max);
    norm * omega_d_max
}

/// Closed-form eigenvalues of a symmetric 2x2 matrix, `(min, max)`.
pub fn eig2<T: Real>(m: &Matrix2<T>) -> Result<(T, T)> {
    let asym = (m[(0, 1)] - m[(1, 0)]).abs();
    if asym > T::lit(1e-12) {
        return Err(Error::NotSymmetric {
            asymmetry: asym.as_f64(),
        });
    }
    let half = T::lit(0.5);
    let mean = (m[(0, 0)] + m[(1, 1)]) * half;
    let radius = (((m[(0, 0)] - m[(1, 1)]) * half).powi(2) + m[(0, 1)] * m[(1, 0)]).sqrt();
    Ok((mean - radius, mean + radius))
}

/// Spectral norm of a 2x2 matrix via the eigenvalues of `M^T M`.
pub fn spectral_norm_2x2<T: Real>(m: &Matrix2<T>) -> T {
    let mtm = m.transpose() * m;
    let (_, max) = eig2(&mtm).expect("M^T M is symmetric");
    max.max(T::zero()).sqrt()
}

/// A named strict scalar inequality together with its operands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarCondition<T: Real> {
    pub name: &'static str,
    /// `Less`: pass iff lhs < rhs. `Greater`: pass iff lhs > rhs.
    pub relation: Relation,
    pub lhs: T,
    pub rhs: T,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Less,
    Greater,
}

impl Relation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Less => "lt",
            Relation::Greater => "gt",
        }
    }
}

fn scalar<T: Real>(name: &'static str, relation: Relation, lhs: T, rhs: T) -> ScalarCondition<T> {
    let pass = match relation {
        Relation::Less => lhs < rhs,
        Relation::Greater => lhs > rhs,
    };
    ScalarCondition {
        name,
        relation,
        lhs,
        rhs,
        pass,
    }
}

/// A named 2x2 matrix with its eigenvalues and positive-definiteness verdict.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixCondition<T: Real> {
    pub name: &'static str,
    pub matrix: Matrix2<T>,
    pub eig_min: T,
    pub eig_max: T,
    pub pass: bool,
}

fn matrix_condition<T: Real>(name: &'static str, matrix: Matrix2<T>) -> MatrixCondition<T> {
    let (eig_min, eig_max) = eig2(&matrix).expect("certificate matrices are symmetric");
    MatrixCondition {
        name,
        matrix,
        eig_min,
        eig_max,
        pass: eig_min > T::zero(),
    }
}

/// Which controller the certificate covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    Attitude,
    Position,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::Attitude => "attitude",
            CertificateKind::Position => "position",
        }
    }
}

/// Evaluated stability certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate<T: Real> {
    pub kind: CertificateKind,
    /// `alpha = sqrt(psi1 (2 - psi1))`; position certificates only.
    pub alpha: Option<T>,
    pub b2: T,
    /// Spectral norm of the coupling matrix W12; position certificates only.
    pub w12: Option<(Matrix2<T>, T)>,
    pub scalars: Vec<ScalarCondition<T>>,
    pub matrices: Vec<MatrixCondition<T>>,
}

impl<T: Real> Certificate<T> {
    pub fn all_pass(&self) -> bool {
        self.scalars.iter().all(|c| c.pass) && self.matrices.iter().all(|m| m.pass)
    }

    /// Names of the violated conditions, in evaluation order.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for c in &self.scalars {
            if !c.pass {
                out.push(c.name);
            }
        }
        for m in &self.matrices {
            if !m.pass {
                out.push(m.name);
            }
        }
        out
    }
}

fn m21<T: Real>(gains: &AttitudeGains<T>, lambda_min: T, lambda_max: T) -> Matrix2<T> {
    let half = T::lit(0.5);
    let c = -gains.c2 * lambda_max;
    Matrix2::new(gains.k_r, c, c, lambda_min) * half
}

fn m22<T: Real>(gains: &AttitudeGains<T>, lambda_max: T, psi: T) -> Matrix2<T> {
    let half = T::lit(0.5);
    let c = gains.c2 * lambda_max;
    Matrix2::new(
        (gains.k_r + gains.k_r) / (T::lit(2.0) - psi),
        c,
        c,
        lambda_max,
    ) * half
}

fn w2<T: Real>(gains: &AttitudeGains<T>, lambda_max: T, b2: T) -> Matrix2<T> {
    let c = -gains.c2 * T::lit(0.5) * (gains.k_omega + b2);
    Matrix2::new(
        gains.c2 * gains.k_r,
        c,
        c,
        gains.k_omega - T::lit(2.0) * gains.c2 * lambda_max,
    )
}

/// Upper bound on `c2` from the attitude stability condition:
/// `c2 < min{ sqrt(k_r lam_min)/lam_max, 4 k_omega / (8 k_r lam_max + (k_omega + B2)^2) }`.
fn c2_bound<T: Real>(gains: &AttitudeGains<T>, lambda_min: T, lambda_max: T, b2: T) -> T {
    let first = (gains.k_r * lambda_min).sqrt() / lambda_max;
    let second = T::lit(4.0) * gains.k_omega
        / (T::lit(8.0) * gains.k_r * lambda_max + (gains.k_omega + b2).powi(2));
    first.min(second)
}

/// Evaluates the attitude-mode conditions: the `c2` bound plus positive
/// definiteness of `M21`, `M22` (with `psi2`), and `W2`.
pub fn check_attitude_conditions<T: Real>(
    gains: &AttitudeGains<T>,
    inertia: &Matrix3<T>,
    bounds: &GainBounds<T>,
) -> Certificate<T> {
    let eigs = inertia.symmetric_eigenvalues();
    let (lambda_min, lambda_max) = (eigs.min(), eigs.max());
    let scalars = vec![scalar(
        "eq_c2",
        Relation::Less,
        gains.c2,
        c2_bound(gains, lambda_min, lambda_max, bounds.b2),
    )];
    let matrices = vec![
        matrix_condition("M21", m21(gains, lambda_min, lambda_max)),
        matrix_condition("M22", m22(gains, lambda_max, bounds.psi2)),
        matrix_condition("W2", w2(gains, lambda_max, bounds.b2)),
    ];
    Certificate {
        kind: CertificateKind::Attitude,
        alpha: None,
        b2: bounds.b2,
        w12: None,
        scalars,
        matrices,
    }
}

/// Evaluates the full position-mode conditions: integral authority, the `c1`
/// and `c2` bounds, the coupling inequality, and positive definiteness of
/// `M11`, `M12`, `M21`, `M22'` (with `psi1`), `W1`, `W2`, and the composite
/// `W`.
pub fn check_position_conditions<T: Real>(
    gains: &PositionGains<T>,
    params: &QuadrotorParams<T>,
    bounds: &GainBounds<T>,
) -> Certificate<T> {
    let one = T::one();
    let half = T::lit(0.5);
    let mass = params.mass();
    let (lambda_min, lambda_max) = params.inertia_eigen_range();
    let alpha = (bounds.psi1 * (T::lit(2.0) - bounds.psi1)).sqrt();

    let ki_sigma = gains.k_i * gains.sigma;

    // c1 < min{ 4 k_x k_v (1-a)^2 / (k_v^2 (1+a)^2 + 4 m k_x (1-a)), sqrt(k_x/m) }
    let c1_first = T::lit(4.0) * gains.k_x * gains.k_v * (one - alpha).powi(2)
        / (gains.k_v.powi(2) * (one + alpha).powi(2)
            + T::lit(4.0) * mass * gains.k_x * (one - alpha));
    let c1_bound = c1_first.min((gains.k_x / mass).sqrt());

    let w1_offdiag = -gains.c1 * gains.k_v * half * (one + alpha);
    let w1 = Matrix2::new(
        gains.c1 * gains.k_x * (one - alpha),
        w1_offdiag,
        w1_offdiag,
        gains.k_v * (one - alpha) - mass * gains.c1,
    );
    let sqrt3 = T::lit(3.0).sqrt();
    let w12 = Matrix2::new(
        gains.c1 * (sqrt3 * ki_sigma + bounds.b1),
        T::zero(),
        ki_sigma + bounds.b1 + gains.k_x * bounds.e_x_max,
        T::zero(),
    );
    let w12_norm = spectral_norm_2x2(&w12);
    let w2m = w2(&gains.attitude, lambda_max, bounds.b2);

    let (w1_min, _) = eig2(&w1).expect("W1 symmetric");
    let (w2_min, _) = eig2(&w2m).expect("W2 symmetric");
    let coupling_off = -half * w12_norm;
    let w_composite = Matrix2::new(w1_min, coupling_off, coupling_off, w2_min);

    let m11_off = -mass * gains.c1;
    let m11 = Matrix2::new(gains.k_x, m11_off, m11_off, mass) * half;
    let m12 = Matrix2::new(gains.k_x, -m11_off, -m11_off, mass) * half;

    let scalars = vec![
        scalar("eq_ki_sigma", Relation::Greater, ki_sigma, bounds.delta_x),
        scalar("eq_c1", Relation::Less, gains.c1, c1_bound),
        scalar(
            "eq_c2",
            Relation::Less,
            gains.attitude.c2,
            c2_bound(&gains.attitude, lambda_min, lambda_max, bounds.b2),
        ),
        scalar(
            "eq_coupling",
            Relation::Greater,
            w2_min,
            w12_norm.powi(2) / (T::lit(4.0) * w1_min),
        ),
    ];
    let matrices = vec![
        matrix_condition("M11", m11),
        matrix_condition("M12", m12),
        matrix_condition("M21", m21(&gains.attitude, lambda_min, lambda_max)),
        matrix_condition("M22p", m22(&gains.attitude, lambda_max, bounds.psi1)),
        matrix_condition("W1", w1),
        matrix_condition("W2", w2m),
        matrix_condition("W", w_composite),
    ];
    Certificate {
        kind: CertificateKind::Position,
        alpha: Some(alpha),
        b2: bounds.b2,
        w12: Some((w12, w12_norm)),
        scalars,
        matrices,
    }
}

fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v)
}

impl<T: Real> Certificate<T> {
    /// Renders the certificate as `key: value` lines (matrices row-major,
    /// verdicts PASS/FAIL). Deterministic for identical inputs.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("certificate.kind: {}\n", self.kind.as_str()));
        if let Some(alpha) = self.alpha {
            out.push_str(&format!("certificate.alpha: {}\n", fmt_real(alpha)));
        }
        out.push_str(&format!("certificate.b2: {}\n", fmt_real(self.b2)));
        for c in &self.scalars {
            out.push_str(&format!("cond.{}.relation: {}\n", c.name, c.relation.as_str()));
            out.push_str(&format!("cond.{}.lhs: {}\n", c.name, fmt_real(c.lhs)));
            out.push_str(&format!("cond.{}.rhs: {}\n", c.name, fmt_real(c.rhs)));
            out.push_str(&format!(
                "cond.{}.verdict: {}\n",
                c.name,
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
        if let Some((w12, norm)) = &self.w12 {
            out.push_str(&format!(
                "mat.W12.row_major: {} {} {} {}\n",
                fmt_real(w12[(0, 0)]),
                fmt_real(w12[(0, 1)]),
                fmt_real(w12[(1, 0)]),
                fmt_real(w12[(1, 1)])
            ));
            out.push_str(&format!("mat.W12.norm2: {}\n", fmt_real(*norm)));
        }
        for m in &self.matrices {
            out.push_str(&format!(
                "mat.{}.row_major: {} {} {} {}\n",
                m.name,
                fmt_real(m.matrix[(0, 0)]),
                fmt_real(m.matrix[(0, 1)]),
                fmt_real(m.matrix[(1, 0)]),
                fmt_real(m.matrix[(1, 1)])
            ));
            out.push_str(&format!("mat.{}.eig_min: {}\n", m.name, fmt_real(m.eig_min)));
            out.push_str(&format!("mat.{}.eig_max: {}\n", m.name, fmt_real(m.eig_max)));
            out.push_str(&format!(
                "mat.{}.verdict: {}\n",
                m.name,
                if m.pass { "PASS" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "certificate.verdict: {}\n",
            if self.all_pass() { "PASS" } else { "FAIL" }
        ));
        let violations = self.violations();
        if violations.is_empty() {
            out.push_str("certificate.violations: none\n");
        } else {
            out.push_str(&format!("certificate.violations: {}\n", violations.join(" ")));
        }
        out
    }
}

/// Certificate re-parsed from rendered text (always at `f64`). Used to verify
/// that rendered verdicts can be recomputed from the rendered matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCertificate {
    pub kind: String,
    pub alpha: Option<f64>,
    pub b2: f64,
    pub scalars: Vec<(String, String, f64, f64, bool)>,
    pub matrices: Vec<(String, Matrix2<f64>, f64, f64, bool)>,
    pub overall: bool,
}

impl ParsedCertificate {
    pub fn parse(text: &str) -> Result<Self> {
        use std::collections::BTreeMap;
        let mut fields: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| Error::MalformedCertificate(format!("no colon in {line:?}")))?;
            fields.push((key.trim().to_string(), value.trim().to_string()));
        }
        let get = |name: &str| -> Option<&str> {
            fields
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.as_str())
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::MalformedCertificate(format!("bad float {s:?}: {e}")))
        };
        let kind = get("certificate.kind")
            .ok_or_else(|| Error::MalformedCertificate("missing kind".into()))?
            .to_string();
        let alpha = match get("certificate.alpha") {
            Some(s) => Some(parse_f(s)?),
            None => None,
        };
        let b2 = parse_f(
            get("certificate.b2")
                .ok_or_else(|| Error::MalformedCertificate("missing b2".into()))?,
        )?;
        // Group cond.* and mat.* fields by their middle segment, preserving
        // first-seen order.
        let mut cond_order: Vec<String> = Vec::new();
        let mut mat_order: Vec<String> = Vec::new();
        let mut grouped: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (k, v) in &fields {
            let parts: Vec<&str> = k.splitn(3, '.').collect();
            if parts.len() == 3 && (parts[0] == "cond" || parts[0] == "mat") {
                let id = format!("{}.{}", parts[0], parts[1]);
                if parts[0] == "cond" && !cond_order.contains(&id) {
                    cond_order.push(id.clone());
                }
                if parts[0] == "mat" && !mat_order.contains(&id) {
                    mat_order.push(id.clone());
                }
                grouped
                    .entry(id)
                    .or_default()
                    .insert(parts[2].to_string(), v.clone());
            }
        }
        let mut scalars = Vec::new();
        for id in &cond_order {
            let g = &grouped[id];
            let name = id.trim_start_matches("cond.").to_string();
            let missing = |what: &str| Error::MalformedCertificate(format!("{id} missing {what}"));
            scalars.push((
                name,
                g.get("relation").ok_or_else(|| missing("relation"))?.clone(),
                parse_f(g.get("lhs").ok_or_else(|| missing("lhs"))?)?,
                parse_f(g.get("rhs").ok_or_else(|| missing("rhs"))?)?,
                g.get("verdict").ok_or_else(|| missing("verdict"))? == "PASS",
            ));
        }
        let mut matrices = Vec::new();
        for id in &mat_order {
            let g = &grouped[id];
            let name = id.trim_start_matches("mat.").to_string();
            let missing = |what: &str| Error::MalformedCertificate(format!("{id} missing {what}"));
            let row_major = g.get("row_major").ok_or_else(|| missing("row_major"))?;
            let entries: Vec<f64> = row_major
                .split_whitespace()
                .map(parse_f)
                .collect::<Result<_>>()?;
            if entries.len() != 4 {
                return Err(Error::MalformedCertificate(format!(
                    "{id} row_major has {} entries",
                    entries.len()
                )));
            }
            let m = Matrix2::new(entries[0], entries[1], entries[2], entries[3]);
            if name == "W12" {
                // Informational only: no eigenvalues/verdict rendered.
                continue;
            }
            matrices.push((
                name,
                m,
                parse_f(g.get("eig_min").ok_or_else(|| missing("eig_min"))?)?,
                parse_f(g.get("eig_max").ok_or_else(|| missing("eig_max"))?)?,
                g.get("verdict").ok_or_else(|| missing("verdict"))? == "PASS",
            ));
        }
        let overall = get("certificate.verdict")
            .ok_or_else(|| Error::MalformedCertificate("missing overall verdict".into()))?
            == "PASS";
        Ok(Self {
            kind,
            alpha,
            b2,
            scalars,
            matrices,
            overall,
        })
    }
}
