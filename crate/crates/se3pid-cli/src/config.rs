//! Scenario configuration: flat sectioned `key = value` text with dotted
//! override flags.
//!
//! Sections: `[vehicle]`, `[gains]`, `[integration]` (required);
//! `[disturbance]`, `[bounds]`, `[initial]`, `[output]` (optional); one
//! `[mode]` section per flight-mode window, in order. Every key must be
//! known: unknown sections or keys are errors, so typos never pass silently.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use se3pid::attitude::AttitudeGains;
use se3pid::certify::{compute_b2, GainBounds};
use se3pid::position::PositionGains;
use se3pid::sim::{
    AttitudeReference, FlightMode, ModeReference, PositionReference, Scenario,
};
use se3pid::so3::RotationMatrix;
use se3pid::vehicle::{Disturbance, QuadrotorParams, RigidBodyState};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// One parsed section: name plus key/value pairs in file order.
#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<(String, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<String> {
        let idx = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(idx).1)
    }

    fn finish(self) -> Result<()> {
        if let Some((key, _)) = self.entries.first() {
            return err(format!("unknown key '{key}' in [{}]", self.name));
        }
        Ok(())
    }
}

/// Raw parsed config: ordered sections, possibly repeated (`[mode]`).
#[derive(Debug, Clone)]
pub struct RawConfig {
    sections: Vec<Section>,
}

const KNOWN_SECTIONS: &[&str] = &[
    "vehicle",
    "disturbance",
    "gains",
    "bounds",
    "initial",
    "integration",
    "output",
    "mode",
];

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.split_once('#') {
                Some((content, _)) => content.trim(),
                None => raw_line.trim(),
            };
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError(format!("line {}: malformed section header", lineno + 1)))?
                    .trim()
                    .to_string();
                if !KNOWN_SECTIONS.contains(&name.as_str()) {
                    return err(format!("line {}: unknown section [{name}]", lineno + 1));
                }
                sections.push(Section {
                    name,
                    line: lineno + 1,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let section = sections
                .last_mut()
                .ok_or_else(|| ConfigError(format!("line {}: key before any section", lineno + 1)))?;
            section
                .entries
                .push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(Self { sections })
    }

    /// Applies a `section.key=value` override, replacing an existing key or
    /// inserting a new one. `[mode]` sections are not addressable.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("override '{spec}': expected SECTION.KEY=VALUE")))?;
        let (section_name, key) = path
            .split_once('.')
            .ok_or_else(|| ConfigError(format!("override '{spec}': expected SECTION.KEY=VALUE")))?;
        if section_name == "mode" {
            return err("overrides cannot address [mode] sections");
        }
        if !KNOWN_SECTIONS.contains(&section_name) {
            return err(format!("override '{spec}': unknown section '{section_name}'"));
        }
        let section = match self.sections.iter_mut().find(|s| s.name == section_name) {
            Some(s) => s,
            None => {
                self.sections.push(Section {
                    name: section_name.to_string(),
                    line: 0,
                    entries: Vec::new(),
                });
                self.sections.last_mut().unwrap()
            }
        };
        match section.entries.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v = value.trim().to_string(),
            None => section
                .entries
                .push((key.trim().to_string(), value.trim().to_string())),
        }
        Ok(())
    }
}

fn parse_scalar(section: &str, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| ConfigError(format!("[{section}] {key}: '{value}' is not a number")))
}

fn parse_numbers(section: &str, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("[{section}] {key}: '{}' is not a number", s.trim())))
        })
        .collect()
}

fn parse_vec3(section: &str, key: &str, value: &str) -> Result<Vector3<f64>> {
    let nums = parse_numbers(section, key, value)?;
    if nums.len() != 3 {
        return err(format!(
            "[{section}] {key}: expected 3 comma-separated values, got {}",
            nums.len()
        ));
    }
    Ok(Vector3::new(nums[0], nums[1], nums[2]))
}

fn parse_inertia(section: &str, key: &str, value: &str) -> Result<Matrix3<f64>> {
    let nums = parse_numbers(section, key, value)?;
    match nums.len() {
        3 => Ok(Matrix3::from_diagonal(&Vector3::new(nums[0], nums[1], nums[2]))),
        9 => Ok(Matrix3::from_row_slice(&nums)),
        n => err(format!(
            "[{section}] {key}: expected 3 (diagonal) or 9 (row-major) values, got {n}"
        )),
    }
}

fn parse_rotation(section: &str, key: &str, value: &str) -> Result<RotationMatrix<f64>> {
    if value == "identity" {
        return Ok(RotationMatrix::identity());
    }
    let nums = parse_numbers(section, key, value)?;
    if nums.len() != 9 {
        return err(format!(
            "[{section}] {key}: expected 'identity' or 9 row-major values"
        ));
    }
    RotationMatrix::try_new(Matrix3::from_row_slice(&nums))
        .map_err(|e| ConfigError(format!("[{section}] {key}: {e}")))
}

fn required(section: &mut Section, key: &str) -> Result<String> {
    section
        .take(key)
        .ok_or_else(|| ConfigError(format!("[{}] is missing required key '{key}'", section.name)))
}

/// Fully validated scenario plus the output path from `[output]`.
#[derive(Debug)]
pub struct ScenarioConfig {
    pub scenario: Scenario<f64>,
    pub csv_path: Option<String>,
}

pub fn build_scenario(mut raw: RawConfig) -> Result<ScenarioConfig> {
    // Reject duplicate non-mode sections up front.
    let mut seen = BTreeSet::new();
    for s in &raw.sections {
        if s.name != "mode" && !seen.insert(s.name.clone()) {
            return err(format!("duplicate section [{}] (line {})", s.name, s.line));
        }
    }

    let mut take_section = |name: &str| -> Option<Section> {
        let idx = raw.sections.iter().position(|s| s.name == name)?;
        Some(raw.sections.remove(idx))
    };

    // [vehicle]
    let mut vehicle = take_section("vehicle")
        .ok_or_else(|| ConfigError("missing required section [vehicle]".into()))?;
    let mass = parse_scalar("vehicle", "m", &required(&mut vehicle, "m")?)?;
    let inertia = parse_inertia("vehicle", "J", &required(&mut vehicle, "J")?)?;
    let arm = parse_scalar("vehicle", "d", &required(&mut vehicle, "d")?)?;
    let ctf = parse_scalar("vehicle", "c_tau_f", &required(&mut vehicle, "c_tau_f")?)?;
    let gravity = match vehicle.take("g") {
        Some(v) => Some(parse_scalar("vehicle", "g", &v)?),
        None => None,
    };
    vehicle.finish()?;
    let mut params = QuadrotorParams::new(mass, inertia, arm, ctf)
        .map_err(|e| ConfigError(format!("[vehicle]: {e}")))?;
    if let Some(g) = gravity {
        params = params
            .with_gravity(g)
            .map_err(|e| ConfigError(format!("[vehicle] g: {e}")))?;
    }

    // [disturbance]
    let disturbance = match take_section("disturbance") {
        Some(mut s) => {
            let force = match s.take("Delta_x") {
                Some(v) => parse_vec3("disturbance", "Delta_x", &v)?,
                None => Vector3::zeros(),
            };
            let moment = match s.take("Delta_R") {
                Some(v) => parse_vec3("disturbance", "Delta_R", &v)?,
                None => Vector3::zeros(),
            };
            s.finish()?;
            Disturbance { force, moment }
        }
        None => Disturbance::none(),
    };

    // [gains]
    let mut g = take_section("gains")
        .ok_or_else(|| ConfigError("missing required section [gains]".into()))?;
    let k_x = parse_scalar("gains", "k_x", &required(&mut g, "k_x")?)?;
    let k_v = parse_scalar("gains", "k_v", &required(&mut g, "k_v")?)?;
    let k_i = parse_scalar("gains", "k_i", &required(&mut g, "k_i")?)?;
    let k_r = parse_scalar("gains", "k_R", &required(&mut g, "k_R")?)?;
    let k_omega = parse_scalar("gains", "k_Omega", &required(&mut g, "k_Omega")?)?;
    let k_i_att = parse_scalar("gains", "k_I", &required(&mut g, "k_I")?)?;
    let c1 = parse_scalar("gains", "c1", &required(&mut g, "c1")?)?;
    let c2 = parse_scalar("gains", "c2", &required(&mut g, "c2")?)?;
    let sigma = parse_scalar("gains", "sigma", &required(&mut g, "sigma")?)?;
    g.finish()?;
    let attitude_gains = AttitudeGains::new(k_r, k_omega, k_i_att, c2)
        .map_err(|e| ConfigError(format!("[gains]: {e}")))?;
    let gains = PositionGains::new(k_x, k_v, k_i, c1, sigma, attitude_gains)
        .map_err(|e| ConfigError(format!("[gains]: {e}")))?;

    // [bounds]
    let bounds = match take_section("bounds") {
        Some(mut s) => {
            let b1 = parse_scalar("bounds", "B1", &required(&mut s, "B1")?)?;
            let omega_d_max =
                parse_scalar("bounds", "omega_d_max", &required(&mut s, "omega_d_max")?)?;
            let delta_x = parse_scalar("bounds", "delta_x", &required(&mut s, "delta_x")?)?;
            let psi1 = parse_scalar("bounds", "psi1", &required(&mut s, "psi1")?)?;
            let psi2 = parse_scalar("bounds", "psi2", &required(&mut s, "psi2")?)?;
            let e_x_max = parse_scalar("bounds", "e_x_max", &required(&mut s, "e_x_max")?)?;
            s.finish()?;
            let b = GainBounds {
                b1,
                b2: compute_b2(params.inertia(), omega_d_max),
                delta_x,
                psi1,
                psi2,
                e_x_max,
            };
            b.validate().map_err(|e| ConfigError(format!("[bounds]: {e}")))?;
            Some(b)
        }
        None => None,
    };

    // [initial]
    let initial = match take_section("initial") {
        Some(mut s) => {
            let mut state = RigidBodyState::at_rest();
            if let Some(v) = s.take("x") {
                state.position = parse_vec3("initial", "x", &v)?;
            }
            if let Some(v) = s.take("v") {
                state.velocity = parse_vec3("initial", "v", &v)?;
            }
            if let Some(v) = s.take("Omega") {
                state.angular_velocity = parse_vec3("initial", "Omega", &v)?;
            }
            if let Some(v) = s.take("R") {
                state.attitude = parse_rotation("initial", "R", &v)?;
            }
            s.finish()?;
            state
        }
        None => RigidBodyState::at_rest(),
    };

    // [integration]
    let mut integ = take_section("integration")
        .ok_or_else(|| ConfigError("missing required section [integration]".into()))?;
    let dt = parse_scalar("integration", "dt", &required(&mut integ, "dt")?)?;
    let t_final = parse_scalar("integration", "t_final", &required(&mut integ, "t_final")?)?;
    integ.finish()?;

    // [output]
    let csv_path = match take_section("output") {
        Some(mut s) => {
            let path = s.take("csv");
            s.finish()?;
            path
        }
        None => None,
    };

    // [mode] sections, in order.
    let mut modes = Vec::new();
    while let Some(mut s) = take_section("mode") {
        let kind = required(&mut s, "type")?;
        let start = parse_scalar("mode", "t_start", &required(&mut s, "t_start")?)?;
        let end = parse_scalar("mode", "t_end", &required(&mut s, "t_end")?)?;
        let reference = match kind.as_str() {
            "attitude_flip" => ModeReference::Attitude(AttitudeReference::Flip),
            "attitude_euler321" => ModeReference::Attitude(AttitudeReference::Euler321),
            "attitude_hold" => {
                let r = parse_rotation("mode", "R_d", &required(&mut s, "R_d")?)?;
                ModeReference::Attitude(AttitudeReference::Hold(r))
            }
            "position_hover" => {
                let position = parse_vec3("mode", "x_d", &required(&mut s, "x_d")?)?;
                let heading = parse_vec3("mode", "b_1d", &required(&mut s, "b_1d")?)?;
                let norm = heading.norm();
                if (norm - 1.0).abs() > 1e-6 {
                    return err(format!("[mode] b_1d must be a unit vector (norm {norm})"));
                }
                ModeReference::Position(PositionReference::Hover { position, heading })
            }
            other => {
                return err(format!(
                    "[mode] type '{other}' is not one of attitude_flip, attitude_euler321, \
                     attitude_hold, position_hover"
                ))
            }
        };
        s.finish()?;
        modes.push(FlightMode {
            start,
            end,
            reference,
        });
    }
    if let Some(s) = raw.sections.first() {
        return err(format!("unhandled section [{}]", s.name));
    }

    let scenario = Scenario {
        params,
        disturbance,
        gains,
        bounds,
        modes,
        initial,
        dt,
        t_final,
    };
    scenario
        .validate()
        .map_err(|e| ConfigError(e.to_string()))?;
    Ok(ScenarioConfig { scenario, csv_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[vehicle]
m = 0.755
J = 0.0043, 0.0043, 0.0102
d = 0.169
c_tau_f = 0.0132

[gains]
k_x = 12.8
k_v = 4.22
k_i = 1.28
k_R = 0.65
k_Omega = 0.11
k_I = 0.06
c1 = 3.6
c2 = 0.8
sigma = 1.0

[integration]
dt = 0.001
t_final = 0.2

[mode]
type = position_hover
t_start = 0.0
t_end = 0.2
x_d = 0, 0, 0
b_1d = 1, 0, 0
";

    #[test]
    fn minimal_config_builds() {
        let raw = RawConfig::parse(MINIMAL).unwrap();
        let cfg = build_scenario(raw).unwrap();
        assert_eq!(cfg.scenario.modes.len(), 1);
        assert_eq!(cfg.scenario.params.mass(), 0.755);
        assert!(cfg.scenario.bounds.is_none());
        assert!(cfg.csv_path.is_none());
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = MINIMAL.replace("m = 0.755", "m = 0.755\nmass_typo = 1.0");
        let raw = RawConfig::parse(&text).unwrap();
        let e = build_scenario(raw).unwrap_err();
        assert!(e.0.contains("mass_typo"), "{e}");
    }

    #[test]
    fn unknown_section_is_an_error() {
        let text = format!("{MINIMAL}\n[rotors]\nn = 4\n");
        assert!(RawConfig::parse(&text).is_err());
    }

    #[test]
    fn overrides_replace_and_insert() {
        let mut raw = RawConfig::parse(MINIMAL).unwrap();
        raw.apply_override("gains.k_i=0").unwrap();
        raw.apply_override("gains.k_I=0").unwrap();
        raw.apply_override("vehicle.g=0").unwrap();
        let cfg = build_scenario(raw).unwrap();
        assert_eq!(cfg.scenario.gains.k_i, 0.0);
        assert_eq!(cfg.scenario.gains.attitude.k_i, 0.0);
        assert_eq!(cfg.scenario.params.gravity(), 0.0);
        assert!(RawConfig::parse(MINIMAL)
            .unwrap()
            .apply_override("mode.t_end=1")
            .is_err());
    }

    #[test]
    fn override_with_unknown_key_fails_at_build() {
        let mut raw = RawConfig::parse(MINIMAL).unwrap();
        raw.apply_override("gains.k_xx=1.0").unwrap();
        assert!(build_scenario(raw).is_err());
    }

    #[test]
    fn bad_window_fails_validation() {
        let text = MINIMAL.replace("t_end = 0.2", "t_end = 0.3");
        let raw = RawConfig::parse(&text).unwrap();
        assert!(build_scenario(raw).is_err());
    }
}
