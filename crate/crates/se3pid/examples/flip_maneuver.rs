//! Runs the built-in flipping maneuver twice (with and without integral
//! action) and prints the tracking errors at a few probe times.
//!
//! ```sh
//! cargo run --example flip_maneuver
//! ```

use se3pid::scenarios;
use se3pid::sim::run_scenario;

fn main() {
    for (label, scenario) in [
        ("with integral terms", scenarios::flip::<f64>()),
        ("without integral terms", scenarios::flip_no_integral::<f64>()),
    ] {
        let run = run_scenario(&scenario).expect("scenario is valid");
        assert!(run.completed(), "{:?}", run.outcome);
        if let Some(cert) = &run.certificate {
            println!(
                "{label}: certificate {}",
                if cert.all_pass() {
                    "PASS".to_string()
                } else {
                    format!("FAIL ({})", cert.violations().join(", "))
                }
            );
        }
        for &t in &[0.4, 1.0, 2.0, 4.0] {
            let idx = (t / scenario.dt).round() as usize;
            let r = &run.log.records[idx];
            println!(
                "  t = {t:3.1} s  Psi = {:9.3e}  |e_x| = {:9.3e} m  mode = {}",
                r.psi,
                r.position_error.norm(),
                r.mode.as_str()
            );
        }
    }
}
