//! Runs the checks of a few shipped scenarios in-process and prints the
//! outcome lines, as the `verify` subcommand does.

use wellposed::harness::{registry, verify};

fn main() {
    for name in ["controllability-2mode", "transport-shift", "delay-scalar-1plus-t", "boundary-heat-1d"] {
        let cfg = registry::builtin(name).expect("shipped scenarios parse");
        match verify(&cfg) {
            Ok(report) => {
                println!("{name} [{}]", &report.config_hash[..12]);
                for c in &report.checks {
                    println!("  {}", c.line());
                }
            }
            Err(e) => println!("{name}: {e}"),
        }
    }
    println!("shipped: {}", registry::names().collect::<Vec<_>>().join(", "));
}
