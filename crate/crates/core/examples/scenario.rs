//! Runs a scenario file and prints the summary.
//!
//! `cargo run --example scenario -- scenarios/five_occupants.toml`

use thermoloop::sim::{run_scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "scenarios/five_occupants.toml".into());
    let cfg = ScenarioConfig::load(path)?;
    let trace = run_scenario(&cfg)?;
    let s = &trace.summary;
    println!("t0 = {:?}", s.final_t0);
    println!("converged = {} at {:?} s", s.converged, s.convergence_time);
    println!("mean TCI² {:.3} -> {:.3}", s.initial_mean_tci_sq, s.final_mean_tci_sq);
    for p in &s.profiles {
        println!("{} neutral {:.4} sensitivity {:.4}", p.occupant_id, p.neutral_temp, p.sensitivity);
    }
    for c in &s.commands {
        println!("command {:?}", c);
    }
    Ok(())
}
