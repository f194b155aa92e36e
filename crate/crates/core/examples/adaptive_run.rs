//! Runs the adaptive controller on the tree fixture and prints the trace
//! and the final level and grid of every pipe.

use gasadapt::adaptive::{run, AdaptiveConfig};
use gasadapt::fixtures;
use gasadapt::network::GasParameters;

fn main() -> Result<(), gasadapt::error::GasError> {
    let (net, scn) = fixtures::tree12();
    let config = AdaptiveConfig::default();
    let (sol, state) = run(&net, &scn, &GasParameters::default(), &config)?;

    println!("solve  k  j   vars   avg eta [Pa]  refined  up  coarsened  down");
    for r in &state.trace {
        println!(
            "{:5} {:2} {:2} {:6} {:14.4} {:8} {:3} {:10} {:5}",
            r.solve_index, r.outer_k, r.inner_j, r.n_vars, r.avg_eta, r.n_refined, r.n_switched_up, r.n_coarsened, r.n_switched_down
        );
    }
    println!("\npipe  level  intervals  flow [kg/s]  eta [Pa]");
    for (p, pipe) in net.pipes().iter().enumerate() {
        println!(
            "{:4} {:6} {:10} {:12.2} {:9.4}",
            pipe.id, state.states[p].level, state.states[p].n_intervals, sol.flow(p), state.assessments[p].estimate.eta
        );
    }
    println!("\nobjective {:.6e}", sol.objective);
    for (c, comp) in net.compressors().iter().enumerate() {
        println!("  {} lift {:.4} bar", comp.id, sol.lift(c) / 1e5);
    }
    Ok(())
}
