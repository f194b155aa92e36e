//! Marking rules on a small set of estimates, and the check of the
//! termination conditions for a parameter set.

use std::collections::BTreeSet;

use gasadapt::adaptive::{
    mark_coarsen, mark_refine, mark_switch_down, mark_switch_up, validate_parameters, AdaptiveConfig,
};

fn main() {
    let eta_d = [("P1", 120.0), ("P2", 40.0), ("P3", 3.0), ("P4", 1.0), ("P5", 0.2)];
    println!("refine:      {:?}", mark_refine(&eta_d, 0.7));
    println!("coarsen:     {:?}", mark_coarsen(&eta_d, 0.3, &BTreeSet::from(["P2"])));

    let reduction = [("P1", 30.0), ("P2", 12.0), ("P3", 5.0)];
    println!("switch up:   {:?}", mark_switch_up(&reduction, 0.7, 10.0));
    let increase = [("P1", 2.0), ("P2", 5.0), ("P3", 50.0)];
    println!("switch down: {:?}", mark_switch_down(&increase, 0.3, 1.1, 10.0));

    let config = AdaptiveConfig::default();
    for pipes in [5, 39] {
        let warnings = validate_parameters(&config, pipes);
        println!("\n{pipes} pipes: {} warning(s)", warnings.len());
        for w in warnings {
            println!("  {w}");
        }
    }
}
