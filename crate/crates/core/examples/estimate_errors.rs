//! Discretization and model error estimates of a sloped pipe for a sequence
//! of stepsizes, evaluated on all model levels.

use gasadapt::estimate::{assess, EstimateJob};
use gasadapt::hierarchy::ModelLevel;
use gasadapt::network::{GasParameters, Pipe};

fn main() -> Result<(), gasadapt::error::GasError> {
    let gas = GasParameters::default();
    let pipe = Pipe::new("P", "A", "B", 10_000.0, 0.6, 0.01).with_slope(0.001);
    println!("{:>8} {:>6} {:>12} {:>12} {:>12}", "h [m]", "level", "eta_d [Pa]", "eta_m [Pa]", "eta [Pa]");
    for n in [4, 16, 64, 256] {
        let h = pipe.length / n as f64;
        for level in ModelLevel::ALL {
            let job = EstimateJob::oriented(&pipe, &gas, 60e5, 0.0, 100.0, level, h);
            let a = assess(&job)?;
            println!(
                "{h:8.1} {level:>6} {:12.4} {:12.4} {:12.4}",
                a.estimate.eta_d, a.estimate.eta_m, a.estimate.eta
            );
        }
    }
    Ok(())
}
