//! Integrates one pipe on every model level and compares the friction-only
//! model with its closed-form solution.

use gasadapt::hierarchy::{analytic_pressure, ModelLevel};
use gasadapt::integrator::{integrate, Grid};
use gasadapt::network::{GasParameters, Pipe};

fn main() -> Result<(), gasadapt::error::GasError> {
    let gas = GasParameters::default();
    let pipe = Pipe::new("P", "A", "B", 10_000.0, 0.6, 0.01).with_slope(0.002);
    let (p0, q) = (60e5, 100.0);

    println!("outlet pressure [bar] with 64 steps");
    let grid = Grid::new(pipe.length, 64)?;
    for level in ModelLevel::ALL {
        let prof = integrate(level, &pipe, &gas, p0, q, &grid)?;
        println!("  level {level}: {:.6}", prof.last() / 1e5);
    }

    let flat = Pipe::new("P", "A", "B", 10_000.0, 0.6, 0.01);
    let exact = analytic_pressure(ModelLevel::M3, &flat, &gas, p0, q, flat.length)?;
    println!("\nlevel 3 outlet error against the closed form");
    for n in [4, 8, 16, 32, 64] {
        let prof = integrate(ModelLevel::M3, &flat, &gas, p0, q, &Grid::new(flat.length, n)?)?;
        println!("  n = {n:3}: {:10.3} Pa", (prof.last() - exact).abs());
    }
    Ok(())
}
