mod common;

use gasadapt::hierarchy::{analytic_pressure, ModelLevel};
use gasadapt::integrator::{integrate, restrict_to_grid, Grid};
use gasadapt::network::{GasParameters, Pipe};
use proptest::prelude::*;

use common::test_pipe;

fn analytic_error(level: ModelLevel, pipe: &Pipe, n: usize) -> f64 {
    let gas = GasParameters::default();
    let grid = Grid::new(pipe.length, n).unwrap();
    let prof = integrate(level, pipe, &gas, 60e5, 100.0, &grid).unwrap();
    prof.values
        .iter()
        .zip(grid.positions())
        .map(|(p, x)| (p - analytic_pressure(level, pipe, &gas, 60e5, 100.0, x).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn level3_is_first_order() {
    let pipe = test_pipe();
    let errs: Vec<f64> = [4, 8, 16, 32, 64].iter().map(|&n| analytic_error(ModelLevel::M3, &pipe, n)).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..=2.2).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn level2_with_slope_is_first_order() {
    let pipe = test_pipe().with_slope(0.004);
    let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&n| analytic_error(ModelLevel::M2, &pipe, n)).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..=2.2).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn downhill_without_flow_gains_pressure() {
    let gas = GasParameters::default();
    let pipe = test_pipe().with_slope(-0.005);
    let grid = Grid::new(pipe.length, 64).unwrap();
    let prof = integrate(ModelLevel::M2, &pipe, &gas, 60e5, 0.0, &grid).unwrap();
    assert!(prof.values.windows(2).all(|w| w[1] > w[0]));
    let exact = analytic_pressure(ModelLevel::M2, &pipe, &gas, 60e5, 0.0, pipe.length).unwrap();
    let gain = exact - 60e5;
    assert!((prof.last() - exact).abs() < 0.02 * gain, "{} vs {exact}", prof.last());
}

#[test]
fn restriction_picks_shared_gridpoints() {
    let gas = GasParameters::default();
    let pipe = test_pipe();
    let fine = Grid::new(pipe.length, 16).unwrap();
    let prof = integrate(ModelLevel::M1, &pipe, &gas, 60e5, 100.0, &fine).unwrap();
    let coarse = restrict_to_grid(&prof, &Grid::new(pipe.length, 4).unwrap()).unwrap();
    let picked: Vec<f64> = (0..=4).map(|k| prof.values[4 * k]).collect();
    assert_eq!(coarse.values, picked);
    assert!(restrict_to_grid(&prof, &Grid::new(pipe.length, 5).unwrap()).is_err());
}

#[test]
fn drained_pipe_is_reported() {
    let gas = GasParameters::default();
    let pipe = Pipe::new("P", "A", "B", 100_000.0, 0.3, 0.02);
    let grid = Grid::new(pipe.length, 16).unwrap();
    assert!(integrate(ModelLevel::M3, &pipe, &gas, 20e5, 300.0, &grid).is_err());
}

fn level() -> impl Strategy<Value = ModelLevel> {
    prop::sample::select(ModelLevel::ALL.to_vec())
}

proptest! {
    #[test]
    fn zero_flow_flat_profile_is_constant(level in level(), p0 in 10e5f64..80e5, n in 1usize..64) {
        let pipe = test_pipe();
        let grid = Grid::new(pipe.length, n).unwrap();
        let prof = integrate(level, &pipe, &GasParameters::default(), p0, 0.0, &grid).unwrap();
        prop_assert!(prof.values.iter().all(|&p| p == p0));
    }

    #[test]
    fn flow_lowers_pressure_on_flat_pipes(level in level(), q in 1.0f64..150.0, n in 1usize..64) {
        let pipe = test_pipe();
        let grid = Grid::new(pipe.length, n).unwrap();
        let prof = integrate(level, &pipe, &GasParameters::default(), 60e5, q, &grid).unwrap();
        prop_assert!(prof.values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn reversing_the_flow_mirrors_the_drop(level in level(), q in 1.0f64..150.0) {
        // Pressure rises along the pipe when gas flows against x.
        let pipe = test_pipe();
        let gas = GasParameters::default();
        let grid = Grid::new(pipe.length, 32).unwrap();
        let fwd = integrate(level, &pipe, &gas, 60e5, q, &grid).unwrap();
        let back = integrate(level, &pipe, &gas, 60e5, -q, &grid).unwrap();
        prop_assert!(fwd.last() < 60e5 && back.last() > 60e5);
    }
}
