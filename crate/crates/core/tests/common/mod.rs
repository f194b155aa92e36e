//! Oracles shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::path::PathBuf;

use gasadapt::hierarchy::PipeCoefficients;
use gasadapt::network::{Compressor, GasParameters, Network, Node, NodeKind, Pipe, Scenario};

pub const BAR: f64 = 1e5;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Level-3 reference pipe: 10 km, 0.6 m, friction 0.01.
pub fn test_pipe() -> Pipe {
    Pipe::new("P", "A", "B", 10_000.0, 0.6, 0.01)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Entry at fixed pressure, compressor, one flat pipe, exit with a lower
/// pressure bound.
pub fn compressor_chain(p_entry: f64, p_exit_min: f64, q: f64) -> (Network, Scenario) {
    let net = Network::new(
        vec![
            Node::new("s", NodeKind::Entry, p_entry, p_entry),
            Node::new("a", NodeKind::Inner, 1e5, 100e5),
            Node::new("t", NodeKind::Exit, p_exit_min, 100e5),
        ],
        vec![Pipe::new("P", "a", "t", 30_000.0, 0.6, 0.01)],
        vec![Compressor::new("C", "s", "a", 40e5, 1.0)],
    );
    (net, Scenario::new([("s", -q), ("t", q)]))
}

/// Inlet pressure of a flat pipe that delivers exactly `p_out` under the
/// level-3 implicit Euler scheme with `n` steps. Each step
/// `p_k - p_{k-1} = -h K / p_k` is inverted explicitly from the outlet.
pub fn discrete_level3_inlet(pipe: &Pipe, gas: &GasParameters, p_out: f64, q: f64, n: usize) -> f64 {
    let k = PipeCoefficients::new(pipe, gas).k(q);
    let h = pipe.length / n as f64;
    (0..n).fold(p_out, |p, _| p + h * k / p)
}

/// Closed-form level-3 inlet pressure for the same pipe.
pub fn analytic_level3_inlet(pipe: &Pipe, gas: &GasParameters, p_out: f64, q: f64) -> f64 {
    let k = PipeCoefficients::new(pipe, gas).k(q);
    (p_out * p_out + 2.0 * k * pipe.length).sqrt()
}

/// Subset sums by bitmask.
fn subsets(values: &[f64]) -> impl Iterator<Item = (u32, usize, f64)> + '_ {
    (0u32..1 << values.len()).map(move |m| {
        let sum = (0..values.len()).filter(|i| m >> i & 1 == 1).map(|i| values[i]).sum();
        (m, m.count_ones() as usize, sum)
    })
}

fn mask_of(indices: impl Iterator<Item = usize>) -> u32 {
    indices.fold(0, |m, i| m | 1 << i)
}

/// Checks a "minimal" marking: the marked set reaches `fraction` of the
/// total over `eligible`, and no smaller subset does.
pub fn check_minimal(values: &[f64], eligible: &[bool], marked: &[usize], fraction: f64) -> Result<(), String> {
    if marked.iter().any(|&i| !eligible[i]) {
        return Err(format!("ineligible member in {marked:?}"));
    }
    let pool = mask_of((0..values.len()).filter(|&i| eligible[i]));
    let total: f64 = (0..values.len()).filter(|&i| eligible[i]).map(|i| values[i]).sum();
    let target = fraction * total;
    let sum: f64 = marked.iter().map(|&i| values[i]).sum();
    if sum < target - 1e-9 {
        return Err(format!("{marked:?} sums to {sum} < {target}"));
    }
    let best = subsets(values)
        .filter(|&(m, _, s)| m & !pool == 0 && s >= target - 1e-9)
        .map(|(_, c, _)| c)
        .min()
        .unwrap_or(0);
    if marked.len() > best {
        return Err(format!("{marked:?} is not minimal, a subset of size {best} suffices"));
    }
    Ok(())
}

/// Checks a "maximal" marking: the marked set stays within `budget`, no
/// larger admissible subset exists, and the next candidate in ascending
/// order would exceed the budget.
pub fn check_maximal(values: &[f64], candidate: &[bool], marked: &[usize], budget: f64) -> Result<(), String> {
    if marked.iter().any(|&i| !candidate[i]) {
        return Err(format!("non-candidate member in {marked:?}"));
    }
    let pool = mask_of((0..values.len()).filter(|&i| candidate[i]));
    let sum: f64 = marked.iter().map(|&i| values[i]).sum();
    if sum > budget + 1e-9 {
        return Err(format!("{marked:?} sums to {sum} > {budget}"));
    }
    let best = subsets(values)
        .filter(|&(m, _, s)| m & !pool == 0 && s <= budget + 1e-9)
        .map(|(_, c, _)| c)
        .max()
        .unwrap_or(0);
    if marked.len() < best {
        return Err(format!("{marked:?} is not maximal, a subset of size {best} fits"));
    }
    let next = (0..values.len())
        .filter(|&i| candidate[i] && !marked.contains(&i))
        .map(|i| values[i])
        .fold(f64::INFINITY, f64::min);
    if next.is_finite() && sum + next <= budget - 1e-9 {
        return Err(format!("{marked:?} could take {next} within {budget}"));
    }
    Ok(())
}
