//! Synthetic test networks.
//!
//! Both networks are trees fed by a single entry at fixed pressure. One long
//! pipe carries most of the gas and needs a fine grid, the remaining pipes
//! carry little flow and are accurate on coarse grids. Elevations
//! give every network a mix of uphill, downhill and flat pipes. Diameters,
//! friction factors and pressure levels are typical of transmission
//! pipelines; gas data are the crate defaults (natural gas at 10 °C).

use crate::network::{Compressor, Network, Node, NodeKind, Pipe, Scenario};

const BAR: f64 = 1e5;

fn inner(id: &str, elevation: f64) -> Node {
    Node::new(id, NodeKind::Inner, 1.0 * BAR, 80.0 * BAR).with_elevation(elevation)
}

fn exit(id: &str, pmin: f64, elevation: f64) -> Node {
    Node::new(id, NodeKind::Exit, pmin * BAR, 80.0 * BAR).with_elevation(elevation)
}

fn entry(id: &str, p: f64) -> Node {
    Node::new(id, NodeKind::Entry, p * BAR, p * BAR)
}

/// Five pipes in a chain with one compressor station.
///
/// ```text
/// S -P1- N1 -P2- N2 =C1= N3 -P3- N4 -P4- N5 -P5- T
/// ```
///
/// Most of the supply leaves at N1, so only P1 carries a large flow.
pub fn chain5() -> (Network, Scenario) {
    let nodes = vec![
        entry("S", 70.0),
        exit("N1", 40.0, 0.0),
        inner("N2", 30.0),
        inner("N3", 30.0),
        exit("N4", 60.0, -20.0),
        inner("N5", 40.0),
        exit("T", 66.0, 40.0),
    ];
    let pipes = vec![
        Pipe::new("P1", "S", "N1", 40_000.0, 0.6, 0.01),
        Pipe::new("P2", "N1", "N2", 15_000.0, 0.5, 0.011),
        Pipe::new("P3", "N3", "N4", 12_000.0, 0.5, 0.011),
        Pipe::new("P4", "N4", "N5", 20_000.0, 0.5, 0.011),
        Pipe::new("P5", "N5", "T", 10_000.0, 0.5, 0.011),
    ];
    let compressors = vec![Compressor::new("C1", "N2", "N3", 20.0 * BAR, 1.0)];
    let scn = Scenario::new([("S", -130.0), ("N1", 110.0), ("N4", 8.0), ("T", 12.0)]);
    (Network::new(nodes, pipes, compressors), scn)
}

/// Twelve pipes, two compressor stations and one junction.
///
/// ```text
///                   J -P2- A1 =C1= A2 -P3- A3 -P4- A4 -P5- A5 -P6- TA
/// S -P1- J <
///                   J -P7- B1 =C2= B2 -P8- B3 -P9- B4 -P10- B5 -P11- B6 -P12- TB
/// ```
///
/// P1 carries the bulk of the supply to the main offtake at J.
pub fn tree12() -> (Network, Scenario) {
    let nodes = vec![
        entry("S", 72.0),
        exit("J", 40.0, 10.0),
        inner("A1", 20.0),
        inner("A2", 20.0),
        exit("A3", 60.0, 15.0),
        inner("A4", 25.0),
        inner("A5", 20.0),
        exit("TA", 68.0, 25.0),
        inner("B1", 5.0),
        inner("B2", 5.0),
        exit("B3", 60.0, 10.0),
        inner("B4", 15.0),
        inner("B5", 5.0),
        inner("B6", 10.0),
        exit("TB", 69.0, 15.0),
    ];
    let pipes = vec![
        Pipe::new("P1", "S", "J", 50_000.0, 0.7, 0.009),
        Pipe::new("P2", "J", "A1", 25_000.0, 0.6, 0.01),
        Pipe::new("P3", "A2", "A3", 12_000.0, 0.4, 0.012),
        Pipe::new("P4", "A3", "A4", 9_000.0, 0.4, 0.012),
        Pipe::new("P5", "A4", "A5", 14_000.0, 0.4, 0.012),
        Pipe::new("P6", "A5", "TA", 8_000.0, 0.4, 0.012),
        Pipe::new("P7", "J", "B1", 16_000.0, 0.5, 0.011),
        Pipe::new("P8", "B2", "B3", 11_000.0, 0.5, 0.011),
        Pipe::new("P9", "B3", "B4", 13_000.0, 0.5, 0.011),
        Pipe::new("P10", "B4", "B5", 10_000.0, 0.5, 0.011),
        Pipe::new("P11", "B5", "B6", 9_000.0, 0.5, 0.011),
        Pipe::new("P12", "B6", "TB", 12_000.0, 0.5, 0.011),
    ];
    let compressors = vec![
        Compressor::new("C1", "A1", "A2", 20.0 * BAR, 1.0),
        Compressor::new("C2", "B1", "B2", 20.0 * BAR, 1.2),
    ];
    let scn = Scenario::new([
        ("S", -125.0),
        ("J", 100.0),
        ("A3", 3.0),
        ("TA", 6.0),
        ("B3", 6.0),
        ("TB", 10.0),
    ]);
    (Network::new(nodes, pipes, compressors), scn)
}
