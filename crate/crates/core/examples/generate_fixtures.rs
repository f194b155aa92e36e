//! Writes the synthetic fixture networks and scenarios as JSON.
//!
//! Usage: `cargo run --example generate_fixtures [-- OUT_DIR]`
//! (default: the crate's `fixtures/` directory).

use std::path::PathBuf;

use gasadapt::fixtures;
use gasadapt::io::{write_network, write_scenario};
use gasadapt::network::GasParameters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&dir)?;
    let gas = GasParameters::default();
    for (name, (net, scn)) in [("chain5", fixtures::chain5()), ("tree12", fixtures::tree12())] {
        write_network(dir.join(format!("{name}.network.json")), &net, &gas)?;
        write_scenario(dir.join(format!("{name}.scenario.json")), &scn)?;
        println!(
            "{name}: {} nodes, {} pipes, {} compressors",
            net.nodes().len(),
            net.pipes().len(),
            net.compressors().len()
        );
    }
    std::fs::write(dir.join("config.json"), serde_json_config())?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn serde_json_config() -> String {
    let doc = gasadapt::io::ConfigDocument::default();
    let mut s = serde_json::to_string_pretty(&doc).expect("config serializes");
    s.push('\n');
    s
}
