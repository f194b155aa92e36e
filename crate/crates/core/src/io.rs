//! JSON documents for networks, scenarios, configurations and solutions,
//! and CSV export of traces, estimates and profiles.
//!
//! Documents carry `"format_version": 1`. Networks may be given in SI units
//! or with `"units": "bar"`, in which case pressure bounds and compressor
//! lifts are in bar and compressor costs are per bar. Writers always emit
//! SI units.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adaptive::{AdaptiveConfig, TraceRecord};
use crate::error::{GasError, Result};
use crate::estimate::PipeAssessment;
use crate::hierarchy::ModelLevel;
use crate::integrator::PressureProfile;
use crate::network::{
    circle_area, nikuradse_friction, validate_network, Compressor, GasParameters, Network, Node, NodeKind, Pipe,
    Scenario,
};
use crate::nlp::{NlpSolution, NlpStatus, PipeState};

pub const FORMAT_VERSION: u32 = 1;
const BAR: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Si,
    Bar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub format_version: u32,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub gas: Option<GasDocument>,
    pub nodes: Vec<NodeDocument>,
    pub pipes: Vec<PipeDocument>,
    #[serde(default)]
    pub compressors: Vec<CompressorDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasDocument {
    pub specific_gas_constant: f64,
    pub temperature: f64,
    pub compressibility: f64,
    pub gravity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: String,
    pub kind: NodeKind,
    pub pressure_min: f64,
    pub pressure_max: f64,
    #[serde(default)]
    pub elevation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipeDocument {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: f64,
    pub diameter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_area: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roughness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressorDocument {
    pub id: String,
    pub from: String,
    pub to: String,
    pub lift_max: f64,
    pub cost_coeff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_max: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl NetworkDocument {
    pub fn from_network(net: &Network, gas: &GasParameters) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            units: Units::Si,
            gas: Some(GasDocument {
                specific_gas_constant: gas.specific_gas_constant,
                temperature: gas.temperature,
                compressibility: gas.compressibility,
                gravity: gas.gravity,
            }),
            nodes: net
                .nodes()
                .iter()
                .map(|n| NodeDocument {
                    id: n.id.clone(),
                    kind: n.kind,
                    pressure_min: n.pressure_min,
                    pressure_max: n.pressure_max,
                    elevation: n.elevation,
                })
                .collect(),
            pipes: net
                .pipes()
                .iter()
                .map(|p| PipeDocument {
                    id: p.id.clone(),
                    from: p.from.clone(),
                    to: p.to.clone(),
                    length: p.length,
                    diameter: p.diameter,
                    cross_area: Some(p.cross_area),
                    friction: Some(p.friction),
                    roughness: None,
                    slope: p.slope_override,
                    flow_min: finite(p.flow_min),
                    flow_max: finite(p.flow_max),
                })
                .collect(),
            compressors: net
                .compressors()
                .iter()
                .map(|c| CompressorDocument {
                    id: c.id.clone(),
                    from: c.from.clone(),
                    to: c.to.clone(),
                    lift_max: c.lift_max,
                    cost_coeff: c.cost_coeff,
                    flow_min: finite(c.flow_min),
                    flow_max: finite(c.flow_max),
                })
                .collect(),
        }
    }

    /// Converts to SI units and fills derived pipe data.
    pub fn into_network(self) -> Result<(Network, GasParameters)> {
        check_version(self.format_version, "network")?;
        let scale = match self.units {
            Units::Si => 1.0,
            Units::Bar => BAR,
        };
        let gas = self.gas.map_or_else(GasParameters::default, |g| GasParameters {
            specific_gas_constant: g.specific_gas_constant,
            temperature: g.temperature,
            compressibility: g.compressibility,
            gravity: g.gravity,
        });
        if !gas.is_valid() {
            return Err(GasError::Validation("  gas parameters must be positive".into()));
        }
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| {
                Node::new(n.id, n.kind, n.pressure_min * scale, n.pressure_max * scale).with_elevation(n.elevation)
            })
            .collect();
        let mut pipes = Vec::with_capacity(self.pipes.len());
        for p in self.pipes {
            let friction = match (p.friction, p.roughness) {
                (Some(f), _) => f,
                (None, Some(k)) => nikuradse_friction(p.diameter, k),
                (None, None) => {
                    return Err(GasError::Parse {
                        context: format!("pipe '{}'", p.id),
                        message: "either friction or roughness is required".into(),
                    })
                }
            };
            let mut pipe = Pipe::new(p.id, p.from, p.to, p.length, p.diameter, friction);
            pipe.cross_area = p.cross_area.unwrap_or_else(|| circle_area(p.diameter));
            if let Some(s) = p.slope {
                pipe = pipe.with_slope(s);
            }
            pipe.flow_min = p.flow_min.unwrap_or(f64::NEG_INFINITY);
            pipe.flow_max = p.flow_max.unwrap_or(f64::INFINITY);
            pipes.push(pipe);
        }
        let compressors = self
            .compressors
            .into_iter()
            .map(|c| {
                let mut comp = Compressor::new(c.id, c.from, c.to, c.lift_max * scale, c.cost_coeff / scale);
                comp.flow_min = c.flow_min.unwrap_or(f64::NEG_INFINITY);
                comp.flow_max = c.flow_max.unwrap_or(f64::INFINITY);
                comp
            })
            .collect();
        let net = Network::new(nodes, pipes, compressors);
        let report = validate_network(&net, &Scenario::default());
        if !report.is_empty() {
            return Err(GasError::Validation(report.to_string()));
        }
        Ok((net, gas))
    }
}

fn check_version(v: u32, what: &str) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(GasError::Parse {
            context: what.to_string(),
            message: format!("unsupported format_version {v}, expected {FORMAT_VERSION}"),
        });
    }
    Ok(())
}

fn parse<T: DeserializeOwned>(text: &str, context: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| GasError::Parse {
        context: format!("{context} (line {}, column {})", e.line(), e.column()),
        message: e.to_string(),
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| GasError::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| GasError::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn parse_network(text: &str) -> Result<(Network, GasParameters)> {
    parse::<NetworkDocument>(text, "network")?.into_network()
}

pub fn load_network(path: impl AsRef<Path>) -> Result<(Network, GasParameters)> {
    let path = path.as_ref();
    parse::<NetworkDocument>(&read(path)?, &path.display().to_string())?.into_network()
}

pub fn network_to_string(net: &Network, gas: &GasParameters) -> String {
    let mut s = serde_json::to_string_pretty(&NetworkDocument::from_network(net, gas)).expect("network serializes");
    s.push('\n');
    s
}

pub fn write_network(path: impl AsRef<Path>, net: &Network, gas: &GasParameters) -> Result<()> {
    fs::write(path, network_to_string(net, gas))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub format_version: u32,
    /// Node id → boundary flow [kg/s]; negative at entries.
    pub boundary_flows: BTreeMap<String, f64>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDocument = parse(text, "scenario")?;
    check_version(doc.format_version, "scenario")?;
    Ok(Scenario {
        boundary_flows: doc.boundary_flows,
    })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let doc: ScenarioDocument = parse(&read(path)?, &path.display().to_string())?;
    check_version(doc.format_version, "scenario")?;
    Ok(Scenario {
        boundary_flows: doc.boundary_flows,
    })
}

pub fn scenario_to_string(scn: &Scenario) -> String {
    let doc = ScenarioDocument {
        format_version: FORMAT_VERSION,
        boundary_flows: scn.boundary_flows.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("scenario serializes");
    s.push('\n');
    s
}

pub fn write_scenario(path: impl AsRef<Path>, scn: &Scenario) -> Result<()> {
    fs::write(path, scenario_to_string(scn))?;
    Ok(())
}

/// Controller settings; absent fields take their defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigDocument {
    pub format_version: u32,
    pub eps_bar: f64,
    pub theta_d: f64,
    pub theta_m: f64,
    pub phi_d: f64,
    pub phi_m: f64,
    pub tau: f64,
    pub mu: usize,
    pub eps_opt: f64,
    pub max_outer_iterations: usize,
    pub initial_intervals: usize,
    pub split_tolerance: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub adaptive_eps_opt: bool,
}

impl Default for ConfigDocument {
    fn default() -> Self {
        Self::from(&AdaptiveConfig::default())
    }
}

impl From<&AdaptiveConfig> for ConfigDocument {
    fn from(c: &AdaptiveConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            eps_bar: c.eps / BAR,
            theta_d: c.theta_d,
            theta_m: c.theta_m,
            phi_d: c.phi_d,
            phi_m: c.phi_m,
            tau: c.tau,
            mu: c.mu,
            eps_opt: c.eps_opt,
            max_outer_iterations: c.max_outer_iterations,
            initial_intervals: c.initial_intervals,
            split_tolerance: c.split_tolerance,
            threads: c.threads,
            adaptive_eps_opt: c.adaptive_eps_opt,
        }
    }
}

impl ConfigDocument {
    pub fn into_config(self) -> Result<AdaptiveConfig> {
        check_version(self.format_version, "config")?;
        let cfg = AdaptiveConfig {
            eps: self.eps_bar * BAR,
            theta_d: self.theta_d,
            theta_m: self.theta_m,
            phi_d: self.phi_d,
            phi_m: self.phi_m,
            tau: self.tau,
            mu: self.mu,
            eps_opt: self.eps_opt,
            max_outer_iterations: self.max_outer_iterations,
            initial_intervals: self.initial_intervals,
            split_tolerance: self.split_tolerance,
            threads: self.threads,
            adaptive_eps_opt: self.adaptive_eps_opt,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_config(text: &str) -> Result<AdaptiveConfig> {
    parse::<ConfigDocument>(text, "config")?.into_config()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<AdaptiveConfig> {
    let path = path.as_ref();
    parse::<ConfigDocument>(&read(path)?, &path.display().to_string())?.into_config()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeStateDocument {
    pub id: String,
    pub level: ModelLevel,
    pub stepsize: f64,
    pub n_intervals: usize,
}

/// Final state of a solve in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    pub format_version: u32,
    pub status: String,
    pub objective: f64,
    /// [Pa]
    pub node_pressures: Vec<NamedValue>,
    /// [kg/s], pipes first, then compressors.
    pub flows: Vec<NamedValue>,
    /// [Pa]
    pub lifts: Vec<NamedValue>,
    pub pipes: Vec<PipeStateDocument>,
}

fn status_name(s: NlpStatus) -> &'static str {
    match s {
        NlpStatus::LocalOptimum => "local_optimum",
        NlpStatus::Infeasible => "infeasible",
        NlpStatus::IterationLimit => "iteration_limit",
    }
}

impl SolutionDocument {
    pub fn new(net: &Network, sol: &NlpSolution) -> Self {
        let named = |ids: Vec<&str>, values: Vec<f64>| {
            ids.into_iter()
                .zip(values)
                .map(|(id, value)| NamedValue { id: id.to_string(), value })
                .collect()
        };
        Self {
            format_version: FORMAT_VERSION,
            status: status_name(sol.status).to_string(),
            objective: sol.objective,
            node_pressures: named(net.nodes().iter().map(|n| n.id.as_str()).collect(), sol.node_pressures()),
            flows: named(net.arc_ids().collect(), sol.flows()),
            lifts: named(net.compressors().iter().map(|c| c.id.as_str()).collect(), sol.lifts()),
            pipes: net
                .pipes()
                .iter()
                .zip(&sol.layout.states)
                .map(|(p, s)| PipeStateDocument {
                    id: p.id.clone(),
                    level: s.level,
                    stepsize: s.stepsize(p.length),
                    n_intervals: s.n_intervals,
                })
                .collect(),
        }
    }

    /// Pipe states, node pressures and pipe flows in network order.
    pub fn resolve(&self, net: &Network) -> Result<(Vec<PipeState>, Vec<f64>, Vec<f64>)> {
        check_version(self.format_version, "solution")?;
        let lookup = |list: &[NamedValue], id: &str, kind: &'static str| {
            list.iter()
                .find(|v| v.id == id)
                .map(|v| v.value)
                .ok_or_else(|| GasError::UnknownId { kind, id: id.to_string() })
        };
        let mut states = Vec::new();
        let mut flows = Vec::new();
        for p in net.pipes() {
            let doc = self
                .pipes
                .iter()
                .find(|d| d.id == p.id)
                .ok_or_else(|| GasError::UnknownId {
                    kind: "pipe state",
                    id: p.id.clone(),
                })?;
            states.push(PipeState::new(doc.level, doc.n_intervals));
            flows.push(lookup(&self.flows, &p.id, "pipe flow")?);
        }
        let pressures = net
            .nodes()
            .iter()
            .map(|n| lookup(&self.node_pressures, &n.id, "node pressure"))
            .collect::<Result<_>>()?;
        Ok((states, pressures, flows))
    }
}

pub fn write_solution(path: impl AsRef<Path>, net: &Network, sol: &NlpSolution) -> Result<()> {
    write_json(path.as_ref(), &SolutionDocument::new(net, sol))
}

pub fn load_solution(path: impl AsRef<Path>) -> Result<SolutionDocument> {
    let path = path.as_ref();
    parse(&read(path)?, &path.display().to_string())
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TraceRecord::HEADER)?;
    for r in trace {
        w.write_record([
            r.solve_index.to_string(),
            r.outer_k.to_string(),
            r.inner_j.to_string(),
            r.n_vars.to_string(),
            r.n_cons.to_string(),
            r.nlp_seconds.to_string(),
            r.ivp_seconds.to_string(),
            r.sum_eta_d.to_string(),
            r.sum_eta_m.to_string(),
            r.sum_eta.to_string(),
            r.avg_eta.to_string(),
            r.n_refined.to_string(),
            r.n_switched_up.to_string(),
            r.n_coarsened.to_string(),
            r.n_switched_down.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_trace(path: impl AsRef<Path>, trace: &[TraceRecord]) -> Result<()> {
    write_trace(fs::File::create(path)?, trace)
}

pub const ESTIMATE_HEADER: [&str; 7] = ["pipe_id", "level", "stepsize", "n_intervals", "eta_d", "eta_m", "eta"];

pub fn write_estimates<W: Write>(out: W, net: &Network, states: &[PipeState], assessments: &[PipeAssessment]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATE_HEADER)?;
    for ((p, s), a) in net.pipes().iter().zip(states).zip(assessments) {
        w.write_record([
            p.id.clone(),
            s.level.to_string(),
            s.stepsize(p.length).to_string(),
            s.n_intervals.to_string(),
            a.estimate.eta_d.to_string(),
            a.estimate.eta_m.to_string(),
            a.estimate.eta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_estimates(path: impl AsRef<Path>, net: &Network, states: &[PipeState], assessments: &[PipeAssessment]) -> Result<()> {
    write_estimates(fs::File::create(path)?, net, states, assessments)
}

/// Locked standard output for CSV writers.
pub fn stdout_lock() -> std::io::StdoutLock<'static> {
    std::io::stdout().lock()
}

/// Profile as `x,p` rows [m, Pa].
pub fn write_profile<W: Write>(out: W, profile: &PressureProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "p"])?;
    for (x, p) in profile.grid.positions().iter().zip(&profile.values) {
        w.write_record([x.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const MINIMAL: &str = r#"{
        "format_version": 1,
        "nodes": [
            {"id": "A", "kind": "entry", "pressure_min": 5e6, "pressure_max": 6e6},
            {"id": "B", "kind": "exit", "pressure_min": 4e6, "pressure_max": 6e6}
        ],
        "pipes": [
            {"id": "P", "from": "A", "to": "B", "length": 1e4, "diameter": 0.6, "friction": 0.01}
        ]
    }"#;

    #[test]
    fn minimal_document() {
        let (net, gas) = parse_network(MINIMAL).unwrap();
        assert_eq!(net.nodes().len(), 2);
        assert_eq!(net.pipes().len(), 1);
        assert_eq!(gas, GasParameters::default());
        assert_eq!(net.pipes()[0].cross_area, circle_area(0.6));
    }

    #[test]
    fn bar_units_are_converted() {
        let text = MINIMAL
            .replace("\"format_version\": 1,", "\"format_version\": 1, \"units\": \"bar\",")
            .replace("5e6", "50")
            .replace("6e6", "60")
            .replace("4e6", "40");
        let (net, _) = parse_network(&text).unwrap();
        assert_eq!(net.nodes()[0].pressure_min, 50.0 * BAR);
        assert_eq!(net.nodes()[1].pressure_max, 60.0 * BAR);
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(parse_network("{ not json"), Err(GasError::Parse { .. })));
        let no_friction = MINIMAL.replace(", \"friction\": 0.01", "");
        assert!(matches!(parse_network(&no_friction), Err(GasError::Parse { .. })));
        let rough = MINIMAL.replace("\"friction\": 0.01", "\"roughness\": 1.2e-5");
        let (net, _) = parse_network(&rough).unwrap();
        assert_eq!(net.pipes()[0].friction, nikuradse_friction(0.6, 1.2e-5));
        let dangling = MINIMAL.replace("\"to\": \"B\"", "\"to\": \"X\"");
        assert!(matches!(parse_network(&dangling), Err(GasError::Validation(_))));
        let version = MINIMAL.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(parse_network(&version), Err(GasError::Parse { .. })));
    }

    #[test]
    fn fixtures_round_trip() {
        for (net, scn) in [fixtures::chain5(), fixtures::tree12()] {
            let gas = GasParameters::default();
            let text = network_to_string(&net, &gas);
            let (back, gas2) = parse_network(&text).unwrap();
            assert_eq!(gas2, gas);
            assert_eq!(back.nodes(), net.nodes());
            assert_eq!(back.pipes(), net.pipes());
            assert_eq!(back.compressors(), net.compressors());
            assert_eq!(network_to_string(&back, &gas2), text);
            assert_eq!(parse_scenario(&scenario_to_string(&scn)).unwrap(), scn);
        }
    }

    #[test]
    fn config_defaults_and_bar_tolerance() {
        let cfg = parse_config(r#"{"format_version": 1}"#).unwrap();
        assert_eq!(cfg, AdaptiveConfig::default());
        let cfg = parse_config(r#"{"format_version": 1, "eps_bar": 2e-4, "mu": 2}"#).unwrap();
        assert_eq!(cfg.eps, 20.0);
        assert_eq!(cfg.mu, 2);
        assert!(matches!(
            parse_config(r#"{"format_version": 1, "adaptive_eps_opt": true}"#),
            Err(GasError::Unimplemented(_))
        ));
        assert!(parse_config(r#"{"format_version": 1, "theta_d": 1.5}"#).is_err());
    }
}
