//! Gas network graph: nodes, pipes, compressors, boundary flows.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GasError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Entry,
    Exit,
    Inner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    /// [Pa]
    pub pressure_min: f64,
    /// [Pa]
    pub pressure_max: f64,
    /// [m]
    pub elevation: f64,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind, pressure_min: f64, pressure_max: f64) -> Self {
        Self {
            id: id.into(),
            kind,
            pressure_min,
            pressure_max,
            elevation: 0.0,
        }
    }

    pub fn with_elevation(mut self, elevation: f64) -> Self {
        self.elevation = elevation;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipe {
    pub id: String,
    pub from: String,
    pub to: String,
    /// [m]
    pub length: f64,
    /// [m]
    pub diameter: f64,
    /// [m²]
    pub cross_area: f64,
    pub friction: f64,
    /// Effective slope, filled in by [`Network::new`] unless set explicitly.
    pub slope: f64,
    /// Explicit slope; takes precedence over node elevations.
    pub slope_override: Option<f64>,
    /// [kg/s]
    pub flow_min: f64,
    /// [kg/s]
    pub flow_max: f64,
}

impl Pipe {
    pub fn new(
        id: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        length: f64,
        diameter: f64,
        friction: f64,
    ) -> Self {
        Self {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            length,
            diameter,
            cross_area: circle_area(diameter),
            friction,
            slope: 0.0,
            slope_override: None,
            flow_min: f64::NEG_INFINITY,
            flow_max: f64::INFINITY,
        }
    }

    pub fn with_slope(mut self, slope: f64) -> Self {
        self.slope = slope;
        self.slope_override = Some(slope);
        self
    }

    pub fn with_flow_bounds(mut self, flow_min: f64, flow_max: f64) -> Self {
        self.flow_min = flow_min;
        self.flow_max = flow_max;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compressor {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Maximal pressure increase [Pa].
    pub lift_max: f64,
    /// Cost per Pa of lift.
    pub cost_coeff: f64,
    pub flow_min: f64,
    pub flow_max: f64,
}

impl Compressor {
    pub fn new(id: impl Into<String>, from: impl Into<String>, to: impl Into<String>, lift_max: f64, cost_coeff: f64) -> Self {
        Self {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            lift_max,
            cost_coeff,
            flow_min: f64::NEG_INFINITY,
            flow_max: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParameters {
    /// R_s [J/(kg·K)]
    pub specific_gas_constant: f64,
    /// [K]
    pub temperature: f64,
    pub compressibility: f64,
    /// [m/s²]
    pub gravity: f64,
}

impl Default for GasParameters {
    fn default() -> Self {
        Self {
            specific_gas_constant: 518.26,
            temperature: 283.15,
            compressibility: 0.9,
            gravity: 9.81,
        }
    }
}

impl GasParameters {
    pub fn is_valid(&self) -> bool {
        [self.specific_gas_constant, self.temperature, self.compressibility, self.gravity]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

pub fn circle_area(diameter: f64) -> f64 {
    PI * diameter * diameter / 4.0
}

/// Friction factor of a fully rough pipe from its absolute roughness `k`.
pub fn nikuradse_friction(diameter: f64, roughness: f64) -> f64 {
    (2.0 * (diameter / roughness).log10() + 1.138).powi(-2)
}

/// Immutable network. Node lookups by id are indexed on construction.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    pipes: Vec<Pipe>,
    compressors: Vec<Compressor>,
    index: HashMap<String, usize>,
}

impl Network {
    /// Builds the network and resolves pipe slopes from elevations where no
    /// explicit slope is given. Consistency is checked by [`validate_network`].
    pub fn new(nodes: Vec<Node>, mut pipes: Vec<Pipe>, compressors: Vec<Compressor>) -> Self {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            index.entry(n.id.clone()).or_insert(i);
        }
        let mut net = Self {
            nodes,
            pipes: Vec::new(),
            compressors,
            index,
        };
        for p in &mut pipes {
            p.slope = slope_of(p, &net);
        }
        net.pipes = pipes;
        net
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn pipes(&self) -> &[Pipe] {
        &self.pipes
    }

    pub fn compressors(&self) -> &[Compressor] {
        &self.compressors
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    pub fn pipe_index(&self, id: &str) -> Option<usize> {
        self.pipes.iter().position(|p| p.id == id)
    }

    fn lookup(&self, id: &str) -> Result<usize> {
        self.node_index(id).ok_or_else(|| GasError::UnknownId {
            kind: "node",
            id: id.to_string(),
        })
    }

    /// Node indices `(from, to)` of every arc: pipes first, then compressors.
    pub fn arc_endpoints(&self) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::with_capacity(self.pipes.len() + self.compressors.len());
        for p in &self.pipes {
            out.push((self.lookup(&p.from)?, self.lookup(&p.to)?));
        }
        for c in &self.compressors {
            out.push((self.lookup(&c.from)?, self.lookup(&c.to)?));
        }
        Ok(out)
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = &str> {
        self.pipes
            .iter()
            .map(|p| p.id.as_str())
            .chain(self.compressors.iter().map(|c| c.id.as_str()))
    }
}

/// Boundary mass flows per node id; negative at entries, positive at exits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scenario {
    pub boundary_flows: BTreeMap<String, f64>,
}

impl Scenario {
    pub fn new<I, S>(flows: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self {
            boundary_flows: flows.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn flow(&self, node: &str) -> f64 {
        self.boundary_flows.get(node).copied().unwrap_or(0.0)
    }

    /// Boundary flows in node order.
    pub fn flows_by_index(&self, net: &Network) -> Vec<f64> {
        net.nodes().iter().map(|n| self.flow(&n.id)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    DuplicateId(String),
    DanglingEndpoint { arc: String, node: String },
    SelfLoop(String),
    BoundInversion { id: String, lower: f64, upper: f64 },
    NonPositiveBound { id: String, value: f64 },
    InvalidPipe { id: String, reason: String },
    InvalidCompressor { id: String, reason: String },
    SignViolation { node: String, flow: f64 },
    UnknownScenarioNode(String),
    GlobalImbalance(f64),
    Disconnected,
    InvalidGas,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::DuplicateId(id) => write!(f, "duplicate id '{id}'"),
            ValidationIssue::DanglingEndpoint { arc, node } => {
                write!(f, "dangling endpoint: arc '{arc}' references unknown node '{node}'")
            }
            ValidationIssue::SelfLoop(id) => write!(f, "arc '{id}' starts and ends at the same node"),
            ValidationIssue::BoundInversion { id, lower, upper } => {
                write!(f, "bound inversion at '{id}': {lower:?} > {upper:?}")
            }
            ValidationIssue::NonPositiveBound { id, value } => {
                write!(f, "non-positive pressure bound at '{id}': {value:?}")
            }
            ValidationIssue::InvalidPipe { id, reason } => write!(f, "pipe '{id}': {reason}"),
            ValidationIssue::InvalidCompressor { id, reason } => write!(f, "compressor '{id}': {reason}"),
            ValidationIssue::SignViolation { node, flow } => {
                write!(f, "boundary flow sign violation at '{node}': {flow:?}")
            }
            ValidationIssue::UnknownScenarioNode(id) => write!(f, "scenario references unknown node '{id}'"),
            ValidationIssue::GlobalImbalance(v) => write!(f, "global imbalance {v:?}"),
            ValidationIssue::Disconnected => write!(f, "network is not connected"),
            ValidationIssue::InvalidGas => write!(f, "gas parameters must be finite and positive"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.issues.iter().any(|i| i.to_string().contains(needle))
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(GasError::Validation(self.to_string()))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

/// Lists every violated structural invariant of the network and scenario.
pub fn validate_network(net: &Network, scn: &Scenario) -> ValidationReport {
    let mut issues = Vec::new();

    let mut seen = HashSet::new();
    for n in net.nodes() {
        if !seen.insert(n.id.as_str()) {
            issues.push(ValidationIssue::DuplicateId(n.id.clone()));
        }
        if !(n.pressure_min > 0.0) {
            issues.push(ValidationIssue::NonPositiveBound {
                id: n.id.clone(),
                value: n.pressure_min,
            });
        }
        if n.pressure_min > n.pressure_max {
            issues.push(ValidationIssue::BoundInversion {
                id: n.id.clone(),
                lower: n.pressure_min,
                upper: n.pressure_max,
            });
        }
    }

    let mut arc_ids = HashSet::new();
    let mut check_arc = |id: &str, from: &str, to: &str, issues: &mut Vec<ValidationIssue>| {
        if !arc_ids.insert(id.to_string()) {
            issues.push(ValidationIssue::DuplicateId(id.to_string()));
        }
        for end in [from, to] {
            if net.node_index(end).is_none() {
                issues.push(ValidationIssue::DanglingEndpoint {
                    arc: id.to_string(),
                    node: end.to_string(),
                });
            }
        }
        if from == to {
            issues.push(ValidationIssue::SelfLoop(id.to_string()));
        }
    };

    for p in net.pipes() {
        check_arc(&p.id, &p.from, &p.to, &mut issues);
        let mut bad = |reason: String| {
            issues.push(ValidationIssue::InvalidPipe {
                id: p.id.clone(),
                reason,
            })
        };
        if !(p.length > 0.0) {
            bad(format!("length {:?} must be positive", p.length));
        }
        if !(p.diameter > 0.0) {
            bad(format!("diameter {:?} must be positive", p.diameter));
        } else {
            let area = circle_area(p.diameter);
            if (p.cross_area - area).abs() > 1e-9 * area {
                bad(format!("cross area {:?} inconsistent with diameter", p.cross_area));
            }
        }
        if !(p.friction > 0.0) {
            bad(format!("friction {:?} must be positive", p.friction));
        }
        if !(p.slope.abs() < 1.0) {
            bad(format!("slope {:?} must satisfy |s| < 1", p.slope));
        }
        if p.flow_min > p.flow_max {
            issues.push(ValidationIssue::BoundInversion {
                id: p.id.clone(),
                lower: p.flow_min,
                upper: p.flow_max,
            });
        }
    }

    for c in net.compressors() {
        check_arc(&c.id, &c.from, &c.to, &mut issues);
        if !(c.lift_max >= 0.0) {
            issues.push(ValidationIssue::InvalidCompressor {
                id: c.id.clone(),
                reason: format!("lift_max {:?} must be non-negative", c.lift_max),
            });
        }
        if !(c.cost_coeff >= 0.0) {
            issues.push(ValidationIssue::InvalidCompressor {
                id: c.id.clone(),
                reason: format!("cost coefficient {:?} must be non-negative", c.cost_coeff),
            });
        }
        if c.flow_min > c.flow_max {
            issues.push(ValidationIssue::BoundInversion {
                id: c.id.clone(),
                lower: c.flow_min,
                upper: c.flow_max,
            });
        }
    }

    for (id, &flow) in &scn.boundary_flows {
        match net.node(id) {
            None => issues.push(ValidationIssue::UnknownScenarioNode(id.clone())),
            Some(n) => {
                let ok = match n.kind {
                    NodeKind::Entry => flow <= 0.0,
                    NodeKind::Exit => flow >= 0.0,
                    NodeKind::Inner => flow == 0.0,
                };
                if !ok {
                    issues.push(ValidationIssue::SignViolation {
                        node: id.clone(),
                        flow,
                    });
                }
            }
        }
    }
    let total: f64 = scn.boundary_flows.values().sum();
    if total.abs() > 1e-9 {
        issues.push(ValidationIssue::GlobalImbalance(total));
    }

    if !is_connected(net) {
        issues.push(ValidationIssue::Disconnected);
    }

    ValidationReport { issues }
}

fn is_connected(net: &Network) -> bool {
    let n = net.nodes().len();
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    let ends = net
        .pipes()
        .iter()
        .map(|p| (&p.from, &p.to))
        .chain(net.compressors().iter().map(|c| (&c.from, &c.to)));
    for (a, b) in ends {
        if let (Some(i), Some(j)) = (net.node_index(a), net.node_index(b)) {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

/// Mass balance defect per node: inflow − outflow − boundary flow [kg/s].
pub fn mass_balance_residual(
    net: &Network,
    scn: &Scenario,
    flows: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>> {
    let ends = net.arc_endpoints()?;
    let mut arc_flows = Vec::with_capacity(ends.len());
    for id in net.arc_ids() {
        let q = flows.get(id).copied().ok_or_else(|| GasError::UnknownId {
            kind: "arc flow",
            id: id.to_string(),
        })?;
        arc_flows.push(q);
    }
    let res = balance_residual(&ends, &scn.flows_by_index(net), &arc_flows);
    Ok(net
        .nodes()
        .iter()
        .zip(res)
        .map(|(n, r)| (n.id.clone(), r))
        .collect())
}

/// Index-based mass balance defect; arcs given as `(from, to)` node indices.
pub fn balance_residual(ends: &[(usize, usize)], boundary: &[f64], flows: &[f64]) -> Vec<f64> {
    let mut res: Vec<f64> = boundary.iter().map(|m| -m).collect();
    for (&(from, to), &q) in ends.iter().zip(flows) {
        res[to] += q;
        res[from] -= q;
    }
    res
}

/// Slope of a pipe: the explicit value when present, else the elevation
/// difference of its endpoints over its length. Unknown endpoints count as
/// elevation zero.
pub fn slope_of(pipe: &Pipe, net: &Network) -> f64 {
    if let Some(s) = pipe.slope_override {
        return s;
    }
    let elev = |id: &str| net.node(id).map_or(0.0, |n| n.elevation);
    (elev(&pipe.to) - elev(&pipe.from)) / pipe.length
}
