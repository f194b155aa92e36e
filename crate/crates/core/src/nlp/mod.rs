//! The finite-dimensional optimization problem for fixed pipe levels and
//! grids, and its solution by the interior-point solver.
//!
//! Unknowns are node pressures, arc flows, compressor lifts and the
//! pressures at interior gridpoints of every pipe. Pressures and lifts are
//! handled in bar inside the solver, flows in kg/s; everything exposed by
//! this module is in SI units.

mod problem;
mod start;

use std::fmt::Write as _;

use gasadapt_ipm::{IpmOptions, Status};
use log::debug;

use crate::error::{GasError, Result};
use crate::hierarchy::{ModelLevel, PipeCoefficients};
use crate::integrator::Grid;
use crate::network::{GasParameters, Network, Scenario};

/// Pressure scale between SI and solver units (1 bar).
pub const PRESSURE_SCALE: f64 = 1e5;
/// Lower bound applied to every pressure variable [Pa].
pub const PRESSURE_FLOOR: f64 = 1e4;
/// Smoothing of |q|q inside the optimization model [kg/s].
pub const FLOW_SMOOTHING: f64 = 1e-6;

/// Model level and grid of one pipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipeState {
    pub level: ModelLevel,
    pub n_intervals: usize,
}

impl PipeState {
    pub fn new(level: ModelLevel, n_intervals: usize) -> Self {
        Self { level, n_intervals }
    }

    pub fn stepsize(&self, length: f64) -> f64 {
        length / self.n_intervals as f64
    }
}

/// Index bookkeeping of variables and constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub n_nodes: usize,
    pub n_pipes: usize,
    pub n_compressors: usize,
    pub states: Vec<PipeState>,
    interior_offset: Vec<usize>,
    pipe_con_offset: Vec<usize>,
    n_vars: usize,
    n_cons: usize,
}

impl Layout {
    fn new(n_nodes: usize, n_compressors: usize, states: Vec<PipeState>) -> Self {
        let n_pipes = states.len();
        let n_arcs = n_pipes + n_compressors;
        let mut interior_offset = Vec::with_capacity(n_pipes);
        let mut pipe_con_offset = Vec::with_capacity(n_pipes);
        let mut var = n_nodes + n_arcs + n_compressors;
        let mut con = n_nodes;
        for s in &states {
            interior_offset.push(var);
            pipe_con_offset.push(con);
            var += s.n_intervals - 1;
            con += s.n_intervals;
        }
        Self {
            n_nodes,
            n_pipes,
            n_compressors,
            states,
            interior_offset,
            pipe_con_offset,
            n_vars: var,
            n_cons: con + n_compressors,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_cons(&self) -> usize {
        self.n_cons
    }

    pub fn node_var(&self, v: usize) -> usize {
        v
    }

    /// Flow variable of arc `a` (pipes first, then compressors).
    pub fn flow_var(&self, a: usize) -> usize {
        self.n_nodes + a
    }

    pub fn lift_var(&self, c: usize) -> usize {
        self.n_nodes + self.n_pipes + self.n_compressors + c
    }

    /// Interior pressure variable `k ∈ 1..n` of pipe `p`.
    pub fn interior_var(&self, p: usize, k: usize) -> usize {
        self.interior_offset[p] + k - 1
    }

    /// Constraint of pipe `p` at gridpoint `k ∈ 1..=n`.
    pub fn pipe_con(&self, p: usize, k: usize) -> usize {
        self.pipe_con_offset[p] + k - 1
    }

    pub fn compressor_con(&self, c: usize) -> usize {
        self.n_cons - self.n_compressors + c
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct PipeData {
    pub from: usize,
    pub to: usize,
    pub level: ModelLevel,
    pub n: usize,
    pub h: f64,
    /// λc²/(2A²D) in solver units.
    pub friction: f64,
    pub gravity: f64,
    /// c²/A² in solver units.
    pub ram: f64,
}

/// One member of the family of discretized problems.
#[derive(Debug, Clone)]
pub struct NlpInstance<'a> {
    pub(crate) net: &'a Network,
    pub(crate) gas: GasParameters,
    pub(crate) layout: Layout,
    pub(crate) ends: Vec<(usize, usize)>,
    pub(crate) boundary: Vec<f64>,
    pub(crate) pipes: Vec<PipeData>,
    pub(crate) cost: Vec<f64>,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
}

/// Builds the problem for the given per-pipe levels and grids (pipe order).
pub fn assemble<'a>(net: &'a Network, scn: &Scenario, gas: &GasParameters, states: &[PipeState]) -> Result<NlpInstance<'a>> {
    if states.len() != net.pipes().len() {
        return Err(GasError::InvalidGrid(format!(
            "{} pipe states for {} pipes",
            states.len(),
            net.pipes().len()
        )));
    }
    for (p, s) in net.pipes().iter().zip(states) {
        if s.n_intervals == 0 || s.n_intervals % 4 != 0 {
            return Err(GasError::InvalidGrid(format!(
                "pipe '{}' has {} intervals, expected a positive multiple of 4",
                p.id, s.n_intervals
            )));
        }
    }
    let ends = net.arc_endpoints()?;
    let layout = Layout::new(net.nodes().len(), net.compressors().len(), states.to_vec());
    let s2 = PRESSURE_SCALE * PRESSURE_SCALE;
    let pipes = net
        .pipes()
        .iter()
        .zip(states)
        .zip(&ends)
        .map(|((pipe, st), &(from, to))| {
            let co = PipeCoefficients::new(pipe, gas);
            PipeData {
                from,
                to,
                level: st.level,
                n: st.n_intervals,
                h: st.stepsize(pipe.length),
                friction: co.friction / s2,
                gravity: if st.level.has_gravity() { co.gravity } else { 0.0 },
                ram: if st.level.has_ram() { co.ram / s2 } else { 0.0 },
            }
        })
        .collect();

    let n = layout.n_vars();
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    let floor = PRESSURE_FLOOR / PRESSURE_SCALE;
    for (v, node) in net.nodes().iter().enumerate() {
        lower[layout.node_var(v)] = (node.pressure_min / PRESSURE_SCALE).max(floor);
        upper[layout.node_var(v)] = node.pressure_max / PRESSURE_SCALE;
    }
    for (a, p) in net.pipes().iter().enumerate() {
        lower[layout.flow_var(a)] = p.flow_min;
        upper[layout.flow_var(a)] = p.flow_max;
        for k in 1..states[a].n_intervals {
            lower[layout.interior_var(a, k)] = floor;
        }
    }
    let np = net.pipes().len();
    for (c, comp) in net.compressors().iter().enumerate() {
        lower[layout.flow_var(np + c)] = comp.flow_min;
        upper[layout.flow_var(np + c)] = comp.flow_max;
        lower[layout.lift_var(c)] = 0.0;
        upper[layout.lift_var(c)] = comp.lift_max / PRESSURE_SCALE;
    }

    Ok(NlpInstance {
        net,
        gas: *gas,
        boundary: scn.flows_by_index(net),
        cost: net
            .compressors()
            .iter()
            .map(|c| c.cost_coeff * PRESSURE_SCALE)
            .collect(),
        layout,
        ends,
        pipes,
        lower,
        upper,
    })
}

impl NlpInstance<'_> {
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn num_variables(&self) -> usize {
        self.layout.n_vars()
    }

    pub fn num_constraints(&self) -> usize {
        self.layout.n_cons()
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    fn variable_name(&self, i: usize) -> String {
        let l = &self.layout;
        let net = self.net;
        let np = l.n_pipes;
        if i < l.n_nodes {
            return format!("p[{}]", net.nodes()[i].id);
        }
        if i < l.n_nodes + np + l.n_compressors {
            let a = i - l.n_nodes;
            let id = net.arc_ids().nth(a).unwrap_or("?");
            return format!("q[{id}]");
        }
        if i < l.interior_offset.first().copied().unwrap_or(l.n_vars) {
            let c = i - l.n_nodes - np - l.n_compressors;
            return format!("dp[{}]", net.compressors()[c].id);
        }
        let p = l.interior_offset.partition_point(|&o| o <= i) - 1;
        format!("p[{}#{}]", net.pipes()[p].id, i - l.interior_offset[p] + 1)
    }

    fn constraint_name(&self, r: usize) -> String {
        let l = &self.layout;
        let net = self.net;
        if r < l.n_nodes {
            return format!("balance[{}]", net.nodes()[r].id);
        }
        if r >= l.compressor_con(0) && l.n_compressors > 0 {
            return format!("lift[{}]", net.compressors()[r - l.compressor_con(0)].id);
        }
        let p = l.pipe_con_offset.partition_point(|&o| o <= r) - 1;
        format!("pipe[{}#{}]", net.pipes()[p].id, r - l.pipe_con_offset[p] + 1)
    }

    /// Plain-text listing of variables with bounds and values, the
    /// objective, and all constraint residuals at `x` (SI units).
    pub fn dump(&self, x_si: &[f64]) -> String {
        use gasadapt_ipm::NlpProblem;
        let x = self.to_solver_units(x_si);
        let mut out = String::new();
        let _ = writeln!(out, "# variables {} constraints {}", self.num_variables(), self.num_constraints());
        for i in 0..self.num_variables() {
            let s = self.unit_of(i);
            let _ = writeln!(
                out,
                "var {i} {} {:e} {:e} {:e}",
                self.variable_name(i),
                self.lower[i] * s,
                x[i] * s,
                self.upper[i] * s
            );
        }
        let _ = writeln!(out, "objective {:e}", NlpProblem::objective(self, &x));
        let mut c = vec![0.0; self.num_constraints()];
        NlpProblem::constraints(self, &x, &mut c);
        for (r, v) in c.iter().enumerate() {
            let _ = writeln!(out, "con {r} {} {:e}", self.constraint_name(r), v);
        }
        out
    }

    fn unit_of(&self, i: usize) -> f64 {
        let l = &self.layout;
        let flows = l.n_nodes..l.n_nodes + l.n_pipes + l.n_compressors;
        if flows.contains(&i) {
            1.0
        } else {
            PRESSURE_SCALE
        }
    }

    fn to_solver_units(&self, x_si: &[f64]) -> Vec<f64> {
        x_si.iter().enumerate().map(|(i, v)| v / self.unit_of(i)).collect()
    }

    fn to_si(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| v * self.unit_of(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlpStatus {
    LocalOptimum,
    Infeasible,
    IterationLimit,
}

/// Result of one solve, in SI units, plus the solver state needed to warm
/// start the next member of the family.
#[derive(Debug, Clone)]
pub struct NlpSolution {
    pub status: NlpStatus,
    pub objective: f64,
    /// Scaled KKT error reached.
    pub kkt_error: f64,
    /// Max-norm of the constraint residual in solver units.
    pub constraint_violation: f64,
    pub iterations: usize,
    /// All variables in SI units, indexed by [`Layout`].
    pub values: Vec<f64>,
    pub layout: Layout,
    pub(crate) x: Vec<f64>,
    pub(crate) lambda: Vec<f64>,
    pub(crate) z_lower: Vec<f64>,
    pub(crate) z_upper: Vec<f64>,
    pub(crate) mu: f64,
}

impl NlpSolution {
    pub fn node_pressure(&self, v: usize) -> f64 {
        self.values[self.layout.node_var(v)]
    }

    pub fn node_pressures(&self) -> Vec<f64> {
        (0..self.layout.n_nodes).map(|v| self.node_pressure(v)).collect()
    }

    pub fn flow(&self, a: usize) -> f64 {
        self.values[self.layout.flow_var(a)]
    }

    pub fn flows(&self) -> Vec<f64> {
        (0..self.layout.n_pipes + self.layout.n_compressors)
            .map(|a| self.flow(a))
            .collect()
    }

    pub fn lift(&self, c: usize) -> f64 {
        self.values[self.layout.lift_var(c)]
    }

    pub fn lifts(&self) -> Vec<f64> {
        (0..self.layout.n_compressors).map(|c| self.lift(c)).collect()
    }

    /// Pressures [Pa] at all gridpoints of pipe `p`, endpoints included.
    pub fn pipe_profile(&self, net: &Network, p: usize) -> Result<Vec<f64>> {
        let ends = net.arc_endpoints()?;
        let (from, to) = ends[p];
        let n = self.layout.states[p].n_intervals;
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.node_pressure(from));
        for k in 1..n {
            out.push(self.values[self.layout.interior_var(p, k)]);
        }
        out.push(self.node_pressure(to));
        Ok(out)
    }

    /// Grid of pipe `p`.
    pub fn grid(&self, net: &Network, p: usize) -> Result<Grid> {
        Grid::new(net.pipes()[p].length, self.layout.states[p].n_intervals)
    }
}

/// Solver settings for one NLP solve.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Tolerance on the KKT error of the scaled problem.
    pub eps_opt: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eps_opt: 1e-8,
            max_iterations: 500,
        }
    }
}

/// Solves the instance, warm started from `warm` when given. A warm start
/// that fails to converge is retried from a cold start.
pub fn solve(instance: &NlpInstance, warm: Option<&NlpSolution>, options: &SolveOptions) -> Result<NlpSolution> {
    if let Some(prev) = warm {
        let (x0, ws, mu) = start::warm_start(instance, prev);
        let opts = IpmOptions {
            tol: options.eps_opt,
            max_iterations: options.max_iterations,
            mu_init: mu,
            bound_push: 1e-8,
            bound_frac: 1e-8,
            ..IpmOptions::default()
        };
        let res = gasadapt_ipm::solve(instance, &x0, &opts, Some(&ws));
        if res.status == Status::Optimal {
            return Ok(finish(instance, res));
        }
        debug!("warm start ended with {:?}; retrying cold", res.status);
    }
    let x0 = start::cold_start(instance);
    let opts = IpmOptions {
        tol: options.eps_opt,
        max_iterations: options.max_iterations,
        ..IpmOptions::default()
    };
    let res = gasadapt_ipm::solve(instance, &x0, &opts, None);
    if res.status == Status::NumericalFailure {
        return Err(GasError::SolverFailure(format!(
            "numerical failure after {} iterations",
            res.iterations
        )));
    }
    Ok(finish(instance, res))
}

fn finish(instance: &NlpInstance, res: gasadapt_ipm::IpmResult) -> NlpSolution {
    let status = match res.status {
        Status::Optimal => NlpStatus::LocalOptimum,
        Status::Infeasible => NlpStatus::Infeasible,
        Status::IterationLimit | Status::NumericalFailure => NlpStatus::IterationLimit,
    };
    debug!(
        "NLP {} vars {} cons: {:?} after {} iterations, kkt {:.2e}",
        instance.num_variables(),
        instance.num_constraints(),
        status,
        res.iterations,
        res.kkt_error
    );
    NlpSolution {
        status,
        objective: res.objective,
        kkt_error: res.kkt_error,
        constraint_violation: res.constraint_violation,
        iterations: res.iterations,
        values: instance.to_si(&res.x),
        layout: instance.layout.clone(),
        x: res.x,
        lambda: res.lambda,
        z_lower: res.z_lower,
        z_upper: res.z_upper,
        mu: res.mu,
    }
}

#[cfg(test)]
mod tests;
