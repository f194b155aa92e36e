//! Adaptive control of model levels and stepsizes.
//!
//! Every pipe starts on the coarsest model with the initial grid. After each
//! NLP solve the per-pipe estimators decide which pipes get a finer grid or
//! a more accurate model; after `mu` such rounds, pipes whose accuracy is
//! not needed are coarsened or switched down again.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use log::{info, warn};

use crate::error::{GasError, Result};
use crate::estimate::{resolve_threads, EstimateJob, ParallelEstimator, PipeAssessment};
use crate::hierarchy::ModelLevel;
use crate::network::{GasParameters, Network, Scenario};
use crate::nlp::{self, NlpSolution, NlpStatus, PipeState, SolveOptions, PRESSURE_SCALE};

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    /// Tolerance on the average estimated error per pipe [Pa].
    pub eps: f64,
    pub theta_d: f64,
    pub theta_m: f64,
    pub phi_d: f64,
    pub phi_m: f64,
    pub tau: f64,
    /// Inner rounds per outer iteration.
    pub mu: usize,
    /// KKT tolerance of the NLP solves (bar and kg/s scaled units).
    pub eps_opt: f64,
    pub max_outer_iterations: usize,
    /// Initial intervals per pipe; a positive multiple of 4.
    pub initial_intervals: usize,
    /// Reserve `eps_opt` (read as bar) of the tolerance for the NLP error.
    pub split_tolerance: bool,
    /// Estimator threads; `None` uses the environment or machine default.
    pub threads: Option<usize>,
    /// Tightening eps_opt along the iterations; not implemented.
    pub adaptive_eps_opt: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            eps: 1e-4 * PRESSURE_SCALE,
            theta_d: 0.7,
            theta_m: 0.7,
            phi_d: 0.3,
            phi_m: 0.3,
            tau: 1.1,
            mu: 4,
            eps_opt: 1e-8,
            max_outer_iterations: 100,
            initial_intervals: 4,
            split_tolerance: false,
            threads: None,
            adaptive_eps_opt: false,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(GasError::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("theta_d", self.theta_d)?;
        unit("theta_m", self.theta_m)?;
        unit("phi_d", self.phi_d)?;
        unit("phi_m", self.phi_m)?;
        if !(self.tau >= 1.0) {
            return Err(GasError::Config(format!("tau must be at least 1, got {}", self.tau)));
        }
        if self.mu == 0 {
            return Err(GasError::Config("mu must be positive".into()));
        }
        if !(self.eps > 0.0) {
            return Err(GasError::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.eps_opt > 0.0) {
            return Err(GasError::Config(format!("eps_opt must be positive, got {}", self.eps_opt)));
        }
        if self.initial_intervals == 0 || self.initial_intervals % 4 != 0 {
            return Err(GasError::Config(format!(
                "initial_intervals must be a positive multiple of 4, got {}",
                self.initial_intervals
            )));
        }
        if self.split_tolerance && self.feasibility_eps() <= 0.0 {
            return Err(GasError::Config("eps_opt exceeds eps".into()));
        }
        if self.adaptive_eps_opt {
            return Err(GasError::Unimplemented("adaptive_eps_opt"));
        }
        Ok(())
    }

    /// Tolerance used in the feasibility test [Pa].
    pub fn feasibility_eps(&self) -> f64 {
        if self.split_tolerance {
            self.eps - self.eps_opt * PRESSURE_SCALE
        } else {
            self.eps
        }
    }
}

/// A violated termination condition of the parameter set.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterWarning {
    /// ½ Θ_d μ > Φ_d fails.
    Discretization { lhs: f64, rhs: f64 },
    /// Θ_m μ > τ Φ_m |pipes| fails.
    Model { lhs: f64, rhs: f64 },
}

impl fmt::Display for ParameterWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterWarning::Discretization { lhs, rhs } => write!(
                f,
                "refinement condition violated: theta_d*mu/2 = {lhs:.6} is not greater than phi_d = {rhs:.6}"
            ),
            ParameterWarning::Model { lhs, rhs } => write!(
                f,
                "model switching condition violated: theta_m*mu = {lhs:.6} is not greater than tau*phi_m*pipes = {rhs:.6}"
            ),
        }
    }
}

/// Checks the strict inequalities that guarantee finite termination.
pub fn validate_parameters(config: &AdaptiveConfig, n_pipes: usize) -> Vec<ParameterWarning> {
    let mu = config.mu as f64;
    let mut out = Vec::new();
    let (lhs, rhs) = (0.5 * config.theta_d * mu, config.phi_d);
    if !(lhs > rhs) {
        out.push(ParameterWarning::Discretization { lhs, rhs });
    }
    let (lhs, rhs) = (config.theta_m * mu, config.tau * config.phi_m * n_pipes as f64);
    if !(lhs > rhs) {
        out.push(ParameterWarning::Model { lhs, rhs });
    }
    out
}

/// Whether the average total error per pipe is at most `eps`.
pub fn is_eps_feasible(eta: &[f64], eps: f64) -> Result<bool> {
    if eta.is_empty() {
        return Err(GasError::EmptyNetwork);
    }
    Ok(eta.iter().sum::<f64>() / eta.len() as f64 <= eps)
}

/// Level a pipe is switched up to: one level if that alone gains more
/// than `eps`, otherwise straight to level 1.
pub fn switch_up_target(level: ModelLevel, eta_m_at: impl Fn(ModelLevel) -> f64, eps: f64) -> ModelLevel {
    match level {
        ModelLevel::M1 => ModelLevel::M1,
        l => {
            let up = l.finer();
            if eta_m_at(l) - eta_m_at(up) > eps {
                up
            } else {
                ModelLevel::M1
            }
        }
    }
}

fn descending<K: Ord + Clone>(v: &[(K, f64)]) -> Vec<(K, f64)> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    s
}

fn ascending<K: Ord + Clone>(v: &[(K, f64)]) -> Vec<(K, f64)> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    s
}

/// Smallest greedy prefix (largest values first) whose sum reaches
/// `fraction` of the total.
fn bulk<K: Ord + Clone>(v: &[(K, f64)], fraction: f64) -> BTreeSet<K> {
    let sorted = descending(v);
    let total: f64 = sorted.iter().map(|e| e.1).sum();
    let target = fraction * total;
    let mut acc = 0.0;
    let mut out = BTreeSet::new();
    for (k, x) in sorted {
        if acc >= target {
            break;
        }
        acc += x;
        out.insert(k);
    }
    out
}

/// Largest greedy prefix (smallest values first) whose sum stays within
/// `budget`.
fn within<K: Ord + Clone>(v: &[(K, f64)], budget: f64) -> BTreeSet<K> {
    let mut acc = 0.0;
    let mut out = BTreeSet::new();
    for (k, x) in ascending(v) {
        if acc + x > budget {
            break;
        }
        acc += x;
        out.insert(k);
    }
    out
}

/// Pipes whose grid is refined.
pub fn mark_refine<K: Ord + Clone>(eta_d: &[(K, f64)], theta_d: f64) -> BTreeSet<K> {
    bulk(eta_d, theta_d)
}

/// Pipes switched up, given the model error reduction of each pipe.
pub fn mark_switch_up<K: Ord + Clone>(reduction: &[(K, f64)], theta_m: f64, eps: f64) -> BTreeSet<K> {
    let eligible: Vec<_> = reduction.iter().filter(|e| e.1 > eps).cloned().collect();
    bulk(&eligible, theta_m)
}

/// Pipes whose grid is coarsened; `excluded` pipes (already on the initial
/// grid) are never marked but count towards the total.
pub fn mark_coarsen<K: Ord + Clone>(eta_d: &[(K, f64)], phi_d: f64, excluded: &BTreeSet<K>) -> BTreeSet<K> {
    let total: f64 = ascending(eta_d).iter().map(|e| e.1).sum();
    let candidates: Vec<_> = eta_d.iter().filter(|e| !excluded.contains(&e.0)).cloned().collect();
    within(&candidates, phi_d * total)
}

/// Pipes switched down one level, given the model error increase of each
/// pipe on levels 1 and 2.
pub fn mark_switch_down<K: Ord + Clone>(increase: &[(K, f64)], phi_m: f64, tau: f64, eps: f64) -> BTreeSet<K> {
    let eligible: Vec<_> = increase.iter().filter(|e| e.1 <= tau * eps).cloned().collect();
    let total: f64 = ascending(&eligible).iter().map(|e| e.1).sum();
    within(&eligible, phi_m * total)
}

/// One row of the run trace, written after every NLP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub solve_index: usize,
    pub outer_k: usize,
    pub inner_j: usize,
    pub n_vars: usize,
    pub n_cons: usize,
    pub nlp_seconds: f64,
    pub ivp_seconds: f64,
    pub sum_eta_d: f64,
    pub sum_eta_m: f64,
    pub sum_eta: f64,
    pub avg_eta: f64,
    pub n_refined: usize,
    pub n_switched_up: usize,
    /// Coarsenings and switch-downs applied since the previous solve.
    pub n_coarsened: usize,
    pub n_switched_down: usize,
    /// Σ η of the estimates the preceding marking was based on.
    pub sum_eta_before: Option<f64>,
}

impl TraceRecord {
    pub const HEADER: [&'static str; 15] = [
        "solve_index",
        "outer_k",
        "inner_j",
        "n_vars",
        "n_cons",
        "nlp_seconds",
        "ivp_seconds",
        "sum_eta_d",
        "sum_eta_m",
        "sum_eta",
        "avg_eta",
        "n_refined",
        "n_switched_up",
        "n_coarsened",
        "n_switched_down",
    ];
}

/// Levels, grids, estimates and trace of a run.
#[derive(Debug, Clone)]
pub struct AdaptiveState {
    pub pipe_ids: Vec<String>,
    pub states: Vec<PipeState>,
    pub assessments: Vec<PipeAssessment>,
    pub outer_k: usize,
    pub inner_j: usize,
    pub trace: Vec<TraceRecord>,
}

impl AdaptiveState {
    pub fn eta(&self) -> Vec<f64> {
        self.assessments.iter().map(|a| a.estimate.eta).collect()
    }

    pub fn average_eta(&self) -> f64 {
        let eta = self.eta();
        eta.iter().sum::<f64>() / eta.len().max(1) as f64
    }

    pub fn stepsize(&self, net: &Network, p: usize) -> f64 {
        self.states[p].stepsize(net.pipes()[p].length)
    }

}

/// Estimator jobs for all pipes at the given solution.
pub fn estimate_jobs(net: &Network, gas: &GasParameters, sol: &NlpSolution, states: &[PipeState]) -> Result<Vec<EstimateJob>> {
    let ends = net.arc_endpoints()?;
    Ok(net
        .pipes()
        .iter()
        .enumerate()
        .map(|(p, pipe)| {
            let (f, t) = ends[p];
            EstimateJob::oriented(
                pipe,
                gas,
                sol.node_pressure(f),
                sol.node_pressure(t),
                sol.flow(p),
                states[p].level,
                states[p].stepsize(pipe.length),
            )
        })
        .collect())
}

struct Controller<'a> {
    net: &'a Network,
    scn: &'a Scenario,
    gas: &'a GasParameters,
    estimator: ParallelEstimator,
    solve_options: SolveOptions,
    eps: f64,
}

impl Controller<'_> {
    fn solve(&self, states: &[PipeState], warm: Option<&NlpSolution>, solves: usize) -> Result<(NlpSolution, f64, usize, usize)> {
        let start = Instant::now();
        let inst = nlp::assemble(self.net, self.scn, self.gas, states)?;
        let sol = nlp::solve(&inst, warm, &self.solve_options)?;
        let secs = start.elapsed().as_secs_f64();
        match sol.status {
            NlpStatus::LocalOptimum => {}
            NlpStatus::Infeasible => return Err(GasError::Infeasible { solves }),
            NlpStatus::IterationLimit => {
                return Err(GasError::SolverFailure(format!(
                    "NLP iteration limit after {} iterations (kkt error {:.2e})",
                    sol.iterations, sol.kkt_error
                )))
            }
        }
        Ok((sol, secs, inst.num_variables(), inst.num_constraints()))
    }

    fn estimate(&self, sol: &NlpSolution, states: &[PipeState]) -> Result<(Vec<PipeAssessment>, f64)> {
        let start = Instant::now();
        let jobs = estimate_jobs(self.net, self.gas, sol, states)?;
        let out = self.estimator.assess_all(&jobs)?;
        Ok((out, start.elapsed().as_secs_f64()))
    }
}

/// Runs the adaptive loop until the average estimated error per pipe is at
/// most the tolerance.
pub fn run(net: &Network, scn: &Scenario, gas: &GasParameters, config: &AdaptiveConfig) -> Result<(NlpSolution, AdaptiveState)> {
    config.validate()?;
    if net.pipes().is_empty() {
        return Err(GasError::EmptyNetwork);
    }
    for w in validate_parameters(config, net.pipes().len()) {
        warn!("{w}");
    }
    let ctl = Controller {
        net,
        scn,
        gas,
        estimator: ParallelEstimator::new(resolve_threads(config.threads))?,
        solve_options: SolveOptions {
            eps_opt: config.eps_opt,
            ..SolveOptions::default()
        },
        eps: config.feasibility_eps(),
    };
    let eps = ctl.eps;
    let initial = config.initial_intervals;
    let mut states = vec![PipeState::new(ModelLevel::M3, initial); net.pipes().len()];

    let (mut sol, nlp_secs, n_vars, n_cons) = ctl.solve(&states, None, 1)?;
    let (mut assessments, ivp_secs) = ctl.estimate(&sol, &states)?;
    let mut state = AdaptiveState {
        pipe_ids: net.pipes().iter().map(|p| p.id.clone()).collect(),
        states: states.clone(),
        assessments: assessments.clone(),
        outer_k: 0,
        inner_j: 0,
        trace: Vec::new(),
    };
    state.trace.push(record(1, 0, 0, n_vars, n_cons, nlp_secs, ivp_secs, &assessments, [0; 4], None));
    if is_eps_feasible(&state.eta(), eps)? {
        return Ok((sol, state));
    }

    // Marking keys are ranks in pipe-id order, so ties break by id.
    let mut by_rank: Vec<usize> = (0..states.len()).collect();
    by_rank.sort_by(|&a, &b| state.pipe_ids[a].cmp(&state.pipe_ids[b]));
    let mut rank = vec![0; states.len()];
    for (r, &p) in by_rank.iter().enumerate() {
        rank[p] = r;
    }
    let keyed = |values: &mut dyn Iterator<Item = f64>| -> Vec<(usize, f64)> {
        values.enumerate().map(|(p, v)| (rank[p], v)).collect()
    };

    let mut pending_coarse = [0usize; 2];
    for k in 1..=config.max_outer_iterations {
        for j in 1..=config.mu {
            let sum_before: f64 = assessments.iter().map(|a| a.estimate.eta).sum();
            let eta_d = keyed(&mut assessments.iter().map(|a| a.estimate.eta_d));
            let targets: Vec<ModelLevel> = states
                .iter()
                .zip(&assessments)
                .map(|(s, a)| {
                    switch_up_target(
                        s.level,
                        |l| model_error_at(s.level, a, l),
                        eps,
                    )
                })
                .collect();
            let reduction = keyed(&mut states.iter().zip(&assessments).zip(&targets).map(|((s, a), &t)| {
                a.estimate.eta_m - model_error_at(s.level, a, t)
            }));
            let refine = mark_refine(&eta_d, config.theta_d);
            let up = mark_switch_up(&reduction, config.theta_m, eps);
            for p in up.iter().map(|&r| by_rank[r]) {
                states[p].level = targets[p];
            }
            for p in refine.iter().map(|&r| by_rank[r]) {
                states[p].n_intervals *= 2;
            }
            let solves = state.trace.len() + 1;
            let (next, nlp_secs, n_vars, n_cons) = ctl.solve(&states, Some(&sol), solves)?;
            sol = next;
            let (a, ivp_secs) = ctl.estimate(&sol, &states)?;
            assessments = a;
            info!(
                "solve {solves}: refined {}, switched up {}, avg eta {:.3e} Pa",
                refine.len(),
                up.len(),
                assessments.iter().map(|a| a.estimate.eta).sum::<f64>() / assessments.len() as f64
            );
            state.trace.push(record(
                solves,
                k,
                j,
                n_vars,
                n_cons,
                nlp_secs,
                ivp_secs,
                &assessments,
                [refine.len(), up.len(), pending_coarse[0], pending_coarse[1]],
                Some(sum_before),
            ));
            pending_coarse = [0, 0];
            state.states = states.clone();
            state.assessments = assessments.clone();
            state.outer_k = k;
            state.inner_j = j;
            if is_eps_feasible(&state.eta(), eps)? {
                return Ok((sol, state));
            }
        }

        let eta_d = keyed(&mut assessments.iter().map(|a| a.estimate.eta_d));
        let at_initial: BTreeSet<usize> = (0..states.len())
            .filter(|&p| states[p].n_intervals <= initial)
            .map(|p| rank[p])
            .collect();
        let coarsen = mark_coarsen(&eta_d, config.phi_d, &at_initial);
        let increase: Vec<(usize, f64)> = states
            .iter()
            .zip(&assessments)
            .enumerate()
            .filter(|(_, (s, _))| s.level != ModelLevel::M3)
            .map(|(p, (s, a))| (rank[p], model_error_at(s.level, a, s.level.coarser()) - a.estimate.eta_m))
            .collect();
        let down = mark_switch_down(&increase, config.phi_m, config.tau, eps);
        for p in down.iter().map(|&r| by_rank[r]) {
            states[p].level = states[p].level.coarser();
        }
        for p in coarsen.iter().map(|&r| by_rank[r]) {
            states[p].n_intervals /= 2;
        }
        pending_coarse = [coarsen.len(), down.len()];
        if !coarsen.is_empty() || !down.is_empty() {
            // Marking in the next round needs estimates for the new state.
            let (a, _) = ctl.estimate(&sol, &states)?;
            assessments = a;
        }
    }
    Err(GasError::IterationLimit(config.max_outer_iterations))
}

/// η_m at `target` from an assessment made on `level`; only the levels the
/// assessment covers are available.
fn model_error_at(level: ModelLevel, a: &PipeAssessment, target: ModelLevel) -> f64 {
    if target == ModelLevel::M1 {
        0.0
    } else if target == level {
        a.estimate.eta_m
    } else if target < level {
        a.eta_m_finer.unwrap_or(0.0)
    } else {
        a.eta_m_coarser.unwrap_or(a.estimate.eta_m)
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    solve_index: usize,
    outer_k: usize,
    inner_j: usize,
    n_vars: usize,
    n_cons: usize,
    nlp_seconds: f64,
    ivp_seconds: f64,
    assessments: &[PipeAssessment],
    counts: [usize; 4],
    sum_eta_before: Option<f64>,
) -> TraceRecord {
    let sum_eta_d = assessments.iter().map(|a| a.estimate.eta_d).sum();
    let sum_eta_m = assessments.iter().map(|a| a.estimate.eta_m).sum();
    let sum_eta: f64 = assessments.iter().map(|a| a.estimate.eta).sum();
    TraceRecord {
        solve_index,
        outer_k,
        inner_j,
        n_vars,
        n_cons,
        nlp_seconds,
        ivp_seconds,
        sum_eta_d,
        sum_eta_m,
        sum_eta,
        avg_eta: sum_eta / assessments.len().max(1) as f64,
        n_refined: counts[0],
        n_switched_up: counts[1],
        n_coarsened: counts[2],
        n_switched_down: counts[3],
        sum_eta_before,
    }
}
