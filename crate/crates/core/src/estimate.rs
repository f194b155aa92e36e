//! Per-pipe a-posteriori error estimators on the evaluation grid (stepsize 4h).
//!
//! ```text
//! η_d = ‖p¹(·; 2h) − p¹(·; 4h)‖∞
//! η_m = ‖p¹(·; 2h) − p^ℓ(·; h)‖∞      (0 on level 1)
//! η   = η_d + η_m
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GasError, Result};
use crate::hierarchy::{ModelLevel, PipeCoefficients};
use crate::integrator::{integrate_with, restrict_to_grid, Grid, PressureProfile};
use crate::network::{GasParameters, Pipe};

/// Environment variable capping estimator threads.
pub const THREADS_ENV: &str = "GASADAPT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorEstimate {
    pub eta_d: f64,
    pub eta_m: f64,
    pub eta: f64,
}

impl ErrorEstimate {
    pub fn new(eta_d: f64, eta_m: f64) -> Self {
        Self {
            eta_d,
            eta_m,
            eta: eta_d + eta_m,
        }
    }
}

fn max_diff_on(a: &PressureProfile, b: &PressureProfile, eval: &Grid) -> Result<f64> {
    let ra = restrict_to_grid(a, eval)?;
    let rb = restrict_to_grid(b, eval)?;
    Ok(ra
        .values
        .iter()
        .zip(&rb.values)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

/// The three grids of one pipe: h, 2h and the evaluation grid 4h.
fn grids(length: f64, h: f64) -> Result<(Grid, Grid, Grid)> {
    let fine = Grid::with_stepsize(length, h)?;
    if !fine.is_estimable() {
        return Err(GasError::InvalidGrid(format!(
            "{} intervals is not a multiple of 4",
            fine.n_intervals
        )));
    }
    Ok((fine, fine.coarsened(2)?, fine.coarsened(4)?))
}

/// Integrations shared by the estimators of one pipe.
struct PipeProfiles {
    co: PipeCoefficients,
    p0: f64,
    q: f64,
    fine: Grid,
    eval: Grid,
    m1_2h: PressureProfile,
}

impl PipeProfiles {
    fn new(co: PipeCoefficients, length: f64, p0: f64, q: f64, h: f64) -> Result<Self> {
        let (fine, two_h, eval) = grids(length, h)?;
        let m1_2h = integrate_with(ModelLevel::M1, &co, p0, q, &two_h)?;
        Ok(Self {
            co,
            p0,
            q,
            fine,
            eval,
            m1_2h,
        })
    }

    fn eta_d(&self) -> Result<f64> {
        let m1_4h = integrate_with(ModelLevel::M1, &self.co, self.p0, self.q, &self.eval)?;
        max_diff_on(&self.m1_2h, &m1_4h, &self.eval)
    }

    fn eta_m(&self, level: ModelLevel) -> Result<f64> {
        if level == ModelLevel::M1 {
            return Ok(0.0);
        }
        let coarse_model = integrate_with(level, &self.co, self.p0, self.q, &self.fine)?;
        max_diff_on(&self.m1_2h, &coarse_model, &self.eval)
    }
}

/// Discretization error estimate of a pipe with stepsize `h`.
pub fn discretization_error(pipe: &Pipe, gas: &GasParameters, p0: f64, q: f64, h: f64) -> Result<f64> {
    PipeProfiles::new(PipeCoefficients::new(pipe, gas), pipe.length, p0, q, h)?.eta_d()
}

/// Model error estimate of a pipe modelled at `level` with stepsize `h`.
pub fn model_error(pipe: &Pipe, gas: &GasParameters, p0: f64, q: f64, level: ModelLevel, h: f64) -> Result<f64> {
    if level == ModelLevel::M1 {
        return Ok(0.0);
    }
    PipeProfiles::new(PipeCoefficients::new(pipe, gas), pipe.length, p0, q, h)?.eta_m(level)
}

pub fn total_error(
    pipe: &Pipe,
    gas: &GasParameters,
    p0: f64,
    q: f64,
    level: ModelLevel,
    h: f64,
) -> Result<ErrorEstimate> {
    let prof = PipeProfiles::new(PipeCoefficients::new(pipe, gas), pipe.length, p0, q, h)?;
    Ok(ErrorEstimate::new(prof.eta_d()?, prof.eta_m(level)?))
}

/// Average total error per pipe.
pub fn network_error_summary(estimates: &[ErrorEstimate]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(GasError::EmptyNetwork);
    }
    Ok(estimates.iter().map(|e| e.eta).sum::<f64>() / estimates.len() as f64)
}

/// Input of one pipe assessment. The pipe is traversed in flow direction:
/// `p0` is the pressure at the inflow end and `q ≥ 0` unless the flow is
/// exactly zero.
#[derive(Debug, Clone, Copy)]
pub struct EstimateJob {
    pub coefficients: PipeCoefficients,
    pub length: f64,
    pub p0: f64,
    pub q: f64,
    pub level: ModelLevel,
    pub stepsize: f64,
}

impl EstimateJob {
    /// Orients the pipe along the flow. For `q < 0` the inflow end is the
    /// pipe's `to` node, whose pressure must be passed as `p_to`.
    pub fn oriented(pipe: &Pipe, gas: &GasParameters, p_from: f64, p_to: f64, q: f64, level: ModelLevel, h: f64) -> Self {
        let co = PipeCoefficients::new(pipe, gas);
        let (coefficients, p0, q) = if q < 0.0 { (co.reversed(), p_to, -q) } else { (co, p_from, q) };
        Self {
            coefficients,
            length: pipe.length,
            p0,
            q,
            level,
            stepsize: h,
        }
    }
}

/// Estimates of one pipe plus the model error at the neighbouring level the
/// marking rules need: level 2 for pipes on level 3, and the next coarser
/// level for pipes on levels 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeAssessment {
    pub estimate: ErrorEstimate,
    /// η_m at level 2, computed for pipes on level 3.
    pub eta_m_finer: Option<f64>,
    /// η_m at level ℓ + 1, computed for pipes on levels 1 and 2.
    pub eta_m_coarser: Option<f64>,
}

pub fn assess(job: &EstimateJob) -> Result<PipeAssessment> {
    let prof = PipeProfiles::new(job.coefficients, job.length, job.p0, job.q, job.stepsize)?;
    let estimate = ErrorEstimate::new(prof.eta_d()?, prof.eta_m(job.level)?);
    let (finer, coarser) = match job.level {
        ModelLevel::M3 => (Some(prof.eta_m(ModelLevel::M2)?), None),
        l => (None, Some(prof.eta_m(l.coarser())?)),
    };
    Ok(PipeAssessment {
        estimate,
        eta_m_finer: finer,
        eta_m_coarser: coarser,
    })
}

/// Number of estimator threads. `GASADAPT_THREADS` caps an explicit request
/// and replaces the machine default when nothing was requested.
pub fn resolve_threads(requested: Option<usize>) -> usize {
    let env = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    let threads = match (requested, env) {
        (Some(r), Some(c)) => r.min(c),
        (Some(r), None) => r,
        (None, Some(c)) => c,
        (None, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    threads.max(1)
}

/// Evaluates pipe assessments concurrently; results keep the job order.
pub struct ParallelEstimator {
    pool: rayon::ThreadPool,
}

impl ParallelEstimator {
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| GasError::Config(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn assess_all(&self, jobs: &[EstimateJob]) -> Result<Vec<PipeAssessment>> {
        self.pool.install(|| jobs.par_iter().map(assess).collect())
    }
}
