//! Command-line interface. Exit codes: 0 success, 2 infeasible, 1 error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::adaptive::{self, estimate_jobs, AdaptiveConfig};
use crate::error::{GasError, Result};
use crate::estimate::{resolve_threads, EstimateJob, ParallelEstimator};
use crate::hierarchy::ModelLevel;
use crate::integrator::{integrate, Grid};
use crate::io;
use crate::network::{validate_network, GasParameters, Network, Pipe, Scenario};
use crate::nlp::{self, NlpStatus, PipeState, SolveOptions};

#[derive(Debug, Parser)]
#[command(name = "gasadapt", version, about = "Adaptive model and discretization control for gas network optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the adaptive loop and write solution, trace and estimates.
    Run(RunArgs),
    /// Integrate a single pipe and print the profile as CSV.
    Simulate(SimulateArgs),
    /// Per-pipe error estimates for a solution file.
    Estimate(EstimateArgs),
    /// Check the termination conditions of a parameter set.
    ValidateParams(ValidateArgs),
    /// Solve one NLP with all pipes on a fixed level and grid.
    NlpSolve(NlpSolveArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model level 1, 2 or 3.
    #[arg(long, default_value_t = 3)]
    pub level: u8,
    /// Stepsize [m].
    #[arg(long, default_value_t = 2500.0)]
    pub h: f64,
    /// Inlet pressure [Pa].
    #[arg(long, default_value_t = 60e5)]
    pub p0: f64,
    /// Mass flow [kg/s].
    #[arg(long, default_value_t = 100.0)]
    pub q: f64,
    #[arg(long, default_value_t = 10_000.0)]
    pub length: f64,
    #[arg(long, default_value_t = 0.6)]
    pub diameter: f64,
    #[arg(long, default_value_t = 0.01)]
    pub friction: f64,
    #[arg(long, default_value_t = 0.0)]
    pub slope: f64,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    /// Estimate CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of pipes; taken from --network when absent.
    #[arg(long)]
    pub pipes: Option<usize>,
    #[arg(long)]
    pub network: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NlpSolveArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub level: u8,
    /// Number of grid halvings applied to the initial grid.
    #[arg(long, default_value_t = 0)]
    pub refine: u32,
    #[arg(long, default_value_t = 4)]
    pub initial_intervals: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub eps_opt: f64,
    /// Write the instance listing at the solution.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Solution JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-pipe estimates at the solution.
    #[arg(long)]
    pub estimates: Option<PathBuf>,
}

/// Parses `args` and executes the command; returns the process exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(GasError::Infeasible { solves }) => {
            eprintln!("error: NLP infeasible after {solves} solves");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::ValidateParams(a) => validate_params(a),
        Command::NlpSolve(a) => nlp_solve(a),
    }
}

fn load_problem(network: &PathBuf, scenario: &PathBuf) -> Result<(Network, GasParameters, Scenario)> {
    let (net, gas) = io::load_network(network)?;
    let scn = io::load_scenario(scenario)?;
    let report = validate_network(&net, &scn);
    if !report.is_empty() {
        return Err(GasError::Validation(report.to_string()));
    }
    Ok((net, gas, scn))
}

fn run(a: RunArgs) -> Result<i32> {
    let (net, gas, scn) = load_problem(&a.network, &a.scenario)?;
    let config = match &a.config {
        Some(p) => io::load_config(p)?,
        None => AdaptiveConfig::default(),
    };
    for w in adaptive::validate_parameters(&config, net.pipes().len()) {
        eprintln!("warning: {w}");
    }
    let start = Instant::now();
    let (sol, state) = adaptive::run(&net, &scn, &gas, &config)?;
    fs::create_dir_all(&a.out)?;
    io::write_solution(a.out.join("solution.json"), &net, &sol)?;
    io::export_trace(a.out.join("trace.csv"), &state.trace)?;
    io::export_estimates(a.out.join("estimates.csv"), &net, &state.states, &state.assessments)?;
    eprintln!(
        "{} NLP solves in {:.3} s, objective {:.6e}, average error {:.3e} Pa",
        state.trace.len(),
        start.elapsed().as_secs_f64(),
        sol.objective,
        state.average_eta()
    );
    Ok(0)
}

fn level(v: u8) -> Result<ModelLevel> {
    ModelLevel::try_from(v).map_err(GasError::Config)
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    let level = level(a.level)?;
    let pipe = Pipe::new("pipe", "in", "out", a.length, a.diameter, a.friction).with_slope(a.slope);
    let grid = Grid::with_stepsize(a.length, a.h)?;
    let prof = integrate(level, &pipe, &GasParameters::default(), a.p0, a.q, &grid)?;
    match a.out {
        Some(p) => io::write_profile(fs::File::create(p)?, &prof)?,
        None => io::write_profile(io::stdout_lock(), &prof)?,
    }
    Ok(0)
}

fn estimate(a: EstimateArgs) -> Result<i32> {
    let (net, gas) = io::load_network(&a.network)?;
    let doc = io::load_solution(&a.solution)?;
    let (states, pressures, flows) = doc.resolve(&net)?;
    let ends = net.arc_endpoints()?;
    let jobs: Vec<EstimateJob> = net
        .pipes()
        .iter()
        .enumerate()
        .map(|(p, pipe)| {
            let (f, t) = ends[p];
            EstimateJob::oriented(
                pipe,
                &gas,
                pressures[f],
                pressures[t],
                flows[p],
                states[p].level,
                states[p].stepsize(pipe.length),
            )
        })
        .collect();
    let est = ParallelEstimator::new(resolve_threads(a.threads))?;
    let assessments = est.assess_all(&jobs)?;
    match a.out {
        Some(p) => io::export_estimates(p, &net, &states, &assessments)?,
        None => io::write_estimates(io::stdout_lock(), &net, &states, &assessments)?,
    }
    Ok(0)
}

fn validate_params(a: ValidateArgs) -> Result<i32> {
    let config = match &a.config {
        Some(p) => io::load_config(p)?,
        None => AdaptiveConfig::default(),
    };
    let n = match (a.pipes, &a.network) {
        (Some(n), _) => n,
        (None, Some(p)) => io::load_network(p)?.0.pipes().len(),
        (None, None) => return Err(GasError::Config("either --pipes or --network is required".into())),
    };
    let warnings = adaptive::validate_parameters(&config, n);
    let mut out = io::stdout_lock();
    for w in &warnings {
        writeln!(out, "warning: {w}")?;
    }
    if warnings.is_empty() {
        writeln!(out, "all termination conditions hold for {n} pipes")?;
    }
    Ok(0)
}

fn nlp_solve(a: NlpSolveArgs) -> Result<i32> {
    let (net, gas, scn) = load_problem(&a.network, &a.scenario)?;
    let level = level(a.level)?;
    if a.initial_intervals == 0 || a.initial_intervals % 4 != 0 {
        return Err(GasError::Config("initial intervals must be a positive multiple of 4".into()));
    }
    let n = a.initial_intervals << a.refine;
    let states = vec![PipeState::new(level, n); net.pipes().len()];
    let start = Instant::now();
    let inst = nlp::assemble(&net, &scn, &gas, &states)?;
    let sol = nlp::solve(
        &inst,
        None,
        &SolveOptions {
            eps_opt: a.eps_opt,
            ..SolveOptions::default()
        },
    )?;
    let secs = start.elapsed().as_secs_f64();
    eprintln!(
        "{} variables, {} constraints, {:?} after {} iterations in {:.3} s, objective {:.6e}",
        inst.num_variables(),
        inst.num_constraints(),
        sol.status,
        sol.iterations,
        secs,
        sol.objective
    );
    if let Some(p) = &a.dump {
        fs::write(p, inst.dump(&sol.values))?;
    }
    if let Some(p) = &a.out {
        io::write_solution(p, &net, &sol)?;
    }
    if let Some(p) = &a.estimates {
        let jobs = estimate_jobs(&net, &gas, &sol, &states)?;
        let assessments = ParallelEstimator::new(resolve_threads(None))?.assess_all(&jobs)?;
        io::export_estimates(p, &net, &states, &assessments)?;
    }
    Ok(match sol.status {
        NlpStatus::LocalOptimum => 0,
        NlpStatus::Infeasible => 2,
        NlpStatus::IterationLimit => 1,
    })
}
