mod common;

use approx::assert_relative_eq;
use gasadapt::hierarchy::ModelLevel;
use gasadapt::integrator::{integrate, Grid};
use gasadapt::network::{balance_residual, Compressor, GasParameters, Network, Node, NodeKind, Pipe, Scenario};
use gasadapt::nlp::{assemble, solve, NlpStatus, PipeState, SolveOptions};

use common::{analytic_level3_inlet, compressor_chain, discrete_level3_inlet, BAR};

fn two_nodes(q: f64) -> (Network, Scenario) {
    let net = Network::new(
        vec![
            Node::new("s", NodeKind::Entry, 60e5, 60e5),
            Node::new("t", NodeKind::Exit, 20e5, 70e5),
        ],
        vec![Pipe::new("P", "s", "t", 25_000.0, 0.6, 0.01).with_slope(-0.001)],
        vec![],
    );
    (net, Scenario::new([("s", -q), ("t", q)]))
}

#[test]
fn size_examples() {
    let gas = GasParameters::default();
    let (net, scn) = two_nodes(10.0);
    let inst = assemble(&net, &scn, &gas, &[PipeState::new(ModelLevel::M3, 4)]).unwrap();
    assert_eq!((inst.num_variables(), inst.num_constraints()), (6, 6));
    let inst = assemble(&net, &scn, &gas, &[PipeState::new(ModelLevel::M3, 8)]).unwrap();
    assert_eq!((inst.num_variables(), inst.num_constraints()), (10, 10));

    let (net, scn) = compressor_chain(50e5, 40e5, 50.0);
    let inst = assemble(&net, &scn, &gas, &[PipeState::new(ModelLevel::M3, 4)]).unwrap();
    // One more node, a compressor flow and its lift; one more balance and the coupling.
    assert_eq!((inst.num_variables(), inst.num_constraints()), (9, 8));
}

#[test]
fn fixed_flow_reproduces_ivp_endpoint() {
    let gas = GasParameters::default();
    for q in [10.0, 120.0] {
        let (net, scn) = two_nodes(q);
        for level in ModelLevel::ALL {
            let inst = assemble(&net, &scn, &gas, &[PipeState::new(level, 32)]).unwrap();
            let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
            assert_eq!(sol.status, NlpStatus::LocalOptimum);
            assert!(sol.objective.abs() < 1e-9);
            let grid = Grid::new(25_000.0, 32).unwrap();
            let ivp = integrate(level, &net.pipes()[0], &gas, 60e5, q, &grid).unwrap();
            assert_relative_eq!(sol.node_pressure(1), ivp.last(), max_relative = 1e-6);
        }
    }
}

#[test]
fn compressor_chain_lift_matches_discrete_inverse() {
    let gas = GasParameters::default();
    for (p_exit, q, n) in [(48e5, 150.0, 4), (50e5, 100.0, 16), (30e5, 80.0, 8)] {
        let (net, scn) = compressor_chain(50e5, p_exit, q);
        let inst = assemble(&net, &scn, &gas, &[PipeState::new(ModelLevel::M3, n)]).unwrap();
        let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, NlpStatus::LocalOptimum);
        let pipe = &net.pipes()[0];
        let required = discrete_level3_inlet(pipe, &gas, p_exit, q, n);
        let lift = (required - 50e5).max(0.0);
        if lift > 0.0 {
            assert_relative_eq!(sol.lift(0), lift, max_relative = 1e-6);
            assert_relative_eq!(sol.objective, lift, max_relative = 1e-6);
            // The discrete inverse tends to the closed form.
            let exact = analytic_level3_inlet(pipe, &gas, p_exit, q);
            assert_relative_eq!(required, exact, max_relative = 1e-2);
        } else {
            assert!(sol.lift(0) < 1e-3 * BAR, "{}", sol.lift(0));
        }
    }
}

#[test]
fn zero_demand_costs_nothing() {
    let gas = GasParameters::default();
    let (net, _) = compressor_chain(50e5, 40e5, 0.0);
    let scn = Scenario::new::<[(&str, f64); 0], &str>([]);
    let inst = assemble(&net, &scn, &gas, &[PipeState::new(ModelLevel::M1, 8)]).unwrap();
    let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, NlpStatus::LocalOptimum);
    assert!(sol.objective.abs() < 1e-3, "{}", sol.objective);
    assert!(sol.lift(0).abs() < 1e-3);
}

#[test]
fn excessive_demand_is_infeasible() {
    let gas = GasParameters::default();
    // Even the maximal lift cannot push this flow to the exit bound.
    let (net, scn) = compressor_chain(50e5, 60e5, 450.0);
    let pipe = &net.pipes()[0];
    assert!(analytic_level3_inlet(pipe, &gas, 60e5, 450.0) > 90e5);
    let inst = assemble(&net, &scn, &gas, &[PipeState::new(ModelLevel::M3, 4)]).unwrap();
    let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, NlpStatus::Infeasible);
}

#[test]
fn warm_start_from_the_solution_is_cheap() {
    let gas = GasParameters::default();
    let (chain, chain_scn) = compressor_chain(50e5, 48e5, 150.0);
    let (net5, scn5) = gasadapt::fixtures::chain5();
    let cases = [
        (&chain, &chain_scn, vec![PipeState::new(ModelLevel::M2, 16)]),
        (&net5, &scn5, vec![PipeState::new(ModelLevel::M1, 16); 5]),
    ];
    for (net, scn, states) in cases {
        let inst = assemble(net, scn, &gas, &states).unwrap();
        let cold = solve(&inst, None, &SolveOptions::default()).unwrap();
        let warm = solve(&inst, Some(&cold), &SolveOptions::default()).unwrap();
        assert_eq!(warm.status, NlpStatus::LocalOptimum);
        assert!(warm.iterations <= 3, "{} iterations, cold {}", warm.iterations, cold.iterations);
        assert_relative_eq!(warm.objective, cold.objective, max_relative = 1e-6);
    }
}

#[test]
fn tighter_lift_limit_never_lowers_cost() {
    let gas = GasParameters::default();
    let build = |lift_max: f64| {
        let (net, scn) = compressor_chain(50e5, 48e5, 150.0);
        let mut comps = net.compressors().to_vec();
        comps[0] = Compressor::new("C", "s", "a", lift_max, 1.0);
        (Network::new(net.nodes().to_vec(), net.pipes().to_vec(), comps), scn)
    };
    let mut last = None;
    for lift_max in [40e5, 30e5, 25e5] {
        let (net, scn) = build(lift_max);
        let inst = assemble(&net, &scn, &gas, &[PipeState::new(ModelLevel::M3, 4)]).unwrap();
        let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, NlpStatus::LocalOptimum);
        if let Some(prev) = last {
            assert!(sol.objective >= prev - 1e-6 * prev);
        }
        last = Some(sol.objective);
    }
}

#[test]
fn tree12_solution_satisfies_its_equations() {
    let gas = GasParameters::default();
    let (net, scn) = gasadapt::fixtures::tree12();
    let levels = [ModelLevel::M1, ModelLevel::M2, ModelLevel::M3];
    let states: Vec<PipeState> = (0..12).map(|p| PipeState::new(levels[p % 3], 4 << (p % 4))).collect();
    let inst = assemble(&net, &scn, &gas, &states).unwrap();
    let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, NlpStatus::LocalOptimum);

    let ends = net.arc_endpoints().unwrap();
    let defect = balance_residual(&ends, &scn.flows_by_index(&net), &sol.flows());
    assert!(defect.iter().all(|r| r.abs() <= 1e-8), "{defect:?}");

    // Re-integrating each pipe from its inlet reproduces the NLP profile.
    for (p, pipe) in net.pipes().iter().enumerate() {
        let prof = sol.pipe_profile(&net, p).unwrap();
        let grid = sol.grid(&net, p).unwrap();
        let ivp = integrate(states[p].level, pipe, &gas, prof[0], sol.flow(p), &grid).unwrap();
        let gap = prof.iter().zip(&ivp.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap < 1e-2, "{}: {gap} Pa", pipe.id);
    }
}
