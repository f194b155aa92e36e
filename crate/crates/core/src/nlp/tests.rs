use super::problem::step_terms;
use super::*;
use crate::integrator::integrate;
use crate::network::{Compressor, Node, NodeKind, Pipe};
use approx::assert_relative_eq;
use gasadapt_ipm::NlpProblem;

fn single_pipe() -> (Network, Scenario) {
    let net = Network::new(
        vec![
            Node::new("s", NodeKind::Entry, 60e5, 60e5),
            Node::new("t", NodeKind::Exit, 30e5, 70e5),
        ],
        vec![Pipe::new("P", "s", "t", 10_000.0, 0.6, 0.01).with_slope(0.001)],
        vec![],
    );
    (net, Scenario::new([("s", -100.0), ("t", 100.0)]))
}

fn with_compressor() -> (Network, Scenario) {
    let net = Network::new(
        vec![
            Node::new("s", NodeKind::Entry, 50e5, 50e5),
            Node::new("a", NodeKind::Inner, 1e5, 80e5),
            Node::new("b", NodeKind::Inner, 1e5, 80e5),
            Node::new("t", NodeKind::Exit, 49e5, 80e5),
        ],
        vec![
            Pipe::new("P1", "s", "a", 20_000.0, 0.6, 0.01),
            Pipe::new("P2", "b", "t", 20_000.0, 0.6, 0.01).with_slope(-0.002),
        ],
        vec![Compressor::new("C", "a", "b", 30e5, 1.0)],
    );
    (net, Scenario::new([("s", -120.0), ("t", 120.0)]))
}

#[test]
fn derivatives_match_finite_differences() {
    let d = PipeData {
        from: 0,
        to: 1,
        level: ModelLevel::M1,
        n: 4,
        h: 2500.0,
        friction: 0.37,
        gravity: 1e-6,
        ram: 7.1,
    };
    for (prev, p, q) in [(60.0, 59.4, 100.0), (40.0, 41.0, -80.0), (55.0, 54.9, 1e-7)] {
        let t = step_terms(&d, prev, p, q);
        let x = [prev, p, q];
        for j in 0..3 {
            let e = 1e-6 * x[j].abs().max(1e-3);
            let mut xp = x;
            let mut xm = x;
            xp[j] += e;
            xm[j] -= e;
            let tp = step_terms(&d, xp[0], xp[1], xp[2]);
            let tm = step_terms(&d, xm[0], xm[1], xm[2]);
            let fd = (tp.r - tm.r) / (2.0 * e);
            assert_relative_eq!(t.grad[j], fd, max_relative = 1e-6, epsilon = 1e-8);
            // Hessian column j via differences of the gradient.
            let full = |t: &super::problem::StepTerms| {
                let [pp0, qp0, pp, qp, qq] = t.hess;
                [[0.0, pp0, qp0], [pp0, pp, qp], [qp0, qp, qq]]
            };
            let h = full(&t);
            for i in 0..3 {
                let fd = (tp.grad[i] - tm.grad[i]) / (2.0 * e);
                assert_relative_eq!(h[i][j], fd, max_relative = 1e-5, epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn counts_follow_layout() {
    let (net, scn) = with_compressor();
    let gas = GasParameters::default();
    let states = [PipeState::new(ModelLevel::M2, 8), PipeState::new(ModelLevel::M3, 4)];
    let inst = assemble(&net, &scn, &gas, &states).unwrap();
    // 4 nodes + 3 flows + 1 lift + 7 + 3 interior pressures.
    assert_eq!(inst.num_variables(), 4 + 3 + 1 + 7 + 3);
    // 4 balances + 8 + 4 pipe equations + 1 coupling.
    assert_eq!(inst.num_constraints(), 4 + 12 + 1);
    assert_eq!(inst.jacobian_structure().len(), 2 * 3 + 3 * 12 + 3);
    assert_eq!(inst.hessian_structure().len(), 5 * 12);
    assert!(inst.hessian_structure().iter().all(|&(r, c)| r >= c));
    let dump = inst.dump(&vec![1.0; inst.num_variables()]);
    assert!(dump.contains("dp[C]"));
    assert!(dump.contains("p[P1#7]"));
    assert!(dump.contains("q[C]"));
    assert!(dump.contains("pipe[P2#4]"));
}

#[test]
fn rejects_bad_grids() {
    let (net, scn) = single_pipe();
    let gas = GasParameters::default();
    assert!(assemble(&net, &scn, &gas, &[PipeState::new(ModelLevel::M1, 6)]).is_err());
    assert!(assemble(&net, &scn, &gas, &[]).is_err());
}

#[test]
fn single_pipe_reproduces_integrator() {
    let (net, scn) = single_pipe();
    let gas = GasParameters::default();
    for level in ModelLevel::ALL {
        let inst = assemble(&net, &scn, &gas, &[PipeState::new(level, 16)]).unwrap();
        let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, NlpStatus::LocalOptimum);
        let grid = Grid::new(10_000.0, 16).unwrap();
        let ivp = integrate(level, &net.pipes()[0], &gas, 60e5, 100.0, &grid).unwrap();
        let prof = sol.pipe_profile(&net, 0).unwrap();
        for (a, b) in prof.iter().zip(&ivp.values) {
            assert!((a - b).abs() < 1e-2, "{level} {a} vs {b} {:?} {}", sol.status, sol.constraint_violation);
        }
        assert_relative_eq!(sol.flow(0), 100.0, epsilon = 1e-8);
    }
}

#[test]
fn compressor_lift_is_minimal_and_warm_start_converges() {
    let (net, scn) = with_compressor();
    let gas = GasParameters::default();
    let states = [PipeState::new(ModelLevel::M3, 4), PipeState::new(ModelLevel::M3, 4)];
    let inst = assemble(&net, &scn, &gas, &states).unwrap();
    let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, NlpStatus::LocalOptimum);
    // Exit pressure sits at its lower bound.
    assert_relative_eq!(sol.node_pressure(3), 49e5, max_relative = 1e-6);
    let lift = sol.lift(0);
    assert!(lift > 0.0);
    assert_relative_eq!(sol.objective, lift, max_relative = 1e-6);

    let refined = [PipeState::new(ModelLevel::M1, 8), PipeState::new(ModelLevel::M2, 8)];
    let inst2 = assemble(&net, &scn, &gas, &refined).unwrap();
    let warm = solve(&inst2, Some(&sol), &SolveOptions::default()).unwrap();
    let cold = solve(&inst2, None, &SolveOptions::default()).unwrap();
    assert_eq!(warm.status, NlpStatus::LocalOptimum);
    assert_relative_eq!(warm.objective, cold.objective, max_relative = 1e-6);
    assert!(warm.iterations <= cold.iterations, "{} > {}", warm.iterations, cold.iterations);
}

#[test]
fn unreachable_exit_pressure_is_infeasible() {
    let (net, _) = single_pipe();
    let gas = GasParameters::default();
    let heavy = Scenario::new([("s", -600.0), ("t", 600.0)]);
    let inst = assemble(&net, &heavy, &gas, &[PipeState::new(ModelLevel::M3, 4)]).unwrap();
    let sol = solve(&inst, None, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, NlpStatus::Infeasible);
}
