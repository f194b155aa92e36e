//! Starting points for the interior-point solver.

use std::collections::VecDeque;

use gasadapt_ipm::WarmStart;

use super::{NlpInstance, NlpSolution, PRESSURE_SCALE};
use crate::hierarchy::PipeCoefficients;
use crate::integrator::{integrate_with, Grid};
use crate::network::NodeKind;

const WARM_MU_FLOOR: f64 = 1e-7;

/// Flows that satisfy the node balances on a spanning tree (other arcs at
/// zero), pressures propagated outward from the highest-pressure entry.
pub(super) fn cold_start(inst: &NlpInstance) -> Vec<f64> {
    let l = &inst.layout;
    let n_nodes = l.n_nodes;
    let n_arcs = inst.ends.len();
    let mut x = vec![0.0; l.n_vars()];

    let mut adj = vec![Vec::new(); n_nodes];
    for (a, &(f, t)) in inst.ends.iter().enumerate() {
        adj[f].push(a);
        adj[t].push(a);
    }
    let other = |a: usize, v: usize| {
        let (f, t) = inst.ends[a];
        if f == v {
            t
        } else {
            f
        }
    };

    let root = (0..n_nodes)
        .filter(|&v| inst.net.nodes()[v].kind == NodeKind::Entry)
        .max_by(|&a, &b| inst.upper[a].total_cmp(&inst.upper[b]))
        .unwrap_or(0);

    // BFS tree from the root; parent arc per node.
    let mut parent = vec![usize::MAX; n_nodes];
    let mut order = Vec::with_capacity(n_nodes);
    let mut seen = vec![false; n_nodes];
    let mut in_tree = vec![false; n_arcs];
    for start in std::iter::once(root).chain(0..n_nodes) {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &a in &adj[v] {
                let w = other(a, v);
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = a;
                    in_tree[a] = true;
                    queue.push_back(w);
                }
            }
        }
    }

    // Leaf elimination: need[v] is the net inflow v still requires.
    let mut need: Vec<f64> = inst.boundary.clone();
    let mut flow = vec![0.0; n_arcs];
    let fix = |a: usize, q: f64, need: &mut [f64], flow: &mut [f64]| {
        let (f, t) = inst.ends[a];
        flow[a] = q;
        need[t] -= q;
        need[f] += q;
    };
    for a in 0..n_arcs {
        if !in_tree[a] {
            let (lo, hi) = (inst.lower[l.flow_var(a)], inst.upper[l.flow_var(a)]);
            fix(a, 0.0f64.clamp(lo, hi.max(lo)), &mut need, &mut flow);
        }
    }
    for &v in order.iter().rev() {
        let a = parent[v];
        if a == usize::MAX {
            continue;
        }
        let q = if inst.ends[a].1 == v { need[v] } else { -need[v] };
        fix(a, q, &mut need, &mut flow);
    }
    for (a, q) in flow.iter().enumerate() {
        x[l.flow_var(a)] = *q;
    }

    // Pressure propagation along the BFS order.
    let np = l.n_pipes;
    let clamp_node = |v: usize, p: f64| p.clamp(inst.lower[v], inst.upper[v].max(inst.lower[v]));
    for &v in &order {
        let a = parent[v];
        if a == usize::MAX {
            let top = if inst.upper[v].is_finite() { inst.upper[v] } else { inst.lower[v] * 2.0 };
            x[v] = clamp_node(v, top);
            continue;
        }
        let u = other(a, v);
        let (f, t) = inst.ends[a];
        let pu = x[u];
        if a < np {
            let forward = f == u;
            let prof = pipe_guess(inst, a, pu, flow[a], forward);
            let d = &inst.pipes[a];
            for k in 1..d.n {
                x[l.interior_var(a, k)] = prof[k].max(inst.lower[l.interior_var(a, k)]);
            }
            x[v] = clamp_node(v, if forward { prof[d.n] } else { prof[0] });
        } else {
            let c = a - np;
            let lift_max = inst.upper[l.lift_var(c)];
            if t == v {
                x[v] = clamp_node(v, pu);
                x[l.lift_var(c)] = (x[v] - pu).clamp(0.0, lift_max);
            } else {
                x[v] = clamp_node(v, pu);
                x[l.lift_var(c)] = (pu - x[v]).clamp(0.0, lift_max);
            }
        }
    }
    // Non-tree pipes still need interior values.
    for (p, d) in inst.pipes.iter().enumerate() {
        if in_tree[p] {
            continue;
        }
        for k in 1..d.n {
            let s = k as f64 / d.n as f64;
            x[l.interior_var(p, k)] = (1.0 - s) * x[d.from] + s * x[d.to];
        }
    }
    x
}

/// Pressure profile over the pipe grid (index 0 at `from`) for a known
/// value at the upstream end of the traversal; constant if integration
/// fails.
fn pipe_guess(inst: &NlpInstance, p: usize, p_known: f64, q: f64, forward: bool) -> Vec<f64> {
    let d = &inst.pipes[p];
    let pipe = &inst.net.pipes()[p];
    let co = PipeCoefficients::new(pipe, &inst.gas);
    let flat = vec![p_known; d.n + 1];
    let Ok(grid) = Grid::new(pipe.length, d.n) else {
        return flat;
    };
    let res = if forward {
        integrate_with(d.level, &co, p_known * PRESSURE_SCALE, q, &grid)
    } else {
        integrate_with(d.level, &co.reversed(), p_known * PRESSURE_SCALE, -q, &grid)
    };
    match res {
        Ok(prof) => {
            let mut v: Vec<f64> = prof.values.iter().map(|p| p / PRESSURE_SCALE).collect();
            if !forward {
                v.reverse();
            }
            v
        }
        Err(_) => flat,
    }
}

/// Linear interpolation of `(xs, ys)` at `x`, constant beyond the ends.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let j = xs.partition_point(|&v| v < x);
    if j >= xs.len() {
        return ys[ys.len() - 1];
    }
    let (x0, x1) = (xs[j - 1], xs[j]);
    let s = (x - x0) / (x1 - x0);
    ys[j - 1] + s * (ys[j] - ys[j - 1])
}

/// Transfers primal and dual values of `prev` onto the (possibly
/// refined, coarsened or re-leveled) instance.
pub(super) fn warm_start(inst: &NlpInstance, prev: &NlpSolution) -> (Vec<f64>, WarmStart, f64) {
    let l = &inst.layout;
    let o = &prev.layout;
    let n = l.n_vars();
    let mut x = vec![0.0; n];
    let mut zl = vec![0.0; n];
    let mut zu = vec![0.0; n];
    let mut lambda = vec![0.0; l.n_cons()];

    let n_fixed = l.n_nodes + l.n_pipes + 2 * l.n_compressors;
    x[..n_fixed].copy_from_slice(&prev.x[..n_fixed]);
    zl[..n_fixed].copy_from_slice(&prev.z_lower[..n_fixed]);
    zu[..n_fixed].copy_from_slice(&prev.z_upper[..n_fixed]);
    lambda[..l.n_nodes].copy_from_slice(&prev.lambda[..l.n_nodes]);
    for c in 0..l.n_compressors {
        lambda[l.compressor_con(c)] = prev.lambda[o.compressor_con(c)];
    }

    for (p, d) in inst.pipes.iter().enumerate() {
        let n_old = o.states[p].n_intervals;
        let n_new = d.n;
        let same = n_old == n_new;
        let old_pos: Vec<f64> = (0..=n_old).map(|k| k as f64 / n_old as f64).collect();
        let old_p: Vec<f64> = (0..=n_old)
            .map(|k| match k {
                0 => prev.x[d.from],
                k if k == n_old => prev.x[d.to],
                k => prev.x[o.interior_var(p, k)],
            })
            .collect();
        // Interior z and pipe multipliers live on k = 1..n; pad k = 0.
        let mut old_zl = vec![0.0; n_old + 1];
        let mut old_zu = vec![0.0; n_old + 1];
        for k in 1..n_old {
            old_zl[k] = prev.z_lower[o.interior_var(p, k)];
            old_zu[k] = prev.z_upper[o.interior_var(p, k)];
        }
        old_zl[0] = old_zl[1];
        old_zl[n_old] = old_zl[n_old - 1];
        old_zu[0] = old_zu[1];
        old_zu[n_old] = old_zu[n_old - 1];
        let mut old_lam: Vec<f64> = (0..=n_old)
            .map(|k| if k == 0 { 0.0 } else { prev.lambda[o.pipe_con(p, k)] })
            .collect();
        old_lam[0] = old_lam[1];

        for k in 1..n_new {
            let v = l.interior_var(p, k);
            if same {
                x[v] = old_p[k];
                zl[v] = old_zl[k];
                zu[v] = old_zu[k];
            } else {
                let s = k as f64 / n_new as f64;
                x[v] = interp(&old_pos, &old_p, s);
                zl[v] = interp(&old_pos, &old_zl, s);
                zu[v] = interp(&old_pos, &old_zu, s);
            }
        }
        for k in 1..=n_new {
            lambda[l.pipe_con(p, k)] = if same {
                old_lam[k]
            } else {
                interp(&old_pos, &old_lam, k as f64 / n_new as f64)
            };
        }
    }

    let mu = prev.mu.max(WARM_MU_FLOOR);
    (
        x,
        WarmStart {
            lambda,
            z_lower: zl,
            z_upper: zu,
        },
        mu,
    )
}
