//! Residuals and derivatives of the discretized problem in solver units.
//!
//! Pipe constraint `k` couples the gridpoint pressures `P_{k−1}`, `P_k` and
//! the pipe flow `q`:
//!
//! ```text
//! r_k = (P_k − P_{k−1}) g + h (K φ(q) / P_k + α P_k),   g = 1 − a q² / P_k²
//! ```
//!
//! with the smoothed `φ(q) = q √(q² + σ²)` in place of `|q| q`.

use gasadapt_ipm::NlpProblem;

use super::{NlpInstance, PipeData, FLOW_SMOOTHING};

fn phi(q: f64) -> (f64, f64, f64) {
    let s2 = FLOW_SMOOTHING * FLOW_SMOOTHING;
    let r2 = q * q + s2;
    let r = r2.sqrt();
    (q * r, (2.0 * q * q + s2) / r, q * (2.0 * q * q + 3.0 * s2) / (r2 * r))
}

/// Residual, gradient (P_prev, P, q) and lower Hessian
/// [(P,P_prev), (q,P_prev), (P,P), (q,P), (q,q)] of one step.
pub(crate) struct StepTerms {
    pub r: f64,
    pub grad: [f64; 3],
    pub hess: [f64; 5],
}

pub(crate) fn step_terms(d: &PipeData, prev: f64, p: f64, q: f64) -> StepTerms {
    let (f, f1, f2) = phi(q);
    let (a, k, al, h) = (d.ram, d.friction, d.gravity, d.h);
    let p2 = p * p;
    let p3 = p2 * p;
    let g = 1.0 - a * q * q / p2;
    let g_p = 2.0 * a * q * q / p3;
    let g_q = -2.0 * a * q / p2;
    let g_pp = -6.0 * a * q * q / (p3 * p);
    let g_pq = 4.0 * a * q / p3;
    let g_qq = -2.0 * a / p2;
    let diff = p - prev;
    StepTerms {
        r: diff * g + h * (k * f / p + al * p),
        grad: [
            -g,
            g + diff * g_p + h * (al - k * f / p2),
            diff * g_q + h * k * f1 / p,
        ],
        hess: [
            -g_p,
            -g_q,
            2.0 * g_p + diff * g_pp + 2.0 * h * k * f / p3,
            g_q + diff * g_pq - h * k * f1 / p2,
            diff * g_qq + h * k * f2 / p,
        ],
    }
}

impl NlpInstance<'_> {
    fn grid_var(&self, p: usize, k: usize) -> usize {
        let d = &self.pipes[p];
        if k == 0 {
            self.layout.node_var(d.from)
        } else if k == d.n {
            self.layout.node_var(d.to)
        } else {
            self.layout.interior_var(p, k)
        }
    }
}

impl NlpProblem for NlpInstance<'_> {
    fn num_variables(&self) -> usize {
        self.layout.n_vars()
    }

    fn num_constraints(&self) -> usize {
        self.layout.n_cons()
    }

    fn bounds(&self, lower: &mut [f64], upper: &mut [f64]) {
        lower.copy_from_slice(&self.lower);
        upper.copy_from_slice(&self.upper);
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.cost
            .iter()
            .enumerate()
            .map(|(c, w)| w * x[self.layout.lift_var(c)])
            .sum()
    }

    fn objective_gradient(&self, _x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        for (c, w) in self.cost.iter().enumerate() {
            grad[self.layout.lift_var(c)] = *w;
        }
    }

    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        let l = &self.layout;
        for (v, m) in self.boundary.iter().enumerate() {
            c[v] = -m;
        }
        for (a, &(from, to)) in self.ends.iter().enumerate() {
            let q = x[l.flow_var(a)];
            c[to] += q;
            c[from] -= q;
        }
        for (p, d) in self.pipes.iter().enumerate() {
            let q = x[l.flow_var(p)];
            for k in 1..=d.n {
                let prev = x[self.grid_var(p, k - 1)];
                let cur = x[self.grid_var(p, k)];
                c[l.pipe_con(p, k)] = step_terms(d, prev, cur, q).r;
            }
        }
        let np = l.n_pipes;
        for cm in 0..l.n_compressors {
            let (from, to) = self.ends[np + cm];
            c[l.compressor_con(cm)] = x[l.node_var(to)] - x[l.node_var(from)] - x[l.lift_var(cm)];
        }
    }

    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        let l = &self.layout;
        let mut s = Vec::new();
        for (a, &(from, to)) in self.ends.iter().enumerate() {
            s.push((to, l.flow_var(a)));
            s.push((from, l.flow_var(a)));
        }
        for (p, d) in self.pipes.iter().enumerate() {
            for k in 1..=d.n {
                let row = l.pipe_con(p, k);
                s.push((row, self.grid_var(p, k - 1)));
                s.push((row, self.grid_var(p, k)));
                s.push((row, l.flow_var(p)));
            }
        }
        let np = l.n_pipes;
        for cm in 0..l.n_compressors {
            let (from, to) = self.ends[np + cm];
            let row = l.compressor_con(cm);
            s.push((row, l.node_var(to)));
            s.push((row, l.node_var(from)));
            s.push((row, l.lift_var(cm)));
        }
        s
    }

    fn jacobian_values(&self, x: &[f64], values: &mut [f64]) {
        let l = &self.layout;
        let mut i = 0;
        for _ in &self.ends {
            values[i] = 1.0;
            values[i + 1] = -1.0;
            i += 2;
        }
        for (p, d) in self.pipes.iter().enumerate() {
            let q = x[l.flow_var(p)];
            for k in 1..=d.n {
                let t = step_terms(d, x[self.grid_var(p, k - 1)], x[self.grid_var(p, k)], q);
                values[i..i + 3].copy_from_slice(&t.grad);
                i += 3;
            }
        }
        for _ in 0..l.n_compressors {
            values[i..i + 3].copy_from_slice(&[1.0, -1.0, -1.0]);
            i += 3;
        }
    }

    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        let l = &self.layout;
        let lower = |a: usize, b: usize| (a.max(b), a.min(b));
        let mut s = Vec::new();
        for (p, d) in self.pipes.iter().enumerate() {
            let q = l.flow_var(p);
            for k in 1..=d.n {
                let prev = self.grid_var(p, k - 1);
                let cur = self.grid_var(p, k);
                s.push(lower(cur, prev));
                s.push(lower(q, prev));
                s.push((cur, cur));
                s.push(lower(q, cur));
                s.push((q, q));
            }
        }
        s
    }

    fn hessian_values(&self, x: &[f64], _obj_factor: f64, lambda: &[f64], values: &mut [f64]) {
        let l = &self.layout;
        let mut i = 0;
        for (p, d) in self.pipes.iter().enumerate() {
            let q = x[l.flow_var(p)];
            for k in 1..=d.n {
                let t = step_terms(d, x[self.grid_var(p, k - 1)], x[self.grid_var(p, k)], q);
                let w = lambda[l.pipe_con(p, k)];
                for (v, h) in values[i..i + 5].iter_mut().zip(t.hess) {
                    *v = w * h;
                }
                i += 5;
            }
        }
    }
}
