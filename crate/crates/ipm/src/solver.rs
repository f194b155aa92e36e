//! Primal-dual interior-point method with a logarithmic barrier on variable
//! bounds, an exact-penalty merit line search and a feasibility restoration
//! phase.

use log::debug;

use crate::kkt::Kkt;
use crate::ldl::Inertia;
use crate::problem::NlpProblem;

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// KKT conditions satisfied to the requested tolerance.
    Optimal,
    /// The restoration phase could not reduce the constraint violation.
    Infeasible,
    IterationLimit,
    /// The Newton system could not be made usable.
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct IpmOptions {
    /// Tolerance on the scaled KKT error.
    pub tol: f64,
    pub max_iterations: usize,
    /// Initial barrier parameter.
    pub mu_init: f64,
    /// Absolute/relative push of the starting point into the bound interior.
    pub bound_push: f64,
    pub bound_frac: f64,
    /// Regularization of the (2,2) block of the Newton matrix.
    pub dual_regularization: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 500,
            mu_init: 0.1,
            bound_push: 1e-2,
            bound_frac: 1e-2,
            dual_regularization: 1e-10,
        }
    }
}

/// Multipliers carried over from a previous solve.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub lambda: Vec<f64>,
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub status: Status,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Max-norm of the constraint residual.
    pub constraint_violation: f64,
    /// Max-norm of the Lagrangian gradient (objective scaled internally).
    pub dual_infeasibility: f64,
    /// Scaled KKT error at the returned point.
    pub kkt_error: f64,
    /// Barrier parameter at termination.
    pub mu: f64,
}

const S_MAX: f64 = 100.0;
const KAPPA_SIGMA: f64 = 1e10;
const KAPPA_EPS: f64 = 10.0;
const KAPPA_MU: f64 = 0.2;
const THETA_MU: f64 = 1.5;
const TAU_MIN: f64 = 0.99;
const ARMIJO: f64 = 1e-4;
const RHO_PENALTY: f64 = 0.1;
const RESTO_RHO: f64 = 1000.0;

/// Solves `problem` from the starting point `x0`.
pub fn solve(problem: &dyn NlpProblem, x0: &[f64], options: &IpmOptions, warm: Option<&WarmStart>) -> IpmResult {
    let n = problem.num_variables();
    let matchable = vec![true; n];
    Solver::new(problem, options, &matchable, None, true).run(x0, warm)
}

type EarlyExit<'a> = &'a dyn Fn(&[f64]) -> bool;

struct Solver<'a> {
    problem: &'a dyn NlpProblem,
    opts: &'a IpmOptions,
    n: usize,
    m: usize,
    xl: Vec<f64>,
    xu: Vec<f64>,
    free: Vec<usize>,
    // original index -> free index
    free_pos: Vec<usize>,
    hess_pattern: Vec<(usize, usize)>,
    hess_keep: Vec<usize>,
    jac_pattern: Vec<(usize, usize)>,
    jac_keep: Vec<usize>,
    jac_len: usize,
    hess_len: usize,
    matchable: &'a [bool],
    early_exit: Option<EarlyExit<'a>>,
    allow_restoration: bool,
}

/// Iterate state; vectors indexed by original variable.
#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    lambda: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
}

struct Evals {
    f: f64,
    grad: Vec<f64>,
    c: Vec<f64>,
    jac: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn one_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

impl<'a> Solver<'a> {
    fn new(
        problem: &'a dyn NlpProblem,
        opts: &'a IpmOptions,
        matchable: &'a [bool],
        early_exit: Option<EarlyExit<'a>>,
        allow_restoration: bool,
    ) -> Self {
        let n = problem.num_variables();
        let m = problem.num_constraints();
        let mut xl = vec![f64::NEG_INFINITY; n];
        let mut xu = vec![f64::INFINITY; n];
        problem.bounds(&mut xl, &mut xu);
        let mut free = Vec::new();
        let mut free_pos = vec![usize::MAX; n];
        for i in 0..n {
            let fixed = xl[i].is_finite() && xu[i].is_finite() && xu[i] - xl[i] <= 1e-14 * xl[i].abs().max(1.0);
            if !fixed {
                free_pos[i] = free.len();
                free.push(i);
            }
        }
        let full_hess = problem.hessian_structure();
        let mut hess_pattern = Vec::new();
        let mut hess_keep = Vec::new();
        for (k, &(r, c)) in full_hess.iter().enumerate() {
            let (fr, fc) = (free_pos[r], free_pos[c]);
            if fr != usize::MAX && fc != usize::MAX {
                hess_pattern.push((fr.max(fc), fr.min(fc)));
                hess_keep.push(k);
            }
        }
        let full_jac = problem.jacobian_structure();
        let mut jac_pattern = Vec::new();
        let mut jac_keep = Vec::new();
        for (k, &(r, c)) in full_jac.iter().enumerate() {
            if free_pos[c] != usize::MAX {
                jac_pattern.push((r, free_pos[c]));
                jac_keep.push(k);
            }
        }
        Self {
            problem,
            opts,
            n,
            m,
            xl,
            xu,
            free,
            free_pos,
            hess_pattern,
            hess_keep,
            jac_pattern,
            jac_keep,
            jac_len: full_jac.len(),
            hess_len: full_hess.len(),
            matchable,
            early_exit,
            allow_restoration,
        }
    }

    fn has_lower(&self, i: usize) -> bool {
        self.xl[i].is_finite() && self.free_pos[i] != usize::MAX
    }

    fn has_upper(&self, i: usize) -> bool {
        self.xu[i].is_finite() && self.free_pos[i] != usize::MAX
    }

    fn push_into_bounds(&self, x: &mut [f64], push: f64, frac: f64) {
        for i in 0..self.n {
            let (l, u) = (self.xl[i], self.xu[i]);
            if self.free_pos[i] == usize::MAX {
                x[i] = l;
                continue;
            }
            let width = u - l;
            if l.is_finite() {
                let p = (push * l.abs().max(1.0)).min(frac * width);
                x[i] = x[i].max(l + p);
            }
            if u.is_finite() {
                let p = (push * u.abs().max(1.0)).min(frac * width);
                x[i] = x[i].min(u - p);
            }
        }
    }

    fn evaluate(&self, x: &[f64]) -> Evals {
        let mut grad = vec![0.0; self.n];
        let mut c = vec![0.0; self.m];
        let mut jac = vec![0.0; self.jac_len];
        let f = self.problem.objective(x);
        self.problem.objective_gradient(x, &mut grad);
        self.problem.constraints(x, &mut c);
        self.problem.jacobian_values(x, &mut jac);
        Evals { f, grad, c, jac }
    }

    fn free_jac(&self, jac: &[f64]) -> Vec<f64> {
        self.jac_keep.iter().map(|&k| jac[k]).collect()
    }

    fn free_hess(&self, x: &[f64], obj_factor: f64, lambda: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.hess_len];
        self.problem.hessian_values(x, obj_factor, lambda, &mut full);
        self.hess_keep.iter().map(|&k| full[k]).collect()
    }

    /// Jᵀλ over original variable indices.
    fn jt_lambda(&self, jac: &[f64], lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (k, &(r, c)) in self.jac_pattern.iter().enumerate() {
            out[self.free[c]] += jac[self.jac_keep[k]] * lambda[r];
        }
        out
    }

    fn barrier_value(&self, x: &[f64], f_scaled: f64, mu: f64) -> f64 {
        let mut v = f_scaled;
        for i in 0..self.n {
            if self.has_lower(i) {
                v -= mu * (x[i] - self.xl[i]).ln();
            }
            if self.has_upper(i) {
                v -= mu * (self.xu[i] - x[i]).ln();
            }
        }
        v
    }

    fn least_squares_lambda(&self, kkt: &mut Kkt, ev: &Evals, obj_scale: f64, it: &Iterate) -> Option<Vec<f64>> {
        let nf = self.free.len();
        let jac = self.free_jac(&ev.jac);
        let inertia = kkt.factor(&vec![0.0; self.hess_pattern.len()], &vec![1.0; nf], &jac, 1e-8);
        if inertia.zero > 0 {
            return None;
        }
        let mut rhs = vec![0.0; nf + self.m];
        for (f, &i) in self.free.iter().enumerate() {
            rhs[f] = -(obj_scale * ev.grad[i] - it.zl[i] + it.zu[i]);
        }
        let sol = kkt.solve(&rhs);
        let lambda = sol[nf..].to_vec();
        if inf_norm(&lambda) > 1e3 || lambda.iter().any(|v| !v.is_finite()) {
            None
        } else {
            Some(lambda)
        }
    }

    fn run(&self, x0: &[f64], warm: Option<&WarmStart>) -> IpmResult {
        let n = self.n;
        let m = self.m;
        let nf = self.free.len();
        let tol = self.opts.tol;
        assert_eq!(x0.len(), n);

        let mut it = Iterate {
            x: x0.to_vec(),
            lambda: vec![0.0; m],
            zl: vec![0.0; n],
            zu: vec![0.0; n],
        };
        self.push_into_bounds(&mut it.x, self.opts.bound_push, self.opts.bound_frac);
        let mut ev = self.evaluate(&it.x);
        let g0 = self.free.iter().fold(0.0f64, |a, &i| a.max(ev.grad[i].abs()));
        let obj_scale = if g0 > 100.0 { 100.0 / g0 } else { 1.0 };
        let mut mu = self.opts.mu_init;

        let mut kkt = Kkt::new(
            nf,
            m,
            self.hess_pattern.clone(),
            self.jac_pattern.clone(),
            &self.free_jac(&ev.jac),
            &self.free.iter().map(|&i| self.matchable[i]).collect::<Vec<_>>(),
        );

        match warm {
            Some(w) => {
                it.lambda.copy_from_slice(&w.lambda);
                for i in 0..n {
                    let floor = mu.min(1e-3);
                    it.zl[i] = if self.has_lower(i) { w.z_lower[i].max(floor) } else { 0.0 };
                    it.zu[i] = if self.has_upper(i) { w.z_upper[i].max(floor) } else { 0.0 };
                }
            }
            None => {
                for i in 0..n {
                    it.zl[i] = if self.has_lower(i) { 1.0 } else { 0.0 };
                    it.zu[i] = if self.has_upper(i) { 1.0 } else { 0.0 };
                }
                if let Some(l) = self.least_squares_lambda(&mut kkt, &ev, obj_scale, &it) {
                    it.lambda = l;
                }
            }
        }

        let mut nu = 0.0f64;
        let mut stalled = 0usize;
        let mut delta_w_last = 0.0f64;
        let mut iterations = 0usize;
        let status;
        let mut kkt_error;

        loop {
            // Optimality measures.
            let jtl = self.jt_lambda(&ev.jac, &it.lambda);
            let kkt_err = |mu: f64, it: &Iterate| -> (f64, f64, f64) {
                let mut dual = 0.0f64;
                let mut compl = 0.0f64;
                let mut zsum = 0.0;
                let mut nb = 0usize;
                for &i in &self.free {
                    let r = obj_scale * ev.grad[i] + jtl[i] - it.zl[i] + it.zu[i];
                    dual = dual.max(r.abs());
                    if self.has_lower(i) {
                        compl = compl.max(((it.x[i] - self.xl[i]) * it.zl[i] - mu).abs());
                        zsum += it.zl[i];
                        nb += 1;
                    }
                    if self.has_upper(i) {
                        compl = compl.max(((self.xu[i] - it.x[i]) * it.zu[i] - mu).abs());
                        zsum += it.zu[i];
                        nb += 1;
                    }
                }
                let lsum = one_norm(&it.lambda);
                let s_d = (S_MAX.max((lsum + zsum) / ((m + nb).max(1) as f64))) / S_MAX;
                let s_c = (S_MAX.max(zsum / (nb.max(1) as f64))) / S_MAX;
                let primal = inf_norm(&ev.c);
                (dual, primal, (dual / s_d).max(primal).max(compl / s_c))
            };

            let (dual_inf, primal_inf, err0) = kkt_err(0.0, &it);
            kkt_error = err0;
            debug!(
                "iter {iterations:4} f {:.6e} inf_pr {primal_inf:.2e} inf_du {dual_inf:.2e} mu {mu:.1e} err {err0:.2e}",
                ev.f
            );
            if err0 <= tol {
                status = Status::Optimal;
                break;
            }
            if let Some(exit) = self.early_exit {
                if exit(&it.x) {
                    status = Status::Optimal;
                    break;
                }
            }
            if iterations >= self.opts.max_iterations {
                status = Status::IterationLimit;
                break;
            }
            iterations += 1;

            let mut mu_changed = false;
            while mu > tol / 10.0 && kkt_err(mu, &it).2 <= KAPPA_EPS * mu {
                mu = (tol / 10.0).max((KAPPA_MU * mu).min(mu.powf(THETA_MU)));
                mu_changed = true;
            }
            if mu_changed {
                nu = 0.0;
            }
            let tau = TAU_MIN.max(1.0 - mu);

            // Newton system.
            let mut sigma = vec![0.0; nf];
            for (f, &i) in self.free.iter().enumerate() {
                if self.has_lower(i) {
                    sigma[f] += it.zl[i] / (it.x[i] - self.xl[i]);
                }
                if self.has_upper(i) {
                    sigma[f] += it.zu[i] / (self.xu[i] - it.x[i]);
                }
            }
            let hess = self.free_hess(&it.x, obj_scale, &it.lambda);
            let jac = self.free_jac(&ev.jac);
            let Some(delta_w) = self.factor_with_correction(&mut kkt, &hess, &sigma, &jac, &mut delta_w_last) else {
                status = Status::NumericalFailure;
                break;
            };

            let mut rhs = vec![0.0; nf + m];
            let mut grad_phi = vec![0.0; nf];
            for (f, &i) in self.free.iter().enumerate() {
                let mut g = obj_scale * ev.grad[i];
                if self.has_lower(i) {
                    g -= mu / (it.x[i] - self.xl[i]);
                }
                if self.has_upper(i) {
                    g += mu / (self.xu[i] - it.x[i]);
                }
                grad_phi[f] = g;
                rhs[f] = -(g + jtl[i]);
            }
            for r in 0..m {
                rhs[nf + r] = -ev.c[r];
            }
            let sol = kkt.solve(&rhs);
            if sol.iter().any(|v| !v.is_finite()) {
                status = Status::NumericalFailure;
                break;
            }
            let dx_f = &sol[..nf];
            let dl = &sol[nf..];
            let mut dx = vec![0.0; n];
            for (f, &i) in self.free.iter().enumerate() {
                dx[i] = dx_f[f];
            }

            let alpha_max = self.max_step_primal(&it.x, &dx, tau);

            // Merit function and penalty update.
            let c1 = one_norm(&ev.c);
            let gdx: f64 = grad_phi.iter().zip(dx_f).map(|(g, d)| g * d).sum();
            let curv = self.curvature(&hess, &sigma, delta_w, dx_f);
            if c1 > 0.0 {
                let need = (gdx + 0.5 * curv.max(0.0)) / ((1.0 - RHO_PENALTY) * c1);
                if nu < need {
                    nu = need * 1.1 + 1e-8;
                }
            }
            let merit0 = self.barrier_value(&it.x, obj_scale * ev.f, mu) + nu * c1;
            let slope = gdx - nu * c1;

            let tiny = self
                .free
                .iter()
                .all(|&i| dx[i].abs() <= 10.0 * f64::EPSILON * (1.0 + it.x[i].abs()));

            let mut accepted: Option<(Vec<f64>, f64, Evals)> = None;
            let mut alpha = alpha_max;
            let mut tried_soc = false;
            while alpha >= 1e-14 {
                let xt = step(&it.x, &dx, alpha);
                let ft = self.problem.objective(&xt);
                let mut ct = vec![0.0; m];
                self.problem.constraints(&xt, &mut ct);
                let merit_t = self.barrier_value(&xt, obj_scale * ft, mu) + nu * one_norm(&ct);
                let ok = merit_t.is_finite()
                    && merit_t - merit0 <= ARMIJO * alpha * slope.min(0.0) + 10.0 * f64::EPSILON * merit0.abs();
                if ok || tiny {
                    let ev_t = self.evaluate(&xt);
                    accepted = Some((xt, alpha, ev_t));
                    break;
                }
                if !tried_soc && alpha == alpha_max && one_norm(&ct) >= c1 && m > 0 {
                    tried_soc = true;
                    if let Some(found) =
                        self.second_order_correction(&kkt, &it, &ev, &rhs, &ct, alpha, tau, mu, obj_scale, nu, merit0, slope)
                    {
                        accepted = Some(found);
                        break;
                    }
                }
                alpha *= 0.5;
            }

            if let Some((_, a, ev_t)) = &accepted {
                let theta_t = one_norm(&ev_t.c);
                if *a < 1e-4 && theta_t > tol && theta_t >= 0.999 * c1 {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                if stalled >= 4 {
                    stalled = 0;
                    accepted = None;
                }
            }
            let Some((x_new, alpha, ev_new)) = accepted else {
                if !self.allow_restoration {
                    status = Status::NumericalFailure;
                    break;
                }
                debug!("line search failed, entering restoration");
                match self.restore(&it, &ev, mu) {
                    Some((x_r, zl, zu, iters)) => {
                        iterations += iters;
                        it.x = x_r;
                        it.zl = zl;
                        it.zu = zu;
                        ev = self.evaluate(&it.x);
                        it.lambda = self
                            .least_squares_lambda(&mut kkt, &ev, obj_scale, &it)
                            .unwrap_or_else(|| vec![0.0; m]);
                        nu = 0.0;
                        continue;
                    }
                    None => {
                        status = Status::Infeasible;
                        break;
                    }
                }
            };

            // Bound multipliers.
            let mut dzl = vec![0.0; n];
            let mut dzu = vec![0.0; n];
            for i in 0..n {
                if self.has_lower(i) {
                    let s = it.x[i] - self.xl[i];
                    dzl[i] = mu / s - it.zl[i] - it.zl[i] / s * dx[i];
                }
                if self.has_upper(i) {
                    let s = self.xu[i] - it.x[i];
                    dzu[i] = mu / s - it.zu[i] + it.zu[i] / s * dx[i];
                }
            }
            let alpha_z = self.max_step_dual(&it, &dzl, &dzu, tau);
            for r in 0..m {
                it.lambda[r] += alpha * dl[r];
            }
            it.x = x_new;
            for i in 0..n {
                if self.has_lower(i) {
                    let s = it.x[i] - self.xl[i];
                    let z = it.zl[i] + alpha_z * dzl[i];
                    it.zl[i] = z.clamp(mu / (KAPPA_SIGMA * s), KAPPA_SIGMA * mu / s);
                }
                if self.has_upper(i) {
                    let s = self.xu[i] - it.x[i];
                    let z = it.zu[i] + alpha_z * dzu[i];
                    it.zu[i] = z.clamp(mu / (KAPPA_SIGMA * s), KAPPA_SIGMA * mu / s);
                }
            }
            ev = ev_new;
        }

        let jtl = self.jt_lambda(&ev.jac, &it.lambda);
        let mut dual = 0.0f64;
        for &i in &self.free {
            dual = dual.max((obj_scale * ev.grad[i] + jtl[i] - it.zl[i] + it.zu[i]).abs());
        }
        // Report multipliers for the unscaled objective.
        let unscale = 1.0 / obj_scale;
        IpmResult {
            status,
            objective: ev.f,
            constraint_violation: inf_norm(&ev.c),
            dual_infeasibility: dual,
            kkt_error,
            lambda: it.lambda.iter().map(|v| v * unscale).collect(),
            z_lower: it.zl.iter().map(|v| v * unscale).collect(),
            z_upper: it.zu.iter().map(|v| v * unscale).collect(),
            x: it.x,
            iterations,
            mu,
        }
    }

    fn curvature(&self, hess: &[f64], sigma: &[f64], delta_w: f64, d: &[f64]) -> f64 {
        let mut v = 0.0;
        for (&(r, c), &h) in self.hess_pattern.iter().zip(hess) {
            if r == c {
                v += h * d[r] * d[r];
            } else {
                v += 2.0 * h * d[r] * d[c];
            }
        }
        for (f, s) in sigma.iter().enumerate() {
            v += (s + delta_w) * d[f] * d[f];
        }
        v
    }

    fn max_step_primal(&self, x: &[f64], dx: &[f64], tau: f64) -> f64 {
        let mut alpha = 1.0f64;
        for i in 0..self.n {
            if self.has_lower(i) && dx[i] < 0.0 {
                alpha = alpha.min(-tau * (x[i] - self.xl[i]) / dx[i]);
            }
            if self.has_upper(i) && dx[i] > 0.0 {
                alpha = alpha.min(tau * (self.xu[i] - x[i]) / dx[i]);
            }
        }
        alpha
    }

    fn max_step_dual(&self, it: &Iterate, dzl: &[f64], dzu: &[f64], tau: f64) -> f64 {
        let mut alpha = 1.0f64;
        for i in 0..self.n {
            if self.has_lower(i) && dzl[i] < 0.0 {
                alpha = alpha.min(-tau * it.zl[i] / dzl[i]);
            }
            if self.has_upper(i) && dzu[i] < 0.0 {
                alpha = alpha.min(-tau * it.zu[i] / dzu[i]);
            }
        }
        alpha
    }

    fn factor_with_correction(
        &self,
        kkt: &mut Kkt,
        hess: &[f64],
        sigma: &[f64],
        jac: &[f64],
        delta_w_last: &mut f64,
    ) -> Option<f64> {
        let dc = self.opts.dual_regularization;
        let inertia = kkt.factor(hess, sigma, jac, dc);
        if kkt.inertia_ok(inertia) {
            return Some(0.0);
        }
        let mut delta_w = if *delta_w_last == 0.0 {
            1e-4
        } else {
            (*delta_w_last / 3.0).max(1e-20)
        };
        let grow = if *delta_w_last == 0.0 { 100.0 } else { 8.0 };
        let mut diag = vec![0.0; sigma.len()];
        loop {
            for (d, s) in diag.iter_mut().zip(sigma) {
                *d = s + delta_w;
            }
            let inertia: Inertia = kkt.factor(hess, &diag, jac, dc);
            if kkt.inertia_ok(inertia) {
                *delta_w_last = delta_w;
                return Some(delta_w);
            }
            delta_w *= grow;
            if delta_w > 1e40 {
                return None;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn second_order_correction(
        &self,
        kkt: &Kkt,
        it: &Iterate,
        ev: &Evals,
        rhs: &[f64],
        c_trial: &[f64],
        alpha: f64,
        tau: f64,
        mu: f64,
        obj_scale: f64,
        nu: f64,
        merit0: f64,
        slope: f64,
    ) -> Option<(Vec<f64>, f64, Evals)> {
        let nf = self.free.len();
        let mut rhs_soc = rhs.to_vec();
        for r in 0..self.m {
            rhs_soc[nf + r] = -(alpha * ev.c[r] + c_trial[r]);
        }
        let sol = kkt.solve(&rhs_soc);
        let mut dx = vec![0.0; self.n];
        for (f, &i) in self.free.iter().enumerate() {
            dx[i] = sol[f];
        }
        let a_soc = self.max_step_primal(&it.x, &dx, tau);
        let xt = step(&it.x, &dx, a_soc);
        let ft = self.problem.objective(&xt);
        let mut ct = vec![0.0; self.m];
        self.problem.constraints(&xt, &mut ct);
        let merit_t = self.barrier_value(&xt, obj_scale * ft, mu) + nu * one_norm(&ct);
        if merit_t.is_finite() && merit_t - merit0 <= ARMIJO * alpha * slope.min(0.0) {
            let ev_t = self.evaluate(&xt);
            Some((xt, alpha, ev_t))
        } else {
            None
        }
    }

    /// Minimizes the constraint violation from the current point. Returns the
    /// new primal point and bound multipliers, or `None` when no sufficient
    /// reduction was possible.
    fn restore(&self, it: &Iterate, ev: &Evals, mu: f64) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, usize)> {
        let theta_r = one_norm(&ev.c);
        let mu_r = mu.max(inf_norm(&ev.c));
        let resto = Restoration::new(self.problem, &it.x, mu_r);
        let nr = resto.num_variables();
        let mut x0 = vec![0.0; nr];
        x0[..self.n].copy_from_slice(&it.x);
        let mut zl = vec![0.0; nr];
        let mut zu = vec![0.0; nr];
        for i in 0..self.n {
            zl[i] = it.zl[i].min(RESTO_RHO);
            zu[i] = it.zu[i].min(RESTO_RHO);
        }
        let m = self.m;
        for r in 0..m {
            let c = ev.c[r];
            let a = (mu_r - RESTO_RHO * c) / (2.0 * RESTO_RHO);
            let nv = a + (a * a + mu_r * c / (2.0 * RESTO_RHO)).sqrt();
            let pv = c + nv;
            x0[self.n + r] = pv.max(1e-12);
            x0[self.n + m + r] = nv.max(1e-12);
            zl[self.n + r] = mu_r / x0[self.n + r];
            zl[self.n + m + r] = mu_r / x0[self.n + m + r];
        }
        let warm = WarmStart {
            lambda: vec![0.0; m],
            z_lower: zl,
            z_upper: zu,
        };
        let opts = IpmOptions {
            mu_init: mu_r,
            bound_push: 1e-12,
            bound_frac: 1e-12,
            max_iterations: self.opts.max_iterations,
            ..self.opts.clone()
        };
        let mut matchable = vec![true; nr];
        matchable[self.n..].iter_mut().for_each(|v| *v = false);
        let problem = self.problem;
        let n = self.n;
        let exit = move |x: &[f64]| -> bool {
            let mut c = vec![0.0; m];
            problem.constraints(&x[..n], &mut c);
            one_norm(&c) <= 0.9 * theta_r
        };
        let result = Solver::new(&resto, &opts, &matchable, Some(&exit), false).run(&x0, Some(&warm));
        let mut c = vec![0.0; m];
        self.problem.constraints(&result.x[..n], &mut c);
        let theta = one_norm(&c);
        debug!("restoration: status {:?} theta {theta:.3e} (from {theta_r:.3e})", result.status);
        if theta <= 0.9 * theta_r && result.status == Status::Optimal {
            Some((
                result.x[..n].to_vec(),
                result.z_lower[..n].to_vec(),
                result.z_upper[..n].to_vec(),
                result.iterations,
            ))
        } else {
            None
        }
    }
}

fn step(x: &[f64], dx: &[f64], alpha: f64) -> Vec<f64> {
    x.iter().zip(dx).map(|(a, d)| a + alpha * d).collect()
}

/// Elastic feasibility problem
///
/// ```text
/// min ρ·Σ(p + n) + ζ/2·Σ d_i²(x_i − x̄_i)²   s.t.  c(x) − p + n = 0,  p, n ≥ 0
/// ```
struct Restoration<'a> {
    inner: &'a dyn NlpProblem,
    n: usize,
    m: usize,
    x_ref: Vec<f64>,
    weight: Vec<f64>,
    zeta: f64,
    inner_hess: Vec<(usize, usize)>,
    inner_jac: Vec<(usize, usize)>,
}

impl<'a> Restoration<'a> {
    fn new(inner: &'a dyn NlpProblem, x_ref: &[f64], mu: f64) -> Self {
        let weight = x_ref.iter().map(|v| (1.0 / v.abs().max(1.0)).powi(2)).collect();
        Self {
            inner,
            n: inner.num_variables(),
            m: inner.num_constraints(),
            x_ref: x_ref.to_vec(),
            weight,
            zeta: mu.sqrt(),
            inner_hess: inner.hessian_structure(),
            inner_jac: inner.jacobian_structure(),
        }
    }
}

impl NlpProblem for Restoration<'_> {
    fn num_variables(&self) -> usize {
        self.n + 2 * self.m
    }

    fn num_constraints(&self) -> usize {
        self.m
    }

    fn bounds(&self, lower: &mut [f64], upper: &mut [f64]) {
        self.inner.bounds(&mut lower[..self.n], &mut upper[..self.n]);
        lower[self.n..].iter_mut().for_each(|v| *v = 0.0);
        upper[self.n..].iter_mut().for_each(|v| *v = f64::INFINITY);
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let elastic: f64 = x[self.n..].iter().sum();
        let prox: f64 = (0..self.n)
            .map(|i| self.weight[i] * (x[i] - self.x_ref[i]).powi(2))
            .sum();
        RESTO_RHO * elastic + 0.5 * self.zeta * prox
    }

    fn objective_gradient(&self, x: &[f64], grad: &mut [f64]) {
        for i in 0..self.n {
            grad[i] = self.zeta * self.weight[i] * (x[i] - self.x_ref[i]);
        }
        grad[self.n..].iter_mut().for_each(|g| *g = RESTO_RHO);
    }

    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        self.inner.constraints(&x[..self.n], c);
        for r in 0..self.m {
            c[r] += -x[self.n + r] + x[self.n + self.m + r];
        }
    }

    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        let mut s = self.inner_jac.clone();
        s.extend((0..self.m).map(|r| (r, self.n + r)));
        s.extend((0..self.m).map(|r| (r, self.n + self.m + r)));
        s
    }

    fn jacobian_values(&self, x: &[f64], values: &mut [f64]) {
        let k = self.inner_jac.len();
        self.inner.jacobian_values(&x[..self.n], &mut values[..k]);
        values[k..k + self.m].iter_mut().for_each(|v| *v = -1.0);
        values[k + self.m..].iter_mut().for_each(|v| *v = 1.0);
    }

    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        let mut s = self.inner_hess.clone();
        s.extend((0..self.n).map(|i| (i, i)));
        s
    }

    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda: &[f64], values: &mut [f64]) {
        let k = self.inner_hess.len();
        self.inner.hessian_values(&x[..self.n], 0.0, lambda, &mut values[..k]);
        for i in 0..self.n {
            values[k + i] = obj_factor * self.zeta * self.weight[i];
        }
    }
}
