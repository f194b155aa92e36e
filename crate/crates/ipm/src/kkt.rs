//! Assembly and solution of the primal-dual Newton system
//!
//! ```text
//! [ W + Σ + δw·I   Jᵀ     ] [dx]   [r_x]
//! [ J             −δc·I   ] [dλ] = [r_c]
//! ```
//!
//! Each constraint row is paired with one primal variable it depends on so
//! that the factorization can use 2×2 pivots; this keeps the elimination
//! stable when the (2,2) block is only a tiny regularization. Rows and
//! columns that stay unpaired become 1×1 pivots, eliminated last when they
//! couple to more than one other unknown.

use crate::ldl::{BlockLdl, Inertia, Pivot};

#[derive(Debug, Clone)]
pub(crate) struct Kkt {
    nx: usize,
    m: usize,
    hess_pattern: Vec<(usize, usize)>,
    jac_pattern: Vec<(usize, usize)>,
    pattern: Vec<(usize, usize)>,
    values: Vec<f64>,
    ldl: BlockLdl,
    delta_c: f64,
}

impl Kkt {
    /// `hess_pattern` is lower triangular over the `nx` unknowns;
    /// `jac_pattern` holds `(row, col)` pairs. `jac_values` and `matchable`
    /// steer the choice of 2×2 pivots.
    pub(crate) fn new(
        nx: usize,
        m: usize,
        hess_pattern: Vec<(usize, usize)>,
        jac_pattern: Vec<(usize, usize)>,
        jac_values: &[f64],
        matchable: &[bool],
    ) -> Self {
        assert_eq!(jac_pattern.len(), jac_values.len());
        assert_eq!(matchable.len(), nx);

        let mut order: Vec<usize> = (0..jac_pattern.len()).collect();
        order.sort_by(|&a, &b| {
            jac_values[b]
                .abs()
                .total_cmp(&jac_values[a].abs())
                .then(jac_pattern[a].cmp(&jac_pattern[b]))
        });
        let mut row_match = vec![usize::MAX; m];
        let mut col_match = vec![usize::MAX; nx];
        for &e in &order {
            let (r, c) = jac_pattern[e];
            if jac_values[e] == 0.0 || !matchable[c] {
                continue;
            }
            if row_match[r] == usize::MAX && col_match[c] == usize::MAX {
                row_match[r] = c;
                col_match[c] = r;
            }
        }

        let mut pattern = Vec::with_capacity(hess_pattern.len() + nx + jac_pattern.len() + m);
        pattern.extend(hess_pattern.iter().copied());
        pattern.extend((0..nx).map(|i| (i, i)));
        pattern.extend(jac_pattern.iter().map(|&(r, c)| (nx + r, c)));
        pattern.extend((0..m).map(|i| (nx + i, nx + i)));

        let mut degree = vec![0usize; nx + m];
        for &(r, c) in &pattern {
            if r != c {
                degree[r] += 1;
                degree[c] += 1;
            }
        }

        let mut pivots = Vec::new();
        let mut late = Vec::new();
        for c in 0..nx {
            if col_match[c] == usize::MAX {
                pivots.push(Pivot::Single(c));
                late.push(degree[c] > 1);
            } else {
                pivots.push(Pivot::Pair(c, nx + col_match[c]));
                late.push(false);
            }
        }
        for r in 0..m {
            if row_match[r] == usize::MAX {
                pivots.push(Pivot::Single(nx + r));
                late.push(true);
            }
        }

        let ldl = BlockLdl::analyze(nx + m, &pattern, &pivots, &late);
        Self {
            nx,
            m,
            values: vec![0.0; pattern.len()],
            hess_pattern,
            jac_pattern,
            pattern,
            ldl,
            delta_c: 0.0,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.nx + self.m
    }

    /// Assembles and factors the system. `diag` is added to the Hessian
    /// diagonal (barrier term plus any primal regularization).
    pub(crate) fn factor(&mut self, hess: &[f64], diag: &[f64], jac: &[f64], delta_c: f64) -> Inertia {
        let nh = self.hess_pattern.len();
        let nj = self.jac_pattern.len();
        self.values[..nh].copy_from_slice(hess);
        self.values[nh..nh + self.nx].copy_from_slice(diag);
        self.values[nh + self.nx..nh + self.nx + nj].copy_from_slice(jac);
        self.values[nh + self.nx + nj..].iter_mut().for_each(|v| *v = -delta_c);
        self.delta_c = delta_c;
        self.ldl.factor(&self.values)
    }

    /// Whether the inertia matches a step that is a descent direction.
    pub(crate) fn inertia_ok(&self, inertia: Inertia) -> bool {
        inertia.zero == 0 && inertia.positive == self.nx && inertia.negative == self.m
    }

    fn apply(&self, x: &[f64], y: &mut [f64], drop_delta_c: bool) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let dual_start = self.values.len() - self.m;
        for (k, (&(r, c), &v)) in self.pattern.iter().zip(&self.values).enumerate() {
            if drop_delta_c && k >= dual_start {
                continue;
            }
            y[r] += v * x[c];
            if r != c {
                y[c] += v * x[r];
            }
        }
    }

    /// Solves the system and refines the solution against the matrix
    /// without dual regularization.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = rhs.to_vec();
        self.ldl.solve(&mut x);
        if self.delta_c == 0.0 {
            return x;
        }
        let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        let mut r = vec![0.0; n];
        let mut prev = f64::INFINITY;
        for _ in 0..8 {
            self.apply(&x, &mut r, true);
            for (ri, bi) in r.iter_mut().zip(rhs) {
                *ri = bi - *ri;
            }
            let res = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if res <= 1e-14 * scale || res >= 0.5 * prev {
                break;
            }
            prev = res;
            self.ldl.solve(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equality_qp_step() {
        // min ½(x0² + x1²) s.t. x0 + x1 = 1 from the origin.
        let mut kkt = Kkt::new(2, 1, vec![(0, 0), (1, 1)], vec![(0, 0), (0, 1)], &[1.0, 1.0], &[true, true]);
        let inertia = kkt.factor(&[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0], 1e-10);
        assert!(kkt.inertia_ok(inertia));
        let sol = kkt.solve(&[0.0, 0.0, 1.0]);
        assert_relative_eq!(sol[0], 0.5, epsilon = 1e-10);
        assert_relative_eq!(sol[1], 0.5, epsilon = 1e-10);
        assert_relative_eq!(sol[2], -0.5, epsilon = 1e-10);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // two copies of x0 + x1 = 1
        let mut kkt = Kkt::new(
            2,
            2,
            vec![(0, 0), (1, 1)],
            vec![(0, 0), (0, 1), (1, 0), (1, 1)],
            &[1.0; 4],
            &[true, true],
        );
        let inertia = kkt.factor(&[1.0, 1.0], &[0.0, 0.0], &[1.0; 4], 1e-9);
        assert!(kkt.inertia_ok(inertia));
        let sol = kkt.solve(&[0.0, 0.0, 1.0, 1.0]);
        assert_relative_eq!(sol[0], 0.5, epsilon = 1e-7);
        assert_relative_eq!(sol[1], 0.5, epsilon = 1e-7);
        assert_relative_eq!(sol[2] + sol[3], -0.5, epsilon = 1e-7);
    }

    #[test]
    fn indefinite_hessian_changes_inertia() {
        let mut kkt = Kkt::new(2, 1, vec![(0, 0), (1, 1)], vec![(0, 0)], &[1.0], &[true, true]);
        let inertia = kkt.factor(&[1.0, -1.0], &[0.0, 0.0], &[1.0], 1e-10);
        assert!(!kkt.inertia_ok(inertia));
        let inertia = kkt.factor(&[1.0, -1.0], &[0.0, 2.0], &[1.0], 1e-10);
        assert!(kkt.inertia_ok(inertia));
    }
}
