//! Problem interface consumed by the solver.

/// A smooth nonlinear program
///
/// ```text
/// min f(x)  s.t.  c(x) = 0,  x_l <= x <= x_u
/// ```
///
/// with sparse first and second derivatives. Infinite bounds are given as
/// `f64::NEG_INFINITY` / `f64::INFINITY`. Variables whose bounds coincide are
/// treated as fixed parameters.
pub trait NlpProblem {
    fn num_variables(&self) -> usize;
    fn num_constraints(&self) -> usize;

    /// Writes lower and upper variable bounds.
    fn bounds(&self, lower: &mut [f64], upper: &mut [f64]);

    fn objective(&self, x: &[f64]) -> f64;
    fn objective_gradient(&self, x: &[f64], grad: &mut [f64]);
    fn constraints(&self, x: &[f64], c: &mut [f64]);

    /// Sparsity pattern of the constraint Jacobian as `(row, col)` pairs.
    fn jacobian_structure(&self) -> Vec<(usize, usize)>;
    /// Jacobian values in the order of [`NlpProblem::jacobian_structure`].
    fn jacobian_values(&self, x: &[f64], values: &mut [f64]);

    /// Lower-triangular pattern (`row >= col`) of the Lagrangian Hessian.
    fn hessian_structure(&self) -> Vec<(usize, usize)>;
    /// Values of `obj_factor * ∇²f + Σ λ_i ∇²c_i` in the order of
    /// [`NlpProblem::hessian_structure`].
    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda: &[f64], values: &mut [f64]);
}
