//! Implicit Euler integration along a pipe.
//!
//! Each step solves the scalar relation
//!
//! ```text
//! R(p) = (p − p_prev)(1 − a/p²) + h (K/p + α p) = 0
//! ```
//!
//! where `a = q²c²/A²` on level 1 and zero otherwise, and `α` vanishes on
//! level 3. Multiplying through by the ram factor keeps the residual smooth
//! and leaves the root unchanged.

use crate::error::{GasError, Result};
use crate::hierarchy::{ModelLevel, PipeCoefficients, SONIC_GUARD};
use crate::network::{GasParameters, Pipe};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;
const BRACKET_SAMPLES: usize = 256;

/// Equidistant grid with `n_intervals` steps over `[0, length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub n_intervals: usize,
}

impl Grid {
    pub fn new(length: f64, n_intervals: usize) -> Result<Self> {
        if !(length > 0.0) || n_intervals == 0 {
            return Err(GasError::InvalidGrid(format!(
                "length {length} with {n_intervals} intervals"
            )));
        }
        Ok(Self { length, n_intervals })
    }

    /// Grid with stepsize `h`; `length / h` must be an integer up to 1e-9.
    pub fn with_stepsize(length: f64, h: f64) -> Result<Self> {
        let n = (length / h).round();
        if !(n >= 1.0) || (n * h - length).abs() > 1e-9 * length {
            return Err(GasError::InvalidGrid(format!(
                "stepsize {h} does not divide length {length}"
            )));
        }
        Self::new(length, n as usize)
    }

    pub fn stepsize(&self) -> f64 {
        self.length / self.n_intervals as f64
    }

    pub fn position(&self, k: usize) -> f64 {
        if k == self.n_intervals {
            self.length
        } else {
            k as f64 * self.stepsize()
        }
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..=self.n_intervals).map(|k| self.position(k)).collect()
    }

    /// Grid with `factor` times the stepsize.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_intervals % factor != 0 {
            return Err(GasError::IncompatibleGrids(format!(
                "{} intervals are not divisible by {factor}",
                self.n_intervals
            )));
        }
        Self::new(self.length, self.n_intervals / factor)
    }

    /// Whether the grid supports the 2h and 4h subgrids used by the
    /// estimators.
    pub fn is_estimable(&self) -> bool {
        self.n_intervals % 4 == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureProfile {
    pub grid: Grid,
    /// Pressure at each gridpoint [Pa].
    pub values: Vec<f64>,
    pub level: ModelLevel,
    pub flow: f64,
}

impl PressureProfile {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("profile has at least one value")
    }
}

/// Integrates the model at `level` from `p0` at x = 0 along the pipe.
pub fn integrate(
    level: ModelLevel,
    pipe: &Pipe,
    gas: &GasParameters,
    p0: f64,
    q: f64,
    grid: &Grid,
) -> Result<PressureProfile> {
    integrate_with(level, &PipeCoefficients::new(pipe, gas), p0, q, grid)
}

pub(crate) fn integrate_with(
    level: ModelLevel,
    co: &PipeCoefficients,
    p0: f64,
    q: f64,
    grid: &Grid,
) -> Result<PressureProfile> {
    if !(p0 > 0.0) {
        return Err(GasError::NonPositivePressure(p0));
    }
    let step = StepEquation::new(level, co, q, grid.stepsize());
    let mut values = Vec::with_capacity(grid.n_intervals + 1);
    values.push(p0);
    let mut p = p0;
    for k in 1..=grid.n_intervals {
        p = step.solve(p, grid.position(k))?;
        values.push(p);
    }
    Ok(PressureProfile {
        grid: *grid,
        values,
        level,
        flow: q,
    })
}

struct StepEquation {
    h: f64,
    k: f64,
    alpha: f64,
    a: f64,
    ram: bool,
}

impl StepEquation {
    fn new(level: ModelLevel, co: &PipeCoefficients, q: f64, h: f64) -> Self {
        Self {
            h,
            k: co.k(q),
            alpha: if level.has_gravity() { co.gravity } else { 0.0 },
            a: if level.has_ram() { co.ram * q * q } else { 0.0 },
            ram: level.has_ram(),
        }
    }

    fn residual(&self, p: f64, prev: f64) -> (f64, f64) {
        let g = 1.0 - self.a / (p * p);
        let d = p - prev;
        let r = d * g + self.h * (self.k / p + self.alpha * p);
        let dr = g + d * 2.0 * self.a / (p * p * p) + self.h * (self.alpha - self.k / (p * p));
        (r, dr)
    }

    fn check_sonic(&self, p: f64) -> Result<()> {
        if self.ram {
            let factor = 1.0 - self.a / (p * p);
            if factor.abs() < SONIC_GUARD {
                return Err(GasError::SonicFlow { pressure: p, factor });
            }
        }
        Ok(())
    }

    fn solve(&self, prev: f64, x: f64) -> Result<f64> {
        let mut p = prev;
        for _ in 0..NEWTON_MAX_ITER {
            self.check_sonic(p)?;
            let (r, dr) = self.residual(p, prev);
            if r.abs() <= NEWTON_TOL * p {
                return Ok(p);
            }
            if dr == 0.0 || !dr.is_finite() {
                break;
            }
            let mut next = p - r / dr;
            if !(next > 0.0) {
                next = 0.5 * p;
            }
            p = next;
        }
        self.bisect(prev, x)
    }

    /// Scans `[1 Pa, 2 p_prev]` downward for the first sign change of the
    /// residual and bisects it.
    fn bisect(&self, prev: f64, x: f64) -> Result<f64> {
        let lo_bound = 1.0;
        let hi_bound = 2.0 * prev;
        let mut hi = hi_bound;
        let (mut r_hi, _) = self.residual(hi, prev);
        let mut bracket = None;
        for j in 1..=BRACKET_SAMPLES {
            let lo = hi_bound - (hi_bound - lo_bound) * j as f64 / BRACKET_SAMPLES as f64;
            let (r_lo, _) = self.residual(lo, prev);
            if r_lo == 0.0 {
                self.check_sonic(lo)?;
                return Ok(lo);
            }
            if r_lo.signum() != r_hi.signum() {
                bracket = Some((lo, hi));
                break;
            }
            hi = lo;
            r_hi = r_lo;
        }
        let Some((mut lo, mut hi)) = bracket else {
            return Err(GasError::DrainedPipe { position: x });
        };
        let (r_lo0, _) = self.residual(lo, prev);
        let sign_lo = r_lo0.signum();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (r, _) = self.residual(mid, prev);
            if r.abs() <= NEWTON_TOL * mid {
                self.check_sonic(mid)?;
                return Ok(mid);
            }
            if r.signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        Err(GasError::NewtonDivergence { position: x })
    }
}

/// Subsamples `profile` onto the coarser `target` grid.
pub fn restrict_to_grid(profile: &PressureProfile, target: &Grid) -> Result<PressureProfile> {
    let src = profile.grid;
    if (src.length - target.length).abs() > 1e-9 * src.length {
        return Err(GasError::IncompatibleGrids(format!(
            "lengths {} and {} differ",
            src.length, target.length
        )));
    }
    if target.n_intervals == 0 || src.n_intervals % target.n_intervals != 0 {
        return Err(GasError::IncompatibleGrids(format!(
            "{} intervals cannot be restricted to {}",
            src.n_intervals, target.n_intervals
        )));
    }
    let stride = src.n_intervals / target.n_intervals;
    Ok(PressureProfile {
        grid: *target,
        values: profile.values.iter().step_by(stride).copied().collect(),
        level: profile.level,
        flow: profile.flow,
    })
}
