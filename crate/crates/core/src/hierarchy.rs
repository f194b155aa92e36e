//! Stationary isothermal pipe models and their closed-form solutions.
//!
//! Level 1 keeps ram pressure and gravity, level 2 drops ram pressure,
//! level 3 drops gravity as well:
//!
//! ```text
//! level 3:  p' = −K/p
//! level 2:  p' = −K/p − α p
//! level 1:  p' = (−K/p − α p) / (1 − q²c²/(A²p²))
//! ```
//!
//! with `K = λ c² |q| q / (2 A² D)` and `α = g s / c²`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GasError, Result};
use crate::network::{GasParameters, Pipe};

/// Ram factors closer to zero than this are treated as sonic.
pub const SONIC_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ModelLevel {
    /// Ram pressure and gravity.
    M1 = 1,
    /// Gravity, no ram pressure.
    M2 = 2,
    /// Friction only.
    M3 = 3,
}

impl ModelLevel {
    pub const ALL: [ModelLevel; 3] = [ModelLevel::M1, ModelLevel::M2, ModelLevel::M3];

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    /// One level more accurate, saturating at level 1.
    pub fn finer(self) -> Self {
        match self {
            ModelLevel::M3 => ModelLevel::M2,
            _ => ModelLevel::M1,
        }
    }

    /// One level coarser, saturating at level 3.
    pub fn coarser(self) -> Self {
        match self {
            ModelLevel::M1 => ModelLevel::M2,
            _ => ModelLevel::M3,
        }
    }

    pub(crate) fn has_gravity(self) -> bool {
        self != ModelLevel::M3
    }

    pub(crate) fn has_ram(self) -> bool {
        self == ModelLevel::M1
    }
}

impl TryFrom<u8> for ModelLevel {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(ModelLevel::M1),
            2 => Ok(ModelLevel::M2),
            3 => Ok(ModelLevel::M3),
            _ => Err(format!("model level must be 1, 2 or 3, got {v}")),
        }
    }
}

impl From<ModelLevel> for u8 {
    fn from(l: ModelLevel) -> u8 {
        l as u8
    }
}

impl fmt::Display for ModelLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

pub fn sound_speed(gas: &GasParameters) -> f64 {
    (gas.specific_gas_constant * gas.temperature * gas.compressibility).sqrt()
}

/// Flow-independent coefficients of one pipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeCoefficients {
    /// λc²/(2A²D); multiply by |q|q to get K [Pa²/m].
    pub friction: f64,
    /// g s / c² [1/m]
    pub gravity: f64,
    /// c²/A²; the ram factor is 1 − ram·q²/p².
    pub ram: f64,
}

impl PipeCoefficients {
    pub fn new(pipe: &Pipe, gas: &GasParameters) -> Self {
        let c2 = sound_speed(gas).powi(2);
        let a2 = pipe.cross_area * pipe.cross_area;
        Self {
            friction: pipe.friction * c2 / (2.0 * a2 * pipe.diameter),
            gravity: gas.gravity * pipe.slope / c2,
            ram: c2 / a2,
        }
    }

    /// K for mass flow `q`.
    pub fn k(&self, q: f64) -> f64 {
        self.friction * q.abs() * q
    }

    /// Same pipe traversed from its far end.
    pub fn reversed(self) -> Self {
        Self {
            gravity: -self.gravity,
            ..self
        }
    }
}

/// Right-hand side dp/dx of the model at `level` [Pa/m].
pub fn rhs(level: ModelLevel, p: f64, q: f64, pipe: &Pipe, gas: &GasParameters) -> Result<f64> {
    rhs_with(level, p, q, &PipeCoefficients::new(pipe, gas))
}

pub(crate) fn rhs_with(level: ModelLevel, p: f64, q: f64, co: &PipeCoefficients) -> Result<f64> {
    if !(p > 0.0) {
        return Err(GasError::NonPositivePressure(p));
    }
    let k = co.k(q);
    let mut f = -k / p;
    if level.has_gravity() {
        f -= co.gravity * p;
    }
    if level.has_ram() {
        let factor = 1.0 - co.ram * q * q / (p * p);
        if factor.abs() < SONIC_GUARD {
            return Err(GasError::SonicFlow { pressure: p, factor });
        }
        f /= factor;
    }
    Ok(f)
}

/// Closed-form pressure at position `x` for levels 2 and 3.
pub fn analytic_pressure(level: ModelLevel, pipe: &Pipe, gas: &GasParameters, p0: f64, q: f64, x: f64) -> Result<f64> {
    let co = PipeCoefficients::new(pipe, gas);
    let k = co.k(q);
    let alpha = co.gravity;
    let radicand = match level {
        ModelLevel::M1 => return Err(GasError::Unsupported(1)),
        ModelLevel::M2 if alpha != 0.0 => (p0 * p0 + k / alpha) * (-2.0 * alpha * x).exp() - k / alpha,
        _ => p0 * p0 - 2.0 * k * x,
    };
    if !(radicand > 0.0) {
        return Err(GasError::DrainedPipe { position: x });
    }
    Ok(radicand.sqrt())
}
