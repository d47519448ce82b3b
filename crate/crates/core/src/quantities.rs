//! Physical constants, unit systems and the particle model.
//!
//! Only two unit modes exist. In [`UnitMode::Natural`] both `h` and `c` are
//! exactly one, so speeds are fractions of `c`; in [`UnitMode::Si`] speeds are
//! in metres per second. The reduced constant `h / 2pi` is never stored.

use crate::error::{Error, Result};

/// CODATA 2018 Planck constant, J s (exact by definition of the SI).
pub const PLANCK_SI: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT_SI: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitMode {
    Si,
    Natural,
}

impl std::fmt::Display for UnitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnitMode::Si => "si",
            UnitMode::Natural => "natural",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    h: f64,
    c: f64,
    mode: UnitMode,
}

impl UnitSystem {
    /// `h = c = 1`.
    pub fn natural() -> Self {
        UnitSystem {
            h: 1.0,
            c: 1.0,
            mode: UnitMode::Natural,
        }
    }

    /// SI with CODATA defaults.
    pub fn si() -> Self {
        UnitSystem {
            h: PLANCK_SI,
            c: SPEED_OF_LIGHT_SI,
            mode: UnitMode::Si,
        }
    }

    /// SI with injected constants.
    pub fn si_with(h: f64, c: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidUnits(format!("h must be positive, got {h}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidUnits(format!("c must be positive, got {c}")));
        }
        Ok(UnitSystem {
            h,
            c,
            mode: UnitMode::Si,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mode(&self) -> UnitMode {
        self.mode
    }

    /// `1 - v^2/c^2`, evaluated as `(1 - b)(1 + b)` to keep precision near `c`.
    ///
    /// Fails when `|v| >= c`.
    pub fn proper_time_rate_squared(&self, v: f64) -> Result<f64> {
        let beta = self.beta(v)?;
        Ok((1.0 - beta) * (1.0 + beta))
    }

    /// `sqrt(1 - v^2/c^2)`, the rate of proper time per coordinate time.
    pub fn proper_time_rate(&self, v: f64) -> Result<f64> {
        self.proper_time_rate_squared(v).map(f64::sqrt)
    }

    /// Lorentz factor for speed `v` (absolute in SI mode, fraction of c in natural mode).
    pub fn lorentz_factor(&self, v: f64) -> Result<f64> {
        self.proper_time_rate(v).map(|r| 1.0 / r)
    }

    fn beta(&self, v: f64) -> Result<f64> {
        let beta = v.abs() / self.c;
        if !beta.is_finite() || beta >= 1.0 {
            return Err(Error::SpeedLimit {
                speed: v.abs(),
                c: self.c,
            });
        }
        Ok(beta)
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem::natural()
    }
}

/// A point particle of rest mass `m0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    rest_mass: f64,
}

impl Particle {
    pub fn new(rest_mass: f64) -> Result<Self> {
        if !(rest_mass.is_finite() && rest_mass > 0.0) {
            return Err(Error::InvalidParticle(rest_mass));
        }
        Ok(Particle { rest_mass })
    }

    pub fn rest_mass(&self) -> f64 {
        self.rest_mass
    }
}

/// Compton length `lambda = h / (m0 c)`.
pub fn compton_length(p: &Particle, u: &UnitSystem) -> f64 {
    u.h() / (p.rest_mass() * u.c())
}

/// Relativistic mass `m0 / sqrt(1 - v^2/c^2)`.
///
/// `v` is absolute in SI mode and a fraction of c in natural mode (where the two coincide).
pub fn relativistic_mass(p: &Particle, v: f64, u: &UnitSystem) -> Result<f64> {
    if v == 0.0 {
        return Ok(p.rest_mass());
    }
    Ok(p.rest_mass() * u.lorentz_factor(v)?)
}

/// The constant `k = m0^2 c^2 / h` relating |action| to swept area.
///
/// Shares the product `m0 c` with [`compton_length`] so that `k * lambda^2 = h`
/// holds to a few ulps.
pub fn proportionality_constant(p: &Particle, u: &UnitSystem) -> f64 {
    let mc = p.rest_mass() * u.c();
    mc * mc / u.h()
}
