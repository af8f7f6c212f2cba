//! Physical parameters and the planar/axisymmetric mode switch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interpretation of the meridian half-section `0 <= r <= R(z)`.
///
/// Both modes share one discretization. Axisymmetric mode integrates with
/// weight `2 pi r` and carries the hoop strain `u_r / r`; planar mode is the
/// symmetric half of a 2D channel, integrated with weight `2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Planar,
    Axisym,
}

impl Mode {
    /// Doubling/revolution factor `kappa`.
    pub fn kappa(self) -> f64 {
        match self {
            Mode::Planar => 2.0,
            Mode::Axisym => 2.0 * std::f64::consts::PI,
        }
    }

    /// Radial weight `rho(r)`.
    #[inline]
    pub fn rho(self, r: f64) -> f64 {
        match self {
            Mode::Planar => 1.0,
            Mode::Axisym => r,
        }
    }

    /// Full measure weight `kappa * rho(r)`.
    #[inline]
    pub fn weight(self, r: f64) -> f64 {
        self.kappa() * self.rho(r)
    }

    pub fn is_axisym(self) -> bool {
        matches!(self, Mode::Axisym)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Planar => "planar",
            Mode::Axisym => "axisym",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "planar" => Ok(Mode::Planar),
            "axisym" | "axisymmetric" => Ok(Mode::Axisym),
            other => Err(Error::InvalidInput(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fluid and pipe parameters.
///
/// `c` is the Poiseuille coefficient of the inlet profile `c (r^2 - R^2)`
/// and must be negative for a physical flow; `p1` is the outlet pressure level.
/// Zero `c` is accepted as the degenerate no-flow configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidParams {
    pub mu: f64,
    pub c: f64,
    pub p1: f64,
    pub radius: f64,
    pub length: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        Self { mu: 1.0, c: -1.0, p1: 0.0, radius: 1.0, length: 2.0 }
    }
}

impl FluidParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.c, self.p1, self.radius, self.length].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite fluid parameter".into()));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidInput(format!("viscosity must be positive, got {}", self.mu)));
        }
        if self.c > 0.0 {
            return Err(Error::InvalidInput(format!("Poiseuille coefficient must be nonpositive, got {}", self.c)));
        }
        if self.radius <= 0.0 || self.length <= 0.0 {
            return Err(Error::InvalidInput("radius and length must be positive".into()));
        }
        Ok(())
    }

    /// Inlet velocity profile `(0, c (r^2 - R^2))`.
    pub fn inlet_velocity(&self, r: f64) -> [f64; 2] {
        [0.0, self.c * (r * r - self.radius * self.radius)]
    }

    /// Outlet traction `h = (2 mu c r, -p1)` in meridian components.
    pub fn outlet_traction(&self, r: f64) -> [f64; 2] {
        [2.0 * self.mu * self.c * r, -self.p1]
    }

    /// Inlet pressure implied by the cylinder relation `c = (p1 - p0) / (4 mu L)`.
    pub fn inlet_pressure(&self) -> f64 {
        self.p1 - 4.0 * self.mu * self.c * self.length
    }
}
