//! Wall profiles `R(z)` of the meridian section.

use log::warn;

use super::spline::ClampedSpline;
use crate::error::{Error, Result};
use crate::params::{FluidParams, Mode};
use crate::quadrature::gauss_legendre;

/// Default control-ordinate layout of the spline family.
pub const DEFAULT_FAMILY_OFFSETS: [f64; 3] = [-1.0, 0.5, -1.0];

/// Samples per knot interval used when checking radius positivity.
const POSITIVITY_SAMPLES: usize = 64;

/// Lateral wall of a pipe: `R(z) = R + delta(z)` on `[0, L]`.
///
/// `delta` is a clamped cubic spline with zero value and zero slope at both
/// ends, so the inlet and outlet stay the fixed discs of radius `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeProfile {
    mode: Mode,
    reference_radius: f64,
    length: f64,
    amplitude: f64,
    target_volume: f64,
    dilation: f64,
    perturbation: ClampedSpline,
}

/// Volume `|Omega| = V` of the reference cylinder (or rectangle, in planar mode).
pub fn cylinder_volume(mode: Mode, radius: f64, length: f64) -> f64 {
    match mode {
        Mode::Axisym => std::f64::consts::PI * radius * radius * length,
        Mode::Planar => 2.0 * radius * length,
    }
}

/// Straight pipe of radius `R` and length `L`.
pub fn make_cylinder_profile(params: &FluidParams, mode: Mode) -> Result<ShapeProfile> {
    params.validate()?;
    ShapeProfile::from_ordinates(mode, params.radius, params.length, 0.0, vec![0.0, params.length], vec![0.0, 0.0])
}

/// Spline family member `R(z) = R + e s(z)`, where `s` is the clamped cubic
/// through `(0, a_1, ..., a_K, 0)` at uniformly spaced knots.
pub fn make_spline_profile(params: &FluidParams, mode: Mode, offsets: &[f64], e: f64) -> Result<ShapeProfile> {
    params.validate()?;
    if offsets.is_empty() {
        return Err(Error::InvalidInput("spline family needs at least one control offset".into()));
    }
    if !e.is_finite() || offsets.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidInput("non-finite family parameter".into()));
    }
    let k = offsets.len();
    let knots: Vec<f64> = (0..k + 2).map(|i| params.length * i as f64 / (k + 1) as f64).collect();
    let mut values = Vec::with_capacity(k + 2);
    values.push(0.0);
    values.extend(offsets.iter().map(|a| e * a));
    values.push(0.0);
    ShapeProfile::from_ordinates(mode, params.radius, params.length, e, knots, values)
}

/// Restores the prescribed volume by dilating the interior cross-sections.
///
/// A constant shift `t` is added to every interior control ordinate, i.e.
/// `R + delta(z) + t b(z)` with `b` the clamped spline through `(0, 1, ..., 1, 0)`.
/// The shift is found by bisection; `dilation()` on the result reports `t`.
pub fn renormalize_volume(profile: &ShapeProfile) -> Result<ShapeProfile> {
    let target = profile.target_volume;
    let residual = |t: f64| -> Result<f64> { Ok(profile.shifted(t)?.volume() - target) };
    let f0 = residual(0.0)?;
    if f0.abs() <= 1e-15 * target {
        return Ok(profile.clone());
    }
    // Volume grows with t wherever the radius stays positive, so the root
    // closest to zero lies on the side opposite to the sign of f0.
    let dir = if f0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = 1e-3 * profile.reference_radius;
    let (mut lo, mut hi) = (0.0_f64, 0.0_f64);
    let mut found = false;
    for _ in 0..80 {
        let t = dir * step;
        match residual(t) {
            Ok(f) if f.signum() != f0.signum() || f == 0.0 => {
                if dir > 0.0 {
                    hi = t;
                } else {
                    lo = t;
                }
                found = true;
                break;
            }
            Ok(_) => {
                if dir > 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
                step *= 2.0;
            }
            Err(_) => break,
        }
    }
    if !found {
        return Err(Error::Infeasible("no volume-restoring dilation keeps the radius positive".into()));
    }
    // Invariant: residual(lo) and residual(hi) bracket the root.
    let f_lo = residual(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f_mid = residual(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= 1e-16 * profile.reference_radius {
            break;
        }
    }
    let t = if residual(lo)?.abs() <= residual(hi)?.abs() { lo } else { hi };
    let mut out = profile.shifted(t)?;
    out.dilation = profile.dilation + t;
    let err = (out.volume() - target).abs();
    if err > 1e-12 * target {
        return Err(Error::Infeasible(format!("volume renormalization stalled at relative error {:.3e}", err / target)));
    }
    Ok(out)
}

/// Volume of the body generated by `profile`.
pub fn volume(profile: &ShapeProfile) -> f64 {
    profile.volume()
}

impl ShapeProfile {
    /// Builds a profile from perturbation ordinates `delta(z_k)` at the given knots.
    /// End ordinates must be zero.
    pub fn from_ordinates(
        mode: Mode,
        reference_radius: f64,
        length: f64,
        amplitude: f64,
        knots: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if !(reference_radius > 0.0 && length > 0.0) {
            return Err(Error::InvalidInput("radius and length must be positive".into()));
        }
        if knots.len() < 2 || knots[0].abs() > 1e-12 * length || (knots[knots.len() - 1] - length).abs() > 1e-12 * length {
            return Err(Error::InvalidInput("profile knots must span [0, L]".into()));
        }
        if values[0].abs() > 1e-12 * reference_radius || values[values.len() - 1].abs() > 1e-12 * reference_radius {
            return Err(Error::InvalidInput("profile must meet the inlet and outlet discs: R(0) = R(L) = R".into()));
        }
        let mut values = values;
        let n = values.len();
        values[0] = 0.0;
        values[n - 1] = 0.0;
        let mut knots = knots;
        knots[0] = 0.0;
        knots[n - 1] = length;
        let perturbation = ClampedSpline::new(knots, values, 0.0, 0.0)?;
        let profile = Self {
            mode,
            reference_radius,
            length,
            amplitude,
            target_volume: cylinder_volume(mode, reference_radius, length),
            dilation: 0.0,
            perturbation,
        };
        profile.check_positive()?;
        Ok(profile)
    }

    fn check_positive(&self) -> Result<()> {
        let knots = self.perturbation.knots();
        for w in knots.windows(2) {
            for i in 0..=POSITIVITY_SAMPLES {
                let z = w[0] + (w[1] - w[0]) * i as f64 / POSITIVITY_SAMPLES as f64;
                let r = self.radius(z);
                if !(r > 0.0) {
                    return Err(Error::NonpositiveRadius { z, radius: r });
                }
            }
        }
        Ok(())
    }

    fn shifted(&self, t: f64) -> Result<Self> {
        let knots = self.perturbation.knots().to_vec();
        let n = knots.len();
        let values: Vec<f64> = self
            .perturbation
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 0 || i == n - 1 { *v } else { v + t })
            .collect();
        let mut out = Self::from_ordinates(self.mode, self.reference_radius, self.length, self.amplitude, knots, values)?;
        out.target_volume = self.target_volume;
        out.dilation = self.dilation;
        Ok(out)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn reference_radius(&self) -> f64 {
        self.reference_radius
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Family amplitude `e` (zero for the cylinder).
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn target_volume(&self) -> f64 {
        self.target_volume
    }

    /// Interior shift applied by [`renormalize_volume`].
    pub fn dilation(&self) -> f64 {
        self.dilation
    }

    pub fn knots(&self) -> &[f64] {
        self.perturbation.knots()
    }

    /// Wall radius `R(z)` at the knots.
    pub fn knot_radii(&self) -> Vec<f64> {
        self.perturbation.values().iter().map(|d| self.reference_radius + d).collect()
    }

    pub fn radius(&self, z: f64) -> f64 {
        self.reference_radius + self.perturbation.eval(z)
    }

    pub fn radius_slope(&self, z: f64) -> f64 {
        self.perturbation.eval_with_slope(z).1
    }

    pub fn is_cylinder(&self) -> bool {
        self.perturbation.values().iter().all(|v| *v == 0.0)
    }

    pub fn max_radius(&self) -> f64 {
        let knots = self.perturbation.knots();
        let mut m = self.reference_radius;
        for w in knots.windows(2) {
            for i in 0..=POSITIVITY_SAMPLES {
                m = m.max(self.radius(w[0] + (w[1] - w[0]) * i as f64 / POSITIVITY_SAMPLES as f64));
            }
        }
        m
    }

    /// Emits a warning when the wall leaves the containment cylinder of radius `r0`.
    pub fn warn_if_outside(&self, r0: f64) -> bool {
        let m = self.max_radius();
        if m > r0 {
            warn!("profile reaches radius {m:.6} beyond the containment radius {r0:.6}");
            true
        } else {
            false
        }
    }

    /// `pi int R^2 dz` (axisymmetric) or `2 int R dz` (planar); exact for the
    /// piecewise-cubic wall.
    pub fn volume(&self) -> f64 {
        let (x, w) = gauss_legendre(4);
        let knots = self.perturbation.knots();
        let mut acc = 0.0;
        for k in knots.windows(2) {
            let h = k[1] - k[0];
            for (xi, wi) in x.iter().zip(&w) {
                let r = self.radius(k[0] + h * xi);
                acc += h * wi * match self.mode {
                    Mode::Axisym => r * r,
                    Mode::Planar => r,
                };
            }
        }
        match self.mode {
            Mode::Axisym => std::f64::consts::PI * acc,
            Mode::Planar => 2.0 * acc,
        }
    }
}
