//! Imperfect pulse unitaries, free evolution, and the systematic error model.
//!
//! Each nominal pi pulse is an instantaneous rotation with an angle error and
//! a tilted axis:
//!
//! * `U_X = exp[-i (pi + eps_x) S·n]`, `n = (sqrt(1 - n_y^2 - n_z^2), n_y, n_z)`
//! * `U_Y = exp[-i (pi + eps_y) S·m]`, `m = (m_x, sqrt(1 - m_x^2 - m_z^2), m_z)`
//!
//! Angle errors and axis tilts toward z come from the inhomogeneous ac field
//! over a sample spanning `l ∈ [-d, d]`. With `u = |l| / d` uniform on
//! `[0, 1]`, an error of scale `s` is `s (1 - 3 u^2)`, which has density
//! `(1 / 2s) [3 (1 - e/s)]^{-1/2}` on `[-2s, s]` and second moment `0.8 s^2`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{DdError, Result};
use crate::spin::{rotation_unchecked, Unitary2};

/// Magnitudes of the systematic pulse errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseErrorParams {
    /// Rotation-angle error scale, radians.
    pub epsilon0: f64,
    /// Axis tilt toward z; signed.
    pub n0: f64,
    /// In-plane tilt of the Y pulse axis toward x.
    pub in_plane_mx: f64,
    /// In-plane tilt of the X pulse axis toward y.
    pub in_plane_ny: f64,
}

impl Default for PulseErrorParams {
    fn default() -> Self {
        PulseErrorParams {
            epsilon0: 0.3,
            n0: -0.12,
            in_plane_mx: 0.0,
            in_plane_ny: 0.0,
        }
    }
}

impl PulseErrorParams {
    pub fn perfect() -> Self {
        PulseErrorParams {
            epsilon0: 0.0,
            n0: 0.0,
            in_plane_mx: 0.0,
            in_plane_ny: 0.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PulseErrorParams {
            epsilon0: self.epsilon0 * factor,
            n0: self.n0 * factor,
            in_plane_mx: self.in_plane_mx * factor,
            in_plane_ny: self.in_plane_ny * factor,
        }
    }

    /// Checks that every sample drawable from these params has a real axis.
    /// The tilt `n_z` reaches `-2 n0` at the support edge.
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("epsilon0", self.epsilon0),
            ("n0", self.n0),
            ("in_plane_mx", self.in_plane_mx),
            ("in_plane_ny", self.in_plane_ny),
        ] {
            if !v.is_finite() {
                return Err(DdError::config(key, "must be finite"));
            }
        }
        let edge = 4.0 * self.n0 * self.n0;
        for lateral in [self.in_plane_ny, self.in_plane_mx] {
            let sum = edge + lateral * lateral;
            if sum >= 1.0 {
                return Err(DdError::AxisTiltTooLarge(sum));
            }
        }
        Ok(())
    }
}

/// How the angle error and the z tilt of one ensemble member are related.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// `eps_x` and `n_z` drawn independently.
    #[default]
    Independent,
    /// Both tied to one spatial coordinate.
    CorrelatedSpatial,
}

/// One realization of all systematic error parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseErrorSample {
    pub eps_x: f64,
    pub eps_y: f64,
    pub n_z: f64,
    pub m_z: f64,
    pub n_y: f64,
    pub m_x: f64,
}

impl PulseErrorSample {
    pub fn perfect() -> Self {
        Self::default()
    }

    /// Sample under the correlated model: `eps_y = eps_x`, `m_z = n_z`.
    pub fn symmetric(eps: f64, n_z: f64) -> Self {
        PulseErrorSample {
            eps_x: eps,
            eps_y: eps,
            n_z,
            m_z: n_z,
            n_y: 0.0,
            m_x: 0.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PulseErrorSample {
            eps_x: self.eps_x * factor,
            eps_y: self.eps_y * factor,
            n_z: self.n_z * factor,
            m_z: self.m_z * factor,
            n_y: self.n_y * factor,
            m_x: self.m_x * factor,
        }
    }

    pub fn x_axis(&self) -> Result<[f64; 3]> {
        let lateral = self.n_y * self.n_y + self.n_z * self.n_z;
        if lateral >= 1.0 {
            return Err(DdError::AxisTiltTooLarge(lateral));
        }
        Ok([(1.0 - lateral).sqrt(), self.n_y, self.n_z])
    }

    pub fn y_axis(&self) -> Result<[f64; 3]> {
        let lateral = self.m_x * self.m_x + self.m_z * self.m_z;
        if lateral >= 1.0 {
            return Err(DdError::AxisTiltTooLarge(lateral));
        }
        Ok([self.m_x, (1.0 - lateral).sqrt(), self.m_z])
    }
}

/// Width of the static offset-field distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Standard deviation of `B`, rad per time unit.
    pub b: f64,
}

impl BathParams {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(DdError::NonPositiveBathWidth(b));
        }
        Ok(BathParams { b })
    }
}

/// Physical pulse axes. The composite pi_Z is built from these two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhysicalPulse {
    X,
    Y,
}

/// Order of the two physical pulses making up a composite pi_Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZOrder {
    /// pi_X first in time, then pi_Y.
    #[default]
    XThenY,
    YThenX,
}

/// The spatial error profile `s (1 - 3 u^2)` for `u = |l| / d`.
#[inline]
pub fn spatial_error(u: f64, scale: f64) -> f64 {
    scale * (1.0 - 3.0 * u * u)
}

/// Inverse CDF of the pulse-error distribution: `scale (1 - 3 (1 - p)^2)`.
///
/// For `scale > 0` this maps `[0, 1]` monotonically onto `[-2 scale, scale]`.
pub fn error_inverse_cdf(p: f64, scale: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DdError::ProbabilityOutOfRange(p));
    }
    Ok(spatial_error(1.0 - p, scale))
}

/// The `p` for which [`error_inverse_cdf`] returns `value`; for positive
/// scale this is the CDF `1 - sqrt((1 - value/scale) / 3)`.
pub fn error_cdf(value: f64, scale: f64) -> Result<f64> {
    if scale == 0.0 {
        return Err(DdError::config("scale", "must be non-zero"));
    }
    let r = value / scale;
    if !(-2.0..=1.0).contains(&r) {
        return Err(DdError::config(
            "value",
            format!("{value} lies outside the support for scale {scale}"),
        ));
    }
    Ok(1.0 - ((1.0 - r) / 3.0).sqrt())
}

/// Quantile at which the error vanishes, for any scale.
pub fn zero_error_quantile() -> f64 {
    1.0 - 1.0 / 3.0_f64.sqrt()
}

/// Draws one ensemble member from two quantiles (uniform variates or
/// quadrature coordinates). `eps_y` copies `eps_x` and `m_z` copies `n_z`.
pub fn draw_error_sample(params: &PulseErrorParams, p_eps: f64, p_nz: f64) -> Result<PulseErrorSample> {
    let eps = error_inverse_cdf(p_eps, params.epsilon0)?;
    let n_z = error_inverse_cdf(p_nz, params.n0)?;
    Ok(PulseErrorSample {
        eps_x: eps,
        eps_y: eps,
        n_z,
        m_z: n_z,
        n_y: params.in_plane_ny,
        m_x: params.in_plane_mx,
    })
}

/// Imperfect nominal pi pulse.
pub fn pulse_unitary(nominal: PhysicalPulse, sample: &PulseErrorSample) -> Result<Unitary2> {
    let (axis, eps) = match nominal {
        PhysicalPulse::X => (sample.x_axis()?, sample.eps_x),
        PhysicalPulse::Y => (sample.y_axis()?, sample.eps_y),
    };
    if !eps.is_finite() {
        return Err(DdError::NonFiniteAngle);
    }
    Ok(rotation_unchecked(axis, PI + eps))
}

/// pi_Z realized as back-to-back pi_X and pi_Y pulses with no delay.
pub fn composite_pi_z(
    sample_x: &PulseErrorSample,
    sample_y: &PulseErrorSample,
    order: ZOrder,
) -> Result<Unitary2> {
    let x = pulse_unitary(PhysicalPulse::X, sample_x)?;
    let y = pulse_unitary(PhysicalPulse::Y, sample_y)?;
    Ok(match order {
        ZOrder::XThenY => y * x,
        ZOrder::YThenX => x * y,
    })
}

/// `exp(-i B S^z tau) = diag(e^{-i B tau / 2}, e^{i B tau / 2})`.
pub fn free_evolution(field: f64, tau: f64) -> Result<Unitary2> {
    if tau < 0.0 {
        return Err(DdError::NegativeDuration(tau));
    }
    let half = Complex64::from_polar(1.0, -0.5 * field * tau);
    Ok(Unitary2::diagonal(half, half.conj()))
}

/// Bath field for a standard-normal variate or Gauss-Hermite node `z`.
pub fn draw_bath_field(bath: &BathParams, z: f64) -> f64 {
    bath.b * z
}

/// The three pulse unitaries of one ensemble member, computed once and reused
/// for every pulse in a sequence.
#[derive(Debug, Clone, Copy)]
pub struct PulseSet {
    pub x: Unitary2,
    pub y: Unitary2,
    pub z: Unitary2,
}

impl PulseSet {
    pub fn new(sample: &PulseErrorSample, order: ZOrder) -> Result<Self> {
        Ok(PulseSet {
            x: pulse_unitary(PhysicalPulse::X, sample)?,
            y: pulse_unitary(PhysicalPulse::Y, sample)?,
            z: composite_pi_z(sample, sample, order)?,
        })
    }
}
