//! Closed-form perturbative evolution operators and saturation values.
//!
//! These are independent of the simulator and serve as cross-checks of it.
//! Operators are given as Pauli coefficients `(c0, cx, cy, cz)` of
//! `c0 1 + cx σx + cy σy + cz σz`, truncated at the stated order in the pulse
//! errors, so the reconstructed matrix is unitary only to that order.

use num_complex::Complex64;

use crate::error::{DdError, Result};
use crate::sequence::udd_times;
use crate::spin::Unitary2;

/// Second moment of the pulse-error distribution, as a multiple of scale^2.
pub const SECOND_MOMENT_FACTOR: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeOperator {
    pub c0: Complex64,
    pub cx: Complex64,
    pub cy: Complex64,
    pub cz: Complex64,
    /// Highest order in the pulse errors kept.
    pub order: u32,
    pub note: &'static str,
}

impl PerturbativeOperator {
    fn new(coeffs: [Complex64; 4], order: u32, note: &'static str) -> Self {
        let [c0, cx, cy, cz] = coeffs;
        PerturbativeOperator {
            c0,
            cx,
            cy,
            cz,
            order,
            note,
        }
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.c0, self.cx, self.cy, self.cz]
    }

    pub fn to_matrix(&self) -> Unitary2 {
        Unitary2::from_pauli(self.c0, self.cx, self.cy, self.cz)
    }

    /// Unit rotation axis read off the first-order σ coefficients.
    pub fn rotation_axis(&self) -> Option<[f64; 3]> {
        let v = [self.cx.im, self.cy.im, self.cz.im];
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        (norm > 0.0).then(|| v.map(|c| -c * self.c0.re.signum() / norm))
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn im(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

fn parity(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn error_second_moment(scale: f64) -> f64 {
    SECOND_MOMENT_FACTOR * scale * scale
}

/// `(θx, θz)` of the UDD-2 operator.
pub fn udd2_angles(field: f64, t: f64, eps: f64, nz: f64) -> (f64, f64) {
    let (s4, c4) = (field * t / 4.0).sin_cos();
    let (s2, c2) = (field * t / 2.0).sin_cos();
    let theta_x = eps * c4 + 2.0 * nz * s4;
    let theta_z = eps * nz * c2 + (nz * nz - eps * eps / 4.0) * s2;
    (theta_x, theta_z)
}

/// UDD-2 to second order in the errors (`n_y = 0`):
/// `-[1 - θx^2/2 - i θx σx - i θz σz]`.
pub fn udd2_operator(field: f64, t: f64, eps: f64, nz: f64) -> PerturbativeOperator {
    let (tx, tz) = udd2_angles(field, t, eps, nz);
    PerturbativeOperator::new(
        [re(-(1.0 - tx * tx / 2.0)), im(tx), re(0.0), im(tz)],
        2,
        "UDD-2, second order, n_y = 0",
    )
}

/// `F_y = 1 - 2 [<eps^2> <cos^2(Bt/4)> + 4 <n_z^2> <sin^2(Bt/4)>]`.
pub fn udd2_fy_from_averages(eps2: f64, nz2: f64, cos2: f64, sin2: f64) -> f64 {
    1.0 - 2.0 * (eps2 * cos2 + 4.0 * nz2 * sin2)
}

/// Gaussian bath average of [`udd2_fy_from_averages`]:
/// `<cos^2(Bt/4)> = (1 + exp(-b^2 t^2 / 8)) / 2`.
pub fn udd2_fy_curve(b: f64, t: f64, eps0: f64, n0: f64) -> f64 {
    let decay = (-b * b * t * t / 8.0).exp();
    udd2_fy_from_averages(
        error_second_moment(eps0),
        error_second_moment(n0),
        0.5 * (1.0 + decay),
        0.5 * (1.0 - decay),
    )
}

/// Long-time UDD-2 `F_y`: `1 - 0.8 (eps0^2 + 4 n0^2)`.
pub fn udd2_fy_saturation(eps0: f64, n0: f64) -> f64 {
    1.0 - SECOND_MOMENT_FACTOR * (eps0 * eps0 + 4.0 * n0 * n0)
}

/// `(θn, ηn)` of the UDD-3 operator for the first two inter-pulse delays.
pub fn udd3_angles(field: f64, tau1: f64, tau2: f64, eps: f64, nz: f64) -> (f64, f64) {
    let (s1, c1) = (field * tau1).sin_cos();
    let (sd, cd) = (field * (tau2 - tau1)).sin_cos();
    let theta = 0.5 * eps * (1.0 + 2.0 * c1 + cd) + nz * (2.0 * s1 + sd);
    let eta = -nz * (1.0 - 2.0 * c1 + cd) - 0.5 * eps * (2.0 * s1 - sd);
    (theta, eta)
}

/// UDD-3 to first order in the errors: `1 - i θn σx - i ηn σy`.
pub fn udd3_operator(field: f64, tau1: f64, tau2: f64, eps: f64, nz: f64) -> PerturbativeOperator {
    let (theta, eta) = udd3_angles(field, tau1, tau2, eps, nz);
    PerturbativeOperator::new([re(1.0), im(-theta), im(-eta), re(0.0)], 1, "UDD-3, first order")
}

/// [`udd3_operator`] with the delays of a UDD-3 sequence of total time `t`.
pub fn udd3_operator_for_time(field: f64, t: f64, eps: f64, nz: f64) -> PerturbativeOperator {
    let times = udd_times(3, t).expect("level 3 is valid");
    udd3_operator(field, times[0], times[1] - times[0], eps, nz)
}

/// UDD-3 `F_y = 1 - 2 <θn^2>` once sine averages vanish, given the averages
/// `<cos^2(B τ1)>` and `<cos^2(B (τ2 - τ1))>`.
pub fn udd3_fy_long_time(eps2: f64, nz2: f64, cos2_tau1: f64, cos2_diff: f64) -> f64 {
    1.0 - 2.0 * (5.0 * nz2 + eps2 / 4.0 + (eps2 / 4.0 - nz2) * (4.0 * cos2_tau1 + cos2_diff))
}

/// Long-time UDD-3 `F_y`: `1 - 5 <n_z^2> - 7 <eps^2> / 4`.
pub fn udd3_fy_saturation(eps0: f64, n0: f64) -> f64 {
    1.0 - 5.0 * error_second_moment(n0) - 1.75 * error_second_moment(eps0)
}

/// UDD-ℓ with all delays zero: `(-1)^n (1 - i n eps σx)`, `n = ceil(ℓ / 2)`.
pub fn udd_t0_operator(level: u32, eps: f64) -> Result<PerturbativeOperator> {
    if level == 0 {
        return Err(DdError::ZeroLevel);
    }
    let n = level.div_ceil(2);
    let sign = parity(n);
    Ok(PerturbativeOperator::new(
        [re(sign), im(-sign * n as f64 * eps), re(0.0), re(0.0)],
        1,
        "UDD, zero delays, first order",
    ))
}

/// QDD(XY)-ℓ with all delays zero, first order:
/// `1 - i n (eps_x σx + eps_y σy)` for ℓ = 2n and `(-1)^n (1 - i n eps_x σx)`
/// for ℓ = 2n - 1.
pub fn qdd_t0_operator(level: u32, eps_x: f64, eps_y: f64) -> Result<PerturbativeOperator> {
    if level == 0 {
        return Err(DdError::ZeroLevel);
    }
    let n = level.div_ceil(2);
    let nf = n as f64;
    Ok(if level.is_multiple_of(2) {
        PerturbativeOperator::new(
            [re(1.0), im(-nf * eps_x), im(-nf * eps_y), re(0.0)],
            1,
            "QDD even level, zero delays, first order",
        )
    } else {
        let sign = parity(n);
        PerturbativeOperator::new(
            [re(sign), im(-sign * nf * eps_x), re(0.0), re(0.0)],
            1,
            "QDD odd level, zero delays, first order",
        )
    })
}

/// QDD(XY)-3 with all delays zero, second order (`m_x = n_y = 0`):
/// `(1 - 2 eps_x^2) - 2i eps_x σx - 2i eps_x (2 eps_y + n_z) σz`.
///
/// The sign of the σz term is for the sequence as built, four repetitions of
/// four pi_Y followed by one pi_X. Conjugating by pi_X (the same unit started
/// with the pi_X) flips it.
pub fn qdd3_t0_second_order(eps_x: f64, eps_y: f64, nz: f64) -> PerturbativeOperator {
    PerturbativeOperator::new(
        [
            re(1.0 - 2.0 * eps_x * eps_x),
            im(-2.0 * eps_x),
            re(0.0),
            im(-2.0 * eps_x * (2.0 * eps_y + nz)),
        ],
        2,
        "QDD-3, zero delays, second order, m_x = n_y = 0",
    )
}

/// QDD(ZY) of odd level ℓ = 2n - 1 with all delays zero, first order:
/// `(-1)^n [1 + 2i n (m_x + n_y) σz]`. Angle errors and z tilts cancel at
/// this order.
pub fn qddzy_odd_t0_operator(level: u32, mx: f64, ny: f64) -> Result<PerturbativeOperator> {
    if level == 0 {
        return Err(DdError::ZeroLevel);
    }
    if level.is_multiple_of(2) {
        return Err(DdError::EvenLevel("QDD(ZY) zero-delay operator", level));
    }
    let n = level.div_ceil(2);
    let sign = parity(n);
    Ok(PerturbativeOperator::new(
        [re(sign), re(0.0), re(0.0), im(sign * 2.0 * n as f64 * (mx + ny))],
        1,
        "QDD(ZY) odd level, zero delays, first order",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn udd2_examples() {
        let op = udd2_operator(0.7, 1.3, 0.0, 0.0);
        assert_eq!(op.coefficients(), [re(-1.0), im(0.0), re(0.0), im(0.0)]);
        let (tx, tz) = udd2_angles(0.0, 5.0, 0.01, 0.0);
        assert_abs_diff_eq!(tx, 0.01, epsilon = 1e-16);
        assert_abs_diff_eq!(tz, 0.0, epsilon = 1e-16);
        let (tx, _) = udd2_angles(2.0 * PI, 1.0, 0.01, 0.004);
        assert_abs_diff_eq!(tx, 0.008, epsilon = 1e-15);
    }

    #[test]
    fn udd2_theta_z_at_zero_field() {
        // Bt = 0 kills the sine term and cos(0) = 1, so θz = eps n_z
        let (_, tz) = udd2_angles(0.0, 1.0, 0.01, 0.0);
        assert_eq!(tz, 0.0);
        // at Bt = π the cosine term vanishes and θz = n_z^2 - eps^2/4
        let (_, tz) = udd2_angles(PI, 1.0, 0.01, 0.0);
        assert_abs_diff_eq!(tz, -2.5e-5, epsilon = 1e-18);
    }

    #[test]
    fn saturation_values() {
        assert_abs_diff_eq!(udd2_fy_saturation(0.3, -0.12), 0.88192, epsilon = 1e-12);
        assert_eq!(udd2_fy_saturation(0.0, 0.0), 1.0);
        assert_abs_diff_eq!(udd2_fy_saturation(0.1, 0.0), 0.992, epsilon = 1e-12);
        assert_abs_diff_eq!(udd3_fy_saturation(0.3, -0.12), 0.8164, epsilon = 1e-12);
        assert_eq!(udd3_fy_saturation(0.0, 0.0), 1.0);
        assert_abs_diff_eq!(udd3_fy_saturation(0.2, 0.0), 0.944, epsilon = 1e-12);
    }

    #[test]
    fn second_moment_examples() {
        assert_abs_diff_eq!(error_second_moment(0.3), 0.072, epsilon = 1e-15);
        assert_eq!(error_second_moment(0.0), 0.0);
        assert_abs_diff_eq!(error_second_moment(-0.12), 0.01152, epsilon = 1e-15);
    }

    #[test]
    fn udd3_examples() {
        let op = udd3_operator(0.4, 1.0, 2.0, 0.0, 0.0);
        assert_eq!(op.coefficients(), [re(1.0), im(0.0), im(0.0), re(0.0)]);
        let (theta, eta) = udd3_angles(0.0, 1.0, 2.0, 0.01, 0.004);
        assert_abs_diff_eq!(theta, 0.02, epsilon = 1e-16);
        assert_abs_diff_eq!(eta, 0.0, epsilon = 1e-16);
        // Bτ1 = π/2 and B(τ2 - τ1) = π/2
        let (theta, eta) = udd3_angles(1.0, PI / 2.0, PI, 0.01, 0.0);
        assert_abs_diff_eq!(theta, 0.005, epsilon = 1e-16);
        assert_abs_diff_eq!(eta, -0.005, epsilon = 1e-16);
    }

    #[test]
    fn t0_operators() {
        let u2 = udd_t0_operator(2, 0.01).unwrap();
        assert_eq!(u2.c0, re(-1.0));
        assert_abs_diff_eq!(u2.cx.im, 0.01, epsilon = 1e-16);
        let u20 = udd_t0_operator(20, 0.01).unwrap();
        assert_eq!(u20.c0, re(1.0));
        assert_abs_diff_eq!(u20.cx.im, -0.1, epsilon = 1e-15);
        assert_eq!(udd_t0_operator(5, 0.0).unwrap().cx, im(-0.0));

        let q4 = qdd_t0_operator(4, 0.01, 0.01).unwrap();
        assert_eq!(q4.c0, re(1.0));
        assert_abs_diff_eq!(q4.cx.im, -0.02, epsilon = 1e-16);
        assert_abs_diff_eq!(q4.cy.im, -0.02, epsilon = 1e-16);
        let q3 = qdd_t0_operator(3, 0.01, 0.5).unwrap();
        assert_eq!(q3.c0, re(1.0));
        assert_abs_diff_eq!(q3.cx.im, -0.02, epsilon = 1e-16);
        assert_eq!(q3.cy, re(0.0));
        let zero = qdd_t0_operator(3, 0.0, 0.0).unwrap();
        assert_eq!(zero.cx.norm(), 0.0);
    }

    #[test]
    fn qdd_even_axis_is_diagonal_in_xy_plane() {
        let axis = qdd_t0_operator(4, 0.01, 0.01).unwrap().rotation_axis().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(axis[0], h, epsilon = 1e-15);
        assert_abs_diff_eq!(axis[1], h, epsilon = 1e-15);
        assert_abs_diff_eq!(axis[2], 0.0);
    }

    #[test]
    fn qdd3_second_order_examples() {
        let zero = qdd3_t0_second_order(0.0, 0.3, 0.1);
        assert_eq!(zero.c0, re(1.0));
        assert_eq!(zero.cx.norm() + zero.cz.norm(), 0.0);
        let a = qdd3_t0_second_order(0.01, 0.01, 0.0);
        assert_abs_diff_eq!(a.cz.im.abs(), 4e-4, epsilon = 1e-18);
        let b = qdd3_t0_second_order(0.01, 0.0, 0.004);
        assert_abs_diff_eq!(b.cz.im.abs(), 8e-5, epsilon = 1e-18);
    }

    #[test]
    fn zy_odd_examples() {
        let a = qddzy_odd_t0_operator(3, 0.0, 0.0).unwrap();
        assert_eq!(a.coefficients(), [re(1.0), re(0.0), re(0.0), im(0.0)]);
        let b = qddzy_odd_t0_operator(3, 0.01, 0.0).unwrap();
        assert_abs_diff_eq!(b.cz.im, 0.04, epsilon = 1e-16);
        let c = qddzy_odd_t0_operator(5, 0.0, 0.01).unwrap();
        assert_eq!(c.c0, re(-1.0));
        assert_abs_diff_eq!(c.cz.im, -0.06, epsilon = 1e-16);
        assert!(matches!(qddzy_odd_t0_operator(4, 0.0, 0.0), Err(DdError::EvenLevel(_, 4))));
    }

    #[test]
    fn stationary_averages_reproduce_saturation_formulas() {
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let eps0 = 0.5 * next();
            let n0 = 0.4 * next() - 0.2;
            let (e2, n2) = (error_second_moment(eps0), error_second_moment(n0));
            assert_abs_diff_eq!(
                udd2_fy_from_averages(e2, n2, 0.5, 0.5),
                udd2_fy_saturation(eps0, n0),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(udd3_fy_long_time(e2, n2, 0.5, 0.5), udd3_fy_saturation(eps0, n0), epsilon = 1e-14);
            assert_abs_diff_eq!(udd2_fy_curve(1.0, 1e3, eps0, n0), udd2_fy_saturation(eps0, n0), epsilon = 1e-14);
        }
    }
}
