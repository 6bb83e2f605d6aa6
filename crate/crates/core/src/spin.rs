//! Exact SU(2) arithmetic for a single spin-1/2.
//!
//! Operators are explicit 2x2 complex matrices. Time ordering is fixed across
//! the crate: the operator that acts first in time is the rightmost factor of
//! a product, so `compose(&[a, b, c])` returns `c * b * a`.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};

pub type Matrix2 = [[Complex64; 2]; 2];

const AXIS_TOLERANCE: f64 = 1e-9;
const STATE_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Cartesian spin axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }

    /// Pauli matrix for this axis.
    pub fn pauli(self) -> Matrix2 {
        match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -I], [I, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

/// A 2x2 unitary: the evolution operator of one spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: Matrix2,
}

impl Unitary2 {
    pub const IDENTITY: Unitary2 = Unitary2 {
        m: [[ONE, ZERO], [ZERO, ONE]],
    };

    /// Wraps raw entries without checking unitarity.
    pub fn from_matrix(m: Matrix2) -> Self {
        Unitary2 { m }
    }

    /// `c0 * 1 + cx * σx + cy * σy + cz * σz`.
    pub fn from_pauli(c0: Complex64, cx: Complex64, cy: Complex64, cz: Complex64) -> Self {
        Unitary2 {
            m: [[c0 + cz, cx - I * cy], [cx + I * cy, c0 - cz]],
        }
    }

    /// Diagonal operator `diag(a, b)`.
    pub fn diagonal(a: Complex64, b: Complex64) -> Self {
        Unitary2 {
            m: [[a, ZERO], [ZERO, b]],
        }
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    /// Coefficients `(c0, cx, cy, cz)` of the expansion in `(1, σx, σy, σz)`.
    pub fn pauli_coefficients(&self) -> [Complex64; 4] {
        let [[a, b], [c, d]] = self.m;
        [
            (a + d) * 0.5,
            (b + c) * 0.5,
            (c - b) * (-0.5 * I),
            (a - d) * 0.5,
        ]
    }

    pub fn dagger(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Unitary2 {
            m: [[a.conj(), c.conj()], [b.conj(), d.conj()]],
        }
    }

    pub fn det(&self) -> Complex64 {
        let [[a, b], [c, d]] = self.m;
        a * d - b * c
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let [[a, b], [c, d]] = self.m;
        Unitary2 {
            m: [[a * factor, b * factor], [c * factor, d * factor]],
        }
    }

    /// Largest elementwise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.dagger() * *self;
        max_abs_diff(&p.m, &Self::IDENTITY.m)
    }

    /// Left-multiplies by `diag(a, b)`; used for free evolution.
    #[inline]
    pub(crate) fn premul_diagonal(&self, a: Complex64, b: Complex64) -> Self {
        let [[m00, m01], [m10, m11]] = self.m;
        Unitary2 {
            m: [[a * m00, a * m01], [b * m10, b * m11]],
        }
    }

    /// Bloch-sphere rotation matrix `R[i][j] = Tr(σi U σj U†) / 2`.
    pub fn bloch_rotation(&self) -> [[f64; 3]; 3] {
        let ud = self.dagger();
        let mut r = [[0.0; 3]; 3];
        for i in Axis::ALL {
            for j in Axis::ALL {
                let rotated = Unitary2::from_matrix(i.pauli()) * (*self * Unitary2::from_matrix(j.pauli()) * ud);
                r[i.index()][j.index()] = 0.5 * (rotated.m[0][0] + rotated.m[1][1]).re;
            }
        }
        r
    }

    /// Diagonal of [`Unitary2::bloch_rotation`]: the fidelities `F_x, F_y, F_z`
    /// for initial states along each axis.
    #[inline]
    pub fn axis_fidelities(&self) -> [f64; 3] {
        let [[a, b], [c, d]] = self.m;
        let ad = (a * d.conj()).re;
        let bc = (b * c.conj()).re;
        let zz = 0.5 * (a.norm_sqr() - b.norm_sqr() - c.norm_sqr() + d.norm_sqr());
        [ad + bc, ad - bc, zz]
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    #[inline]
    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let [[a, b], [c, d]] = self.m;
        let [[e, f], [g, h]] = rhs.m;
        Unitary2 {
            m: [[a * e + b * g, a * f + b * h], [c * e + d * g, c * f + d * h]],
        }
    }
}

/// `exp(-i angle (S·n))` with `S = σ/2`.
pub fn rotation(axis: [f64; 3], angle: f64) -> Result<Unitary2> {
    let norm = axis.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > AXIS_TOLERANCE {
        return Err(DdError::NonUnitAxis { norm });
    }
    if !angle.is_finite() {
        return Err(DdError::NonFiniteAngle);
    }
    Ok(rotation_unchecked(axis, angle))
}

#[inline]
pub(crate) fn rotation_unchecked(axis: [f64; 3], angle: f64) -> Unitary2 {
    let (s, c) = (0.5 * angle).sin_cos();
    let [nx, ny, nz] = axis;
    Unitary2::from_pauli(
        Complex64::new(c, 0.0),
        Complex64::new(0.0, -s * nx),
        Complex64::new(0.0, -s * ny),
        Complex64::new(0.0, -s * nz),
    )
}

/// Time-ordered product: `ops[0]` acts first.
pub fn compose(ops: &[Unitary2]) -> Result<Unitary2> {
    let (first, rest) = ops.split_first().ok_or(DdError::EmptyComposition)?;
    Ok(rest.iter().fold(*first, |acc, op| *op * acc))
}

/// Spin direction of a pseudo-pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    s: [f64; 3],
}

impl BlochState {
    pub fn new(s: [f64; 3]) -> Result<Self> {
        let norm = s.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOLERANCE {
            return Err(DdError::NonUnitAxis { norm });
        }
        Ok(BlochState { s })
    }

    pub fn along(axis: Axis) -> Self {
        BlochState { s: axis.unit() }
    }

    pub fn vector(&self) -> [f64; 3] {
        self.s
    }

    /// Bloch vector after `evolution`.
    pub fn evolve(&self, evolution: &Unitary2) -> [f64; 3] {
        let r = evolution.bloch_rotation();
        let mut out = [0.0; 3];
        for (i, row) in r.iter().enumerate() {
            out[i] = row.iter().zip(self.s).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// `Tr[U ρ U† σ_axis]` for `ρ = (1 + s·σ)/2`, i.e. twice the spin projection.
pub fn expectation(state: &BlochState, evolution: &Unitary2, axis: Axis) -> f64 {
    state.evolve(evolution)[axis.index()]
}

pub fn max_abs_diff(a: &Matrix2, b: &Matrix2) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((a[r][c] - b[r][c]).norm());
        }
    }
    worst
}

/// `max |a - e^{iφ} b|` with `φ` chosen to align the phase of the
/// largest-magnitude entry of `a` with the same entry of `b`.
pub fn phase_aligned_distance(a: &Matrix2, b: &Matrix2) -> f64 {
    let mut pivot = (0, 0);
    let mut largest = -1.0;
    for r in 0..2 {
        for c in 0..2 {
            let n = a[r][c].norm();
            if n > largest {
                largest = n;
                pivot = (r, c);
            }
        }
    }
    let (r, c) = pivot;
    let bp = b[r][c];
    if bp.norm() == 0.0 {
        return max_abs_diff(a, b);
    }
    let phase = Complex64::from_polar(1.0, a[r][c].arg() - bp.arg());
    let mut aligned = *b;
    for row in aligned.iter_mut() {
        for e in row.iter_mut() {
            *e *= phase;
        }
    }
    max_abs_diff(a, &aligned)
}

/// Equality up to a global phase within `tol`.
pub fn equal_up_to_phase(a: &Unitary2, b: &Unitary2, tol: f64) -> bool {
    phase_aligned_distance(a.matrix(), b.matrix()) <= tol
}
