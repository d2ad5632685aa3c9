//! Closed-form 2x2 complex Hermitian linear algebra.
//!
//! Everything here is exact-by-construction: Hermiticity is structural
//! (the lower off-diagonal entry is stored implicitly as a conjugate),
//! eigensystems come from the quadratic formula, and all operations
//! return new immutable values.
//!
//! Classification queries (`is_psd`, `is_density`, `is_povm_element`)
//! use the tolerance [`TAU_PSD`]; algebraic identities are checked
//! against [`TAU_NUM`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for positivity and completeness classification.
pub const TAU_PSD: f64 = 1e-9;

/// Tolerance for algebraic identities.
pub const TAU_NUM: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmathError {
    #[error("operator is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("effect operator does not satisfy 0 <= E <= I")]
    InvalidEffect,
    #[error("state is not a density operator")]
    InvalidState,
    #[error("effects do not sum to the identity")]
    IncompletePovm,
}

/// A real 3-vector in the Pauli parametrization `m = a0*I + v . sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// A 2x2 complex Hermitian operator.
///
/// Stores the real diagonal and the upper off-diagonal entry; the lower
/// entry is implied as its conjugate, so Hermiticity cannot be violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianOp2 {
    a00: f64,
    a11: f64,
    a01: Complex64,
}

impl HermitianOp2 {
    /// Builds the operator `[[a00, a01], [conj(a01), a11]]`.
    ///
    /// Panics if any component is non-finite; NaN and infinity are never
    /// admitted into the algebra.
    pub fn new(a00: f64, a11: f64, a01: Complex64) -> Self {
        assert!(
            a00.is_finite() && a11.is_finite() && a01.re.is_finite() && a01.im.is_finite(),
            "operator entries must be finite"
        );
        Self { a00, a11, a01 }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, Complex64::ZERO)
    }

    pub fn identity() -> Self {
        Self::new(1.0, 1.0, Complex64::ZERO)
    }

    /// Rank-1 projector `|psi><psi|` for unit amplitudes `(c0, c1)`.
    pub fn projector(c0: Complex64, c1: Complex64) -> Self {
        Self::new(c0.norm_sqr(), c1.norm_sqr(), c0 * c1.conj())
    }

    pub fn a00(&self) -> f64 {
        self.a00
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }

    pub fn a01(&self) -> Complex64 {
        self.a01
    }

    pub fn trace(&self) -> f64 {
        self.a00 + self.a11
    }

    /// `Tr[self * other]`, real by Hermiticity of both factors.
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.a00 * other.a00 + self.a11 * other.a11 + 2.0 * (self.a01 * other.a01.conj()).re
    }

    /// `(a0, v)` with `self = a0*I + v . sigma`.
    pub fn to_bloch(&self) -> (f64, BlochVector) {
        let a0 = 0.5 * (self.a00 + self.a11);
        let v = BlochVector::new(self.a01.re, -self.a01.im, 0.5 * (self.a00 - self.a11));
        (a0, v)
    }

    pub fn from_bloch(a0: f64, v: BlochVector) -> Self {
        Self::new(a0 + v.z, a0 - v.z, Complex64::new(v.x, -v.y))
    }

    /// Eigenvalues `(lo, hi)` in closed form.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mid = 0.5 * (self.a00 + self.a11);
        let half_gap = 0.5 * (self.a00 - self.a11);
        let radius = (half_gap * half_gap + self.a01.norm_sqr()).sqrt();
        (mid - radius, mid + radius)
    }

    pub fn is_psd(&self) -> bool {
        self.eigenvalues().0 >= -TAU_PSD
    }

    pub fn is_density(&self) -> bool {
        self.is_psd() && (self.trace() - 1.0).abs() <= TAU_PSD
    }

    pub fn is_povm_element(&self) -> bool {
        self.is_psd() && (Self::identity() - *self).is_psd()
    }

    /// Principal square root via spectral decomposition.
    ///
    /// Eigenvalues in `[-TAU_PSD, 0)` are clamped to 0 (optimizer iterates
    /// sit on the PSD boundary); anything lower is an error.
    pub fn principal_sqrt(&self) -> Result<Self, QmathError> {
        let eig = eig_hermitian2(self);
        let (lo, hi) = (eig.values[0], eig.values[1]);
        if lo < -TAU_PSD {
            return Err(QmathError::NotPsd { min_eig: lo });
        }
        let s_lo = lo.max(0.0).sqrt();
        let s_hi = hi.max(0.0).sqrt();
        let p_lo = Self::projector(eig.vectors[0][0], eig.vectors[0][1]);
        let p_hi = Self::projector(eig.vectors[1][0], eig.vectors[1][1]);
        Ok(p_lo * s_lo + p_hi * s_hi)
    }

    fn to_matrix(self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.a00, 0.0), self.a01],
            [self.a01.conj(), Complex64::new(self.a11, 0.0)],
        ]
    }

    /// Hermitian part of a full matrix; the skew part is numerical noise
    /// when the product is Hermitian by construction.
    fn from_matrix_hermitian(m: [[Complex64; 2]; 2]) -> Self {
        Self::new(m[0][0].re, m[1][1].re, 0.5 * (m[0][1] + m[1][0].conj()))
    }

    /// `self * rho * self` for Hermitian `self` (adjoint conjugation).
    pub fn conjugate(&self, rho: &Self) -> Self {
        let a = self.to_matrix();
        let r = rho.to_matrix();
        let ar = mat_mul(&a, &r);
        let ara = mat_mul(&ar, &a);
        Self::from_matrix_hermitian(ara)
    }
}

impl std::ops::Add for HermitianOp2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.a00 + rhs.a00, self.a11 + rhs.a11, self.a01 + rhs.a01)
    }
}

impl std::ops::Sub for HermitianOp2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.a00 - rhs.a00, self.a11 - rhs.a11, self.a01 - rhs.a01)
    }
}

impl std::ops::Mul<f64> for HermitianOp2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.a00 * s, self.a11 * s, self.a01 * s)
    }
}

fn mat_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Spectral decomposition of a 2x2 Hermitian operator.
///
/// `values[0] <= values[1]`; `vectors[i]` is the unit eigenvector for
/// `values[i]` with its first nonzero component made real nonnegative.
#[derive(Debug, Clone, Copy)]
pub struct Eigen2 {
    pub values: [f64; 2],
    pub vectors: [[Complex64; 2]; 2],
}

/// Closed-form eigensystem of `m`.
pub fn eig_hermitian2(m: &HermitianOp2) -> Eigen2 {
    let (lo, hi) = m.eigenvalues();
    let off = m.a01;
    // Near-diagonal (or degenerate) case: computational basis works.
    if off.norm_sqr() < f64::MIN_POSITIVE {
        let (v_lo, v_hi) = if m.a00 <= m.a11 {
            ([Complex64::ONE, Complex64::ZERO], [Complex64::ZERO, Complex64::ONE])
        } else {
            ([Complex64::ZERO, Complex64::ONE], [Complex64::ONE, Complex64::ZERO])
        };
        return Eigen2 {
            values: [lo, hi],
            vectors: [v_lo, v_hi],
        };
    }
    // For eigenvalue L, (a01, L - a00) and (L - a11, conj(a01)) are both
    // eigenvectors; pick the better conditioned one for the top eigenvalue.
    let cand_a = [off, Complex64::new(hi - m.a00, 0.0)];
    let cand_b = [Complex64::new(hi - m.a11, 0.0), off.conj()];
    let norm_a = cand_a[0].norm_sqr() + cand_a[1].norm_sqr();
    let norm_b = cand_b[0].norm_sqr() + cand_b[1].norm_sqr();
    let v_hi = normalize_phase(if norm_a >= norm_b { cand_a } else { cand_b });
    // Orthogonal complement of (x, y) is (-conj(y), conj(x)).
    let v_lo = normalize_phase([-v_hi[1].conj(), v_hi[0].conj()]);
    Eigen2 {
        values: [lo, hi],
        vectors: [v_lo, v_hi],
    }
}

/// Normalizes and fixes the global phase so the first nonzero component is
/// real nonnegative.
fn normalize_phase(v: [Complex64; 2]) -> [Complex64; 2] {
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let mut out = [v[0] / norm, v[1] / norm];
    let lead = if out[0].norm() > 1e-14 { out[0] } else { out[1] };
    let phase = lead / lead.norm();
    out[0] /= phase;
    out[1] /= phase;
    out
}

/// `T(rho, sigma) = (|l0| + |l1|) / 2` for the eigenvalues of `rho - sigma`.
///
/// Defined for any Hermitian pair; the inputs need not be normalized.
pub fn trace_distance(rho: &HermitianOp2, sigma: &HermitianOp2) -> f64 {
    let (lo, hi) = (*rho - *sigma).eigenvalues();
    0.5 * (lo.abs() + hi.abs())
}

/// `Tr[effect * state]`, clamped to [0, 1].
///
/// Validates that `effect` is a POVM element and `state` a density operator.
pub fn born_prob(effect: &HermitianOp2, state: &HermitianOp2) -> Result<f64, QmathError> {
    if !effect.is_povm_element() {
        return Err(QmathError::InvalidEffect);
    }
    if !state.is_density() {
        return Err(QmathError::InvalidState);
    }
    Ok(effect.trace_product(state).clamp(0.0, 1.0))
}

/// A two-outcome POVM `(E0, E1)` with validated positivity and completeness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitPovm {
    e0: HermitianOp2,
    e1: HermitianOp2,
}

impl QubitPovm {
    pub fn new(e0: HermitianOp2, e1: HermitianOp2) -> Result<Self, QmathError> {
        if !e0.is_povm_element() || !e1.is_povm_element() {
            return Err(QmathError::InvalidEffect);
        }
        let sum = e0 + e1;
        let complete = (sum.a00 - 1.0).abs() <= TAU_PSD
            && (sum.a11 - 1.0).abs() <= TAU_PSD
            && sum.a01.norm() <= TAU_PSD;
        if !complete {
            return Err(QmathError::IncompletePovm);
        }
        Ok(Self { e0, e1 })
    }

    /// The POVM `(E0, I - E0)`.
    pub fn from_effect(e0: HermitianOp2) -> Result<Self, QmathError> {
        Self::new(e0, HermitianOp2::identity() - e0)
    }

    pub fn e0(&self) -> &HermitianOp2 {
        &self.e0
    }

    pub fn e1(&self) -> &HermitianOp2 {
        &self.e1
    }

    pub fn effect(&self, outcome: bool) -> &HermitianOp2 {
        if outcome {
            &self.e1
        } else {
            &self.e0
        }
    }
}

/// The unnormalized post-measurement mixture
/// `sqrt(E0) rho sqrt(E0) + sqrt(E1) rho sqrt(E1)`.
///
/// The square roots are Hermitian so the adjoints coincide, and the outer
/// dilation isometry is omitted: trace distance is invariant under
/// conjugation by isometries, so it never affects any downstream quantity.
pub fn post_measurement_mixture(
    povm: &QubitPovm,
    state: &HermitianOp2,
) -> Result<HermitianOp2, QmathError> {
    debug_assert!(state.is_density(), "state must be a density operator");
    let s0 = povm.e0.principal_sqrt()?;
    let s1 = povm.e1.principal_sqrt()?;
    Ok(s0.conjugate(state) + s1.conjugate(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(a: f64, b: f64) -> HermitianOp2 {
        HermitianOp2::new(a, b, Complex64::ZERO)
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let eig = eig_hermitian2(&HermitianOp2::identity());
        assert_eq!(eig.values, [1.0, 1.0]);

        let eig = eig_hermitian2(&diag(0.0, 1.0));
        assert_eq!(eig.values, [0.0, 1.0]);
        assert_eq!(eig.vectors[0], [Complex64::ONE, Complex64::ZERO]);
        assert_eq!(eig.vectors[1], [Complex64::ZERO, Complex64::ONE]);
    }

    #[test]
    fn eig_rank_one_projector() {
        let t = std::f64::consts::PI / 8.0;
        let proj = HermitianOp2::projector(t.cos().into(), t.sin().into());
        let eig = eig_hermitian2(&proj);
        assert_abs_diff_eq!(eig.values[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-15);
        // Reconstruction: m = l0 P0 + l1 P1.
        let recon = HermitianOp2::projector(eig.vectors[1][0], eig.vectors[1][1]);
        assert_abs_diff_eq!(recon.a00(), proj.a00(), epsilon = 1e-14);
        assert_abs_diff_eq!(recon.a01().re, proj.a01().re, epsilon = 1e-14);
    }

    #[test]
    fn sqrt_diagonal_and_scalar() {
        let s = diag(4.0, 9.0).principal_sqrt().unwrap();
        assert_abs_diff_eq!(s.a00(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.a11(), 3.0, epsilon = 1e-12);

        let s = (HermitianOp2::identity() * 0.5).principal_sqrt().unwrap();
        let expected = 0.5f64.sqrt();
        assert_abs_diff_eq!(s.a00(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(s.a11(), expected, epsilon = 1e-14);

        assert_eq!(
            HermitianOp2::identity().principal_sqrt().unwrap(),
            HermitianOp2::identity()
        );
    }

    #[test]
    fn sqrt_rejects_negative_operators() {
        let err = diag(-0.5, 1.0).principal_sqrt().unwrap_err();
        assert!(matches!(err, QmathError::NotPsd { .. }));
        // Boundary noise is clamped.
        assert!(diag(-0.5e-9, 1.0).principal_sqrt().is_ok());
    }

    #[test]
    fn trace_distance_basics() {
        let zero = diag(1.0, 0.0);
        let one = diag(0.0, 1.0);
        assert_abs_diff_eq!(trace_distance(&zero, &one), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&zero, &zero), 0.0, epsilon = 0.0);
    }

    #[test]
    fn born_prob_validation_and_values() {
        let id = HermitianOp2::identity();
        let mixed = id * 0.5;
        let zero_proj = diag(1.0, 0.0);
        assert_abs_diff_eq!(born_prob(&id, &mixed).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(born_prob(&zero_proj, &mixed).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(
            born_prob(&(id * 1.5), &mixed).unwrap_err(),
            QmathError::InvalidEffect
        );
        assert_eq!(
            born_prob(&zero_proj, &id).unwrap_err(),
            QmathError::InvalidState
        );
    }

    #[test]
    fn bloch_round_trip_and_known_points() {
        let (a0, v) = (HermitianOp2::identity() * 0.5).to_bloch();
        assert_abs_diff_eq!(a0, 0.5, epsilon = 0.0);
        assert_abs_diff_eq!(v.norm(), 0.0, epsilon = 0.0);

        let (a0, v) = diag(1.0, 0.0).to_bloch();
        assert_abs_diff_eq!(a0, 0.5, epsilon = 0.0);
        assert_abs_diff_eq!(v.z, 0.5, epsilon = 0.0);

        let m = HermitianOp2::new(0.3, 0.7, Complex64::new(0.1, -0.2));
        let (a0, v) = m.to_bloch();
        let back = HermitianOp2::from_bloch(a0, v);
        assert_abs_diff_eq!(back.a00(), m.a00(), epsilon = 1e-15);
        assert_abs_diff_eq!(back.a11(), m.a11(), epsilon = 1e-15);
        assert_abs_diff_eq!(back.a01().im, m.a01().im, epsilon = 1e-15);
    }

    #[test]
    fn trivial_measurement_leaves_state_unchanged() {
        let half = HermitianOp2::identity() * 0.5;
        let povm = QubitPovm::new(half, half).unwrap();
        let t = std::f64::consts::PI / 8.0;
        let rho = HermitianOp2::projector(t.cos().into(), t.sin().into());
        let out = post_measurement_mixture(&povm, &rho).unwrap();
        assert_abs_diff_eq!(out.a00(), rho.a00(), epsilon = 1e-14);
        assert_abs_diff_eq!(out.a11(), rho.a11(), epsilon = 1e-14);
        assert_abs_diff_eq!(out.a01().re, rho.a01().re, epsilon = 1e-14);
    }

    #[test]
    fn povm_validation() {
        let z0 = diag(1.0, 0.0);
        let z1 = diag(0.0, 1.0);
        assert!(QubitPovm::new(z0, z1).is_ok());
        assert_eq!(
            QubitPovm::new(z0, z0).unwrap_err(),
            QmathError::IncompletePovm
        );
        assert_eq!(
            QubitPovm::new(z0 * 2.0, z1).unwrap_err(),
            QmathError::InvalidEffect
        );
    }
}
