//! Two-level operators, density matrices and their Liouville-space form.
//!
//! Basis ordering is `{|g⟩, |e⟩}` (index 0 = ground, 1 = excited), so
//! σ⁺ = |e⟩⟨g| has its single nonzero entry at `[1][0]`.
//!
//! Liouville vectors are column-stacked: `vec(ρ) = [ρ₀₀, ρ₁₀, ρ₀₁, ρ₁₁]`,
//! and `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. Every superoperator builder in the
//! crate goes through [`LiouvilleMap::sandwich`] so the convention lives in
//! one place.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2×2 complex matrix in the `{|g⟩, |e⟩}` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator2(pub [[Complex64; 2]; 2]);

impl Operator2 {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self(m)
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self([
            [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
            [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
        ])
    }

    pub const fn zero() -> Self {
        Self([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    /// σ⁺ = |e⟩⟨g|
    pub const fn sigma_plus() -> Self {
        Self([[ZERO, ZERO], [ONE, ZERO]])
    }

    /// σ⁻ = |g⟩⟨e|
    pub const fn sigma_minus() -> Self {
        Self([[ZERO, ONE], [ZERO, ZERO]])
    }

    /// σ⁺σ⁻ = |e⟩⟨e|
    pub const fn excited_projector() -> Self {
        Self([[ZERO, ZERO], [ZERO, ONE]])
    }

    pub const fn ground_projector() -> Self {
        Self([[ONE, ZERO], [ZERO, ZERO]])
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: [Complex64; 2], v: [Complex64; 2]) -> Self {
        Self([
            [u[0] * v[0].conj(), u[0] * v[1].conj()],
            [u[1] * v[0].conj(), u[1] * v[1].conj()],
        ])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0[r][c]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    #[inline]
    pub fn matmul(&self, other: &Self) -> Self {
        let a = &self.0;
        let b = &other.0;
        Self([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other) - other.matmul(self)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }
}

impl Add for Operator2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Operator2 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Operator2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl Neg for Operator2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_real(-1.0)
    }
}

impl Mul for Operator2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.matmul(&o)
    }
}

/// Free-function form of the matrix product.
pub fn matmul(a: &Operator2, b: &Operator2) -> Operator2 {
    a.matmul(b)
}

/// Eigen-decomposition of a Hermitian 2×2 matrix.
#[derive(Clone, Copy, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: [f64; 2],
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: [[Complex64; 2]; 2],
}

impl HermitianEigen {
    pub fn projector(&self, k: usize) -> Operator2 {
        Operator2::outer(self.vectors[k], self.vectors[k])
    }

    /// V Λ V†
    pub fn reconstruct(&self) -> Operator2 {
        self.projector(0).scale_real(self.values[0]) + self.projector(1).scale_real(self.values[1])
    }
}

fn hermitian_tolerance(h: &Operator2) -> f64 {
    1e-10 * h.max_abs().max(1.0)
}

/// Closed-form eigen-decomposition of a Hermitian 2×2 matrix.
///
/// Each eigenvector is built from whichever column of `H − λI` is better
/// conditioned, and the second is taken as the orthogonal complement so the
/// pair is orthonormal to rounding.
pub fn eig_hermitian_2x2(h: &Operator2) -> Result<HermitianEigen> {
    let defect = h.hermiticity_defect();
    if defect > hermitian_tolerance(h) {
        return Err(Error::NotHermitian(defect));
    }
    let a = h.0[0][0].re;
    let d = h.0[1][1].re;
    // average the off-diagonal pair so tiny anti-Hermitian noise is dropped
    let b = (h.0[0][1] + h.0[1][0].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let r = half_diff.hypot(b.norm());

    if b.norm() == 0.0 {
        let (lo, hi) = if a <= d { (0, 1) } else { (1, 0) };
        let mut vectors = [[ZERO; 2]; 2];
        vectors[0][lo] = ONE;
        vectors[1][hi] = ONE;
        return Ok(HermitianEigen {
            values: [a.min(d), a.max(d)],
            vectors,
        });
    }

    let (lower, upper) = if half_diff >= 0.0 {
        // upper eigenvector (λ₊ − d, b*) with λ₊ − d = half_diff + r ≥ r
        let c = half_diff + r;
        let n = (c * c + b.norm_sqr()).sqrt();
        let up = [Complex64::new(c / n, 0.0), b.conj() / n];
        let lo = [-b / n, Complex64::new(c / n, 0.0)];
        (lo, up)
    } else {
        // lower eigenvector (λ₋ − d, b*) with |λ₋ − d| = r − half_diff ≥ r
        let c = half_diff - r;
        let n = (c * c + b.norm_sqr()).sqrt();
        let lo = [Complex64::new(c / n, 0.0), b.conj() / n];
        let up = [-b / n, Complex64::new(c / n, 0.0)];
        (lo, up)
    };
    Ok(HermitianEigen {
        values: [mean - r, mean + r],
        vectors: [lower, upper],
    })
}

/// U = exp(−iHτ) for Hermitian H, evaluated through the eigen-decomposition.
pub fn expm_skew(h: &Operator2, tau: f64) -> Result<Operator2> {
    let eig = eig_hermitian_2x2(h)?;
    Ok(expm_from_eigen(&eig, tau))
}

pub(crate) fn expm_from_eigen(eig: &HermitianEigen, tau: f64) -> Operator2 {
    let mut u = Operator2::zero();
    for k in 0..2 {
        let phase = Complex64::from_polar(1.0, -eig.values[k] * tau);
        u += eig.projector(k).scale(phase);
    }
    u
}

/// A two-level density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Operator2);

/// Tolerances applied to density matrices after propagation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateTolerance {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl Default for StateTolerance {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            trace: 1e-8,
            min_eigenvalue: -1e-8,
        }
    }
}

impl DensityMatrix {
    pub fn ground() -> Self {
        Self(Operator2::ground_projector())
    }

    pub fn excited() -> Self {
        Self(Operator2::excited_projector())
    }

    /// Wraps `op` after checking the density-matrix invariants.
    pub fn new(op: Operator2) -> Result<Self> {
        let rho = Self(op);
        rho.check(&StateTolerance::default())
            .map_err(|reason| Error::Config(format!("invalid density matrix: {reason}")))?;
        Ok(rho)
    }

    /// Wraps without validation.
    pub fn from_operator_unchecked(op: Operator2) -> Self {
        Self(op)
    }

    pub fn op(&self) -> &Operator2 {
        &self.0
    }

    /// ⟨σ⁺σ⁻⟩
    pub fn population(&self) -> f64 {
        self.0 .0[1][1].re
    }

    /// ⟨σ⁻⟩ = tr(σ⁻ρ) = ρ_eg
    pub fn sigma_minus(&self) -> Complex64 {
        self.0 .0[1][0]
    }

    pub fn expect(&self, a: &Operator2) -> Complex64 {
        a.matmul(&self.0).trace()
    }

    pub fn purity(&self) -> f64 {
        self.0.matmul(&self.0).trace().re
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = &self.0 .0;
        let a = m[0][0].re;
        let d = m[1][1].re;
        let b = (m[0][1] + m[1][0].conj()) * 0.5;
        0.5 * (a + d) - (0.5 * (a - d)).hypot(b.norm())
    }

    pub fn check(&self, tol: &StateTolerance) -> std::result::Result<(), String> {
        let herm = self.0.hermiticity_defect();
        if !(herm <= tol.hermiticity) {
            return Err(format!("Hermiticity defect {herm:.3e}"));
        }
        let tr = self.0.trace();
        let trace_err = (tr - ONE).norm();
        if !(trace_err <= tol.trace) {
            return Err(format!("trace error {trace_err:.3e}"));
        }
        let min_ev = self.min_eigenvalue();
        if !(min_ev >= tol.min_eigenvalue) {
            return Err(format!("negative eigenvalue {min_ev:.3e}"));
        }
        Ok(())
    }
}

/// Column-stacked Liouville-space vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiouvilleVec(pub [Complex64; 4]);

#[inline]
const fn vec_index(row: usize, col: usize) -> usize {
    col * 2 + row
}

impl LiouvilleVec {
    pub const fn zero() -> Self {
        Self([ZERO; 4])
    }

    pub fn from_operator(op: &Operator2) -> Self {
        let m = &op.0;
        Self([m[0][0], m[1][0], m[0][1], m[1][1]])
    }

    pub fn to_operator(&self) -> Operator2 {
        let v = &self.0;
        Operator2([[v[0], v[2]], [v[1], v[3]]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0] + self.0[3]
    }

    /// tr(σ⁻ X) for the matrix X this vector represents.
    #[inline]
    pub fn sigma_minus_expectation(&self) -> Complex64 {
        self.0[vec_index(1, 0)]
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn add_scaled(&mut self, other: &Self, s: Complex64) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += *b * s;
        }
    }
}

/// A 4×4 superoperator acting on column-stacked vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiouvilleMap(pub [[Complex64; 4]; 4]);

impl LiouvilleMap {
    pub const fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (k, row) in m.iter_mut().enumerate() {
            row[k] = ONE;
        }
        Self(m)
    }

    /// The map X ↦ A X B, i.e. Bᵀ ⊗ A.
    pub fn sandwich(a: &Operator2, b: &Operator2) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for r in 0..2 {
            for c in 0..2 {
                for rp in 0..2 {
                    for cp in 0..2 {
                        m[vec_index(r, c)][vec_index(rp, cp)] = a.0[r][rp] * b.0[cp][c];
                    }
                }
            }
        }
        Self(m)
    }

    /// X ↦ A X
    pub fn left(a: &Operator2) -> Self {
        Self::sandwich(a, &Operator2::identity())
    }

    /// X ↦ X B
    pub fn right(b: &Operator2) -> Self {
        Self::sandwich(&Operator2::identity(), b)
    }

    /// X ↦ −i[H, X]
    pub fn commutator_generator(h: &Operator2) -> Self {
        (Self::left(h) - Self::right(h)).scale(-I)
    }

    /// X ↦ 2AXA† − A†AX − XA†A
    pub fn lindblad_term(a: &Operator2) -> Self {
        let ad = a.adjoint();
        let ada = ad.matmul(a);
        Self::sandwich(a, &ad).scale_real(2.0) - Self::left(&ada) - Self::right(&ada)
    }

    #[inline]
    pub fn apply(&self, v: &LiouvilleVec) -> LiouvilleVec {
        let m = &self.0;
        let x = &v.0;
        let mut out = [ZERO; 4];
        for (o, row) in out.iter_mut().zip(m.iter()) {
            *o = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + row[3] * x[3];
        }
        LiouvilleVec(out)
    }

    pub fn apply_operator(&self, op: &Operator2) -> Operator2 {
        self.apply(&LiouvilleVec::from_operator(op)).to_operator()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = (0..4).map(|k| self.0[r][k] * other.0[k][c]).sum();
            }
        }
        Self(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|row| row.map(|z| z * s)))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for LiouvilleMap {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self.0;
        for (row, orow) in out.iter_mut().zip(o.0.iter()) {
            for (a, b) in row.iter_mut().zip(orow.iter()) {
                *a += *b;
            }
        }
        Self(out)
    }
}

impl Sub for LiouvilleMap {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale_real(-1.0)
    }
}
