//! Fixed-size matrix types for the two-mode problem.
//!
//! Quadratures are ordered `(x1, p1, x2, p2)` with `x = (c + c†)/√2` and
//! `p = -i(c - c†)/√2`, so `c = (x + i p)/√2`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

/// Complex two-vector of channel coupling amplitudes.
pub type ComplexVector2 = [Complex64; 2];

/// Real 4×2 matrix, rows in quadrature order.
pub type RealMatrix4x2 = [[f64; 2]; 4];

/// Dense real 4×4 matrix (row-major).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RealMatrix4(pub [[f64; 4]; 4]);

impl RealMatrix4 {
    pub const fn zeros() -> Self {
        Self([[0.0; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(d: [f64; 4]) -> Self {
        Self::from_fn(|i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = f(i, j);
            }
        }
        Self(m)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_fn(|i, j| k * self.0[i][j])
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    /// `max |M - Mᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        (*self - self.transpose()).max_abs()
    }

    pub fn symmetrized(&self) -> Self {
        Self::from_fn(|i, j| 0.5 * (self.0[i][j] + self.0[j][i]))
    }

    /// Trace of the 2×2 diagonal block belonging to `mode` (0 or 1).
    pub fn block_trace(&self, mode: usize) -> f64 {
        self.0[2 * mode][2 * mode] + self.0[2 * mode + 1][2 * mode + 1]
    }
}

impl Index<(usize, usize)> for RealMatrix4 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for RealMatrix4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl Sub for RealMatrix4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl Neg for RealMatrix4 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for RealMatrix4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl Mul<f64> for RealMatrix4 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        self.scale(k)
    }
}

/// Dense complex 2×2 matrix (row-major), the mode-amplitude drift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMatrix2(pub [[Complex64; 2]; 2]);

impl ComplexMatrix2 {
    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Self([[m11, m12], [m21, m22]])
    }

    pub fn diagonal(d1: Complex64, d2: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self::new(d1, z, z, d2)
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    /// Both eigenvalues from the characteristic quadratic
    /// `λ² - tr λ + det = 0`.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = self.trace() * 0.5;
        let disc = (half_tr * half_tr - self.determinant()).sqrt();
        [half_tr + disc, half_tr - disc]
    }
}

impl Index<(usize, usize)> for ComplexMatrix2 {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

/// Quadrature image `R(u)` of a complex coupling vector.
///
/// Mode `k` contributes the x-row `[Re uₖ, -Im uₖ]` and the p-row
/// `[Im uₖ, Re uₖ]`. The columns of `R(u)` are orthogonal with squared norm
/// `‖u‖²`, and `R(e^{iα}u) = R(u)·Q(α)` for a planar rotation `Q(α)`.
pub fn real_embedding_matrix(u: &ComplexVector2) -> RealMatrix4x2 {
    let mut r = [[0.0; 2]; 4];
    for (k, uk) in u.iter().enumerate() {
        r[2 * k] = [uk.re, -uk.im];
        r[2 * k + 1] = [uk.im, uk.re];
    }
    r
}

/// `R(u)·R(u)ᵀ`, phase invariant in `u`.
pub fn embedding_gram(u: &ComplexVector2) -> RealMatrix4 {
    let r = real_embedding_matrix(u);
    RealMatrix4::from_fn(|i, j| r[i][0] * r[j][0] + r[i][1] * r[j][1])
}

/// Quadrature drift `A` with `q̇ = A q` whenever `ċ = M c`.
pub fn embed_drift(m: &ComplexMatrix2) -> RealMatrix4 {
    let mut a = RealMatrix4::zeros();
    for k in 0..2 {
        for l in 0..2 {
            let z = m.0[k][l];
            a[(2 * k, 2 * l)] = z.re;
            a[(2 * k, 2 * l + 1)] = -z.im;
            a[(2 * k + 1, 2 * l)] = z.im;
            a[(2 * k + 1, 2 * l + 1)] = z.re;
        }
    }
    a
}

/// Largest real part over the eigenvalues of `m`. Negative means stable.
pub fn stability_margin(m: &ComplexMatrix2) -> f64 {
    let [l1, l2] = m.eigenvalues();
    l1.re.max(l2.re)
}

/// Coefficients `[c1, c2, c3, c4]` of `det(λI - A) = λ⁴ + c1 λ³ + c2 λ² + c3 λ + c4`
/// (Faddeev–LeVerrier).
pub fn characteristic_polynomial(a: &RealMatrix4) -> [f64; 4] {
    let mut coeffs = [0.0; 4];
    let mut m = RealMatrix4::zeros();
    let mut c_prev = 1.0;
    for k in 1..=4 {
        // M_k = A M_{k-1} + c_{k-1} I
        m = *a * m + RealMatrix4::identity().scale(c_prev);
        let ck = -(*a * m).trace() / k as f64;
        coeffs[k - 1] = ck;
        c_prev = ck;
    }
    coeffs
}

/// Routh–Hurwitz test: every eigenvalue of `a` has negative real part.
pub fn is_hurwitz(a: &RealMatrix4) -> bool {
    let [c1, c2, c3, c4] = characteristic_polynomial(a);
    c1 > 0.0 && c3 > 0.0 && c4 > 0.0 && c1 * c2 * c3 - c3 * c3 - c1 * c1 * c4 > 0.0
}
