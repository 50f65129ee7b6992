//! Small dense complex matrices.

use nalgebra::DMatrix;

use crate::types::Complex;

pub type CMatrix = DMatrix<Complex>;

pub fn zero() -> Complex {
    Complex::new(0.0, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `diag(-1, 1, ..., 1)` of size `c + 1`.
pub fn sigma3(components: usize) -> CMatrix {
    let mut s = identity(components + 1);
    s[(0, 0)] = Complex::new(-1.0, 0.0);
    s
}

/// Sign of the `k`-th diagonal entry of `sigma3`.
#[inline]
pub fn sigma3_entry(k: usize) -> f64 {
    if k == 0 {
        -1.0
    } else {
        1.0
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `e^{(i/2) lambda sigma3 x}`.
pub fn phase_matrix(components: usize, lambda: Complex, x: f64) -> CMatrix {
    let mut a = identity(components + 1);
    for k in 0..=components {
        a[(k, k)] = (Complex::new(0.0, 0.5 * sigma3_entry(k) * x) * lambda).exp();
    }
    a
}

/// Matrix 1-norm (max column sum).
pub fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU with partial pivoting; `None` when a pivot is exactly zero.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().try_inverse()
}

pub fn determinant(m: &CMatrix) -> Complex {
    m.clone().lu().determinant()
}
