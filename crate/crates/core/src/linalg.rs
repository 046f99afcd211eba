//! Matrix aliases and the few dense helpers the solvers share.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Unit-modulus phasor e^{jφ}.
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Stack real and imaginary parts: `[Re z; Im z]`.
pub fn realify(z: &CVector) -> RVector {
    let n = z.len();
    RVector::from_fn(2 * n, |i, _| if i < n { z[i].re } else { z[i - n].im })
}

/// Plain bilinear product `aᵀb` (no conjugation).
pub fn dot_t(a: &CVector, b: &CVector) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn cholesky(m: RMatrix, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::Numerical(format!("{what}: matrix is not positive definite")))
}

/// Cholesky with an escalating diagonal ridge, for barrier Hessians that are
/// PSD but may be numerically singular.
pub fn cholesky_ridged(m: &RMatrix) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().amax().max(1e-300);
    let mut ridge = scale * 1e-14;
    while ridge < scale * 1e-2 {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += ridge;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Some(c);
        }
        ridge *= 100.0;
    }
    None
}

/// Hermitian-part residual `max |X - Xᴴ|`.
pub fn hermitian_residual(x: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            worst = worst.max((x[(i, j)] - x[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian part of `x`, via the real 2n×2n embedding.
pub fn min_hermitian_eigenvalue(x: &CMatrix) -> f64 {
    let n = x.nrows();
    let mut emb = RMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let h = 0.5 * (x[(i, j)] + x[(j, i)].conj());
            emb[(i, j)] = h.re;
            emb[(i + n, j + n)] = h.re;
            emb[(i, j + n)] = -h.im;
            emb[(i + n, j)] = h.im;
        }
    }
    emb.symmetric_eigenvalues().min()
}

/// Inverse of a Hermitian positive-definite complex matrix.
pub fn hpd_inverse(x: &CMatrix) -> Result<CMatrix> {
    Cholesky::new(x.clone())
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Numerical("matrix is not Hermitian positive definite".into()))
}

/// `tr(X Y)` without forming the product.
pub fn trace_of_product(x: &CMatrix, y: &CMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..x.nrows() {
        for k in 0..x.ncols() {
            acc += x[(i, k)] * y[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realify_stacks_parts() {
        let z = CVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)]);
        assert_eq!(realify(&z).as_slice(), &[1.0, -3.0, 2.0, 0.5]);
    }

    #[test]
    fn embedding_eigenvalue_matches_diagonal() {
        let x = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        assert!((min_hermitian_eigenvalue(&x) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ridged_cholesky_handles_singular_psd() {
        let m = RMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_ridged(&m).is_some());
    }
}
