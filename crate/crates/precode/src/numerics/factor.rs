//! Hermitian positive-definite factorization and inversion.

use num_complex::Complex64;

use super::matrix::CMatrix;
use super::NumericsError;

/// Cholesky factorization `A = L L^H` of a Hermitian positive-definite
/// matrix, returning the lower-triangular factor.
///
/// Fails with [`NumericsError::NotPositiveDefinite`] on the first pivot that
/// is not strictly positive, which is how singular regularized Grams (for
/// example the zero-forcing limit of a rank-deficient channel) surface.
pub fn cholesky_lower(a: &CMatrix) -> Result<CMatrix, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::DimensionMismatch {
            context: "Cholesky factorization",
            got: format!("{}x{}", a.rows(), a.cols()),
            expected: "square".to_string(),
        });
    }
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.at(j, j).re;
        for k in 0..j {
            diag -= l.at(j, k).norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(NumericsError::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l.set(j, j, Complex64::new(ljj, 0.0));
        for i in (j + 1)..n {
            let mut v = a.at(i, j);
            for k in 0..j {
                v -= l.at(i, k) * l.at(j, k).conj();
            }
            l.set(i, j, v / ljj);
        }
    }
    Ok(l)
}

/// Explicit inverse of a Hermitian positive-definite matrix.
///
/// Factors `A = L L^H`, then solves `A x = e_i` by forward and backward
/// substitution for every unit vector. The result is re-symmetrized so the
/// returned inverse is exactly Hermitian. The inverse is materialized (not
/// just applied) because downstream formulas need its trace and Frobenius
/// norm.
pub fn hpd_inverse(a: &CMatrix) -> Result<CMatrix, NumericsError> {
    let l = cholesky_lower(a)?;
    let n = a.rows();
    let mut inv = CMatrix::zeros(n, n);
    let mut y = vec![Complex64::ZERO; n];
    for col in 0..n {
        // Forward solve L y = e_col.
        for i in 0..n {
            let mut v = if i == col { Complex64::ONE } else { Complex64::ZERO };
            for k in 0..i {
                v -= l.at(i, k) * y[k];
            }
            y[i] = v / l.at(i, i).re;
        }
        // Backward solve L^H x = y.
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in (i + 1)..n {
                v -= l.at(k, i).conj() * y[k];
            }
            y[i] = v / l.at(i, i).re;
        }
        for row in 0..n {
            inv.set(row, col, y[row]);
        }
    }
    // Kill rounding asymmetry: X <- (X + X^H)/2 with an exactly real diagonal.
    let mut sym = CMatrix::zeros(n, n);
    for r in 0..n {
        sym.set(r, r, Complex64::new(inv.at(r, r).re, 0.0));
        for c in (r + 1)..n {
            let v = (inv.at(r, c) + inv.at(c, r).conj()) * 0.5;
            sym.set(r, c, v);
            sym.set(c, r, v.conj());
        }
    }
    Ok(sym)
}
