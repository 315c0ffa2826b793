//! Gram products, trace reductions, and the algebraic identities behind the
//! regularized pseudo-inverse.

use num_complex::Complex64;

use super::factor::hpd_inverse;
use super::matrix::CMatrix;
use super::NumericsError;

/// Gram matrix `G = H H^H`.
///
/// Only the upper triangle is computed; the lower triangle is mirrored by
/// conjugation and the diagonal is forced exactly real, so the result is
/// Hermitian by construction.
pub fn gram(h: &CMatrix) -> Result<CMatrix, NumericsError> {
    let u = h.rows();
    let mut g = CMatrix::zeros(u, u);
    for r in 0..u {
        let row_r = h.row(r);
        for c in r..u {
            let row_c = h.row(c);
            let mut acc = Complex64::ZERO;
            for (a, b) in row_r.iter().zip(row_c.iter()) {
                acc += a * b.conj();
            }
            if c == r {
                g.set(r, r, Complex64::new(acc.re, 0.0));
            } else {
                g.set(r, c, acc);
                g.set(c, r, acc.conj());
            }
        }
    }
    Ok(g)
}

/// Trace and squared Frobenius norm in one pass; requires a square input.
pub fn trace_and_frob(m: &CMatrix) -> Result<(Complex64, f64), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::DimensionMismatch {
            context: "trace",
            got: format!("{}x{}", m.rows(), m.cols()),
            expected: "square".to_string(),
        });
    }
    let mut trace = Complex64::ZERO;
    for i in 0..m.rows() {
        trace += m.at(i, i);
    }
    Ok((trace, m.frobenius_norm_sq()))
}

/// Regularized pseudo-inverse `Q = H^H (H H^H + kappa I)^{-1}`.
///
/// This is the matrix-inversion-lemma form of [`q_by_definition`]: it only
/// inverts a `U x U` matrix, where `U` is the (small) row count of `H`.
pub fn q_by_inversion_lemma(h: &CMatrix, kappa: f64) -> Result<CMatrix, NumericsError> {
    if !(kappa > 0.0) {
        return Err(NumericsError::InvalidArgument(format!(
            "regularizer must be positive, got {kappa}"
        )));
    }
    let a = gram(h)?.add_scaled_identity(kappa)?;
    let a_inv = hpd_inverse(&a)?;
    h.hermitian().mul(&a_inv)
}

/// Regularized pseudo-inverse in its defining form
/// `Q = (H^H H + kappa I)^{-1} H^H`, which inverts a `B x B` matrix.
///
/// Accepts `kappa = 0` so the zero-forcing limit can be expressed when
/// `H^H H` is itself positive definite.
pub fn q_by_definition(h: &CMatrix, kappa: f64) -> Result<CMatrix, NumericsError> {
    if kappa < 0.0 {
        return Err(NumericsError::InvalidArgument(format!(
            "regularizer must be nonnegative, got {kappa}"
        )));
    }
    let hh = h.hermitian();
    let m = hh.mul(h)?.add_scaled_identity(kappa)?;
    hpd_inverse(&m)?.mul(&hh)
}

/// Searle-type trace shortcut: evaluates `tr(A^{-1} G A^{-1})` as
/// `tr(A^{-1}) - kappa * ||A^{-1}||_F^2`, valid when `A = G + kappa I`.
///
/// `g` participates only through the validity condition; it is checked for
/// shape so misuse fails loudly rather than silently returning a value for
/// the wrong identity.
pub fn searle_trace(a_inv: &CMatrix, g: &CMatrix, kappa: f64) -> Result<f64, NumericsError> {
    if !a_inv.is_square() || !g.is_square() || a_inv.rows() != g.rows() {
        return Err(NumericsError::DimensionMismatch {
            context: "Searle trace",
            got: format!(
                "{}x{} and {}x{}",
                a_inv.rows(),
                a_inv.cols(),
                g.rows(),
                g.cols()
            ),
            expected: "matching square matrices".to_string(),
        });
    }
    let (trace, frob_sq) = trace_and_frob(a_inv)?;
    Ok(trace.re - kappa * frob_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c(re, im)
        })
        .unwrap()
    }

    // Independent oracle: G[u, v] = sum_k H[u, k] * conj(H[v, k]) as a plain
    // triple loop over explicit indices.
    fn gram_brute_force(h: &CMatrix) -> CMatrix {
        CMatrix::from_fn(h.rows(), h.rows(), |u, v| {
            let mut acc = Complex64::ZERO;
            for k in 0..h.cols() {
                acc += h.at(u, k) * h.at(v, k).conj();
            }
            acc
        })
        .unwrap()
    }

    #[test]
    fn gram_of_identity() {
        let g = gram(&CMatrix::identity(2)).unwrap();
        assert!(g.max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn gram_diagonal_case() {
        // H = [[1+i, 0], [0, 2]] -> G = [[2, 0], [0, 4]] since |1+i|^2 = 2.
        let h = CMatrix::new(2, 2, vec![c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)])
            .unwrap();
        let g = gram(&h).unwrap();
        let expected =
            CMatrix::new(2, 2, vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!(g.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn gram_matches_brute_force() {
        let h = random_matrix(4, 8, 3);
        let g = gram(&h).unwrap();
        assert!(g.max_abs_diff(&gram_brute_force(&h)) < 1e-12);
        // Hermitian within 1e-12 per entry (exactly, by construction).
        assert_eq!(g, g.hermitian());
    }

    #[test]
    fn trace_and_frob_identity_cases() {
        let (t, f) = trace_and_frob(&CMatrix::identity(4)).unwrap();
        assert_eq!(t, c(4.0, 0.0));
        assert_eq!(f, 4.0);
        let (t, f) = trace_and_frob(&CMatrix::identity(2).scale(0.5)).unwrap();
        assert_eq!(t, c(1.0, 0.0));
        assert_eq!(f, 0.5);
    }

    #[test]
    fn trace_and_frob_matches_loops() {
        let h = random_matrix(8, 8, 5);
        let g = gram(&h).unwrap();
        let (trace, frob_sq) = trace_and_frob(&g).unwrap();
        let mut t = Complex64::ZERO;
        let mut f = 0.0;
        for r in 0..8 {
            t += g.at(r, r);
            for cidx in 0..8 {
                let z = g.at(r, cidx);
                f += z.re * z.re + z.im * z.im;
            }
        }
        assert!((trace - t).norm() < 1e-12);
        assert!((frob_sq - f).abs() < 1e-12);
        // Hermitian input: imaginary part of the trace is negligible.
        assert!(trace.im.abs() <= 1e-10 * trace.norm());
    }

    #[test]
    fn q_identity_channel() {
        let q = q_by_inversion_lemma(&CMatrix::identity(3), 1.0).unwrap();
        assert!(q.max_abs_diff(&CMatrix::identity(3).scale(0.5)) < 1e-14);
    }

    #[test]
    fn q_forms_agree() {
        let h = random_matrix(2, 4, 9);
        let kappa = 0.37;
        let lemma = q_by_inversion_lemma(&h, kappa).unwrap();
        let direct = q_by_definition(&h, kappa).unwrap();
        let rel = lemma.sub(&direct).unwrap().frobenius_norm() / direct.frobenius_norm();
        assert!(rel <= 1e-9, "relative deviation {rel}");
    }

    #[test]
    fn q_matched_filter_limit() {
        // For kappa much larger than ||G||, Q ~ H^H / kappa.
        let h = random_matrix(4, 8, 13);
        let kappa = 1e6;
        let q = q_by_inversion_lemma(&h, kappa).unwrap();
        let expected = h.frobenius_norm() / kappa;
        let rel = (q.frobenius_norm() - expected).abs() / expected;
        assert!(rel < 0.01, "relative deviation {rel}");
    }

    #[test]
    fn searle_trace_worked_example() {
        // G = I2, kappa = 1: A^{-1} = I/2, both sides equal 1/2.
        let g = CMatrix::identity(2);
        let a_inv = CMatrix::identity(2).scale(0.5);
        let rhs = searle_trace(&a_inv, &g, 1.0).unwrap();
        assert!((rhs - 0.5).abs() < 1e-15);
    }

    #[test]
    fn searle_trace_matches_triple_product() {
        let h = random_matrix(8, 16, 17);
        let kappa = 0.25;
        let g = gram(&h).unwrap();
        let a_inv = hpd_inverse(&g.add_scaled_identity(kappa).unwrap()).unwrap();
        let lhs = trace_and_frob(&a_inv.mul(&g).unwrap().mul(&a_inv).unwrap())
            .unwrap()
            .0
            .re;
        let rhs = searle_trace(&a_inv, &g, kappa).unwrap();
        assert!((lhs - rhs).abs() / lhs.abs() <= 1e-9);
    }

    #[test]
    fn searle_trace_kappa_zero_reduces_to_inverse_trace() {
        let h = random_matrix(4, 12, 19);
        let g = gram(&h).unwrap();
        let g_inv = hpd_inverse(&g).unwrap();
        let rhs = searle_trace(&g_inv, &g, 0.0).unwrap();
        let tr = trace_and_frob(&g_inv).unwrap().0.re;
        assert!((rhs - tr).abs() < 1e-12);
    }
}
