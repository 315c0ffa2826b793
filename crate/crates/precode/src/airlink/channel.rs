//! Channel and noise generation with reproducible substreams.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::{CMatrix, CVector};

/// RNG substream for one `(snr index, trial)` pair.
///
/// ChaCha streams keyed on the point/trial pair make Monte-Carlo trials
/// independent of execution order: sequential and parallel sweeps consume
/// identical randomness. Stream 0 of every SNR index is reserved for
/// frame-level uses (e.g. the ledger demo run), trial `t` maps to stream
/// `t + 1`.
pub fn trial_rng(seed: u64, snr_index: u32, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) | (trial + 1));
    rng
}

#[inline]
fn standard_complex<R: Rng>(rng: &mut R, sigma_per_axis: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sigma_per_axis, im * sigma_per_axis)
}

/// I.i.d. Rayleigh-fading channel: circularly-symmetric complex Gaussian
/// entries with unit variance per complex entry (1/2 per real axis).
pub fn rayleigh_channel<R: Rng>(users: usize, antennas: usize, rng: &mut R) -> CMatrix {
    let sigma = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(users, antennas, |_, _| standard_complex(rng, sigma))
        .expect("gaussian draws are finite")
}

/// Adds circularly-symmetric complex Gaussian noise with variance `n0` per
/// entry; `n0 = 0` returns the input unchanged without consuming draws.
pub fn awgn<R: Rng>(y0: &CVector, n0: f64, rng: &mut R) -> CVector {
    assert!(n0 >= 0.0, "noise variance must be nonnegative");
    if n0 == 0.0 {
        return y0.clone();
    }
    let sigma = (n0 / 2.0).sqrt();
    let data = y0
        .data()
        .iter()
        .map(|&y| y + standard_complex(rng, sigma))
        .collect();
    CVector::new(data).expect("gaussian draws are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_is_deterministic_per_seed() {
        let mut a = trial_rng(9, 3, 17);
        let mut b = trial_rng(9, 3, 17);
        let h1 = rayleigh_channel(4, 8, &mut a);
        let h2 = rayleigh_channel(4, 8, &mut b);
        assert_eq!(h1, h2);
        let mut c = trial_rng(9, 3, 18);
        assert_ne!(h1, rayleigh_channel(4, 8, &mut c));
    }

    #[test]
    fn channel_entry_energy_is_unit() {
        let mut rng = trial_rng(1, 0, 0);
        let n = 1_000_000usize;
        let mut sum_sq = 0.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let z = standard_complex(&mut rng, std::f64::consts::FRAC_1_SQRT_2);
            sum_sq += z.norm_sqr();
            sum += z;
        }
        let mean_sq = sum_sq / n as f64;
        assert!(
            (0.995..=1.005).contains(&mean_sq),
            "mean |h|^2 = {mean_sq}"
        );
        // Mean within 4 sigma / sqrt(n) per axis (sigma = 1/sqrt(2)).
        let bound = 4.0 * std::f64::consts::FRAC_1_SQRT_2 / (n as f64).sqrt();
        assert!((sum.re / n as f64).abs() < bound);
        assert!((sum.im / n as f64).abs() < bound);
    }

    #[test]
    fn awgn_zero_noise_is_identity() {
        let mut rng = trial_rng(2, 0, 0);
        let y = CVector::new(vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)])
            .unwrap();
        assert_eq!(awgn(&y, 0.0, &mut rng), y);
    }

    #[test]
    fn awgn_variance_and_axis_correlation() {
        let mut rng = trial_rng(3, 0, 0);
        let n0 = 0.8;
        let n = 1_000_000usize;
        let zero = CVector::zeros(1);
        let mut sum_sq = 0.0;
        let mut cross = 0.0;
        for _ in 0..n {
            let z = awgn(&zero, n0, &mut rng).at(0);
            sum_sq += z.norm_sqr();
            cross += z.re * z.im;
        }
        let var = sum_sq / n as f64;
        assert!((var - n0).abs() / n0 < 0.01, "sample variance {var}");
        // Correlation between the axes stays below 1%.
        let corr = (cross / n as f64) / (n0 / 2.0);
        assert!(corr.abs() <= 0.01, "axis correlation {corr}");
    }
}
