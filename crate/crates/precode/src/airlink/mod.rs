//! Link-level simulation: Rayleigh channels, Gray-mapped QAM, AWGN, UE-side
//! scaling with hard-decision detection, and Monte-Carlo BER measurement.

mod ber;
mod channel;
mod constellation;

pub use ber::{measure_ber, measure_ber_point, BerReport};
pub use channel::{awgn, rayleigh_channel, trial_rng};
pub use constellation::Constellation;

use crate::fabric::{FabricError, WorkloadShape};
use crate::numerics::{CVector, NumericsError};
use crate::precoding::PrecodingError;
use rand::Rng;
use thiserror::Error;

/// Errors raised by the link-level simulation.
#[derive(Debug, Error)]
pub enum AirlinkError {
    #[error("invalid link configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Precoding(#[from] PrecodingError),
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A batch of transmit vectors over a frame, together with the bits they
/// encode.
///
/// `symbols[sc * n_slots + slot]` is the length-`U` transmit vector of
/// subcarrier `sc` in time slot `slot`; `indices` caches the constellation
/// point index of every user symbol in the same order, which makes error
/// counting a label comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub shape: WorkloadShape,
    pub bits: Vec<u8>,
    pub symbols: Vec<CVector>,
    pub indices: Vec<u32>,
}

impl SymbolFrame {
    /// Builds a frame from explicit bits (`0`/`1` values, one per entry).
    pub fn from_bits(
        shape: WorkloadShape,
        users: usize,
        constellation: &Constellation,
        bits: Vec<u8>,
    ) -> Result<Self, AirlinkError> {
        let bps = constellation.bits_per_symbol();
        let expected = shape.vectors_per_frame() * users * bps;
        if bits.len() != expected {
            return Err(AirlinkError::InvalidConfig(format!(
                "frame needs {expected} bits, got {}",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(AirlinkError::InvalidConfig(
                "bits must be 0 or 1".into(),
            ));
        }
        let n_vectors = shape.vectors_per_frame();
        let mut symbols = Vec::with_capacity(n_vectors);
        let mut indices = Vec::with_capacity(n_vectors * users);
        for v in 0..n_vectors {
            let mut entries = Vec::with_capacity(users);
            for u in 0..users {
                let offset = (v * users + u) * bps;
                let index = constellation.index_for_bits(&bits[offset..offset + bps])?;
                indices.push(index as u32);
                entries.push(constellation.point(index));
            }
            symbols.push(CVector::new(entries)?);
        }
        Ok(Self {
            shape,
            bits,
            symbols,
            indices,
        })
    }

    /// Draws a uniformly random frame from `rng`.
    pub fn random<R: Rng>(
        shape: WorkloadShape,
        users: usize,
        constellation: &Constellation,
        rng: &mut R,
    ) -> Self {
        let n_bits = shape.vectors_per_frame() * users * constellation.bits_per_symbol();
        let bits: Vec<u8> = (0..n_bits).map(|_| rng.random::<bool>() as u8).collect();
        Self::from_bits(shape, users, constellation, bits)
            .expect("generated bits are always valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frame_bits_and_symbols_are_consistent() {
        let constellation = Constellation::qam(16, 1.0).unwrap();
        let shape = WorkloadShape::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let frame = SymbolFrame::random(shape, 4, &constellation, &mut rng);
        assert_eq!(frame.bits.len(), 2 * 3 * 4 * 4);
        assert_eq!(frame.symbols.len(), 6);
        assert_eq!(frame.indices.len(), 24);
        // Symbols match the cached indices.
        for (v, s) in frame.symbols.iter().enumerate() {
            for u in 0..4 {
                let idx = frame.indices[v * 4 + u] as usize;
                assert_eq!(s.at(u), constellation.point(idx));
            }
        }
        // Rebuilding from the same bits reproduces the frame.
        let rebuilt =
            SymbolFrame::from_bits(shape, 4, &constellation, frame.bits.clone()).unwrap();
        assert_eq!(rebuilt, frame);
    }

    #[test]
    fn frame_rejects_wrong_bit_count() {
        let constellation = Constellation::qam(4, 1.0).unwrap();
        let shape = WorkloadShape::new(1, 1).unwrap();
        assert!(SymbolFrame::from_bits(shape, 2, &constellation, vec![0, 1]).is_err());
        assert!(SymbolFrame::from_bits(shape, 2, &constellation, vec![0, 1, 2, 0]).is_err());
    }
}
