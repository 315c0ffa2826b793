//! Gray-mapped square QAM constellations.

use num_complex::Complex64;

use super::AirlinkError;

/// A square QAM constellation (4/16/64 points) with Gray-coded bit labels
/// and average symbol energy `es`.
///
/// Points are indexed row-major over the in-phase and quadrature amplitude
/// levels. Each axis carries half the bits, Gray-coded so adjacent levels
/// differ in exactly one bit; the symbol label concatenates the in-phase
/// bits (most significant) with the quadrature bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    es: f64,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    label_to_index: Vec<u32>,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn qam(order: usize, es: f64) -> Result<Self, AirlinkError> {
        if !matches!(order, 4 | 16 | 64) {
            return Err(AirlinkError::InvalidConfig(format!(
                "unsupported QAM order {order} (expected 4, 16, or 64)"
            )));
        }
        if !(es > 0.0) {
            return Err(AirlinkError::InvalidConfig(format!(
                "symbol energy must be positive, got {es}"
            )));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let bits_per_axis = bits_per_symbol / 2;
        let levels = 1usize << bits_per_axis;
        // Unnormalized mean energy of the 2(2k - L + 1) lattice is
        // 2 (L^2 - 1) / 3 per symbol.
        let mean_unnormalized = 2.0 * ((levels * levels - 1) as f64) / 3.0;
        let scale = (es / mean_unnormalized).sqrt();
        let amplitude = |idx: usize| (2 * idx) as f64 - (levels - 1) as f64;

        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        let mut label_to_index = vec![u32::MAX; order];
        for i_idx in 0..levels {
            for q_idx in 0..levels {
                let index = (i_idx * levels + q_idx) as u32;
                let label =
                    (gray(i_idx as u32) << bits_per_axis) | gray(q_idx as u32);
                points.push(Complex64::new(
                    amplitude(i_idx) * scale,
                    amplitude(q_idx) * scale,
                ));
                labels.push(label);
                label_to_index[label as usize] = index;
            }
        }
        Ok(Self {
            order,
            bits_per_symbol,
            es,
            points,
            labels,
            label_to_index,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn symbol_energy(&self) -> f64 {
        self.es
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Gray label of a point index.
    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    /// Point index encoding the given bits (most significant first).
    pub fn index_for_bits(&self, bits: &[u8]) -> Result<usize, AirlinkError> {
        if bits.len() != self.bits_per_symbol {
            return Err(AirlinkError::InvalidConfig(format!(
                "expected {} bits per symbol, got {}",
                self.bits_per_symbol,
                bits.len()
            )));
        }
        let mut label = 0u32;
        for &b in bits {
            if b > 1 {
                return Err(AirlinkError::InvalidConfig("bits must be 0 or 1".into()));
            }
            label = (label << 1) | b as u32;
        }
        Ok(self.label_to_index[label as usize] as usize)
    }

    /// Writes the bit label of a point index into `out` (most significant
    /// first).
    pub fn bits_for_index(&self, index: usize, out: &mut Vec<u8>) {
        let label = self.labels[index];
        for bit in (0..self.bits_per_symbol).rev() {
            out.push(((label >> bit) & 1) as u8);
        }
    }

    /// Nearest-point hard decision. Ties on a decision boundary resolve to
    /// the lowest point index.
    pub fn detect(&self, sample: Complex64) -> usize {
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (idx, p) in self.points.iter().enumerate() {
            let d = (sample - p).norm_sqr();
            if d < best_dist {
                best_dist = d;
                best = idx;
            }
        }
        best
    }

    /// Hard-decides every entry of `samples` and returns the detected bits.
    pub fn demodulate(&self, samples: &crate::numerics::CVector) -> Vec<u8> {
        let mut bits = Vec::with_capacity(samples.len() * self.bits_per_symbol);
        for i in 0..samples.len() {
            let idx = self.detect(samples.at(i));
            self.bits_for_index(idx, &mut bits);
        }
        bits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::CVector;

    #[test]
    fn mean_energy_is_normalized() {
        for order in [4usize, 16, 64] {
            let c = Constellation::qam(order, 1.0).unwrap();
            let mean: f64 =
                c.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((mean - 1.0).abs() < 1e-12, "order {order}: mean {mean}");
        }
        let c = Constellation::qam(16, 2.5).unwrap();
        let mean: f64 = c.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert!((mean - 2.5).abs() < 1e-12);
    }

    #[test]
    fn labels_are_a_bijection() {
        for order in [4usize, 16, 64] {
            let c = Constellation::qam(order, 1.0).unwrap();
            let mut seen = vec![false; order];
            for &l in &c.labels {
                assert!(!seen[l as usize], "label {l} repeats");
                seen[l as usize] = true;
            }
        }
    }

    #[test]
    fn gray_property_along_both_axes() {
        let c = Constellation::qam(64, 1.0).unwrap();
        let levels = 8usize;
        for i in 0..levels {
            for q in 0..levels {
                let here = c.labels[i * levels + q];
                if i + 1 < levels {
                    let right = c.labels[(i + 1) * levels + q];
                    assert_eq!((here ^ right).count_ones(), 1);
                }
                if q + 1 < levels {
                    let up = c.labels[i * levels + q + 1];
                    assert_eq!((here ^ up).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn exact_point_roundtrips_through_detection() {
        let c = Constellation::qam(64, 1.0).unwrap();
        for idx in 0..64 {
            assert_eq!(c.detect(c.point(idx)), idx);
            let mut bits = Vec::new();
            c.bits_for_index(idx, &mut bits);
            assert_eq!(c.index_for_bits(&bits).unwrap(), idx);
        }
    }

    #[test]
    fn boundary_tie_takes_lowest_index() {
        let c = Constellation::qam(4, 1.0).unwrap();
        // The origin is equidistant from all four points.
        assert_eq!(c.detect(Complex64::new(0.0, 0.0)), 0);
        // Midway between indices 0 and 1 (same in-phase level).
        let mid = (c.point(0) + c.point(1)) * 0.5;
        assert_eq!(c.detect(mid), 0);
    }

    #[test]
    fn demodulate_matches_per_symbol_detection() {
        let c = Constellation::qam(16, 1.0).unwrap();
        let v = CVector::new(vec![
            c.point(3),
            c.point(7) + Complex64::new(0.01, -0.02),
        ])
        .unwrap();
        let bits = c.demodulate(&v);
        let mut expected = Vec::new();
        c.bits_for_index(3, &mut expected);
        c.bits_for_index(7, &mut expected);
        assert_eq!(bits, expected);
    }
}
