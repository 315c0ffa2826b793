//! Row-major dense complex matrices and vectors.

use num_complex::Complex64;

use super::NumericsError;

/// Dense complex matrix in row-major order.
///
/// Construction validates that dimensions are nonzero, that the entry count
/// matches `rows * cols`, and that every entry is finite. All arithmetic
/// methods check shapes and return fresh matrices; instances are immutable
/// in normal use.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, NumericsError> {
        if rows == 0 || cols == 0 {
            return Err(NumericsError::EmptyDimensions { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                context: "entry count",
                got: data.len().to_string(),
                expected: (rows * cols).to_string(),
            });
        }
        if let Some(index) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix entry by entry; `f(r, c)` must return finite values.
    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(
        rows: usize,
        cols: usize,
        mut f: F,
    ) -> Result<Self, NumericsError> {
        if rows == 0 || cols == 0 {
            return Err(NumericsError::EmptyDimensions { rows, cols });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "zero matrix dimensions");
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::ONE;
        }
        m
    }

    /// Unchecked internal constructor for results of arithmetic on
    /// already-validated inputs.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub(crate) fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.at(r, c).conj();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &CMatrix) -> Result<CMatrix, NumericsError> {
        if self.cols != rhs.rows {
            return Err(NumericsError::DimensionMismatch {
                context: "matrix product inner dimension",
                got: format!("{}x{} * {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
                expected: "lhs.cols == rhs.rows".to_string(),
            });
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let lhs_row = self.row(r);
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &lv) in lhs_row.iter().enumerate() {
                if lv == Complex64::ZERO {
                    continue;
                }
                let rhs_row = rhs.row(k);
                for (o, &rv) in out_row.iter_mut().zip(rhs_row.iter()) {
                    *o += lv * rv;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &CVector) -> Result<CVector, NumericsError> {
        if self.cols != v.len() {
            return Err(NumericsError::DimensionMismatch {
                context: "matrix-vector product",
                got: v.len().to_string(),
                expected: self.cols.to_string(),
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc = Complex64::ZERO;
            for (h, x) in self.row(r).iter().zip(v.data().iter()) {
                acc += h * x;
            }
            out.push(acc);
        }
        Ok(CVector::from_parts(out))
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<CMatrix, NumericsError> {
        self.zip_with(rhs, "matrix sum", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix, NumericsError> {
        self.zip_with(rhs, "matrix difference", |a, b| a - b)
    }

    fn zip_with(
        &self,
        rhs: &CMatrix,
        context: &'static str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<CMatrix, NumericsError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(NumericsError::DimensionMismatch {
                context,
                got: format!("{}x{}", rhs.rows, rhs.cols),
                expected: format!("{}x{}", self.rows, self.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(CMatrix::from_parts(self.rows, self.cols, data))
    }

    pub fn scale(&self, factor: f64) -> CMatrix {
        let data = self.data.iter().map(|&z| z * factor).collect();
        CMatrix::from_parts(self.rows, self.cols, data)
    }

    /// `self + kappa * I`; requires a square matrix.
    pub fn add_scaled_identity(&self, kappa: f64) -> Result<CMatrix, NumericsError> {
        if !self.is_square() {
            return Err(NumericsError::DimensionMismatch {
                context: "regularized matrix",
                got: format!("{}x{}", self.rows, self.cols),
                expected: "square".to_string(),
            });
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            let d = out.at(i, i);
            out.set(i, i, d + kappa);
        }
        Ok(out)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Largest entry-wise absolute difference; shapes must match.
    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Copies `width` contiguous columns starting at `offset`.
    pub fn column_block(&self, offset: usize, width: usize) -> Result<CMatrix, NumericsError> {
        if width == 0 || offset + width > self.cols {
            return Err(NumericsError::DimensionMismatch {
                context: "column block",
                got: format!("offset {offset}, width {width}"),
                expected: format!("within {} columns", self.cols),
            });
        }
        let mut data = Vec::with_capacity(self.rows * width);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[offset..offset + width]);
        }
        Ok(CMatrix::from_parts(self.rows, width, data))
    }

    /// Horizontal concatenation; all blocks must share the row count.
    pub fn hconcat(blocks: &[CMatrix]) -> Result<CMatrix, NumericsError> {
        let first = blocks.first().ok_or_else(|| {
            NumericsError::InvalidArgument("cannot concatenate an empty block list".into())
        })?;
        let rows = first.rows;
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(NumericsError::DimensionMismatch {
                context: "horizontal concatenation",
                got: "mixed row counts".to_string(),
                expected: rows.to_string(),
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(r));
            }
        }
        Ok(CMatrix::from_parts(rows, cols, data))
    }

    /// Vertical concatenation; all blocks must share the column count.
    pub fn vconcat(blocks: &[CMatrix]) -> Result<CMatrix, NumericsError> {
        let first = blocks.first().ok_or_else(|| {
            NumericsError::InvalidArgument("cannot concatenate an empty block list".into())
        })?;
        let cols = first.cols;
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(NumericsError::DimensionMismatch {
                context: "vertical concatenation",
                got: "mixed column counts".to_string(),
                expected: cols.to_string(),
            });
        }
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(CMatrix::from_parts(rows, cols, data))
    }
}

/// Dense complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    data: Vec<Complex64>,
}

impl CVector {
    pub fn new(data: Vec<Complex64>) -> Result<Self, NumericsError> {
        if data.is_empty() {
            return Err(NumericsError::EmptyDimensions { rows: 0, cols: 1 });
        }
        if let Some(index) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { data })
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "zero-length vector");
        Self {
            data: vec![Complex64::ZERO; len],
        }
    }

    pub(crate) fn from_parts(data: Vec<Complex64>) -> Self {
        debug_assert!(!data.is_empty());
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize) -> Complex64 {
        self.data[i]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, factor: f64) -> CVector {
        CVector::from_parts(self.data.iter().map(|&z| z * factor).collect())
    }

    pub fn add(&self, rhs: &CVector) -> Result<CVector, NumericsError> {
        if self.len() != rhs.len() {
            return Err(NumericsError::DimensionMismatch {
                context: "vector sum",
                got: rhs.len().to_string(),
                expected: self.len().to_string(),
            });
        }
        Ok(CVector::from_parts(
            self.data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, rhs: &CVector) -> Result<CVector, NumericsError> {
        if self.len() != rhs.len() {
            return Err(NumericsError::DimensionMismatch {
                context: "vector difference",
                got: rhs.len().to_string(),
                expected: self.len().to_string(),
            });
        }
        Ok(CVector::from_parts(
            self.data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, rhs: &CVector) -> f64 {
        assert_eq!(self.len(), rhs.len());
        self.data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Concatenates vectors end to end.
    pub fn concat(parts: &[CVector]) -> Result<CVector, NumericsError> {
        if parts.is_empty() {
            return Err(NumericsError::InvalidArgument(
                "cannot concatenate an empty vector list".into(),
            ));
        }
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(CVector::from_parts(data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn new_rejects_bad_shapes_and_entries() {
        assert!(CMatrix::new(0, 3, vec![]).is_err());
        assert!(CMatrix::new(2, 2, vec![Complex64::ZERO; 3]).is_err());
        let mut data = vec![Complex64::ZERO; 4];
        data[2] = c(f64::NAN, 0.0);
        match CMatrix::new(2, 2, data) {
            Err(NumericsError::NonFinite { index }) => assert_eq!(index, 2),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn hermitian_conjugates_and_transposes() {
        let m = CMatrix::new(2, 2, vec![c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0)])
            .unwrap();
        let h = m.hermitian();
        assert_eq!(h.at(0, 0), c(1.0, -2.0));
        assert_eq!(h.at(0, 1), c(5.0, -6.0));
        assert_eq!(h.at(1, 0), c(3.0, -4.0));
        assert_eq!(h.at(1, 1), c(7.0, -8.0));
    }

    #[test]
    fn mul_against_identity() {
        let a = CMatrix::new(2, 2, vec![c(2.0, 3.0), c(4.0, -1.0), c(0.5, 0.5), c(1.0, 2.0)])
            .unwrap();
        let id = CMatrix::identity(2);
        assert_eq!(a.mul(&id).unwrap(), a);
        assert_eq!(id.mul(&a).unwrap(), a);
        assert!(a.mul(&CMatrix::identity(3)).is_err());
    }

    #[test]
    fn block_roundtrip() {
        let m = CMatrix::from_fn(3, 4, |r, c_| c((r * 4 + c_) as f64, -(r as f64))).unwrap();
        let left = m.column_block(0, 2).unwrap();
        let right = m.column_block(2, 2).unwrap();
        assert_eq!(CMatrix::hconcat(&[left, right]).unwrap(), m);
    }

    #[test]
    fn vconcat_stacks_rows() {
        let top = CMatrix::from_fn(1, 2, |_, c_| c(c_ as f64, 0.0)).unwrap();
        let bottom = CMatrix::from_fn(2, 2, |r, c_| c((10 + r * 2 + c_) as f64, 0.0)).unwrap();
        let m = CMatrix::vconcat(&[top, bottom]).unwrap();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.at(0, 1), c(1.0, 0.0));
        assert_eq!(m.at(2, 0), c(12.0, 0.0));
    }

    #[test]
    fn vector_norm_and_ops() {
        let v = CVector::new(vec![c(3.0, 4.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(v.norm_sq(), 25.0);
        let w = v.scale(2.0);
        assert_eq!(w.at(0), c(6.0, 8.0));
        assert!(v.add(&CVector::zeros(3)).is_err());
    }
}
