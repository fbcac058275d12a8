//! Small dense row-major matrix and instrumented vector kernels.
//!
//! Every multiply that the operation model charges for goes through the
//! helpers here so that instrumented counts and the closed forms in
//! [`crate::counters`] agree exactly. Accumulation order is fixed
//! (ascending column index, one accumulator per output element) so results
//! are identical regardless of caller-side parallelism.

use num_traits::Float;

/// Scalar type for the numeric kernels. `f64` is the reference path; `f32`
/// mirrors the accelerator datapath for parity experiments.
pub trait Scalar: Float + std::fmt::Debug + Send + Sync + 'static {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Multiply-accumulate tally for one computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MacCount(pub u64);

impl MacCount {
    pub fn add(&mut self, n: u64) {
        self.0 += n;
    }
}

impl std::ops::AddAssign for MacCount {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F = f64> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    /// Builds from row-major data. Panics if the element count is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    /// `self * x`, charging rows*cols MACs.
    pub fn matvec(&self, x: &[F], macs: &mut MacCount) -> Vec<F> {
        self.matvec_cols(0, self.cols, x, macs)
    }

    /// Multiplies the column block `[col_start, col_end)` by `x`.
    ///
    /// Used to split `W · [head || Φ]` into a head part and a time part so
    /// the cosine and LUT paths accumulate in the same order and agree
    /// bit-for-bit when the LUT entry equals the encoded time.
    pub fn matvec_cols(&self, col_start: usize, col_end: usize, x: &[F], macs: &mut MacCount) -> Vec<F> {
        debug_assert!(col_end <= self.cols && col_start <= col_end);
        debug_assert_eq!(x.len(), col_end - col_start);
        let width = col_end - col_start;
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols + col_start..i * self.cols + col_end];
            let mut acc = F::zero();
            for (w, v) in row.iter().zip(x.iter()) {
                acc = acc + *w * *v;
            }
            out.push(acc);
        }
        macs.add((self.rows * width) as u64);
        out
    }

    /// Copies the column block `[col_start, col_end)` into a new matrix.
    pub fn col_block(&self, col_start: usize, col_end: usize) -> Mat<F> {
        let width = col_end - col_start;
        let mut data = Vec::with_capacity(self.rows * width);
        for i in 0..self.rows {
            data.extend_from_slice(&self.data[i * self.cols + col_start..i * self.cols + col_end]);
        }
        Mat::from_vec(self.rows, width, data)
    }

    pub fn map<G: Scalar>(&self, f: impl Fn(F) -> G) -> Mat<G> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Dot product, charging one MAC per element.
pub fn dot<F: Scalar>(a: &[F], b: &[F], macs: &mut MacCount) -> F {
    debug_assert_eq!(a.len(), b.len());
    macs.add(a.len() as u64);
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc = acc + *x * *y;
    }
    acc
}

/// `into += alpha * x`, charging one MAC per element.
pub fn axpy<F: Scalar>(alpha: F, x: &[F], into: &mut [F], macs: &mut MacCount) {
    debug_assert_eq!(x.len(), into.len());
    macs.add(x.len() as u64);
    for (o, v) in into.iter_mut().zip(x.iter()) {
        *o = *o + alpha * *v;
    }
}

/// Elementwise product, charging one MAC per element.
pub fn hadamard<F: Scalar>(a: &[F], b: &[F], macs: &mut MacCount) -> Vec<F> {
    debug_assert_eq!(a.len(), b.len());
    macs.add(a.len() as u64);
    a.iter().zip(b.iter()).map(|(x, y)| *x * *y).collect()
}

/// `into += x`, free of charge (additions are not MACs).
pub fn add_assign<F: Scalar>(into: &mut [F], x: &[F]) {
    debug_assert_eq!(into.len(), x.len());
    for (o, v) in into.iter_mut().zip(x.iter()) {
        *o = *o + *v;
    }
}

pub fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_matches_naive_loop() {
        let m = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = [1.0, -1.0, 2.0];
        let mut macs = MacCount::default();
        let y = m.matvec(&x, &mut macs);
        assert_eq!(y, vec![5.0, 11.0]);
        assert_eq!(macs.0, 6);
    }

    #[test]
    fn block_matvec_splits_consistently() {
        let m = Mat::from_vec(2, 4, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut macs = MacCount::default();
        let full = m.matvec(&x, &mut macs);
        let mut head = m.matvec_cols(0, 2, &x[..2], &mut macs);
        let tail = m.matvec_cols(2, 4, &x[2..], &mut macs);
        add_assign(&mut head, &tail);
        for (a, b) in full.iter().zip(head.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(macs.0, 8 + 4 + 4);
    }

    #[test]
    fn col_block_extracts_the_same_values() {
        let m = Mat::from_vec(2, 4, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let b = m.col_block(1, 3);
        assert_eq!(b.rows(), 2);
        assert_eq!(b.cols(), 2);
        assert_eq!(b.data(), &[2.0, 3.0, 6.0, 7.0]);
        // Block matvec over the copy is bit-identical to matvec_cols on the original.
        let x = [0.5, -2.0];
        let mut m1 = MacCount::default();
        let mut m2 = MacCount::default();
        assert_eq!(b.matvec(&x, &mut m1), m.matvec_cols(1, 3, &x, &mut m2));
    }

    #[test]
    fn zero_width_matvec_is_free() {
        let m: Mat<f64> = Mat::zeros(3, 0);
        let mut macs = MacCount::default();
        let y = m.matvec(&[], &mut macs);
        assert_eq!(y, vec![0.0; 3]);
        assert_eq!(macs.0, 0);
    }
}
