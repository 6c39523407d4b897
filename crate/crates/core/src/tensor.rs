//! Dense numeric containers, seeded random streams and small statistics helpers.
//!
//! Everything here is double precision. Matrix products go through
//! `matrixmultiply`'s single-threaded kernel, which gives identical results
//! for identical inputs on every run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(rows * cols, data.len(), "matrix data length"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(cols, r.len(), "matrix row length"));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Rows in reverse order.
    pub fn reversed_rows(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            out.row_mut(r).copy_from_slice(self.row(self.rows - 1 - r));
        }
        out
    }
}

/// Whether an operand enters a product as stored or transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    N,
    T,
}

/// `c = alpha * op(a) * op(b) + beta * c`.
///
/// Panics on inconsistent shapes; callers own the shape bookkeeping.
pub fn gemm(alpha: f64, a: &Matrix, op_a: Op, b: &Matrix, op_b: Op, beta: f64, c: &mut Matrix) {
    let (m, k, rsa, csa) = match op_a {
        Op::N => (a.rows, a.cols, a.cols as isize, 1),
        Op::T => (a.cols, a.rows, 1, a.cols as isize),
    };
    let (kb, n, rsb, csb) = match op_b {
        Op::N => (b.rows, b.cols, b.cols as isize, 1),
        Op::T => (b.cols, b.rows, 1, b.cols as isize),
    };
    assert_eq!(k, kb, "gemm inner dimension");
    assert_eq!((c.rows, c.cols), (m, n), "gemm output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.data.iter_mut().for_each(|x| *x *= beta);
        return;
    }
    // SAFETY: strides and extents were derived from the owning matrices above,
    // and `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded pseudorandom stream backed by ChaCha8.
///
/// `split` derives child streams from the seed and a tag only, so a child is
/// reproducible no matter how much of the parent has been consumed.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn split(&self, tag: u64) -> RandomStream {
        RandomStream::new(splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0xA076_1D64_78BD_642F))))
    }

    /// Child stream keyed by a string label (hashed with FNV-1a).
    pub fn split_named(&self, name: &str) -> RandomStream {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.split(h)
    }

    /// Child stream seeded from this stream's next output.
    pub fn fork(&mut self) -> RandomStream {
        RandomStream::new(self.rng.random::<u64>())
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

/// `n` standard normal draws.
pub fn gaussian_sample(stream: &mut RandomStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| stream.normal()).collect()
}

/// Per-element (population) standard deviation of every column of `contexts`.
pub fn per_element_std(contexts: &Matrix) -> Result<Vec<f64>> {
    let n = contexts.rows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "per-element std needs at least 2 rows, got {n}"
        )));
    }
    let d = contexts.cols();
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(contexts.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for r in 0..n {
        for ((s, v), m) in var.iter_mut().zip(contexts.row(r)).zip(&mean) {
            let dv = v - m;
            *s += dv * dv;
        }
    }
    Ok(var.into_iter().map(|s| (s / n as f64).sqrt()).collect())
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim(a.len(), b.len(), "euclidean distance"));
    }
    Ok(squared_distance(a, b).sqrt())
}

/// Squared L2 distance; lengths must already agree.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample (n - 1) standard deviation; zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pass_variance_oracle(col: &[f64]) -> f64 {
        let n = col.len() as f64;
        let mut s = 0.0;
        for v in col {
            s += v;
        }
        let m = s / n;
        let mut ss = 0.0;
        let mut comp = 0.0;
        for v in col {
            ss += (v - m) * (v - m);
            comp += v - m;
        }
        ((ss - comp * comp / n) / n).sqrt()
    }

    #[test]
    fn std_of_identical_rows_is_zero() {
        let m = Matrix::from_rows(&[vec![1.5, -2.0], vec![1.5, -2.0]]).unwrap();
        assert_eq!(per_element_std(&m).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn std_uses_population_convention() {
        let m = Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(per_element_std(&m).unwrap(), vec![1.0]);
    }

    #[test]
    fn std_needs_two_rows() {
        let m = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(
            per_element_std(&m),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn std_matches_two_pass_oracle() {
        let mut s = RandomStream::new(11);
        let data: Vec<f64> = (0..800).map(|_| s.uniform_range(-3.0, 5.0)).collect();
        let m = Matrix::from_vec(100, 8, data).unwrap();
        let got = per_element_std(&m).unwrap();
        for c in 0..8 {
            let want = two_pass_variance_oracle(&m.column(c));
            assert!((got[c] - want).abs() < 1e-12, "col {c}: {} vs {want}", got[c]);
        }
    }

    #[test]
    fn gaussian_is_reproducible() {
        let a = gaussian_sample(&mut RandomStream::new(3), 64);
        let b = gaussian_sample(&mut RandomStream::new(3), 64);
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_moments() {
        let xs = gaussian_sample(&mut RandomStream::new(2024), 1_000_000);
        let m = mean(&xs);
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn split_ignores_parent_consumption() {
        let mut parent = RandomStream::new(5);
        let before = parent.split(9).normal();
        parent.normal();
        parent.normal();
        assert_eq!(before, parent.split(9).normal());
        assert_ne!(parent.split(9).normal(), parent.split(10).normal());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(
            euclidean_distance(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn distance_matches_naive_loop() {
        let mut s = RandomStream::new(17);
        for _ in 0..50 {
            let a: Vec<f64> = (0..13).map(|_| s.normal()).collect();
            let b: Vec<f64> = (0..13).map(|_| s.normal()).collect();
            let mut acc = 0.0;
            for i in 0..13 {
                acc += (a[i] - b[i]).powi(2);
            }
            assert!((euclidean_distance(&a, &b).unwrap() - acc.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn gemm_transposes() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let mut c = Matrix::zeros(2, 2);
        gemm(1.0, &a, Op::N, &b, Op::N, 0.0, &mut c);
        assert_eq!(c.as_slice(), &[4.0, 5.0, 10.0, 11.0]);
        let mut d = Matrix::zeros(3, 3);
        gemm(1.0, &a, Op::T, &a, Op::N, 0.0, &mut d);
        assert_eq!(d.row(0), &[17.0, 22.0, 27.0]);
        let mut e = Matrix::zeros(2, 2);
        gemm(1.0, &a, Op::N, &a, Op::T, 0.0, &mut e);
        assert_eq!(e.as_slice(), &[14.0, 32.0, 32.0, 77.0]);
    }
}
