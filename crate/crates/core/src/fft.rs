//! Centered, unitary 2D DFT on square power-of-two arrays.
//!
//! Index `j` of an axis of length `n` stands for the signed coordinate
//! `j - n/2`, so zero frequency sits at `[n/2, n/2]`. For `n % 4 == 0` the
//! shift is a checkerboard sign flip applied before and after a plain FFT.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// In-place centered transform, scaled by `1/n` so it is unitary.
    pub fn process(&self, data: &mut Array2<Complex64>, direction: Direction) {
        let n = self.n;
        assert_eq!(data.dim(), (n, n), "fft shape mismatch");
        assert!(n % 4 == 0, "centered fft needs n divisible by 4");
        let fft = match direction {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        if !data.is_standard_layout() {
            *data = data.as_standard_layout().to_owned();
        }
        let buf = data.as_slice_mut().expect("standard layout");
        checkerboard(buf, n, 1.0);
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        transpose(buf, &mut t, n);
        fft.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, buf, n);
        checkerboard(buf, n, 1.0 / n as f64);
    }
}

fn checkerboard(buf: &mut [Complex64], n: usize, scale: f64) {
    for (r, row) in buf.chunks_exact_mut(n).enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            if (r + c) % 2 == 1 {
                *v = -*v * scale;
            } else {
                *v *= scale;
            }
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for rb in (0..n).step_by(B) {
        for cb in (0..n).step_by(B) {
            for r in rb..(rb + B).min(n) {
                for c in cb..(cb + B).min(n) {
                    dst[c * n + r] = src[r * n + c];
                }
            }
        }
    }
}

/// Shared plan for size `n`; plans are cached for the life of the process.
pub fn plan(n: usize) -> Arc<Fft2> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(Fft2::new(n))).clone()
}

pub fn fft2(data: &mut Array2<Complex64>, direction: Direction) {
    plan(data.nrows()).process(data, direction);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(data: &Array2<Complex64>, sign: f64) -> Array2<Complex64> {
        let n = data.nrows();
        let h = (n / 2) as f64;
        let mut out = Array2::zeros((n, n));
        for ((kr, kc), o) in out.indexed_iter_mut() {
            let mut acc = Complex64::new(0.0, 0.0);
            for ((r, c), v) in data.indexed_iter() {
                let ph = sign * 2.0 * std::f64::consts::PI
                    * ((kr as f64 - h) * (r as f64 - h) + (kc as f64 - h) * (c as f64 - h))
                    / n as f64;
                acc += v * Complex64::from_polar(1.0, ph);
            }
            *o = acc / n as f64;
        }
        out
    }

    #[test]
    fn matches_direct_centered_sum() {
        let n = 16;
        let data = Array2::from_shape_fn((n, n), |(r, c)| {
            Complex64::new((r as f64 * 0.37).sin() + c as f64 * 0.1, (c as f64 * 0.61).cos())
        });
        let expected = naive(&data, -1.0);
        let mut got = data.clone();
        fft2(&mut got, Direction::Forward);
        for (a, b) in got.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        fft2(&mut got, Direction::Inverse);
        for (a, b) in got.iter().zip(data.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn delta_at_center_is_flat() {
        let n = 32;
        let mut d = Array2::zeros((n, n));
        d[[n / 2, n / 2]] = Complex64::new(1.0, 0.0);
        fft2(&mut d, Direction::Forward);
        for v in d.iter() {
            assert!((v - Complex64::new(1.0 / n as f64, 0.0)).norm() < 1e-15);
        }
    }
}
