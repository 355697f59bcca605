//! Two-dimensional discrete Fourier transforms on row-major grids.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

fn transpose(src: &[Complex64], n1: usize, n2: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    out.par_chunks_mut(n1).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = src[i * n2 + j];
        }
    });
    out
}

fn rows_in_place(data: &mut [Complex64], len: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    data.par_chunks_mut(len).for_each(|row| fft.process(row));
}

/// Unnormalized forward transform `X[m] = sum_n x[n] exp(-2 pi i m.n / N)`.
pub fn fft2(data: &mut Vec<Complex64>, n1: usize, n2: usize) {
    transform(data, n1, n2, false)
}

/// Unnormalized inverse transform (positive exponent).
pub fn ifft2(data: &mut Vec<Complex64>, n1: usize, n2: usize) {
    transform(data, n1, n2, true)
}

fn transform(data: &mut Vec<Complex64>, n1: usize, n2: usize, inverse: bool) {
    assert_eq!(data.len(), n1 * n2, "grid shape mismatch");
    rows_in_place(data, n2, inverse);
    let mut t = transpose(data, n1, n2);
    rows_in_place(&mut t, n1, inverse);
    *data = transpose(&t, n2, n1);
}
