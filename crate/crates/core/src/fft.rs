//! Two-dimensional complex FFT on row-major buffers.
//!
//! Plans are created per call, so nothing is shared between concurrent
//! correlations.

use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftDirection, FftPlanner};

/// In-place 2D transform of a `rows x cols` row-major buffer. The inverse is
/// unnormalized, like `rustfft`.
pub(crate) fn fft2d(data: &mut [Complex64], rows: usize, cols: usize, direction: FftDirection) {
    assert_eq!(data.len(), rows * cols);
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(cols, direction);
    let col_fft = planner.plan_fft(rows, direction);

    data.par_chunks_mut(cols).for_each_init(
        || vec![Complex64::default(); row_fft.get_inplace_scratch_len()],
        |scratch, row| row_fft.process_with_scratch(row, scratch),
    );

    let mut transposed = transpose(data, rows, cols);
    transposed.par_chunks_mut(rows).for_each_init(
        || vec![Complex64::default(); col_fft.get_inplace_scratch_len()],
        |scratch, col| col_fft.process_with_scratch(col, scratch),
    );
    let back = transpose(&transposed, cols, rows);
    data.copy_from_slice(&back);
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); src.len()];
    out.par_chunks_mut(rows).enumerate().for_each(|(c, dst)| {
        for (r, d) in dst.iter_mut().enumerate() {
            *d = src[r * cols + c];
        }
    });
    out
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub(crate) fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_recovers_input() {
        let (rows, cols) = (6, 10);
        let input: Vec<Complex64> = (0..rows * cols)
            .map(|i| Complex64::new(i as f64 * 0.5, (i % 7) as f64))
            .collect();
        let mut data = input.clone();
        fft2d(&mut data, rows, cols, FftDirection::Forward);
        fft2d(&mut data, rows, cols, FftDirection::Inverse);
        let n = (rows * cols) as f64;
        for (a, b) in data.iter().zip(&input) {
            assert!((a / n - b).norm() < 1e-10);
        }
    }

    #[test]
    fn dc_term_is_the_sum() {
        let mut data = vec![Complex64::new(1.0, 0.0); 12];
        fft2d(&mut data, 3, 4, FftDirection::Forward);
        assert!((data[0].re - 12.0).abs() < 1e-12);
        assert!(data[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_len(451), 480);
        assert_eq!(fast_len(7200), 7200);
        assert_eq!(fast_len(7), 8);
        assert_eq!(fast_len(0), 1);
    }
}
