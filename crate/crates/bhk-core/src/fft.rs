//! Thin n-dimensional FFT layer over `rustfft`, with plan caching.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// In-place unnormalized DFT over every axis of a row-major (x fastest)
/// hypercube with `n_axes` axes of length `size`.
pub fn transform_nd(data: &mut [Complex64], n_axes: usize, size: usize, inverse: bool) {
    debug_assert_eq!(data.len(), size.pow(n_axes as u32));
    let fft = plan(size, inverse);
    let mut line = vec![Complex64::default(); size];
    for axis in 0..n_axes {
        let stride = size.pow(axis as u32);
        let lines = data.len() / size;
        for l in 0..lines {
            // Start offset of the l-th line along `axis`.
            let block = l / stride;
            let rem = l % stride;
            let base = block * stride * size + rem;
            if stride == 1 {
                fft.process(&mut data[base..base + size]);
            } else {
                for i in 0..size {
                    line[i] = data[base + i * stride];
                }
                fft.process(&mut line);
                for i in 0..size {
                    data[base + i * stride] = line[i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_round_trip() {
        let n = 16usize;
        let mut data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), 0.0))
            .collect();
        let orig = data.clone();
        transform_nd(&mut data, 2, n, false);
        transform_nd(&mut data, 2, n, true);
        let scale = 1.0 / (n * n) as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a * scale - b).norm() < 1e-12);
        }
    }
}
