//! Thin FFT helpers over `rustfft` with a per-thread planner cache and the
//! scaling convention used throughout the crate: `ifft(fft(x)) == x`, i.e. the
//! inverse transform carries the `1/N` factor.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT (no normalization).
pub fn fft_in_place(buf: &mut [Complex64]) {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(buf.len());
        fft.process(buf);
    });
}

/// In-place inverse DFT, scaled by `1/N` so it inverts [`fft_in_place`].
pub fn ifft_in_place(buf: &mut [Complex64]) {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_inverse(buf.len());
        fft.process(buf);
    });
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// DFT bin frequencies in Hz for an `n`-point transform at `sample_rate`,
/// in standard FFT order: nonnegative bins first, then the negative half.
pub fn bin_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n)
        .map(|k| {
            let k = if k <= (n - 1) / 2 {
                k as isize
            } else {
                k as isize - n as isize
            };
            k as f64 * df
        })
        .collect()
}

/// Angular DFT bin frequencies `ω_k = 2π f_k` in rad/s.
pub fn angular_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    bin_frequencies(n, sample_rate)
        .into_iter()
        .map(|f| 2.0 * std::f64::consts::PI * f)
        .collect()
}
