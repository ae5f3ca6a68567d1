//! FFT-based linear convolution and correlation of real sequences.

use num_complex::Complex64;
use realfft::RealFftPlanner;

pub(crate) struct FftConv {
    n: usize,
    planner: RealFftPlanner<f64>,
}

impl FftConv {
    /// Plans transforms long enough to hold `min_len` samples without wrap-around.
    pub(crate) fn new(min_len: usize) -> Self {
        Self { n: min_len.max(2).next_power_of_two(), planner: RealFftPlanner::new() }
    }

    pub(crate) fn spectrum(&mut self, x: &[f64]) -> Vec<Complex64> {
        let fft = self.planner.plan_fft_forward(self.n);
        let mut input = fft.make_input_vec();
        input[..x.len()].copy_from_slice(x);
        let mut out = fft.make_output_vec();
        fft.process(&mut input, &mut out).expect("sizes fixed by plan");
        out
    }

    fn inverse(&mut self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let ifft = self.planner.plan_fft_inverse(self.n);
        spec[0].im = 0.0;
        let last = spec.len() - 1;
        spec[last].im = 0.0;
        let mut out = ifft.make_output_vec();
        ifft.process(&mut spec, &mut out).expect("sizes fixed by plan");
        let scale = 1.0 / self.n as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    /// `out(j) = sum_n b(n) a(n - j)` for `j < lags`.
    pub(crate) fn cross(&mut self, a: &[f64], b: &[f64], lags: usize) -> Vec<f64> {
        let fa = self.spectrum(a);
        let fb = self.spectrum(b);
        let prod = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
        let mut out = self.inverse(prod);
        out.truncate(lags);
        out
    }

    /// Full linear convolution, length `a.len() + b.len() - 1`.
    pub(crate) fn convolve(&mut self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let fa = self.spectrum(a);
        self.convolve_with_spectrum(&fa, a.len(), b)
    }

    pub(crate) fn convolve_with_spectrum(&mut self, fa: &[Complex64], a_len: usize, b: &[f64]) -> Vec<f64> {
        let fb = self.spectrum(b);
        let prod = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
        let mut out = self.inverse(prod);
        out.truncate(a_len + b.len() - 1);
        out
    }
}
