//! FFT-backed [`Dft`] for the conservation check.

use num_complex::Complex64;
use rustfft::FftPlanner;

use equispin_core::coherence::Dft;

#[derive(Debug, Clone, Copy, Default)]
pub struct RustFft;

impl Dft for RustFft {
    fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut buf = input.to_vec();
        FftPlanner::<f64>::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use equispin_core::coherence::DirectDft;

    #[test]
    fn agrees_with_direct_transform() {
        let x: Vec<Complex64> = (0..37)
            .map(|i| Complex64::new((i as f64 * 0.3).sin(), (i as f64).sqrt()))
            .collect();
        let a = RustFft.forward(&x);
        let b = DirectDft.forward(&x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-10);
        }
    }
}
