//! Discrete Fourier transforms between the momentum and angle representations.

use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, sin};
use num_complex::Complex64;

use crate::{Error, Result, TWO_PI};

/// An unnormalised complex DFT of fixed length.
///
/// `forward` computes `X_k = Σ_l x_l e^{-2πi kl/N}` and `backward` the same
/// sum with `e^{+2πi kl/N}`; neither scales by `1/N`.
pub trait SpectralTransform {
    fn len(&self) -> usize;

    /// Scratch length required by [`forward`](Self::forward) and
    /// [`backward`](Self::backward).
    fn scratch_len(&self) -> usize {
        0
    }

    fn forward(&self, buffer: &mut [Complex64], scratch: &mut [Complex64]);

    fn backward(&self, buffer: &mut [Complex64], scratch: &mut [Complex64]);
}

impl<T: SpectralTransform + ?Sized> SpectralTransform for &T {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn scratch_len(&self) -> usize {
        (**self).scratch_len()
    }
    fn forward(&self, buffer: &mut [Complex64], scratch: &mut [Complex64]) {
        (**self).forward(buffer, scratch)
    }
    fn backward(&self, buffer: &mut [Complex64], scratch: &mut [Complex64]) {
        (**self).backward(buffer, scratch)
    }
}

/// In-place iterative radix-2 Cooley-Tukey transform.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    len: usize,
    log2: u32,
    /// `e^{-2πi k/N}` for `k < N/2`.
    twiddles: Vec<Complex64>,
}

impl Radix2Fft {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::invalid("len", len as f64, "must be a power of two"));
        }
        let twiddles = (0..len / 2)
            .map(|k| {
                let a = -TWO_PI * k as f64 / len as f64;
                Complex64::new(cos(a), sin(a))
            })
            .collect();
        Ok(Radix2Fft {
            len,
            log2: len.trailing_zeros(),
            twiddles,
        })
    }

    fn bit_reverse(&self, buffer: &mut [Complex64]) {
        if self.log2 == 0 {
            return;
        }
        let shift = usize::BITS - self.log2;
        for i in 0..self.len {
            let j = i.reverse_bits() >> shift;
            if j > i {
                buffer.swap(i, j);
            }
        }
    }

    fn transform(&self, buffer: &mut [Complex64], inverse: bool) {
        assert_eq!(buffer.len(), self.len, "buffer length mismatch");
        self.bit_reverse(buffer);
        let n = self.len;
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let w = if inverse { w.conj() } else { w };
                    let a = buffer[start + k];
                    let b = buffer[start + k + half] * w;
                    buffer[start + k] = a + b;
                    buffer[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

impl SpectralTransform for Radix2Fft {
    fn len(&self) -> usize {
        self.len
    }

    fn forward(&self, buffer: &mut [Complex64], _scratch: &mut [Complex64]) {
        self.transform(buffer, false);
    }

    fn backward(&self, buffer: &mut [Complex64], _scratch: &mut [Complex64]) {
        self.transform(buffer, true);
    }
}

/// Direct `O(N²)` DFT; reference for tests and tiny sizes.
pub fn naive_dft(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, o) in out.iter_mut().enumerate() {
        for (l, x) in input.iter().enumerate() {
            let a = sign * TWO_PI * ((k * l) % n) as f64 / n as f64;
            *o += x * Complex64::new(cos(a), sin(a));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Radix2Fft::new(12).is_err());
        assert!(Radix2Fft::new(0).is_err());
        assert!(Radix2Fft::new(1).is_ok());
    }

    #[test]
    fn single_mode() {
        let fft = Radix2Fft::new(16).unwrap();
        let mut buf = vec![Complex64::new(0.0, 0.0); 16];
        buf[3] = Complex64::new(1.0, 0.0);
        fft.backward(&mut buf, &mut []);
        for (l, x) in buf.iter().enumerate() {
            let a = TWO_PI * 3.0 * l as f64 / 16.0;
            assert!((x - Complex64::new(cos(a), sin(a))).norm() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn matches_naive_dft(log2 in 0u32..7, seed in proptest::collection::vec(-1.0f64..1.0, 256)) {
            let n = 1usize << log2;
            let input: Vec<Complex64> = (0..n).map(|i| Complex64::new(seed[2 * i], seed[2 * i + 1])).collect();
            let fft = Radix2Fft::new(n).unwrap();
            for inverse in [false, true] {
                let mut buf = input.clone();
                if inverse { fft.backward(&mut buf, &mut []) } else { fft.forward(&mut buf, &mut []) }
                let reference = naive_dft(&input, inverse);
                prop_assert!(max_diff(&buf, &reference) < 1e-12);
            }
        }

        #[test]
        fn round_trip(log2 in 1u32..10, seed in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let n = 1usize << log2;
            let input: Vec<Complex64> = (0..n).map(|i| Complex64::new(seed[i % 8] + i as f64 * 1e-3, seed[(i + 3) % 8])).collect();
            let fft = Radix2Fft::new(n).unwrap();
            let mut buf = input.clone();
            fft.forward(&mut buf, &mut []);
            fft.backward(&mut buf, &mut []);
            for x in buf.iter_mut() { *x /= n as f64; }
            prop_assert!(max_diff(&buf, &input) < 1e-12);
        }
    }
}
