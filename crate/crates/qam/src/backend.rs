//! `rustfft` implementation of the core's spectral transform.

use std::fmt;
use std::sync::Arc;

use qam_core::fft::SpectralTransform;
use qam_core::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned forward/inverse pair of one length.
#[derive(Clone)]
pub struct RustFft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: usize,
}

impl RustFft {
    pub fn new(len: usize) -> Self {
        Self::plan(&mut FftPlanner::new(), len)
    }

    fn plan(planner: &mut FftPlanner<f64>, len: usize) -> Self {
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        RustFft {
            forward,
            inverse,
            scratch,
        }
    }
}

/// Transforms of every power-of-two length from 64 (or `max_len` if smaller)
/// up to `max_len`, for an adaptive propagator.
pub fn transform_ladder(max_len: usize) -> Vec<RustFft> {
    let mut planner = FftPlanner::new();
    let mut lens = vec![max_len];
    let mut m = max_len / 2;
    while m >= 64 {
        lens.push(m);
        m /= 2;
    }
    lens.into_iter()
        .rev()
        .map(|len| RustFft::plan(&mut planner, len))
        .collect()
}

impl fmt::Debug for RustFft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RustFft").field("len", &self.forward.len()).finish()
    }
}

impl SpectralTransform for RustFft {
    fn len(&self) -> usize {
        self.forward.len()
    }

    fn scratch_len(&self) -> usize {
        self.scratch
    }

    fn forward(&self, buffer: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buffer, scratch);
    }

    fn backward(&self, buffer: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buffer, scratch);
    }
}
