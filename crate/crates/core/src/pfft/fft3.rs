//! Three-dimensional FFT on an x-fastest contiguous buffer, built from 1D
//! rustfft plans applied along each axis. Lines are independent, so each
//! axis pass parallelizes over lines.

use crate::Scalar;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft3<T: Scalar> {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<T>>; 3],
    inverse: [Arc<dyn Fft<T>>; 3],
}

/// Shared mutable base pointer for disjoint strided line access.
struct SyncPtr<T>(*mut T);
unsafe impl<T> Sync for SyncPtr<T> {}
unsafe impl<T> Send for SyncPtr<T> {}

impl<T: Scalar> Fft3<T> {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = [
            planner.plan_fft_forward(dims[0]),
            planner.plan_fft_forward(dims[1]),
            planner.plan_fft_forward(dims[2]),
        ];
        let inverse = [
            planner.plan_fft_inverse(dims[0]),
            planner.plan_fft_inverse(dims[1]),
            planner.plan_fft_inverse(dims[2]),
        ];
        Fft3 {
            dims,
            forward,
            inverse,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, true);
    }

    /// Unnormalized inverse (the kernel spectrum absorbs the 1/N factor).
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.transform(buf, false);
    }

    fn transform(&self, buf: &mut [Complex<T>], fwd: bool) {
        assert_eq!(buf.len(), self.len());
        let [nx, ny, _] = self.dims;
        let plans = if fwd { &self.forward } else { &self.inverse };
        // x axis: contiguous lines
        buf.par_chunks_mut(nx).for_each_init(
            || vec![Complex::new(T::zero(), T::zero()); plans[0].get_inplace_scratch_len()],
            |scratch, line| plans[0].process_with_scratch(line, scratch),
        );
        // y axis: stride nx, lines indexed by (z, x)
        self.strided_pass(buf, &plans[1], self.dims[1], |line| {
            let (z, x) = (line / nx, line % nx);
            (z * nx * ny + x, nx)
        });
        // z axis: stride nx*ny, lines indexed by (y, x)
        self.strided_pass(buf, &plans[2], self.dims[2], |line| {
            let (y, x) = (line / nx, line % nx);
            (y * nx + x, nx * ny)
        });
    }

    fn strided_pass<F>(
        &self,
        buf: &mut [Complex<T>],
        plan: &Arc<dyn Fft<T>>,
        n: usize,
        line_of: F,
    ) where
        F: Fn(usize) -> (usize, usize) + Sync,
    {
        let [nx, ny, nz] = self.dims;
        let n_lines = (nx * ny * nz) / n;
        let base = SyncPtr(buf.as_mut_ptr());
        let base_ref = &base;
        (0..n_lines).into_par_iter().for_each_init(
            || {
                (
                    vec![Complex::new(T::zero(), T::zero()); n],
                    vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()],
                )
            },
            |(line, scratch), l| {
                let (start, stride) = line_of(l);
                // Safety: for each axis pass the (start, stride) pairs of all
                // lines address pairwise disjoint index sets covering the
                // buffer, so concurrent access is race-free.
                unsafe {
                    let p = base_ref.0;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = *p.add(start + k * stride);
                    }
                    plan.process_with_scratch(line, scratch);
                    for (k, v) in line.iter().enumerate() {
                        *p.add(start + k * stride) = *v;
                    }
                }
            },
        );
    }
}

/// Smallest 2^a·3^b·5^c ≥ n (FFT-friendly size).
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
