//! Block-wise evaluation of emitter contributions.
//!
//! The record is cut into fixed blocks of [`BLOCK_LEN`] samples. Inside a
//! block every sinusoid is anchored once with an exact `sin_cos`/`exp` and
//! then advanced with a four-lane Chebyshev recurrence
//! `s[k + 4] = 2 cos(4θ) s[k] - s[k - 4]` (and, for pulses, a multiplicative
//! Gaussian recurrence). Anchor positions depend only on the block grid and
//! segment boundaries, never on how blocks are scheduled across threads, and
//! each block adds emitters in the order they are given. The output is
//! therefore bit-identical for any thread count.

use rayon::prelude::*;

use super::SimulationGrid;

/// Samples per block; also the longest stretch a recurrence runs unanchored.
pub const BLOCK_LEN: usize = 2048;

/// Per-frequency constants for the lane recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Rotation {
    cos: [f64; 8],
    sin: [f64; 8],
    cheb: f64,
}

impl Rotation {
    /// `theta` is the phase advance per sample (ω·dt).
    pub(crate) fn new(theta: f64) -> Self {
        let mut cos = [0.0; 8];
        let mut sin = [0.0; 8];
        for j in 0..8 {
            let (s, c) = (j as f64 * theta).sin_cos();
            cos[j] = c;
            sin[j] = s;
        }
        Self {
            cos,
            sin,
            cheb: 2.0 * (4.0 * theta).cos(),
        }
    }

    /// Lane values `amp·sin(phase0 + jθ)` for j = 0..8.
    #[inline]
    fn lanes(&self, amp: f64, phase0: f64) -> ([f64; 4], [f64; 4]) {
        let (s, c) = phase0.sin_cos();
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        for j in 0..4 {
            a[j] = amp * (s * self.cos[j] + c * self.sin[j]);
            b[j] = amp * (s * self.cos[j + 4] + c * self.sin[j + 4]);
        }
        (a, b)
    }
}

/// Adds `amp·sin(phase0 + kθ)` to `out[k]`.
pub(crate) fn add_sine(out: &mut [f64], amp: f64, phase0: f64, rot: &Rotation) {
    let (mut a, mut b) = rot.lanes(amp, phase0);
    let cheb = rot.cheb;
    let mut chunks = out.chunks_exact_mut(4);
    for chunk in &mut chunks {
        let mut next = [0.0; 4];
        for j in 0..4 {
            chunk[j] += a[j];
            next[j] = cheb * b[j] - a[j];
        }
        a = b;
        b = next;
    }
    for (o, v) in chunks.into_remainder().iter_mut().zip(a) {
        *o += v;
    }
}

/// Adds `amp·exp(-(x_k/C)²)·sin(phase0 + kθ)` to `out[k]`, where
/// `x_k = offset0 + k·dt` is the time relative to the pulse centre and
/// `inv_c2 = 1/C²`.
pub(crate) fn add_gaussian_sine(
    out: &mut [f64],
    amp: f64,
    phase0: f64,
    rot: &Rotation,
    offset0: f64,
    dt: f64,
    inv_c2: f64,
) {
    let (mut a, mut b) = rot.lanes(amp, phase0);
    let cheb = rot.cheb;
    let mut g = [0.0; 4];
    let mut ratio = [0.0; 4];
    for j in 0..4 {
        let x = offset0 + j as f64 * dt;
        g[j] = (-x * x * inv_c2).exp();
        // g(x + 4dt) / g(x)
        ratio[j] = (-(8.0 * dt * x + 16.0 * dt * dt) * inv_c2).exp();
    }
    let q = (-32.0 * dt * dt * inv_c2).exp();

    let mut chunks = out.chunks_exact_mut(4);
    for chunk in &mut chunks {
        let mut next = [0.0; 4];
        for j in 0..4 {
            chunk[j] += g[j] * a[j];
            g[j] *= ratio[j];
            ratio[j] *= q;
            next[j] = cheb * b[j] - a[j];
        }
        a = b;
        b = next;
    }
    for ((o, v), e) in chunks.into_remainder().iter_mut().zip(a).zip(g) {
        *o += e * v;
    }
}

/// Something that can add its field to one block of the record.
pub(crate) trait BlockSource: Sync {
    /// Adds this source's samples for steps `start..start + out.len()`.
    fn add_block(&self, grid: &SimulationGrid, start: usize, out: &mut [f64]);
}

/// Adds every source to `out`, sources in slice order at every sample.
pub(crate) fn render<S: BlockSource>(grid: &SimulationGrid, sources: &[S], out: &mut [f64]) {
    debug_assert_eq!(out.len(), grid.n_samples);
    out.par_chunks_mut(BLOCK_LEN)
        .enumerate()
        .for_each(|(b, chunk)| {
            let start = b * BLOCK_LEN;
            for source in sources {
                source.add_block(grid, start, chunk);
            }
        });
}
