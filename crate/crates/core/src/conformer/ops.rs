//! Primitive layers shared by the conformer modules, each a forward that
//! returns a cache and a backward that consumes it.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::{gemm, sigmoid, Op, Scalar};

use super::params::{LinearSlots, NormSlots};

pub(crate) const NORM_EPS: f64 = 1e-5;

/// Training flag plus the dropout stream.
pub(crate) struct Pass {
    pub training: bool,
    pub rate: f64,
    pub rng: Option<ChaCha8Rng>,
    /// Keep attention weights for a later backward pass.
    pub record: bool,
}

impl Pass {
    /// Scales `x` by a fresh keep mask, returning the mask; identity when
    /// dropout is inactive.
    pub fn dropout<F: Scalar>(&mut self, x: &mut [F]) -> Option<Vec<F>> {
        let rng = match (&mut self.rng, self.training && self.rate > 0.0) {
            (Some(rng), true) => rng,
            _ => return None,
        };
        let keep = F::of(1.0 / (1.0 - self.rate));
        let mask: Vec<F> = x
            .iter()
            .map(|_| if rng.random::<f64>() < self.rate { F::zero() } else { keep })
            .collect();
        for (v, &m) in x.iter_mut().zip(&mask) {
            *v *= m;
        }
        Some(mask)
    }
}

pub(crate) fn dropout_backward<F: Scalar>(dy: &mut [F], mask: &Option<Vec<F>>) {
    if let Some(mask) = mask {
        for (g, &m) in dy.iter_mut().zip(mask) {
            *g *= m;
        }
    }
}

pub(crate) fn linear<F: Scalar>(values: &[F], s: &LinearSlots, x: &[F], rows: usize) -> Vec<F> {
    let bias = &values[s.b.range()];
    let mut y = Vec::with_capacity(rows * s.n_out);
    for _ in 0..rows {
        y.extend_from_slice(bias);
    }
    gemm(rows, s.n_in, s.n_out, F::one(), x, Op::N, &values[s.w.range()], Op::N, F::one(), &mut y);
    y
}

/// Accumulates weight and bias gradients and returns the input gradient.
pub(crate) fn linear_backward<F: Scalar>(
    values: &[F],
    grads: &mut [F],
    s: &LinearSlots,
    x: &[F],
    dy: &[F],
    rows: usize,
) -> Vec<F> {
    gemm(s.n_in, rows, s.n_out, F::one(), x, Op::T, dy, Op::N, F::one(), &mut grads[s.w.range()]);
    let db = &mut grads[s.b.range()];
    for r in 0..rows {
        for (g, &v) in db.iter_mut().zip(&dy[r * s.n_out..(r + 1) * s.n_out]) {
            *g += v;
        }
    }
    let mut dx = vec![F::zero(); rows * s.n_in];
    gemm(rows, s.n_out, s.n_in, F::one(), dy, Op::N, &values[s.w.range()], Op::T, F::zero(), &mut dx);
    dx
}

pub(crate) struct NormCache<F> {
    xhat: Vec<F>,
    inv_std: Vec<F>,
}

pub(crate) fn layer_norm<F: Scalar>(values: &[F], s: &NormSlots, x: &[F], rows: usize) -> (Vec<F>, NormCache<F>) {
    let d = s.dim;
    let gamma = &values[s.gamma.range()];
    let beta = &values[s.beta.range()];
    let eps = F::of(NORM_EPS);
    let n = F::of(d as f64);
    let mut y = vec![F::zero(); rows * d];
    let mut xhat = vec![F::zero(); rows * d];
    let mut inv_std = vec![F::zero(); rows];
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        let mean = row.iter().fold(F::zero(), |a, &v| a + v) / n;
        let var = row.iter().fold(F::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
        let is = F::one() / (var + eps).sqrt();
        inv_std[r] = is;
        for c in 0..d {
            let h = (row[c] - mean) * is;
            xhat[r * d + c] = h;
            y[r * d + c] = gamma[c] * h + beta[c];
        }
    }
    (y, NormCache { xhat, inv_std })
}

pub(crate) fn layer_norm_backward<F: Scalar>(
    values: &[F],
    grads: &mut [F],
    s: &NormSlots,
    cache: &NormCache<F>,
    dy: &[F],
    rows: usize,
) -> Vec<F> {
    let d = s.dim;
    let n = F::of(d as f64);
    let gamma = &values[s.gamma.range()];
    let mut dx = vec![F::zero(); rows * d];
    let mut dxhat = vec![F::zero(); d];
    for r in 0..rows {
        let xh = &cache.xhat[r * d..(r + 1) * d];
        let g = &dy[r * d..(r + 1) * d];
        let mut sum = F::zero();
        let mut dot = F::zero();
        for c in 0..d {
            grads[s.gamma.offset + c] += g[c] * xh[c];
            grads[s.beta.offset + c] += g[c];
            dxhat[c] = g[c] * gamma[c];
            sum += dxhat[c];
            dot += dxhat[c] * xh[c];
        }
        let scale = cache.inv_std[r] / n;
        for c in 0..d {
            dx[r * d + c] = scale * (n * dxhat[c] - sum - xh[c] * dot);
        }
    }
    dx
}

pub(crate) fn swish_in_place<F: Scalar>(x: &mut [F]) {
    for v in x {
        *v = *v * sigmoid(*v);
    }
}

/// `dy` times the derivative of Swish at the pre-activation `x`.
pub(crate) fn swish_backward<F: Scalar>(x: &[F], dy: &mut [F]) {
    for (g, &v) in dy.iter_mut().zip(x) {
        let s = sigmoid(v);
        *g *= s + v * s * (F::one() - s);
    }
}

pub(crate) fn add_into<F: Scalar>(acc: &mut [F], other: &[F]) {
    for (a, &b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

pub(crate) fn add_scaled_into<F: Scalar>(acc: &mut [F], other: &[F], scale: F) {
    for (a, &b) in acc.iter_mut().zip(other) {
        *a += scale * b;
    }
}
