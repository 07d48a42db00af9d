//! One conformer block: half-step FFN, attention, convolution, half-step FFN,
//! final layer norm.

use alloc::vec::Vec;

use crate::tensor::Scalar;

use super::conv::{self, ConvCache};
use super::ffn::{self, FfnCache};
use super::mhsa::{self, MhsaCache, Shape};
use super::ops::{add_into, add_scaled_into, layer_norm, layer_norm_backward, NormCache, Pass};
use super::params::BlockSlots;

pub(crate) struct BlockCache<F> {
    ffn1: FfnCache<F>,
    mhsa: MhsaCache<F>,
    pub conv: ConvCache<F>,
    ffn2: FfnCache<F>,
    norm: NormCache<F>,
}

pub(crate) fn forward<F: Scalar>(
    values: &[F],
    buffers: &[F],
    s: &BlockSlots,
    z: &[F],
    shape: &Shape,
    pass: &mut Pass,
) -> (Vec<F>, BlockCache<F>) {
    let rows = shape.batch * shape.seq_len;
    let half = F::of(0.5);
    let (f1, ffn1) = ffn::forward(values, &s.ffn1, z, rows, pass);
    let mut x = z.to_vec();
    add_scaled_into(&mut x, &f1, half);
    let (a, mhsa) = mhsa::forward(values, &s.mhsa, &x, shape, pass);
    add_into(&mut x, &a);
    let (c, conv) = conv::forward(values, buffers, &s.conv, &x, shape.batch, shape.seq_len, pass);
    add_into(&mut x, &c);
    let (f2, ffn2) = ffn::forward(values, &s.ffn2, &x, rows, pass);
    add_scaled_into(&mut x, &f2, half);
    let (out, norm) = layer_norm(values, &s.final_norm, &x, rows);
    (out, BlockCache { ffn1, mhsa, conv, ffn2, norm })
}

pub(crate) fn backward<F: Scalar>(
    values: &[F],
    grads: &mut [F],
    s: &BlockSlots,
    cache: &BlockCache<F>,
    dy: &[F],
    shape: &Shape,
) -> Vec<F> {
    let rows = shape.batch * shape.seq_len;
    let half = F::of(0.5);
    let mut dx = layer_norm_backward(values, grads, &s.final_norm, &cache.norm, dy, rows);
    let scaled: Vec<F> = dx.iter().map(|&g| g * half).collect();
    let d = ffn::backward(values, grads, &s.ffn2, &cache.ffn2, &scaled, rows);
    add_into(&mut dx, &d);
    let d = conv::backward(values, grads, &s.conv, &cache.conv, &dx, shape.batch, shape.seq_len);
    add_into(&mut dx, &d);
    let d = mhsa::backward(values, grads, &s.mhsa, &cache.mhsa, &dx, shape);
    add_into(&mut dx, &d);
    let scaled: Vec<F> = dx.iter().map(|&g| g * half).collect();
    let d = ffn::backward(values, grads, &s.ffn1, &cache.ffn1, &scaled, rows);
    add_into(&mut dx, &d);
    dx
}
