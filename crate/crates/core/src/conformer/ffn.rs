//! Feed-forward module: LN, expand, Swish, dropout, project, dropout.

use alloc::vec::Vec;

use crate::tensor::Scalar;

use super::ops::{
    dropout_backward, layer_norm, layer_norm_backward, linear, linear_backward, swish_backward, swish_in_place,
    NormCache, Pass,
};
use super::params::FfnSlots;

pub(crate) struct FfnCache<F> {
    norm: NormCache<F>,
    normed: Vec<F>,
    pre: Vec<F>,
    hidden: Vec<F>,
    mask_hidden: Option<Vec<F>>,
    mask_out: Option<Vec<F>>,
}

pub(crate) fn forward<F: Scalar>(
    values: &[F],
    s: &FfnSlots,
    x: &[F],
    rows: usize,
    pass: &mut Pass,
) -> (Vec<F>, FfnCache<F>) {
    let (normed, norm) = layer_norm(values, &s.norm, x, rows);
    let pre = linear(values, &s.up, &normed, rows);
    let mut hidden = pre.clone();
    swish_in_place(&mut hidden);
    let mask_hidden = pass.dropout(&mut hidden);
    let mut out = linear(values, &s.down, &hidden, rows);
    let mask_out = pass.dropout(&mut out);
    (out, FfnCache { norm, normed, pre, hidden, mask_hidden, mask_out })
}

pub(crate) fn backward<F: Scalar>(
    values: &[F],
    grads: &mut [F],
    s: &FfnSlots,
    cache: &FfnCache<F>,
    dy: &[F],
    rows: usize,
) -> Vec<F> {
    let mut dy = dy.to_vec();
    dropout_backward(&mut dy, &cache.mask_out);
    let mut dh = linear_backward(values, grads, &s.down, &cache.hidden, &dy, rows);
    dropout_backward(&mut dh, &cache.mask_hidden);
    swish_backward(&cache.pre, &mut dh);
    let dn = linear_backward(values, grads, &s.up, &cache.normed, &dh, rows);
    layer_norm_backward(values, grads, &s.norm, &cache.norm, &dn, rows)
}
