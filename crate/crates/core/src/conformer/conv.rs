//! Convolution module: LN, pointwise to 2d, GLU, depthwise conv, batch norm,
//! Swish, pointwise back to d, dropout.

use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::{sigmoid, Scalar};

use super::ops::{
    dropout_backward, layer_norm, layer_norm_backward, linear, linear_backward, swish_backward, swish_in_place,
    NormCache, Pass, NORM_EPS,
};
use super::params::ConvSlots;

pub(crate) const BN_MOMENTUM: f64 = 0.1;

/// Batch mean and unbiased variance per channel, for the running averages.
pub(crate) struct BatchStats<F> {
    pub mean: Vec<F>,
    pub var: Vec<F>,
}

pub(crate) struct ConvCache<F> {
    norm: NormCache<F>,
    normed: Vec<F>,
    expanded: Vec<F>,
    gated: Vec<F>,
    xhat: Vec<F>,
    inv_std: Vec<F>,
    batch_stats: bool,
    bn_out: Vec<F>,
    activated: Vec<F>,
    mask: Option<Vec<F>>,
    pub stats: Option<BatchStats<F>>,
}

/// Same-padded per-channel convolution within each segment.
pub(crate) fn depthwise<F: Scalar>(y: &[F], weight: &[F], bias: &[F], d: usize, batch: usize, t: usize) -> Vec<F> {
    let k = weight.len() / d;
    let half = (k / 2) as isize;
    let mut z = vec![F::zero(); batch * t * d];
    for b in 0..batch {
        for i in 0..t {
            let out = &mut z[(b * t + i) * d..(b * t + i + 1) * d];
            out.copy_from_slice(bias);
            for tap in 0..k {
                let src = i as isize + tap as isize - half;
                if src < 0 || src >= t as isize {
                    continue;
                }
                let inp = &y[(b * t + src as usize) * d..(b * t + src as usize + 1) * d];
                let w = &weight[tap * d..(tap + 1) * d];
                for c in 0..d {
                    out[c] += w[c] * inp[c];
                }
            }
        }
    }
    z
}

pub(crate) fn forward<F: Scalar>(
    values: &[F],
    buffers: &[F],
    s: &ConvSlots,
    x: &[F],
    batch: usize,
    t: usize,
    pass: &mut Pass,
) -> (Vec<F>, ConvCache<F>) {
    let rows = batch * t;
    let d = s.norm.dim;
    let (normed, norm) = layer_norm(values, &s.norm, x, rows);
    let expanded = linear(values, &s.pw_in, &normed, rows);
    let mut gated = vec![F::zero(); rows * d];
    for r in 0..rows {
        let (a, g) = expanded[r * 2 * d..(r + 1) * 2 * d].split_at(d);
        for c in 0..d {
            gated[r * d + c] = a[c] * sigmoid(g[c]);
        }
    }
    let z = depthwise(&gated, &values[s.dw_weight.range()], &values[s.dw_bias.range()], d, batch, t);

    let n = F::of(rows as f64);
    let (mean, var, stats) = if pass.training {
        let mut mean = vec![F::zero(); d];
        let mut var = vec![F::zero(); d];
        for r in 0..rows {
            for c in 0..d {
                mean[c] += z[r * d + c];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        for r in 0..rows {
            for c in 0..d {
                let e = z[r * d + c] - mean[c];
                var[c] += e * e;
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let unbiased = if rows > 1 { var.iter().map(|&v| v * n / (n - F::one())).collect() } else { var.clone() };
        let stats = BatchStats { mean: mean.clone(), var: unbiased };
        (mean, var, Some(stats))
    } else {
        (buffers[s.running_mean.range()].to_vec(), buffers[s.running_var.range()].to_vec(), None)
    };
    let inv_std: Vec<F> = var.iter().map(|&v| F::one() / (v + F::of(NORM_EPS)).sqrt()).collect();
    let gamma = &values[s.bn_gamma.range()];
    let beta = &values[s.bn_beta.range()];
    let mut xhat = vec![F::zero(); rows * d];
    let mut bn_out = vec![F::zero(); rows * d];
    for r in 0..rows {
        for c in 0..d {
            let h = (z[r * d + c] - mean[c]) * inv_std[c];
            xhat[r * d + c] = h;
            bn_out[r * d + c] = gamma[c] * h + beta[c];
        }
    }
    let mut activated = bn_out.clone();
    swish_in_place(&mut activated);
    let mut out = linear(values, &s.pw_out, &activated, rows);
    let mask = pass.dropout(&mut out);
    let cache = ConvCache {
        norm,
        normed,
        expanded,
        gated,
        xhat,
        inv_std,
        batch_stats: pass.training,
        bn_out,
        activated,
        mask,
        stats,
    };
    (out, cache)
}

pub(crate) fn backward<F: Scalar>(
    values: &[F],
    grads: &mut [F],
    s: &ConvSlots,
    cache: &ConvCache<F>,
    dy: &[F],
    batch: usize,
    t: usize,
) -> Vec<F> {
    let rows = batch * t;
    let d = s.norm.dim;
    let mut dy = dy.to_vec();
    dropout_backward(&mut dy, &cache.mask);
    let mut dbn = linear_backward(values, grads, &s.pw_out, &cache.activated, &dy, rows);
    swish_backward(&cache.bn_out, &mut dbn);

    let gamma = &values[s.bn_gamma.range()];
    let mut sum = vec![F::zero(); d];
    let mut dot = vec![F::zero(); d];
    for r in 0..rows {
        for c in 0..d {
            let g = dbn[r * d + c];
            let xh = cache.xhat[r * d + c];
            grads[s.bn_gamma.offset + c] += g * xh;
            grads[s.bn_beta.offset + c] += g;
            let dxh = g * gamma[c];
            sum[c] += dxh;
            dot[c] += dxh * xh;
        }
    }
    let n = F::of(rows as f64);
    let mut dz = vec![F::zero(); rows * d];
    for r in 0..rows {
        for c in 0..d {
            let dxh = dbn[r * d + c] * gamma[c];
            dz[r * d + c] = if cache.batch_stats {
                cache.inv_std[c] / n * (n * dxh - sum[c] - cache.xhat[r * d + c] * dot[c])
            } else {
                cache.inv_std[c] * dxh
            };
        }
    }

    let weight = &values[s.dw_weight.range()];
    let k = weight.len() / d;
    let half = (k / 2) as isize;
    let mut dgated = vec![F::zero(); rows * d];
    for r in 0..rows {
        for c in 0..d {
            grads[s.dw_bias.offset + c] += dz[r * d + c];
        }
    }
    for b in 0..batch {
        for i in 0..t {
            let g = &dz[(b * t + i) * d..(b * t + i + 1) * d];
            for tap in 0..k {
                let src = i as isize + tap as isize - half;
                if src < 0 || src >= t as isize {
                    continue;
                }
                let src = b * t + src as usize;
                for c in 0..d {
                    grads[s.dw_weight.offset + tap * d + c] += g[c] * cache.gated[src * d + c];
                    dgated[src * d + c] += weight[tap * d + c] * g[c];
                }
            }
        }
    }

    let mut dexp = vec![F::zero(); rows * 2 * d];
    for r in 0..rows {
        let (a, gate) = cache.expanded[r * 2 * d..(r + 1) * 2 * d].split_at(d);
        for c in 0..d {
            let sg = sigmoid(gate[c]);
            let g = dgated[r * d + c];
            dexp[r * 2 * d + c] = g * sg;
            dexp[r * 2 * d + d + c] = g * a[c] * sg * (F::one() - sg);
        }
    }
    let dn = linear_backward(values, grads, &s.pw_in, &cache.normed, &dexp, rows);
    layer_norm_backward(values, grads, &s.norm, &cache.norm, &dn, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_is_identity() {
        let d = 3;
        let mut weight = vec![0.0f64; 5 * d];
        weight[2 * d..3 * d].fill(1.0);
        let y: Vec<f64> = (0..4 * d).map(|i| i as f64 * 0.5 - 1.0).collect();
        let z = depthwise(&y, &weight, &[0.0; 3], d, 1, 4);
        assert_eq!(z, y);
    }

    #[test]
    fn same_padding_drops_out_of_segment_taps() {
        // kernel [1, 0, 0]: output i reads input i-1; first frame sees padding
        let d = 1;
        let weight = [1.0f64, 0.0, 0.0];
        let y = [1.0, 2.0, 3.0, 10.0, 20.0, 30.0];
        let z = depthwise(&y, &weight, &[0.0], d, 2, 3);
        assert_eq!(z, [0.0, 1.0, 2.0, 0.0, 10.0, 20.0]);
    }
}
