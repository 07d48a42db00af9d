//! Multi-head self-attention with relative positions.
//!
//! Per head, the logit between query `i` and key `j` is
//! `((q_i + u) . k_j + (q_i + v) . p[i - j]) / sqrt(d_k)`, where `p` is a
//! learned table indexed by offset and `u`, `v` are global biases. Offsets
//! beyond the table clamp to its edge rows.

use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::{gemm, softmax_in_place, Op, Scalar};

use super::ops::{dropout_backward, layer_norm, layer_norm_backward, linear, linear_backward, NormCache, Pass};
use super::params::MhsaSlots;

pub(crate) struct Shape {
    pub batch: usize,
    pub seq_len: usize,
    pub heads: usize,
}

pub(crate) struct MhsaCache<F> {
    norm: NormCache<F>,
    normed: Vec<F>,
    q: Vec<F>,
    k: Vec<F>,
    v: Vec<F>,
    /// `batch x heads` blocks of `T x T` attention weights.
    probs: Vec<F>,
    context: Vec<F>,
    /// Per head, `(2T - 1) x d_k` rows of the table for offsets `-(T-1)..=T-1`.
    rel: Vec<Vec<F>>,
    mask: Option<Vec<F>>,
}

fn table_row(offset: isize, max_len: usize) -> usize {
    let lim = max_len as isize - 1;
    (offset.clamp(-lim, lim) + lim) as usize
}

fn gather_rel<F: Scalar>(table: &[F], d: usize, h: usize, dk: usize, t: usize) -> Vec<F> {
    let max_len = (table.len() / d).div_ceil(2);
    let mut rel = Vec::with_capacity((2 * t - 1) * dk);
    for m in 0..2 * t - 1 {
        let row = table_row(m as isize - (t as isize - 1), max_len);
        rel.extend_from_slice(&table[row * d + h * dk..row * d + (h + 1) * dk]);
    }
    rel
}

/// Copies head `h` of segment `b` out of a `rows x d` matrix, adding `bias`.
fn head_block<F: Scalar>(m: &[F], d: usize, b: usize, h: usize, dk: usize, t: usize, bias: Option<&[F]>) -> Vec<F> {
    let mut out = Vec::with_capacity(t * dk);
    for i in 0..t {
        let row = &m[(b * t + i) * d + h * dk..(b * t + i) * d + (h + 1) * dk];
        match bias {
            Some(bias) => out.extend(row.iter().zip(bias).map(|(&x, &y)| x + y)),
            None => out.extend_from_slice(row),
        }
    }
    out
}

fn scatter_add<F: Scalar>(m: &mut [F], d: usize, b: usize, h: usize, dk: usize, t: usize, block: &[F]) {
    for i in 0..t {
        let row = &mut m[(b * t + i) * d + h * dk..(b * t + i) * d + (h + 1) * dk];
        for (a, &g) in row.iter_mut().zip(&block[i * dk..(i + 1) * dk]) {
            *a += g;
        }
    }
}

/// Scaled logits for one segment and head, before the softmax.
fn head_logits<F: Scalar>(qu: &[F], qv: &[F], kh: &[F], rel: &[F], t: usize, dk: usize) -> Vec<F> {
    let scale = F::one() / F::of(dk as f64).sqrt();
    let mut logits = vec![F::zero(); t * t];
    gemm(t, dk, t, scale, qu, Op::N, kh, Op::T, F::zero(), &mut logits);
    let w = 2 * t - 1;
    let mut pos = vec![F::zero(); t * w];
    gemm(t, dk, w, scale, qv, Op::N, rel, Op::T, F::zero(), &mut pos);
    for i in 0..t {
        for j in 0..t {
            logits[i * t + j] += pos[i * w + (i + t - 1 - j)];
        }
    }
    logits
}

struct Projected<F> {
    norm: NormCache<F>,
    normed: Vec<F>,
    q: Vec<F>,
    k: Vec<F>,
    v: Vec<F>,
    rel: Vec<Vec<F>>,
}

fn project<F: Scalar>(values: &[F], s: &MhsaSlots, x: &[F], shape: &Shape) -> Projected<F> {
    let rows = shape.batch * shape.seq_len;
    let d = s.norm.dim;
    let dk = d / shape.heads;
    let (normed, norm) = layer_norm(values, &s.norm, x, rows);
    let q = linear(values, &s.q, &normed, rows);
    let k = linear(values, &s.k, &normed, rows);
    let v = linear(values, &s.v, &normed, rows);
    let table = &values[s.pos_table.range()];
    let rel = (0..shape.heads).map(|h| gather_rel(table, d, h, dk, shape.seq_len)).collect();
    Projected { norm, normed, q, k, v, rel }
}

pub(crate) fn forward<F: Scalar>(
    values: &[F],
    s: &MhsaSlots,
    x: &[F],
    shape: &Shape,
    pass: &mut Pass,
) -> (Vec<F>, MhsaCache<F>) {
    let (t, heads) = (shape.seq_len, shape.heads);
    let rows = shape.batch * t;
    let d = s.norm.dim;
    let dk = d / heads;
    let p = project(values, s, x, shape);
    let bias_u = &values[s.bias_u.range()];
    let bias_v = &values[s.bias_v.range()];
    let mut probs = Vec::with_capacity(shape.batch * heads * t * t);
    let mut context = vec![F::zero(); rows * d];
    for b in 0..shape.batch {
        for h in 0..heads {
            let qu = head_block(&p.q, d, b, h, dk, t, Some(&bias_u[h * dk..(h + 1) * dk]));
            let qv = head_block(&p.q, d, b, h, dk, t, Some(&bias_v[h * dk..(h + 1) * dk]));
            let kh = head_block(&p.k, d, b, h, dk, t, None);
            let vh = head_block(&p.v, d, b, h, dk, t, None);
            let mut weights = head_logits(&qu, &qv, &kh, &p.rel[h], t, dk);
            for row in weights.chunks_mut(t) {
                softmax_in_place(row);
            }
            let mut ctx = vec![F::zero(); t * dk];
            gemm(t, t, dk, F::one(), &weights, Op::N, &vh, Op::N, F::zero(), &mut ctx);
            scatter_add(&mut context, d, b, h, dk, t, &ctx);
            if pass.record {
                probs.extend_from_slice(&weights);
            }
        }
    }
    let mut out = linear(values, &s.o, &context, rows);
    let mask = pass.dropout(&mut out);
    let cache = MhsaCache { norm: p.norm, normed: p.normed, q: p.q, k: p.k, v: p.v, probs, context, rel: p.rel, mask };
    (out, cache)
}

/// Scaled pre-softmax logits of every head for the first segment of `x`.
pub(crate) fn logits<F: Scalar>(values: &[F], s: &MhsaSlots, x: &[F], shape: &Shape) -> Vec<Vec<F>> {
    let t = shape.seq_len;
    let d = s.norm.dim;
    let dk = d / shape.heads;
    let p = project(values, s, x, shape);
    let bias_u = &values[s.bias_u.range()];
    let bias_v = &values[s.bias_v.range()];
    (0..shape.heads)
        .map(|h| {
            let qu = head_block(&p.q, d, 0, h, dk, t, Some(&bias_u[h * dk..(h + 1) * dk]));
            let qv = head_block(&p.q, d, 0, h, dk, t, Some(&bias_v[h * dk..(h + 1) * dk]));
            let kh = head_block(&p.k, d, 0, h, dk, t, None);
            head_logits(&qu, &qv, &kh, &p.rel[h], t, dk)
        })
        .collect()
}

pub(crate) fn backward<F: Scalar>(
    values: &[F],
    grads: &mut [F],
    s: &MhsaSlots,
    cache: &MhsaCache<F>,
    dy: &[F],
    shape: &Shape,
) -> Vec<F> {
    let (t, heads) = (shape.seq_len, shape.heads);
    let rows = shape.batch * t;
    let d = s.norm.dim;
    let dk = d / heads;
    let w = 2 * t - 1;
    let scale = F::one() / F::of(dk as f64).sqrt();
    let max_len = (s.pos_table.len / d).div_ceil(2);

    let mut dy = dy.to_vec();
    dropout_backward(&mut dy, &cache.mask);
    let dcontext = linear_backward(values, grads, &s.o, &cache.context, &dy, rows);

    let mut dq = vec![F::zero(); rows * d];
    let mut dk_all = vec![F::zero(); rows * d];
    let mut dv = vec![F::zero(); rows * d];
    let mut drel: Vec<Vec<F>> = (0..heads).map(|_| vec![F::zero(); w * dk]).collect();
    let bias_u = &values[s.bias_u.range()];
    let bias_v = &values[s.bias_v.range()];

    for b in 0..shape.batch {
        for h in 0..heads {
            let probs = &cache.probs[(b * heads + h) * t * t..(b * heads + h + 1) * t * t];
            let qu = head_block(&cache.q, d, b, h, dk, t, Some(&bias_u[h * dk..(h + 1) * dk]));
            let qv = head_block(&cache.q, d, b, h, dk, t, Some(&bias_v[h * dk..(h + 1) * dk]));
            let kh = head_block(&cache.k, d, b, h, dk, t, None);
            let vh = head_block(&cache.v, d, b, h, dk, t, None);
            let dctx = head_block(&dcontext, d, b, h, dk, t, None);

            let mut dprobs = vec![F::zero(); t * t];
            gemm(t, dk, t, F::one(), &dctx, Op::N, &vh, Op::T, F::zero(), &mut dprobs);
            let mut dvh = vec![F::zero(); t * dk];
            gemm(t, t, dk, F::one(), probs, Op::T, &dctx, Op::N, F::zero(), &mut dvh);
            scatter_add(&mut dv, d, b, h, dk, t, &dvh);

            // softmax backward, folding in the 1/sqrt(d_k) scale
            let mut dlogits = vec![F::zero(); t * t];
            for i in 0..t {
                let p = &probs[i * t..(i + 1) * t];
                let g = &dprobs[i * t..(i + 1) * t];
                let dot = p.iter().zip(g).fold(F::zero(), |a, (&x, &y)| a + x * y);
                for j in 0..t {
                    dlogits[i * t + j] = scale * p[j] * (g[j] - dot);
                }
            }

            let mut dqu = vec![F::zero(); t * dk];
            gemm(t, t, dk, F::one(), &dlogits, Op::N, &kh, Op::N, F::zero(), &mut dqu);
            let mut dkh = vec![F::zero(); t * dk];
            gemm(t, t, dk, F::one(), &dlogits, Op::T, &qu, Op::N, F::zero(), &mut dkh);
            scatter_add(&mut dk_all, d, b, h, dk, t, &dkh);

            let mut dpos = vec![F::zero(); t * w];
            for i in 0..t {
                for j in 0..t {
                    dpos[i * w + (i + t - 1 - j)] = dlogits[i * t + j];
                }
            }
            let mut dqv = vec![F::zero(); t * dk];
            gemm(t, w, dk, F::one(), &dpos, Op::N, &cache.rel[h], Op::N, F::zero(), &mut dqv);
            gemm(w, t, dk, F::one(), &dpos, Op::T, &qv, Op::N, F::one(), &mut drel[h]);

            for i in 0..t {
                for c in 0..dk {
                    grads[s.bias_u.offset + h * dk + c] += dqu[i * dk + c];
                    grads[s.bias_v.offset + h * dk + c] += dqv[i * dk + c];
                    dqu[i * dk + c] += dqv[i * dk + c];
                }
            }
            scatter_add(&mut dq, d, b, h, dk, t, &dqu);
        }
    }

    for (h, dr) in drel.iter().enumerate() {
        for m in 0..w {
            let row = table_row(m as isize - (t as isize - 1), max_len);
            let base = s.pos_table.offset + row * d + h * dk;
            for c in 0..dk {
                grads[base + c] += dr[m * dk + c];
            }
        }
    }

    let mut dn = linear_backward(values, grads, &s.q, &cache.normed, &dq, rows);
    let dnk = linear_backward(values, grads, &s.k, &cache.normed, &dk_all, rows);
    let dnv = linear_backward(values, grads, &s.v, &cache.normed, &dv, rows);
    for ((a, &x), &y) in dn.iter_mut().zip(&dnk).zip(&dnv) {
        *a += x + y;
    }
    layer_norm_backward(values, grads, &s.norm, &cache.norm, &dn, rows)
}
