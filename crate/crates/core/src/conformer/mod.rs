//! Conformer encoder with six softmax output heads and hand-written
//! reverse-mode gradients.
//!
//! Inputs are batches of equal-length segments laid out as
//! `batch * seq_len` rows of `cqt_bins` model-input values (dB / 80 + 1).
//! Every activation is row-major `[rows x width]`.

mod block;
mod conv;
mod ffn;
mod mhsa;
mod ops;
mod params;

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::CqtSpectrogram;
use crate::tensor::{softmax_in_place, Scalar};

pub use params::{ModelConfig, ModelParams, Slot, TensorInfo};

use block::BlockCache;
use mhsa::Shape;
use ops::{layer_norm, layer_norm_backward, linear, linear_backward, NormCache, Pass};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(&'static str),
    #[error("expected {expected} input columns, found {found}")]
    BinMismatch { expected: usize, found: usize },
    #[error("{what} has {found} values, expected {expected}")]
    Shape { what: &'static str, expected: usize, found: usize },
    #[error("sequences must hold at least one frame")]
    EmptySequence,
    #[error("layer {layer} out of range for a {layers}-layer model")]
    NoSuchLayer { layer: usize, layers: usize },
    #[error("backward called without a cached forward pass")]
    NoForwardState,
}

/// Training mode draws dropout masks from a ChaCha stream seeded by `seed`
/// and normalizes with batch statistics; eval mode is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { seed: u64 },
}

impl Mode {
    fn pass(self, rate: f64, record: bool) -> Pass {
        match self {
            Mode::Eval => Pass { training: false, rate, rng: None, record },
            Mode::Train { seed } => Pass { training: true, rate, rng: Some(ChaCha8Rng::seed_from_u64(seed)), record },
        }
    }
}

/// Per-frame scores and per-component softmax activations, both
/// `frames x output_dim` with components laid side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentActivations<F> {
    pub frames: usize,
    pub sizes: [usize; 6],
    pub scores: Vec<F>,
    pub probs: Vec<F>,
}

impl<F: Scalar> ComponentActivations<F> {
    fn from_scores(scores: Vec<F>, sizes: [usize; 6]) -> Self {
        let width: usize = sizes.iter().sum();
        let frames = scores.len() / width;
        let mut probs = scores.clone();
        for row in probs.chunks_mut(width) {
            let mut off = 0;
            for &m in &sizes {
                softmax_in_place(&mut row[off..off + m]);
                off += m;
            }
        }
        ComponentActivations { frames, sizes, scores, probs }
    }

    pub fn width(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn offset(&self, component: usize) -> usize {
        self.sizes[..component].iter().sum()
    }

    /// Activations of `component` at frame `t`.
    pub fn beta(&self, component: usize, t: usize) -> &[F] {
        let off = t * self.width() + self.offset(component);
        &self.probs[off..off + self.sizes[component]]
    }

    pub fn score(&self, component: usize, t: usize) -> &[F] {
        let off = t * self.width() + self.offset(component);
        &self.scores[off..off + self.sizes[component]]
    }

    /// Frames `start..start + len` as a standalone set of activations.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let w = self.width();
        ComponentActivations {
            frames: len,
            sizes: self.sizes,
            scores: self.scores[start * w..(start + len) * w].to_vec(),
            probs: self.probs[start * w..(start + len) * w].to_vec(),
        }
    }
}

/// Cached intermediates of a full forward pass.
pub struct Trace<F> {
    batch: usize,
    seq_len: usize,
    recorded: bool,
    input: Vec<F>,
    projected_norm: NormCache<F>,
    blocks: Vec<BlockCache<F>>,
    head_input: Vec<F>,
}

impl<F> Trace<F> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }
}

fn check_input<F: Scalar>(params: &ModelParams<F>, len: usize, batch: usize, seq_len: usize) -> Result<(), ModelError> {
    if batch == 0 || seq_len == 0 {
        return Err(ModelError::EmptySequence);
    }
    let expected = batch * seq_len * params.config().cqt_bins;
    if len != expected {
        return Err(ModelError::Shape { what: "input", expected, found: len });
    }
    Ok(())
}

fn run<F: Scalar>(
    params: &ModelParams<F>,
    inputs: &[F],
    batch: usize,
    seq_len: usize,
    mode: Mode,
    record: bool,
) -> Result<(ComponentActivations<F>, Trace<F>), ModelError> {
    check_input(params, inputs.len(), batch, seq_len)?;
    let cfg = params.config();
    let layout = &params.layout;
    let values = &params.values;
    let rows = batch * seq_len;
    let shape = Shape { batch, seq_len, heads: cfg.num_heads };
    let mut pass = mode.pass(cfg.dropout, record);

    let projected = linear(values, &layout.input, inputs, rows);
    let (mut x, projected_norm) = layer_norm(values, &layout.input_norm, &projected, rows);
    let mut blocks = Vec::with_capacity(layout.blocks.len());
    for s in &layout.blocks {
        let (y, cache) = block::forward(values, &params.buffers, s, &x, &shape, &mut pass);
        x = y;
        blocks.push(cache);
    }
    let scores = linear(values, &layout.head, &x, rows);
    let acts = ComponentActivations::from_scores(scores, cfg.component_sizes);
    let trace =
        Trace { batch, seq_len, recorded: record, input: inputs.to_vec(), projected_norm, blocks, head_input: x };
    Ok((acts, trace))
}

/// Forward pass over `batch` segments of `seq_len` frames, keeping what the
/// backward pass needs.
pub fn forward<F: Scalar>(
    params: &ModelParams<F>,
    inputs: &[F],
    batch: usize,
    seq_len: usize,
    mode: Mode,
) -> Result<(ComponentActivations<F>, Trace<F>), ModelError> {
    run(params, inputs, batch, seq_len, mode, true)
}

/// Eval-mode forward over one whole track; attention weights are not kept.
pub fn infer<F: Scalar>(params: &ModelParams<F>, spec: &CqtSpectrogram) -> Result<ComponentActivations<F>, ModelError> {
    let bins = params.config().cqt_bins;
    if spec.n_bins != bins {
        return Err(ModelError::BinMismatch { expected: bins, found: spec.n_bins });
    }
    let inputs: Vec<F> = spec.model_input().iter().map(|&v| F::of(v as f64)).collect();
    run(params, &inputs, 1, spec.n_frames, Mode::Eval, false).map(|(acts, _)| acts)
}

/// `infer` over consecutive windows of at most `chunk` frames, joined back
/// together. Bounds attention memory on long tracks.
pub fn infer_chunked<F: Scalar>(
    params: &ModelParams<F>,
    spec: &CqtSpectrogram,
    chunk: usize,
) -> Result<ComponentActivations<F>, ModelError> {
    if chunk == 0 || spec.n_frames <= chunk {
        return infer(params, spec);
    }
    let sizes = params.config().component_sizes;
    let mut out = ComponentActivations { frames: 0, sizes, scores: Vec::new(), probs: Vec::new() };
    let mut start = 0;
    while start < spec.n_frames {
        let len = chunk.min(spec.n_frames - start);
        let part = infer(params, &spec.slice_padded(start, len))?;
        out.frames += part.frames;
        out.scores.extend(part.scores);
        out.probs.extend(part.probs);
        start += len;
    }
    Ok(out)
}

/// Accumulates parameter gradients for upstream score gradients `dscores`
/// (`rows x output_dim`) and returns the gradient w.r.t. the model input.
pub fn backward<F: Scalar>(params: &mut ModelParams<F>, trace: &Trace<F>, dscores: &[F]) -> Result<Vec<F>, ModelError> {
    if !trace.recorded {
        return Err(ModelError::NoForwardState);
    }
    let rows = trace.batch * trace.seq_len;
    let expected = rows * params.config().output_dim();
    if dscores.len() != expected {
        return Err(ModelError::Shape { what: "score gradient", expected, found: dscores.len() });
    }
    let shape = Shape { batch: trace.batch, seq_len: trace.seq_len, heads: params.config().num_heads };
    let ModelParams { layout, values, grads, .. } = params;
    let mut dx = linear_backward(values, grads, &layout.head, &trace.head_input, dscores, rows);
    for (s, cache) in layout.blocks.iter().zip(&trace.blocks).rev() {
        dx = block::backward(values, grads, s, cache, &dx, &shape);
    }
    let dproj = layer_norm_backward(values, grads, &layout.input_norm, &trace.projected_norm, &dx, rows);
    Ok(linear_backward(values, grads, &layout.input, &trace.input, &dproj, rows))
}

/// Folds the batch statistics of a training pass into the batch-norm
/// running averages.
pub fn commit_running_stats<F: Scalar>(params: &mut ModelParams<F>, trace: &Trace<F>) {
    let m = F::of(conv::BN_MOMENTUM);
    let keep = F::one() - m;
    let ModelParams { layout, buffers, .. } = params;
    for (s, cache) in layout.blocks.iter().zip(&trace.blocks) {
        if let Some(stats) = &cache.conv.stats {
            for (r, &b) in buffers[s.conv.running_mean.range()].iter_mut().zip(&stats.mean) {
                *r = keep * *r + m * b;
            }
            for (r, &b) in buffers[s.conv.running_var.range()].iter_mut().zip(&stats.var) {
                *r = keep * *r + m * b;
            }
        }
    }
}

/// A single sub-module of one block, or the output head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    Ffn1,
    Mhsa,
    Conv,
    Ffn2,
    Block,
    Head,
}

enum ModuleCache<F> {
    Ffn(ffn::FfnCache<F>),
    Mhsa(mhsa::MhsaCache<F>),
    Conv(conv::ConvCache<F>),
    Block(Box<BlockCache<F>>),
    Head(Vec<F>),
}

/// Cached forward state of a single module.
pub struct ModuleTrace<F> {
    module: Module,
    layer: usize,
    batch: usize,
    seq_len: usize,
    cache: ModuleCache<F>,
}

/// Runs one module of block `layer` on `batch * seq_len` rows of width
/// `input_dim`. Outputs are the module's own output: FFNs are not halved and
/// no residual is added, except for [`Module::Block`], which is the whole
/// block. [`Module::Head`] ignores `layer` and returns raw scores.
pub fn module_forward<F: Scalar>(
    params: &ModelParams<F>,
    layer: usize,
    module: Module,
    x: &[F],
    batch: usize,
    seq_len: usize,
    mode: Mode,
) -> Result<(Vec<F>, ModuleTrace<F>), ModelError> {
    let cfg = params.config();
    if batch == 0 || seq_len == 0 {
        return Err(ModelError::EmptySequence);
    }
    let expected = batch * seq_len * cfg.input_dim;
    if x.len() != expected {
        return Err(ModelError::Shape { what: "module input", expected, found: x.len() });
    }
    if module != Module::Head && layer >= cfg.num_layers {
        return Err(ModelError::NoSuchLayer { layer, layers: cfg.num_layers });
    }
    let rows = batch * seq_len;
    let values = &params.values;
    let shape = Shape { batch, seq_len, heads: cfg.num_heads };
    let mut pass = mode.pass(cfg.dropout, true);
    let (out, cache) = match module {
        Module::Head => (linear(values, &params.layout.head, x, rows), ModuleCache::Head(x.to_vec())),
        _ => {
            let s = &params.layout.blocks[layer];
            match module {
                Module::Ffn1 | Module::Ffn2 => {
                    let fs = if module == Module::Ffn1 { &s.ffn1 } else { &s.ffn2 };
                    let (y, c) = ffn::forward(values, fs, x, rows, &mut pass);
                    (y, ModuleCache::Ffn(c))
                }
                Module::Mhsa => {
                    let (y, c) = mhsa::forward(values, &s.mhsa, x, &shape, &mut pass);
                    (y, ModuleCache::Mhsa(c))
                }
                Module::Conv => {
                    let (y, c) = conv::forward(values, &params.buffers, &s.conv, x, batch, seq_len, &mut pass);
                    (y, ModuleCache::Conv(c))
                }
                _ => {
                    let (y, c) = block::forward(values, &params.buffers, s, x, &shape, &mut pass);
                    (y, ModuleCache::Block(Box::new(c)))
                }
            }
        }
    };
    Ok((out, ModuleTrace { module, layer, batch, seq_len, cache }))
}

/// Accumulates parameter gradients of one module and returns its input
/// gradient.
pub fn module_backward<F: Scalar>(
    params: &mut ModelParams<F>,
    trace: &ModuleTrace<F>,
    dy: &[F],
) -> Result<Vec<F>, ModelError> {
    let rows = trace.batch * trace.seq_len;
    let width = if trace.module == Module::Head { params.config().output_dim() } else { params.config().input_dim };
    if dy.len() != rows * width {
        return Err(ModelError::Shape { what: "output gradient", expected: rows * width, found: dy.len() });
    }
    let shape = Shape { batch: trace.batch, seq_len: trace.seq_len, heads: params.config().num_heads };
    let ModelParams { layout, values, grads, .. } = params;
    let dx = match &trace.cache {
        ModuleCache::Head(x) => linear_backward(values, grads, &layout.head, x, dy, rows),
        cache => {
            let s = &layout.blocks[trace.layer];
            match cache {
                ModuleCache::Ffn(c) => {
                    let fs = if trace.module == Module::Ffn1 { &s.ffn1 } else { &s.ffn2 };
                    ffn::backward(values, grads, fs, c, dy, rows)
                }
                ModuleCache::Mhsa(c) => mhsa::backward(values, grads, &s.mhsa, c, dy, &shape),
                ModuleCache::Conv(c) => conv::backward(values, grads, &s.conv, c, dy, trace.batch, trace.seq_len),
                ModuleCache::Block(c) => block::backward(values, grads, s, c, dy, &shape),
                ModuleCache::Head(_) => unreachable!(),
            }
        }
    };
    Ok(dx)
}

/// Scaled pre-softmax attention logits of block `layer`, one `T x T` matrix
/// per head, for a single sequence `x` (`seq_len x input_dim`) entering the
/// attention module.
pub fn attention_logits<F: Scalar>(
    params: &ModelParams<F>,
    layer: usize,
    x: &[F],
    seq_len: usize,
) -> Result<Vec<Vec<F>>, ModelError> {
    let cfg = params.config();
    if layer >= cfg.num_layers {
        return Err(ModelError::NoSuchLayer { layer, layers: cfg.num_layers });
    }
    if seq_len == 0 {
        return Err(ModelError::EmptySequence);
    }
    if x.len() != seq_len * cfg.input_dim {
        return Err(ModelError::Shape { what: "attention input", expected: seq_len * cfg.input_dim, found: x.len() });
    }
    let shape = Shape { batch: 1, seq_len, heads: cfg.num_heads };
    Ok(mhsa::logits(&params.values, &params.layout.blocks[layer].mhsa, x, &shape))
}

/// Attention weights (row softmax of [`attention_logits`]).
pub fn attention_weights<F: Scalar>(
    params: &ModelParams<F>,
    layer: usize,
    x: &[F],
    seq_len: usize,
) -> Result<Vec<Vec<F>>, ModelError> {
    let mut heads = attention_logits(params, layer, x, seq_len)?;
    for m in &mut heads {
        for row in m.chunks_mut(seq_len) {
            softmax_in_place(row);
        }
    }
    Ok(heads)
}

/// Parameters plus the state of the most recent forward pass.
pub struct Model<F> {
    pub params: ModelParams<F>,
    trace: Option<Trace<F>>,
}

impl<F: Scalar> Clone for Model<F> {
    /// The clone starts without forward state.
    fn clone(&self) -> Self {
        Model { params: self.params.clone(), trace: None }
    }
}

impl<F: Scalar> core::fmt::Debug for Model<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Model")
            .field("config", self.params.config())
            .field("has_trace", &self.trace.is_some())
            .finish()
    }
}

impl<F: Scalar> Model<F> {
    pub fn new(params: ModelParams<F>) -> Self {
        Model { params, trace: None }
    }

    /// Forward pass; in training mode the batch-norm running statistics are
    /// updated.
    pub fn forward(
        &mut self,
        inputs: &[F],
        batch: usize,
        seq_len: usize,
        mode: Mode,
    ) -> Result<ComponentActivations<F>, ModelError> {
        let (acts, trace) = forward(&self.params, inputs, batch, seq_len, mode)?;
        if matches!(mode, Mode::Train { .. }) {
            commit_running_stats(&mut self.params, &trace);
        }
        self.trace = Some(trace);
        Ok(acts)
    }

    /// Gradients of the last forward pass, accumulated into `params.grads`.
    pub fn backward(&mut self, dscores: &[F]) -> Result<Vec<F>, ModelError> {
        let trace = self.trace.as_ref().ok_or(ModelError::NoForwardState)?;
        backward(&mut self.params, trace, dscores)
    }

    pub fn clear(&mut self) {
        self.trace = None;
    }
}
