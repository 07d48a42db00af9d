//! Model configuration, the flat parameter store and its named layout.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chord::COMPONENT_SIZES;
use crate::features::N_BINS;
use crate::tensor::Scalar;

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub num_layers: usize,
    pub depthwise_kernel: usize,
    pub cqt_bins: usize,
    /// Longest offset the relative-position table covers is `max_len - 1`.
    pub max_len: usize,
    pub dropout: f64,
    pub component_sizes: [usize; 6],
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 256,
            num_heads: 4,
            ffn_dim: 1024,
            num_layers: 4,
            depthwise_kernel: 31,
            cqt_bins: N_BINS,
            max_len: 1000,
            dropout: 0.1,
            component_sizes: COMPONENT_SIZES,
        }
    }
}

impl ModelConfig {
    pub fn output_dim(&self) -> usize {
        self.component_sizes.iter().sum()
    }

    pub fn head_dim(&self) -> usize {
        self.input_dim / self.num_heads.max(1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg| Err(ModelError::Config(msg));
        if self.input_dim == 0 || self.ffn_dim == 0 || self.cqt_bins == 0 || self.max_len == 0 {
            return fail("dimensions must be positive");
        }
        if self.num_heads == 0 || !self.input_dim.is_multiple_of(self.num_heads) {
            return fail("input_dim must be divisible by num_heads");
        }
        if self.depthwise_kernel.is_multiple_of(2) {
            return fail("depthwise_kernel must be odd");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if self.component_sizes.contains(&0) {
            return fail("component sizes must be positive");
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).param_len
    }
}

/// A contiguous range of the flat parameter (or buffer) vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub offset: usize,
    pub len: usize,
}

impl Slot {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Init {
    Zeros,
    Ones,
    /// Uniform in `+-1/sqrt(fan_in)`.
    Uniform(usize),
    Sinusoid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub slot: Slot,
    /// Running statistics live in the buffer vector and receive no gradient.
    pub is_buffer: bool,
    pub(crate) init: Init,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LinearSlots {
    pub w: Slot,
    pub b: Slot,
    pub n_in: usize,
    pub n_out: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NormSlots {
    pub gamma: Slot,
    pub beta: Slot,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FfnSlots {
    pub norm: NormSlots,
    pub up: LinearSlots,
    pub down: LinearSlots,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MhsaSlots {
    pub norm: NormSlots,
    pub q: LinearSlots,
    pub k: LinearSlots,
    pub v: LinearSlots,
    pub o: LinearSlots,
    /// `(2 * max_len - 1) x d`, row `r` holds offset `r - (max_len - 1)`.
    pub pos_table: Slot,
    pub bias_u: Slot,
    pub bias_v: Slot,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvSlots {
    pub norm: NormSlots,
    pub pw_in: LinearSlots,
    /// `kernel x d`, tap-major.
    pub dw_weight: Slot,
    pub dw_bias: Slot,
    pub bn_gamma: Slot,
    pub bn_beta: Slot,
    pub running_mean: Slot,
    pub running_var: Slot,
    pub pw_out: LinearSlots,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BlockSlots {
    pub ffn1: FfnSlots,
    pub mhsa: MhsaSlots,
    pub conv: ConvSlots,
    pub ffn2: FfnSlots,
    pub final_norm: NormSlots,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub input: LinearSlots,
    pub input_norm: NormSlots,
    pub blocks: Vec<BlockSlots>,
    pub head: LinearSlots,
    pub tensors: Vec<TensorInfo>,
    pub param_len: usize,
    pub buffer_len: usize,
}

struct Builder {
    tensors: Vec<TensorInfo>,
    param_len: usize,
    buffer_len: usize,
}

impl Builder {
    fn add(&mut self, name: String, shape: &[usize], init: Init, is_buffer: bool) -> Slot {
        let len = shape.iter().product();
        let counter = if is_buffer { &mut self.buffer_len } else { &mut self.param_len };
        let slot = Slot { offset: *counter, len };
        *counter += len;
        self.tensors.push(TensorInfo { name, shape: shape.to_vec(), slot, is_buffer, init });
        slot
    }

    fn param(&mut self, name: String, shape: &[usize], init: Init) -> Slot {
        self.add(name, shape, init, false)
    }

    fn linear(&mut self, prefix: &str, n_in: usize, n_out: usize) -> LinearSlots {
        let w = self.param(format!("{prefix}.weight"), &[n_in, n_out], Init::Uniform(n_in));
        let b = self.param(format!("{prefix}.bias"), &[n_out], Init::Zeros);
        LinearSlots { w, b, n_in, n_out }
    }

    fn norm(&mut self, prefix: &str, dim: usize) -> NormSlots {
        let gamma = self.param(format!("{prefix}.gamma"), &[dim], Init::Ones);
        let beta = self.param(format!("{prefix}.beta"), &[dim], Init::Zeros);
        NormSlots { gamma, beta, dim }
    }

    fn ffn(&mut self, prefix: &str, d: usize, hidden: usize) -> FfnSlots {
        FfnSlots {
            norm: self.norm(&format!("{prefix}.norm"), d),
            up: self.linear(&format!("{prefix}.up"), d, hidden),
            down: self.linear(&format!("{prefix}.down"), hidden, d),
        }
    }
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Layout {
        let d = cfg.input_dim;
        let mut b = Builder { tensors: Vec::new(), param_len: 0, buffer_len: 0 };
        let input = b.linear("input.proj", cfg.cqt_bins, d);
        let input_norm = b.norm("input.norm", d);
        let mut blocks = Vec::with_capacity(cfg.num_layers);
        for i in 0..cfg.num_layers {
            let p = format!("layers.{i}");
            let ffn1 = b.ffn(&format!("{p}.ffn1"), d, cfg.ffn_dim);
            let mhsa = MhsaSlots {
                norm: b.norm(&format!("{p}.mhsa.norm"), d),
                q: b.linear(&format!("{p}.mhsa.q"), d, d),
                k: b.linear(&format!("{p}.mhsa.k"), d, d),
                v: b.linear(&format!("{p}.mhsa.v"), d, d),
                o: b.linear(&format!("{p}.mhsa.o"), d, d),
                pos_table: b.param(format!("{p}.mhsa.pos_table"), &[2 * cfg.max_len - 1, d], Init::Sinusoid),
                bias_u: b.param(format!("{p}.mhsa.pos_bias_u"), &[cfg.num_heads, cfg.head_dim()], Init::Zeros),
                bias_v: b.param(format!("{p}.mhsa.pos_bias_v"), &[cfg.num_heads, cfg.head_dim()], Init::Zeros),
            };
            let k = cfg.depthwise_kernel;
            let conv = ConvSlots {
                norm: b.norm(&format!("{p}.conv.norm"), d),
                pw_in: b.linear(&format!("{p}.conv.pw_in"), d, 2 * d),
                dw_weight: b.param(format!("{p}.conv.depthwise.weight"), &[k, d], Init::Uniform(k)),
                dw_bias: b.param(format!("{p}.conv.depthwise.bias"), &[d], Init::Zeros),
                bn_gamma: b.param(format!("{p}.conv.bn.gamma"), &[d], Init::Ones),
                bn_beta: b.param(format!("{p}.conv.bn.beta"), &[d], Init::Zeros),
                running_mean: b.add(format!("{p}.conv.bn.running_mean"), &[d], Init::Zeros, true),
                running_var: b.add(format!("{p}.conv.bn.running_var"), &[d], Init::Ones, true),
                pw_out: b.linear(&format!("{p}.conv.pw_out"), d, d),
            };
            let ffn2 = b.ffn(&format!("{p}.ffn2"), d, cfg.ffn_dim);
            let final_norm = b.norm(&format!("{p}.final_norm"), d);
            blocks.push(BlockSlots { ffn1, mhsa, conv, ffn2, final_norm });
        }
        let head = b.linear("head", d, cfg.output_dim());
        Layout { input, input_norm, blocks, head, tensors: b.tensors, param_len: b.param_len, buffer_len: b.buffer_len }
    }
}

/// Every trainable tensor in one flat vector, a gradient vector of the same
/// length, and the batch-norm running statistics.
#[derive(Debug, Clone)]
pub struct ModelParams<F> {
    config: ModelConfig,
    pub(crate) layout: Layout,
    pub values: Vec<F>,
    pub grads: Vec<F>,
    pub buffers: Vec<F>,
}

impl<F: Scalar> ModelParams<F> {
    /// Uniform `+-1/sqrt(fan_in)` weights, zero biases, unit norm scales and a
    /// sinusoidal relative-position table.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        let mut params = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.input_dim;
        for t in &params.layout.tensors {
            let dst = if t.is_buffer { &mut params.buffers[t.slot.range()] } else { &mut params.values[t.slot.range()] };
            match t.init {
                Init::Zeros => dst.fill(F::zero()),
                Init::Ones => dst.fill(F::one()),
                Init::Uniform(fan_in) => {
                    let bound = 1.0 / libm::sqrt(fan_in as f64);
                    for v in dst.iter_mut() {
                        *v = F::of(rng.random_range(-bound..bound));
                    }
                }
                Init::Sinusoid => {
                    let rows = t.shape[0];
                    let centre = (rows / 2) as f64;
                    for r in 0..rows {
                        let offset = r as f64 - centre;
                        for c in 0..d {
                            let freq = libm::pow(10_000.0, -((c / 2 * 2) as f64) / d as f64);
                            let angle = offset * freq;
                            dst[r * d + c] = F::of(if c % 2 == 0 { libm::sin(angle) } else { libm::cos(angle) });
                        }
                    }
                }
            }
        }
        Ok(params)
    }

    /// Every parameter and buffer zero.
    pub fn zeros(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::new(config);
        Ok(ModelParams {
            config: config.clone(),
            values: vec![F::zero(); layout.param_len],
            grads: vec![F::zero(); layout.param_len],
            buffers: vec![F::zero(); layout.buffer_len],
            layout,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tensors(&self) -> &[TensorInfo] {
        &self.layout.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&TensorInfo> {
        self.layout.tensors.iter().find(|t| t.name == name)
    }

    /// Values of a named parameter or buffer.
    pub fn get(&self, name: &str) -> Option<&[F]> {
        let t = self.tensor(name)?;
        Some(if t.is_buffer { &self.buffers[t.slot.range()] } else { &self.values[t.slot.range()] })
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut [F]> {
        let t = self.tensor(name)?.clone();
        Some(if t.is_buffer { &mut self.buffers[t.slot.range()] } else { &mut self.values[t.slot.range()] })
    }

    pub fn grad(&self, name: &str) -> Option<&[F]> {
        let t = self.tensor(name).filter(|t| !t.is_buffer)?;
        Some(&self.grads[t.slot.range()])
    }

    pub fn zero_grads(&mut self) {
        self.grads.fill(F::zero());
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().chain(&self.buffers).all(|v| v.is_finite())
    }

    pub fn convert<G: Scalar>(&self) -> ModelParams<G> {
        let cv = |v: &Vec<F>| v.iter().map(|x| G::of(x.as_f64())).collect();
        ModelParams {
            config: self.config.clone(),
            layout: self.layout.clone(),
            values: cv(&self.values),
            grads: cv(&self.grads),
            buffers: cv(&self.buffers),
        }
    }
}
