//! Training orchestration: fold splits, segment sampling, AdamW, the plateau
//! schedule, the epoch loop and a synthetic data generator.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use alloc::format;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::chord::parse_chord_symbol;
use crate::conformer::{self, ModelConfig, ModelError, ModelParams, Mode};
use crate::decoder::{build_lattice, greedy_decode, viterbi_decode, DecodeError, DEFAULT_TRANSITION_PENALTY};
use crate::features::{
    align_labels_to_frames, AudioClip, ChordInterval, CqtKernel, CqtSpectrogram, FeatureError, FrameLabels,
};
use crate::metrics::FrameTrack;
use crate::objective::{compute_class_weights, weighted_cross_entropy, ClassWeights, ComponentCounts, ObjectiveError};
use crate::tensor::Scalar;
use crate::vocab::ChordVocabulary;

pub const FOLD_COUNT: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("need at least {needed} tracks, found {found}")]
    TooFewTracks { needed: usize, found: usize },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("fold {0} out of range 1..=5")]
    Fold(usize),
    #[error("empty chord palette")]
    EmptyPalette,
    #[error("parameter and gradient lengths differ: {params} vs {grads}")]
    ShapeMismatch { params: usize, grads: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch} (tracks {tracks:?})")]
    NonFinite { epoch: usize, batch: usize, tracks: Vec<String>, loss: f64 },
    #[error("no training tracks")]
    NoTrainingData,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// SplitMix64 finaliser, used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Seed of a named random stream; a pure function of its inputs.
pub fn stream_seed(seed: u64, tag: &str, epoch: u64, key: &str) -> u64 {
    mix(mix(mix(seed ^ fnv1a(tag)) ^ epoch) ^ fnv1a(key))
}

fn stream(seed: u64, tag: &str, epoch: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, tag, epoch, key))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    /// Fold by 1-based number.
    pub fn fold(&self, number: usize) -> Result<&Fold, HarnessError> {
        if number == 0 || number > self.folds.len() {
            return Err(HarnessError::Fold(number));
        }
        Ok(&self.folds[number - 1])
    }
}

/// Shuffles the ids and cuts them into five near-equal chunks. Fold `f`
/// tests on chunk `f`, validates on chunk `f + 1` and trains on the rest.
/// Ids are source tracks; callers route augmented copies by source id.
pub fn kfold_split(track_ids: &[String], seed: u64) -> Result<SplitPlan, HarnessError> {
    if track_ids.len() < FOLD_COUNT {
        return Err(HarnessError::TooFewTracks { needed: FOLD_COUNT, found: track_ids.len() });
    }
    let mut ids = track_ids.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() < FOLD_COUNT {
        return Err(HarnessError::TooFewTracks { needed: FOLD_COUNT, found: ids.len() });
    }
    ids.shuffle(&mut stream(seed, "split", 0, ""));
    let n = ids.len();
    let chunks: Vec<Vec<String>> =
        (0..FOLD_COUNT).map(|c| ids[c * n / FOLD_COUNT..(c + 1) * n / FOLD_COUNT].to_vec()).collect();
    let folds = (0..FOLD_COUNT)
        .map(|f| {
            let v = (f + 1) % FOLD_COUNT;
            let train = (0..FOLD_COUNT).filter(|&c| c != f && c != v).flat_map(|c| chunks[c].clone()).collect();
            Fold { train, val: chunks[v].clone(), test: chunks[f].clone() }
        })
        .collect();
    Ok(SplitPlan { seed, folds })
}

/// Features and frame labels of one (possibly pitch-shifted) track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackFeatures {
    pub id: String,
    /// Id of the unshifted source track; split membership follows it.
    pub source: String,
    pub spec: CqtSpectrogram,
    pub labels: FrameLabels,
}

impl TrackFeatures {
    pub fn frames(&self) -> usize {
        self.spec.n_frames
    }
}

/// Tracks whose source is in `ids`, in input order.
pub fn select_tracks<'a>(tracks: &'a [TrackFeatures], ids: &[String]) -> Vec<&'a TrackFeatures> {
    tracks.iter().filter(|t| ids.contains(&t.source)).collect()
}

/// A uniformly placed window of `len` frames; short tracks start at 0 and are
/// padded with -80 dB frames labelled N.
pub fn sample_segment<R: Rng + ?Sized>(
    track: &TrackFeatures,
    len: usize,
    rng: &mut R,
    vocab: &ChordVocabulary,
) -> (CqtSpectrogram, FrameLabels) {
    let span = track.frames().saturating_sub(len);
    let start = if span == 0 { 0 } else { rng.random_range(0..=span) };
    segment_at(track, start, len, vocab)
}

pub fn segment_at(
    track: &TrackFeatures,
    start: usize,
    len: usize,
    vocab: &ChordVocabulary,
) -> (CqtSpectrogram, FrameLabels) {
    (track.spec.slice_padded(start, len), track.labels.slice_padded(start, len, vocab))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 1e-4 }
    }
}

/// Moment accumulators of AdamW with decoupled weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW<F> {
    pub config: AdamWConfig,
    pub lr: f64,
    pub step: u64,
    pub m: Vec<F>,
    pub v: Vec<F>,
}

impl<F: Scalar> AdamW<F> {
    pub fn new(len: usize, lr: f64, config: AdamWConfig) -> Self {
        AdamW { config, lr, step: 0, m: vec![F::zero(); len], v: vec![F::zero(); len] }
    }

    pub fn update(&mut self, params: &mut [F], grads: &[F]) -> Result<(), HarnessError> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(HarnessError::ShapeMismatch { params: params.len(), grads: grads.len() });
        }
        let c = self.config;
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(c.beta1, t as f64);
        let bc2 = 1.0 - libm::pow(c.beta2, t as f64);
        let decay = F::of(1.0 - self.lr * c.weight_decay);
        let (b1, b2) = (F::of(c.beta1), F::of(c.beta2));
        let (ib1, ib2) = (F::of(1.0 - c.beta1), F::of(1.0 - c.beta2));
        let step = F::of(self.lr / bc1);
        let inv_bc2 = F::of(1.0 / bc2);
        let eps = F::of(c.eps);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + ib1 * g;
            self.v[i] = b2 * self.v[i] + ib2 * g * g;
            let denom = (self.v[i] * inv_bc2).sqrt() + eps;
            params[i] = params[i] * decay - step * self.m[i] / denom;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleStep {
    pub lr: f64,
    pub reduced: bool,
    pub stop: bool,
}

/// Cuts the learning rate by `factor` after `patience` epochs without a
/// strict improvement of the best validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub stop_lr: f64,
    pub threshold: f64,
    pub best: f64,
    pub bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, stop_lr: f64) -> Self {
        PlateauScheduler { lr, factor, patience, stop_lr, threshold: 1e-8, best: f64::INFINITY, bad_epochs: 0 }
    }

    pub fn step(&mut self, val_loss: f64) -> ScheduleStep {
        let mut reduced = false;
        if val_loss < self.best - self.threshold {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                self.lr *= self.factor;
                self.bad_epochs = 0;
                reduced = true;
            }
        }
        // Repeated multiplication drifts a few ulps; 1e-3 * 0.1^3 must not stop.
        let stop = self.lr < self.stop_lr * (1.0 - 1e-9);
        ScheduleStep { lr: self.lr, reduced, stop }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub segment_length: usize,
    pub batch_size: usize,
    pub init_lr: f64,
    pub lr_factor: f64,
    pub patience: usize,
    pub stop_lr: f64,
    pub gamma: f64,
    pub w_max: f64,
    pub transition_penalty: f64,
    pub seed: u64,
    /// Hard cap on epochs; `None` runs until the schedule stops.
    pub max_epochs: Option<usize>,
    pub optimizer: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            segment_length: 1000,
            batch_size: 24,
            init_lr: 1e-3,
            lr_factor: 0.1,
            patience: 5,
            stop_lr: 1e-6,
            gamma: 0.5,
            w_max: 10.0,
            transition_penalty: DEFAULT_TRANSITION_PENALTY,
            seed: 0,
            max_epochs: None,
            optimizer: AdamWConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.segment_length == 0 || self.batch_size == 0 {
            return bad("segment_length and batch_size must be positive");
        }
        if !(self.init_lr > 0.0) || !(self.stop_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.lr_factor > 0.0 && self.lr_factor < 1.0) {
            return bad("lr_factor must lie in (0, 1)");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !(self.gamma >= 0.0) || !(self.w_max >= 1.0) {
            return bad("gamma must be >= 0 and w_max >= 1");
        }
        if !(self.transition_penalty >= 0.0) {
            return bad("transition_penalty must be >= 0");
        }
        let o = &self.optimizer;
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) || !(o.eps > 0.0) || !(o.weight_decay >= 0.0) {
            return bad("invalid optimizer constants");
        }
        if self.max_epochs == Some(0) {
            return bad("max_epochs must be positive");
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean weighted loss per frame.
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    LearningRate,
    MaxEpochs,
    Callback,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    pub best: ModelParams<F>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub last: ModelParams<F>,
    pub optimizer: AdamW<F>,
    pub weights: ClassWeights,
    pub log: Vec<EpochRecord>,
    pub stop: StopReason,
}

/// Whether to keep training after an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Class weights from the full label streams of the training tracks.
pub fn training_weights(tracks: &[&TrackFeatures], gamma: f64, w_max: f64) -> Result<ClassWeights, HarnessError> {
    let mut counts = ComponentCounts::default();
    for t in tracks {
        for c in &t.labels.labels {
            counts.add(c);
        }
    }
    Ok(compute_class_weights(&counts, gamma, w_max)?)
}

fn batch_inputs<F: Scalar>(segments: &[(CqtSpectrogram, FrameLabels)]) -> (Vec<F>, Vec<crate::StructuredChord>) {
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (spec, labels) in segments {
        inputs.extend(spec.model_input().iter().map(|&v| F::of(v as f64)));
        targets.extend_from_slice(&labels.labels);
    }
    (inputs, targets)
}

/// Mean per-frame loss on fixed start-0 segments, in eval mode.
pub fn validation_loss<F: Scalar>(
    params: &ModelParams<F>,
    tracks: &[&TrackFeatures],
    segment_length: usize,
    weights: &ClassWeights,
    vocab: &ChordVocabulary,
) -> Result<f64, HarnessError> {
    let mut total = 0.0;
    let mut frames = 0usize;
    for t in tracks {
        let seg = segment_at(t, 0, segment_length, vocab);
        let (inputs, targets) = batch_inputs::<F>(core::slice::from_ref(&seg));
        let (acts, _) = conformer::forward(params, &inputs, 1, segment_length, Mode::Eval)?;
        total += weighted_cross_entropy(&acts, &targets, weights)?.0;
        frames += segment_length;
    }
    Ok(if frames == 0 { 0.0 } else { total / frames as f64 })
}

/// Runs epochs of segment training until the schedule stops, `max_epochs`
/// is reached or `on_epoch` asks to stop. The best-validation parameters
/// are kept; with no validation tracks the training loss stands in.
pub fn train_loop<F: Scalar>(
    model: &ModelConfig,
    cfg: &TrainConfig,
    train: &[&TrackFeatures],
    val: &[&TrackFeatures],
    vocab: &ChordVocabulary,
    mut on_epoch: impl FnMut(&EpochRecord, &ModelParams<F>) -> Control,
) -> Result<TrainOutcome<F>, HarnessError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(HarnessError::NoTrainingData);
    }
    let mut params = ModelParams::<F>::init(model, cfg.seed)?;
    let weights = training_weights(train, cfg.gamma, cfg.w_max)?;
    let mut opt = AdamW::new(params.len(), cfg.init_lr, cfg.optimizer);
    let mut sched = PlateauScheduler::new(cfg.init_lr, cfg.lr_factor, cfg.patience, cfg.stop_lr);
    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut log = Vec::new();
    let len = cfg.segment_length;
    let mut epoch = 0usize;
    let stop = loop {
        epoch += 1;
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut stream(cfg.seed, "order", epoch as u64, ""));
        let mut epoch_loss = 0.0;
        let mut epoch_frames = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let segments: Vec<_> = chunk
                .iter()
                .map(|&i| {
                    let mut rng = stream(cfg.seed, "segment", epoch as u64, &train[i].id);
                    sample_segment(train[i], len, &mut rng, vocab)
                })
                .collect();
            let (inputs, targets) = batch_inputs::<F>(&segments);
            let dropout_seed = stream_seed(cfg.seed, "dropout", epoch as u64, &format!("{b}"));
            let (acts, trace) = conformer::forward(&params, &inputs, chunk.len(), len, Mode::Train { seed: dropout_seed })?;
            let (loss, mut grad) = weighted_cross_entropy(&acts, &targets, &weights)?;
            let frames = targets.len();
            if !loss.is_finite() {
                let tracks = chunk.iter().map(|&i| train[i].id.clone()).collect();
                return Err(HarnessError::NonFinite { epoch, batch: b, tracks, loss });
            }
            let scale = F::of(1.0 / frames as f64);
            for g in &mut grad {
                *g *= scale;
            }
            params.zero_grads();
            conformer::backward(&mut params, &trace, &grad)?;
            conformer::commit_running_stats(&mut params, &trace);
            drop(trace);
            if params.grads.iter().any(|g| !g.is_finite()) {
                let tracks = chunk.iter().map(|&i| train[i].id.clone()).collect();
                return Err(HarnessError::NonFinite { epoch, batch: b, tracks, loss });
            }
            opt.lr = sched.lr;
            let ModelParams { values, grads, .. } = &mut params;
            opt.update(values, grads)?;
            epoch_loss += loss;
            epoch_frames += frames;
        }
        let train_loss = epoch_loss / epoch_frames as f64;
        let val_loss =
            if val.is_empty() { train_loss } else { validation_loss(&params, val, len, &weights, vocab)? };
        let record = EpochRecord { epoch, train_loss, val_loss, lr: sched.lr };
        log.push(record);
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best = params.clone();
        }
        let step = sched.step(val_loss);
        if on_epoch(&record, &params) == Control::Stop {
            break StopReason::Callback;
        }
        if step.stop {
            break StopReason::LearningRate;
        }
        if cfg.max_epochs.is_some_and(|m| epoch >= m) {
            break StopReason::MaxEpochs;
        }
    };
    opt.lr = sched.lr;
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_val_loss: best_val,
        last: params,
        optimizer: opt,
        weights,
        log,
        stop,
    })
}

/// Decodes each track with the model and pairs the result with its labels.
/// `penalty = None` decodes greedily.
pub fn decode_tracks<F: Scalar>(
    params: &ModelParams<F>,
    tracks: &[&TrackFeatures],
    vocab: &ChordVocabulary,
    penalty: Option<f64>,
) -> Result<Vec<FrameTrack>, HarnessError> {
    tracks
        .iter()
        .map(|t| {
            let acts = conformer::infer_chunked(params, &t.spec, params.config().max_len)?;
            let lattice = build_lattice(&acts, vocab)?;
            let path = match penalty {
                Some(p) => viterbi_decode(&lattice, p)?,
                None => greedy_decode(&lattice),
            };
            Ok(FrameTrack {
                id: t.id.clone(),
                reference: t.labels.vocab_ids.iter().map(|&i| i as usize).collect(),
                estimate: path.ids,
            })
        })
        .collect()
}

/// Generator settings for synthetic tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Chord symbols with relative draw weights.
    pub palette: Vec<(String, f64)>,
    pub tracks: usize,
    pub seconds: (f64, f64),
    pub chord_seconds: (f64, f64),
    /// Signal-to-noise ratio in dB; `None` renders without noise.
    pub snr_db: Option<f64>,
    pub id_prefix: String,
}

impl SynthConfig {
    pub fn new(palette: &[&str], tracks: usize) -> Self {
        SynthConfig {
            palette: palette.iter().map(|s| (s.to_string(), 1.0)).collect(),
            tracks,
            seconds: (6.0, 10.0),
            chord_seconds: (0.5, 2.0),
            snr_db: None,
            id_prefix: "synth".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrack {
    pub audio: AudioClip,
    pub intervals: Vec<ChordInterval>,
    pub features: TrackFeatures,
}

/// Sum of unit sinusoids at the chord's pitch classes in octaves 2 to 5,
/// with random phases and a short fade at each chord boundary.
pub fn render_chord(symbol: &str, samples: usize, sample_rate: u32, rng: &mut impl Rng) -> Result<Vec<f32>, HarnessError> {
    let chord = parse_chord_symbol(symbol).map_err(|e| HarnessError::Config(format!("{symbol}: {e}")))?;
    let mut out = vec![0.0f32; samples];
    let pcs: Vec<u8> = (0..12u8).filter(|&p| chord.pitch_classes().contains(crate::PitchClass::new(p as i32))).collect();
    if pcs.is_empty() {
        return Ok(out);
    }
    let amp = 0.5 / (pcs.len() * 4) as f64;
    let sr = sample_rate as f64;
    let fade = (0.01 * sr) as usize;
    for &pc in &pcs {
        for octave in 2..=5 {
            let midi = 12 * (octave + 1) + pc as i32;
            let f = 440.0 * libm::exp2((midi - 69) as f64 / 12.0);
            let phase = rng.random::<f64>() * core::f64::consts::TAU;
            let w = core::f64::consts::TAU * f / sr;
            for (n, o) in out.iter_mut().enumerate() {
                *o += (amp * libm::sin(w * n as f64 + phase)) as f32;
            }
        }
    }
    for n in 0..fade.min(samples / 2) {
        let g = n as f32 / fade as f32;
        out[n] *= g;
        out[samples - 1 - n] *= g;
    }
    Ok(out)
}

fn draw_symbol<'a>(palette: &'a [(String, f64)], total: f64, rng: &mut impl Rng) -> &'a str {
    let mut x = rng.random::<f64>() * total;
    for (s, w) in palette {
        if x < *w {
            return s;
        }
        x -= w;
    }
    &palette[palette.len() - 1].0
}

/// Renders `cfg.tracks` random chord sequences, computes their features and
/// aligns their labels. Track `i` depends only on `(seed, i)`.
pub fn synth_dataset(
    cfg: &SynthConfig,
    vocab: &ChordVocabulary,
    kernel: &CqtKernel,
    seed: u64,
) -> Result<Vec<SynthTrack>, HarnessError> {
    if cfg.palette.is_empty() {
        return Err(HarnessError::EmptyPalette);
    }
    let total: f64 = cfg.palette.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) || cfg.palette.iter().any(|(_, w)| !(*w >= 0.0)) {
        return Err(HarnessError::Config("palette weights must be non-negative with a positive sum".into()));
    }
    for (s, _) in &cfg.palette {
        vocab.resolve(s).map_err(|e| HarnessError::Config(format!("{s}: {e}")))?;
    }
    let (lo, hi) = cfg.seconds;
    let (clo, chi) = cfg.chord_seconds;
    if !(lo > 0.0 && hi >= lo && clo > 0.0 && chi >= clo) {
        return Err(HarnessError::Config("invalid duration ranges".into()));
    }
    let sr = kernel.config().sample_rate;
    let mut out = Vec::with_capacity(cfg.tracks);
    for i in 0..cfg.tracks {
        let id = format!("{}{:03}", cfg.id_prefix, i);
        let mut rng = stream(seed, "synth", i as u64, &cfg.id_prefix);
        let seconds = lo + (hi - lo) * rng.random::<f64>();
        let samples_total = (seconds * sr as f64) as usize;
        let mut audio = Vec::with_capacity(samples_total);
        let mut intervals = Vec::new();
        while audio.len() < samples_total {
            let dur = clo + (chi - clo) * rng.random::<f64>();
            let n = ((dur * sr as f64) as usize).min(samples_total - audio.len()).max(1);
            let symbol = draw_symbol(&cfg.palette, total, &mut rng).to_string();
            let start = audio.len() as f64 / sr as f64;
            audio.extend(render_chord(&symbol, n, sr, &mut rng)?);
            let end = audio.len() as f64 / sr as f64;
            match intervals.last_mut() {
                Some(ChordInterval { end: e, label, .. }) if *label == symbol => *e = end,
                _ => intervals.push(ChordInterval::new(start, end, symbol)),
            }
        }
        if let Some(snr) = cfg.snr_db {
            let power = audio.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>() / audio.len() as f64;
            let sigma = libm::sqrt(power / libm::pow(10.0, snr / 10.0));
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma).map_err(|_| HarnessError::Config("invalid noise level".into()))?;
                for s in &mut audio {
                    *s += normal.sample(&mut rng) as f32;
                }
            }
        }
        let audio = AudioClip::new(audio, sr)?;
        let spec = CqtSpectrogram::from_audio_with(kernel, &audio)?;
        // Centred framing adds a frame past the last sample; the final chord
        // rings through it.
        if let Some(last) = intervals.last_mut() {
            last.end = last.end.max(spec.n_frames as f64 / spec.frame_rate());
        }
        let labels = align_labels_to_frames(&intervals, spec.n_frames, spec.frame_rate(), vocab)?;
        let features = TrackFeatures { id: id.clone(), source: id, spec, labels };
        out.push(SynthTrack { audio, intervals, features });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::CqtConfig;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn ten_tracks_split_six_two_two() {
        let plan = kfold_split(&ids(10), 3).unwrap();
        assert_eq!(plan.folds.len(), 5);
        let mut tests: Vec<String> = Vec::new();
        for f in &plan.folds {
            assert_eq!((f.train.len(), f.val.len(), f.test.len()), (6, 2, 2));
            let mut all: Vec<_> = f.train.iter().chain(&f.val).chain(&f.test).cloned().collect();
            all.sort();
            assert_eq!(all, {
                let mut v = ids(10);
                v.sort();
                v
            });
            tests.extend(f.test.iter().cloned());
        }
        tests.sort();
        let mut all = ids(10);
        all.sort();
        assert_eq!(tests, all);
        assert_eq!(plan, kfold_split(&ids(10), 3).unwrap());
        assert_ne!(plan, kfold_split(&ids(10), 4).unwrap());
        assert!(matches!(kfold_split(&ids(4), 0), Err(HarnessError::TooFewTracks { .. })));
        assert!(plan.fold(6).is_err() && plan.fold(0).is_err() && plan.fold(5).is_ok());
    }

    #[test]
    fn adamw_single_step() {
        let mut opt = AdamW::<f64>::new(1, 0.1, AdamWConfig { weight_decay: 0.0, ..Default::default() });
        let mut p = [1.0];
        opt.update(&mut p, &[1.0]).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-7);

        let mut p = [0.5, -2.0];
        let mut opt = AdamW::<f64>::new(2, 0.1, AdamWConfig { weight_decay: 0.0, ..Default::default() });
        opt.update(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, [0.5, -2.0]);

        let mut opt = AdamW::<f64>::new(2, 0.1, AdamWConfig::default());
        opt.update(&mut p, &[0.0, 0.0]).unwrap();
        assert!(p[0] < 0.5 && p[0] > 0.0 && p[1] > -2.0 && p[1] < 0.0);
        assert!(opt.update(&mut p, &[0.0]).is_err());
    }

    #[test]
    fn plateau_schedule() {
        let mut s = PlateauScheduler::new(1e-3, 0.1, 5, 1e-6);
        for i in 0..20 {
            let st = s.step(1.0 - i as f64 * 0.01);
            assert_eq!(st.lr, 1e-3);
            assert!(!st.stop);
        }
        let mut s = PlateauScheduler::new(1e-3, 0.1, 5, 1e-6);
        s.step(1.0);
        for _ in 0..4 {
            assert_eq!(s.step(1.0).lr, 1e-3);
        }
        let st = s.step(1.0);
        assert!(st.reduced && (st.lr - 1e-4).abs() < 1e-18);
        // Two more reductions reach 1e-6, which is not below the floor.
        for _ in 0..10 {
            assert!(!s.step(1.0).stop);
        }
        assert!((s.lr - 1e-6).abs() < 1e-20);
        for _ in 0..4 {
            assert!(!s.step(1.0).stop);
        }
        let st = s.step(1.0);
        assert!(st.stop && (st.lr - 1e-7).abs() < 1e-20);
        // Improvements below the tolerance do not count.
        let mut s = PlateauScheduler::new(1e-3, 0.1, 1, 1e-6);
        s.step(1.0);
        assert!(s.step(1.0 - 1e-9).reduced);
    }

    fn tiny_track(frames: usize, vocab: &ChordVocabulary) -> TrackFeatures {
        let spec = CqtSpectrogram {
            data: (0..frames * 4).map(|i| -79.0 * i as f32 / (frames * 4) as f32).collect(),
            n_frames: frames,
            n_bins: 4,
            sample_rate: 22050,
            hop_length: 512,
            shift: 0,
        };
        let cmaj = vocab.id_of_symbol("C:maj").unwrap() as u16;
        let amin = vocab.id_of_symbol("A:min").unwrap() as u16;
        let ids = (0..frames).map(|t| if t % 3 == 0 { cmaj } else { amin }).collect();
        TrackFeatures { id: "x".into(), source: "x".into(), spec, labels: FrameLabels::from_ids(ids, vocab) }
    }

    #[test]
    fn segments_pad_and_slice() {
        let vocab = ChordVocabulary::standard();
        let n = vocab.id_of_symbol("N").unwrap() as u16;
        let track = tiny_track(500, &vocab);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (spec, labels) = sample_segment(&track, 1000, &mut rng, &vocab);
        assert_eq!(spec.n_frames, 1000);
        assert_eq!(&spec.data[..2000], &track.spec.data[..]);
        assert!(spec.data[2000..].iter().all(|&v| v == -80.0));
        assert_eq!(&labels.vocab_ids[..500], &track.labels.vocab_ids[..]);
        assert!(labels.vocab_ids[500..].iter().all(|&i| i == n));

        let exact = tiny_track(1000, &vocab);
        for _ in 0..20 {
            let (s, _) = sample_segment(&exact, 1000, &mut rng, &vocab);
            assert_eq!(s.data, exact.spec.data);
        }
        let long = tiny_track(300, &vocab);
        for _ in 0..50 {
            let (s, l) = sample_segment(&long, 50, &mut rng, &vocab);
            let start = (0..=250).find(|&st| long.spec.data[st * 4..(st + 50) * 4] == s.data[..]).unwrap();
            assert_eq!(l.vocab_ids, long.labels.vocab_ids[start..start + 50]);
        }
    }

    #[test]
    fn train_config_checks() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { patience: 0, ..Default::default() },
            TrainConfig { init_lr: 0.0, ..Default::default() },
            TrainConfig { w_max: 0.5, ..Default::default() },
            TrainConfig { lr_factor: 1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    fn small_kernel() -> CqtKernel {
        CqtKernel::new(CqtConfig { n_bins: 36 * 5, ..CqtConfig::standard() }).unwrap()
    }

    #[test]
    fn synth_palette_and_determinism() {
        let vocab = ChordVocabulary::standard();
        let kernel = small_kernel();
        let mut cfg = SynthConfig::new(&["C:maj"], 2);
        cfg.seconds = (1.0, 1.5);
        let a = synth_dataset(&cfg, &vocab, &kernel, 7).unwrap();
        let c = vocab.id_of_symbol("C:maj").unwrap() as u16;
        for t in &a {
            assert!(t.features.labels.vocab_ids.iter().all(|&i| i == c));
            assert_eq!(t.intervals.len(), 1);
        }
        let b = synth_dataset(&cfg, &vocab, &kernel, 7).unwrap();
        assert_eq!(a, b);
        let empty = SynthConfig { palette: Vec::new(), ..cfg.clone() };
        assert!(matches!(synth_dataset(&empty, &vocab, &kernel, 7), Err(HarnessError::EmptyPalette)));
    }

    #[test]
    fn rendered_major_triad_peaks_at_its_notes() {
        let kernel = small_kernel();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let audio = render_chord("C:maj", 22050, 22050, &mut rng).unwrap();
        let mags = crate::features::compute_cqt_with(&kernel, &AudioClip::new(audio, 22050).unwrap()).unwrap();
        // Sum the middle frame's energy into pitch classes (bin 0 is C1,
        // three bins per semitone).
        let frame = mags.frame(mags.n_frames / 2);
        let mut chroma = [0.0f64; 12];
        for (b, &m) in frame.iter().enumerate() {
            if b % 3 == 0 {
                chroma[(b / 3) % 12] += m as f64;
            }
        }
        let mut order: Vec<usize> = (0..12).collect();
        order.sort_by(|&x, &y| chroma[y].partial_cmp(&chroma[x]).unwrap());
        let mut top: Vec<usize> = order[..3].to_vec();
        top.sort();
        assert_eq!(top, [0, 4, 7]);
        assert!(chroma[order[2]] > 5.0 * chroma[order[3]]);
    }

    fn smoke_setup() -> (ChordVocabulary, Vec<TrackFeatures>, ModelConfig, TrainConfig) {
        let vocab = ChordVocabulary::standard();
        let kernel = small_kernel();
        let mut cfg = SynthConfig::new(&["C:maj", "A:min"], 6);
        cfg.seconds = (0.8, 1.2);
        let tracks = synth_dataset(&cfg, &vocab, &kernel, 1).unwrap().into_iter().map(|t| t.features).collect();
        let model = ModelConfig {
            input_dim: 8,
            num_heads: 2,
            ffn_dim: 16,
            num_layers: 1,
            depthwise_kernel: 3,
            cqt_bins: 180,
            max_len: 64,
            ..ModelConfig::default()
        };
        let train = TrainConfig { segment_length: 32, batch_size: 2, max_epochs: Some(4), seed: 5, ..Default::default() };
        (vocab, tracks, model, train)
    }

    #[test]
    fn train_loop_is_deterministic_and_keeps_best() {
        let (vocab, tracks, model, cfg) = smoke_setup();
        let refs: Vec<&TrackFeatures> = tracks.iter().collect();
        let (train, val) = refs.split_at(4);
        let run = || train_loop::<f64>(&model, &cfg, train, val, &vocab, |_, _| Control::Continue).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a.log, b.log);
        assert_eq!(a.best.values, b.best.values);
        assert_eq!(a.log.len(), 4);
        assert_eq!(a.stop, StopReason::MaxEpochs);
        assert!(a.log.iter().all(|r| r.train_loss.is_finite() && r.val_loss.is_finite()));
        let last = a.log.last().unwrap().val_loss;
        assert!(a.best_val_loss <= last);
        let best_again = validation_loss(&a.best, val, cfg.segment_length, &a.weights, &vocab).unwrap();
        assert!((best_again - a.best_val_loss).abs() < 1e-12);

        let mut seen = 0;
        let early = train_loop::<f64>(&model, &cfg, train, val, &vocab, |_, _| {
            seen += 1;
            if seen == 2 { Control::Stop } else { Control::Continue }
        })
        .unwrap();
        assert_eq!((early.log.len(), early.stop), (2, StopReason::Callback));
        assert_eq!(early.log[..], a.log[..2]);

        let frames = decode_tracks(&a.best, val, &vocab, Some(1.0)).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].estimate.len(), val[0].frames());
    }

    #[test]
    fn train_loop_rejects_bad_input() {
        let (vocab, tracks, model, cfg) = smoke_setup();
        let refs: Vec<&TrackFeatures> = tracks.iter().collect();
        assert!(matches!(
            train_loop::<f64>(&model, &cfg, &[], &refs, &vocab, |_, _| Control::Continue),
            Err(HarnessError::NoTrainingData)
        ));
        let bad = TrainConfig { patience: 0, ..cfg };
        assert!(train_loop::<f64>(&model, &bad, &refs, &[], &vocab, |_, _| Control::Continue).is_err());
    }

    #[test]
    fn stream_seeds_differ() {
        assert_ne!(stream_seed(1, "a", 0, "x"), stream_seed(1, "a", 0, "y"));
        assert_ne!(stream_seed(1, "a", 0, "x"), stream_seed(1, "a", 1, "x"));
        assert_ne!(stream_seed(1, "a", 0, "x"), stream_seed(2, "a", 0, "x"));
        assert_eq!(stream_seed(1, "a", 0, "x"), stream_seed(1, "a", 0, "x"));
    }
}
