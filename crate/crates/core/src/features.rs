//! Constant-Q features and frame-level supervision.
//!
//! The transform is computed directly: every bin owns a Hann-windowed complex
//! exponential at its center frequency, evaluated at each hop. Bins are spaced
//! 36 per octave from C1 over seven octaves.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::chord::{ParseError, StructuredChord};
use crate::vocab::ChordVocabulary;

pub const SAMPLE_RATE: u32 = 22_050;
pub const HOP_LENGTH: usize = 512;
pub const BINS_PER_OCTAVE: usize = 36;
pub const N_BINS: usize = 252;
/// Frequency of C1 in Hz.
pub const FMIN: f64 = 32.703_195_662_574_83;
pub const MAX_WINDOW: usize = 16_384;
pub const DB_FLOOR: f32 = -80.0;
/// Largest downward and upward augmentation shifts, in semitones.
pub const SHIFT_RANGE: (i32, i32) = (-5, 6);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("audio clip has {got} samples; at least {min} are needed for the lowest CQT bin")]
    ClipTooShort { min: usize, got: usize },
    #[error("invalid audio: {0}")]
    InvalidAudio(&'static str),
    #[error("top CQT bin at {top_hz:.1} Hz is above the Nyquist frequency of {sample_rate} Hz audio")]
    AboveNyquist { top_hz: f64, sample_rate: u32 },
    #[error("pitch shift of {0} semitones is outside -5..=+6")]
    ShiftOutOfRange(i32),
    #[error("interval {index} is empty or reversed")]
    EmptyInterval { index: usize },
    #[error("interval {index} overlaps or precedes the previous one")]
    Overlap { index: usize },
    #[error("interval {index}: {source}")]
    Label { index: usize, source: ParseError },
    #[error("expected {expected} bins, found {found}")]
    BinMismatch { expected: usize, found: usize },
    #[error("{what}: expected {expected}, found {found}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, FeatureError> {
        if sample_rate == 0 {
            return Err(FeatureError::InvalidAudio("sample rate is zero"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(FeatureError::InvalidAudio("non-finite sample"));
        }
        Ok(AudioClip { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqtConfig {
    pub sample_rate: u32,
    pub hop_length: usize,
    pub fmin: f64,
    pub bins_per_octave: usize,
    pub n_bins: usize,
    pub max_window: usize,
}

impl CqtConfig {
    pub fn standard() -> Self {
        CqtConfig {
            sample_rate: SAMPLE_RATE,
            hop_length: HOP_LENGTH,
            fmin: FMIN,
            bins_per_octave: BINS_PER_OCTAVE,
            n_bins: N_BINS,
            max_window: MAX_WINDOW,
        }
    }

    pub fn quality_factor(&self) -> f64 {
        1.0 / (libm::exp2(1.0 / self.bins_per_octave as f64) - 1.0)
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        self.fmin * libm::exp2(bin as f64 / self.bins_per_octave as f64)
    }

    /// Analysis window of a bin: `ceil(Q * sr / f_k)`, capped at `max_window`.
    pub fn window_length(&self, bin: usize) -> usize {
        let n = libm::ceil(self.quality_factor() * self.sample_rate as f64 / self.bin_frequency(bin));
        (n as usize).min(self.max_window)
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop_length as f64
    }

    /// Frames produced for `num_samples` of centred analysis.
    pub fn frame_count(&self, num_samples: usize) -> usize {
        num_samples / self.hop_length + 1
    }
}

struct BinKernel {
    cos: Vec<f32>,
    sin: Vec<f32>,
}

/// Precomputed per-bin analysis kernels; reuse one across clips.
pub struct CqtKernel {
    config: CqtConfig,
    bins: Vec<BinKernel>,
}

impl CqtKernel {
    pub fn new(config: CqtConfig) -> Result<Self, FeatureError> {
        let top_hz = config.bin_frequency(config.n_bins - 1);
        if top_hz >= config.sample_rate as f64 / 2.0 {
            return Err(FeatureError::AboveNyquist { top_hz, sample_rate: config.sample_rate });
        }
        let bins = (0..config.n_bins)
            .map(|k| {
                let len = config.window_length(k);
                let freq = config.bin_frequency(k);
                let window: Vec<f64> =
                    (0..len).map(|n| 0.5 - 0.5 * libm::cos(2.0 * PI * n as f64 / len as f64)).collect();
                let norm: f64 = window.iter().sum();
                let half = (len / 2) as f64;
                let (cos, sin) = window
                    .iter()
                    .enumerate()
                    .map(|(n, w)| {
                        let phase = 2.0 * PI * freq * (n as f64 - half) / config.sample_rate as f64;
                        ((w * libm::cos(phase) / norm) as f32, (w * libm::sin(phase) / norm) as f32)
                    })
                    .unzip();
                BinKernel { cos, sin }
            })
            .collect();
        Ok(CqtKernel { config, bins })
    }

    pub fn standard() -> Self {
        Self::new(CqtConfig::standard()).expect("standard CQT config is valid")
    }

    pub fn config(&self) -> &CqtConfig {
        &self.config
    }

    /// Minimum clip length: the window of the lowest bin.
    pub fn min_samples(&self) -> usize {
        self.bins.iter().map(|b| b.cos.len()).max().unwrap_or(0)
    }

    /// Linear magnitudes, row-major `[frames x bins]`.
    pub fn magnitudes(&self, samples: &[f32]) -> Result<Vec<f32>, FeatureError> {
        let min = self.min_samples();
        if samples.len() < min {
            return Err(FeatureError::ClipTooShort { min, got: samples.len() });
        }
        let frames = self.config.frame_count(samples.len());
        let n_bins = self.config.n_bins;
        let mut out = vec![0.0f32; frames * n_bins];
        for t in 0..frames {
            let center = (t * self.config.hop_length) as isize;
            let row = &mut out[t * n_bins..(t + 1) * n_bins];
            for (k, kernel) in self.bins.iter().enumerate() {
                let len = kernel.cos.len() as isize;
                let start = center - len / 2;
                // clip the window to the signal; samples outside are zero
                let lo = (-start).max(0) as usize;
                let hi = ((samples.len() as isize - start).min(len)).max(0) as usize;
                if lo >= hi {
                    continue;
                }
                let seg = &samples[(start + lo as isize) as usize..(start + hi as isize) as usize];
                let (re, im) = dot2(seg, &kernel.cos[lo..hi], &kernel.sin[lo..hi]);
                row[k] = libm::sqrt(re * re + im * im) as f32;
            }
        }
        Ok(out)
    }
}

/// Returns `(x . a, x . b)` with lane-split accumulation.
fn dot2(x: &[f32], a: &[f32], b: &[f32]) -> (f64, f64) {
    const LANES: usize = 8;
    let mut acc_a = [0.0f32; LANES];
    let mut acc_b = [0.0f32; LANES];
    let chunks = x.len() / LANES;
    for c in 0..chunks {
        let i = c * LANES;
        let xs = &x[i..i + LANES];
        let as_ = &a[i..i + LANES];
        let bs = &b[i..i + LANES];
        for l in 0..LANES {
            acc_a[l] += xs[l] * as_[l];
            acc_b[l] += xs[l] * bs[l];
        }
    }
    let mut ra: f64 = acc_a.iter().map(|&v| v as f64).sum();
    let mut rb: f64 = acc_b.iter().map(|&v| v as f64).sum();
    for i in chunks * LANES..x.len() {
        ra += (x[i] * a[i]) as f64;
        rb += (x[i] * b[i]) as f64;
    }
    (ra, rb)
}

/// Linear CQT magnitudes of a clip at the standard configuration.
pub fn compute_cqt(clip: &AudioClip) -> Result<CqtMagnitudes, FeatureError> {
    compute_cqt_with(&CqtKernel::standard(), clip)
}

pub fn compute_cqt_with(kernel: &CqtKernel, clip: &AudioClip) -> Result<CqtMagnitudes, FeatureError> {
    if clip.sample_rate != kernel.config.sample_rate {
        return Err(FeatureError::InvalidAudio("sample rate differs from the CQT kernel's"));
    }
    let data = kernel.magnitudes(&clip.samples)?;
    Ok(CqtMagnitudes {
        n_frames: data.len() / kernel.config.n_bins,
        data,
        config: kernel.config,
    })
}

/// Linear-magnitude CQT, before dB scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct CqtMagnitudes {
    pub data: Vec<f32>,
    pub n_frames: usize,
    pub config: CqtConfig,
}

impl CqtMagnitudes {
    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.config.n_bins;
        &self.data[t * n..(t + 1) * n]
    }

    pub fn to_db(&self) -> CqtSpectrogram {
        CqtSpectrogram {
            data: amplitude_to_db(&self.data),
            n_frames: self.n_frames,
            n_bins: self.config.n_bins,
            sample_rate: self.config.sample_rate,
            hop_length: self.config.hop_length,
            shift: 0,
        }
    }
}

/// `20 log10(x / max)`, floored at -80 dB. All-zero input maps to the floor.
pub fn amplitude_to_db(magnitudes: &[f32]) -> Vec<f32> {
    let max = magnitudes.iter().copied().fold(0.0f32, f32::max);
    if max <= 0.0 {
        return vec![DB_FLOOR; magnitudes.len()];
    }
    let max = max as f64;
    magnitudes
        .iter()
        .map(|&x| {
            if x <= 0.0 {
                DB_FLOOR
            } else {
                ((20.0 * libm::log10(x as f64 / max)) as f32).max(DB_FLOOR)
            }
        })
        .collect()
}

/// dB-scaled spectrogram, row-major `[frames x bins]`, values in `[-80, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqtSpectrogram {
    pub data: Vec<f32>,
    pub n_frames: usize,
    pub n_bins: usize,
    pub sample_rate: u32,
    pub hop_length: usize,
    /// Pitch shift in semitones applied to the source audio's features.
    pub shift: i8,
}

impl CqtSpectrogram {
    pub fn from_audio(clip: &AudioClip) -> Result<Self, FeatureError> {
        Ok(compute_cqt(clip)?.to_db())
    }

    pub fn from_audio_with(kernel: &CqtKernel, clip: &AudioClip) -> Result<Self, FeatureError> {
        Ok(compute_cqt_with(kernel, clip)?.to_db())
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop_length as f64
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    /// Model input scaling: `db / 80 + 1`, in `[0, 1]`.
    pub fn model_input(&self) -> Vec<f32> {
        self.data.iter().map(|&d| d / -DB_FLOOR + 1.0).collect()
    }

    /// Frames `start..start+len`; frames past the end are `-80` dB padding.
    pub fn slice_padded(&self, start: usize, len: usize) -> CqtSpectrogram {
        let mut data = vec![DB_FLOOR; len * self.n_bins];
        let available = self.n_frames.saturating_sub(start).min(len);
        data[..available * self.n_bins]
            .copy_from_slice(&self.data[start * self.n_bins..(start + available) * self.n_bins]);
        self.with_data(data, len)
    }

    fn with_data(&self, data: Vec<f32>, n_frames: usize) -> CqtSpectrogram {
        CqtSpectrogram {
            data,
            n_frames,
            n_bins: self.n_bins,
            sample_rate: self.sample_rate,
            hop_length: self.hop_length,
            shift: self.shift,
        }
    }
}

/// Shifts the spectrum by `3 * semitones` bins; vacated bins get -80 dB.
pub fn pitch_shift_cqt(spec: &CqtSpectrogram, semitones: i32) -> Result<CqtSpectrogram, FeatureError> {
    if semitones < SHIFT_RANGE.0 || semitones > SHIFT_RANGE.1 {
        return Err(FeatureError::ShiftOutOfRange(semitones));
    }
    let offset = semitones * (BINS_PER_OCTAVE as i32 / 12);
    let n = spec.n_bins as i32;
    let mut data = vec![DB_FLOOR; spec.data.len()];
    for t in 0..spec.n_frames {
        let src = spec.frame(t);
        let dst = &mut data[t * spec.n_bins..(t + 1) * spec.n_bins];
        for b in 0..n {
            let from = b - offset;
            if (0..n).contains(&from) {
                dst[b as usize] = src[from as usize];
            }
        }
    }
    let mut out = spec.with_data(data, spec.n_frames);
    out.shift = (spec.shift as i32 + semitones) as i8;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChordInterval {
    pub start: f64,
    pub end: f64,
    pub label: String,
}

impl ChordInterval {
    pub fn new(start: f64, end: f64, label: impl Into<String>) -> Self {
        ChordInterval { start, end, label: label.into() }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Checks that intervals are non-empty, sorted and non-overlapping.
pub fn validate_intervals(intervals: &[ChordInterval]) -> Result<(), FeatureError> {
    let mut prev_end = f64::NEG_INFINITY;
    for (index, iv) in intervals.iter().enumerate() {
        if !(iv.end > iv.start) || !iv.start.is_finite() || !iv.end.is_finite() {
            return Err(FeatureError::EmptyInterval { index });
        }
        if iv.start < prev_end {
            return Err(FeatureError::Overlap { index });
        }
        prev_end = iv.end;
    }
    Ok(())
}

/// Per-frame supervision targets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameLabels {
    pub labels: Vec<StructuredChord>,
    pub vocab_ids: Vec<u16>,
}

impl FrameLabels {
    pub fn from_ids(ids: Vec<u16>, vocab: &ChordVocabulary) -> Self {
        let labels = ids.iter().map(|&id| *vocab.chord(id as usize)).collect();
        FrameLabels { labels, vocab_ids: ids }
    }

    pub fn len(&self) -> usize {
        self.vocab_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab_ids.is_empty()
    }

    /// Transposes every label and re-resolves its vocabulary index.
    pub fn transpose(&self, semitones: i32, vocab: &ChordVocabulary) -> FrameLabels {
        let labels: Vec<StructuredChord> = self.labels.iter().map(|c| c.transpose(semitones)).collect();
        let vocab_ids = labels.iter().map(|c| vocab.nearest(c) as u16).collect();
        FrameLabels { labels, vocab_ids }
    }

    /// Frames `start..start+len`, padding with N past the end.
    pub fn slice_padded(&self, start: usize, len: usize, vocab: &ChordVocabulary) -> FrameLabels {
        let n_id = vocab.id_of(&StructuredChord::N).unwrap_or(0) as u16;
        let ids = (start..start + len)
            .map(|t| self.vocab_ids.get(t).copied().unwrap_or(n_id))
            .collect();
        FrameLabels::from_ids(ids, vocab)
    }
}

/// Assigns each frame the label of the interval covering its center time
/// `(t + 0.5) / frame_rate`; intervals are half-open, uncovered frames are N.
pub fn align_labels_to_frames(
    intervals: &[ChordInterval],
    frame_count: usize,
    frame_rate: f64,
    vocab: &ChordVocabulary,
) -> Result<FrameLabels, FeatureError> {
    validate_intervals(intervals)?;
    let resolved = intervals
        .iter()
        .enumerate()
        .map(|(index, iv)| vocab.resolve(&iv.label).map_err(|source| FeatureError::Label { index, source }))
        .collect::<Result<Vec<usize>, _>>()?;
    let n_id = vocab.id_of(&StructuredChord::N).unwrap_or(0);
    let mut ids = Vec::with_capacity(frame_count);
    let mut cursor = 0;
    for t in 0..frame_count {
        let time = (t as f64 + 0.5) / frame_rate;
        while cursor < intervals.len() && intervals[cursor].end <= time {
            cursor += 1;
        }
        let id = match intervals.get(cursor) {
            Some(iv) if iv.start <= time => resolved[cursor],
            _ => n_id,
        };
        ids.push(id as u16);
    }
    Ok(FrameLabels::from_ids(ids, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, seconds: f64) -> AudioClip {
        let n = (seconds * SAMPLE_RATE as f64) as usize;
        let samples = (0..n)
            .map(|i| (0.5 * libm::sin(2.0 * PI * freq * i as f64 / SAMPLE_RATE as f64)) as f32)
            .collect();
        AudioClip::new(samples, SAMPLE_RATE).unwrap()
    }

    fn argmax(row: &[f32]) -> usize {
        row.iter()
            .enumerate()
            .fold((0, f32::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0
    }

    #[test]
    fn config_constants() {
        let c = CqtConfig::standard();
        assert!((c.frame_rate() - 43.066).abs() < 1e-3);
        assert!((c.bin_frequency(135) - 440.0).abs() < 1e-3);
        assert_eq!(c.window_length(0), MAX_WINDOW);
        assert!(c.window_length(251) < 300);
        assert_eq!(c.frame_count(22050), 44);
    }

    #[test]
    fn silence_is_zero() {
        let clip = AudioClip::new(vec![0.0; 20_000], SAMPLE_RATE).unwrap();
        let mags = compute_cqt(&clip).unwrap();
        assert!(mags.data.iter().all(|&m| m == 0.0));
        assert!(mags.to_db().data.iter().all(|&d| d == DB_FLOOR));
    }

    #[test]
    fn short_clip_rejected() {
        let clip = AudioClip::new(vec![0.0; 1000], SAMPLE_RATE).unwrap();
        assert_eq!(
            compute_cqt(&clip).unwrap_err(),
            FeatureError::ClipTooShort { min: MAX_WINDOW, got: 1000 }
        );
    }

    #[test]
    fn sine_peaks_at_a4_bin() {
        let mags = compute_cqt(&sine(440.0, 2.0)).unwrap();
        for t in 20..mags.n_frames - 20 {
            assert_eq!(argmax(mags.frame(t)), 135);
        }
    }

    #[test]
    fn sines_at_c1_and_c5() {
        // Expected bins from the tuning arithmetic: C1 is bin 0, C5 sits four
        // octaves up at 4 * 36.
        let c1 = 440.0 * libm::exp2(-45.0 / 12.0);
        for (f, bin) in [(c1, 0), (c1 * 16.0, 144)] {
            let mags = compute_cqt(&sine(f, 3.0)).unwrap();
            let mid = mags.n_frames / 2;
            assert_eq!(argmax(mags.frame(mid)), bin, "{f} Hz");
        }
    }

    #[test]
    fn bin_frequency_law() {
        let cfg = CqtConfig::standard();
        for k in 0..N_BINS {
            let want = 32.7032 * libm::pow(2.0, k as f64 / 36.0);
            assert!((cfg.bin_frequency(k) - want).abs() / want < 1e-3);
        }
        assert!((cfg.frame_rate() - 43.066).abs() < 1e-3);
    }

    #[test]
    fn invalid_audio() {
        assert!(AudioClip::new(vec![f32::NAN], SAMPLE_RATE).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
    }

    #[test]
    fn db_scaling() {
        let db = amplitude_to_db(&[1.0, 0.1, 0.0, 1e-9]);
        assert_eq!(db[0], 0.0);
        assert!((db[1] + 20.0).abs() < 1e-5);
        assert_eq!(db[2], -80.0);
        assert_eq!(db[3], -80.0);
        assert_eq!(amplitude_to_db(&[0.0, 0.0]), vec![-80.0, -80.0]);
    }

    fn peaked(bin: usize) -> CqtSpectrogram {
        let mut data = vec![-60.0f32; 2 * N_BINS];
        data[bin] = 0.0;
        data[N_BINS + bin] = 0.0;
        CqtSpectrogram { data, n_frames: 2, n_bins: N_BINS, sample_rate: SAMPLE_RATE, hop_length: HOP_LENGTH, shift: 0 }
    }

    #[test]
    fn pitch_shift_moves_three_bins_per_semitone() {
        let spec = peaked(135);
        assert_eq!(pitch_shift_cqt(&spec, 0).unwrap(), spec);
        let up = pitch_shift_cqt(&spec, 1).unwrap();
        assert_eq!(argmax(up.frame(0)), 138);
        assert_eq!(up.shift, 1);
        let up6 = pitch_shift_cqt(&spec, 6).unwrap();
        assert!(up6.frame(1)[..18].iter().all(|&d| d == DB_FLOOR));
        let down = pitch_shift_cqt(&spec, -5).unwrap();
        assert!(down.frame(0)[N_BINS - 15..].iter().all(|&d| d == DB_FLOOR));
        assert_eq!(pitch_shift_cqt(&spec, 7), Err(FeatureError::ShiftOutOfRange(7)));
        assert_eq!(pitch_shift_cqt(&spec, -6), Err(FeatureError::ShiftOutOfRange(-6)));
    }

    #[test]
    fn align_examples() {
        let vocab = ChordVocabulary::standard();
        let fr = 10.0;
        let empty = align_labels_to_frames(&[], 10, fr, &vocab).unwrap();
        assert!(empty.labels.iter().all(|c| c.is_no_chord()));

        let all = align_labels_to_frames(&[ChordInterval::new(0.0, 1.0, "C:maj")], 10, fr, &vocab).unwrap();
        let c = vocab.id_of_symbol("C:maj").unwrap() as u16;
        assert!(all.vocab_ids.iter().all(|&id| id == c));

        // boundary at frame 3's center (0.35 s): frame 3 belongs to the later interval
        let ivs = [ChordInterval::new(0.0, 0.35, "C:maj"), ChordInterval::new(0.35, 1.0, "D:min")];
        let l = align_labels_to_frames(&ivs, 10, fr, &vocab).unwrap();
        let d = vocab.id_of_symbol("D:min").unwrap() as u16;
        assert_eq!(&l.vocab_ids[..5], &[c, c, c, d, d]);

        // gap and tail are N
        let ivs = [ChordInterval::new(0.1, 0.2, "C:maj")];
        let l = align_labels_to_frames(&ivs, 4, fr, &vocab).unwrap();
        assert_eq!(l.vocab_ids, vec![0, c, 0, 0]);
    }

    #[test]
    fn align_rejects_overlap() {
        let vocab = ChordVocabulary::standard();
        let ivs = [ChordInterval::new(0.0, 0.5, "C:maj"), ChordInterval::new(0.4, 1.0, "D:min")];
        assert_eq!(
            align_labels_to_frames(&ivs, 10, 10.0, &vocab),
            Err(FeatureError::Overlap { index: 1 })
        );
        let ivs = [ChordInterval::new(0.5, 0.5, "C:maj")];
        assert_eq!(
            align_labels_to_frames(&ivs, 10, 10.0, &vocab),
            Err(FeatureError::EmptyInterval { index: 0 })
        );
        let ivs = [ChordInterval::new(0.0, 0.5, "C:zzz")];
        assert!(matches!(
            align_labels_to_frames(&ivs, 10, 10.0, &vocab),
            Err(FeatureError::Label { index: 0, .. })
        ));
    }

    #[test]
    fn padded_slices() {
        let vocab = ChordVocabulary::standard();
        let spec = peaked(10);
        let s = spec.slice_padded(1, 3);
        assert_eq!(s.n_frames, 3);
        assert_eq!(s.frame(0)[10], 0.0);
        assert!(s.frame(1).iter().all(|&d| d == DB_FLOOR));
        let labels = FrameLabels::from_ids(vec![5, 6], &vocab);
        let sl = labels.slice_padded(1, 3, &vocab);
        assert_eq!(sl.vocab_ids, vec![6, 0, 0]);
        assert!(sl.labels[2].is_no_chord());
    }
}
