//! Chord-recognition scores: duration-weighted recall per metric family,
//! frame and class-averaged accuracy over a vocabulary, and quality confusion.
//!
//! Durations are exact interval overlaps: the reference and estimate
//! timelines are overlaid and every piece is weighted by its length. Time
//! the estimate leaves uncovered counts as `N`; time the reference leaves
//! unannotated is not scored.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::chord::{compare, parse_chord_symbol, MetricKind, ParseError, StructuredChord};
use crate::features::{validate_intervals, ChordInterval, FeatureError};
use crate::vocab::ChordVocabulary;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("reference and estimate track lists differ at position {index}: {reference:?} vs {estimate:?}")]
    TrackMismatch { index: usize, reference: String, estimate: String },
    #[error("{reference} reference tracks but {estimate} estimate tracks")]
    TrackCount { reference: usize, estimate: usize },
    #[error("track {track}: {source}")]
    Intervals { track: String, source: FeatureError },
    #[error("track {track}: estimate label {label:?}: {source}")]
    Label { track: String, label: String, source: ParseError },
    #[error("track {track}: {reference} reference frames but {estimate} estimate frames")]
    LengthMismatch { track: String, reference: usize, estimate: usize },
    #[error("quality {0:?} is not in the class list")]
    UnknownQuality(String),
}

/// One chord-labelled stretch of a track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackIntervals {
    pub id: String,
    pub intervals: Vec<ChordInterval>,
}

impl TrackIntervals {
    pub fn new(id: impl Into<String>, intervals: Vec<ChordInterval>) -> Self {
        TrackIntervals { id: id.into(), intervals }
    }
}

/// Overlaid pieces of one track: `(duration, reference label, estimate label)`.
fn overlay<'a>(reference: &'a [ChordInterval], estimate: &'a [ChordInterval]) -> Vec<(f64, &'a str, Option<&'a str>)> {
    let mut out = Vec::new();
    let mut first = 0;
    for r in reference {
        while first < estimate.len() && estimate[first].end <= r.start {
            first += 1;
        }
        let mut cursor = r.start;
        for e in estimate[first..].iter().take_while(|e| e.start < r.end) {
            let (a, b) = (e.start.max(r.start), e.end.min(r.end));
            if a > cursor {
                out.push((a - cursor, r.label.as_str(), None));
            }
            if b > a {
                out.push((b - a, r.label.as_str(), Some(e.label.as_str())));
            }
            cursor = cursor.max(b);
        }
        if r.end > cursor {
            out.push((r.end - cursor, r.label.as_str(), None));
        }
    }
    out
}

/// Reference labels the structured encoding cannot hold (and `X`) are not
/// scored by any family.
fn reference_chord(label: &str) -> Option<StructuredChord> {
    parse_chord_symbol(label).ok()
}

fn estimate_chord(track: &str, label: Option<&str>) -> Result<StructuredChord, MetricsError> {
    match label {
        None | Some("X") => Ok(StructuredChord::N),
        Some(l) => parse_chord_symbol(l).map_err(|source| MetricsError::Label {
            track: track.into(),
            label: l.into(),
            source,
        }),
    }
}

/// Scored and correct durations of one track for every metric family, in
/// [`MetricKind::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackEval {
    pub track_id: String,
    /// Total annotated duration.
    pub duration: f64,
    pub scored: [f64; 7],
    pub correct: [f64; 7],
}

impl TrackEval {
    pub fn scored(&self, metric: MetricKind) -> f64 {
        self.scored[metric as usize]
    }

    pub fn correct(&self, metric: MetricKind) -> f64 {
        self.correct[metric as usize]
    }
}

pub fn evaluate_track(
    track_id: &str,
    reference: &[ChordInterval],
    estimate: &[ChordInterval],
) -> Result<TrackEval, MetricsError> {
    let wrap = |source| MetricsError::Intervals { track: track_id.into(), source };
    validate_intervals(reference).map_err(wrap)?;
    validate_intervals(estimate).map_err(wrap)?;
    let mut eval = TrackEval { track_id: track_id.into(), duration: 0.0, scored: [0.0; 7], correct: [0.0; 7] };
    for (dur, r, e) in overlay(reference, estimate) {
        eval.duration += dur;
        let Some(r) = reference_chord(r) else { continue };
        let e = estimate_chord(track_id, e)?;
        for (k, metric) in MetricKind::ALL.into_iter().enumerate() {
            if metric.scores_reference(&r) {
                eval.scored[k] += dur;
                if compare(metric, &r, &e) {
                    eval.correct[k] += dur;
                }
            }
        }
    }
    Ok(eval)
}

/// Duration-weighted chord symbol recall in percent; `None` when nothing
/// is scored under `metric`.
pub fn wcsr(tracks: &[TrackEval], metric: MetricKind) -> Option<f64> {
    let total: f64 = tracks.iter().map(|t| t.scored(metric)).sum();
    let correct: f64 = tracks.iter().map(|t| t.correct(metric)).sum();
    (total > 0.0).then(|| correct / total * 100.0)
}

/// Pairs reference and estimate tracks by position, requiring equal ids.
pub fn evaluate_tracks(
    references: &[TrackIntervals],
    estimates: &[TrackIntervals],
) -> Result<Vec<TrackEval>, MetricsError> {
    if references.len() != estimates.len() {
        return Err(MetricsError::TrackCount { reference: references.len(), estimate: estimates.len() });
    }
    references
        .iter()
        .zip(estimates)
        .enumerate()
        .map(|(index, (r, e))| {
            if r.id != e.id {
                return Err(MetricsError::TrackMismatch { index, reference: r.id.clone(), estimate: e.id.clone() });
            }
            evaluate_track(&r.id, &r.intervals, &e.intervals)
        })
        .collect()
}

/// Frame-aligned vocabulary ids of one track.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTrack {
    pub id: String,
    pub reference: Vec<usize>,
    pub estimate: Vec<usize>,
}

/// Per-class frame totals and exact-match counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTally {
    pub total: Vec<u64>,
    pub correct: Vec<u64>,
}

impl ClassTally {
    pub fn new(classes: usize) -> Self {
        ClassTally { total: vec![0; classes], correct: vec![0; classes] }
    }

    pub fn add_track(&mut self, track: &FrameTrack) -> Result<(), MetricsError> {
        if track.reference.len() != track.estimate.len() {
            return Err(MetricsError::LengthMismatch {
                track: track.id.clone(),
                reference: track.reference.len(),
                estimate: track.estimate.len(),
            });
        }
        for (&r, &e) in track.reference.iter().zip(&track.estimate) {
            if r >= self.total.len() {
                self.total.resize(r + 1, 0);
                self.correct.resize(r + 1, 0);
            }
            self.total[r] += 1;
            if r == e {
                self.correct[r] += 1;
            }
        }
        Ok(())
    }

    pub fn from_tracks(tracks: &[FrameTrack], classes: usize) -> Result<Self, MetricsError> {
        let mut tally = ClassTally::new(classes);
        for t in tracks {
            tally.add_track(t)?;
        }
        Ok(tally)
    }

    /// Fraction of frames whose estimate matches exactly.
    pub fn acc_frame(&self) -> Option<f64> {
        let total: u64 = self.total.iter().sum();
        let correct: u64 = self.correct.iter().sum();
        (total > 0).then(|| correct as f64 / total as f64)
    }

    /// Mean per-class recall over classes present in the references.
    pub fn acc_class(&self) -> Option<f64> {
        let recalls: Vec<f64> = self
            .total
            .iter()
            .zip(&self.correct)
            .filter(|(&t, _)| t > 0)
            .map(|(&t, &c)| c as f64 / t as f64)
            .collect();
        (!recalls.is_empty()).then(|| recalls.iter().sum::<f64>() / recalls.len() as f64)
    }

    pub fn recall(&self, class: usize) -> Option<f64> {
        let t = *self.total.get(class)?;
        (t > 0).then(|| self.correct[class] as f64 / t as f64)
    }
}

pub fn acc_frame(tracks: &[FrameTrack]) -> Result<Option<f64>, MetricsError> {
    Ok(ClassTally::from_tracks(tracks, 0)?.acc_frame())
}

pub fn acc_class(tracks: &[FrameTrack]) -> Result<Option<f64>, MetricsError> {
    Ok(ClassTally::from_tracks(tracks, 0)?.acc_class())
}

/// Duration-weighted counts of (reference quality, estimate quality); rows
/// are references.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<f64>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        ConfusionMatrix { classes, counts: vec![0.0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.classes.len()
    }

    pub fn get(&self, reference: usize, estimate: usize) -> f64 {
        self.counts[reference * self.size() + estimate]
    }

    pub fn row_sum(&self, reference: usize) -> f64 {
        let n = self.size();
        self.counts[reference * n..(reference + 1) * n].iter().sum()
    }

    pub fn recall(&self, reference: usize) -> Option<f64> {
        let total = self.row_sum(reference);
        (total > 0.0).then(|| self.get(reference, reference) / total)
    }

    fn index(&self, quality: &str) -> Result<usize, MetricsError> {
        self.classes.iter().position(|c| c == quality).ok_or_else(|| MetricsError::UnknownQuality(quality.into()))
    }

    /// Adds one track. Both streams are mapped into `vocab` first, so
    /// out-of-vocabulary references count as their nearest entry;
    /// unparseable references are skipped.
    pub fn add_track(
        &mut self,
        reference: &[ChordInterval],
        estimate: &[ChordInterval],
        vocab: &ChordVocabulary,
    ) -> Result<(), MetricsError> {
        for (dur, r, e) in overlay(reference, estimate) {
            let Ok(r) = vocab.resolve(r) else { continue };
            let e = match e {
                None => vocab.id_of(&StructuredChord::N).unwrap_or(0),
                Some(l) => vocab.resolve(l).map_err(|source| MetricsError::Label {
                    track: String::new(),
                    label: l.into(),
                    source,
                })?,
            };
            let ri = self.index(&vocab.chord(r).quality_label())?;
            let ei = self.index(&vocab.chord(e).quality_label())?;
            let n = self.size();
            self.counts[ri * n + ei] += dur;
        }
        Ok(())
    }
}

pub fn confusion_matrix(
    references: &[TrackIntervals],
    estimates: &[TrackIntervals],
    classes: Vec<String>,
    vocab: &ChordVocabulary,
) -> Result<ConfusionMatrix, MetricsError> {
    if references.len() != estimates.len() {
        return Err(MetricsError::TrackCount { reference: references.len(), estimate: estimates.len() });
    }
    let mut m = ConfusionMatrix::new(classes);
    for (index, (r, e)) in references.iter().zip(estimates).enumerate() {
        if r.id != e.id {
            return Err(MetricsError::TrackMismatch { index, reference: r.id.clone(), estimate: e.id.clone() });
        }
        m.add_track(&r.intervals, &e.intervals, vocab)?;
    }
    Ok(m)
}
