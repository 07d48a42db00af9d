//! Binary feature files: little-endian, magic `CQTF`.
//!
//! ```text
//! magic[4] version:u16 sample_rate:u32 hop:u32 bins:u16 frames:u32 shift:i8
//! data: f32[frames * bins]   row-major
//! labels: u16[frames]        vocabulary ids
//! vocab_hash: u64
//! ```

use std::path::Path;

use chordkit_core::features::CqtSpectrogram;
use chordkit_core::harness::TrackFeatures;
use chordkit_core::features::FrameLabels;
use chordkit_core::ChordVocabulary;

use crate::bytes::Reader;
use crate::error::{format_err, IoContext, Result};

pub const MAGIC: &[u8; 4] = b"CQTF";
pub const VERSION: u16 = 1;
pub const EXTENSION: &str = "cqtf";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub spec: CqtSpectrogram,
    pub vocab_ids: Vec<u16>,
    pub vocab_hash: u64,
}

impl FeatureFile {
    pub fn encode(&self) -> Vec<u8> {
        let s = &self.spec;
        let mut out = Vec::with_capacity(23 + s.data.len() * 4 + self.vocab_ids.len() * 2 + 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&s.sample_rate.to_le_bytes());
        out.extend_from_slice(&(s.hop_length as u32).to_le_bytes());
        out.extend_from_slice(&(s.n_bins as u16).to_le_bytes());
        out.extend_from_slice(&(s.n_frames as u32).to_le_bytes());
        out.extend_from_slice(&s.shift.to_le_bytes());
        for v in &s.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for id in &self.vocab_ids {
            out.extend_from_slice(&id.to_le_bytes());
        }
        out.extend_from_slice(&self.vocab_hash.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err("not a feature file (bad magic)".into());
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(format!("unsupported feature file version {version}"));
        }
        let sample_rate = r.u32()?;
        let hop_length = r.u32()? as usize;
        let n_bins = r.u16()? as usize;
        let n_frames = r.u32()? as usize;
        let shift = r.i8()?;
        let data = r.f32s(n_frames * n_bins)?;
        let vocab_ids = (0..n_frames).map(|_| r.u16()).collect::<std::result::Result<_, _>>()?;
        let vocab_hash = r.u64()?;
        r.finish()?;
        let spec = CqtSpectrogram { data, n_frames, n_bins, sample_rate, hop_length, shift };
        Ok(FeatureFile { spec, vocab_ids, vocab_hash })
    }

    /// Frame labels against `vocab`, which must be the one the file was
    /// written with.
    pub fn into_track(self, id: &str, source: &str, vocab: &ChordVocabulary) -> std::result::Result<TrackFeatures, String> {
        if self.vocab_hash != vocab.fingerprint() {
            return Err("feature labels were written with a different vocabulary".into());
        }
        if let Some(&bad) = self.vocab_ids.iter().find(|&&i| i as usize >= vocab.len()) {
            return Err(format!("label id {bad} outside the vocabulary"));
        }
        let labels = FrameLabels::from_ids(self.vocab_ids, vocab);
        Ok(TrackFeatures { id: id.into(), source: source.into(), spec: self.spec, labels })
    }
}

pub fn write_features(path: &Path, file: &FeatureFile) -> Result<()> {
    std::fs::write(path, file.encode()).at(path)
}

pub fn read_features(path: &Path) -> Result<FeatureFile> {
    let bytes = std::fs::read(path).at(path)?;
    FeatureFile::decode(&bytes).map_err(|m| format_err(path, m))
}

/// `song@+2.cqtf` for track `song` shifted up two semitones.
pub fn file_name(stem: &str, shift: i8) -> String {
    format!("{stem}@{shift:+}.{EXTENSION}")
}

/// Inverse of [`file_name`]: `(stem, shift)`.
pub fn parse_file_name(name: &str) -> Option<(String, i8)> {
    let base = name.strip_suffix(&format!(".{EXTENSION}"))?;
    let (stem, shift) = base.rsplit_once('@')?;
    Some((stem.to_string(), shift.parse().ok()?))
}
