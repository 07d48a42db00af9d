//! The decode vocabulary: an ordered list of chord symbols, each paired with its
//! structured encoding.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chord::{parse_chord_symbol, symbol_pitch_classes, ParseError, StructuredChord};

const DEFAULT_VOCABULARY: &str = include_str!("../data/vocabulary.txt");

/// Size of the shipped vocabulary (N plus 12 roots x 25 qualities).
pub const DEFAULT_VOCABULARY_SIZE: usize = 301;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: duplicate entry {symbol:?}")]
    Duplicate { line: usize, symbol: String },
    #[error("vocabulary is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub symbol: String,
    pub chord: StructuredChord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordVocabulary {
    entries: Vec<VocabEntry>,
    by_chord: BTreeMap<StructuredChord, usize>,
    by_symbol: BTreeMap<String, usize>,
}

impl ChordVocabulary {
    /// Parses one symbol per line; blank lines and lines starting with `#` are
    /// skipped.
    /// Symbols are stored in canonical spelling.
    pub fn parse(text: &str) -> Result<Self, VocabError> {
        let mut entries = Vec::new();
        let mut by_chord = BTreeMap::new();
        let mut by_symbol = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let chord = parse_chord_symbol(content).map_err(|source| VocabError::Parse { line, source })?;
            let symbol = chord.to_string();
            let id = entries.len();
            if by_chord.insert(chord, id).is_some() || by_symbol.insert(symbol.clone(), id).is_some() {
                return Err(VocabError::Duplicate { line, symbol: content.into() });
            }
            entries.push(VocabEntry { symbol, chord });
        }
        if entries.is_empty() {
            return Err(VocabError::Empty);
        }
        Ok(ChordVocabulary { entries, by_chord, by_symbol })
    }

    /// The shipped 301-entry vocabulary.
    pub fn standard() -> Self {
        let vocab = Self::parse(DEFAULT_VOCABULARY).expect("shipped vocabulary parses");
        assert_eq!(vocab.len(), DEFAULT_VOCABULARY_SIZE);
        vocab
    }

    /// Raw text of the shipped vocabulary file.
    pub fn standard_text() -> &'static str {
        DEFAULT_VOCABULARY
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn chord(&self, id: usize) -> &StructuredChord {
        &self.entries[id].chord
    }

    pub fn symbol(&self, id: usize) -> &str {
        &self.entries[id].symbol
    }

    pub fn id_of(&self, chord: &StructuredChord) -> Option<usize> {
        self.by_chord.get(chord).copied()
    }

    pub fn id_of_symbol(&self, symbol: &str) -> Option<usize> {
        self.by_symbol.get(symbol).copied()
    }

    /// Index of the entry sharing the most pitch classes with `chord`; ties go
    /// to the entry with fewer non-N components, then matching bass, then the
    /// lowest index. Exact members map to themselves.
    pub fn nearest(&self, chord: &StructuredChord) -> usize {
        if let Some(id) = self.id_of(chord) {
            return id;
        }
        let pcs = chord.pitch_classes();
        self.nearest_by(|entry| {
            let shared = entry.pitch_classes().intersection(pcs).len();
            (shared, entry.bass() == chord.bass())
        })
    }

    fn nearest_by<F>(&self, mut key: F) -> usize
    where
        F: FnMut(&StructuredChord) -> (usize, bool),
    {
        let mut best = 0;
        let mut best_key = (0usize, usize::MAX, false);
        for (id, entry) in self.entries.iter().enumerate() {
            let (shared, same_bass) = key(&entry.chord);
            let k = (shared, complexity(&entry.chord), same_bass);
            let better = k.0 > best_key.0
                || (k.0 == best_key.0 && k.1 < best_key.1)
                || (k.0 == best_key.0 && k.1 == best_key.1 && k.2 && !best_key.2);
            if id == 0 || better {
                best = id;
                best_key = k;
            }
        }
        best
    }

    /// Maps annotation text to a vocabulary index. Parseable chords outside the
    /// vocabulary go to [`nearest`](Self::nearest); qualities the structured
    /// encoding cannot hold are matched on their pitch-class content.
    /// The unknown-chord marker `X` resolves like `N`.
    pub fn resolve(&self, text: &str) -> Result<usize, ParseError> {
        if text.trim() == "X" {
            return Ok(self.id_of(&StructuredChord::N).unwrap_or(0));
        }
        match parse_chord_symbol(text) {
            Ok(chord) => Ok(self.nearest(&chord)),
            Err(err @ ParseError::UnsupportedQuality { .. }) => {
                let pcs = symbol_pitch_classes(text).ok_or(err)?;
                if pcs.is_empty() {
                    return Ok(self.id_of(&StructuredChord::N).unwrap_or(0));
                }
                Ok(self.nearest_by(|entry| (entry.pitch_classes().intersection(pcs).len(), false)))
            }
            Err(err) => Err(err),
        }
    }

    /// FNV-1a over the canonical symbols, newline separated.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for entry in &self.entries {
            for b in entry.symbol.bytes().chain(core::iter::once(b'\n')) {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }

    /// Distinct root-free quality labels in first-appearance order.
    pub fn quality_classes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for entry in &self.entries {
            let q = entry.chord.quality_label();
            if !out.contains(&q) {
                out.push(q);
            }
        }
        out
    }
}

fn complexity(chord: &StructuredChord) -> usize {
    chord.extensions().count() + (chord.bass() != chord.root()) as usize
}
