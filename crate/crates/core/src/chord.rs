//! Structured chord labels.
//!
//! A chord is encoded as six categorical components:
//!
//! ```text
//! component   classes                                   size
//! root+triad  N, 12 roots x {maj, min, sus4, sus2, dim, aug}   73
//! bass        N, C, C#, ..., B                            13
//! 7th         N, 7, b7, bb7                                4
//! 9th         N, 9, #9, b9                                 4
//! 11th        N, 11, #11                                   3
//! 13th        N, 13, b13                                   3
//! ```
//!
//! Text uses the `root:quality(/bass)` shorthand common in chord annotation
//! corpora, e.g. `C:maj7`, `A:min7/b3`, `N`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Class counts per component, in component order.
pub const COMPONENT_SIZES: [usize; 6] = [73, 13, 4, 4, 3, 3];
pub const NUM_COMPONENTS: usize = 6;

/// Sum of [`COMPONENT_SIZES`]; the width of the model's score layer.
pub const TOTAL_CLASSES: usize = {
    let mut total = 0;
    let mut i = 0;
    while i < NUM_COMPONENTS {
        total += COMPONENT_SIZES[i];
        i += 1;
    }
    total
};

const _: () = assert!(TOTAL_CLASSES == 100);

const PITCH_NAMES: [&str; 12] = [
    "C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty chord symbol")]
    Empty,
    #[error("malformed chord symbol {symbol:?}: bad token {token:?}")]
    Malformed { symbol: String, token: String },
    #[error("unsupported chord quality {quality:?} in {symbol:?}")]
    UnsupportedQuality { symbol: String, quality: String },
}

impl ParseError {
    fn malformed(symbol: &str, token: &str) -> Self {
        ParseError::Malformed { symbol: symbol.into(), token: token.into() }
    }

    fn unsupported(symbol: &str, quality: &str) -> Self {
        ParseError::UnsupportedQuality { symbol: symbol.into(), quality: quality.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PitchClass(u8);

impl PitchClass {
    pub const C: PitchClass = PitchClass(0);

    /// Wraps any integer onto the 12-tone circle.
    pub fn new(value: i32) -> Self {
        PitchClass(value.rem_euclid(12) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        PITCH_NAMES[self.0 as usize]
    }

    pub fn transpose(self, semitones: i32) -> Self {
        PitchClass::new(self.0 as i32 + semitones)
    }

    /// Upward interval in semitones from `self` to `other`.
    pub fn interval_to(self, other: PitchClass) -> u8 {
        (other.0 + 12 - self.0) % 12
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PitchClass {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_note(s).ok_or_else(|| ParseError::malformed(s, s))
    }
}

fn parse_note(s: &str) -> Option<PitchClass> {
    let mut chars = s.chars();
    let base = match chars.next()? {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return None,
    };
    let mut offset = 0i32;
    for c in chars {
        match c {
            '#' => offset += 1,
            'b' => offset -= 1,
            _ => return None,
        }
    }
    Some(PitchClass::new(base + offset))
}

/// Set of pitch classes as a 12-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PitchClassSet(u16);

impl PitchClassSet {
    pub const EMPTY: PitchClassSet = PitchClassSet(0);

    pub fn from_mask(mask: u16) -> Self {
        PitchClassSet(mask & 0x0fff)
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn insert(&mut self, pc: PitchClass) {
        self.0 |= 1 << pc.0;
    }

    pub fn contains(self, pc: PitchClass) -> bool {
        self.0 & (1 << pc.0) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: PitchClassSet) -> PitchClassSet {
        PitchClassSet(self.0 & other.0)
    }

    pub fn transpose(self, semitones: i32) -> PitchClassSet {
        self.iter().map(|pc| pc.transpose(semitones)).collect()
    }

    pub fn iter(self) -> impl Iterator<Item = PitchClass> {
        (0..12u8).filter(move |i| self.0 & (1 << i) != 0).map(PitchClass)
    }
}

impl FromIterator<PitchClass> for PitchClassSet {
    fn from_iter<I: IntoIterator<Item = PitchClass>>(iter: I) -> Self {
        let mut set = PitchClassSet::EMPTY;
        for pc in iter {
            set.insert(pc);
        }
        set
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Triad {
    Major,
    Minor,
    Sus4,
    Sus2,
    Diminished,
    Augmented,
}

impl Triad {
    pub const ALL: [Triad; 6] = [
        Triad::Major,
        Triad::Minor,
        Triad::Sus4,
        Triad::Sus2,
        Triad::Diminished,
        Triad::Augmented,
    ];

    fn index(self) -> u8 {
        self as u8
    }

    pub fn intervals(self) -> [u8; 3] {
        match self {
            Triad::Major => [0, 4, 7],
            Triad::Minor => [0, 3, 7],
            Triad::Sus4 => [0, 5, 7],
            Triad::Sus2 => [0, 2, 7],
            Triad::Diminished => [0, 3, 6],
            Triad::Augmented => [0, 4, 8],
        }
    }

    /// Interval of the chord's third degree; suspended triads use the
    /// degree that replaces the third.
    pub fn third(self) -> u8 {
        self.intervals()[1]
    }

    fn shorthand(self) -> &'static str {
        match self {
            Triad::Major => "maj",
            Triad::Minor => "min",
            Triad::Sus4 => "sus4",
            Triad::Sus2 => "sus2",
            Triad::Diminished => "dim",
            Triad::Augmented => "aug",
        }
    }
}

/// 7th component: `N`, `7` (major seventh), `b7`, `bb7` (the sixth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Seventh {
    None,
    Major,
    Minor,
    Diminished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ninth {
    None,
    Natural,
    Sharp,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eleventh {
    None,
    Natural,
    Sharp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Thirteenth {
    None,
    Natural,
    Flat,
}

impl Seventh {
    const ALL: [Seventh; 4] = [Seventh::None, Seventh::Major, Seventh::Minor, Seventh::Diminished];
    fn interval(self) -> Option<u8> {
        match self {
            Seventh::None => None,
            Seventh::Major => Some(11),
            Seventh::Minor => Some(10),
            Seventh::Diminished => Some(9),
        }
    }
    fn degree(self) -> &'static str {
        ["", "7", "b7", "bb7"][self as usize]
    }
}

impl Ninth {
    const ALL: [Ninth; 4] = [Ninth::None, Ninth::Natural, Ninth::Sharp, Ninth::Flat];
    fn interval(self) -> Option<u8> {
        match self {
            Ninth::None => None,
            Ninth::Natural => Some(2),
            Ninth::Sharp => Some(3),
            Ninth::Flat => Some(1),
        }
    }
    fn degree(self) -> &'static str {
        ["", "9", "#9", "b9"][self as usize]
    }
}

impl Eleventh {
    const ALL: [Eleventh; 3] = [Eleventh::None, Eleventh::Natural, Eleventh::Sharp];
    fn interval(self) -> Option<u8> {
        match self {
            Eleventh::None => None,
            Eleventh::Natural => Some(5),
            Eleventh::Sharp => Some(6),
        }
    }
    fn degree(self) -> &'static str {
        ["", "11", "#11"][self as usize]
    }
}

impl Thirteenth {
    const ALL: [Thirteenth; 3] = [Thirteenth::None, Thirteenth::Natural, Thirteenth::Flat];
    fn interval(self) -> Option<u8> {
        match self {
            Thirteenth::None => None,
            Thirteenth::Natural => Some(9),
            Thirteenth::Flat => Some(8),
        }
    }
    fn degree(self) -> &'static str {
        ["", "13", "b13"][self as usize]
    }
}

/// Extension components of a chord (everything above the triad).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Extensions {
    pub seventh: Seventh,
    pub ninth: Ninth,
    pub eleventh: Eleventh,
    pub thirteenth: Thirteenth,
}

impl Extensions {
    pub const NONE: Extensions = Extensions {
        seventh: Seventh::None,
        ninth: Ninth::None,
        eleventh: Eleventh::None,
        thirteenth: Thirteenth::None,
    };

    pub fn count(&self) -> usize {
        (self.seventh != Seventh::None) as usize
            + (self.ninth != Ninth::None) as usize
            + (self.eleventh != Eleventh::None) as usize
            + (self.thirteenth != Thirteenth::None) as usize
    }

    /// True if every non-N component of `self` also appears in `other`.
    fn is_subset_of(&self, other: &Extensions) -> bool {
        (self.seventh == Seventh::None || self.seventh == other.seventh)
            && (self.ninth == Ninth::None || self.ninth == other.ninth)
            && (self.eleventh == Eleventh::None || self.eleventh == other.eleventh)
            && (self.thirteenth == Thirteenth::None || self.thirteenth == other.thirteenth)
    }
}

/// Named qualities, in preference order for formatting.
const SHORTHANDS: &[(&str, Triad, Extensions)] = {
    use Eleventh as E;
    use Ninth as Nn;
    use Seventh as S;
    use Thirteenth as Th;
    const fn ext(s: S, n: Nn, e: E, t: Th) -> Extensions {
        Extensions { seventh: s, ninth: n, eleventh: e, thirteenth: t }
    }
    &[
        ("maj", Triad::Major, ext(S::None, Nn::None, E::None, Th::None)),
        ("min", Triad::Minor, ext(S::None, Nn::None, E::None, Th::None)),
        ("dim", Triad::Diminished, ext(S::None, Nn::None, E::None, Th::None)),
        ("aug", Triad::Augmented, ext(S::None, Nn::None, E::None, Th::None)),
        ("sus2", Triad::Sus2, ext(S::None, Nn::None, E::None, Th::None)),
        ("sus4", Triad::Sus4, ext(S::None, Nn::None, E::None, Th::None)),
        ("7", Triad::Major, ext(S::Minor, Nn::None, E::None, Th::None)),
        ("maj7", Triad::Major, ext(S::Major, Nn::None, E::None, Th::None)),
        ("min7", Triad::Minor, ext(S::Minor, Nn::None, E::None, Th::None)),
        ("minmaj7", Triad::Minor, ext(S::Major, Nn::None, E::None, Th::None)),
        ("dim7", Triad::Diminished, ext(S::Diminished, Nn::None, E::None, Th::None)),
        ("hdim7", Triad::Diminished, ext(S::Minor, Nn::None, E::None, Th::None)),
        ("maj6", Triad::Major, ext(S::Diminished, Nn::None, E::None, Th::None)),
        ("min6", Triad::Minor, ext(S::Diminished, Nn::None, E::None, Th::None)),
        ("9", Triad::Major, ext(S::Minor, Nn::Natural, E::None, Th::None)),
        ("maj9", Triad::Major, ext(S::Major, Nn::Natural, E::None, Th::None)),
        ("min9", Triad::Minor, ext(S::Minor, Nn::Natural, E::None, Th::None)),
        ("11", Triad::Major, ext(S::Minor, Nn::Natural, E::Natural, Th::None)),
        ("min11", Triad::Minor, ext(S::Minor, Nn::Natural, E::Natural, Th::None)),
        ("13", Triad::Major, ext(S::Minor, Nn::Natural, E::None, Th::Natural)),
        ("maj13", Triad::Major, ext(S::Major, Nn::Natural, E::None, Th::Natural)),
        ("min13", Triad::Minor, ext(S::Minor, Nn::Natural, E::None, Th::Natural)),
    ]
};

/// Interval names used for slash basses, indexed by semitone.
const BASS_DEGREES: [&str; 12] = ["1", "b2", "2", "b3", "3", "4", "b5", "5", "#5", "6", "b7", "7"];

/// A chord in the six-component encoding. Stored as raw class indices, one per
/// component, always within [`COMPONENT_SIZES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StructuredChord([u8; NUM_COMPONENTS]);

impl StructuredChord {
    /// The no-chord label: every component is `N`.
    pub const N: StructuredChord = StructuredChord([0; NUM_COMPONENTS]);

    pub fn new(root: PitchClass, triad: Triad, bass: PitchClass, ext: Extensions) -> Self {
        StructuredChord([
            1 + root.0 * 6 + triad.index(),
            1 + bass.0,
            ext.seventh as u8,
            ext.ninth as u8,
            ext.eleventh as u8,
            ext.thirteenth as u8,
        ])
    }

    /// Builds a chord from component class indices, rejecting out-of-range
    /// indices and partially-N tuples.
    pub fn from_components(indices: [usize; NUM_COMPONENTS]) -> Option<Self> {
        if indices.iter().zip(COMPONENT_SIZES).any(|(&i, size)| i >= size) {
            return None;
        }
        let no_root = indices[0] == 0;
        let no_bass = indices[1] == 0;
        if no_root != no_bass || (no_root && indices[2..].iter().any(|&i| i != 0)) {
            return None;
        }
        let mut raw = [0u8; NUM_COMPONENTS];
        for (r, i) in raw.iter_mut().zip(indices) {
            *r = i as u8;
        }
        Some(StructuredChord(raw))
    }

    pub fn components(&self) -> [usize; NUM_COMPONENTS] {
        self.0.map(usize::from)
    }

    pub fn is_no_chord(&self) -> bool {
        self.0[0] == 0
    }

    pub fn root(&self) -> Option<PitchClass> {
        (!self.is_no_chord()).then(|| PitchClass((self.0[0] - 1) / 6))
    }

    pub fn triad(&self) -> Option<Triad> {
        (!self.is_no_chord()).then(|| Triad::ALL[((self.0[0] - 1) % 6) as usize])
    }

    pub fn bass(&self) -> Option<PitchClass> {
        (self.0[1] != 0).then(|| PitchClass(self.0[1] - 1))
    }

    pub fn extensions(&self) -> Extensions {
        Extensions {
            seventh: Seventh::ALL[self.0[2] as usize],
            ninth: Ninth::ALL[self.0[3] as usize],
            eleventh: Eleventh::ALL[self.0[4] as usize],
            thirteenth: Thirteenth::ALL[self.0[5] as usize],
        }
    }

    pub fn root_triad_index(&self) -> usize {
        self.0[0] as usize
    }

    /// Shifts root and bass by `semitones` (mod 12); N is fixed.
    pub fn transpose(&self, semitones: i32) -> Self {
        match (self.root(), self.triad(), self.bass()) {
            (Some(root), Some(triad), Some(bass)) => StructuredChord::new(
                root.transpose(semitones),
                triad,
                bass.transpose(semitones),
                self.extensions(),
            ),
            _ => *self,
        }
    }

    /// Absolute pitch classes of root, triad and every non-N extension.
    pub fn pitch_classes(&self) -> PitchClassSet {
        let (Some(root), Some(triad)) = (self.root(), self.triad()) else {
            return PitchClassSet::EMPTY;
        };
        let ext = self.extensions();
        triad
            .intervals()
            .into_iter()
            .chain(ext.seventh.interval())
            .chain(ext.ninth.interval())
            .chain(ext.eleventh.interval())
            .chain(ext.thirteenth.interval())
            .map(|i| root.transpose(i as i32))
            .collect()
    }

    /// Quality text without the root, e.g. `maj7`, `min/b3`, `sus4(b7)`; `N`
    /// for the no-chord.
    pub fn quality_label(&self) -> String {
        let (Some(root), Some(triad), Some(bass)) = (self.root(), self.triad(), self.bass()) else {
            return "N".into();
        };
        let mut out = quality_text(triad, &self.extensions());
        let degree = root.interval_to(bass);
        if degree != 0 {
            out.push('/');
            out.push_str(BASS_DEGREES[degree as usize]);
        }
        out
    }
}

impl Default for StructuredChord {
    fn default() -> Self {
        StructuredChord::N
    }
}

fn quality_text(triad: Triad, ext: &Extensions) -> String {
    let exact = SHORTHANDS.iter().find(|(_, t, e)| *t == triad && e == ext);
    if let Some((name, _, _)) = exact {
        return (*name).into();
    }
    // Largest named subset (first in table order on ties), then list the
    // remaining degrees.
    let (name, base) = SHORTHANDS
        .iter()
        .filter(|(_, t, e)| *t == triad && e.is_subset_of(ext))
        .fold((triad.shorthand(), Extensions::NONE), |best, (n, _, e)| {
            if e.count() > best.1.count() {
                (*n, *e)
            } else {
                best
            }
        });

    let mut extra: Vec<&str> = Vec::new();
    if base.seventh == Seventh::None && ext.seventh != Seventh::None {
        extra.push(ext.seventh.degree());
    }
    if base.ninth == Ninth::None && ext.ninth != Ninth::None {
        extra.push(ext.ninth.degree());
    }
    if base.eleventh == Eleventh::None && ext.eleventh != Eleventh::None {
        extra.push(ext.eleventh.degree());
    }
    if base.thirteenth == Thirteenth::None && ext.thirteenth != Thirteenth::None {
        extra.push(ext.thirteenth.degree());
    }
    let mut out = String::from(name);
    if !extra.is_empty() {
        out.push('(');
        out.push_str(&extra.join(","));
        out.push(')');
    }
    out
}

impl fmt::Display for StructuredChord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.root() {
            None => f.write_str("N"),
            Some(root) => write!(f, "{}:{}", root, self.quality_label()),
        }
    }
}

impl FromStr for StructuredChord {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_chord_symbol(s)
    }
}

/// Names of the six components, in encoding order.
pub const COMPONENT_NAMES: [&str; NUM_COMPONENTS] = ["root_triad", "bass", "seventh", "ninth", "eleventh", "thirteenth"];

/// Readable name of class `index` of `component`, e.g. `C#:min`, `Ab`, `b7`.
/// Index 0 is `N` for every component.
pub fn component_class_name(component: usize, index: usize) -> Option<String> {
    if component >= NUM_COMPONENTS || index >= COMPONENT_SIZES[component] {
        return None;
    }
    if index == 0 {
        return Some("N".into());
    }
    let i = index - 1;
    let name = match component {
        0 => format!("{}:{}", PITCH_NAMES[i / 6], Triad::ALL[i % 6].shorthand()),
        1 => PITCH_NAMES[i].into(),
        2 => Seventh::ALL[index].degree().into(),
        3 => Ninth::ALL[index].degree().into(),
        4 => Eleventh::ALL[index].degree().into(),
        _ => Thirteenth::ALL[index].degree().into(),
    };
    Some(name)
}

/// Canonical text of a chord; inverse of [`parse_chord_symbol`] on canonical
/// spellings.
pub fn format_chord_symbol(chord: &StructuredChord) -> String {
    chord.to_string()
}

/// Semitone offset of a scale degree such as `b3`, `#11` or `5`.
fn parse_degree(token: &str) -> Option<(i32, u8)> {
    let digits_at = token.find(|c: char| c.is_ascii_digit())?;
    let (accidentals, number) = token.split_at(digits_at);
    let number: u8 = number.parse().ok()?;
    let base = match number {
        1 | 8 => 0,
        2 | 9 => 2,
        3 | 10 => 4,
        4 | 11 => 5,
        5 | 12 => 7,
        6 | 13 => 9,
        7 => 11,
        _ => return None,
    };
    let mut offset = 0i32;
    for c in accidentals.chars() {
        match c {
            '#' => offset += 1,
            'b' => offset -= 1,
            _ => return None,
        }
    }
    Some((base + offset, number))
}

/// Splits `quality` into shorthand and the parenthesised degree list.
fn split_quality<'a>(symbol: &str, quality: &'a str) -> Result<(&'a str, Option<&'a str>), ParseError> {
    match quality.find('(') {
        None => Ok((quality, None)),
        Some(open) => {
            let rest = &quality[open + 1..];
            let close = rest
                .find(')')
                .ok_or_else(|| ParseError::malformed(symbol, &quality[open..]))?;
            if close + 1 != rest.len() {
                return Err(ParseError::malformed(symbol, &rest[close + 1..]));
            }
            Ok((&quality[..open], Some(&rest[..close])))
        }
    }
}

fn add_degree(symbol: &str, triad: Triad, ext: &mut Extensions, token: &str) -> Result<(), ParseError> {
    let (semitones, number) =
        parse_degree(token).ok_or_else(|| ParseError::malformed(symbol, token))?;
    let semitones = semitones.rem_euclid(12) as u8;
    let unsupported = || ParseError::unsupported(symbol, token);
    fn set<T: PartialEq + Copy>(slot: &mut T, none: T, value: T) -> bool {
        if *slot == none || *slot == value {
            *slot = value;
            true
        } else {
            false
        }
    }
    let ok = match (number, semitones) {
        (7, 11) => set(&mut ext.seventh, Seventh::None, Seventh::Major),
        (7, 10) => set(&mut ext.seventh, Seventh::None, Seventh::Minor),
        (7, 9) | (6, 9) => set(&mut ext.seventh, Seventh::None, Seventh::Diminished),
        (2 | 9, 2) => set(&mut ext.ninth, Ninth::None, Ninth::Natural),
        (2 | 9, 3) => set(&mut ext.ninth, Ninth::None, Ninth::Sharp),
        (2 | 9, 1) => set(&mut ext.ninth, Ninth::None, Ninth::Flat),
        (4 | 11, 5) => set(&mut ext.eleventh, Eleventh::None, Eleventh::Natural),
        (4 | 11, 6) => set(&mut ext.eleventh, Eleventh::None, Eleventh::Sharp),
        (13, 9) => set(&mut ext.thirteenth, Thirteenth::None, Thirteenth::Natural),
        (6 | 13, 8) => set(&mut ext.thirteenth, Thirteenth::None, Thirteenth::Flat),
        (1 | 3 | 5, s) => triad.intervals().contains(&s),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(unsupported())
    }
}

/// Splits a symbol into root text, quality text and bass text.
fn split_symbol(symbol: &str) -> Result<(&str, Option<&str>, Option<&str>), ParseError> {
    let (head, bass) = match symbol.split_once('/') {
        Some((h, b)) => (h, Some(b)),
        None => (symbol, None),
    };
    let (root, quality) = match head.split_once(':') {
        Some((r, q)) => (r, Some(q)),
        None => (head, None),
    };
    if root.is_empty() {
        return Err(ParseError::malformed(symbol, root));
    }
    if quality == Some("") {
        return Err(ParseError::malformed(symbol, ":"));
    }
    if bass == Some("") {
        return Err(ParseError::malformed(symbol, "/"));
    }
    Ok((root, quality, bass))
}

fn parse_bass(symbol: &str, root: PitchClass, text: &str) -> Result<PitchClass, ParseError> {
    if let Some(pc) = parse_note(text) {
        return Ok(pc);
    }
    let (semitones, _) = parse_degree(text).ok_or_else(|| ParseError::malformed(symbol, text))?;
    Ok(root.transpose(semitones))
}

/// Parses `root:quality(/bass)` or `N` into the six-component encoding.
///
/// A missing quality means `maj`; a missing bass means the root. Slash basses
/// may be scale degrees (`/b3`) or note names (`/Eb`) and are stored as
/// absolute pitch classes.
pub fn parse_chord_symbol(text: &str) -> Result<StructuredChord, ParseError> {
    let symbol = text.trim();
    if symbol.is_empty() {
        return Err(ParseError::Empty);
    }
    if symbol == "N" {
        return Ok(StructuredChord::N);
    }
    let (root_text, quality, bass_text) = split_symbol(symbol)?;
    let root = parse_note(root_text).ok_or_else(|| ParseError::malformed(symbol, root_text))?;

    let quality = quality.unwrap_or("maj");
    let (shorthand, degrees) = split_quality(symbol, quality)?;
    let (triad, mut ext) = if shorthand.is_empty() {
        return Err(ParseError::unsupported(symbol, quality));
    } else {
        SHORTHANDS
            .iter()
            .find(|(name, _, _)| *name == shorthand)
            .map(|(_, t, e)| (*t, *e))
            .ok_or_else(|| ParseError::unsupported(symbol, shorthand))?
    };
    if let Some(list) = degrees {
        for token in list.split(',').map(str::trim) {
            if token.starts_with('*') {
                return Err(ParseError::unsupported(symbol, token));
            }
            add_degree(symbol, triad, &mut ext, token)?;
        }
    }
    let bass = match bass_text {
        Some(b) => parse_bass(symbol, root, b)?,
        None => root,
    };
    Ok(StructuredChord::new(root, triad, bass, ext))
}

/// Best-effort pitch-class content of any shorthand symbol, including
/// qualities outside the structured encoding (omissions, power chords,
/// bare interval lists). Returns `None` for unparseable text.
pub fn symbol_pitch_classes(text: &str) -> Option<PitchClassSet> {
    let symbol = text.trim();
    if symbol == "N" || symbol == "X" {
        return Some(PitchClassSet::EMPTY);
    }
    let (root_text, quality, _) = split_symbol(symbol).ok()?;
    let root = parse_note(root_text)?;
    let (shorthand, degrees) = split_quality(symbol, quality.unwrap_or("maj")).ok()?;
    let mut set = PitchClassSet::EMPTY;
    match shorthand {
        "" => set.insert(root),
        "1" => set.insert(root),
        "5" => {
            set.insert(root);
            set.insert(root.transpose(7));
        }
        name => {
            let base: StructuredChord = SHORTHANDS
                .iter()
                .find(|(n, _, _)| *n == name)
                .map(|(_, t, e)| StructuredChord::new(root, *t, root, *e))?;
            set = base.pitch_classes();
        }
    }
    for token in degrees.into_iter().flat_map(|l| l.split(',')).map(str::trim) {
        let (omit, degree) = match token.strip_prefix('*') {
            Some(d) => (true, d),
            None => (false, token),
        };
        let (semitones, _) = parse_degree(degree)?;
        let pc = root.transpose(semitones);
        if omit {
            set = PitchClassSet::from_mask(set.mask() & !(1 << pc.value()));
        } else {
            set.insert(pc);
        }
    }
    Some(set)
}

/// Chord-comparison families used for weighted chord symbol recall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Root,
    Thirds,
    MajMin,
    Triads,
    Sevenths,
    Tetrads,
    Mirex,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::Root,
        MetricKind::Thirds,
        MetricKind::MajMin,
        MetricKind::Triads,
        MetricKind::Sevenths,
        MetricKind::Tetrads,
        MetricKind::Mirex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Root => "root",
            MetricKind::Thirds => "thirds",
            MetricKind::MajMin => "majmin",
            MetricKind::Triads => "triads",
            MetricKind::Sevenths => "sevenths",
            MetricKind::Tetrads => "tetrads",
            MetricKind::Mirex => "mirex",
        }
    }

    /// Whether a reference chord takes part in scoring for this family.
    /// `majmin` and `sevenths` drop references outside their reduced vocabularies.
    pub fn scores_reference(self, reference: &StructuredChord) -> bool {
        match self {
            MetricKind::MajMin => majmin_reference(reference).is_some(),
            MetricKind::Sevenths => sevenths_reference(reference).is_some(),
            _ => true,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric kind {0:?}")]
pub struct UnknownMetric(pub String);

impl FromStr for MetricKind {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownMetric(s.to_string()))
    }
}

/// `Some(root_triad)` when the chord is exactly maj, min (any bass) or N.
fn majmin_reference(c: &StructuredChord) -> Option<usize> {
    match c.triad() {
        None => Some(0),
        Some(Triad::Major | Triad::Minor) if c.extensions() == Extensions::NONE => {
            Some(c.root_triad_index())
        }
        _ => None,
    }
}

/// Triad-level projection of an estimate onto {maj, min, N}.
fn majmin_estimate(c: &StructuredChord) -> Option<usize> {
    match c.triad() {
        None => Some(0),
        Some(Triad::Major | Triad::Minor) => Some(c.root_triad_index()),
        _ => None,
    }
}

fn sevenths_allowed(triad: Triad, seventh: Seventh) -> bool {
    matches!(
        (triad, seventh),
        (Triad::Major | Triad::Minor, Seventh::None)
            | (Triad::Major, Seventh::Major | Seventh::Minor)
            | (Triad::Minor, Seventh::Minor)
    )
}

/// `Some((root_triad, seventh))` when the chord is exactly one of maj, min,
/// maj7, min7, 7 (any bass) or N.
fn sevenths_reference(c: &StructuredChord) -> Option<(usize, usize)> {
    let Some(triad) = c.triad() else { return Some((0, 0)) };
    let ext = c.extensions();
    let plain = ext.ninth == Ninth::None && ext.eleventh == Eleventh::None && ext.thirteenth == Thirteenth::None;
    (plain && sevenths_allowed(triad, ext.seventh)).then(|| (c.root_triad_index(), ext.seventh as usize))
}

fn sevenths_estimate(c: &StructuredChord) -> Option<(usize, usize)> {
    let Some(triad) = c.triad() else { return Some((0, 0)) };
    let seventh = c.extensions().seventh;
    sevenths_allowed(triad, seventh).then(|| (c.root_triad_index(), seventh as usize))
}

fn third_pitch(c: &StructuredChord) -> Option<PitchClass> {
    Some(c.root()?.transpose(c.triad()?.third() as i32))
}

/// Compares a reference and an estimate under one metric family.
///
/// For `majmin` and `sevenths`, a reference outside the reduced vocabulary
/// falls back to root+triad equality; such references are excluded from
/// scoring (see [`MetricKind::scores_reference`]).
pub fn compare(metric: MetricKind, reference: &StructuredChord, estimate: &StructuredChord) -> bool {
    match metric {
        MetricKind::Root => reference.root() == estimate.root(),
        MetricKind::Thirds => {
            reference.root() == estimate.root() && third_pitch(reference) == third_pitch(estimate)
        }
        MetricKind::Triads => reference.root_triad_index() == estimate.root_triad_index(),
        MetricKind::Tetrads => {
            reference.root_triad_index() == estimate.root_triad_index()
                && reference.extensions().seventh == estimate.extensions().seventh
        }
        MetricKind::MajMin => match majmin_reference(reference) {
            Some(r) => majmin_estimate(estimate) == Some(r),
            None => reference.root_triad_index() == estimate.root_triad_index(),
        },
        MetricKind::Sevenths => match sevenths_reference(reference) {
            Some(r) => sevenths_estimate(estimate) == Some(r),
            None => {
                reference.root_triad_index() == estimate.root_triad_index()
                    && reference.extensions().seventh == estimate.extensions().seventh
            }
        },
        MetricKind::Mirex => {
            let (r, e) = (reference.pitch_classes(), estimate.pitch_classes());
            if r.len() < 3 || e.len() < 3 {
                r == e
            } else {
                r.intersection(e).len() >= 3
            }
        }
    }
}
