//! Vocabulary-constrained decoding of component activations: per-frame
//! argmax, and Viterbi over a chain CRF whose only transition potential is a
//! flat penalty on every label change.

use alloc::vec;
use alloc::vec::Vec;

use crate::chord::NUM_COMPONENTS;
use crate::conformer::ComponentActivations;
use crate::features::ChordInterval;
use crate::tensor::Scalar;
use crate::vocab::ChordVocabulary;

pub const DEFAULT_TRANSITION_PENALTY: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("lattice has no frames")]
    EmptyLattice,
    #[error("transition penalty {0} must be finite and non-negative")]
    Penalty(f64),
    #[error("vocabulary entry {entry} uses class {class} of component {component}, beyond the activations")]
    ComponentRange { entry: usize, component: usize, class: usize },
}

/// `obs_logp[t * size + v]` is the summed component log-probability of
/// vocabulary entry `v` at frame `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeLattice {
    pub frames: usize,
    pub size: usize,
    pub obs_logp: Vec<f64>,
}

impl DecodeLattice {
    pub fn new(frames: usize, size: usize, obs_logp: Vec<f64>) -> Self {
        assert_eq!(obs_logp.len(), frames * size, "lattice data length");
        DecodeLattice { frames, size, obs_logp }
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.obs_logp[t * self.size..(t + 1) * self.size]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChordPath {
    pub ids: Vec<usize>,
    pub score: f64,
}

impl ChordPath {
    pub fn transitions(&self) -> usize {
        count_transitions(&self.ids)
    }
}

pub fn count_transitions(ids: &[usize]) -> usize {
    ids.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn build_lattice<F: Scalar>(acts: &ComponentActivations<F>, vocab: &ChordVocabulary) -> Result<DecodeLattice, DecodeError> {
    let tuples: Vec<[usize; NUM_COMPONENTS]> = vocab.entries().iter().map(|e| e.chord.components()).collect();
    for (entry, tuple) in tuples.iter().enumerate() {
        for (component, &class) in tuple.iter().enumerate() {
            if class >= acts.sizes[component] {
                return Err(DecodeError::ComponentRange { entry, component, class });
            }
        }
    }
    let width = acts.width();
    let offsets: [usize; NUM_COMPONENTS] = core::array::from_fn(|j| acts.offset(j));
    let mut logs = vec![0.0; width];
    let mut obs = Vec::with_capacity(acts.frames * tuples.len());
    for t in 0..acts.frames {
        for (l, p) in logs.iter_mut().zip(&acts.probs[t * width..(t + 1) * width]) {
            *l = libm::log(p.as_f64());
        }
        obs.extend(tuples.iter().map(|tuple| (0..NUM_COMPONENTS).map(|j| logs[offsets[j] + tuple[j]]).sum::<f64>()));
    }
    Ok(DecodeLattice::new(acts.frames, tuples.len(), obs))
}

/// Log-domain score of a path: observations minus `penalty` per change.
pub fn path_score(lattice: &DecodeLattice, ids: &[usize], penalty: f64) -> f64 {
    let obs: f64 = ids.iter().enumerate().map(|(t, &v)| lattice.row(t)[v]).sum();
    obs - penalty * count_transitions(ids) as f64
}

/// First index of the maximum.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Per-frame argmax; ties go to the lowest vocabulary index.
pub fn greedy_decode(lattice: &DecodeLattice) -> ChordPath {
    let ids: Vec<usize> = (0..lattice.frames).map(|t| argmax(lattice.row(t))).collect();
    let score = path_score(lattice, &ids, 0.0);
    ChordPath { ids, score }
}

/// Exact maximizer of [`path_score`] in `O(T * |V|)`: each state's best
/// predecessor is either itself or the best other state, found from the top
/// two scores of the previous frame. Ties prefer the lower index.
pub fn viterbi_decode(lattice: &DecodeLattice, penalty: f64) -> Result<ChordPath, DecodeError> {
    if !(penalty >= 0.0) || !penalty.is_finite() {
        return Err(DecodeError::Penalty(penalty));
    }
    if lattice.frames == 0 || lattice.size == 0 {
        return Err(DecodeError::EmptyLattice);
    }
    let (n, v_count) = (lattice.frames, lattice.size);
    let mut delta = lattice.row(0).to_vec();
    let mut next = vec![0.0; v_count];
    let mut back = vec![0u32; n * v_count];
    for t in 1..n {
        let first = argmax(&delta);
        let mut second = usize::MAX;
        for (u, &d) in delta.iter().enumerate() {
            if u != first && (second == usize::MAX || d > delta[second]) {
                second = u;
            }
        }
        let obs = lattice.row(t);
        for v in 0..v_count {
            let stay = delta[v];
            let (pred, score) = if v != first {
                let switch = delta[first] - penalty;
                if switch > stay || (switch == stay && first < v) {
                    (first, switch)
                } else {
                    (v, stay)
                }
            } else if second != usize::MAX {
                let switch = delta[second] - penalty;
                if switch > stay || (switch == stay && second < v) {
                    (second, switch)
                } else {
                    (v, stay)
                }
            } else {
                (v, stay)
            };
            back[t * v_count + v] = pred as u32;
            next[v] = score + obs[v];
        }
        core::mem::swap(&mut delta, &mut next);
    }
    let mut ids = vec![0usize; n];
    ids[n - 1] = argmax(&delta);
    for t in (1..n).rev() {
        ids[t - 1] = back[t * v_count + ids[t]] as usize;
    }
    let score = path_score(lattice, &ids, penalty);
    Ok(ChordPath { ids, score })
}

/// Maximal runs of equal ids as `[start / rate, end / rate)` intervals
/// labelled with vocabulary symbols.
pub fn frames_to_intervals(ids: &[usize], frame_rate: f64, vocab: &ChordVocabulary) -> Vec<ChordInterval> {
    let mut out = Vec::new();
    let mut start = 0;
    for t in 1..=ids.len() {
        if t == ids.len() || ids[t] != ids[start] {
            out.push(ChordInterval::new(start as f64 / frame_rate, t as f64 / frame_rate, vocab.symbol(ids[start])));
            start = t;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::align_labels_to_frames;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_lattice(rng: &mut ChaCha8Rng, frames: usize, size: usize) -> DecodeLattice {
        let obs = (0..frames * size).map(|_| rng.random_range(-5.0..0.0)).collect();
        DecodeLattice::new(frames, size, obs)
    }

    /// Best score over all `size^frames` paths.
    fn brute_force(lattice: &DecodeLattice, penalty: f64) -> (f64, Vec<usize>) {
        let (n, m) = (lattice.frames, lattice.size);
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut ids = vec![0usize; n];
        loop {
            let s = path_score(lattice, &ids, penalty);
            if s > best.0 {
                best = (s, ids.clone());
            }
            let mut i = 0;
            while i < n {
                ids[i] += 1;
                if ids[i] < m {
                    break;
                }
                ids[i] = 0;
                i += 1;
            }
            if i == n {
                return best;
            }
        }
    }

    #[test]
    fn matches_exhaustive_search() {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let frames = rng.random_range(1..=6);
            let size = rng.random_range(1..=8);
            let lattice = random_lattice(&mut rng, frames, size);
            let penalty = rng.random_range(0.0..3.0);
            let path = viterbi_decode(&lattice, penalty).unwrap();
            let (best, best_ids) = brute_force(&lattice, penalty);
            assert!((path.score - best).abs() < 1e-12, "seed {seed}");
            assert_eq!(path.ids, best_ids, "seed {seed}");
            assert_eq!(path.score, path_score(&lattice, &path.ids, penalty));
        }
    }

    #[test]
    fn zero_penalty_equals_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let lattice = random_lattice(&mut rng, 20, 12);
            assert_eq!(viterbi_decode(&lattice, 0.0).unwrap(), greedy_decode(&lattice));
        }
        // ties everywhere: both pick index 0
        let flat = DecodeLattice::new(4, 3, vec![-1.0; 12]);
        assert_eq!(greedy_decode(&flat).ids, vec![0; 4]);
        assert_eq!(viterbi_decode(&flat, 0.0).unwrap().ids, vec![0; 4]);
        // quantized values force ties between states
        let obs: Vec<f64> = (0..60).map(|_| rng.random_range(0..3) as f64).collect();
        let tied = DecodeLattice::new(12, 5, obs);
        assert_eq!(viterbi_decode(&tied, 0.0).unwrap(), greedy_decode(&tied));
    }

    #[test]
    fn huge_penalty_gives_best_constant_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lattice = random_lattice(&mut rng, 10, 6);
        let path = viterbi_decode(&lattice, 10.0 * 5.0 * 10.0).unwrap();
        let totals: Vec<f64> = (0..6).map(|v| (0..10).map(|t| lattice.row(t)[v]).sum()).collect();
        assert_eq!(path.ids, vec![argmax(&totals); 10]);
    }

    #[test]
    fn transitions_shrink_with_penalty_and_shift_is_harmless() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lattice = random_lattice(&mut rng, 200, 10);
        let mut last = usize::MAX;
        for k in 0..20 {
            let n = viterbi_decode(&lattice, k as f64 * 0.25).unwrap().transitions();
            assert!(n <= last);
            last = n;
        }
        let shifted = DecodeLattice::new(200, 10, lattice.obs_logp.iter().map(|v| v + 7.0).collect());
        assert_eq!(viterbi_decode(&lattice, 1.0).unwrap().ids, viterbi_decode(&shifted, 1.0).unwrap().ids);
    }

    #[test]
    fn rejects_bad_input() {
        let empty = DecodeLattice::new(0, 3, Vec::new());
        assert_eq!(viterbi_decode(&empty, 1.0), Err(DecodeError::EmptyLattice));
        let one = DecodeLattice::new(1, 1, vec![0.0]);
        assert_eq!(viterbi_decode(&one, -1.0), Err(DecodeError::Penalty(-1.0)));
    }

    fn acts_from_probs(rows: &[[f64; 100]]) -> ComponentActivations<f64> {
        let probs: Vec<f64> = rows.iter().flatten().copied().collect();
        ComponentActivations {
            frames: rows.len(),
            sizes: crate::chord::COMPONENT_SIZES,
            scores: probs.iter().map(|p| p.ln()).collect(),
            probs,
        }
    }

    #[test]
    fn lattice_rows() {
        let vocab = ChordVocabulary::standard();
        let mut uniform = [0.0; 100];
        let mut off = 0;
        for m in crate::chord::COMPONENT_SIZES {
            uniform[off..off + m].fill(1.0 / m as f64);
            off += m;
        }
        let lattice = build_lattice(&acts_from_probs(&[uniform]), &vocab).unwrap();
        let expected: f64 = crate::chord::COMPONENT_SIZES.iter().map(|&m| (1.0 / m as f64).ln()).sum();
        assert!(lattice.row(0).iter().all(|&v| (v - expected).abs() < 1e-12));

        // near one-hot on entry 17
        let target = vocab.chord(17).components();
        let mut peaked = [1e-9; 100];
        let mut off = 0;
        for (j, m) in crate::chord::COMPONENT_SIZES.into_iter().enumerate() {
            peaked[off + target[j]] = 1.0 - 1e-9 * (m as f64 - 1.0);
            off += m;
        }
        let lattice = build_lattice(&acts_from_probs(&[peaked]), &vocab).unwrap();
        assert_eq!(argmax(lattice.row(0)), 17);
        assert!(lattice.row(0)[17] > -1e-6);
    }

    #[test]
    fn lattice_matches_hand_sums() {
        let vocab = ChordVocabulary::parse("N\nC:maj\nA:min7/b3\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut row = [0.0; 100];
        let mut off = 0;
        for m in crate::chord::COMPONENT_SIZES {
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            for k in 0..m {
                row[off + k] = raw[k] / sum;
            }
            off += m;
        }
        let lattice = build_lattice(&acts_from_probs(&[row]), &vocab).unwrap();
        for v in 0..3 {
            let c = vocab.chord(v).components();
            let offsets = [0, 73, 86, 90, 94, 97];
            let hand: f64 = (0..6).map(|j| row[offsets[j] + c[j]].ln()).sum();
            assert!((lattice.row(0)[v] - hand).abs() < 1e-12);
        }
    }

    #[test]
    fn intervals_round_trip() {
        let vocab = ChordVocabulary::standard();
        let rate = 22_050.0 / 512.0;
        let one = frames_to_intervals(&[5; 43], rate, &vocab);
        assert_eq!(one.len(), 1);
        assert!((one[0].end - 0.998).abs() < 1e-3);
        let alternating: Vec<usize> = (0..10).map(|t| t % 2 + 1).collect();
        assert_eq!(frames_to_intervals(&alternating, rate, &vocab).len(), 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ids = Vec::new();
        while ids.len() < 500 {
            let v = rng.random_range(0..vocab.len());
            let run = rng.random_range(1..30);
            ids.extend(core::iter::repeat_n(v, run));
        }
        let intervals = frames_to_intervals(&ids, rate, &vocab);
        let back = align_labels_to_frames(&intervals, ids.len(), rate, &vocab).unwrap();
        let back: Vec<usize> = back.vocab_ids.iter().map(|&i| i as usize).collect();
        assert_eq!(back, ids);
    }
}
