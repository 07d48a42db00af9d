use chordkit_core::chord::{compare, format_chord_symbol, parse_chord_symbol, MetricKind, COMPONENT_SIZES};
use chordkit_core::decoder::{count_transitions, frames_to_intervals, greedy_decode, path_score, viterbi_decode, DecodeLattice};
use chordkit_core::features::{align_labels_to_frames, amplitude_to_db, pitch_shift_cqt, ChordInterval, CqtSpectrogram, DB_FLOOR};
use chordkit_core::harness::{kfold_split, FOLD_COUNT};
use chordkit_core::metrics::{evaluate_track, wcsr};
use chordkit_core::objective::{compute_class_weights, ComponentCounts};
use chordkit_core::{ChordVocabulary, StructuredChord};
use proptest::prelude::*;

fn any_chord() -> impl Strategy<Value = StructuredChord> {
    let s = COMPONENT_SIZES;
    (0..s[0], 0..s[1], 0..s[2], 0..s[3], 0..s[4], 0..s[5])
        .prop_filter_map("invalid component combination", |(a, b, c, d, e, f)| {
            StructuredChord::from_components([a, b, c, d, e, f])
        })
}

fn spectrogram(n_frames: usize, data: Vec<f32>) -> CqtSpectrogram {
    CqtSpectrogram { data, n_frames, n_bins: 252, sample_rate: 22_050, hop_length: 512, shift: 0 }
}

/// Consecutive intervals over `[0, total)` with the given labels and
/// relative lengths.
fn intervals(pieces: &[(usize, u8)], labels: &[&str]) -> Vec<ChordInterval> {
    let total: u8 = pieces.iter().map(|p| p.1).sum();
    let mut t = 0.0;
    let mut out = Vec::new();
    for &(label, len) in pieces {
        let end = t + len as f64 / total as f64 * 20.0;
        out.push(ChordInterval::new(t, end, labels[label % labels.len()]));
        t = end;
    }
    out.last_mut().unwrap().end = 20.0;
    out
}

const LABELS: &[&str] = &[
    "N", "C:maj", "C:min", "C:7", "C:maj7", "C:min7", "C:maj/3", "C:sus4", "A:min", "A:min7", "A:7", "E:maj",
    "E:hdim7", "G:maj6", "G:9", "D:dim", "D:aug", "F:maj(9)", "F:min/b3",
];

proptest! {
    #[test]
    fn format_then_parse_is_identity(chord in any_chord()) {
        let text = format_chord_symbol(&chord);
        prop_assert_eq!(parse_chord_symbol(&text).unwrap(), chord, "{}", text);
    }

    #[test]
    fn transposition_is_a_group_action(chord in any_chord(), a in -24i32..24, b in -24i32..24) {
        prop_assert_eq!(chord.transpose(a).transpose(b), chord.transpose(a + b));
        prop_assert_eq!(chord.transpose(12), chord);
        prop_assert_eq!(chord.transpose(a).pitch_classes(), chord.pitch_classes().transpose(a));
        prop_assert_eq!(chord.transpose(a).is_no_chord(), chord.is_no_chord());
    }

    #[test]
    fn class_weights_are_bounded_and_ordered(
        counts in prop::collection::vec(0u64..1000, 2..20),
        gamma in 0.0f64..=1.0,
        w_max in 1.0f64..50.0,
    ) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let mut cc = ComponentCounts::zeros([counts.len(), 1, 1, 1, 1, 1]);
        cc.counts[0] = counts.clone();
        for j in 1..6 {
            cc.counts[j][0] = 1;
        }
        let w = compute_class_weights(&cc, gamma, w_max).unwrap();
        let ws = &w.weights[0];
        for (i, &wi) in ws.iter().enumerate() {
            prop_assert!((1.0..=w_max).contains(&wi));
            for (k, &wk) in ws.iter().enumerate() {
                if counts[i] < counts[k] {
                    prop_assert!(wi >= wk, "count {} -> {}, count {} -> {}", counts[i], wi, counts[k], wk);
                }
            }
        }
        let steeper = compute_class_weights(&cc, (gamma + 0.25).min(1.0), w_max).unwrap();
        for (a, b) in ws.iter().zip(&steeper.weights[0]) {
            prop_assert!(b >= a);
        }
        let flat = compute_class_weights(&cc, 0.0, w_max).unwrap();
        prop_assert!(flat.weights[0].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn db_scale_is_monotone_and_scale_free(
        mags in prop::collection::vec(0.0f32..10.0, 1..64),
        scale in 0.01f32..100.0,
    ) {
        let db = amplitude_to_db(&mags);
        prop_assert!(db.iter().all(|&d| (DB_FLOOR..=0.0).contains(&d)));
        if mags.iter().any(|&m| m > 0.0) {
            prop_assert!(db.contains(&0.0));
        }
        for i in 0..mags.len() {
            for k in 0..mags.len() {
                if mags[i] <= mags[k] {
                    prop_assert!(db[i] <= db[k]);
                }
            }
        }
        let scaled: Vec<f32> = mags.iter().map(|m| m * scale).collect();
        for (a, b) in db.iter().zip(amplitude_to_db(&scaled)) {
            prop_assert!((a - b).abs() < 1e-3, "{} vs {}", a, b);
        }
    }

    #[test]
    fn pitch_shift_moves_bins_and_undoes(
        frames in 1usize..4,
        k in -5i32..=6,
        values in prop::collection::vec(-80.0f32..=0.0, 3 * 252),
    ) {
        let spec = spectrogram(frames, values[..frames * 252].to_vec());
        let up = pitch_shift_cqt(&spec, k).unwrap();
        prop_assert_eq!(up.shift as i32, k);
        prop_assert_eq!((up.n_frames, up.n_bins), (frames, 252));
        let off = 3 * k;
        for t in 0..frames {
            for b in 0..252i32 {
                let v = up.frame(t)[b as usize];
                let src = b - off;
                if (0..252).contains(&src) {
                    prop_assert_eq!(v, spec.frame(t)[src as usize]);
                } else {
                    prop_assert_eq!(v, DB_FLOOR);
                }
            }
        }
        // undoing the shift restores every bin that stayed on the axis
        if k <= 5 {
            let back = pitch_shift_cqt(&up, -k).unwrap();
            prop_assert_eq!(back.shift, 0);
            for t in 0..frames {
                for b in 0..252i32 {
                    if (0..252).contains(&(b + off)) {
                        prop_assert_eq!(back.frame(t)[b as usize], spec.frame(t)[b as usize]);
                    }
                }
            }
        }
    }

    #[test]
    fn viterbi_beats_every_sampled_path(
        frames in 1usize..12,
        size in 1usize..9,
        obs in prop::collection::vec(-6.0f64..0.0, 12 * 9),
        paths in prop::collection::vec(prop::collection::vec(0usize..9, 12), 20),
        penalty in 0.0f64..5.0,
    ) {
        let lattice = DecodeLattice::new(frames, size, obs[..frames * size].to_vec());
        let best = viterbi_decode(&lattice, penalty).unwrap();
        prop_assert_eq!(best.ids.len(), frames);
        prop_assert!((best.score - path_score(&lattice, &best.ids, penalty)).abs() < 1e-12);
        for p in &paths {
            let ids: Vec<usize> = p[..frames].iter().map(|&v| v % size).collect();
            prop_assert!(best.score >= path_score(&lattice, &ids, penalty) - 1e-12);
        }
        let greedy = greedy_decode(&lattice);
        let zero = viterbi_decode(&lattice, 0.0).unwrap();
        prop_assert!((greedy.score - zero.score).abs() < 1e-12);
        prop_assert!(best.transitions() <= greedy.transitions());
    }

    #[test]
    fn intervals_realign_to_the_same_frames(ids in prop::collection::vec(0usize..301, 1..80)) {
        let vocab = ChordVocabulary::standard();
        let rate = 22_050.0 / 512.0;
        let ivs = frames_to_intervals(&ids, rate, &vocab);
        prop_assert_eq!(ivs.len(), count_transitions(&ids) + 1);
        let labels = align_labels_to_frames(&ivs, ids.len(), rate, &vocab).unwrap();
        let back: Vec<usize> = labels.vocab_ids.iter().map(|&i| i as usize).collect();
        prop_assert_eq!(back, ids);
    }

    #[test]
    fn wcsr_families_nest(
        reference in prop::collection::vec((0usize..64, 1u8..10), 1..12),
        estimate in prop::collection::vec((0usize..64, 1u8..10), 1..12),
    ) {
        let r = intervals(&reference, LABELS);
        let e = intervals(&estimate, LABELS);
        let t = evaluate_track("t", &r, &e).unwrap();
        let tracks = [t];
        let score = |m| wcsr(&tracks, m).unwrap_or(100.0);
        let (root, thirds, triads, tetrads) =
            (score(MetricKind::Root), score(MetricKind::Thirds), score(MetricKind::Triads), score(MetricKind::Tetrads));
        prop_assert!(root >= thirds - 1e-9 && thirds >= triads - 1e-9 && triads >= tetrads - 1e-9,
            "{} {} {} {}", root, thirds, triads, tetrads);
        for m in MetricKind::ALL {
            if let Some(v) = wcsr(&tracks, m) {
                prop_assert!((0.0..=100.0 + 1e-9).contains(&v));
            }
        }
        let same = evaluate_track("t", &r, &r).unwrap();
        for m in MetricKind::ALL {
            prop_assert!(wcsr(std::slice::from_ref(&same), m).is_none_or(|v| v == 100.0));
        }
    }

    #[test]
    fn comparison_is_reflexive(chord in any_chord()) {
        for m in MetricKind::ALL {
            if m.scores_reference(&chord) {
                prop_assert!(compare(m, &chord, &chord), "{} {}", m, format_chord_symbol(&chord));
            }
        }
    }

    #[test]
    fn folds_partition_the_tracks(n in FOLD_COUNT..60, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("t{i:02}")).collect();
        let plan = kfold_split(&ids, seed).unwrap();
        let mut tested: Vec<String> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
        tested.sort();
        prop_assert_eq!(&tested, &ids);
        for (f, fold) in plan.folds.iter().enumerate() {
            let mut all: Vec<String> = fold.train.iter().chain(&fold.val).chain(&fold.test).cloned().collect();
            all.sort();
            prop_assert_eq!(&all, &ids);
            prop_assert_eq!(&fold.val, &plan.folds[(f + 1) % FOLD_COUNT].test);
            prop_assert!(fold.test.len() >= n / FOLD_COUNT && fold.test.len() <= n / FOLD_COUNT + 1);
        }
    }
}
