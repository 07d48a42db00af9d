use chordkit_core::conformer::{self, ModelConfig};
use chordkit_core::decoder::{build_lattice, frames_to_intervals, greedy_decode, viterbi_decode};
use chordkit_core::features::{align_labels_to_frames, CqtKernel};
use chordkit_core::harness::{
    decode_tracks, kfold_split, select_tracks, synth_dataset, train_loop, Control, SynthConfig, TrackFeatures,
    TrainConfig,
};
use chordkit_core::metrics::{acc_frame, evaluate_track, wcsr};
use chordkit_core::{ChordVocabulary, MetricKind};

fn small_model() -> ModelConfig {
    ModelConfig { input_dim: 16, num_heads: 2, ffn_dim: 32, num_layers: 1, depthwise_kernel: 7, max_len: 64, ..Default::default() }
}

fn corpus(vocab: &ChordVocabulary) -> Vec<TrackFeatures> {
    let mut cfg = SynthConfig::new(&["C:maj", "A:min"], 10);
    cfg.seconds = (3.0, 4.0);
    synth_dataset(&cfg, vocab, &CqtKernel::standard(), 9).unwrap().into_iter().map(|t| t.features).collect()
}

#[test]
fn synth_train_decode_evaluate() {
    let vocab = ChordVocabulary::standard();
    let tracks = corpus(&vocab);
    let ids: Vec<String> = tracks.iter().map(|t| t.source.clone()).collect();
    let plan = kfold_split(&ids, 4).unwrap();
    let fold = plan.fold(1).unwrap();
    let (train, val, test) =
        (select_tracks(&tracks, &fold.train), select_tracks(&tracks, &fold.val), select_tracks(&tracks, &fold.test));
    assert_eq!((train.len(), val.len(), test.len()), (6, 2, 2));

    let cfg = TrainConfig { segment_length: 64, batch_size: 3, max_epochs: Some(4), ..Default::default() };
    let run = || train_loop::<f32>(&small_model(), &cfg, &train, &val, &vocab, |_, _| Control::Continue).unwrap();
    let out = run();
    assert_eq!(out.log.len(), 4);
    assert!(out.log.iter().all(|r| r.train_loss.is_finite() && r.val_loss.is_finite()));
    assert_eq!(out.log, run().log);

    let decoded = decode_tracks(&out.best, &test, &vocab, Some(2.0)).unwrap();
    for (d, t) in decoded.iter().zip(&test) {
        assert_eq!(d.estimate.len(), t.frames());
        // intervals rebuilt from frames evaluate to the frame accuracy
        let rate = t.spec.frame_rate();
        let est = frames_to_intervals(&d.estimate, rate, &vocab);
        let reference = frames_to_intervals(&d.reference, rate, &vocab);
        let eval = evaluate_track(&d.id, &reference, &est).unwrap();
        let frame_acc = acc_frame(std::slice::from_ref(d)).unwrap().unwrap();
        let root = wcsr(&[eval], MetricKind::Root).unwrap();
        assert!(root >= frame_acc * 100.0 - 1e-6, "root {root} vs frames {frame_acc}");
        assert_eq!(align_labels_to_frames(&est, t.frames(), rate, &vocab).unwrap().vocab_ids.len(), t.frames());
    }
}

#[test]
fn greedy_matches_unpenalised_viterbi_on_model_output() {
    let vocab = ChordVocabulary::standard();
    let tracks = corpus(&vocab);
    let params = conformer::ModelParams::<f64>::init(&small_model(), 3).unwrap();
    let acts = conformer::infer(&params, &tracks[0].spec).unwrap();
    let lattice = build_lattice(&acts, &vocab).unwrap();
    assert_eq!((lattice.frames, lattice.size), (tracks[0].frames(), vocab.len()));
    let greedy = greedy_decode(&lattice);
    let zero = viterbi_decode(&lattice, 0.0).unwrap();
    assert!((greedy.score - zero.score).abs() < 1e-9);
    let strict = viterbi_decode(&lattice, 1e6).unwrap();
    assert_eq!(strict.transitions(), 0);
}
