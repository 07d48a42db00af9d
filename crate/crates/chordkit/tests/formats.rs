use chordkit::annotation::{format_annotation, parse_annotation};
use chordkit::checkpoint::Checkpoint;
use chordkit::config::{parse_pairs, RunConfig};
use chordkit::featfile::{file_name, parse_file_name, FeatureFile};
use chordkit_core::conformer::{ModelConfig, ModelParams};
use chordkit_core::features::{ChordInterval, CqtSpectrogram};
use chordkit_core::harness::{AdamW, AdamWConfig};
use chordkit_core::ChordVocabulary;
use proptest::prelude::*;

fn tiny_model(dim: usize, layers: usize) -> ModelConfig {
    ModelConfig {
        input_dim: dim,
        num_heads: 2,
        ffn_dim: 2 * dim,
        num_layers: layers,
        depthwise_kernel: 3,
        cqt_bins: 6,
        max_len: 5,
        ..ModelConfig::default()
    }
}

proptest! {
    #[test]
    fn feature_files_round_trip(
        frames in 1usize..6,
        bins in 1usize..8,
        shift in -5i8..=6,
        values in prop::collection::vec(-80.0f32..=0.0, 48),
        ids in prop::collection::vec(0u16..301, 6),
    ) {
        let spec = CqtSpectrogram {
            data: values[..frames * bins].to_vec(),
            n_frames: frames,
            n_bins: bins,
            sample_rate: 22_050,
            hop_length: 512,
            shift,
        };
        let file = FeatureFile { spec, vocab_ids: ids[..frames].to_vec(), vocab_hash: ChordVocabulary::standard().fingerprint() };
        let bytes = file.encode();
        prop_assert_eq!(FeatureFile::decode(&bytes).unwrap(), file);
        // truncation is always detected
        prop_assert!(FeatureFile::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn feature_file_names_round_trip(stem in "[a-z0-9_ .@-]{1,12}", shift in -5i8..=6) {
        prop_assert_eq!(parse_file_name(&file_name(&stem, shift)), Some((stem, shift)));
    }

    #[test]
    fn annotations_round_trip(
        steps in prop::collection::vec((1u32..5000, 0usize..301), 1..20),
    ) {
        let vocab = ChordVocabulary::standard();
        let mut t = 0.0;
        let intervals: Vec<ChordInterval> = steps
            .iter()
            .map(|&(ms, id)| {
                let start = t;
                t += ms as f64 / 1000.0;
                ChordInterval::new(start, t, vocab.symbol(id))
            })
            .collect();
        let back = parse_annotation(&format_annotation(&intervals)).unwrap();
        prop_assert_eq!(back.len(), intervals.len());
        for (a, b) in back.iter().zip(&intervals) {
            prop_assert_eq!(&a.label, &b.label);
            prop_assert!((a.start - b.start).abs() < 1e-6 && (a.end - b.end).abs() < 1e-6);
        }
    }

    #[test]
    fn checkpoints_round_trip(
        dim in prop::sample::select(vec![4usize, 8]),
        layers in 1usize..3,
        seed in any::<u64>(),
        epoch in 0u32..500,
        with_optimizer in any::<bool>(),
    ) {
        let params = ModelParams::<f32>::init(&tiny_model(dim, layers), seed).unwrap();
        let optimizer = with_optimizer.then(|| {
            let mut opt = AdamW::new(params.len(), 1e-3, AdamWConfig::default());
            let mut values = params.values.clone();
            let grads: Vec<f32> = (0..values.len()).map(|i| (i % 7) as f32 - 3.0).collect();
            opt.update(&mut values, &grads).unwrap();
            opt
        });
        let ckpt = Checkpoint { params, vocab_hash: seed ^ 1, epoch, optimizer };
        let bytes = ckpt.encode();
        let back = Checkpoint::decode(&bytes).unwrap();
        prop_assert_eq!(&back.params.values, &ckpt.params.values);
        prop_assert_eq!(&back.params.buffers, &ckpt.params.buffers);
        prop_assert_eq!(back.params.config(), ckpt.params.config());
        prop_assert_eq!((back.vocab_hash, back.epoch), (ckpt.vocab_hash, ckpt.epoch));
        prop_assert_eq!(back.optimizer.is_some(), with_optimizer);
        if let (Some(a), Some(b)) = (&back.optimizer, &ckpt.optimizer) {
            prop_assert_eq!((a.step, a.lr), (b.step, b.lr));
        }
        // any flipped byte is caught by the checksum or the structure checks
        let mut bad = bytes.clone();
        let i = (seed as usize) % bad.len();
        bad[i] ^= 0x40;
        prop_assert!(Checkpoint::decode(&bad).is_err());
    }

    #[test]
    fn config_text_round_trips(
        dim in prop::sample::select(vec![16usize, 32, 64]),
        gamma in 0.0f64..=1.0,
        w_max in 1.0f64..100.0,
        seed in any::<u64>(),
        fold in 1usize..=5,
        epochs in prop::option::of(1usize..500),
    ) {
        let mut cfg = RunConfig::default();
        cfg.model.input_dim = dim;
        cfg.train.gamma = gamma;
        cfg.train.w_max = w_max;
        cfg.train.seed = seed;
        cfg.train.max_epochs = epochs;
        cfg.fold = fold;
        let mut back = RunConfig::default();
        back.apply(&parse_pairs(&cfg.to_text()).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
