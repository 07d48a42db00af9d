//! The batch commands behind the CLI. Each returns a summary and writes its
//! outputs plus a manifest into the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chordkit_core::chord::MetricKind;
use chordkit_core::conformer::{infer_chunked, ModelParams};
use chordkit_core::decoder::{build_lattice, frames_to_intervals, greedy_decode, viterbi_decode};
use chordkit_core::features::{
    align_labels_to_frames, pitch_shift_cqt, ChordInterval, CqtKernel, CqtSpectrogram, SHIFT_RANGE,
};
use chordkit_core::harness::{
    kfold_split, synth_dataset, train_loop, training_weights, Control, EpochRecord, HarnessError, SynthConfig,
    TrackFeatures, TrainOutcome,
};
use chordkit_core::metrics::{
    acc_class, acc_frame, confusion_matrix, evaluate_tracks, wcsr, FrameTrack, TrackIntervals,
};
use chordkit_core::objective::ComponentCounts;
use chordkit_core::{ChordVocabulary, StructuredChord};
use serde::Serialize;

use crate::annotation::{read_annotation, write_annotation};
use crate::audio::{read_wav, write_wav};
use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::config::RunConfig;
use crate::error::{Error, IoContext, Result};
use crate::featfile::{self, read_features, write_features, FeatureFile};
use crate::manifest::RunManifest;
use crate::report;

pub const ANNOTATION_EXTENSION: &str = "lab";

pub fn load_vocabulary(path: Option<&Path>) -> Result<ChordVocabulary> {
    match path {
        None => Ok(ChordVocabulary::standard()),
        Some(p) => Ok(ChordVocabulary::parse(&std::fs::read_to_string(p).at(p)?)?),
    }
}

/// Files in `dir` with extension `ext`, keyed by stem.
pub fn files_by_stem(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).at(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).at(path)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

#[derive(Debug, Clone)]
pub struct FeaturesOptions {
    pub audio_dir: PathBuf,
    pub annotation_dir: PathBuf,
    pub out_dir: PathBuf,
    pub augment: bool,
    pub vocab: Option<PathBuf>,
    pub jobs: usize,
}

#[derive(Debug, Clone, Default)]
pub struct FeaturesSummary {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// The pitch shifts materialised per track.
pub fn shifts(augment: bool) -> Vec<i32> {
    if augment {
        (SHIFT_RANGE.0..=SHIFT_RANGE.1).collect()
    } else {
        vec![0]
    }
}

fn extract_track(
    audio: &Path,
    annotation: &Path,
    kernel: &CqtKernel,
    vocab: &ChordVocabulary,
    shifts: &[i32],
) -> Result<Vec<FeatureFile>> {
    let clip = read_wav(audio)?;
    let spec = CqtSpectrogram::from_audio_with(kernel, &clip)?;
    let intervals = read_annotation(annotation)?;
    let labels = align_labels_to_frames(&intervals, spec.n_frames, spec.frame_rate(), vocab)?;
    let hash = vocab.fingerprint();
    shifts
        .iter()
        .map(|&k| {
            let (s, l) = if k == 0 {
                (spec.clone(), labels.clone())
            } else {
                (pitch_shift_cqt(&spec, k)?, labels.transpose(k, vocab))
            };
            Ok(FeatureFile { spec: s, vocab_ids: l.vocab_ids, vocab_hash: hash })
        })
        .collect()
}

/// CQT features for every audio/annotation pair, one file per shift.
pub fn cmd_features(opts: &FeaturesOptions) -> Result<FeaturesSummary> {
    let mut manifest = RunManifest::new("features", 0);
    manifest.config.insert("augment".into(), opts.augment.to_string());
    let vocab = load_vocabulary(opts.vocab.as_deref())?;
    let audio = files_by_stem(&opts.audio_dir, "wav")?;
    let notes = files_by_stem(&opts.annotation_dir, ANNOTATION_EXTENSION)?;
    let mut summary = FeaturesSummary::default();
    let mut pairs = Vec::new();
    for (stem, a) in &audio {
        match notes.get(stem) {
            Some(n) => pairs.push((stem.clone(), a.clone(), n.clone())),
            None => summary.warnings.push(format!("{stem}: no annotation, skipped")),
        }
    }
    for stem in notes.keys().filter(|s| !audio.contains_key(*s)) {
        summary.warnings.push(format!("{stem}: no audio, skipped"));
    }
    if pairs.is_empty() {
        return Err(Error::Input("no paired audio and annotation files".into()));
    }
    create_dir(&opts.out_dir)?;
    let kernel = CqtKernel::standard();
    let shifts = shifts(opts.augment);
    let results: Vec<Result<Vec<FeatureFile>>> = pool(opts.jobs)?.install(|| {
        use rayon::prelude::*;
        pairs.par_iter().map(|(_, a, n)| extract_track(a, n, &kernel, &vocab, &shifts)).collect()
    });
    for ((stem, a, n), files) in pairs.iter().zip(results) {
        let files = match files {
            Ok(f) => f,
            Err(e) => {
                summary.warnings.push(format!("{stem}: {e}, skipped"));
                continue;
            }
        };
        manifest.add_input(a)?;
        manifest.add_input(n)?;
        for f in files {
            let path = opts.out_dir.join(featfile::file_name(stem, f.spec.shift));
            write_features(&path, &f)?;
            manifest.outputs.push(path.file_name().unwrap().to_string_lossy().into_owned());
            summary.written.push(path);
        }
    }
    if summary.written.is_empty() {
        return Err(Error::Input("no track could be processed".into()));
    }
    manifest.write(&opts.out_dir)?;
    Ok(summary)
}

/// Every feature file in `dir`, sorted by name. Track ids are file stems,
/// sources the unshifted stem.
pub fn load_feature_dir(dir: &Path, vocab: &ChordVocabulary) -> Result<Vec<TrackFeatures>> {
    let mut names: Vec<(String, PathBuf)> = files_by_stem(dir, featfile::EXTENSION)?
        .into_values()
        .filter_map(|p| Some((p.file_name()?.to_str()?.to_string(), p)))
        .collect();
    names.sort();
    let mut out = Vec::new();
    for (name, path) in names {
        let Some((stem, shift)) = featfile::parse_file_name(&name) else { continue };
        let file = read_features(&path)?;
        let id = format!("{stem}@{shift:+}");
        out.push(file.into_track(&id, &stem, vocab).map_err(|m| crate::error::format_err(&path, m))?);
    }
    if out.is_empty() {
        return Err(Error::Input(format!("no feature files in {}", dir.display())));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub features_dir: PathBuf,
    pub out_dir: PathBuf,
    pub config: RunConfig,
    /// Print one line per epoch to stderr.
    pub verbose: bool,
}

pub const LOG_FILE: &str = "train_log.csv";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LAST_CHECKPOINT: &str = "last.ckpt";

fn checkpoint(params: &ModelParams<f32>, vocab: &ChordVocabulary, epoch: usize) -> Checkpoint {
    Checkpoint { params: params.clone(), vocab_hash: vocab.fingerprint(), epoch: epoch as u32, optimizer: None }
}

/// Trains one fold; augmented copies join the training set with their
/// source, validation uses unshifted tracks only.
pub fn cmd_train(opts: &TrainOptions) -> Result<TrainOutcome<f32>> {
    let cfg = &opts.config;
    cfg.validate()?;
    let mut manifest = RunManifest::new("train", cfg.train.seed);
    manifest.config = cfg.pairs().into_iter().collect();
    let vocab = load_vocabulary(cfg.vocab.as_deref())?;
    let tracks = load_feature_dir(&opts.features_dir, &vocab)?;
    if let Some(t) = tracks.iter().find(|t| t.spec.n_bins != cfg.model.cqt_bins) {
        return Err(Error::Input(format!(
            "{}: expected {} bins, found {}",
            t.id, cfg.model.cqt_bins, t.spec.n_bins
        )));
    }
    let mut sources: Vec<String> = tracks.iter().map(|t| t.source.clone()).collect();
    sources.dedup();
    let plan = kfold_split(&sources, cfg.train.seed)?;
    let fold = plan.fold(cfg.fold)?;
    let train: Vec<&TrackFeatures> = tracks.iter().filter(|t| fold.train.contains(&t.source)).collect();
    let val: Vec<&TrackFeatures> =
        tracks.iter().filter(|t| fold.val.contains(&t.source) && t.spec.shift == 0).collect();
    for t in files_by_stem(&opts.features_dir, featfile::EXTENSION)?.values() {
        manifest.add_input(t)?;
    }
    create_dir(&opts.out_dir)?;
    write_text(&opts.out_dir.join("config.txt"), &cfg.to_text())?;
    let split = format!(
        "fold = {}\ntrain = {}\nval = {}\ntest = {}\n",
        cfg.fold,
        fold.train.join(" "),
        fold.val.join(" "),
        fold.test.join(" ")
    );
    write_text(&opts.out_dir.join("split.txt"), &split)?;

    let best_path = opts.out_dir.join(BEST_CHECKPOINT);
    let mut best_val = f64::INFINITY;
    let mut save_error = None;
    let mut log_so_far: Vec<EpochRecord> = Vec::new();
    let log_path = opts.out_dir.join(LOG_FILE);
    let result = train_loop::<f32>(&cfg.model, &cfg.train, &train, &val, &vocab, |r, params| {
        if opts.verbose {
            eprintln!("epoch {:4}  train {:.5}  val {:.5}  lr {:e}", r.epoch, r.train_loss, r.val_loss, r.lr);
        }
        log_so_far.push(*r);
        let mut step = || -> Result<()> {
            if r.val_loss < best_val {
                best_val = r.val_loss;
                save_checkpoint(&best_path, &checkpoint(params, &vocab, r.epoch))?;
            }
            write_text(&log_path, &report::log_csv(&log_so_far))
        };
        match step() {
            Ok(()) => Control::Continue,
            Err(e) => {
                save_error = Some(e);
                Control::Stop
            }
        }
    });
    if let Some(e) = save_error {
        return Err(e);
    }
    let outcome = match result {
        Ok(o) => o,
        Err(HarnessError::NonFinite { epoch, batch, tracks, loss }) => {
            let dump = format!("epoch = {epoch}\nbatch = {batch}\nloss = {loss}\ntracks = {}\n", tracks.join(" "));
            write_text(&opts.out_dir.join("nonfinite_batch.txt"), &dump)?;
            return Err(HarnessError::NonFinite { epoch, batch, tracks, loss }.into());
        }
        Err(e) => return Err(e.into()),
    };
    write_text(&log_path, &report::log_csv(&outcome.log))?;
    save_checkpoint(&best_path, &checkpoint(&outcome.best, &vocab, outcome.best_epoch))?;
    let mut last = checkpoint(&outcome.last, &vocab, outcome.log.len());
    last.optimizer = Some(outcome.optimizer.clone());
    save_checkpoint(&opts.out_dir.join(LAST_CHECKPOINT), &last)?;
    let counts = ComponentCounts::from_frames(train.iter().flat_map(|t| t.labels.labels.iter()));
    write_text(&opts.out_dir.join("weights.csv"), &report::weights_csv(&counts, &outcome.weights))?;
    manifest.outputs = ["config.txt", "split.txt", LOG_FILE, BEST_CHECKPOINT, LAST_CHECKPOINT, "weights.csv"]
        .map(String::from)
        .to_vec();
    manifest.write(&opts.out_dir)?;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct DecodeOptions {
    pub checkpoint: PathBuf,
    pub features_dir: PathBuf,
    pub out_dir: PathBuf,
    pub transition_penalty: f64,
    pub greedy: bool,
    pub vocab: Option<PathBuf>,
    pub jobs: usize,
}

/// Intervals for one spectrogram.
pub fn decode_spectrogram(
    params: &ModelParams<f32>,
    spec: &CqtSpectrogram,
    vocab: &ChordVocabulary,
    penalty: Option<f64>,
) -> Result<Vec<ChordInterval>> {
    let acts = infer_chunked(params, spec, params.config().max_len)?;
    let lattice = build_lattice(&acts, vocab)?;
    let path = match penalty {
        Some(p) => viterbi_decode(&lattice, p)?,
        None => greedy_decode(&lattice),
    };
    Ok(frames_to_intervals(&path.ids, spec.frame_rate(), vocab))
}

/// Writes `<stem>.lab` for every unshifted feature file.
pub fn cmd_decode(opts: &DecodeOptions) -> Result<Vec<PathBuf>> {
    let mut manifest = RunManifest::new("decode", 0);
    manifest.config.insert("transition_penalty".into(), opts.transition_penalty.to_string());
    manifest.config.insert("greedy".into(), opts.greedy.to_string());
    let vocab = load_vocabulary(opts.vocab.as_deref())?;
    let ckpt = load_checkpoint(&opts.checkpoint)?;
    manifest.add_input(&opts.checkpoint)?;
    let mut inputs = Vec::new();
    for path in files_by_stem(&opts.features_dir, featfile::EXTENSION)?.into_values() {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if let Some((stem, 0)) = featfile::parse_file_name(&name) {
            inputs.push((stem, path));
        }
    }
    if inputs.is_empty() {
        return Err(Error::Input(format!("no unshifted feature files in {}", opts.features_dir.display())));
    }
    inputs.sort();
    create_dir(&opts.out_dir)?;
    let penalty = (!opts.greedy).then_some(opts.transition_penalty);
    let decoded: Vec<Result<Vec<ChordInterval>>> = pool(opts.jobs)?.install(|| {
        use rayon::prelude::*;
        inputs
            .par_iter()
            .map(|(_, p)| decode_spectrogram(&ckpt.params, &read_features(p)?.spec, &vocab, penalty))
            .collect()
    });
    let mut written = Vec::new();
    for ((stem, input), intervals) in inputs.iter().zip(decoded) {
        let out = opts.out_dir.join(format!("{stem}.{ANNOTATION_EXTENSION}"));
        write_annotation(&out, &intervals?)?;
        manifest.add_input(input)?;
        manifest.outputs.push(out.file_name().unwrap().to_string_lossy().into_owned());
        written.push(out);
    }
    manifest.write(&opts.out_dir)?;
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub reference_dir: PathBuf,
    pub estimate_dir: PathBuf,
    pub out_dir: PathBuf,
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackSummary {
    pub id: String,
    pub duration: f64,
    pub wcsr: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub tracks: usize,
    /// In [`report::METRIC_COLUMNS`] order.
    pub metrics: BTreeMap<String, Option<f64>>,
    #[serde(skip)]
    pub values: [Option<f64>; 9],
    pub per_track: Vec<TrackSummary>,
    pub warnings: Vec<String>,
}

/// Frame-level reference and estimate ids at the analysis frame rate over
/// the reference span. Reference gaps are N; frames whose reference label
/// is `X` or unparseable are dropped.
pub fn frame_track(
    id: &str,
    reference: &[ChordInterval],
    estimate: &[ChordInterval],
    frame_rate: f64,
    vocab: &ChordVocabulary,
) -> Result<FrameTrack> {
    let end = reference.iter().map(|i| i.end).fold(0.0, f64::max);
    let frames = (end * frame_rate).ceil() as usize;
    let n_id = vocab.id_of(&StructuredChord::N).unwrap_or(0);
    let scored: Vec<Option<usize>> = (0..frames)
        .map(|t| {
            let time = (t as f64 + 0.5) / frame_rate;
            match reference.iter().find(|i| i.start <= time && time < i.end) {
                None => Some(n_id),
                Some(i) if i.label.trim() == "X" => None,
                Some(i) => vocab.resolve(&i.label).ok(),
            }
        })
        .collect();
    let est = align_labels_to_frames(estimate, frames, frame_rate, vocab)?;
    let mut track = FrameTrack { id: id.into(), reference: Vec::new(), estimate: Vec::new() };
    for (r, &e) in scored.iter().zip(&est.vocab_ids) {
        if let Some(r) = r {
            track.reference.push(*r);
            track.estimate.push(e as usize);
        }
    }
    Ok(track)
}

pub fn cmd_eval(opts: &EvalOptions) -> Result<EvalSummary> {
    let mut manifest = RunManifest::new("eval", 0);
    let vocab = load_vocabulary(opts.vocab.as_deref())?;
    let refs = files_by_stem(&opts.reference_dir, ANNOTATION_EXTENSION)?;
    let ests = files_by_stem(&opts.estimate_dir, ANNOTATION_EXTENSION)?;
    let mut warnings = Vec::new();
    for s in refs.keys().filter(|s| !ests.contains_key(*s)) {
        warnings.push(format!("{s}: no estimate"));
    }
    for s in ests.keys().filter(|s| !refs.contains_key(*s)) {
        warnings.push(format!("{s}: no reference"));
    }
    let stems: Vec<&String> = refs.keys().filter(|s| ests.contains_key(*s)).collect();
    if stems.is_empty() {
        return Err(Error::Input("no common track stems between reference and estimate".into()));
    }
    let mut r_tracks = Vec::new();
    let mut e_tracks = Vec::new();
    for s in &stems {
        manifest.add_input(&refs[*s])?;
        manifest.add_input(&ests[*s])?;
        r_tracks.push(TrackIntervals::new(s.as_str(), read_annotation(&refs[*s])?));
        e_tracks.push(TrackIntervals::new(s.as_str(), read_annotation(&ests[*s])?));
    }
    let evals = evaluate_tracks(&r_tracks, &e_tracks)?;
    let frame_rate = chordkit_core::features::CqtConfig::standard().frame_rate();
    let frames = r_tracks
        .iter()
        .zip(&e_tracks)
        .map(|(r, e)| frame_track(&r.id, &r.intervals, &e.intervals, frame_rate, &vocab))
        .collect::<Result<Vec<_>>>()?;
    let mut values = [None; 9];
    for (k, m) in MetricKind::ALL.into_iter().enumerate() {
        values[k] = wcsr(&evals, m);
    }
    values[7] = acc_frame(&frames)?;
    values[8] = acc_class(&frames)?;
    let confusion = confusion_matrix(&r_tracks, &e_tracks, vocab.quality_classes(), &vocab)?;
    let recall = report::quality_recall(&confusion);

    create_dir(&opts.out_dir)?;
    let outputs = [
        ("metrics.csv", report::metrics_csv(&values)),
        ("confusion.csv", report::confusion_csv(&confusion)),
        ("confusion.svg", report::confusion_svg(&confusion)),
        ("quality_recall.csv", report::quality_recall_csv(&recall)),
        ("quality_recall.svg", report::recall_svg(&recall)),
    ];
    for (name, text) in &outputs {
        write_text(&opts.out_dir.join(name), text)?;
    }
    let per_track = evals
        .iter()
        .map(|e| TrackSummary {
            id: e.track_id.clone(),
            duration: e.duration,
            wcsr: MetricKind::ALL
                .into_iter()
                .enumerate()
                .map(|(k, m)| (report::METRIC_COLUMNS[k].to_string(), wcsr(core::slice::from_ref(e), m)))
                .collect(),
        })
        .collect();
    let summary = EvalSummary {
        tracks: stems.len(),
        metrics: report::METRIC_COLUMNS.iter().map(|c| c.to_string()).zip(values).collect(),
        values,
        per_track,
        warnings,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    write_text(&opts.out_dir.join("summary.json"), &(json + "\n"))?;
    manifest.outputs = outputs.iter().map(|(n, _)| n.to_string()).chain(["summary.json".into()]).collect();
    manifest.write(&opts.out_dir)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub features_dir: PathBuf,
    pub out_dir: PathBuf,
    pub gamma: f64,
    pub w_max: f64,
    pub vocab: Option<PathBuf>,
}

/// Label statistics of a feature set: the class weight table and the
/// distribution of chord qualities over unshifted frames.
pub fn cmd_report(opts: &ReportOptions) -> Result<Vec<(String, u64)>> {
    let mut manifest = RunManifest::new("report", 0);
    manifest.config.insert("gamma".into(), opts.gamma.to_string());
    manifest.config.insert("w_max".into(), opts.w_max.to_string());
    let vocab = load_vocabulary(opts.vocab.as_deref())?;
    let tracks = load_feature_dir(&opts.features_dir, &vocab)?;
    let originals: Vec<&TrackFeatures> = tracks.iter().filter(|t| t.spec.shift == 0).collect();
    let weights = training_weights(&originals, opts.gamma, opts.w_max)?;
    let counts = ComponentCounts::from_frames(originals.iter().flat_map(|t| t.labels.labels.iter()));
    let mut qualities: Vec<(String, u64)> = vocab.quality_classes().into_iter().map(|q| (q, 0)).collect();
    for t in &originals {
        for c in &t.labels.labels {
            let q = c.quality_label();
            if let Some(e) = qualities.iter_mut().find(|(name, _)| *name == q) {
                e.1 += 1;
            }
        }
    }
    qualities.retain(|(_, n)| *n > 0);
    qualities.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let total: u64 = qualities.iter().map(|q| q.1).sum();
    let mut csv = String::from("quality,frames,fraction\n");
    let mut rows = Vec::new();
    for (q, n) in &qualities {
        let f = *n as f64 / total.max(1) as f64;
        csv.push_str(&format!("{q},{n},{f:.6}\n"));
        rows.push((q.clone(), *n as f64, f));
    }
    create_dir(&opts.out_dir)?;
    write_text(&opts.out_dir.join("weights.csv"), &report::weights_csv(&counts, &weights))?;
    write_text(&opts.out_dir.join("quality_distribution.csv"), &csv)?;
    write_text(&opts.out_dir.join("quality_distribution.svg"), &report::recall_svg(&rows))?;
    manifest.outputs = vec!["weights.csv".into(), "quality_distribution.csv".into(), "quality_distribution.svg".into()];
    manifest.write(&opts.out_dir)?;
    Ok(qualities)
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub out_dir: PathBuf,
    pub config: SynthConfig,
    pub seed: u64,
}

/// Renders a synthetic corpus as `audio/*.wav` plus `annotations/*.lab`.
pub fn cmd_synth(opts: &SynthOptions) -> Result<usize> {
    let mut manifest = RunManifest::new("synth", opts.seed);
    manifest.config.insert(
        "palette".into(),
        opts.config.palette.iter().map(|(s, w)| format!("{s}:{w}")).collect::<Vec<_>>().join(" "),
    );
    manifest.config.insert("tracks".into(), opts.config.tracks.to_string());
    manifest.config.insert("snr_db".into(), format!("{:?}", opts.config.snr_db));
    let vocab = ChordVocabulary::standard();
    let kernel = CqtKernel::standard();
    let tracks = synth_dataset(&opts.config, &vocab, &kernel, opts.seed)?;
    let audio_dir = opts.out_dir.join("audio");
    let note_dir = opts.out_dir.join("annotations");
    create_dir(&audio_dir)?;
    create_dir(&note_dir)?;
    for t in &tracks {
        let id = &t.features.id;
        write_wav(&audio_dir.join(format!("{id}.wav")), &t.audio)?;
        write_annotation(&note_dir.join(format!("{id}.{ANNOTATION_EXTENSION}")), &t.intervals)?;
        manifest.outputs.push(format!("audio/{id}.wav"));
        manifest.outputs.push(format!("annotations/{id}.{ANNOTATION_EXTENSION}"));
    }
    manifest.write(&opts.out_dir)?;
    Ok(tracks.len())
}
