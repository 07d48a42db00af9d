// `!(x >= 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use chordkit::commands::{
    cmd_decode, cmd_eval, cmd_features, cmd_report, cmd_synth, cmd_train, DecodeOptions, EvalOptions,
    FeaturesOptions, ReportOptions, SynthOptions, TrainOptions,
};
use chordkit::config::{parse_pairs, RunConfig};
use chordkit::core::decoder::DEFAULT_TRANSITION_PENALTY;
use chordkit::core::harness::SynthConfig;
use chordkit::DATA_ENV;
use clap::{Args, Parser, Subcommand};

/// Structured chord recognition: CQT features, conformer training, CRF
/// decoding and chord-symbol evaluation.
#[derive(Parser, Debug)]
#[command(name = "chordkit", version)]
struct Cli {
    /// Random seed for splits, initialisation, sampling and dropout.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-track work.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// `key = value` run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Default root for data directories (`audio/`, `annotations/`,
    /// `features/`, `runs/`).
    #[arg(long, global = true, env = DATA_ENV)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute CQT feature files from paired `<stem>.wav` / `<stem>.lab`
    /// files. `--augment` adds pitch shifts of -5..+6 semitones.
    Features(FeaturesCmd),
    /// Train one cross-validation fold; writes best.ckpt, last.ckpt,
    /// train_log.csv, weights.csv and a manifest.
    Train(TrainCmd),
    /// Decode unshifted feature files to `<stem>.lab` interval files.
    Decode(DecodeCmd),
    /// Compare estimate against reference interval files: WCSR families,
    /// frame and class accuracy, confusion matrix and per-quality recall.
    Eval(EvalCmd),
    /// Label statistics of a feature set: class weight table and quality
    /// distribution.
    Report(ReportCmd),
    /// Render a synthetic corpus of chord tones with annotations.
    Synth(SynthCmd),
}

#[derive(Args, Debug)]
struct FeaturesCmd {
    #[arg(long)]
    audio: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    augment: bool,
    /// Vocabulary file, one chord symbol per line.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainCmd {
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-validation fold, 1..=5.
    #[arg(long)]
    fold: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Reweighting exponent; 0 disables reweighting.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    w_max: Option<f64>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct DecodeCmd {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    transition_penalty: Option<f64>,
    /// Frame-wise argmax instead of Viterbi.
    #[arg(long)]
    greedy: bool,
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalCmd {
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportCmd {
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 10.0)]
    w_max: f64,
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthCmd {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    tracks: usize,
    /// Comma-separated chord symbols, each optionally weighted as
    /// `symbol*weight`, e.g. `C:maj*20,C:maj7`.
    #[arg(long, default_value = "C:maj,F:maj,G:maj,A:min")]
    palette: String,
    #[arg(long, default_value_t = 6.0)]
    min_seconds: f64,
    #[arg(long, default_value_t = 10.0)]
    max_seconds: f64,
    /// Signal-to-noise ratio in dB; omit for noise-free audio.
    #[arg(long)]
    snr: Option<f64>,
}

fn data_path(cli: &Cli, given: &Option<PathBuf>, sub: &str) -> anyhow::Result<PathBuf> {
    match (given, &cli.data) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(root)) => Ok(root.join(sub)),
        (None, None) => bail!("no path given for {sub} and {DATA_ENV} is not set"),
    }
}

fn run_config(cli: &Cli, cmd: &TrainCmd) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    let mut pairs = Vec::new();
    for s in &cmd.set {
        pairs.extend(parse_pairs(s).map_err(anyhow::Error::msg).with_context(|| format!("--set {s}"))?);
    }
    let mut flag = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            pairs.push((k.to_string(), v));
        }
    };
    flag("seed", cli.seed.map(|v| v.to_string()));
    flag("fold", cmd.fold.map(|v| v.to_string()));
    flag("max_epochs", cmd.max_epochs.map(|v| v.to_string()));
    flag("gamma", cmd.gamma.map(|v| v.to_string()));
    flag("w_max", cmd.w_max.map(|v| v.to_string()));
    cfg.apply(&pairs)?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_palette(text: &str) -> anyhow::Result<Vec<(String, f64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| match item.split_once('*') {
            Some((s, w)) => Ok((s.to_string(), w.parse().with_context(|| format!("palette weight {w:?}"))?)),
            None => Ok((item.to_string(), 1.0)),
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    match &cli.command {
        Command::Features(c) => {
            let opts = FeaturesOptions {
                audio_dir: data_path(&cli, &c.audio, "audio")?,
                annotation_dir: data_path(&cli, &c.annotations, "annotations")?,
                out_dir: data_path(&cli, &c.out, "features")?,
                augment: c.augment,
                vocab: c.vocab.clone(),
                jobs: cli.jobs,
            };
            let summary = cmd_features(&opts)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {} feature files to {}", summary.written.len(), opts.out_dir.display());
        }
        Command::Train(c) => {
            let opts = TrainOptions {
                features_dir: data_path(&cli, &c.features, "features")?,
                out_dir: data_path(&cli, &c.out, "runs")?,
                config: run_config(&cli, c)?,
                verbose: !c.quiet,
            };
            let outcome = cmd_train(&opts)?;
            println!(
                "trained {} epochs; best validation loss {:.6} at epoch {}; outputs in {}",
                outcome.log.len(),
                outcome.best_val_loss,
                outcome.best_epoch,
                opts.out_dir.display()
            );
        }
        Command::Decode(c) => {
            let mut penalty = DEFAULT_TRANSITION_PENALTY;
            if let Some(path) = &cli.config {
                let mut cfg = RunConfig::default();
                cfg.apply_file(path)?;
                penalty = cfg.train.transition_penalty;
            }
            let opts = DecodeOptions {
                checkpoint: c.checkpoint.clone(),
                features_dir: data_path(&cli, &c.features, "features")?,
                out_dir: c.out.clone(),
                transition_penalty: c.transition_penalty.unwrap_or(penalty),
                greedy: c.greedy,
                vocab: c.vocab.clone(),
                jobs: cli.jobs,
            };
            if !(opts.transition_penalty >= 0.0) {
                bail!("--transition-penalty must be non-negative");
            }
            let written = cmd_decode(&opts)?;
            println!("decoded {} tracks to {}", written.len(), opts.out_dir.display());
        }
        Command::Eval(c) => {
            let opts = EvalOptions {
                reference_dir: data_path(&cli, &c.reference, "annotations")?,
                estimate_dir: c.estimate.clone(),
                out_dir: c.out.clone(),
                vocab: c.vocab.clone(),
            };
            let summary = cmd_eval(&opts)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for (name, v) in chordkit::report::METRIC_COLUMNS.iter().zip(summary.values) {
                match v {
                    Some(v) => println!("{name:>10} {v:.4}"),
                    None => println!("{name:>10} -"),
                }
            }
        }
        Command::Report(c) => {
            let opts = ReportOptions {
                features_dir: data_path(&cli, &c.features, "features")?,
                out_dir: c.out.clone(),
                gamma: c.gamma,
                w_max: c.w_max,
                vocab: c.vocab.clone(),
            };
            let q = cmd_report(&opts)?;
            println!("{} chord qualities; tables in {}", q.len(), opts.out_dir.display());
        }
        Command::Synth(c) => {
            let mut config = SynthConfig::new(&[], c.tracks);
            config.palette = parse_palette(&c.palette)?;
            config.seconds = (c.min_seconds, c.max_seconds);
            config.snr_db = c.snr;
            let opts = SynthOptions { out_dir: data_path(&cli, &c.out, "")?, config, seed: cli.seed.unwrap_or(0) };
            let n = cmd_synth(&opts)?;
            println!("rendered {n} tracks to {}", opts.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
