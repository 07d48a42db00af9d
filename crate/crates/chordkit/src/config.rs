//! `key = value` run configuration shared by the config file and the
//! command-line overrides.

use std::path::{Path, PathBuf};

use chordkit_core::conformer::ModelConfig;
use chordkit_core::harness::TrainConfig;

use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// 1-based cross-validation fold.
    pub fold: usize,
    pub vocab: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { model: ModelConfig::default(), train: TrainConfig::default(), fold: 1, vocab: None }
    }
}

pub const KEYS: &[&str] = &[
    "input_dim",
    "num_heads",
    "ffn_dim",
    "num_layers",
    "depthwise_kernel",
    "max_len",
    "dropout",
    "segment_length",
    "batch_size",
    "init_lr",
    "lr_factor",
    "patience",
    "stop_lr",
    "gamma",
    "w_max",
    "transition_penalty",
    "seed",
    "max_epochs",
    "beta1",
    "beta2",
    "adam_eps",
    "weight_decay",
    "fold",
    "vocab",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let m = &mut self.model;
        let t = &mut self.train;
        match key {
            "input_dim" => m.input_dim = num(key, v)?,
            "num_heads" => m.num_heads = num(key, v)?,
            "ffn_dim" => m.ffn_dim = num(key, v)?,
            "num_layers" => m.num_layers = num(key, v)?,
            "depthwise_kernel" => m.depthwise_kernel = num(key, v)?,
            "max_len" => m.max_len = num(key, v)?,
            "dropout" => m.dropout = num(key, v)?,
            "segment_length" => t.segment_length = num(key, v)?,
            "batch_size" => t.batch_size = num(key, v)?,
            "init_lr" => t.init_lr = num(key, v)?,
            "lr_factor" => t.lr_factor = num(key, v)?,
            "patience" => t.patience = num(key, v)?,
            "stop_lr" => t.stop_lr = num(key, v)?,
            "gamma" => t.gamma = num(key, v)?,
            "w_max" => t.w_max = num(key, v)?,
            "transition_penalty" => t.transition_penalty = num(key, v)?,
            "seed" => t.seed = num(key, v)?,
            "max_epochs" => t.max_epochs = if v == "none" { None } else { Some(num(key, v)?) },
            "beta1" => t.optimizer.beta1 = num(key, v)?,
            "beta2" => t.optimizer.beta2 = num(key, v)?,
            "adam_eps" => t.optimizer.eps = num(key, v)?,
            "weight_decay" => t.optimizer.weight_decay = num(key, v)?,
            "fold" => self.fold = num(key, v)?,
            "vocab" => self.vocab = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies every pair, reporting all bad ones together.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        let errors: Vec<String> = pairs.iter().filter_map(|(k, v)| self.set(k, v).err()).collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid config entries: {}", errors.join("; "))))
        }
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).at(path)?;
        let pairs = parse_pairs(&text).map_err(|m| Error::Config(format!("{}: {m}", path.display())))?;
        self.apply(&pairs)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if !(1..=5).contains(&self.fold) {
            return Err(Error::Config(format!("fold {} out of range 1..=5", self.fold)));
        }
        Ok(())
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let m = &self.model;
        let t = &self.train;
        let o = &t.optimizer;
        let values = [
            m.input_dim.to_string(),
            m.num_heads.to_string(),
            m.ffn_dim.to_string(),
            m.num_layers.to_string(),
            m.depthwise_kernel.to_string(),
            m.max_len.to_string(),
            m.dropout.to_string(),
            t.segment_length.to_string(),
            t.batch_size.to_string(),
            t.init_lr.to_string(),
            t.lr_factor.to_string(),
            t.patience.to_string(),
            t.stop_lr.to_string(),
            t.gamma.to_string(),
            t.w_max.to_string(),
            t.transition_penalty.to_string(),
            t.seed.to_string(),
            t.max_epochs.map_or("none".into(), |e| e.to_string()),
            o.beta1.to_string(),
            o.beta2.to_string(),
            o.eps.to_string(),
            o.weight_decay.to_string(),
            self.fold.to_string(),
            self.vocab.as_ref().map_or(String::new(), |p| p.display().to_string()),
        ];
        KEYS.iter().zip(values).filter(|(_, v)| !v.is_empty()).map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
