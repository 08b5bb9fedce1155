//! Experiment configuration: a sectioned key-value (TOML) file naming the
//! data files, the augmentation arms, the model/optimizer/decoding
//! settings, and the replicate seeds.
//!
//! ```toml
//! arms = ["none", "copy@1000", "wow@1000", "bt@1000", "wow+copy@2000"]
//! seeds = [1, 2, 3]
//!
//! [data]
//! train_src = "toy/train.src"   # paths resolve relative to this file
//! train_tgt = "toy/train.tgt"
//! dev_src = "toy/dev.src"
//! dev_tgt = "toy/dev.tgt"
//! test_src = "toy/test.src"
//! test_tgt = "toy/test.tgt"
//! mono_tgt = "toy/mono.tgt"
//! lexicon = "toy/lexicon.txt"
//! lowercase = false             # optional
//!
//! [model]                       # all optional
//! embed_dim = 64
//! hidden_dim = 64
//! src_vocab_max = 10000         # absent = unlimited
//! tgt_vocab_max = 10000
//! min_freq = 1
//!
//! [train]                       # all optional
//! batch_size = 32
//! epochs = 50
//! lr_init = 0.001
//! adam_beta1 = 0.9
//! adam_beta2 = 0.999
//! adam_eps = 1e-8
//! grad_clip_norm = 5.0
//! eval_every = 1
//!
//! [decode]                      # all optional
//! beam_width = 5
//! max_len = 40                  # absent = 2 * source length + 5
//! length_normalize = true
//!
//! [augment]                     # all optional
//! oov_mode = "copy_through"     # or "drop"
//! tie_mode = "first"            # or "seeded_random"
//! ```
//!
//! An arm is `none` or `method[+method]@size`, with methods `wow`, `copy`,
//! `bt` and an optional `k` size suffix (`wow@4k` = `wow@4000`). Multi-
//! method arms split the synthetic budget evenly, first-named method
//! taking any remainder.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::augment::{OovMode, TieMode, WowPolicy};
use crate::nmt::{DecodeConfig, TrainConfig};

use super::ExperimentError;

/// One augmentation method within an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugMethod {
    Wow,
    Copy,
    Bt,
}

impl AugMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AugMethod::Wow => "wow",
            AugMethod::Copy => "copy",
            AugMethod::Bt => "bt",
        }
    }
}

/// A named augmentation condition: which synthetic-data methods run and
/// how many synthetic sentences they contribute in total. The baseline
/// `none` arm has no methods and size 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arm {
    pub methods: Vec<AugMethod>,
    pub synthetic_size: usize,
}

impl Arm {
    /// Canonical label, also the arm's directory name: `none`,
    /// `wow@1000`, `wow+copy@2000`, ...
    pub fn label(&self) -> String {
        if self.methods.is_empty() {
            "none".to_string()
        } else {
            let names: Vec<&str> = self.methods.iter().map(|m| m.as_str()).collect();
            format!("{}@{}", names.join("+"), self.synthetic_size)
        }
    }

    /// Per-method sentence budgets: an even split of `synthetic_size`,
    /// earlier methods taking the remainder.
    pub fn budgets(&self) -> Vec<usize> {
        let k = self.methods.len();
        if k == 0 {
            return Vec::new();
        }
        let base = self.synthetic_size / k;
        let extra = self.synthetic_size % k;
        (0..k).map(|i| base + usize::from(i < extra)).collect()
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Parses arm syntax: `none`, or `wow|copy|bt` joined by `+`, then `@`,
/// then a positive size with optional `k` (x1000) suffix.
pub fn parse_arm(text: &str) -> Result<Arm, ExperimentError> {
    let bad = |why: &str| {
        Err(ExperimentError::Config(format!(
            "arm `{text}`: {why}"
        )))
    };
    let s = text.trim();
    if s == "none" {
        return Ok(Arm {
            methods: Vec::new(),
            synthetic_size: 0,
        });
    }
    let Some((methods_part, size_part)) = s.split_once('@') else {
        return bad("expected `none` or `method@size`");
    };
    let mut methods = Vec::new();
    for name in methods_part.split('+') {
        let method = match name {
            "wow" => AugMethod::Wow,
            "copy" => AugMethod::Copy,
            "bt" => AugMethod::Bt,
            other => return bad(&format!("unknown method `{other}`")),
        };
        if methods.contains(&method) {
            return bad(&format!("method `{name}` repeated"));
        }
        methods.push(method);
    }
    if methods.is_empty() {
        return bad("no methods named");
    }
    let (digits, factor) = match size_part.strip_suffix(['k', 'K']) {
        Some(d) => (d, 1000usize),
        None => (size_part, 1),
    };
    let size: usize = match digits.parse() {
        Ok(n) => n,
        Err(_) => return bad(&format!("bad size `{size_part}`")),
    };
    if size == 0 {
        return bad("size must be positive");
    }
    Ok(Arm {
        methods,
        synthetic_size: size * factor,
    })
}

/// Where every input file lives. Paths are stored already resolved
/// against the config file's directory.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub train_src: PathBuf,
    pub train_tgt: PathBuf,
    pub dev_src: PathBuf,
    pub dev_tgt: PathBuf,
    pub test_src: PathBuf,
    pub test_tgt: PathBuf,
    pub mono_tgt: PathBuf,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub lowercase: bool,
}

impl DataPaths {
    fn paths(&self) -> [(&'static str, &Path); 8] {
        [
            ("train_src", &self.train_src),
            ("train_tgt", &self.train_tgt),
            ("dev_src", &self.dev_src),
            ("dev_tgt", &self.dev_tgt),
            ("test_src", &self.test_src),
            ("test_tgt", &self.test_tgt),
            ("mono_tgt", &self.mono_tgt),
            ("lexicon", &self.lexicon),
        ]
    }

    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.train_src,
            &mut self.train_tgt,
            &mut self.dev_src,
            &mut self.dev_tgt,
            &mut self.test_src,
            &mut self.test_tgt,
            &mut self.mono_tgt,
            &mut self.lexicon,
        ] {
            if p.is_relative() {
                *p = base.join(&p);
            }
        }
    }
}

fn default_embed_dim() -> usize {
    64
}

fn default_hidden_dim() -> usize {
    64
}

fn default_min_freq() -> usize {
    1
}

/// Model shape and vocabulary-building settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    #[serde(default)]
    pub src_vocab_max: Option<usize>,
    #[serde(default)]
    pub tgt_vocab_max: Option<usize>,
    #[serde(default = "default_min_freq")]
    pub min_freq: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            embed_dim: default_embed_dim(),
            hidden_dim: default_hidden_dim(),
            src_vocab_max: None,
            tgt_vocab_max: None,
            min_freq: default_min_freq(),
        }
    }
}

/// The `[train]` section; every field falls back to `TrainConfig`'s
/// default. The per-replicate shuffle seed is derived at run time.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_init: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub grad_clip_norm: f64,
    pub eval_every: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSettings {
            batch_size: d.batch_size,
            epochs: d.epochs,
            lr_init: d.lr_init,
            adam_beta1: d.adam_beta1,
            adam_beta2: d.adam_beta2,
            adam_eps: d.adam_eps,
            grad_clip_norm: d.grad_clip_norm,
            eval_every: d.eval_every,
        }
    }
}

impl TrainSettings {
    pub fn train_config(&self, shuffle_seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            lr_init: self.lr_init,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            grad_clip_norm: self.grad_clip_norm,
            eval_every: self.eval_every,
            shuffle_seed,
        }
    }
}

/// The `[decode]` section, mirroring [`DecodeConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeSettings {
    pub beam_width: usize,
    pub max_len: Option<usize>,
    pub length_normalize: bool,
}

impl Default for DecodeSettings {
    fn default() -> Self {
        let d = DecodeConfig::default();
        DecodeSettings {
            beam_width: d.beam_width,
            max_len: d.max_len,
            length_normalize: d.length_normalize,
        }
    }
}

impl DecodeSettings {
    pub fn decode_config(&self) -> DecodeConfig {
        DecodeConfig {
            beam_width: self.beam_width,
            max_len: self.max_len,
            length_normalize: self.length_normalize,
        }
    }
}

/// The `[augment]` section: word-on-word policy knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSettings {
    pub oov_mode: OovChoice,
    pub tie_mode: TieChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OovChoice {
    #[default]
    CopyThrough,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TieChoice {
    #[default]
    First,
    SeededRandom,
}

impl AugmentSettings {
    /// Concrete policy for one replicate (the tie seed is per-replicate).
    pub fn wow_policy(&self, tie_seed: u64) -> WowPolicy {
        WowPolicy {
            oov_mode: match self.oov_mode {
                OovChoice::CopyThrough => OovMode::CopyThrough,
                OovChoice::Drop => OovMode::Drop,
            },
            tie_mode: match self.tie_mode {
                TieChoice::First => TieMode::First,
                TieChoice::SeededRandom => TieMode::SeededRandom { seed: tie_seed },
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    arms: Vec<String>,
    seeds: Vec<u64>,
    data: DataPaths,
    #[serde(default)]
    model: ModelSettings,
    #[serde(default)]
    train: TrainSettings,
    #[serde(default)]
    decode: DecodeSettings,
    #[serde(default)]
    augment: AugmentSettings,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub arms: Vec<Arm>,
    pub seeds: Vec<u64>,
    pub data: DataPaths,
    pub model: ModelSettings,
    pub train: TrainSettings,
    pub decode: DecodeSettings,
    pub augment: AugmentSettings,
}

impl ExperimentConfig {
    /// Parses and validates a config file. Relative data paths resolve
    /// against the file's directory; every referenced file must exist.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut raw: RawConfig = toml::from_str(&text)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        raw.data.resolve(base);
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ExperimentError> {
        let fail = |why: String| Err(ExperimentError::Config(why));
        if raw.arms.is_empty() {
            return fail("at least one arm is required".into());
        }
        if raw.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        let mut arms = Vec::with_capacity(raw.arms.len());
        for text in &raw.arms {
            arms.push(parse_arm(text)?);
        }
        let mut labels: Vec<String> = arms.iter().map(Arm::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != arms.len() {
            return fail("duplicate arm".into());
        }
        let mut seeds = raw.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != raw.seeds.len() {
            return fail("duplicate seed".into());
        }

        if raw.model.embed_dim == 0 || raw.model.hidden_dim == 0 {
            return fail("model dims must be >= 1".into());
        }
        if raw.model.min_freq == 0 {
            return fail("min_freq must be >= 1".into());
        }
        if raw.model.src_vocab_max == Some(0) || raw.model.tgt_vocab_max == Some(0) {
            return fail("vocab caps must be >= 1 when given".into());
        }
        if raw.train.batch_size == 0 || raw.train.epochs == 0 || raw.train.eval_every == 0 {
            return fail("batch_size, epochs, eval_every must be >= 1".into());
        }
        if !(raw.train.adam_beta1 > 0.0 && raw.train.adam_beta1 < 1.0)
            || !(raw.train.adam_beta2 > 0.0 && raw.train.adam_beta2 < 1.0)
        {
            return fail("adam betas must lie in (0, 1)".into());
        }
        // `positive` rejects NaN too, which `<= 0.0` would let through.
        let positive = |x: f64| x > 0.0;
        if !positive(raw.train.adam_eps) {
            return fail("adam_eps must be positive".into());
        }
        if !positive(raw.train.lr_init) {
            return fail("lr_init must be positive".into());
        }
        if !positive(raw.train.grad_clip_norm) {
            return fail("grad_clip_norm must be positive".into());
        }
        if raw.decode.beam_width == 0 {
            return fail("beam_width must be >= 1".into());
        }
        if raw.decode.max_len == Some(0) {
            return fail("max_len must be >= 1 when given".into());
        }
        for (name, p) in raw.data.paths() {
            if !p.is_file() {
                return fail(format!("data.{name}: no such file: {}", p.display()));
            }
        }
        Ok(ExperimentConfig {
            arms,
            seeds: raw.seeds,
            data: raw.data,
            model: raw.model,
            train: raw.train,
            decode: raw.decode,
            augment: raw.augment,
        })
    }
}

/// Every seed a replicate uses, derived from its configured seed by fixed
/// offsets so replicates are independent and runs are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub init: u64,
    pub shuffle: u64,
    pub wow_ties: u64,
    pub mix: u64,
    pub reverse_init: u64,
    pub reverse_shuffle: u64,
}

pub fn seed_plan(replicate: u64) -> SeedPlan {
    SeedPlan {
        init: replicate,
        shuffle: replicate.wrapping_add(1),
        wow_ties: replicate.wrapping_add(2),
        mix: replicate.wrapping_add(3),
        reverse_init: replicate.wrapping_add(4),
        reverse_shuffle: replicate.wrapping_add(5),
    }
}
