//! Experiment configuration: a flat TOML document driving the whole
//! pipeline, plus its canonical hash.

use crate::data::CsvSchema;
use crate::models::TrainConfig;
use crate::vmd::{DecomposeScope, InitMode, VmdConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use super::PipelineError;

/// Decomposition level choice: `none` trains a single model on the raw
/// load; `K` trains K+1 per-mode models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KChoice {
    None,
    K(usize),
}

impl KChoice {
    pub fn label(&self) -> String {
        match self {
            KChoice::None => "none".to_string(),
            KChoice::K(k) => k.to_string(),
        }
    }
}

impl Serialize for KChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for KChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        if raw == "none" {
            return Ok(KChoice::None);
        }
        raw.parse::<usize>()
            .map(KChoice::K)
            .map_err(|_| serde::de::Error::custom(format!("bad K value `{raw}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileChoice {
    PaperExact,
    DeskScale,
}

fn default_resample_minutes() -> u64 {
    30
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_k_list() -> Vec<KChoice> {
    vec![
        KChoice::None,
        KChoice::K(7),
        KChoice::K(15),
        KChoice::K(31),
        KChoice::K(63),
        KChoice::K(127),
        KChoice::K(255),
    ]
}
fn default_levels() -> Vec<usize> {
    vec![3, 4, 5]
}
fn default_alpha() -> f64 {
    1000.0
}
fn default_tol() -> f64 {
    5e-6
}
fn default_max_iters() -> usize {
    500
}
fn default_init() -> String {
    "all-zero".into()
}
fn default_scope() -> String {
    "per-window".into()
}
fn default_profile() -> ProfileChoice {
    ProfileChoice::DeskScale
}
fn default_lr() -> f64 {
    0.002
}
fn default_batch() -> usize {
    64
}
fn default_epochs() -> usize {
    30
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_timestamp_col() -> String {
    "timestamp".into()
}
fn default_power_col() -> String {
    "power_w".into()
}

/// Everything a sweep needs, loadable from a flat TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Household CSV paths; the file stem is the household id.
    pub data: Vec<PathBuf>,
    #[serde(default = "default_timestamp_col")]
    pub timestamp_col: String,
    #[serde(default = "default_power_col")]
    pub power_col: String,
    #[serde(default = "default_resample_minutes")]
    pub resample_minutes: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_k_list")]
    pub k_list: Vec<KChoice>,
    #[serde(default = "default_levels")]
    pub mwdn_levels: Vec<usize>,
    #[serde(default = "default_profile")]
    pub profile: ProfileChoice,
    #[serde(default = "default_alpha")]
    pub vmd_alpha: f64,
    #[serde(default = "default_tol")]
    pub vmd_tol: f64,
    #[serde(default)]
    pub vmd_tau: f64,
    #[serde(default = "default_max_iters")]
    pub vmd_max_iters: usize,
    /// all-zero | uniform | random
    #[serde(default = "default_init")]
    pub vmd_init: String,
    /// per-window | whole-series
    #[serde(default = "default_scope")]
    pub decompose_scope: String,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// 0 lets the runtime decide.
    #[serde(default)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, PipelineError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self = toml::from_str(&raw)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.data.is_empty() {
            return Err(PipelineError::Config("no data files listed".into()));
        }
        for p in &self.data {
            if !p.exists() {
                return Err(PipelineError::Config(format!(
                    "data file {} does not exist",
                    p.display()
                )));
            }
        }
        if self.resample_minutes != 30 {
            return Err(PipelineError::Config(
                "only 30-minute resampling is supported (48-step days)".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(PipelineError::Config(format!(
                "train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        if self.k_list.is_empty() {
            return Err(PipelineError::Config("k_list is empty".into()));
        }
        if self.mwdn_levels.is_empty() || self.mwdn_levels.iter().any(|&l| l == 0) {
            return Err(PipelineError::Config("mwdn_levels must be >= 1".into()));
        }
        self.init_mode()?;
        self.scope()?;
        Ok(())
    }

    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            timestamp_col: self.timestamp_col.clone(),
            power_col: self.power_col.clone(),
        }
    }

    pub fn init_mode(&self) -> Result<InitMode, PipelineError> {
        match self.vmd_init.as_str() {
            "all-zero" => Ok(InitMode::AllZero),
            "uniform" => Ok(InitMode::Uniform),
            "random" => Ok(InitMode::Random {
                seed: self.base_seed,
            }),
            other => Err(PipelineError::Config(format!("unknown vmd_init `{other}`"))),
        }
    }

    pub fn scope(&self) -> Result<DecomposeScope, PipelineError> {
        match self.decompose_scope.as_str() {
            "per-window" => Ok(DecomposeScope::PerWindow),
            "whole-series" => Ok(DecomposeScope::WholeSeries),
            other => Err(PipelineError::Config(format!(
                "unknown decompose_scope `{other}`"
            ))),
        }
    }

    pub fn vmd_config(&self, k: usize) -> Result<VmdConfig<f64>, PipelineError> {
        Ok(VmdConfig {
            modes: k,
            alpha: self.vmd_alpha,
            tol: self.vmd_tol,
            tau: self.vmd_tau,
            max_iters: self.vmd_max_iters,
            init_mode: self.init_mode()?,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
        }
    }

    /// Hash of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canon.as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
