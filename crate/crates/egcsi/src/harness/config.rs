//! TOML-facing configuration schemas for the CLI and benchmark runners.
//! The `EGCSI_SEED` environment variable, when set, overrides every seed in a
//! loaded config.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::align::CodebookConfig;
use crate::channel::{ArrayGeometry, EnvironmentConfig};
use crate::codec::{CodewordCoding, QuantizerSpec, TrainingConfig};
use crate::error::{Error, Result};
use crate::harness::pipeline::VariantKind;

pub const SEED_ENV_VAR: &str = "EGCSI_SEED";

/// Seed override from the environment, if any.
pub fn seed_override() -> Option<u64> {
    std::env::var(SEED_ENV_VAR).ok()?.trim().parse().ok()
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub n_h: usize,
    pub n_v: usize,
    pub n_c: usize,
    pub bandwidth_hz: f64,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.n_h, self.n_v, self.n_c, self.bandwidth_hz)
    }
}

fn default_true() -> bool {
    true
}

/// Config for `egcsi gen`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub samples: usize,
    #[serde(default = "default_true")]
    pub write_paths: bool,
    pub geometry: GeometryConfig,
    pub environment: EnvironmentConfig,
}

fn default_eta() -> f64 {
    0.99
}
fn default_r_max() -> usize {
    8
}
fn default_quantizer_bits() -> u8 {
    6
}

/// Decoupling/alignment/quantization knobs shared by pipelines.
/// `quantizer_bits = 0` disables quantization (raw f64 codewords).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PipelineParams {
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    #[serde(default)]
    pub codebook: CodebookConfig,
    #[serde(default = "default_quantizer_bits")]
    pub quantizer_bits: u8,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            eta: default_eta(),
            r_max: default_r_max(),
            codebook: CodebookConfig::default(),
            quantizer_bits: default_quantizer_bits(),
        }
    }
}

impl PipelineParams {
    pub fn coding(&self) -> Result<CodewordCoding> {
        if self.quantizer_bits == 0 {
            Ok(CodewordCoding::Raw)
        } else {
            Ok(CodewordCoding::Quantized(QuantizerSpec::new(
                self.quantizer_bits,
            )?))
        }
    }
}

fn default_hidden() -> usize {
    512
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompressorConfig {
    pub codeword_dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
}

fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    64
}
fn default_epochs() -> usize {
    200
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainingParams {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            learning_rate: default_lr(),
            batch_size: default_batch(),
            epochs: default_epochs(),
            seed: 0,
        }
    }
}

impl TrainingParams {
    pub fn build(&self) -> TrainingConfig {
        TrainingConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
        }
    }
}

/// Config for `egcsi train` and `egcsi eval`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainFileConfig {
    pub geometry: GeometryConfig,
    pub envs: Vec<EnvironmentConfig>,
    pub samples_per_env: usize,
    pub compressor: CompressorConfig,
    #[serde(default)]
    pub training: TrainingParams,
    #[serde(default)]
    pub pipeline: PipelineParams,
    pub out_model: PathBuf,
    #[serde(default)]
    pub out_loss_csv: Option<PathBuf>,
}

fn default_w1_projections() -> usize {
    64
}

/// Config for the generalization benchmark (`egcsi eval --benchmark` path and
/// the acceptance suite).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub train_envs: Vec<EnvironmentConfig>,
    pub test_envs: Vec<EnvironmentConfig>,
    pub samples_per_env: usize,
    pub variants: Vec<VariantKind>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub compressor: CompressorConfig,
    #[serde(default)]
    pub training: TrainingParams,
    #[serde(default)]
    pub pipeline: PipelineParams,
    #[serde(default = "default_w1_projections")]
    pub w1_projections: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_envs.is_empty() || self.test_envs.is_empty() {
            return Err(Error::InvalidConfig("env lists must be nonempty".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidConfig("variant list must be nonempty".into()));
        }
        for tr in &self.train_envs {
            if self.test_envs.iter().any(|te| te.id == tr.id) {
                return Err(Error::InvalidConfig(format!(
                    "train/test env ids must be disjoint; '{}' appears in both",
                    tr.id
                )));
            }
        }
        if self.samples_per_env == 0 {
            return Err(Error::InvalidConfig("samples_per_env must be >= 1".into()));
        }
        Ok(())
    }

    /// Apply the `EGCSI_SEED` override to every seed field.
    pub fn apply_seed_override(&mut self) {
        if let Some(seed) = seed_override() {
            self.seed = seed;
            self.training.seed = seed;
            for (i, e) in self.train_envs.iter_mut().enumerate() {
                e.seed = seed.wrapping_add(1 + i as u64);
            }
            for (i, e) in self.test_envs.iter_mut().enumerate() {
                e.seed = seed.wrapping_add(101 + i as u64);
            }
        }
    }
}

/// Config for `egcsi sweep`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFileConfig {
    pub geometry: GeometryConfig,
    pub environment: EnvironmentConfig,
    pub samples: usize,
    /// Noise sweep grid (dB).
    #[serde(default)]
    pub snr_db: Vec<f64>,
    /// Overhead sweep grid of codeword dimensions.
    #[serde(default)]
    pub m_values: Vec<usize>,
    #[serde(default)]
    pub pipeline: PipelineParams,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_config_parses_with_defaults() {
        let text = r#"
            samples = 10
            [geometry]
            n_h = 8
            n_v = 4
            n_c = 32
            bandwidth_hz = 10e6
            [environment]
            id = "a"
            cluster_count_range = [1, 3]
            aaod_sector_rad = [-1.0, -0.2]
            eaod_sector_rad = [1.0, 2.0]
            delay_range_s = [0.0, 6e-7]
            aod_spread_rad = 0.087
            delay_spread_s = 4.7e-9
            paths_per_cluster = 20
            power_decay_db_per_cluster = 3.0
            seed = 1
        "#;
        let cfg: GenConfig = toml::from_str(text).unwrap();
        assert!(cfg.write_paths);
        assert_eq!(cfg.environment.paths_per_cluster, 20);
        cfg.geometry.build().unwrap();
    }

    #[test]
    fn pipeline_params_defaults() {
        let p: PipelineParams = toml::from_str("").unwrap();
        assert_eq!(p.eta, 0.99);
        assert_eq!(p.r_max, 8);
        assert_eq!(p.codebook.o_h, 2);
        assert_eq!(p.quantizer_bits, 6);
        assert!(matches!(p.coding().unwrap(), CodewordCoding::Quantized(_)));
        let raw: PipelineParams = toml::from_str("quantizer_bits = 0").unwrap();
        assert!(matches!(raw.coding().unwrap(), CodewordCoding::Raw));
    }

    #[test]
    fn experiment_validation() {
        let env = |id: &str, seed: u64| EnvironmentConfig {
            id: id.into(),
            cluster_count_range: (1, 2),
            aaod_sector_rad: (-1.0, 0.0),
            eaod_sector_rad: (1.0, 2.0),
            delay_range_s: (0.0, 1e-7),
            aod_spread_rad: 0.05,
            delay_spread_s: 1e-9,
            paths_per_cluster: 4,
            power_decay_db_per_cluster: 3.0,
            seed,
        };
        let mut cfg = ExperimentConfig {
            geometry: GeometryConfig {
                n_h: 4,
                n_v: 2,
                n_c: 16,
                bandwidth_hz: 1e6,
            },
            train_envs: vec![env("a", 1)],
            test_envs: vec![env("b", 2)],
            samples_per_env: 4,
            variants: vec![VariantKind::EgCsinet],
            seed: 0,
            output_dir: PathBuf::from("/tmp/x"),
            compressor: CompressorConfig {
                codeword_dim: 8,
                hidden_dim: 16,
            },
            training: TrainingParams::default(),
            pipeline: PipelineParams::default(),
            w1_projections: 8,
        };
        cfg.validate().unwrap();
        cfg.test_envs[0].id = "a".into();
        assert!(cfg.validate().is_err());
    }
}
