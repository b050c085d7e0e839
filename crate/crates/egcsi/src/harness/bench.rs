//! Cross-environment generalization benchmark.
//!
//! Trains each requested variant on the train environments, evaluates NMSE on
//! held-out environments at matched mean feedback bits (codeword dimensions
//! of the whole-channel variants are derived from the eg-csinet overhead),
//! and reports the cross-environment Wasserstein-1 diagnostic for raw
//! channels versus aligned clusters.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::channel::{sample_environment, AngularDelayTransform, ChannelSample};
use crate::codec::{train_autoencoder, Codec, CompressorSpec, CompressorVariant, TruncationCodec};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::pipeline::{build_training_set, Pipeline, PipelineVariant, VariantKind};
use crate::metrics::{w1_features, wasserstein1_marginal, DbValue};

#[derive(Debug, Clone, Serialize)]
pub struct VariantEnvResult {
    pub variant: String,
    pub env_id: String,
    pub train_env: bool,
    pub mean_nmse: DbValue,
    pub mean_bits: f64,
    pub mean_r_hat: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct W1Matrix {
    pub env_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneralizationReport {
    pub results: Vec<VariantEnvResult>,
    pub matched_codeword_dims: BTreeMap<String, usize>,
    pub mean_r_hat_train: f64,
    pub w1_raw: W1Matrix,
    pub w1_aligned: W1Matrix,
    pub train_loss: BTreeMap<String, Vec<f64>>,
}

impl GeneralizationReport {
    pub fn mean_nmse_db(&self, variant: VariantKind, env_id: &str) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.variant == variant.as_str() && r.env_id == env_id)
            .map(|r| r.mean_nmse.db_or_neg_inf())
    }

    /// Mean over all held-out environments, in dB of the mean linear ratio.
    pub fn test_mean_nmse_db(&self, variant: VariantKind) -> Option<f64> {
        let rows: Vec<&VariantEnvResult> = self
            .results
            .iter()
            .filter(|r| r.variant == variant.as_str() && !r.train_env)
            .collect();
        if rows.is_empty() {
            return None;
        }
        let lin = rows.iter().map(|r| r.mean_nmse.linear).sum::<f64>() / rows.len() as f64;
        Some(DbValue::from_linear(lin).db_or_neg_inf())
    }

    pub fn test_mean_bits(&self, variant: VariantKind) -> Option<f64> {
        let rows: Vec<&VariantEnvResult> = self
            .results
            .iter()
            .filter(|r| r.variant == variant.as_str() && !r.train_env)
            .collect();
        if rows.is_empty() {
            return None;
        }
        Some(rows.iter().map(|r| r.mean_bits).sum::<f64>() / rows.len() as f64)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Derive the codeword dimension that matches a target mean bit budget for a
/// variant, using the frame formulas.
fn matched_codeword_dim(
    cfg: &ExperimentConfig,
    kind: VariantKind,
    q_eg_bits: f64,
    q_r: usize,
    q_m: usize,
    bits_per_elem: usize,
) -> usize {
    let input_dim = 2 * cfg.geometry.n_h * cfg.geometry.n_v * cfg.geometry.n_c;
    let m = match kind {
        // Whole-channel codeword, no metadata, no rank field.
        VariantKind::VanillaAe => q_eg_bits / bits_per_elem as f64,
        // One cluster: q_R + q_m + M * bits.
        VariantKind::EgWithoutMcd => (q_eg_bits - q_r as f64 - q_m as f64) / bits_per_elem as f64,
        VariantKind::EgCsinet | VariantKind::TruncationBaseline => {
            cfg.compressor.codeword_dim as f64
        }
    };
    (m.round() as usize).clamp(1, input_dim)
}

pub fn run_generalization_benchmark(cfg: &ExperimentConfig) -> Result<GeneralizationReport> {
    cfg.validate()?;
    let geom = cfg.geometry.build()?;
    let coding = cfg.pipeline.coding()?;
    let cb = cfg.pipeline.codebook;
    let (eta, r_max) = (cfg.pipeline.eta, cfg.pipeline.r_max);

    let gen_env =
        |envs: &[crate::channel::EnvironmentConfig]| -> Result<Vec<(String, Vec<ChannelSample>)>> {
            envs.iter()
                .map(|e| {
                    Ok((
                        e.id.clone(),
                        sample_environment(e, cfg.samples_per_env, &geom)?,
                    ))
                })
                .collect()
        };
    let train_sets = gen_env(&cfg.train_envs)?;
    let test_sets = gen_env(&cfg.test_envs)?;
    let all_train: Vec<ChannelSample> = train_sets
        .iter()
        .flat_map(|(_, s)| s.iter().cloned())
        .collect();

    // Mean cluster count on training data fixes the matched bit budget.
    let eg_train_set =
        build_training_set(VariantKind::EgCsinet, &all_train, &geom, &cb, eta, r_max)?;
    let mean_r_hat_train = eg_train_set.len() as f64 / all_train.len() as f64;
    let probe_layout =
        crate::codec::FrameLayout::new(&geom, &cb, &coding, cfg.compressor.codeword_dim, r_max)?;
    let q_eg_bits = probe_layout.q_r as f64
        + mean_r_hat_train * (probe_layout.q_m() + probe_layout.q_f_total()) as f64;

    let mut matched_codeword_dims = BTreeMap::new();
    let mut train_loss = BTreeMap::new();
    let mut results = Vec::new();

    for &kind in &cfg.variants {
        let m = matched_codeword_dim(
            cfg,
            kind,
            q_eg_bits,
            probe_layout.q_r,
            probe_layout.q_m(),
            coding.bits_per_element(),
        );
        matched_codeword_dims.insert(kind.as_str().to_string(), m);

        let codec = match kind {
            VariantKind::TruncationBaseline => Codec::Truncation(TruncationCodec::new(
                geom.n_t(),
                geom.n_c(),
                m.next_multiple_of(2),
            )?),
            _ => {
                let training_set = if kind == VariantKind::EgCsinet {
                    eg_train_set.clone()
                } else {
                    build_training_set(kind, &all_train, &geom, &cb, eta, r_max)?
                };
                let spec = CompressorSpec {
                    n_t: geom.n_t(),
                    n_c: geom.n_c(),
                    codeword_dim: m,
                    hidden_dim: cfg.compressor.hidden_dim,
                    variant: CompressorVariant::ReferenceMlp,
                    seed: cfg.training.seed,
                };
                let quant = match &coding {
                    crate::codec::CodewordCoding::Quantized(q) => Some(q),
                    crate::codec::CodewordCoding::Raw => None,
                };
                let (model, trace) =
                    train_autoencoder(&training_set, &spec, quant, &cfg.training.build())?;
                train_loss.insert(kind.as_str().to_string(), trace);
                Codec::Mlp(model)
            }
        };

        let variant_coding = match kind {
            VariantKind::TruncationBaseline => {
                crate::harness::sweep::widen_clip_for_truncation(coding, &geom)
            }
            _ => coding,
        };
        let pipeline = Pipeline::new(
            PipelineVariant {
                kind,
                codebook: cb,
                coding: variant_coding,
                eta,
                r_max,
            },
            &geom,
            codec,
        )?;

        let mut eval = |env_id: &str, samples: &[ChannelSample], train_env: bool| -> Result<()> {
            let mut nmse_lin = Vec::with_capacity(samples.len());
            let mut bits = Vec::with_capacity(samples.len());
            let mut r_hats = Vec::with_capacity(samples.len());
            for s in samples {
                let run = pipeline.run(s)?;
                nmse_lin.push(run.record.nmse.linear);
                bits.push(run.record.total_bits as f64);
                r_hats.push(run.record.r_hat as f64);
            }
            results.push(VariantEnvResult {
                variant: kind.as_str().to_string(),
                env_id: env_id.to_string(),
                train_env,
                mean_nmse: DbValue::from_linear(mean(&nmse_lin)),
                mean_bits: mean(&bits),
                mean_r_hat: mean(&r_hats),
                samples: samples.len(),
            });
            Ok(())
        };
        for (id, samples) in &train_sets {
            eval(id, samples, true)?;
        }
        for (id, samples) in &test_sets {
            eval(id, samples, false)?;
        }
    }

    // W1 diagnostic: raw angular-delay channels vs aligned clusters, env x env.
    let transform = AngularDelayTransform::new(&geom);
    let mut env_ids = Vec::new();
    let mut raw_features = Vec::new();
    let mut aligned_features = Vec::new();
    for (id, samples) in train_sets.iter().chain(test_sets.iter()) {
        env_ids.push(id.clone());
        let raw: Vec<crate::linalg::CMat> = samples
            .iter()
            .map(|s| transform.forward(&s.h))
            .collect::<Result<_>>()?;
        raw_features.push(w1_features(&raw));
        let aligned = build_training_set(VariantKind::EgCsinet, samples, &geom, &cb, eta, r_max)?;
        aligned_features.push(w1_features(&aligned));
    }
    let w1_of = |features: &[Vec<Vec<f64>>]| -> Result<W1Matrix> {
        let n = features.len();
        let mut values = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = wasserstein1_marginal(
                    &features[i],
                    &features[j],
                    cfg.w1_projections,
                    cfg.seed,
                )?;
                values[i][j] = w;
                values[j][i] = w;
            }
        }
        Ok(W1Matrix {
            env_ids: env_ids.clone(),
            values,
        })
    };
    let w1_raw = w1_of(&raw_features)?;
    let w1_aligned = w1_of(&aligned_features)?;

    if results.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    Ok(GeneralizationReport {
        results,
        matched_codeword_dims,
        mean_r_hat_train,
        w1_raw,
        w1_aligned,
        train_loss,
    })
}
