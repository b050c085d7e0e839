//! Noise and overhead sweeps.
//!
//! The noise sweep tracks, per SNR point, the mean estimated cluster count
//! under the MDL-only, threshold-only, and hybrid criteria (each floored at
//! one and clipped to `r_max`, the values a frame would carry), the mean NMDE
//! of the corresponding truncations against the clean channel, and the
//! end-to-end NMSE of the full pipeline run with a lossless codec chain
//! (full-budget truncation codec, raw codewords), so the noise and rank
//! effects are not masked by compression loss.
//!
//! The overhead sweep varies the truncation codeword dimension and reports
//! mean bits, NMSE, and the compressed-dimension ratio bound. Truncation
//! codewords are raw angular-delay coefficients, so the quantizer clip range
//! is widened to their worst-case magnitude `sqrt(N_T N_C)` (samples are
//! normalized to that Frobenius norm).

use serde::Serialize;

use crate::channel::{add_estimation_noise, sample_environment, ChannelSample, EnvironmentConfig};
use crate::codec::{overhead_report, Codec, CodewordCoding, QuantizerSpec, TruncationCodec};
use crate::decouple::{estimate_rank_mdl, estimate_rank_threshold, svd_decouple};
use crate::error::Result;
use crate::harness::config::{PipelineParams, SweepFileConfig};
use crate::harness::pipeline::{Pipeline, PipelineVariant, VariantKind};
use crate::linalg::{self, CMat};
use crate::metrics::{nmse, DbValue};

#[derive(Debug, Clone, Serialize)]
pub struct NoiseSweepPoint {
    pub snr_db: f64,
    pub mean_r_mdl: f64,
    pub mean_r_threshold: f64,
    pub mean_r_hybrid: f64,
    pub mean_nmde_mdl: DbValue,
    pub mean_nmde_threshold: DbValue,
    pub mean_nmde_hybrid: DbValue,
    pub mean_nmse: DbValue,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseSweepReport {
    pub samples: usize,
    pub points: Vec<NoiseSweepPoint>,
}

fn truncation_nmde(clean: &CMat, noisy: &CMat, r: usize) -> Result<f64> {
    let mut sum = CMat::zeros(clean.dim());
    for c in svd_decouple(noisy, r)? {
        sum = &sum + &c.matrix();
    }
    Ok(nmse(&sum, clean)?.linear)
}

pub fn run_noise_sweep(cfg: &SweepFileConfig) -> Result<NoiseSweepReport> {
    let geom = cfg.geometry.build()?;
    let params: &PipelineParams = &cfg.pipeline;
    let clean = sample_environment(&cfg.environment, cfg.samples, &geom)?;
    let codec = Codec::Truncation(TruncationCodec::new(
        geom.n_t(),
        geom.n_c(),
        2 * geom.n_t() * geom.n_c(),
    )?);
    let pipeline = Pipeline::new(
        PipelineVariant {
            kind: VariantKind::EgCsinet,
            codebook: params.codebook,
            coding: CodewordCoding::Raw,
            eta: params.eta,
            r_max: params.r_max,
        },
        &geom,
        codec,
    )?;

    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for (snr_idx, &snr) in cfg.snr_db.iter().enumerate() {
        let mut r_mdl_acc = 0.0;
        let mut r_thr_acc = 0.0;
        let mut r_hyb_acc = 0.0;
        let mut nmde_mdl = 0.0;
        let mut nmde_thr = 0.0;
        let mut nmde_hyb = 0.0;
        let mut nmse_acc = 0.0;
        for (i, s) in clean.iter().enumerate() {
            let noise_seed = cfg
                .seed
                .wrapping_add((snr_idx as u64) << 32)
                .wrapping_add(i as u64);
            let noisy = add_estimation_noise(&s.h, snr, noise_seed);
            let svals = linalg::singular_values(&noisy)?;
            let r_mdl = estimate_rank_mdl(&svals, geom.n_t(), geom.n_c())?.clamp(1, params.r_max);
            let r_thr = estimate_rank_threshold(&svals, params.eta)?.clamp(1, params.r_max);
            let r_hyb = r_mdl.min(r_thr);
            r_mdl_acc += r_mdl as f64;
            r_thr_acc += r_thr as f64;
            r_hyb_acc += r_hyb as f64;
            nmde_mdl += truncation_nmde(&s.h, &noisy, r_mdl)?;
            nmde_thr += truncation_nmde(&s.h, &noisy, r_thr)?;
            nmde_hyb += truncation_nmde(&s.h, &noisy, r_hyb)?;
            // End-to-end with the lossless codec, scored against the clean H.
            let run = pipeline.run(&ChannelSample {
                h: noisy,
                env_id: s.env_id.clone(),
                paths: None,
            })?;
            nmse_acc += nmse(&run.h_hat, &s.h)?.linear;
        }
        let n = clean.len() as f64;
        points.push(NoiseSweepPoint {
            snr_db: snr,
            mean_r_mdl: r_mdl_acc / n,
            mean_r_threshold: r_thr_acc / n,
            mean_r_hybrid: r_hyb_acc / n,
            mean_nmde_mdl: DbValue::from_linear(nmde_mdl / n),
            mean_nmde_threshold: DbValue::from_linear(nmde_thr / n),
            mean_nmde_hybrid: DbValue::from_linear(nmde_hyb / n),
            mean_nmse: DbValue::from_linear(nmse_acc / n),
        });
    }
    Ok(NoiseSweepReport {
        samples: cfg.samples,
        points,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OverheadSweepPoint {
    pub m: usize,
    pub mean_bits: f64,
    pub mean_r_hat: f64,
    pub mean_nmse: DbValue,
    pub dim_ratio: f64,
    pub ratio_exceeds_mean_r: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverheadSweepReport {
    pub samples: usize,
    pub points: Vec<OverheadSweepPoint>,
}

pub fn run_overhead_sweep(cfg: &SweepFileConfig) -> Result<OverheadSweepReport> {
    let geom = cfg.geometry.build()?;
    let params = &cfg.pipeline;
    let samples = sample_environment(&cfg.environment, cfg.samples, &geom)?;
    let coding = widen_clip_for_truncation(params.coding()?, &geom);
    let mut points = Vec::with_capacity(cfg.m_values.len());
    for &m in &cfg.m_values {
        let codec = Codec::Truncation(TruncationCodec::new(geom.n_t(), geom.n_c(), m)?);
        let pipeline = Pipeline::new(
            PipelineVariant {
                kind: VariantKind::TruncationBaseline,
                codebook: params.codebook,
                coding,
                eta: params.eta,
                r_max: params.r_max,
            },
            &geom,
            codec,
        )?;
        let mut nmse_acc = 0.0;
        let mut r_hats = Vec::with_capacity(samples.len());
        for s in &samples {
            let run = pipeline.run(s)?;
            nmse_acc += run.record.nmse.linear;
            r_hats.push(run.record.r_hat);
        }
        let rep = overhead_report(&r_hats, pipeline.layout());
        points.push(OverheadSweepPoint {
            m,
            mean_bits: rep.mean_bits,
            mean_r_hat: rep.mean_r_hat,
            mean_nmse: DbValue::from_linear(nmse_acc / samples.len() as f64),
            dim_ratio: rep.dim_ratio,
            ratio_exceeds_mean_r: rep.ratio_exceeds_mean_r,
        });
    }
    Ok(OverheadSweepReport {
        samples: cfg.samples,
        points,
    })
}

/// Quantizer range for raw truncation codewords: aligned-cluster
/// coefficients of a normalized sample are bounded by `sqrt(N_T N_C)`.
pub fn widen_clip_for_truncation(
    coding: CodewordCoding,
    geom: &crate::channel::ArrayGeometry,
) -> CodewordCoding {
    match coding {
        CodewordCoding::Quantized(q) => {
            let bound = ((geom.n_t() * geom.n_c()) as f64).sqrt();
            CodewordCoding::Quantized(QuantizerSpec {
                clip: (-bound, bound),
                ..q
            })
        }
        CodewordCoding::Raw => CodewordCoding::Raw,
    }
}

/// Mean-rank diagnostics used by tests: runs the three criteria on one
/// environment at one SNR without the pipeline.
pub fn mean_ranks_at_snr(
    env: &EnvironmentConfig,
    geom: &crate::channel::ArrayGeometry,
    n_samples: usize,
    snr_db: f64,
    eta: f64,
    r_max: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    if r_max < 1 {
        return Err(crate::error::Error::InvalidConfig(
            "r_max must be >= 1".into(),
        ));
    }
    let clean = sample_environment(env, n_samples, geom)?;
    let mut acc = (0.0, 0.0, 0.0);
    for (i, s) in clean.iter().enumerate() {
        let noisy = add_estimation_noise(&s.h, snr_db, seed.wrapping_add(i as u64));
        let svals = linalg::singular_values(&noisy)?;
        let r1 = estimate_rank_mdl(&svals, geom.n_t(), geom.n_c())?.clamp(1, r_max);
        let r2 = estimate_rank_threshold(&svals, eta)?.clamp(1, r_max);
        acc.0 += r1 as f64;
        acc.1 += r2 as f64;
        acc.2 += r1.min(r2) as f64;
    }
    let n = n_samples as f64;
    Ok((acc.0 / n, acc.1 / n, acc.2 / n))
}
