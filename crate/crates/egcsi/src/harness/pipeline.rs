//! End-to-end feedback pipelines.
//!
//! `eg-csinet`: decouple -> align -> encode -> quantize -> pack, then
//! parse -> decode -> unalign -> sum. `eg-without-mcd` skips decoupling and
//! treats the whole channel as one cluster (alignment still applied).
//! `vanilla-ae` compresses the whole angular-delay channel with no metadata.
//! `truncation-baseline` is the eg chain with the learning-free codec.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::align::Aligner;
use crate::align::CodebookConfig;
use crate::channel::{AngularDelayTransform, ArrayGeometry, ChannelSample};
use crate::codec::{
    pack_frame, parse_frame, reconstruct_channel, ClusterPayload, Codec, CodewordCoding,
    FeedbackFrame, FrameLayout, SideInfo,
};
use crate::decouple::{estimate_rank_hybrid, svd_decouple};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::metrics::{nmse, DbValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    EgCsinet,
    EgWithoutMcd,
    VanillaAe,
    TruncationBaseline,
}

impl VariantKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VariantKind::EgCsinet => "eg-csinet",
            VariantKind::EgWithoutMcd => "eg-without-mcd",
            VariantKind::VanillaAe => "vanilla-ae",
            VariantKind::TruncationBaseline => "truncation-baseline",
        }
    }
}

/// Everything a pipeline needs besides the (possibly trained) codec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineVariant {
    pub kind: VariantKind,
    pub codebook: CodebookConfig,
    pub coding: CodewordCoding,
    pub eta: f64,
    pub r_max: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub micros: u128,
}

/// Per-sample execution record.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stages: Vec<StageTiming>,
    pub r_hat: usize,
    pub total_bits: usize,
    pub nmse: DbValue,
    pub nmde: Option<DbValue>,
}

impl StageRecord {
    pub fn stage_names(&self) -> Vec<&'static str> {
        self.stages.iter().map(|s| s.stage).collect()
    }
}

/// Output of one pipeline run: the frame (when the variant emits one), the
/// reconstruction, and the stage record.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub frame: Option<FeedbackFrame>,
    pub frame_bytes: Option<Vec<u8>>,
    pub h_hat: CMat,
    pub record: StageRecord,
}

pub struct Pipeline {
    variant: PipelineVariant,
    geom: ArrayGeometry,
    aligner: Aligner,
    transform: AngularDelayTransform,
    codec: Codec,
    layout: FrameLayout,
}

struct StageClock {
    stages: Vec<StageTiming>,
}

impl StageClock {
    fn new() -> Self {
        Self { stages: Vec::new() }
    }

    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.stages.push(StageTiming {
            stage,
            micros: start.elapsed().as_micros(),
        });
        Ok(out)
    }
}

impl Pipeline {
    pub fn new(variant: PipelineVariant, geom: &ArrayGeometry, codec: Codec) -> Result<Self> {
        if !(variant.eta > 0.0 && variant.eta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta {} not in (0, 1]",
                variant.eta
            )));
        }
        let layout = FrameLayout::new(
            geom,
            &variant.codebook,
            &variant.coding,
            codec.codeword_dim(),
            variant.r_max,
        )?;
        Ok(Self {
            variant,
            geom: *geom,
            aligner: Aligner::new(geom, &variant.codebook)?,
            transform: AngularDelayTransform::new(geom),
            codec,
            layout,
        })
    }

    pub fn variant(&self) -> &PipelineVariant {
        &self.variant
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn codec(&self) -> &Codec {
        &self.codec
    }

    pub fn aligner(&self) -> &Aligner {
        &self.aligner
    }

    /// Execute the variant chain on one sample. NMSE in the record is against
    /// the sample's own matrix; callers comparing against a different
    /// reference (e.g. the clean channel under estimation noise) can rescore
    /// `h_hat` themselves.
    pub fn run(&self, sample: &ChannelSample) -> Result<PipelineRun> {
        match self.variant.kind {
            VariantKind::VanillaAe => self.run_vanilla(sample),
            _ => self.run_clustered(sample),
        }
    }

    fn run_clustered(&self, sample: &ChannelSample) -> Result<PipelineRun> {
        let mut clock = StageClock::new();
        let h = &sample.h;

        let clusters = match self.variant.kind {
            VariantKind::EgWithoutMcd => vec![h.clone()],
            _ => clock.run("decouple", || {
                let est = estimate_rank_hybrid(h, self.variant.eta, self.variant.r_max)?;
                Ok(svd_decouple(h, est.r_final)?
                    .iter()
                    .map(|c| c.matrix())
                    .collect::<Vec<_>>())
            })?,
        };
        let r_hat = clusters.len();

        let truncation_sum = reconstruct_channel(&clusters)?;
        let nmde_val = nmse(&truncation_sum, h)?;

        let aligned = clock.run("align", || {
            clusters
                .iter()
                .map(|c| self.aligner.align(c))
                .collect::<Result<Vec<_>>>()
        })?;

        let encoded = clock.run("encode", || {
            aligned
                .iter()
                .map(|a| self.codec.encode(&a.c_aln))
                .collect::<Result<Vec<_>>>()
        })?;

        let words = clock.run("quantize", || {
            Ok(encoded
                .iter()
                .map(|(cw, _)| self.variant.coding.encode(cw))
                .collect::<Vec<_>>())
        })?;

        let frame = FeedbackFrame {
            r_hat,
            clusters: aligned
                .iter()
                .zip(words.iter())
                .map(|(a, w)| ClusterPayload {
                    meta: a.meta,
                    codeword: w.clone(),
                })
                .collect(),
        };
        let bytes = clock.run("pack", || pack_frame(&frame, &self.layout))?;

        // Receiver side.
        let parsed = clock.run("parse", || parse_frame(&bytes, &self.layout))?;
        let sides: Vec<&SideInfo> = encoded.iter().map(|(_, s)| s).collect();
        let decoded = clock.run("decode", || {
            parsed
                .clusters
                .iter()
                .zip(sides.iter())
                .map(|(cl, side)| {
                    let values = self.variant.coding.decode(&cl.codeword);
                    self.codec.decode(&values, side)
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let recovered = clock.run("unalign", || {
            decoded
                .iter()
                .zip(parsed.clusters.iter())
                .map(|(c_aln, cl)| self.aligner.unalign(c_aln, &cl.meta))
                .collect::<Result<Vec<_>>>()
        })?;

        let h_hat = clock.run("reconstruct", || reconstruct_channel(&recovered))?;
        let nmse_val = nmse(&h_hat, h)?;
        let total_bits = self.layout.total_bits(r_hat);

        Ok(PipelineRun {
            frame: Some(parsed),
            frame_bytes: Some(bytes),
            h_hat,
            record: StageRecord {
                stages: clock.stages,
                r_hat,
                total_bits,
                nmse: nmse_val,
                nmde: Some(nmde_val),
            },
        })
    }

    fn run_vanilla(&self, sample: &ChannelSample) -> Result<PipelineRun> {
        let mut clock = StageClock::new();
        let h = &sample.h;
        if h.dim() != (self.geom.n_t(), self.geom.n_c()) {
            return Err(Error::ShapeMismatch {
                expected: (self.geom.n_t(), self.geom.n_c()),
                got: h.dim(),
            });
        }
        let ht = clock.run("transform", || self.transform.forward(h))?;
        let (cw, side) = clock.run("encode", || self.codec.encode(&ht))?;
        let words = clock.run("quantize", || Ok(self.variant.coding.encode(&cw)))?;
        let decoded = clock.run("decode", || {
            let values = self.variant.coding.decode(&words);
            self.codec.decode(&values, &side)
        })?;
        let h_hat = clock.run("inverse-transform", || self.transform.inverse(&decoded))?;
        let nmse_val = nmse(&h_hat, h)?;
        // No metadata and no rank field: codeword bits only.
        let total_bits = self.codec.codeword_dim() * self.variant.coding.bits_per_element();
        Ok(PipelineRun {
            frame: None,
            frame_bytes: None,
            h_hat,
            record: StageRecord {
                stages: clock.stages,
                r_hat: 1,
                total_bits,
                nmse: nmse_val,
                nmde: None,
            },
        })
    }
}

/// Build the training inputs a variant's compressor sees: aligned clusters
/// for `eg-csinet`/`truncation-baseline`, the aligned whole channel for
/// `eg-without-mcd`, the plain angular-delay channel for `vanilla-ae`.
pub fn build_training_set(
    kind: VariantKind,
    samples: &[ChannelSample],
    geom: &ArrayGeometry,
    codebook: &CodebookConfig,
    eta: f64,
    r_max: usize,
) -> Result<Vec<CMat>> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let aligner = Aligner::new(geom, codebook)?;
    let transform = AngularDelayTransform::new(geom);
    let mut out = Vec::new();
    for s in samples {
        match kind {
            VariantKind::VanillaAe => out.push(transform.forward(&s.h)?),
            VariantKind::EgWithoutMcd => out.push(aligner.align(&s.h)?.c_aln),
            VariantKind::EgCsinet | VariantKind::TruncationBaseline => {
                let est = estimate_rank_hybrid(&s.h, eta, r_max)?;
                for c in svd_decouple(&s.h, est.r_final)? {
                    out.push(aligner.align(&c.matrix())?.c_aln);
                }
            }
        }
    }
    Ok(out)
}
