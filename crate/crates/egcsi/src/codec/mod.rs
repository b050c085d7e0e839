//! Pluggable compression of aligned clusters, codeword quantization, and
//! bit-exact feedback framing.

pub mod baseline;
pub mod frame;
pub mod mlp;
pub mod quant;

pub use baseline::TruncationCodec;
pub use frame::{
    overhead_report, pack_frame, parse_frame, ClusterPayload, FeedbackFrame, FrameLayout,
    OverheadReport,
};
pub use mlp::{
    dataset_nmse_db, train_autoencoder, CompressorSpec, CompressorVariant, MlpAutoencoder,
    TrainingConfig,
};
pub use quant::{CodewordCoding, QuantizerSpec};

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Decoder side information that does not travel in the frame. The reference
/// MLP needs none; the truncation baseline needs its kept support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SideInfo {
    None,
    Support(Vec<u32>),
}

/// A compressor behind one interface so pipelines can swap the learned model
/// for the learning-free baseline.
#[derive(Debug, Clone)]
pub enum Codec {
    Mlp(MlpAutoencoder),
    Truncation(TruncationCodec),
}

impl Codec {
    pub fn codeword_dim(&self) -> usize {
        match self {
            Codec::Mlp(m) => m.spec().codeword_dim,
            Codec::Truncation(t) => t.m,
        }
    }

    pub fn encode(&self, c_aln: &CMat) -> Result<(Vec<f64>, SideInfo)> {
        match self {
            Codec::Mlp(m) => Ok((m.encode(c_aln)?, SideInfo::None)),
            Codec::Truncation(t) => {
                let (cw, support) = t.encode(c_aln)?;
                Ok((cw, SideInfo::Support(support)))
            }
        }
    }

    pub fn decode(&self, codeword: &[f64], side: &SideInfo) -> Result<CMat> {
        match (self, side) {
            (Codec::Mlp(m), _) => m.decode(codeword),
            (Codec::Truncation(t), SideInfo::Support(s)) => t.decode(codeword, s),
            (Codec::Truncation(_), SideInfo::None) => Err(Error::InvalidConfig(
                "truncation codec needs support side information".into(),
            )),
        }
    }
}

/// Sum recovered spatial-frequency-domain cluster components into the
/// reconstructed channel.
pub fn reconstruct_channel(clusters: &[CMat]) -> Result<CMat> {
    let first = clusters.first().ok_or(Error::EmptyClusters)?;
    let mut out = first.clone();
    for c in &clusters[1..] {
        if c.dim() != out.dim() {
            return Err(Error::ShapeMismatch {
                expected: out.dim(),
                got: c.dim(),
            });
        }
        out = &out + c;
    }
    Ok(out)
}
