//! Bit-exact uplink feedback framing.
//!
//! Layout (MSB-first within the stream):
//!   - `q_R = ceil(log2(R_max))` bits: `R_hat - 1` (the rank floor guarantees
//!     `R_hat >= 1`, so `R_max` values fit exactly).
//!   - per cluster: `Q_p` bits for the phase index `t`, then
//!     `ceil(log2(O_a N_T O_d N_C))` bits for the joint peak index
//!     `((n1 * O_v N_v + n2) * O_d N_C + m)`, then `M` codeword elements of
//!     `bits_per_element` bits each (level indices, or raw f64 bit patterns
//!     when quantization is disabled).
//!
//! Trailing bits of the last byte are zero padding.

use crate::align::{AlignmentMetadata, CodebookConfig};
use crate::channel::ArrayGeometry;
use crate::codec::quant::CodewordCoding;
use crate::error::{Error, Result};
use crate::linalg::ceil_log2;

/// Derived bit-field widths for one pipeline configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub q_r: usize,
    pub q_p: u8,
    pub joint_bits: usize,
    pub bits_per_element: usize,
    pub codeword_dim: usize,
    pub r_max: usize,
    pub angular_h_size: u32,
    pub angular_v_size: u32,
    pub delay_size: u32,
}

impl FrameLayout {
    pub fn new(
        geom: &ArrayGeometry,
        cb: &CodebookConfig,
        coding: &CodewordCoding,
        codeword_dim: usize,
        r_max: usize,
    ) -> Result<Self> {
        cb.validate()?;
        if r_max < 1 {
            return Err(Error::InvalidConfig("r_max must be >= 1".into()));
        }
        if codeword_dim < 1 {
            return Err(Error::InvalidConfig("codeword_dim must be >= 1".into()));
        }
        let angular_h_size = (cb.o_h * geom.n_h()) as u32;
        let angular_v_size = (cb.o_v * geom.n_v()) as u32;
        let delay_size = (cb.o_d * geom.n_c()) as u32;
        let combos = angular_h_size as usize * angular_v_size as usize * delay_size as usize;
        Ok(Self {
            q_r: ceil_log2(r_max),
            q_p: cb.q_p,
            joint_bits: ceil_log2(combos),
            bits_per_element: coding.bits_per_element(),
            codeword_dim,
            r_max,
            angular_h_size,
            angular_v_size,
            delay_size,
        })
    }

    /// Metadata bits per cluster: `q_m = Q_p + ceil(log2(O_a N_T O_d N_C))`.
    pub fn q_m(&self) -> usize {
        self.q_p as usize + self.joint_bits
    }

    /// Codeword bits per cluster: `q_f = M * bits_per_element`.
    pub fn q_f_total(&self) -> usize {
        self.codeword_dim * self.bits_per_element
    }

    pub fn cluster_bits(&self) -> usize {
        self.q_m() + self.q_f_total()
    }

    pub fn total_bits(&self, r_hat: usize) -> usize {
        self.q_r + r_hat * self.cluster_bits()
    }

    fn joint_index(&self, meta: &AlignmentMetadata) -> Result<u64> {
        if meta.n1 >= self.angular_h_size
            || meta.n2 >= self.angular_v_size
            || meta.m >= self.delay_size
            || u64::from(meta.t) >= (1u64 << self.q_p)
        {
            return Err(Error::MetadataOutOfRange(format!("{meta:?}")));
        }
        Ok(
            (u64::from(meta.n1) * u64::from(self.angular_v_size) + u64::from(meta.n2))
                * u64::from(self.delay_size)
                + u64::from(meta.m),
        )
    }

    fn split_joint(&self, joint: u64) -> Result<(u32, u32, u32)> {
        let m = (joint % u64::from(self.delay_size)) as u32;
        let rest = joint / u64::from(self.delay_size);
        let n2 = (rest % u64::from(self.angular_v_size)) as u32;
        let n1 = (rest / u64::from(self.angular_v_size)) as u32;
        if n1 >= self.angular_h_size {
            return Err(Error::MetadataOutOfRange(format!("joint index {joint}")));
        }
        Ok((n1, n2, m))
    }
}

/// Payload of one decoupled cluster inside a frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPayload {
    pub meta: AlignmentMetadata,
    /// Link words: quantizer level indices, or raw f64 bits.
    pub codeword: Vec<u64>,
}

/// The structured uplink payload for one channel instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackFrame {
    pub r_hat: usize,
    pub clusters: Vec<ClusterPayload>,
}

impl FeedbackFrame {
    pub fn total_bits(&self, layout: &FrameLayout) -> usize {
        layout.total_bits(self.r_hat)
    }
}

struct BitWriter {
    buf: Vec<u8>,
    used: usize,
}

impl BitWriter {
    fn new() -> Self {
        Self {
            buf: Vec::new(),
            used: 0,
        }
    }

    fn push(&mut self, value: u64, bits: usize) {
        debug_assert!(bits <= 64);
        for i in (0..bits).rev() {
            let bit = (value >> i) & 1;
            if self.used.is_multiple_of(8) {
                self.buf.push(0);
            }
            let byte = self.buf.last_mut().unwrap();
            *byte |= (bit as u8) << (7 - self.used % 8);
            self.used += 1;
        }
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn read(&mut self, bits: usize) -> Result<u64> {
        debug_assert!(bits <= 64);
        if self.pos + bits > self.data.len() * 8 {
            return Err(Error::FrameUnderflow);
        }
        let mut out = 0u64;
        for _ in 0..bits {
            let byte = self.data[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            out = (out << 1) | u64::from(bit);
            self.pos += 1;
        }
        Ok(out)
    }
}

/// Serialize a frame. The final byte is zero-padded; the exact bit count is
/// `layout.total_bits(frame.r_hat)`.
pub fn pack_frame(frame: &FeedbackFrame, layout: &FrameLayout) -> Result<Vec<u8>> {
    if frame.r_hat == 0 {
        return Err(Error::InvalidConfig("frame with zero clusters".into()));
    }
    if frame.r_hat > layout.r_max {
        return Err(Error::TooManyClusters {
            r_hat: frame.r_hat,
            r_max: layout.r_max,
        });
    }
    if frame.clusters.len() != frame.r_hat {
        return Err(Error::InvalidConfig(format!(
            "frame says {} clusters but carries {}",
            frame.r_hat,
            frame.clusters.len()
        )));
    }
    let mut w = BitWriter::new();
    w.push((frame.r_hat - 1) as u64, layout.q_r);
    for cl in &frame.clusters {
        if cl.codeword.len() != layout.codeword_dim {
            return Err(Error::CodewordDimMismatch {
                expected: layout.codeword_dim,
                got: cl.codeword.len(),
            });
        }
        let joint = layout.joint_index(&cl.meta)?;
        w.push(u64::from(cl.meta.t), layout.q_p as usize);
        w.push(joint, layout.joint_bits);
        for &word in &cl.codeword {
            if layout.bits_per_element < 64 && word >= (1u64 << layout.bits_per_element) {
                return Err(Error::InvalidConfig(format!(
                    "codeword element {word} exceeds {} bits",
                    layout.bits_per_element
                )));
            }
            w.push(word, layout.bits_per_element);
        }
    }
    Ok(w.buf)
}

/// Parse a frame; exact inverse of [`pack_frame`].
pub fn parse_frame(bytes: &[u8], layout: &FrameLayout) -> Result<FeedbackFrame> {
    let mut r = BitReader::new(bytes);
    let r_hat = r.read(layout.q_r)? as usize + 1;
    if r_hat > layout.r_max {
        return Err(Error::TooManyClusters {
            r_hat,
            r_max: layout.r_max,
        });
    }
    let mut clusters = Vec::with_capacity(r_hat);
    for _ in 0..r_hat {
        let t = r.read(layout.q_p as usize)? as u32;
        let joint = r.read(layout.joint_bits)?;
        let (n1, n2, m) = layout.split_joint(joint)?;
        let mut codeword = Vec::with_capacity(layout.codeword_dim);
        for _ in 0..layout.codeword_dim {
            codeword.push(r.read(layout.bits_per_element)?);
        }
        clusters.push(ClusterPayload {
            meta: AlignmentMetadata { n1, n2, m, t },
            codeword,
        });
    }
    Ok(FeedbackFrame { r_hat, clusters })
}

/// Per-environment feedback accounting plus the compressed-dimension ratio
/// bound: under equal overhead, a whole-channel autoencoder needs a codeword
/// `q_R/(M Q_f) + E{R}(1 + q_m/(M Q_f))` times larger, which always exceeds
/// the mean cluster count.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OverheadReport {
    pub per_sample_bits: Vec<usize>,
    pub mean_bits: f64,
    pub mean_r_hat: f64,
    pub q_r: usize,
    pub q_m: usize,
    pub codeword_bits: usize,
    pub dim_ratio: f64,
    pub ratio_exceeds_mean_r: bool,
}

pub fn overhead_report(r_hats: &[usize], layout: &FrameLayout) -> OverheadReport {
    let per_sample_bits: Vec<usize> = r_hats.iter().map(|&r| layout.total_bits(r)).collect();
    let n = r_hats.len().max(1) as f64;
    let mean_bits = per_sample_bits.iter().sum::<usize>() as f64 / n;
    let mean_r_hat = r_hats.iter().sum::<usize>() as f64 / n;
    let qf = layout.q_f_total() as f64;
    let dim_ratio = layout.q_r as f64 / qf + mean_r_hat * (1.0 + layout.q_m() as f64 / qf);
    OverheadReport {
        per_sample_bits,
        mean_bits,
        mean_r_hat,
        q_r: layout.q_r,
        q_m: layout.q_m(),
        codeword_bits: layout.q_f_total(),
        dim_ratio,
        ratio_exceeds_mean_r: dim_ratio > mean_r_hat,
    }
}
