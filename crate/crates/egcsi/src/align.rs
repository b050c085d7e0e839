//! Fine-grained per-cluster alignment.
//!
//! Oversampled DFT codebooks locate a cluster's angular and delay peaks on a
//! fine grid; a unimodular phase-adjustment matrix shifts that peak to grid
//! origin, and the quantized peak phase removes the common complex-gain bias.
//! Because every operation is a unitary transform or an elementwise product by
//! unit-modulus factors, alignment is an isometry and, given the metadata, is
//! exactly invertible.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{AngularDelayTransform, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};

/// Oversampling factors of the angular/delay codebooks and the peak-phase
/// quantizer resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookConfig {
    pub o_h: usize,
    pub o_v: usize,
    pub o_d: usize,
    pub q_p: u8,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self {
            o_h: 2,
            o_v: 2,
            o_d: 2,
            q_p: 2,
        }
    }
}

impl CodebookConfig {
    pub fn validate(&self) -> Result<()> {
        if self.o_h < 1 || self.o_v < 1 || self.o_d < 1 {
            return Err(Error::InvalidConfig(
                "oversampling factors must be >= 1".into(),
            ));
        }
        if self.q_p < 1 {
            return Err(Error::InvalidConfig("q_p must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-cluster side information fed back next to the codeword: fine-grid peak
/// indices and the quantized peak-phase index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentMetadata {
    pub n1: u32,
    pub n2: u32,
    pub m: u32,
    pub t: u32,
}

/// An aligned cluster in the angular-delay domain plus its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedCluster {
    pub c_aln: CMat,
    pub meta: AlignmentMetadata,
}

/// Precomputed oversampled codebooks for one geometry/config pair.
///
/// Horizontal codewords `w_h[n1][k] = exp(j 2π n1 k / (O_h N_h))`, vertical
/// and delay analogous; the full angular codeword is `w_h ⊗ w_v`. Codewords
/// obey the group law `w_a ⊙ w_b = w_{(a+b) mod size}`, which is what makes
/// peak relocation by elementwise products exact.
#[derive(Debug, Clone)]
pub struct Codebooks {
    geom: ArrayGeometry,
    cfg: CodebookConfig,
    horizontal: Vec<CVec>,
    vertical: Vec<CVec>,
    delay: Vec<CVec>,
    phases: Vec<f64>,
}

fn dft_codewords(size: usize, len: usize) -> Vec<CVec> {
    (0..size)
        .map(|n| {
            (0..len)
                .map(|k| C64::cis(2.0 * PI * (n * k) as f64 / size as f64))
                .collect()
        })
        .collect()
}

impl Codebooks {
    pub fn new(geom: &ArrayGeometry, cfg: &CodebookConfig) -> Result<Self> {
        cfg.validate()?;
        let phases = (0..(1u32 << cfg.q_p))
            .map(|t| 2.0 * PI * t as f64 / (1u64 << cfg.q_p) as f64)
            .collect();
        Ok(Self {
            geom: *geom,
            cfg: *cfg,
            horizontal: dft_codewords(cfg.o_h * geom.n_h(), geom.n_h()),
            vertical: dft_codewords(cfg.o_v * geom.n_v(), geom.n_v()),
            delay: dft_codewords(cfg.o_d * geom.n_c(), geom.n_c()),
            phases,
        })
    }

    pub fn geom(&self) -> &ArrayGeometry {
        &self.geom
    }
    pub fn config(&self) -> &CodebookConfig {
        &self.cfg
    }
    pub fn angular_h_size(&self) -> usize {
        self.horizontal.len()
    }
    pub fn angular_v_size(&self) -> usize {
        self.vertical.len()
    }
    pub fn delay_size(&self) -> usize {
        self.delay.len()
    }
    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }

    /// Quantizer codeword `beta_t = 2π t / 2^{q_p}`.
    pub fn phase(&self, t: u32) -> Result<f64> {
        self.phases
            .get(t as usize)
            .copied()
            .ok_or_else(|| Error::MetadataOutOfRange(format!("t={t}")))
    }

    /// Full angular codeword `w_h[n1] ⊗ w_v[n2]`, length `N_T`.
    pub fn angular_codeword(&self, n1: u32, n2: u32) -> Result<CVec> {
        let wh = self
            .horizontal
            .get(n1 as usize)
            .ok_or_else(|| Error::MetadataOutOfRange(format!("n1={n1}")))?;
        let wv = self
            .vertical
            .get(n2 as usize)
            .ok_or_else(|| Error::MetadataOutOfRange(format!("n2={n2}")))?;
        Ok(linalg::kron_vec(wh, wv))
    }

    pub fn delay_codeword(&self, m: u32) -> Result<&CVec> {
        self.delay
            .get(m as usize)
            .ok_or_else(|| Error::MetadataOutOfRange(format!("m={m}")))
    }

    fn check_meta(&self, meta: &AlignmentMetadata) -> Result<()> {
        if meta.n1 as usize >= self.angular_h_size()
            || meta.n2 as usize >= self.angular_v_size()
            || meta.m as usize >= self.delay_size()
            || meta.t as usize >= self.phase_count()
        {
            return Err(Error::MetadataOutOfRange(format!("{meta:?}")));
        }
        Ok(())
    }
}

/// Build the oversampled angular/delay/phase codebooks.
pub fn build_codebooks(geom: &ArrayGeometry, cfg: &CodebookConfig) -> Result<Codebooks> {
    Codebooks::new(geom, cfg)
}

/// Exhaustive fine-grid angular peak search: argmax over `(n1, n2)` of
/// `‖w^H C‖_2^2`, ties broken toward the smallest `n1`, then `n2`.
/// `c` is a spatial-frequency-domain cluster matrix.
pub fn search_angular_peak(c: &CMat, codebooks: &Codebooks) -> Result<(u32, u32)> {
    if linalg::frob(c) == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let n_v = codebooks.geom.n_v();
    let n_c = codebooks.geom.n_c();
    let mut best = -1.0f64;
    let mut arg = (0u32, 0u32);
    for (n1, wh) in codebooks.horizontal.iter().enumerate() {
        for (n2, wv) in codebooks.vertical.iter().enumerate() {
            // score = sum_k |sum_n conj(w[n]) C[n,k]|^2 with w = wh ⊗ wv.
            let mut score = 0.0;
            for k in 0..n_c {
                let mut acc = C64::new(0.0, 0.0);
                for (i1, &whv) in wh.iter().enumerate() {
                    for (i2, &wvv) in wv.iter().enumerate() {
                        acc += (whv * wvv).conj() * c[(i1 * n_v + i2, k)];
                    }
                }
                score += acc.norm_sqr();
            }
            if score > best {
                best = score;
                arg = (n1 as u32, n2 as u32);
            }
        }
    }
    Ok(arg)
}

/// Fine-grid delay peak search: argmax over `m` of `‖C w_m‖_2^2`, ties toward
/// the smallest `m`.
pub fn search_delay_peak(c: &CMat, codebooks: &Codebooks) -> Result<u32> {
    if linalg::frob(c) == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let mut best = -1.0f64;
    let mut arg = 0u32;
    for (m, wd) in codebooks.delay.iter().enumerate() {
        let mut score = 0.0;
        for row in c.rows() {
            let acc: C64 = row.iter().zip(wd.iter()).map(|(&cv, &wv)| cv * wv).sum();
            score += acc.norm_sqr();
        }
        if score > best {
            best = score;
            arg = m as u32;
        }
    }
    Ok(arg)
}

/// Phase adjustment matrix `S = conj(w_a(n1,n2)) ⊗ w_d(m)^T`; all entries are
/// unit modulus.
pub fn phase_adjustment_matrix(meta: &AlignmentMetadata, codebooks: &Codebooks) -> Result<CMat> {
    codebooks.check_meta(meta)?;
    let wa = codebooks.angular_codeword(meta.n1, meta.n2)?;
    let wd = codebooks.delay_codeword(meta.m)?;
    let mut s = CMat::zeros((wa.len(), wd.len()));
    for (n, &a) in wa.iter().enumerate() {
        for (k, &d) in wd.iter().enumerate() {
            s[(n, k)] = a.conj() * d;
        }
    }
    Ok(s)
}

/// Nearest uniform phase codeword index by circular distance, ties toward the
/// smaller index.
pub fn quantize_peak_phase(p: C64, q_p: u8) -> Result<u32> {
    if p.norm() == 0.0 {
        return Err(Error::ZeroPeak);
    }
    let levels = 1u32 << q_p;
    let angle = p.arg();
    let mut best = f64::INFINITY;
    let mut arg = 0u32;
    for t in 0..levels {
        let beta = 2.0 * PI * t as f64 / levels as f64;
        let mut d = (angle - beta).rem_euclid(2.0 * PI);
        if d > PI {
            d = 2.0 * PI - d;
        }
        if d < best {
            best = d;
            arg = t;
        }
    }
    Ok(arg)
}

/// Alignment engine: codebooks plus the angular-delay transform.
#[derive(Debug, Clone)]
pub struct Aligner {
    codebooks: Codebooks,
    transform: AngularDelayTransform,
}

impl Aligner {
    pub fn new(geom: &ArrayGeometry, cfg: &CodebookConfig) -> Result<Self> {
        Ok(Self {
            codebooks: Codebooks::new(geom, cfg)?,
            transform: AngularDelayTransform::new(geom),
        })
    }

    pub fn codebooks(&self) -> &Codebooks {
        &self.codebooks
    }

    pub fn transform(&self) -> &AngularDelayTransform {
        &self.transform
    }

    /// Align one spatial-frequency-domain cluster:
    /// peak searches, peak value `p = w_a^H C w_d`, phase quantization, then
    /// `C_aln~ = F_a (e^{-j beta_t} S ⊙ C) F_d^H`.
    pub fn align(&self, c: &CMat) -> Result<AlignedCluster> {
        let (n1, n2) = search_angular_peak(c, &self.codebooks)?;
        let m = search_delay_peak(c, &self.codebooks)?;
        let wa = self.codebooks.angular_codeword(n1, n2)?;
        let wd = self.codebooks.delay_codeword(m)?;
        let mut p = C64::new(0.0, 0.0);
        for (n, &a) in wa.iter().enumerate() {
            let mut row = C64::new(0.0, 0.0);
            for (k, &d) in wd.iter().enumerate() {
                row += c[(n, k)] * d;
            }
            p += a.conj() * row;
        }
        let t = quantize_peak_phase(p, self.codebooks.cfg.q_p)?;
        let meta = AlignmentMetadata { n1, n2, m, t };
        let s = phase_adjustment_matrix(&meta, &self.codebooks)?;
        let rot = C64::cis(-self.codebooks.phase(t)?);
        let adjusted = CMat::from_shape_fn(c.dim(), |(i, j)| rot * s[(i, j)] * c[(i, j)]);
        Ok(AlignedCluster {
            c_aln: self.transform.forward(&adjusted)?,
            meta,
        })
    }

    /// Exact inverse of [`Aligner::align`] for matching metadata:
    /// `C = conj(e^{-j beta_t} S) ⊙ (F_a^H C_aln~ F_d)`.
    pub fn unalign(&self, c_aln: &CMat, meta: &AlignmentMetadata) -> Result<CMat> {
        self.codebooks.check_meta(meta)?;
        let s = phase_adjustment_matrix(meta, &self.codebooks)?;
        let rot = C64::cis(-self.codebooks.phase(meta.t)?);
        let spatial = self.transform.inverse(c_aln)?;
        Ok(CMat::from_shape_fn(spatial.dim(), |(i, j)| {
            (rot * s[(i, j)]).conj() * spatial[(i, j)]
        }))
    }
}

/// One-shot alignment; callers processing many clusters should hold an
/// [`Aligner`].
pub fn align_cluster(
    c: &CMat,
    geom: &ArrayGeometry,
    cfg: &CodebookConfig,
) -> Result<AlignedCluster> {
    Aligner::new(geom, cfg)?.align(c)
}

/// One-shot inverse alignment.
pub fn unalign_cluster(
    c_aln: &CMat,
    meta: &AlignmentMetadata,
    geom: &ArrayGeometry,
    cfg: &CodebookConfig,
) -> Result<CMat> {
    Aligner::new(geom, cfg)?.unalign(c_aln, meta)
}
