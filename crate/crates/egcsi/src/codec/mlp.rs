//! Reference dense autoencoder.
//!
//! Encoder: flatten (re/im interleaved, antenna-major) -> dense(hidden) ->
//! tanh -> dense(M) -> tanh, so codeword elements live in [-1, 1].
//! Decoder mirrors the encoder with one extra hidden refinement stage:
//! dense(hidden) -> tanh -> dense(hidden) -> tanh -> dense(2 N_T N_C) linear.
//!
//! Training minimizes the mean squared reconstruction error with the
//! quantizer inside the loop (straight-through gradients) using Adam on a
//! single execution stream, so identical seeds give identical parameter
//! trajectories bitwise.
//!
//! Model file format: magic "EGNN", u16 version, u32 n_t/n_c/hidden/m,
//! u64 seed, then all tensors as flat little-endian f64 in the fixed order
//! enc0.w, enc0.b, enc1.w, enc1.b, dec0.w, dec0.b, dec1.w, dec1.b, dec2.w,
//! dec2.b (weights row-major, shape (out, in)).

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::quant::QuantizerSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Compressor shape and identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub n_t: usize,
    pub n_c: usize,
    pub codeword_dim: usize,
    pub hidden_dim: usize,
    pub variant: CompressorVariant,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompressorVariant {
    ReferenceMlp,
    TruncationBaseline,
}

impl CompressorSpec {
    pub fn input_dim(&self) -> usize {
        2 * self.n_t * self.n_c
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t < 1 || self.n_c < 1 {
            return Err(Error::InvalidConfig("compressor dims must be >= 1".into()));
        }
        if self.codeword_dim < 1 || self.codeword_dim > self.input_dim() {
            return Err(Error::InvalidConfig(format!(
                "codeword_dim {} not in [1, {}]",
                self.codeword_dim,
                self.input_dim()
            )));
        }
        if self.hidden_dim < 1 {
            return Err(Error::InvalidConfig("hidden_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Optimizer hyperparameters. Defaults follow the usual Adam setup with
/// learning rate 1e-3 and batch 64.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 200,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || self.batch_size < 1
            || self.epochs < 1
        {
            return Err(Error::InvalidConfig(
                "training config requires positive learning rate, batch size, epochs".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    w: Array2<f64>,
    b: Array1<f64>,
}

impl Dense {
    fn glorot(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = Array2::from_shape_fn((out_dim, in_dim), |_| rng.random_range(-limit..limit));
        Dense {
            w,
            b: Array1::zeros(out_dim),
        }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }
}

fn tanh_batch(z: Array2<f64>) -> Array2<f64> {
    z.mapv(f64::tanh)
}

/// `d/dz tanh(z)` expressed via the activation output `y = tanh(z)`.
fn tanh_backward(dy: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let mut dz = dy.clone();
    dz.zip_mut_with(y, |g, &yv| *g *= 1.0 - yv * yv);
    dz
}

/// The trained (or freshly initialized) reference autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpAutoencoder {
    spec: CompressorSpec,
    enc: Vec<Dense>,
    dec: Vec<Dense>,
}

impl MlpAutoencoder {
    /// Glorot-uniform weights, zero biases, drawn from a ChaCha stream seeded
    /// by `spec.seed`.
    pub fn init(spec: &CompressorSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let (din, h, m) = (spec.input_dim(), spec.hidden_dim, spec.codeword_dim);
        let enc = vec![
            Dense::glorot(h, din, &mut rng),
            Dense::glorot(m, h, &mut rng),
        ];
        let dec = vec![
            Dense::glorot(h, m, &mut rng),
            Dense::glorot(h, h, &mut rng),
            Dense::glorot(din, h, &mut rng),
        ];
        Ok(Self {
            spec: *spec,
            enc,
            dec,
        })
    }

    pub fn spec(&self) -> &CompressorSpec {
        &self.spec
    }

    fn encode_batch(&self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let h1 = tanh_batch(self.enc[0].forward(x));
        let cw = tanh_batch(self.enc[1].forward(&h1));
        (h1, cw)
    }

    fn decode_batch(&self, cw: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let d1 = tanh_batch(self.dec[0].forward(cw));
        let d2 = tanh_batch(self.dec[1].forward(&d1));
        let out = self.dec[2].forward(&d2);
        (d1, d2, out)
    }

    /// Compress one angular-delay-domain matrix into an `M`-vector in [-1, 1].
    pub fn encode(&self, c_aln: &CMat) -> Result<Vec<f64>> {
        if c_aln.dim() != (self.spec.n_t, self.spec.n_c) {
            return Err(Error::ShapeMismatch {
                expected: (self.spec.n_t, self.spec.n_c),
                got: c_aln.dim(),
            });
        }
        let flat = linalg::flatten_complex(c_aln);
        let x = Array2::from_shape_vec((1, flat.len()), flat).expect("shape");
        let (_, cw) = self.encode_batch(&x);
        Ok(cw.row(0).to_vec())
    }

    /// Reconstruct an angular-delay-domain matrix from a codeword.
    pub fn decode(&self, codeword: &[f64]) -> Result<CMat> {
        if codeword.len() != self.spec.codeword_dim {
            return Err(Error::CodewordDimMismatch {
                expected: self.spec.codeword_dim,
                got: codeword.len(),
            });
        }
        let cw = Array2::from_shape_vec((1, codeword.len()), codeword.to_vec()).expect("shape");
        let (_, _, out) = self.decode_batch(&cw);
        linalg::unflatten_complex(&out.row(0).to_vec(), self.spec.n_t, self.spec.n_c)
    }

    fn tensors(&self) -> Vec<&Dense> {
        self.enc.iter().chain(self.dec.iter()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(b"EGNN")?;
        f.write_all(&1u16.to_le_bytes())?;
        for dim in [
            self.spec.n_t,
            self.spec.n_c,
            self.spec.hidden_dim,
            self.spec.codeword_dim,
        ] {
            f.write_all(&(dim as u32).to_le_bytes())?;
        }
        f.write_all(&self.spec.seed.to_le_bytes())?;
        for d in self.tensors() {
            for &v in d.w.iter() {
                f.write_all(&v.to_le_bytes())?;
            }
            for &v in d.b.iter() {
                f.write_all(&v.to_le_bytes())?;
            }
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)
            .map_err(|_| Error::BadModel("truncated header".into()))?;
        if &magic != b"EGNN" {
            return Err(Error::BadModel("bad magic".into()));
        }
        let mut u16b = [0u8; 2];
        f.read_exact(&mut u16b)
            .map_err(|_| Error::BadModel("truncated header".into()))?;
        let version = u16::from_le_bytes(u16b);
        if version != 1 {
            return Err(Error::BadModel(format!("unsupported version {version}")));
        }
        let read_u32 = |f: &mut dyn Read| -> Result<u32> {
            let mut b = [0u8; 4];
            f.read_exact(&mut b)
                .map_err(|_| Error::BadModel("truncated header".into()))?;
            Ok(u32::from_le_bytes(b))
        };
        let n_t = read_u32(&mut f)? as usize;
        let n_c = read_u32(&mut f)? as usize;
        let hidden = read_u32(&mut f)? as usize;
        let m = read_u32(&mut f)? as usize;
        let mut b8 = [0u8; 8];
        f.read_exact(&mut b8)
            .map_err(|_| Error::BadModel("truncated header".into()))?;
        let seed = u64::from_le_bytes(b8);
        let spec = CompressorSpec {
            n_t,
            n_c,
            codeword_dim: m,
            hidden_dim: hidden,
            variant: CompressorVariant::ReferenceMlp,
            seed,
        };
        spec.validate()
            .map_err(|e| Error::BadModel(format!("bad dims: {e}")))?;
        let mut model = MlpAutoencoder::init(&spec)?;
        let read_f64 = |f: &mut dyn Read| -> Result<f64> {
            let mut b = [0u8; 8];
            f.read_exact(&mut b)
                .map_err(|_| Error::BadModel("truncated tensor data".into()))?;
            Ok(f64::from_le_bytes(b))
        };
        for d in model.enc.iter_mut().chain(model.dec.iter_mut()) {
            for v in d.w.iter_mut() {
                *v = read_f64(&mut f)?;
            }
            for v in d.b.iter_mut() {
                *v = read_f64(&mut f)?;
            }
        }
        let mut rest = Vec::new();
        f.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::BadModel("trailing bytes".into()));
        }
        Ok(model)
    }
}

struct AdamTensor {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
}

impl AdamTensor {
    fn like(d: &Dense) -> Self {
        Self {
            m_w: Array2::zeros(d.w.dim()),
            v_w: Array2::zeros(d.w.dim()),
            m_b: Array1::zeros(d.b.dim()),
            v_b: Array1::zeros(d.b.dim()),
        }
    }

    fn step(&mut self, d: &mut Dense, gw: &Array2<f64>, gb: &Array1<f64>, lr: f64, t: i32) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let c1 = 1.0 - B1.powi(t);
        let c2 = 1.0 - B2.powi(t);
        ndarray::Zip::from(&mut d.w)
            .and(&mut self.m_w)
            .and(&mut self.v_w)
            .and(gw)
            .for_each(|w, m, v, &g| {
                *m = B1 * *m + (1.0 - B1) * g;
                *v = B2 * *v + (1.0 - B2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
            });
        ndarray::Zip::from(&mut d.b)
            .and(&mut self.m_b)
            .and(&mut self.v_b)
            .and(gb)
            .for_each(|w, m, v, &g| {
                *m = B1 * *m + (1.0 - B1) * g;
                *v = B2 * *v + (1.0 - B2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
            });
    }
}

/// Straight-through quantization of a batch of codewords: forward uses the
/// dequantized levels, backward treats the operation as identity.
fn quantize_straight_through(cw: &Array2<f64>, quant: Option<&QuantizerSpec>) -> Array2<f64> {
    match quant {
        Some(q) => cw.mapv(|x| q.dequantize_value(q.quantize_value(x))),
        None => cw.clone(),
    }
}

/// Train the reference autoencoder on flattened matrices (aligned clusters
/// for the cluster-wise variants, whole transformed channels for the vanilla
/// variant). Returns the model and the per-epoch mean-loss trace.
pub fn train_autoencoder(
    dataset: &[CMat],
    spec: &CompressorSpec,
    quant: Option<&QuantizerSpec>,
    tcfg: &TrainingConfig,
) -> Result<(MlpAutoencoder, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    tcfg.validate()?;
    let mut model = MlpAutoencoder::init(spec)?;
    let din = spec.input_dim();
    let n = dataset.len();
    let mut x_all = Array2::zeros((n, din));
    for (i, m) in dataset.iter().enumerate() {
        if m.dim() != (spec.n_t, spec.n_c) {
            return Err(Error::ShapeMismatch {
                expected: (spec.n_t, spec.n_c),
                got: m.dim(),
            });
        }
        let flat = linalg::flatten_complex(m);
        for (j, v) in flat.into_iter().enumerate() {
            x_all[(i, j)] = v;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut adam: Vec<AdamTensor> = model
        .enc
        .iter()
        .chain(model.dec.iter())
        .map(AdamTensor::like)
        .collect();
    let mut step = 0i32;
    let mut trace = Vec::with_capacity(tcfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();

    for _epoch in 0..tcfg.epochs {
        // Fisher-Yates on the sample order, one stream for the whole run.
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut loss_sum = 0.0;
        for batch in order.chunks(tcfg.batch_size) {
            let bs = batch.len();
            let mut x = Array2::zeros((bs, din));
            for (row, &idx) in batch.iter().enumerate() {
                x.row_mut(row).assign(&x_all.row(idx));
            }

            // Forward.
            let (h1, cw_pre) = model.encode_batch(&x);
            let cw = quantize_straight_through(&cw_pre, quant);
            let (d1, d2, out) = model.decode_batch(&cw);

            let diff = &out - &x;
            loss_sum += diff.iter().map(|v| v * v).sum::<f64>();

            // Backward; loss is the batch mean of per-sample squared error.
            let dout = diff.mapv(|v| 2.0 * v / bs as f64);
            let gw4 = dout.t().dot(&d2);
            let gb4 = dout.sum_axis(Axis(0));
            let dd2 = dout.dot(&model.dec[2].w);
            let dz2 = tanh_backward(&dd2, &d2);
            let gw3 = dz2.t().dot(&d1);
            let gb3 = dz2.sum_axis(Axis(0));
            let dd1 = dz2.dot(&model.dec[1].w);
            let dz1 = tanh_backward(&dd1, &d1);
            let gw2 = dz1.t().dot(&cw);
            let gb2 = dz1.sum_axis(Axis(0));
            // Straight-through: the quantizer is identity in the backward pass.
            let dcw = dz1.dot(&model.dec[0].w);
            let dze1 = tanh_backward(&dcw, &cw_pre);
            let gw1 = dze1.t().dot(&h1);
            let gb1 = dze1.sum_axis(Axis(0));
            let dh1 = dze1.dot(&model.enc[1].w);
            let dze0 = tanh_backward(&dh1, &h1);
            let gw0 = dze0.t().dot(&x);
            let gb0 = dze0.sum_axis(Axis(0));

            step += 1;
            let lr = tcfg.learning_rate;
            adam[0].step(&mut model.enc[0], &gw0, &gb0, lr, step);
            adam[1].step(&mut model.enc[1], &gw1, &gb1, lr, step);
            adam[2].step(&mut model.dec[0], &gw2, &gb2, lr, step);
            adam[3].step(&mut model.dec[1], &gw3, &gb3, lr, step);
            adam[4].step(&mut model.dec[2], &gw4, &gb4, lr, step);
        }
        let epoch_loss = loss_sum / n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "training diverged (non-finite loss {epoch_loss})"
            )));
        }
        trace.push(epoch_loss);
    }
    Ok((model, trace))
}

/// Dataset-level reconstruction quality in dB:
/// `10 log10( sum ‖x_hat - x‖^2 / sum ‖x‖^2 )` through the codec chain.
pub fn dataset_nmse_db(
    model: &MlpAutoencoder,
    dataset: &[CMat],
    quant: Option<&QuantizerSpec>,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut err = 0.0;
    let mut sig = 0.0;
    for m in dataset {
        let cw = model.encode(m)?;
        let cw = match quant {
            Some(q) => q.dequantize(&q.quantize(&cw)),
            None => cw,
        };
        let rec = model.decode(&cw)?;
        err += linalg::frob_sq(&(&rec - m));
        sig += linalg::frob_sq(m);
    }
    Ok(10.0 * (err / sig).log10())
}
