//! Learning-free truncation compressor: keep the `M/2` largest-magnitude
//! angular-delay coefficients (ties broken toward the lower flat index),
//! store their re/im parts, scatter back on decode. With `M = 2 N_T N_C`
//! this is the identity compressor.

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationCodec {
    pub n_t: usize,
    pub n_c: usize,
    pub m: usize,
}

impl TruncationCodec {
    pub fn new(n_t: usize, n_c: usize, m: usize) -> Result<Self> {
        if !m.is_multiple_of(2) || m == 0 {
            return Err(Error::InvalidConfig(format!(
                "truncation codeword length {m} must be even and positive"
            )));
        }
        if m > 2 * n_t * n_c {
            return Err(Error::InvalidConfig(format!(
                "codeword length {m} exceeds 2*N_T*N_C = {}",
                2 * n_t * n_c
            )));
        }
        Ok(Self { n_t, n_c, m })
    }

    /// Codeword of kept re/im pairs (in ascending flat-index order) plus the
    /// kept support, which the decoder needs as side information.
    pub fn encode(&self, c_aln: &CMat) -> Result<(Vec<f64>, Vec<u32>)> {
        if c_aln.dim() != (self.n_t, self.n_c) {
            return Err(Error::ShapeMismatch {
                expected: (self.n_t, self.n_c),
                got: c_aln.dim(),
            });
        }
        let keep = self.m / 2;
        let mut idx: Vec<usize> = (0..c_aln.len()).collect();
        let flat: Vec<C64> = c_aln.iter().copied().collect();
        idx.sort_by(|&a, &b| {
            flat[b]
                .norm_sqr()
                .partial_cmp(&flat[a].norm_sqr())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut support: Vec<u32> = idx[..keep].iter().map(|&i| i as u32).collect();
        support.sort_unstable();
        let mut codeword = Vec::with_capacity(self.m);
        for &i in &support {
            codeword.push(flat[i as usize].re);
            codeword.push(flat[i as usize].im);
        }
        Ok((codeword, support))
    }

    pub fn decode(&self, codeword: &[f64], support: &[u32]) -> Result<CMat> {
        if codeword.len() != self.m || support.len() != self.m / 2 {
            return Err(Error::CodewordDimMismatch {
                expected: self.m,
                got: codeword.len(),
            });
        }
        let mut out = CMat::zeros((self.n_t, self.n_c));
        for (slot, &i) in support.iter().enumerate() {
            let i = i as usize;
            if i >= out.len() {
                return Err(Error::MetadataOutOfRange(format!("support index {i}")));
            }
            let (r, c) = (i / self.n_c, i % self.n_c);
            out[(r, c)] = C64::new(codeword[2 * slot], codeword[2 * slot + 1]);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, frob_sq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random(nr: usize, nc: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_shape_fn((nr, nc), |_| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    fn sparse_input_roundtrips_exactly() {
        let codec = TruncationCodec::new(4, 8, 6).unwrap();
        let mut c = CMat::zeros((4, 8));
        c[(0, 1)] = C64::new(1.0, -2.0);
        c[(3, 7)] = C64::new(0.5, 0.25);
        let (cw, support) = codec.encode(&c).unwrap();
        let rec = codec.decode(&cw, &support).unwrap();
        assert!(frob(&(&rec - &c)) < 1e-15);
    }

    #[test]
    fn error_equals_dropped_energy_and_is_monotone_in_m() {
        let c = random(4, 8, 3);
        let mut prev_err = f64::INFINITY;
        for m in [2usize, 8, 16, 32, 64] {
            let codec = TruncationCodec::new(4, 8, m).unwrap();
            let (cw, support) = codec.encode(&c).unwrap();
            let rec = codec.decode(&cw, &support).unwrap();
            let err = frob_sq(&(&rec - &c));
            let dropped: f64 = c
                .iter()
                .enumerate()
                .filter(|(i, _)| !support.contains(&(*i as u32)))
                .map(|(_, z)| z.norm_sqr())
                .sum();
            assert!((err - dropped).abs() < 1e-12 * frob_sq(&c).max(1.0));
            assert!(err <= prev_err + 1e-12);
            prev_err = err;
        }
        // Full budget is the identity.
        let codec = TruncationCodec::new(4, 8, 64).unwrap();
        let (cw, support) = codec.encode(&c).unwrap();
        assert!(frob(&(&codec.decode(&cw, &support).unwrap() - &c)) < 1e-15);
    }

    #[test]
    fn rejects_bad_budgets() {
        assert!(TruncationCodec::new(4, 8, 65).is_err());
        assert!(TruncationCodec::new(4, 8, 3).is_err());
        assert!(TruncationCodec::new(4, 8, 0).is_err());
    }
}
