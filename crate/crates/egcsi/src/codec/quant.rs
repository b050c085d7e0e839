//! Uniform mid-rise codeword quantization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform mid-rise quantizer over a fixed clip range ([-1, 1] by default,
/// which the encoder's output squashing guarantees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub q_f: u8,
    pub clip: (f64, f64),
}

impl QuantizerSpec {
    pub fn new(q_f: u8) -> Result<Self> {
        if !(1..=32).contains(&q_f) {
            return Err(Error::InvalidConfig(format!("q_f {q_f} not in [1, 32]")));
        }
        Ok(Self {
            q_f,
            clip: (-1.0, 1.0),
        })
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.q_f
    }

    pub fn step(&self) -> f64 {
        (self.clip.1 - self.clip.0) / self.levels() as f64
    }

    /// Level index of one value; inputs outside the clip range saturate.
    pub fn quantize_value(&self, x: f64) -> u64 {
        let idx = ((x - self.clip.0) / self.step()).floor();
        (idx.max(0.0) as u64).min(self.levels() - 1)
    }

    /// Center of one level.
    pub fn dequantize_value(&self, level: u64) -> f64 {
        self.clip.0 + (level.min(self.levels() - 1) as f64 + 0.5) * self.step()
    }

    pub fn quantize(&self, values: &[f64]) -> Vec<u64> {
        values.iter().map(|&x| self.quantize_value(x)).collect()
    }

    pub fn dequantize(&self, levels: &[u64]) -> Vec<f64> {
        levels.iter().map(|&l| self.dequantize_value(l)).collect()
    }
}

/// How codeword elements cross the feedback link: quantized to `q_f`-bit
/// levels, or raw IEEE-754 bit patterns (quantization disabled, 64 bits each).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CodewordCoding {
    Quantized(QuantizerSpec),
    Raw,
}

impl CodewordCoding {
    pub fn bits_per_element(&self) -> usize {
        match self {
            CodewordCoding::Quantized(q) => q.q_f as usize,
            CodewordCoding::Raw => 64,
        }
    }

    /// Encode codeword values into per-element link words.
    pub fn encode(&self, values: &[f64]) -> Vec<u64> {
        match self {
            CodewordCoding::Quantized(q) => q.quantize(values),
            CodewordCoding::Raw => values.iter().map(|v| v.to_bits()).collect(),
        }
    }

    /// Decode link words back into codeword values.
    pub fn decode(&self, words: &[u64]) -> Vec<f64> {
        match self {
            CodewordCoding::Quantized(q) => q.dequantize(words),
            CodewordCoding::Raw => words.iter().map(|&w| f64::from_bits(w)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_q6() {
        let q = QuantizerSpec::new(6).unwrap();
        assert_eq!(q.quantize_value(-1.0), 0);
        assert_eq!(q.quantize_value(1.0), 63);
        assert_eq!(q.levels(), 64);
        assert!((q.step() - 2.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn q_f_bounds() {
        assert!(QuantizerSpec::new(0).is_err());
        assert!(QuantizerSpec::new(33).is_err());
        assert!(QuantizerSpec::new(1).is_ok());
    }

    #[test]
    fn raw_coding_roundtrips_exactly() {
        let values = [0.123456789, -0.9999, 1.5, -2.25, 0.0];
        let c = CodewordCoding::Raw;
        assert_eq!(c.decode(&c.encode(&values)), values.to_vec());
        assert_eq!(c.bits_per_element(), 64);
    }

    proptest! {
        #[test]
        fn roundtrip_error_within_half_step(x in -1.0f64..=1.0) {
            let q = QuantizerSpec::new(6).unwrap();
            let back = q.dequantize_value(q.quantize_value(x));
            prop_assert!((back - x).abs() <= q.step() / 2.0 + 1e-15);
        }

        #[test]
        fn quantizer_is_monotone(a in -1.2f64..=1.2, b in -1.2f64..=1.2) {
            let q = QuantizerSpec::new(4).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(q.quantize_value(lo) <= q.quantize_value(hi));
        }
    }
}
