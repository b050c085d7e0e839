//! SVD-based multi-cluster decoupling and rank selection.
//!
//! A channel that is a sum of near-rank-1, mutually dual-orthogonal cluster
//! responses is optimally split into rank-1 terms by its truncated SVD (the
//! Eckart-Young-Mirsky optimum). The number of terms to keep is estimated by
//! a hybrid of an MDL criterion (robust to estimation noise) and an energy
//! threshold (clips weak clusters at high SNR), floored at one so a feedback
//! frame is always emitted.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

/// One rank-1 decoupled cluster `sigma * u * v^H`.
///
/// Phase convention: the largest-magnitude entry of `u` is real nonnegative
/// (ties broken toward the lowest index), which makes the factorization of a
/// given matrix bitwise deterministic while leaving the product unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledCluster {
    pub sigma: f64,
    pub u: CVec,
    pub v: CVec,
}

impl DecoupledCluster {
    /// Materialize `sigma * u * v^H`.
    pub fn matrix(&self) -> CMat {
        let mut m = CMat::zeros((self.u.len(), self.v.len()));
        for (i, &ui) in self.u.iter().enumerate() {
            let row = ui * self.sigma;
            for (j, &vj) in self.v.iter().enumerate() {
                m[(i, j)] = row * vj.conj();
            }
        }
        m
    }
}

/// Outcome of the hybrid rank estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct RankEstimate {
    pub r_mdl: usize,
    pub r_threshold: usize,
    pub r_final: usize,
    pub r_max: usize,
}

/// Leading `r` SVD triplets of `h`, ordered by descending singular value.
/// Their sum is the best rank-`r` Frobenius approximation of `h`.
pub fn svd_decouple(h: &CMat, r: usize) -> Result<Vec<DecoupledCluster>> {
    let max = h.nrows().min(h.ncols());
    if r < 1 || r > max {
        return Err(Error::RankOutOfRange { r, max });
    }
    let f = linalg::svd(h)?;
    let mut out = Vec::with_capacity(r);
    for l in 0..r {
        let u: CVec = f.u.column(l).to_owned();
        let v: CVec = f.vh.row(l).mapv(|z| z.conj());
        out.push(canonicalize(f.s[l], u, v));
    }
    Ok(out)
}

/// Rotate the pair phase so that the largest-magnitude entry of `u` is real
/// and nonnegative. `sigma u v^H` is invariant under this rotation.
fn canonicalize(sigma: f64, u: CVec, v: CVec) -> DecoupledCluster {
    let mut arg = 0usize;
    let mut best = -1.0f64;
    for (i, z) in u.iter().enumerate() {
        let n = z.norm_sqr();
        if n > best {
            best = n;
            arg = i;
        }
    }
    let pivot = u[arg];
    if pivot.norm() == 0.0 {
        return DecoupledCluster { sigma, u, v };
    }
    let rot = pivot.conj() / pivot.norm();
    DecoupledCluster {
        sigma,
        u: u.mapv(|z| z * rot),
        v: v.mapv(|z| z * rot),
    }
}

/// MDL model-order estimate from descending singular values.
///
/// Score for hypothesis `r`:
/// `-2 N_C (p - r) log(geo-mean / arith-mean of trailing sigma^2) + r (2p - r) log(N_C)`
/// with `p = min(n_t, n_c)`. Squared values are floored at `1e-12 * max` so
/// noise-free inputs stay finite; an all-floored tail scores a sphericity of
/// exactly zero.
pub fn estimate_rank_mdl(singular_values: &[f64], n_t: usize, n_c: usize) -> Result<usize> {
    if singular_values.is_empty() {
        return Err(Error::EmptySingularValues);
    }
    let p = n_t.min(n_c);
    if singular_values.len() != p {
        return Err(Error::InvalidConfig(format!(
            "expected {p} singular values, got {}",
            singular_values.len()
        )));
    }
    let mut s2: Vec<f64> = singular_values.iter().map(|s| s * s).collect();
    let max = s2.iter().fold(0.0f64, |a, &b| a.max(b));
    if max == 0.0 {
        return Ok(0);
    }
    let floor = 1e-12 * max;
    for v in &mut s2 {
        if *v < floor {
            *v = floor;
        }
    }
    let ln_nc = (n_c as f64).ln();
    let mut best_r = 0usize;
    let mut best = f64::INFINITY;
    for r in 0..p {
        let tail = &s2[r..];
        let q = tail.len() as f64;
        let all_floored = tail.iter().all(|&v| v <= floor);
        let sphericity = if all_floored {
            0.0
        } else {
            let mean_log = tail.iter().map(|v| v.ln()).sum::<f64>() / q;
            let log_mean = (tail.iter().sum::<f64>() / q).ln();
            -2.0 * n_c as f64 * q * (mean_log - log_mean)
        };
        let penalty = (r * (2 * p - r)) as f64 * ln_nc;
        let score = sphericity + penalty;
        if score < best {
            best = score;
            best_r = r;
        }
    }
    Ok(best_r)
}

/// Smallest `r` whose leading energy reaches the fraction `eta` of the total.
/// Values below the `1e-12 * max` relative floor count as zero, so `eta = 1`
/// returns the numerical rank.
pub fn estimate_rank_threshold(singular_values: &[f64], eta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidConfig(format!("eta {eta} not in (0, 1]")));
    }
    if singular_values.is_empty() {
        return Err(Error::EmptySingularValues);
    }
    let max = singular_values.iter().fold(0.0f64, |a, &b| a.max(b * b));
    if max == 0.0 {
        return Err(Error::EmptySingularValues);
    }
    let floor = 1e-12 * max;
    let s2: Vec<f64> = singular_values
        .iter()
        .map(|s| {
            let v = s * s;
            if v < floor {
                0.0
            } else {
                v
            }
        })
        .collect();
    let total: f64 = s2.iter().sum();
    let target = eta * total;
    let mut cum = 0.0;
    for (i, &v) in s2.iter().enumerate() {
        cum += v;
        if cum >= target {
            return Ok(i + 1);
        }
    }
    Ok(s2.iter().filter(|&&v| v > 0.0).count())
}

/// Hybrid rank estimate `min(MDL, threshold, r_max)` floored at 1.
pub fn estimate_rank_hybrid(h_estimated: &CMat, eta: f64, r_max: usize) -> Result<RankEstimate> {
    if r_max < 1 {
        return Err(Error::InvalidConfig("r_max must be >= 1".into()));
    }
    if linalg::frob(h_estimated) == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let s = linalg::singular_values(h_estimated)?;
    let r_mdl = estimate_rank_mdl(&s, h_estimated.nrows(), h_estimated.ncols())?;
    let r_threshold = estimate_rank_threshold(&s, eta)?;
    let r_final = r_mdl.min(r_threshold).min(r_max).max(1);
    Ok(RankEstimate {
        r_mdl,
        r_threshold,
        r_final,
        r_max,
    })
}

/// Rank-one dominance `xi = sigma_1^2 / ‖H‖_F^2` of a cluster response.
pub fn concentration(h_cluster: &CMat) -> Result<f64> {
    let total = linalg::frob_sq(h_cluster);
    if total == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let s = linalg::singular_values(h_cluster)?;
    Ok((s[0] * s[0] / total).min(1.0))
}

/// Normalized row/column orthogonality of two cluster components inside a
/// channel, in dB (20 log10 of the Frobenius-norm ratio):
/// `eta_r = ‖C_a^H C_b‖ / ‖H^H H‖`, `eta_c = ‖C_a C_b^H‖ / ‖H H^H‖`.
pub fn orthogonality_metrics(h_full: &CMat, c_a: &CMat, c_b: &CMat) -> Result<(f64, f64)> {
    for c in [c_a, c_b] {
        if c.dim() != h_full.dim() {
            return Err(Error::ShapeMismatch {
                expected: h_full.dim(),
                got: c.dim(),
            });
        }
    }
    if linalg::frob(h_full) == 0.0 {
        return Err(Error::ZeroReference);
    }
    let ah = linalg::adjoint(c_a);
    let hh = linalg::adjoint(h_full);
    let eta_r = linalg::frob(&ah.dot(c_b)) / linalg::frob(&hh.dot(h_full));
    let eta_c = linalg::frob(&c_a.dot(&linalg::adjoint(c_b))) / linalg::frob(&h_full.dot(&hh));
    Ok((20.0 * eta_r.log10(), 20.0 * eta_c.log10()))
}
