//! Evaluation metrics: NMSE, NMDE, UB-NPAE with greedy/exhaustive path
//! association, and a sliced empirical Wasserstein-1 diagnostic for
//! distribution alignment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::channel::{synthesize_channel, ArrayGeometry, PathComponent};
use crate::decouple::DecoupledCluster;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// An error ratio kept in the linear domain, with dB derived. An exact-zero
/// error serializes as `db: null` (the -inf sentinel) rather than a floating
/// -inf; the linear value always travels alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DbValue {
    pub linear: f64,
    pub db: Option<f64>,
}

impl DbValue {
    pub fn from_linear(linear: f64) -> Self {
        Self {
            linear,
            db: if linear > 0.0 {
                Some(10.0 * linear.log10())
            } else {
                None
            },
        }
    }

    /// dB with the sentinel mapped to `f64::NEG_INFINITY` for comparisons.
    pub fn db_or_neg_inf(&self) -> f64 {
        self.db.unwrap_or(f64::NEG_INFINITY)
    }
}

/// `10 log10(‖h_hat - h‖_F^2 / ‖h‖_F^2)`.
pub fn nmse(h_hat: &CMat, h: &CMat) -> Result<DbValue> {
    if h_hat.dim() != h.dim() {
        return Err(Error::ShapeMismatch {
            expected: h.dim(),
            got: h_hat.dim(),
        });
    }
    let denom = linalg::frob_sq(h);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(DbValue::from_linear(linalg::frob_sq(&(h_hat - h)) / denom))
}

/// Normalized missed detection error: the energy the rank truncation left
/// behind, `10 log10(‖h - Σ C_l‖_F^2 / ‖h‖_F^2)`.
pub fn nmde(h: &CMat, clusters: &[DecoupledCluster]) -> Result<DbValue> {
    if clusters.is_empty() {
        return Err(Error::EmptyClusters);
    }
    let denom = linalg::frob_sq(h);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let mut sum = CMat::zeros(h.dim());
    for c in clusters {
        sum = &sum + &c.matrix();
    }
    Ok(DbValue::from_linear(linalg::frob_sq(&(h - &sum)) / denom))
}

/// How path-to-cluster assignment is searched in [`ub_npae`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationMode {
    /// Each path goes to the cluster with the largest |<A, C_l>| correlation
    /// (or to none when every correlation is zero). Upper-bounds the
    /// exhaustive value.
    Greedy,
    /// Minimum over all (R+1)^P assignments; only allowed for P <= 8 paths.
    Exhaustive,
}

/// Upper bound of the normalized physical-association error: best grouping of
/// ground-truth per-path responses against the decoupled clusters,
/// `10 log10( Σ_l ‖C_l - Σ_{assigned} A‖_F^2 / ‖H‖_F^2 )`. Paths may stay
/// unassigned.
pub fn ub_npae(
    h: &CMat,
    clusters: &[DecoupledCluster],
    paths: &[PathComponent],
    geom: &ArrayGeometry,
    mode: AssociationMode,
) -> Result<DbValue> {
    if paths.is_empty() {
        return Err(Error::MissingPathTable);
    }
    if clusters.is_empty() {
        return Err(Error::EmptyClusters);
    }
    let denom = linalg::frob_sq(h);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let r = clusters.len();
    let p = paths.len();
    let c_mats: Vec<CMat> = clusters.iter().map(|c| c.matrix()).collect();
    let a_mats: Vec<CMat> = paths
        .iter()
        .map(|path| synthesize_channel(geom, std::slice::from_ref(path)))
        .collect::<Result<_>>()?;

    // Gram precomputation: every assignment cost is then O(R + P^2).
    let cc: Vec<f64> = c_mats.iter().map(linalg::frob_sq).collect();
    let cross: Vec<Vec<C64>> = c_mats
        .iter()
        .map(|c| a_mats.iter().map(|a| linalg::inner(c, a)).collect())
        .collect();
    let gram: Vec<Vec<C64>> = a_mats
        .iter()
        .map(|ai| a_mats.iter().map(|aj| linalg::inner(ai, aj)).collect())
        .collect();

    // assign[i] in 0..=r, 0 = unassigned.
    let cost = |assign: &[usize]| -> f64 {
        let mut total = 0.0;
        for l in 0..r {
            let mut c = cc[l];
            let mut quad = C64::new(0.0, 0.0);
            for i in 0..p {
                if assign[i] != l + 1 {
                    continue;
                }
                c -= 2.0 * cross[l][i].re;
                for j in 0..p {
                    if assign[j] == l + 1 {
                        quad += gram[i][j];
                    }
                }
            }
            total += c + quad.re;
        }
        total
    };

    let best = match mode {
        AssociationMode::Greedy => {
            let assign: Vec<usize> = (0..p)
                .map(|i| {
                    let mut best_l = 0usize;
                    let mut best_corr = 0.0f64;
                    for (l, row) in cross.iter().enumerate() {
                        let corr = row[i].norm();
                        if corr > best_corr {
                            best_corr = corr;
                            best_l = l + 1;
                        }
                    }
                    best_l
                })
                .collect();
            cost(&assign)
        }
        AssociationMode::Exhaustive => {
            if p > 8 {
                return Err(Error::InvalidConfig(format!(
                    "exhaustive association limited to 8 paths, got {p}"
                )));
            }
            let mut assign = vec![0usize; p];
            let mut best = f64::INFINITY;
            let total = (r + 1).pow(p as u32);
            for code in 0..total {
                let mut c = code;
                for slot in assign.iter_mut() {
                    *slot = c % (r + 1);
                    c /= r + 1;
                }
                let v = cost(&assign);
                if v < best {
                    best = v;
                }
            }
            best
        }
    };
    // Clamp float cancellation noise: the cost is a sum of squared norms.
    Ok(DbValue::from_linear(best.max(0.0) / denom))
}

/// Sliced empirical Wasserstein-1 distance between two sample sets of equal
/// feature dimension: mean over seeded random unit projections of the 1-D
/// sorted-sample W1, truncated to the common count. Symmetric in (a, b).
pub fn wasserstein1_marginal(
    samples_a: &[Vec<f64>],
    samples_b: &[Vec<f64>],
    projections: usize,
    seed: u64,
) -> Result<f64> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if projections == 0 {
        return Err(Error::InvalidConfig("projections must be >= 1".into()));
    }
    let dim = samples_a[0].len();
    if samples_a
        .iter()
        .chain(samples_b.iter())
        .any(|s| s.len() != dim)
    {
        return Err(Error::InvalidConfig(
            "samples must share one feature dimension".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = samples_a.len().min(samples_b.len());
    let mut acc = 0.0;
    for _ in 0..projections {
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut dir {
                *v /= norm;
            }
        }
        let project = |set: &[Vec<f64>]| -> Vec<f64> {
            let mut p: Vec<f64> = set
                .iter()
                .map(|s| s.iter().zip(&dir).map(|(x, d)| x * d).sum())
                .collect();
            p.sort_by(f64::total_cmp);
            p
        };
        let pa = project(samples_a);
        let pb = project(samples_b);
        let w1: f64 = (0..n).map(|i| (pa[i] - pb[i]).abs()).sum::<f64>() / n as f64;
        acc += w1;
    }
    Ok(acc / projections as f64)
}

/// Angular-delay feature vectors for the W1 diagnostic.
pub fn w1_features(mats: &[CMat]) -> Vec<Vec<f64>> {
    mats.iter().map(linalg::flatten_complex).collect()
}

/// Per-sample metric row of a report.
#[derive(Debug, Clone, Serialize)]
pub struct SampleMetrics {
    pub index: usize,
    pub r_hat: usize,
    pub bits: usize,
    pub nmse: DbValue,
    pub nmde: Option<DbValue>,
    pub ub_npae: Option<DbValue>,
}

/// Aggregates are means of the linear ratios, reported in dB.
#[derive(Debug, Clone, Serialize)]
pub struct MetricAggregate {
    pub mean_nmse: DbValue,
    pub mean_nmde: Option<DbValue>,
    pub mean_ub_npae: Option<DbValue>,
    pub mean_bits: f64,
    pub mean_r_hat: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub per_sample: Vec<SampleMetrics>,
    pub aggregate: MetricAggregate,
}

impl MetricReport {
    pub fn from_samples(per_sample: Vec<SampleMetrics>) -> Self {
        let n = per_sample.len().max(1) as f64;
        let mean_lin = |f: &dyn Fn(&SampleMetrics) -> Option<f64>| -> Option<f64> {
            let vals: Vec<f64> = per_sample.iter().filter_map(f).collect();
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        };
        let aggregate = MetricAggregate {
            mean_nmse: DbValue::from_linear(
                per_sample.iter().map(|s| s.nmse.linear).sum::<f64>() / n,
            ),
            mean_nmde: mean_lin(&|s| s.nmde.map(|v| v.linear)).map(DbValue::from_linear),
            mean_ub_npae: mean_lin(&|s| s.ub_npae.map(|v| v.linear)).map(DbValue::from_linear),
            mean_bits: per_sample.iter().map(|s| s.bits as f64).sum::<f64>() / n,
            mean_r_hat: per_sample.iter().map(|s| s.r_hat as f64).sum::<f64>() / n,
            samples: per_sample.len(),
        };
        Self {
            per_sample,
            aggregate,
        }
    }

    /// CSV rows: one per sample, dB columns empty for the -inf sentinel,
    /// linear values always present.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "index,r_hat,bits,nmse_linear,nmse_db,nmde_linear,nmde_db,ub_npae_linear,ub_npae_db\n",
        );
        let db_cell = |v: &DbValue| v.db.map(|d| format!("{d}")).unwrap_or_default();
        let opt_cells = |v: &Option<DbValue>| match v {
            Some(v) => (format!("{}", v.linear), db_cell(v)),
            None => (String::new(), String::new()),
        };
        for s in &self.per_sample {
            let (nmde_lin, nmde_db) = opt_cells(&s.nmde);
            let (ub_lin, ub_db) = opt_cells(&s.ub_npae);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                s.index,
                s.r_hat,
                s.bits,
                s.nmse.linear,
                db_cell(&s.nmse),
                nmde_lin,
                nmde_db,
                ub_lin,
                ub_db,
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metric report serializes")
    }
}
