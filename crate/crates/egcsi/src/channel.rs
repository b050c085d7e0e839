//! Cluster-based massive-MIMO channel synthesis and analysis.
//!
//! A channel sample is a complex `N_T x N_C` matrix over (antenna, subcarrier).
//! Antennas form a half-wavelength UPA with `N_T = N_h * N_v`; the linear
//! antenna index `n` maps to `(n1, n2) = (n / N_v, n % N_v)` and steering
//! vectors factor as `a = a_h ⊗ a_v`. The angular-delay representation is
//! `H~ = (F_h ⊗ F_v) H F_d^H` with unitary DFT factors, so single clusters
//! concentrate around one grid point up to Dirichlet-kernel leakage driven by
//! the off-grid residues of their paths.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, frob, CMat, CVec, C64};

/// UPA + OFDM dimensioning. Subcarrier spacing is derived (`bandwidth / n_c`)
/// so `spacing * n_c == bandwidth` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_h: usize,
    n_v: usize,
    n_c: usize,
    bandwidth_hz: f64,
}

impl ArrayGeometry {
    pub fn new(n_h: usize, n_v: usize, n_c: usize, bandwidth_hz: f64) -> Result<Self> {
        if n_h < 1 || n_v < 1 || n_c < 1 {
            return Err(Error::InvalidGeometry(format!(
                "antenna/subcarrier counts must be >= 1 (n_h={n_h}, n_v={n_v}, n_c={n_c})"
            )));
        }
        if bandwidth_hz.is_nan() || bandwidth_hz <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "bandwidth must be positive, got {bandwidth_hz}"
            )));
        }
        Ok(Self {
            n_h,
            n_v,
            n_c,
            bandwidth_hz,
        })
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }
    pub fn n_v(&self) -> usize {
        self.n_v
    }
    pub fn n_c(&self) -> usize {
        self.n_c
    }
    pub fn n_t(&self) -> usize {
        self.n_h * self.n_v
    }
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.n_c as f64
    }
}

/// One physical propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: C64,
    pub aaod_rad: f64,
    pub eaod_rad: f64,
    pub delay_s: f64,
    pub cluster_id: u32,
}

/// Cluster-level generator parameters: a center in (azimuth, elevation, delay)
/// plus Gaussian intra-cluster spreads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub center_aaod_rad: f64,
    pub center_eaod_rad: f64,
    pub center_delay_s: f64,
    pub aod_spread_rad: f64,
    pub delay_spread_s: f64,
    pub n_paths: usize,
    pub power: f64,
}

impl ClusterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(Error::InvalidConfig("cluster needs n_paths >= 1".into()));
        }
        if self.aod_spread_rad < 0.0 || self.delay_spread_s < 0.0 {
            return Err(Error::InvalidConfig("spreads must be >= 0".into()));
        }
        if self.power.is_nan() || self.power <= 0.0 {
            return Err(Error::InvalidConfig("cluster power must be > 0".into()));
        }
        Ok(())
    }

    /// Draw the path table: Gaussian angle/delay offsets around the center,
    /// per-path gains circular complex Gaussian with total power `power`.
    pub fn sample_paths<R: Rng>(&self, cluster_id: u32, rng: &mut R) -> Vec<PathComponent> {
        let gain_scale = (self.power / self.n_paths as f64).sqrt() / std::f64::consts::SQRT_2;
        (0..self.n_paths)
            .map(|_| {
                let z = |rng: &mut R| -> f64 { rng.sample(StandardNormal) };
                let aaod = wrap_pi(self.center_aaod_rad + self.aod_spread_rad * z(rng));
                let eaod = (self.center_eaod_rad + self.aod_spread_rad * z(rng)).clamp(0.0, PI);
                let delay = (self.center_delay_s + self.delay_spread_s * z(rng)).max(0.0);
                let gain = C64::new(z(rng), z(rng)) * gain_scale;
                PathComponent {
                    gain,
                    aaod_rad: aaod,
                    eaod_rad: eaod,
                    delay_s: delay,
                    cluster_id,
                }
            })
            .collect()
    }
}

/// Synthetic environment: where cluster centers live and how clusters spread.
/// Stands in for measured/ray-traced environment diversity; disjoint sectors
/// between two configs give controllable distribution shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentConfig {
    pub id: String,
    pub cluster_count_range: (usize, usize),
    pub aaod_sector_rad: (f64, f64),
    pub eaod_sector_rad: (f64, f64),
    pub delay_range_s: (f64, f64),
    pub aod_spread_rad: f64,
    pub delay_spread_s: f64,
    pub paths_per_cluster: usize,
    pub power_decay_db_per_cluster: f64,
    pub seed: u64,
}

impl EnvironmentConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.cluster_count_range;
        if lo < 1 || hi < lo {
            return Err(Error::InvalidConfig(format!(
                "cluster_count_range [{lo}, {hi}] must satisfy 1 <= lo <= hi"
            )));
        }
        for (name, (a, b)) in [
            ("aaod_sector_rad", self.aaod_sector_rad),
            ("eaod_sector_rad", self.eaod_sector_rad),
            ("delay_range_s", self.delay_range_s),
        ] {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(Error::InvalidConfig(format!("{name} [{a}, {b}] is empty")));
            }
        }
        if self.paths_per_cluster < 1 {
            return Err(Error::InvalidConfig(
                "paths_per_cluster must be >= 1".into(),
            ));
        }
        if self.aod_spread_rad < 0.0 || self.delay_spread_s < 0.0 {
            return Err(Error::InvalidConfig("spreads must be >= 0".into()));
        }
        Ok(())
    }
}

/// One generated channel: spatial-frequency matrix, environment label, and
/// (optionally) the ground-truth path table that synthesized it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub h: CMat,
    pub env_id: String,
    pub paths: Option<Vec<PathComponent>>,
}

/// Per-path off-grid residues of one cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathResidues {
    pub r_h: f64,
    pub r_v: f64,
    pub r_d: f64,
}

/// Angular-delay grid placement of a cluster: rounded peak indices, per-path
/// residues, and how much power leaks off the argmax grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageProfile {
    pub peak_h: i64,
    pub peak_v: i64,
    pub peak_d: i64,
    pub residues: Vec<PathResidues>,
    pub offpeak_power_fraction: f64,
}

/// Wrap an angle into (-pi, pi].
fn wrap_pi(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = x - two_pi * (x / two_pi).round();
    if w <= -PI {
        w + two_pi
    } else {
        w
    }
}

/// UPA steering vector `a(phi, theta) = a_h ⊗ a_v` with horizontal phases
/// `pi * k * sin(phi) sin(theta)` and vertical phases `pi * k * cos(theta)`.
/// All entries unit modulus, entry 0 equals 1.
pub fn steering_vector(geom: &ArrayGeometry, aaod_rad: f64, eaod_rad: f64) -> CVec {
    let s_h = aaod_rad.sin() * eaod_rad.sin();
    let s_v = eaod_rad.cos();
    let a_h: CVec = (0..geom.n_h())
        .map(|k| C64::cis(PI * k as f64 * s_h))
        .collect();
    let a_v: CVec = (0..geom.n_v())
        .map(|k| C64::cis(PI * k as f64 * s_v))
        .collect();
    linalg::kron_vec(&a_h, &a_v)
}

/// Frequency response `b(tau)` with entry `k = exp(j 2π k Δf τ)`.
pub fn freq_response(geom: &ArrayGeometry, delay_s: f64) -> CVec {
    let df = geom.subcarrier_spacing_hz();
    (0..geom.n_c())
        .map(|k| C64::cis(2.0 * PI * k as f64 * df * delay_s))
        .collect()
}

/// Sum of rank-1 path responses `H = Σ α a(φ,θ) b(τ)^H`.
pub fn synthesize_channel(geom: &ArrayGeometry, paths: &[PathComponent]) -> Result<CMat> {
    if paths.is_empty() {
        return Err(Error::NoPaths);
    }
    let mut h = CMat::zeros((geom.n_t(), geom.n_c()));
    for p in paths {
        let a = steering_vector(geom, p.aaod_rad, p.eaod_rad);
        let b = freq_response(geom, p.delay_s);
        for (n, &an) in a.iter().enumerate() {
            let row = p.gain * an;
            for (k, &bk) in b.iter().enumerate() {
                h[(n, k)] += row * bk.conj();
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformDirection {
    Forward,
    Inverse,
}

/// Precomputed unitary angular-delay transform for one geometry.
#[derive(Debug, Clone)]
pub struct AngularDelayTransform {
    f_a: CMat,
    f_d: CMat,
    n_t: usize,
    n_c: usize,
}

impl AngularDelayTransform {
    pub fn new(geom: &ArrayGeometry) -> Self {
        let f_h = linalg::dft_matrix(geom.n_h());
        let f_v = linalg::dft_matrix(geom.n_v());
        let f_a = ndarray::linalg::kron(&f_h, &f_v);
        let f_d = linalg::dft_matrix(geom.n_c());
        Self {
            f_a,
            f_d,
            n_t: geom.n_t(),
            n_c: geom.n_c(),
        }
    }

    fn check(&self, h: &CMat) -> Result<()> {
        if h.dim() != (self.n_t, self.n_c) {
            return Err(Error::ShapeMismatch {
                expected: (self.n_t, self.n_c),
                got: h.dim(),
            });
        }
        Ok(())
    }

    /// `H~ = F_a H F_d^H`.
    pub fn forward(&self, h: &CMat) -> Result<CMat> {
        self.check(h)?;
        Ok(self.f_a.dot(h).dot(&linalg::adjoint(&self.f_d)))
    }

    /// `H = F_a^H H~ F_d`.
    pub fn inverse(&self, ht: &CMat) -> Result<CMat> {
        self.check(ht)?;
        Ok(linalg::adjoint(&self.f_a).dot(ht).dot(&self.f_d))
    }
}

/// One-shot angular-delay transform. Callers with many samples should keep an
/// [`AngularDelayTransform`] around instead.
pub fn angular_delay_transform(
    h: &CMat,
    geom: &ArrayGeometry,
    direction: TransformDirection,
) -> Result<CMat> {
    let xf = AngularDelayTransform::new(geom);
    match direction {
        TransformDirection::Forward => xf.forward(h),
        TransformDirection::Inverse => xf.inverse(h),
    }
}

/// Dirichlet kernel `D_N(x) = sin(πx) / (sqrt(N) sin(πx/N)) * exp(j (N-1)/N πx)`,
/// the leakage footprint of a unit source at fractional grid offset `x`.
/// Periodic in `x` with period `N`; the removable singularities at multiples
/// of `N` take the limit value `sqrt(N)`.
pub fn dirichlet_kernel(n: usize, x: f64) -> C64 {
    let nf = n as f64;
    // Reduce by the period: cancels the sign ambiguity at the singular points.
    let d = x - nf * (x / nf).round();
    if d == 0.0 {
        return C64::new(nf.sqrt(), 0.0);
    }
    let mag = (PI * d).sin() / (nf.sqrt() * (PI * d / nf).sin());
    C64::cis((nf - 1.0) / nf * PI * d) * mag
}

/// Grid placement and power-leakage summary of a single cluster.
///
/// The cluster center is the arithmetic mean of the per-path transformed
/// coordinates (`sin φ sin θ`, `cos θ`, `B τ`); rounding is half-away-from-zero
/// so peak indices are deterministic. Residues split exactly into the center
/// misalignment plus the intra-cluster spread term.
pub fn leakage_profile(
    geom: &ArrayGeometry,
    cluster_paths: &[PathComponent],
) -> Result<LeakageProfile> {
    if cluster_paths.is_empty() {
        return Err(Error::NoPaths);
    }
    if cluster_paths
        .iter()
        .any(|p| p.cluster_id != cluster_paths[0].cluster_id)
    {
        return Err(Error::MixedClusterIds);
    }
    let n_h = geom.n_h() as f64;
    let n_v = geom.n_v() as f64;
    let b = geom.bandwidth_hz();

    let coords: Vec<(f64, f64, f64)> = cluster_paths
        .iter()
        .map(|p| {
            (
                p.aaod_rad.sin() * p.eaod_rad.sin(),
                p.eaod_rad.cos(),
                b * p.delay_s,
            )
        })
        .collect();
    let np = coords.len() as f64;
    let mean_h = coords.iter().map(|c| c.0).sum::<f64>() / np;
    let mean_v = coords.iter().map(|c| c.1).sum::<f64>() / np;
    let mean_d = coords.iter().map(|c| c.2).sum::<f64>() / np;

    let peak_h = (n_h * mean_h / 2.0).round() as i64;
    let peak_v = (n_v * mean_v / 2.0).round() as i64;
    let peak_d = mean_d.round() as i64;

    let residues = coords
        .iter()
        .map(|&(sh, sv, d)| PathResidues {
            r_h: n_h * sh / 2.0 - peak_h as f64,
            r_v: n_v * sv / 2.0 - peak_v as f64,
            r_d: d - peak_d as f64,
        })
        .collect();

    let h = synthesize_channel(geom, cluster_paths)?;
    let ht = AngularDelayTransform::new(geom).forward(&h)?;
    let total: f64 = ht.iter().map(|z| z.norm_sqr()).sum();
    let peak_pow = ht.iter().map(|z| z.norm_sqr()).fold(0.0f64, f64::max);
    let offpeak = if total > 0.0 {
        1.0 - peak_pow / total
    } else {
        0.0
    };

    Ok(LeakageProfile {
        peak_h,
        peak_v,
        peak_d,
        residues,
        offpeak_power_fraction: offpeak,
    })
}

fn uniform_in<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draw channel samples from an environment. Each sample uses its own ChaCha
/// stream of `cfg.seed`, so the output is bitwise reproducible and independent
/// of any batching or parallel evaluation order.
pub fn sample_environment(
    cfg: &EnvironmentConfig,
    n_samples: usize,
    geom: &ArrayGeometry,
) -> Result<Vec<ChannelSample>> {
    cfg.validate()?;
    (0..n_samples)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            sample_one(cfg, geom, &mut rng)
        })
        .collect()
}

fn sample_one<R: Rng>(
    cfg: &EnvironmentConfig,
    geom: &ArrayGeometry,
    rng: &mut R,
) -> Result<ChannelSample> {
    let (lo, hi) = cfg.cluster_count_range;
    let n_cl = rng.random_range(lo..=hi);
    let mut paths = Vec::with_capacity(n_cl * cfg.paths_per_cluster);
    for l in 0..n_cl {
        let spec = ClusterSpec {
            center_aaod_rad: uniform_in(rng, cfg.aaod_sector_rad),
            center_eaod_rad: uniform_in(rng, cfg.eaod_sector_rad),
            center_delay_s: uniform_in(rng, cfg.delay_range_s),
            aod_spread_rad: cfg.aod_spread_rad,
            delay_spread_s: cfg.delay_spread_s,
            n_paths: cfg.paths_per_cluster,
            power: 10f64.powf(-cfg.power_decay_db_per_cluster * l as f64 / 10.0),
        };
        paths.extend(spec.sample_paths(l as u32, rng));
    }
    let h = synthesize_channel(geom, &paths)?;
    let norm = frob(&h);
    if norm == 0.0 {
        return Err(Error::DegenerateSample);
    }
    // Normalize at generation time and keep the path table consistent with h.
    let scale = ((geom.n_t() * geom.n_c()) as f64).sqrt() / norm;
    let h = h.mapv(|z| z * scale);
    for p in &mut paths {
        p.gain *= scale;
    }
    Ok(ChannelSample {
        h,
        env_id: cfg.id.clone(),
        paths: Some(paths),
    })
}

/// Scale to `‖H‖_F = sqrt(N_T N_C)`; direction unchanged.
pub fn normalize_sample(h: &CMat) -> Result<CMat> {
    let norm = frob(h);
    if norm == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let (nt, nc) = h.dim();
    let scale = ((nt * nc) as f64).sqrt() / norm;
    Ok(h.mapv(|z| z * scale))
}

/// Add circular complex Gaussian estimation error so that
/// `10 log10(‖H‖_F^2 / E‖N‖_F^2) = snr_db`. `snr_db = +inf` disables noise.
pub fn add_estimation_noise(h: &CMat, snr_db: f64, rng_seed: u64) -> CMat {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return h.clone();
    }
    let noise_pow = frob(h).powi(2) * 10f64.powf(-snr_db / 10.0);
    let sigma = (noise_pow / h.len() as f64 / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    h.mapv(|z| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        z + C64::new(sigma * re, sigma * im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom_8x4x32() -> ArrayGeometry {
        ArrayGeometry::new(8, 4, 32, 10e6).unwrap()
    }

    fn on_grid_path(
        geom: &ArrayGeometry,
        k_h: i64,
        k_v: i64,
        k_d: i64,
        gain: C64,
    ) -> PathComponent {
        // Invert the grid maps: sin(phi)sin(theta) = 2 k_h / N_h, cos(theta) = 2 k_v / N_v.
        let s_v = 2.0 * k_v as f64 / geom.n_v() as f64;
        let theta = s_v.acos();
        let s_h = 2.0 * k_h as f64 / geom.n_h() as f64;
        let phi = (s_h / theta.sin()).asin();
        PathComponent {
            gain,
            aaod_rad: phi,
            eaod_rad: theta,
            delay_s: k_d as f64 / geom.bandwidth_hz(),
            cluster_id: 0,
        }
    }

    #[test]
    fn geometry_invariants() {
        for (n_h, n_v, n_c, bw) in [(8, 4, 32, 10e6), (3, 1, 7, 5.5e6), (5, 3, 12, 1.23e7)] {
            let g = ArrayGeometry::new(n_h, n_v, n_c, bw).unwrap();
            assert_eq!(g.n_t(), n_h * n_v);
            let err = (g.subcarrier_spacing_hz() * n_c as f64 - bw).abs();
            assert!(err <= bw * f64::EPSILON, "spacing * n_c off by {err}");
        }
        assert!(ArrayGeometry::new(0, 1, 4, 1e6).is_err());
        assert!(ArrayGeometry::new(1, 1, 0, 1e6).is_err());
        assert!(ArrayGeometry::new(1, 1, 4, 0.0).is_err());
        assert!(ArrayGeometry::new(1, 1, 4, f64::NAN).is_err());
    }

    #[test]
    fn steering_boresight_is_all_ones() {
        let geom = geom_8x4x32();
        let a = steering_vector(&geom, 0.0, PI / 2.0);
        assert_eq!(a.len(), 32);
        for z in a.iter() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_is_unimodular_with_unit_first_entry() {
        let geom = geom_8x4x32();
        for (phi, theta) in [(0.3, 1.2), (-1.0, 0.4), (1.5, 2.8)] {
            let a = steering_vector(&geom, phi, theta);
            assert!((a[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
            for z in a.iter() {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_two_element_endfire() {
        let geom = ArrayGeometry::new(2, 1, 4, 1e6).unwrap();
        let a = steering_vector(&geom, PI / 2.0, PI / 2.0);
        assert!((a[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((a[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn freq_response_identities() {
        let geom = geom_8x4x32();
        let b0 = freq_response(&geom, 0.0);
        let bwrap = freq_response(&geom, 1.0 / geom.subcarrier_spacing_hz());
        for k in 0..geom.n_c() {
            assert!((b0[k] - C64::new(1.0, 0.0)).norm() < 1e-12);
            assert!((bwrap[k] - C64::new(1.0, 0.0)).norm() < 1e-9);
        }
        // Δf = 312.5 kHz, τ = 1.6 µs: entry 1 is exp(jπ) = -1.
        let b = freq_response(&geom, 1.6e-6);
        assert!((b[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn synthesize_single_boresight_path_is_all_ones() {
        let geom = geom_8x4x32();
        let p = PathComponent {
            gain: C64::new(1.0, 0.0),
            aaod_rad: 0.0,
            eaod_rad: PI / 2.0,
            delay_s: 0.0,
            cluster_id: 0,
        };
        let h = synthesize_channel(&geom, &[p]).unwrap();
        for z in h.iter() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesize_is_linear_in_gains() {
        let geom = geom_8x4x32();
        let paths: Vec<PathComponent> = (0..5)
            .map(|i| PathComponent {
                gain: C64::new(0.3 + i as f64, 0.1 * i as f64),
                aaod_rad: -0.8 + 0.3 * i as f64,
                eaod_rad: 1.2 + 0.1 * i as f64,
                delay_s: 40e-9 * i as f64,
                cluster_id: i,
            })
            .collect();
        let h = synthesize_channel(&geom, &paths).unwrap();
        let doubled: Vec<PathComponent> = paths
            .iter()
            .map(|p| PathComponent {
                gain: p.gain * 2.0,
                ..*p
            })
            .collect();
        let h2 = synthesize_channel(&geom, &doubled).unwrap();
        let err = frob(&(&h2 - &h.mapv(|z| z * 2.0)));
        assert!(err < 1e-12 * frob(&h2));

        // Additivity across disjoint path sets.
        let (pa, pb) = paths.split_at(2);
        let ha = synthesize_channel(&geom, pa).unwrap();
        let hb = synthesize_channel(&geom, pb).unwrap();
        assert!(frob(&(&ha + &hb - &h)) < 1e-12 * frob(&h));
    }

    #[test]
    fn synthesize_empty_errors() {
        let geom = geom_8x4x32();
        assert!(matches!(
            synthesize_channel(&geom, &[]),
            Err(Error::NoPaths)
        ));
    }

    #[test]
    fn orthogonal_on_grid_paths_have_additive_energy() {
        let geom = geom_8x4x32();
        let p1 = on_grid_path(&geom, 1, 0, 0, C64::new(1.0, 0.5));
        let p2 = on_grid_path(&geom, 3, 0, 0, C64::new(-0.7, 0.2));
        let h1 = synthesize_channel(&geom, &[p1]).unwrap();
        let h2 = synthesize_channel(&geom, &[p2]).unwrap();
        let h = synthesize_channel(&geom, &[p1, p2]).unwrap();
        let lhs = frob(&h).powi(2);
        let rhs = frob(&h1).powi(2) + frob(&h2).powi(2);
        assert!((lhs - rhs).abs() < 1e-9 * rhs);
        // Oracle: the steering vectors are exactly orthogonal.
        let a1 = steering_vector(&geom, p1.aaod_rad, p1.eaod_rad);
        let a2 = steering_vector(&geom, p2.aaod_rad, p2.eaod_rad);
        let ip: C64 = a1.iter().zip(a2.iter()).map(|(x, y)| x.conj() * y).sum();
        assert!(ip.norm() < 1e-10);
    }

    #[test]
    fn transform_roundtrip_and_energy() {
        let geom = geom_8x4x32();
        let xf = AngularDelayTransform::new(&geom);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let h = CMat::from_shape_fn((geom.n_t(), geom.n_c()), |_| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let ht = xf.forward(&h).unwrap();
            let back = xf.inverse(&ht).unwrap();
            assert!(frob(&(&back - &h)) < 1e-10 * frob(&h));
            assert!((frob(&ht) - frob(&h)).abs() < 1e-10 * frob(&h));
        }
        let bad = CMat::zeros((3, 3));
        assert!(matches!(xf.forward(&bad), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn on_grid_path_concentrates_in_one_bin() {
        let geom = geom_8x4x32();
        let gain = C64::new(0.8, -0.6);
        let p = on_grid_path(&geom, 2, 1, 3, gain);
        let h = synthesize_channel(&geom, &[p]).unwrap();
        let ht = angular_delay_transform(&h, &geom, TransformDirection::Forward).unwrap();
        let peak = ht.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let expect = ((geom.n_t() * geom.n_c()) as f64).sqrt() * gain.norm();
        assert!((peak - expect).abs() < 1e-9 * expect);
        let above: usize = ht.iter().filter(|z| z.norm() > 1e-9 * peak).count();
        assert_eq!(above, 1);

        // Delta case with several zero-residue paths: still a single bin,
        // amplitude sqrt(N_T N_C) |sum of gains|.
        let gains = [C64::new(1.0, 0.0), C64::new(-0.3, 0.7), C64::new(0.1, -0.2)];
        let paths: Vec<PathComponent> = gains
            .iter()
            .map(|&g| on_grid_path(&geom, 2, 1, 3, g))
            .collect();
        let h = synthesize_channel(&geom, &paths).unwrap();
        let ht = angular_delay_transform(&h, &geom, TransformDirection::Forward).unwrap();
        let peak = ht.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let total: C64 = gains.iter().sum();
        let expect = ((geom.n_t() * geom.n_c()) as f64).sqrt() * total.norm();
        assert!((peak - expect).abs() < 1e-9 * expect);
        let above: usize = ht.iter().filter(|z| z.norm() > 1e-9 * peak).count();
        assert_eq!(above, 1);
    }

    #[test]
    fn dirichlet_values() {
        let d0 = dirichlet_kernel(8, 0.0);
        assert!((d0 - C64::new(8f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!(dirichlet_kernel(8, 3.0).norm() < 1e-12);
        let d = dirichlet_kernel(4, 0.5);
        let expect = (PI * 0.5).sin() / (2.0 * (PI * 0.125).sin());
        assert!((d.norm() - expect).abs() < 1e-9);
        assert!((d.norm() - 1.30656).abs() < 1e-4);
        // Continuity across the period: limit at x = N is sqrt(N) again.
        let near = dirichlet_kernel(8, 8.0 + 1e-9);
        assert!((near - dirichlet_kernel(8, 8.0)).norm() < 1e-6);
        assert!((dirichlet_kernel(8, 8.0).norm() - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn leakage_on_grid_path_has_zero_residues() {
        let geom = geom_8x4x32();
        let p = on_grid_path(&geom, 2, 1, 3, C64::new(1.0, 0.0));
        let prof = leakage_profile(&geom, &[p]).unwrap();
        assert_eq!((prof.peak_h, prof.peak_v, prof.peak_d), (2, 1, 3));
        let r = prof.residues[0];
        assert!(r.r_h.abs() < 1e-12 && r.r_v.abs() < 1e-12 && r.r_d.abs() < 1e-9);
        assert!(prof.offpeak_power_fraction <= 1e-9);
    }

    #[test]
    fn leakage_two_path_profile_decays_from_peak() {
        // Two paths at sin(phi)sin(theta) = -0.48 and -0.35, horizontal axis.
        let geom = ArrayGeometry::new(8, 1, 32, 10e6).unwrap();
        let mk = |s: f64| PathComponent {
            gain: C64::new(1.0, 0.0),
            aaod_rad: s.asin(),
            eaod_rad: PI / 2.0,
            delay_s: 0.0,
            cluster_id: 7,
        };
        let paths = [mk(-0.48), mk(-0.35)];
        let prof = leakage_profile(&geom, &paths).unwrap();
        assert!(prof.offpeak_power_fraction > 0.0);
        // Horizontal power profile decays monotonically moving away from the
        // peak bin (wrap-aware), for the first few bins on each side.
        let h = synthesize_channel(&geom, &paths).unwrap();
        let ht = angular_delay_transform(&h, &geom, TransformDirection::Forward).unwrap();
        let prof_h: Vec<f64> = (0..8)
            .map(|n| (0..32).map(|m| ht[(n, m)].norm_sqr()).sum())
            .collect();
        let peak = (0..8)
            .max_by(|&a, &b| prof_h[a].total_cmp(&prof_h[b]))
            .unwrap();
        for step in 0..3usize {
            let fwd0 = prof_h[(peak + step) % 8];
            let fwd1 = prof_h[(peak + step + 1) % 8];
            let bwd0 = prof_h[(peak + 8 - step) % 8];
            let bwd1 = prof_h[(peak + 8 - step - 1) % 8];
            assert!(fwd1 <= fwd0 * (1.0 + 1e-12));
            assert!(bwd1 <= bwd0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn leakage_residue_decomposition_is_exact() {
        let geom = geom_8x4x32();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = ClusterSpec {
            center_aaod_rad: 0.4,
            center_eaod_rad: 1.4,
            center_delay_s: 200e-9,
            aod_spread_rad: 0.05,
            delay_spread_s: 5e-9,
            n_paths: 6,
            power: 1.0,
        };
        let paths = spec.sample_paths(0, &mut rng);
        let prof = leakage_profile(&geom, &paths).unwrap();
        // Center misalignment + spread term reproduces each residue exactly.
        let coords: Vec<f64> = paths
            .iter()
            .map(|p| p.aaod_rad.sin() * p.eaod_rad.sin())
            .collect();
        let mean = coords.iter().sum::<f64>() / coords.len() as f64;
        let n_h = geom.n_h() as f64;
        for (i, r) in prof.residues.iter().enumerate() {
            let center_term = n_h * mean / 2.0 - prof.peak_h as f64;
            let spread_term = n_h / 2.0 * (coords[i] - mean);
            assert!((center_term + spread_term - r.r_h).abs() < 1e-12);
        }
    }

    #[test]
    fn leakage_mixed_cluster_ids_error() {
        let geom = geom_8x4x32();
        let mut p1 = on_grid_path(&geom, 1, 0, 0, C64::new(1.0, 0.0));
        let mut p2 = p1;
        p1.cluster_id = 0;
        p2.cluster_id = 1;
        assert!(matches!(
            leakage_profile(&geom, &[p1, p2]),
            Err(Error::MixedClusterIds)
        ));
    }

    fn env_a(seed: u64) -> EnvironmentConfig {
        EnvironmentConfig {
            id: "env-a".into(),
            cluster_count_range: (1, 3),
            aaod_sector_rad: (-60f64.to_radians(), -10f64.to_radians()),
            eaod_sector_rad: (60f64.to_radians(), 120f64.to_radians()),
            delay_range_s: (0.0, 600e-9),
            aod_spread_rad: 5f64.to_radians(),
            delay_spread_s: 4.7e-9,
            paths_per_cluster: 10,
            power_decay_db_per_cluster: 3.0,
            seed,
        }
    }

    #[test]
    fn environment_is_deterministic_and_normalized() {
        let geom = geom_8x4x32();
        let cfg = env_a(42);
        let s1 = sample_environment(&cfg, 8, &geom).unwrap();
        let s2 = sample_environment(&cfg, 8, &geom).unwrap();
        assert_eq!(s1, s2);
        let target = ((geom.n_t() * geom.n_c()) as f64).sqrt();
        for s in &s1 {
            assert!((frob(&s.h) - target).abs() < 1e-9 * target);
            // Ground-truth paths resynthesize the stored matrix.
            let again = synthesize_channel(&geom, s.paths.as_ref().unwrap()).unwrap();
            assert!(frob(&(&again - &s.h)) < 1e-9 * target);
        }
    }

    #[test]
    fn degenerate_cluster_range_yields_single_cluster() {
        let geom = geom_8x4x32();
        let mut cfg = env_a(1);
        cfg.cluster_count_range = (1, 1);
        for s in sample_environment(&cfg, 10, &geom).unwrap() {
            let ids: std::collections::BTreeSet<u32> =
                s.paths.unwrap().iter().map(|p| p.cluster_id).collect();
            assert_eq!(ids.len(), 1);
        }
    }

    #[test]
    fn disjoint_sectors_have_disjoint_peak_histograms() {
        let geom = geom_8x4x32();
        let xf = AngularDelayTransform::new(&geom);
        let mut cfg_a = env_a(7);
        cfg_a.cluster_count_range = (1, 1);
        // Single on-center path per sample: the argmax bin is then exactly
        // the rounded sector coordinate, so the supports are provably the
        // sector images {5,6,7} and {1,2,3}.
        cfg_a.paths_per_cluster = 1;
        cfg_a.aod_spread_rad = 0.0;
        cfg_a.delay_spread_s = 0.0;
        let mut cfg_b = cfg_a.clone();
        cfg_b.id = "env-b".into();
        cfg_b.aaod_sector_rad = (10f64.to_radians(), 60f64.to_radians());
        cfg_b.seed = 8;
        let hist = |cfg: &EnvironmentConfig| -> std::collections::BTreeSet<usize> {
            sample_environment(cfg, 1000, &geom)
                .unwrap()
                .iter()
                .map(|s| {
                    let ht = xf.forward(&s.h).unwrap();
                    let (mut arg, mut best) = (0usize, -1.0f64);
                    for (idx, z) in ht.iter().enumerate() {
                        if z.norm_sqr() > best {
                            best = z.norm_sqr();
                            arg = idx;
                        }
                    }
                    // Horizontal angular index of the flat (n, m) argmax.
                    (arg / geom.n_c()) / geom.n_v()
                })
                .collect()
        };
        let ha = hist(&cfg_a);
        let hb = hist(&cfg_b);
        assert!(ha.is_disjoint(&hb), "support overlap: {ha:?} vs {hb:?}");
    }

    #[test]
    fn invalid_environment_ranges_error() {
        let geom = geom_8x4x32();
        let mut cfg = env_a(1);
        cfg.cluster_count_range = (3, 1);
        assert!(sample_environment(&cfg, 1, &geom).is_err());
        let mut cfg = env_a(1);
        cfg.aaod_sector_rad = (0.5, 0.1);
        assert!(sample_environment(&cfg, 1, &geom).is_err());
    }

    #[test]
    fn normalize_sample_properties() {
        let geom = geom_8x4x32();
        let ones = CMat::from_elem((geom.n_t(), geom.n_c()), C64::new(1.0, 0.0));
        let n = normalize_sample(&ones).unwrap();
        for z in n.iter() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        // Idempotent and scale invariant.
        let again = normalize_sample(&n).unwrap();
        assert!(frob(&(&again - &n)) < 1e-12 * frob(&n));
        let scaled = ones.mapv(|z| z * 7.0);
        let n7 = normalize_sample(&scaled).unwrap();
        assert!(frob(&(&n7 - &n)) < 1e-12 * frob(&n));
        assert!(matches!(
            normalize_sample(&CMat::zeros((4, 4))),
            Err(Error::DegenerateSample)
        ));
    }

    #[test]
    fn estimation_noise_power_and_determinism() {
        let geom = geom_8x4x32();
        let cfg = env_a(5);
        let h = sample_environment(&cfg, 1, &geom).unwrap().remove(0).h;

        // +inf sentinel: passthrough.
        let clean = add_estimation_noise(&h, f64::INFINITY, 0);
        assert_eq!(clean, h);

        // Same seed bitwise identical, different seeds differ.
        let a = add_estimation_noise(&h, 10.0, 1);
        let b = add_estimation_noise(&h, 10.0, 1);
        let c = add_estimation_noise(&h, 10.0, 2);
        assert_eq!(a, b);
        assert_ne!(a, c);

        // Monte Carlo: empirical SNR within 0.2 dB of target over 1000 draws.
        let sig = frob(&h).powi(2);
        let mut noise_acc = 0.0;
        for seed in 0..1000u64 {
            let noisy = add_estimation_noise(&h, 10.0, seed);
            noise_acc += frob(&(&noisy - &h)).powi(2);
        }
        let snr = 10.0 * (sig / (noise_acc / 1000.0)).log10();
        assert!((snr - 10.0).abs() < 0.2, "empirical snr {snr}");
    }
}
