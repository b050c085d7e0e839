//! C ABI for the egcsi pipeline.
//!
//! Conventions:
//! - Complex matrices cross the boundary as interleaved f64 buffers
//!   (re, im per entry), row-major over (antenna, subcarrier); a matrix
//!   buffer holds exactly `2 * n_t * n_c` doubles.
//! - Every function returns an `EgcsiStatus`; outputs go through pointers.
//! - Handles created by `*_new`/`*_generate`/`*_read` functions are opaque
//!   and must be released with the matching `*_free`.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use egcsi::align::{Aligner, AlignmentMetadata, CodebookConfig};
use egcsi::channel::{sample_environment, ArrayGeometry, ChannelSample, EnvironmentConfig};
use egcsi::decouple::{estimate_rank_hybrid, svd_decouple};
use egcsi::error::Error;
use egcsi::harness::{read_csit, write_csit};
use egcsi::linalg::{flatten_complex, unflatten_complex, CMat};

/// Result codes for every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgcsiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalError = 3,
    IoError = 4,
    Utf8Error = 5,
}

fn status_of(e: &Error) -> EgcsiStatus {
    match e {
        Error::Io(_) | Error::BadMagic | Error::BadVersion(_) | Error::TruncatedFile => {
            EgcsiStatus::IoError
        }
        Error::SvdFailed => EgcsiStatus::NumericalError,
        Error::Stage { source, .. } => status_of(source),
        _ => EgcsiStatus::InvalidArgument,
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn egcsi_status_message(status: EgcsiStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        EgcsiStatus::Ok => b"ok\0",
        EgcsiStatus::NullPointer => b"null pointer argument\0",
        EgcsiStatus::InvalidArgument => b"invalid argument\0",
        EgcsiStatus::NumericalError => b"numerical error\0",
        EgcsiStatus::IoError => b"i/o error\0",
        EgcsiStatus::Utf8Error => b"invalid utf-8\0",
    };
    msg.as_ptr() as *const c_char
}

/// Opaque antenna/subcarrier geometry.
pub struct EgcsiGeometry(ArrayGeometry);

/// Opaque alignment engine (codebooks + transforms) for one geometry.
pub struct EgcsiAligner(Aligner);

/// Opaque dataset of channel samples sharing one geometry.
pub struct EgcsiDataset {
    n_h: usize,
    n_v: usize,
    n_c: usize,
    samples: Vec<ChannelSample>,
}

/// Per-cluster alignment metadata.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EgcsiMetadata {
    pub n1: u32,
    pub n2: u32,
    pub m: u32,
    pub t: u32,
}

/// Hybrid rank estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EgcsiRankEstimate {
    pub r_mdl: u32,
    pub r_threshold: u32,
    pub r_final: u32,
}

/// Synthetic environment parameters (angles in radians, delays in seconds).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EgcsiEnvConfig {
    pub cluster_count_min: u32,
    pub cluster_count_max: u32,
    pub aaod_lo: f64,
    pub aaod_hi: f64,
    pub eaod_lo: f64,
    pub eaod_hi: f64,
    pub delay_lo: f64,
    pub delay_hi: f64,
    pub aod_spread: f64,
    pub delay_spread: f64,
    pub paths_per_cluster: u32,
    pub power_decay_db_per_cluster: f64,
    pub seed: u64,
}

unsafe fn matrix_from_raw(ptr: *const f64, n_t: usize, n_c: usize) -> Option<CMat> {
    if ptr.is_null() {
        return None;
    }
    let len = 2 * n_t * n_c;
    let slice = unsafe { std::slice::from_raw_parts(ptr, len) };
    unflatten_complex(slice, n_t, n_c).ok()
}

unsafe fn matrix_to_raw(m: &CMat, ptr: *mut f64) {
    let flat = flatten_complex(m);
    unsafe { std::ptr::copy_nonoverlapping(flat.as_ptr(), ptr, flat.len()) };
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn egcsi_geometry_new(
    n_h: u32,
    n_v: u32,
    n_c: u32,
    bandwidth_hz: f64,
    out: *mut *mut EgcsiGeometry,
) -> EgcsiStatus {
    if out.is_null() {
        return EgcsiStatus::NullPointer;
    }
    match ArrayGeometry::new(n_h as usize, n_v as usize, n_c as usize, bandwidth_hz) {
        Ok(g) => {
            unsafe { *out = Box::into_raw(Box::new(EgcsiGeometry(g))) };
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `geom` must come from [`egcsi_geometry_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn egcsi_geometry_free(geom: *mut EgcsiGeometry) {
    if !geom.is_null() {
        drop(unsafe { Box::from_raw(geom) });
    }
}

/// # Safety
/// `geom` must be a live handle; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn egcsi_geometry_n_t(
    geom: *const EgcsiGeometry,
    out: *mut u32,
) -> EgcsiStatus {
    if geom.is_null() || out.is_null() {
        return EgcsiStatus::NullPointer;
    }
    unsafe { *out = (*geom).0.n_t() as u32 };
    EgcsiStatus::Ok
}

/// # Safety
/// `geom` must be a live handle; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn egcsi_aligner_new(
    geom: *const EgcsiGeometry,
    o_h: u32,
    o_v: u32,
    o_d: u32,
    q_p: u8,
    out: *mut *mut EgcsiAligner,
) -> EgcsiStatus {
    if geom.is_null() || out.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let cfg = CodebookConfig {
        o_h: o_h as usize,
        o_v: o_v as usize,
        o_d: o_d as usize,
        q_p,
    };
    match Aligner::new(unsafe { &(*geom).0 }, &cfg) {
        Ok(a) => {
            unsafe { *out = Box::into_raw(Box::new(EgcsiAligner(a))) };
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `aligner` must come from [`egcsi_aligner_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn egcsi_aligner_free(aligner: *mut EgcsiAligner) {
    if !aligner.is_null() {
        drop(unsafe { Box::from_raw(aligner) });
    }
}

/// Align one spatial-frequency-domain cluster. `cluster` and `out_aligned`
/// are `2 * n_t * n_c` doubles; `out_aligned` receives the angular-delay
/// aligned component.
///
/// # Safety
/// All pointers must be valid for the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn egcsi_align_cluster(
    aligner: *const EgcsiAligner,
    n_t: u32,
    n_c: u32,
    cluster: *const f64,
    out_aligned: *mut f64,
    out_meta: *mut EgcsiMetadata,
) -> EgcsiStatus {
    if aligner.is_null() || out_aligned.is_null() || out_meta.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let Some(c) = (unsafe { matrix_from_raw(cluster, n_t as usize, n_c as usize) }) else {
        return EgcsiStatus::NullPointer;
    };
    match unsafe { &(*aligner).0 }.align(&c) {
        Ok(res) => {
            unsafe {
                matrix_to_raw(&res.c_aln, out_aligned);
                *out_meta = EgcsiMetadata {
                    n1: res.meta.n1,
                    n2: res.meta.n2,
                    m: res.meta.m,
                    t: res.meta.t,
                };
            }
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Exact inverse of [`egcsi_align_cluster`] given the metadata.
///
/// # Safety
/// All pointers must be valid for the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn egcsi_unalign_cluster(
    aligner: *const EgcsiAligner,
    n_t: u32,
    n_c: u32,
    aligned: *const f64,
    meta: EgcsiMetadata,
    out_cluster: *mut f64,
) -> EgcsiStatus {
    if aligner.is_null() || out_cluster.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let Some(c) = (unsafe { matrix_from_raw(aligned, n_t as usize, n_c as usize) }) else {
        return EgcsiStatus::NullPointer;
    };
    let m = AlignmentMetadata {
        n1: meta.n1,
        n2: meta.n2,
        m: meta.m,
        t: meta.t,
    };
    match unsafe { &(*aligner).0 }.unalign(&c, &m) {
        Ok(res) => {
            unsafe { matrix_to_raw(&res, out_cluster) };
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Hybrid MDL/threshold rank estimate of an `n_t x n_c` channel.
///
/// # Safety
/// `h` must hold `2 * n_t * n_c` doubles; `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn egcsi_estimate_rank(
    h: *const f64,
    n_t: u32,
    n_c: u32,
    eta: f64,
    r_max: u32,
    out: *mut EgcsiRankEstimate,
) -> EgcsiStatus {
    if out.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let Some(hm) = (unsafe { matrix_from_raw(h, n_t as usize, n_c as usize) }) else {
        return EgcsiStatus::NullPointer;
    };
    match estimate_rank_hybrid(&hm, eta, r_max as usize) {
        Ok(est) => {
            unsafe {
                *out = EgcsiRankEstimate {
                    r_mdl: est.r_mdl as u32,
                    r_threshold: est.r_threshold as u32,
                    r_final: est.r_final as u32,
                };
            }
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Leading-`r` rank-1 decoupling. `out_clusters` receives `r` consecutive
/// matrix buffers (`r * 2 * n_t * n_c` doubles) ordered by descending
/// singular value.
///
/// # Safety
/// Buffers must be valid for the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn egcsi_decouple(
    h: *const f64,
    n_t: u32,
    n_c: u32,
    r: u32,
    out_clusters: *mut f64,
) -> EgcsiStatus {
    if out_clusters.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let Some(hm) = (unsafe { matrix_from_raw(h, n_t as usize, n_c as usize) }) else {
        return EgcsiStatus::NullPointer;
    };
    match svd_decouple(&hm, r as usize) {
        Ok(clusters) => {
            let stride = 2 * n_t as usize * n_c as usize;
            for (l, c) in clusters.iter().enumerate() {
                unsafe { matrix_to_raw(&c.matrix(), out_clusters.add(l * stride)) };
            }
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// NMSE of a reconstruction. `out_linear` gets the linear ratio;
/// `out_db` gets `10 log10` of it, or `-HUGE_VAL` for an exact match.
///
/// # Safety
/// Matrix buffers must hold `2 * n_t * n_c` doubles.
#[no_mangle]
pub unsafe extern "C" fn egcsi_nmse_db(
    h_hat: *const f64,
    h: *const f64,
    n_t: u32,
    n_c: u32,
    out_linear: *mut f64,
    out_db: *mut f64,
) -> EgcsiStatus {
    if out_linear.is_null() || out_db.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let (Some(a), Some(b)) = (
        unsafe { matrix_from_raw(h_hat, n_t as usize, n_c as usize) },
        unsafe { matrix_from_raw(h, n_t as usize, n_c as usize) },
    ) else {
        return EgcsiStatus::NullPointer;
    };
    match egcsi::metrics::nmse(&a, &b) {
        Ok(v) => {
            unsafe {
                *out_linear = v.linear;
                *out_db = v.db.unwrap_or(f64::NEG_INFINITY);
            }
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Generate a dataset from a synthetic environment.
///
/// # Safety
/// `geom` must be live; `env` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn egcsi_dataset_generate(
    geom: *const EgcsiGeometry,
    env: *const EgcsiEnvConfig,
    n_samples: u32,
    out: *mut *mut EgcsiDataset,
) -> EgcsiStatus {
    if geom.is_null() || env.is_null() || out.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let e = unsafe { &*env };
    let cfg = EnvironmentConfig {
        id: "ffi".into(),
        cluster_count_range: (e.cluster_count_min as usize, e.cluster_count_max as usize),
        aaod_sector_rad: (e.aaod_lo, e.aaod_hi),
        eaod_sector_rad: (e.eaod_lo, e.eaod_hi),
        delay_range_s: (e.delay_lo, e.delay_hi),
        aod_spread_rad: e.aod_spread,
        delay_spread_s: e.delay_spread,
        paths_per_cluster: e.paths_per_cluster as usize,
        power_decay_db_per_cluster: e.power_decay_db_per_cluster,
        seed: e.seed,
    };
    let g = unsafe { &(*geom).0 };
    match sample_environment(&cfg, n_samples as usize, g) {
        Ok(samples) => {
            unsafe {
                *out = Box::into_raw(Box::new(EgcsiDataset {
                    n_h: g.n_h(),
                    n_v: g.n_v(),
                    n_c: g.n_c(),
                    samples,
                }));
            }
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `ds` must come from a dataset constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn egcsi_dataset_free(ds: *mut EgcsiDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// # Safety
/// `ds` must be live; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn egcsi_dataset_len(ds: *const EgcsiDataset, out: *mut u32) -> EgcsiStatus {
    if ds.is_null() || out.is_null() {
        return EgcsiStatus::NullPointer;
    }
    unsafe { *out = (*ds).samples.len() as u32 };
    EgcsiStatus::Ok
}

/// Copy sample `index` into a `2 * n_t * n_c`-double buffer.
///
/// # Safety
/// `ds` must be live; `out` valid for the dataset's matrix size.
#[no_mangle]
pub unsafe extern "C" fn egcsi_dataset_get_channel(
    ds: *const EgcsiDataset,
    index: u32,
    out: *mut f64,
) -> EgcsiStatus {
    if ds.is_null() || out.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let d = unsafe { &*ds };
    let Some(s) = d.samples.get(index as usize) else {
        return EgcsiStatus::InvalidArgument;
    };
    unsafe { matrix_to_raw(&s.h, out) };
    EgcsiStatus::Ok
}

unsafe fn path_from_cstr<'a>(path: *const c_char) -> Result<&'a Path, EgcsiStatus> {
    if path.is_null() {
        return Err(EgcsiStatus::NullPointer);
    }
    let cstr = unsafe { CStr::from_ptr(path) };
    cstr.to_str()
        .map(Path::new)
        .map_err(|_| EgcsiStatus::Utf8Error)
}

/// Write a dataset to a `.csit` file.
///
/// # Safety
/// `ds` must be live; `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn egcsi_dataset_write_csit(
    ds: *const EgcsiDataset,
    path: *const c_char,
) -> EgcsiStatus {
    if ds.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let p = match unsafe { path_from_cstr(path) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    let d = unsafe { &*ds };
    match write_csit(p, d.n_h, d.n_v, d.n_c, &d.samples) {
        Ok(()) => EgcsiStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Read a `.csit` file into a new dataset handle; the header dims are
/// reported through the out parameters.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; out pointers valid slots.
#[no_mangle]
pub unsafe extern "C" fn egcsi_dataset_read_csit(
    path: *const c_char,
    out: *mut *mut EgcsiDataset,
    out_n_h: *mut u32,
    out_n_v: *mut u32,
    out_n_c: *mut u32,
) -> EgcsiStatus {
    if out.is_null() || out_n_h.is_null() || out_n_v.is_null() || out_n_c.is_null() {
        return EgcsiStatus::NullPointer;
    }
    let p = match unsafe { path_from_cstr(path) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    match read_csit(p) {
        Ok((header, samples)) => {
            unsafe {
                *out_n_h = header.n_h as u32;
                *out_n_v = header.n_v as u32;
                *out_n_c = header.n_c as u32;
                *out = Box::into_raw(Box::new(EgcsiDataset {
                    n_h: header.n_h as usize,
                    n_v: header.n_v as usize,
                    n_c: header.n_c as usize,
                    samples,
                }));
            }
            EgcsiStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Library version as a newly allocated C string; free with
/// [`egcsi_string_free`].
#[no_mangle]
pub extern "C" fn egcsi_version() -> *mut c_char {
    CString::new(env!("CARGO_PKG_VERSION")).map_or(std::ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn egcsi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make_geom() -> *mut EgcsiGeometry {
        let mut g: *mut EgcsiGeometry = std::ptr::null_mut();
        let st = unsafe { egcsi_geometry_new(8, 4, 32, 10e6, &mut g) };
        assert_eq!(st, EgcsiStatus::Ok);
        g
    }

    fn env_cfg(seed: u64) -> EgcsiEnvConfig {
        EgcsiEnvConfig {
            cluster_count_min: 1,
            cluster_count_max: 3,
            aaod_lo: -1.0,
            aaod_hi: 1.0,
            eaod_lo: 1.0,
            eaod_hi: 2.1,
            delay_lo: 0.0,
            delay_hi: 6e-7,
            aod_spread: 0.05,
            delay_spread: 4.7e-9,
            paths_per_cluster: 6,
            power_decay_db_per_cluster: 3.0,
            seed,
        }
    }

    #[test]
    fn status_messages_are_static() {
        for s in [
            EgcsiStatus::Ok,
            EgcsiStatus::NullPointer,
            EgcsiStatus::InvalidArgument,
            EgcsiStatus::NumericalError,
            EgcsiStatus::IoError,
            EgcsiStatus::Utf8Error,
        ] {
            let msg = egcsi_status_message(s);
            assert!(!msg.is_null());
            assert!(!unsafe { CStr::from_ptr(msg) }.to_str().unwrap().is_empty());
        }
    }

    #[test]
    fn geometry_validation_and_null_checks() {
        let mut g: *mut EgcsiGeometry = std::ptr::null_mut();
        assert_eq!(
            unsafe { egcsi_geometry_new(0, 1, 4, 1e6, &mut g) },
            EgcsiStatus::InvalidArgument
        );
        assert_eq!(
            unsafe { egcsi_geometry_new(2, 1, 4, 1e6, std::ptr::null_mut()) },
            EgcsiStatus::NullPointer
        );
        let g = make_geom();
        let mut n_t = 0u32;
        assert_eq!(unsafe { egcsi_geometry_n_t(g, &mut n_t) }, EgcsiStatus::Ok);
        assert_eq!(n_t, 32);
        unsafe { egcsi_geometry_free(g) };
    }

    #[test]
    fn ffi_pipeline_roundtrip() {
        let g = make_geom();
        let mut ds: *mut EgcsiDataset = std::ptr::null_mut();
        let env = env_cfg(7);
        assert_eq!(
            unsafe { egcsi_dataset_generate(g, &env, 5, &mut ds) },
            EgcsiStatus::Ok
        );
        let mut len = 0u32;
        assert_eq!(unsafe { egcsi_dataset_len(ds, &mut len) }, EgcsiStatus::Ok);
        assert_eq!(len, 5);

        let dim = 2 * 32 * 32;
        let mut h = vec![0.0f64; dim];
        assert_eq!(
            unsafe { egcsi_dataset_get_channel(ds, 0, h.as_mut_ptr()) },
            EgcsiStatus::Ok
        );
        assert!(h.iter().any(|&v| v != 0.0));

        let mut est = EgcsiRankEstimate {
            r_mdl: 0,
            r_threshold: 0,
            r_final: 0,
        };
        assert_eq!(
            unsafe { egcsi_estimate_rank(h.as_ptr(), 32, 32, 0.99, 8, &mut est) },
            EgcsiStatus::Ok
        );
        assert!(est.r_final >= 1 && est.r_final <= 8);

        let r = est.r_final as usize;
        let mut clusters = vec![0.0f64; r * dim];
        assert_eq!(
            unsafe { egcsi_decouple(h.as_ptr(), 32, 32, est.r_final, clusters.as_mut_ptr()) },
            EgcsiStatus::Ok
        );

        let mut aligner: *mut EgcsiAligner = std::ptr::null_mut();
        assert_eq!(
            unsafe { egcsi_aligner_new(g, 2, 2, 2, 2, &mut aligner) },
            EgcsiStatus::Ok
        );
        // Align + unalign each cluster and reassemble the truncation.
        let mut h_hat = vec![0.0f64; dim];
        for l in 0..r {
            let c = &clusters[l * dim..(l + 1) * dim];
            let mut aligned = vec![0.0f64; dim];
            let mut meta = EgcsiMetadata {
                n1: 0,
                n2: 0,
                m: 0,
                t: 0,
            };
            assert_eq!(
                unsafe {
                    egcsi_align_cluster(
                        aligner,
                        32,
                        32,
                        c.as_ptr(),
                        aligned.as_mut_ptr(),
                        &mut meta,
                    )
                },
                EgcsiStatus::Ok
            );
            let mut back = vec![0.0f64; dim];
            assert_eq!(
                unsafe {
                    egcsi_unalign_cluster(
                        aligner,
                        32,
                        32,
                        aligned.as_ptr(),
                        meta,
                        back.as_mut_ptr(),
                    )
                },
                EgcsiStatus::Ok
            );
            for (acc, v) in h_hat.iter_mut().zip(back.iter()) {
                *acc += v;
            }
        }

        // Rank truncation error stays under the threshold bound when the
        // threshold side fixed the rank.
        let mut lin = 0.0f64;
        let mut db = 0.0f64;
        assert_eq!(
            unsafe { egcsi_nmse_db(h_hat.as_ptr(), h.as_ptr(), 32, 32, &mut lin, &mut db) },
            EgcsiStatus::Ok
        );
        if est.r_final == est.r_threshold {
            assert!(lin <= 0.01 + 1e-12);
        }

        unsafe {
            egcsi_aligner_free(aligner);
            egcsi_dataset_free(ds);
            egcsi_geometry_free(g);
        }
    }

    #[test]
    fn csit_io_through_ffi() {
        let g = make_geom();
        let mut ds: *mut EgcsiDataset = std::ptr::null_mut();
        let env = env_cfg(11);
        assert_eq!(
            unsafe { egcsi_dataset_generate(g, &env, 3, &mut ds) },
            EgcsiStatus::Ok
        );
        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("ffi.csit").to_str().unwrap()).unwrap();
        assert_eq!(
            unsafe { egcsi_dataset_write_csit(ds, path.as_ptr()) },
            EgcsiStatus::Ok
        );
        let mut back: *mut EgcsiDataset = std::ptr::null_mut();
        let (mut n_h, mut n_v, mut n_c) = (0u32, 0u32, 0u32);
        assert_eq!(
            unsafe {
                egcsi_dataset_read_csit(path.as_ptr(), &mut back, &mut n_h, &mut n_v, &mut n_c)
            },
            EgcsiStatus::Ok
        );
        assert_eq!((n_h, n_v, n_c), (8, 4, 32));
        let mut len = 0u32;
        unsafe { egcsi_dataset_len(back, &mut len) };
        assert_eq!(len, 3);

        // Matrices round-trip bitwise.
        let dim = 2 * 32 * 32;
        let mut a = vec![0.0f64; dim];
        let mut b = vec![0.0f64; dim];
        unsafe {
            egcsi_dataset_get_channel(ds, 2, a.as_mut_ptr());
            egcsi_dataset_get_channel(back, 2, b.as_mut_ptr());
        }
        assert_eq!(a, b);

        let missing = CString::new(dir.path().join("missing.csit").to_str().unwrap()).unwrap();
        assert_eq!(
            unsafe {
                egcsi_dataset_read_csit(missing.as_ptr(), &mut back, &mut n_h, &mut n_v, &mut n_c)
            },
            EgcsiStatus::IoError
        );
        unsafe {
            egcsi_dataset_free(ds);
            egcsi_geometry_free(g);
        }
    }

    #[test]
    fn version_string_roundtrip() {
        let v = egcsi_version();
        assert!(!v.is_null());
        let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap().to_string();
        assert!(!s.is_empty());
        unsafe { egcsi_string_free(v) };
    }
}
