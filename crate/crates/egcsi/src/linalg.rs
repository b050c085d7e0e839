//! Shared complex linear-algebra helpers: unitary DFT matrices, Frobenius
//! norms, the SVD wrapper used by the decoupling stage, and the canonical
//! real/imag flattening used by the compressor, the metrics, and the FFI.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

/// Unitary DFT matrix, forward kernel `exp(-j 2π n k / N) / sqrt(N)`.
pub fn dft_matrix(n: usize) -> CMat {
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(j, k)| {
        scale * C64::cis(-2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64)
    })
}

/// Conjugate transpose.
pub fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Frobenius norm.
pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Squared Frobenius norm.
pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Frobenius inner product `<a, b> = tr(a^H b)`.
pub fn inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product of two vectors: entry `i*len(b) + j` is `a[i] * b[j]`.
pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::zeros(a.len() * b.len());
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

/// Thin SVD `h = u diag(s) vh`, singular values sorted descending.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub vh: CMat,
}

/// Thin SVD via nalgebra, with an explicit descending sort so ordering never
/// depends on backend behaviour.
pub fn svd(h: &CMat) -> Result<Svd> {
    let (nr, nc) = h.dim();
    let m = nalgebra::DMatrix::from_fn(nr, nc, |i, j| h[(i, j)]);
    let f = m
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or(Error::SvdFailed)?;
    let u_na = f.u.ok_or(Error::SvdFailed)?;
    let vt_na = f.v_t.ok_or(Error::SvdFailed)?;
    let k = f.singular_values.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        f.singular_values[b]
            .partial_cmp(&f.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let s: Vec<f64> = order.iter().map(|&i| f.singular_values[i]).collect();
    let u = Array2::from_shape_fn((nr, k), |(i, j)| u_na[(i, order[j])]);
    let vh = Array2::from_shape_fn((k, nc), |(i, j)| vt_na[(order[i], j)]);
    Ok(Svd { u, s, vh })
}

/// Singular values only, sorted descending.
pub fn singular_values(h: &CMat) -> Result<Vec<f64>> {
    let (nr, nc) = h.dim();
    let m = nalgebra::DMatrix::from_fn(nr, nc, |i, j| h[(i, j)]);
    let sv = m
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or(Error::SvdFailed)?
        .singular_values;
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s)
}

/// Flatten a complex matrix to reals: row-major over (antenna, subcarrier),
/// real part before imaginary part for each entry. This order is the wire and
/// model convention everywhere in the crate.
pub fn flatten_complex(m: &CMat) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * m.len());
    for z in m.iter() {
        out.push(z.re);
        out.push(z.im);
    }
    out
}

/// Inverse of [`flatten_complex`].
pub fn unflatten_complex(v: &[f64], nr: usize, nc: usize) -> Result<CMat> {
    if v.len() != 2 * nr * nc {
        return Err(Error::CodewordDimMismatch {
            expected: 2 * nr * nc,
            got: v.len(),
        });
    }
    Ok(Array2::from_shape_fn((nr, nc), |(i, j)| {
        let base = 2 * (i * nc + j);
        C64::new(v[base], v[base + 1])
    }))
}

/// Ceiling of log2, with `ceil_log2(1) == 0`.
pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (x - 1).ilog2() as usize + 1
    }
}
