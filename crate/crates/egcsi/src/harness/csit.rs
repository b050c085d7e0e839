//! The ".csit" dataset container.
//!
//! Little-endian layout:
//!   magic "CSIT", u16 version = 1, u32 sample count, u16 n_h, u16 n_v,
//!   u16 n_c, u8 flags (bit0: path table present); then per sample
//!   N_T*N_C complex entries as interleaved f64 (re, im), row-major
//!   antenna-major; when flagged, u32 path count then per path
//!   { u32 cluster_id, f64 gain_re, f64 gain_im, f64 aaod, f64 eaod,
//!     f64 delay }.
//!
//! Environment labels are not stored; readers get samples with an empty
//! `env_id`.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::channel::{ChannelSample, PathComponent};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

pub const CSIT_MAGIC: &[u8; 4] = b"CSIT";
pub const CSIT_VERSION: u16 = 1;

/// Array dimensions stored in a dataset header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsitHeader {
    pub n_h: u16,
    pub n_v: u16,
    pub n_c: u16,
    pub has_paths: bool,
    pub samples: u32,
}

impl CsitHeader {
    pub fn n_t(&self) -> usize {
        self.n_h as usize * self.n_v as usize
    }
}

/// Write samples to a `.csit` file. All samples must share the header shape,
/// and either all or none carry a path table.
pub fn write_csit(
    path: &Path,
    n_h: usize,
    n_v: usize,
    n_c: usize,
    samples: &[ChannelSample],
) -> Result<()> {
    let n_t = n_h * n_v;
    let has_paths = samples.first().map(|s| s.paths.is_some()).unwrap_or(false);
    for s in samples {
        if s.h.dim() != (n_t, n_c) {
            return Err(Error::ShapeMismatch {
                expected: (n_t, n_c),
                got: s.h.dim(),
            });
        }
        if s.paths.is_some() != has_paths {
            return Err(Error::InvalidConfig(
                "samples must uniformly have or lack path tables".into(),
            ));
        }
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(CSIT_MAGIC)?;
    w.write_all(&CSIT_VERSION.to_le_bytes())?;
    w.write_all(&(samples.len() as u32).to_le_bytes())?;
    for dim in [n_h, n_v, n_c] {
        w.write_all(&(dim as u16).to_le_bytes())?;
    }
    w.write_all(&[u8::from(has_paths)])?;
    for s in samples {
        for z in s.h.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        if let Some(paths) = &s.paths {
            w.write_all(&(paths.len() as u32).to_le_bytes())?;
            for p in paths {
                w.write_all(&p.cluster_id.to_le_bytes())?;
                for v in [p.gain.re, p.gain.im, p.aaod_rad, p.eaod_rad, p.delay_s] {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::TruncatedFile)
}

fn read_u16(r: &mut impl Read) -> Result<u16> {
    let mut b = [0u8; 2];
    read_exact_or_truncated(r, &mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact_or_truncated(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Read a `.csit` file; validates magic and version.
pub fn read_csit(path: &Path) -> Result<(CsitHeader, Vec<ChannelSample>)> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic)?;
    if &magic != CSIT_MAGIC {
        return Err(Error::BadMagic);
    }
    let version = read_u16(&mut r)?;
    if version != CSIT_VERSION {
        return Err(Error::BadVersion(version));
    }
    let samples = read_u32(&mut r)?;
    let n_h = read_u16(&mut r)?;
    let n_v = read_u16(&mut r)?;
    let n_c = read_u16(&mut r)?;
    let mut flags = [0u8; 1];
    read_exact_or_truncated(&mut r, &mut flags)?;
    let header = CsitHeader {
        n_h,
        n_v,
        n_c,
        has_paths: flags[0] & 1 != 0,
        samples,
    };
    let n_t = header.n_t();
    let n_cols = n_c as usize;
    let mut out = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        let mut h = CMat::zeros((n_t, n_cols));
        for i in 0..n_t {
            for j in 0..n_cols {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                h[(i, j)] = C64::new(re, im);
            }
        }
        let paths = if header.has_paths {
            let count = read_u32(&mut r)?;
            let mut list = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let cluster_id = read_u32(&mut r)?;
                let gain_re = read_f64(&mut r)?;
                let gain_im = read_f64(&mut r)?;
                let aaod = read_f64(&mut r)?;
                let eaod = read_f64(&mut r)?;
                let delay = read_f64(&mut r)?;
                list.push(PathComponent {
                    gain: C64::new(gain_re, gain_im),
                    aaod_rad: aaod,
                    eaod_rad: eaod,
                    delay_s: delay,
                    cluster_id,
                });
            }
            Some(list)
        } else {
            None
        };
        out.push(ChannelSample {
            h,
            env_id: String::new(),
            paths,
        });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::InvalidConfig("trailing bytes after samples".into()));
    }
    Ok((header, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_environment, ArrayGeometry, EnvironmentConfig};

    fn env() -> EnvironmentConfig {
        EnvironmentConfig {
            id: "t".into(),
            cluster_count_range: (1, 3),
            aaod_sector_rad: (-1.0, 1.0),
            eaod_sector_rad: (1.0, 2.0),
            delay_range_s: (0.0, 500e-9),
            aod_spread_rad: 0.05,
            delay_spread_s: 4.7e-9,
            paths_per_cluster: 5,
            power_decay_db_per_cluster: 3.0,
            seed: 3,
        }
    }

    #[test]
    fn roundtrip_with_paths_is_bitwise() {
        let geom = ArrayGeometry::new(8, 4, 32, 10e6).unwrap();
        let samples = sample_environment(&env(), 100, &geom).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csit");
        write_csit(&path, 8, 4, 32, &samples).unwrap();
        let (header, back) = read_csit(&path).unwrap();
        assert_eq!((header.n_h, header.n_v, header.n_c), (8, 4, 32));
        assert!(header.has_paths);
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(back.iter()) {
            assert_eq!(a.h, b.h);
            assert_eq!(a.paths, b.paths);
        }
    }

    #[test]
    fn flag_zero_reads_without_paths() {
        let geom = ArrayGeometry::new(4, 2, 8, 1e6).unwrap();
        let mut samples = sample_environment(&env(), 3, &geom).unwrap();
        for s in &mut samples {
            s.paths = None;
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("np.csit");
        write_csit(&path, 4, 2, 8, &samples).unwrap();
        let (header, back) = read_csit(&path).unwrap();
        assert!(!header.has_paths);
        assert!(back.iter().all(|s| s.paths.is_none()));
    }

    #[test]
    fn bad_magic_version_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csit");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(read_csit(&path), Err(Error::BadMagic)));

        let geom = ArrayGeometry::new(4, 2, 8, 1e6).unwrap();
        let samples = sample_environment(&env(), 2, &geom).unwrap();
        write_csit(&path, 4, 2, 8, &samples).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // Flip the version field.
        let mut bad = bytes.clone();
        bad[4] = 9;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_csit(&path), Err(Error::BadVersion(9))));
        // Truncate mid-sample.
        std::fs::write(&path, &bytes[..bytes.len() - 11]).unwrap();
        assert!(matches!(read_csit(&path), Err(Error::TruncatedFile)));
    }
}
