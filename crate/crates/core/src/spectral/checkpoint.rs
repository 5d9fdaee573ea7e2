//! Binary checkpoint format.
//!
//! ```text
//! magic    b"NSVF"
//! version  u32
//! N        u32
//! L        f64
//! nu       f64
//! alpha    f64
//! time     f64
//! body     ((N-1)^3 - 1) / 2 coefficients
//! ```
//!
//! All numbers little-endian. The body walks `j` lexicographically with each
//! component in `[-N/2+1, N/2-1]` and stores only the canonical half (first
//! nonzero component positive); each `u_j` is six `f64`s
//! `re x, im x, re y, im y, re z, im z`. Conjugate partners are rebuilt on read.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::{SpectralField, Vec3c, ZERO3};
use super::lattice::{WaveLattice, Wavevector};
use super::random::is_canonical;
use crate::error::{NsvError, Result};

pub const MAGIC: &[u8; 4] = b"NSVF";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 8 * 4;
const COEFF_LEN: usize = 48;
/// Refuse to decode lattices larger than this.
pub const MAX_N: u32 = 1024;

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub field: SpectralField,
    pub nu: f64,
    pub alpha: f64,
    pub time: f64,
}

/// Number of stored coefficients for resolution `n`.
pub fn body_count(n: u64) -> u64 {
    let m = n - 1;
    (m * m * m - 1) / 2
}

fn canonical_order(n: usize) -> impl Iterator<Item = Wavevector> {
    let lim = n as i64 / 2 - 1;
    (-lim..=lim).flat_map(move |a| {
        (-lim..=lim).flat_map(move |b| (-lim..=lim).map(move |c| [a, b, c]))
    })
    .filter(|&j| is_canonical(j))
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let lat = ckpt.field.lattice();
    let n = lat.n();
    let count = body_count(n as u64) as usize;
    let mut out = Vec::with_capacity(HEADER_LEN + count * COEFF_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in [lat.length(), ckpt.nu, ckpt.alpha, ckpt.time] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for j in canonical_order(n) {
        let u = ckpt.field.coeff(j).unwrap_or(ZERO3);
        for c in u {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| NsvError::Checkpoint("truncated".into()))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Header fields of a checkpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub n: u32,
    pub length: f64,
    pub nu: f64,
    pub alpha: f64,
    pub time: f64,
}

fn read_header(r: &mut Reader) -> Result<CheckpointHeader> {
    if &r.take::<4>()? != MAGIC {
        return Err(NsvError::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(NsvError::Checkpoint(format!("unsupported version {version}")));
    }
    let n = r.u32()?;
    if n < 4 || n % 2 != 0 || n > MAX_N {
        return Err(NsvError::Checkpoint(format!("invalid resolution {n}")));
    }
    let length = r.f64()?;
    let nu = r.f64()?;
    let alpha = r.f64()?;
    let time = r.f64()?;
    if !(length > 0.0 && length.is_finite()) {
        return Err(NsvError::Checkpoint(format!("invalid box length {length}")));
    }
    if ![nu, alpha, time].iter().all(|v| v.is_finite()) {
        return Err(NsvError::Checkpoint("non-finite header value".into()));
    }
    Ok(CheckpointHeader {
        n,
        length,
        nu,
        alpha,
        time,
    })
}

/// Parses only the fixed-size header.
pub fn decode_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    read_header(&mut Reader { bytes, pos: 0 })
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    let CheckpointHeader {
        n,
        length,
        nu,
        alpha,
        time,
    } = read_header(&mut r)?;
    let expected = HEADER_LEN as u64 + body_count(n as u64) * COEFF_LEN as u64;
    if bytes.len() as u64 != expected {
        return Err(NsvError::Checkpoint(format!(
            "expected {expected} bytes for N={n}, found {}",
            bytes.len()
        )));
    }
    let lattice = WaveLattice::new(n as usize, length)?;
    let mut coeffs = vec![ZERO3; lattice.len()];
    for j in canonical_order(n as usize) {
        let mut u: Vec3c = ZERO3;
        for c in u.iter_mut() {
            *c = Complex64::new(r.f64()?, r.f64()?);
        }
        let idx = lattice.index_of(j).expect("canonical order stays on the lattice");
        coeffs[idx] = u;
        coeffs[lattice.negated(idx)] = [u[0].conj(), u[1].conj(), u[2].conj()];
    }
    let field = SpectralField::from_coeffs(&lattice, coeffs)
        .map_err(|e| NsvError::Checkpoint(e.to_string()))?;
    Ok(Checkpoint {
        field,
        nu,
        alpha,
        time,
    })
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode(ckpt))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode(&fs::read(path)?)
}

pub fn read_checkpoint_header(path: &Path) -> Result<CheckpointHeader> {
    let mut buf = [0u8; HEADER_LEN];
    fs::File::open(path)?
        .read_exact(&mut buf)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => NsvError::Checkpoint("truncated header".into()),
            _ => NsvError::Io(e),
        })?;
    decode_header(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::random_divfree_field;

    fn sample() -> Checkpoint {
        let lat = WaveLattice::new(8, 2.5).unwrap();
        Checkpoint {
            field: random_divfree_field(&lat, 9, |k| 1.0 / (1.0 + k)),
            nu: 0.1,
            alpha: 0.25,
            time: 3.5,
        }
    }

    #[test]
    fn layout_and_size() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[..4], b"NSVF");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 2.5);
        assert_eq!(bytes.len(), HEADER_LEN + 171 * 48);
        // first stored mode is j = (0, 0, 1)
        let first: Vec<f64> = (0..6)
            .map(|k| {
                let o = HEADER_LEN + 8 * k;
                f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap())
            })
            .collect();
        let u = sample().field.coeff([0, 0, 1]).unwrap();
        assert_eq!(first, vec![u[0].re, u[0].im, u[1].re, u[1].im, u[2].re, u[2].im]);
    }

    #[test]
    fn decode_inverts_encode() {
        let ckpt = sample();
        let back = decode(&encode(&ckpt)).unwrap();
        assert_eq!(back.field.max_abs_diff(&ckpt.field), 0.0);
        assert_eq!((back.nu, back.alpha, back.time), (0.1, 0.25, 3.5));
    }

    #[test]
    fn rejects_corruption() {
        let good = encode(&sample());
        assert!(decode(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = good.clone();
        bad[8] = 7;
        assert!(decode(&bad).is_err());
        // make the first stored mode compressible
        let mut bad = good;
        bad[HEADER_LEN + 32..HEADER_LEN + 40].copy_from_slice(&5.0f64.to_le_bytes());
        assert!(decode(&bad).is_err());
    }
}
