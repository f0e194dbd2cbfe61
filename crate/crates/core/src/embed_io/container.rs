//! The `UCLB` binary container for representation matrices.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    4 bytes  "UCLB"
//! version  u32      1
//! rows     u32
//! dim      u32
//! dtype    u8       1 = f32 LE, 2 = f64 LE
//! name_len u32
//! name     name_len bytes of UTF-8
//! payload  rows * dim values, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::numerics::Matrix;

pub const MAGIC: [u8; 4] = *b"UCLB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32 = 1,
    F64 = 2,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn from_tag(tag: u8) -> std::result::Result<Self, FormatError> {
        match tag {
            1 => Ok(Dtype::F32),
            2 => Ok(Dtype::F64),
            other => Err(FormatError::UnknownDtype(other)),
        }
    }
}

/// A named matrix of embeddings, one row per item.
///
/// With [`Dtype::F32`] the values are rounded to single precision on
/// construction, so what [`matrix`](Self::matrix) returns is exactly what a
/// write/read cycle reproduces.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingContainer {
    name: String,
    dtype: Dtype,
    data: Matrix,
}

impl EmbeddingContainer {
    /// Single-precision container (the common interchange case).
    pub fn new(name: impl Into<String>, data: Matrix) -> Result<Self> {
        Self::with_dtype(name, data, Dtype::F32)
    }

    pub fn with_dtype(name: impl Into<String>, data: Matrix, dtype: Dtype) -> Result<Self> {
        if let Some(((row, col), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(FormatError::NonFiniteValue { row, col }.into());
        }
        let data = match dtype {
            Dtype::F32 => {
                let rounded = data.mapv(|v| v as f32 as f64);
                if let Some(((row, col), _)) = rounded.indexed_iter().find(|(_, v)| !v.is_finite())
                {
                    return Err(FormatError::NonFiniteValue { row, col }.into());
                }
                rounded
            }
            Dtype::F64 => data,
        };
        let name = name.into();
        if u32::try_from(data.nrows()).is_err()
            || u32::try_from(data.ncols()).is_err()
            || u32::try_from(name.len()).is_err()
        {
            return Err(Error::InvalidArgument(
                "container dimensions exceed u32".into(),
            ));
        }
        Ok(Self { name, dtype, data })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.rows() as u32).to_le_bytes())?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        w.write_all(&[self.dtype as u8])?;
        w.write_all(&(self.name.len() as u32).to_le_bytes())?;
        w.write_all(self.name.as_bytes())?;
        let mut payload = Vec::with_capacity(self.data.len() * self.dtype.width());
        for v in self.data.iter() {
            match self.dtype {
                Dtype::F32 => payload.extend_from_slice(&(*v as f32).to_le_bytes()),
                Dtype::F64 => payload.extend_from_slice(&v.to_le_bytes()),
            }
        }
        w.write_all(&payload)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    /// Reads one container, consuming exactly its bytes from `r`.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_header_bytes(&mut r, &mut magic)?;
        if magic != MAGIC {
            return Err(FormatError::BadMagic(magic).into());
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version).into());
        }
        let rows = read_u32(&mut r)? as usize;
        let dim = read_u32(&mut r)? as usize;
        let mut tag = [0u8; 1];
        read_header_bytes(&mut r, &mut tag)?;
        let dtype = Dtype::from_tag(tag[0])?;
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        read_header_bytes(&mut r, &mut name)?;
        let name = String::from_utf8(name).map_err(|_| FormatError::BadName)?;

        let expected = rows
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(dtype.width()))
            .ok_or(FormatError::PayloadLengthMismatch {
                expected: usize::MAX,
                found: 0,
            })?;
        let mut payload = Vec::with_capacity(expected.min(1 << 28));
        r.by_ref().take(expected as u64).read_to_end(&mut payload)?;
        if payload.len() != expected {
            return Err(FormatError::PayloadLengthMismatch {
                expected,
                found: payload.len(),
            }
            .into());
        }
        let values: Vec<f64> = match dtype {
            Dtype::F32 => payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect(),
            Dtype::F64 => payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
        };
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(FormatError::NonFiniteValue {
                row: pos / dim.max(1),
                col: pos % dim.max(1),
            }
            .into());
        }
        let data =
            Matrix::from_shape_vec((rows, dim), values).map_err(|e| Error::Shape(e.to_string()))?;
        Ok(Self { name, dtype, data })
    }

    /// Parses a buffer holding exactly one container.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = std::io::Cursor::new(bytes);
        let c = Self::read_from(&mut cursor)?;
        let used = cursor.position() as usize;
        if used != bytes.len() {
            let expected = c.rows() * c.dim() * c.dtype.width();
            return Err(FormatError::PayloadLengthMismatch {
                expected,
                found: expected + bytes.len() - used,
            }
            .into());
        }
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Text import: a `dim=<d>` header line followed by one comma-separated
    /// embedding per line. Blank lines are skipped.
    pub fn from_csv_text(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(FormatError::BadText {
            line: 1,
            reason: "missing dim=<d> header".into(),
        })?;
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| FormatError::BadText {
                line: 1,
                reason: format!("bad header {header:?}"),
            })?;
        let mut values = Vec::new();
        let mut rows = 0;
        for (idx, line) in lines {
            let before = values.len();
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| FormatError::BadText {
                    line: idx + 1,
                    reason: format!("not a number: {field:?}"),
                })?;
                values.push(v);
            }
            if values.len() - before != dim {
                return Err(FormatError::BadText {
                    line: idx + 1,
                    reason: format!("expected {dim} values, found {}", values.len() - before),
                }
                .into());
            }
            rows += 1;
        }
        let data =
            Matrix::from_shape_vec((rows, dim), values).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(name, data)
    }
}

fn read_header_bytes<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(FormatError::TruncatedHeader),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_header_bytes(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn sample() -> EmbeddingContainer {
        EmbeddingContainer::new("captions", array![[0.5, -1.25, 3.0], [1e-3, 2.0, -0.75]]).unwrap()
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[0..4], b"UCLB");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &3u32.to_le_bytes());
        assert_eq!(bytes[16], 1);
        assert_eq!(&bytes[17..21], &8u32.to_le_bytes());
        assert_eq!(&bytes[21..29], b"captions");
        assert_eq!(bytes.len(), 29 + 6 * 4);
        assert_eq!(&bytes[29..33], &0.5f32.to_le_bytes());
    }

    #[test]
    fn roundtrip_identical_matrix() {
        let c = sample();
        let back = EmbeddingContainer::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn truncated_payload_rejected() {
        let mut bytes = sample().to_bytes();
        bytes.pop();
        let err = EmbeddingContainer::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("payload length mismatch"), "{err}");
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = sample().to_bytes();
        bytes.push(0);
        assert!(matches!(
            EmbeddingContainer::from_bytes(&bytes),
            Err(Error::Format(FormatError::PayloadLengthMismatch { .. }))
        ));
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            EmbeddingContainer::from_bytes(&bytes),
            Err(Error::Format(FormatError::BadMagic(_)))
        ));
        let mut bytes = sample().to_bytes();
        bytes[4] = 2;
        assert!(matches!(
            EmbeddingContainer::from_bytes(&bytes),
            Err(Error::Format(FormatError::UnsupportedVersion(2)))
        ));
        assert!(matches!(
            EmbeddingContainer::from_bytes(&sample().to_bytes()[..10]),
            Err(Error::Format(FormatError::TruncatedHeader))
        ));
    }

    #[test]
    fn nan_refused_on_write() {
        let err = EmbeddingContainer::new("x", array![[1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(
            err,
            Error::Format(FormatError::NonFiniteValue { row: 0, col: 1 })
        ));
        // finite in f64 but overflows f32
        assert!(EmbeddingContainer::new("x", array![[1e300]]).is_err());
    }

    #[test]
    fn csv_import() {
        let c = EmbeddingContainer::from_csv_text("t", "dim=2\n1.0, 2.5\n\n-3,4\n").unwrap();
        assert_eq!(c.matrix(), &array![[1.0, 2.5], [-3.0, 4.0]]);
        assert!(EmbeddingContainer::from_csv_text("t", "dim=2\n1,2,3\n").is_err());
        assert!(EmbeddingContainer::from_csv_text("t", "2\n1,2\n").is_err());
    }

    proptest! {
        #[test]
        fn byte_identical_roundtrip(
            rows in 0usize..6,
            dim in 1usize..5,
            seed in any::<u64>(),
            wide in any::<bool>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data = Matrix::from_shape_simple_fn((rows, dim), || rng.gen_range(-1e6..1e6));
            let dtype = if wide { Dtype::F64 } else { Dtype::F32 };
            let c = EmbeddingContainer::with_dtype("p", data, dtype).unwrap();
            let bytes = c.to_bytes();
            let back = EmbeddingContainer::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
            prop_assert_eq!(back, c);
        }
    }
}
