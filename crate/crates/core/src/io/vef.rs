//! VEF1 binary feature files.
//!
//! Layout (little-endian): magic `VEF1`, `u32` row count, `u32` column count,
//! then `rows * cols` IEEE-754 `f32` values in row-major order. Values are
//! widened to `f64` on read.

use std::fs;
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::numeric::DenseMatrix;

pub const MAGIC: &[u8; 4] = b"VEF1";
const HEADER_LEN: usize = 12;

pub fn encode(m: &DenseMatrix) -> Result<Vec<u8>> {
    if m.rows() == 0 {
        return Err(Error::invalid("cannot store a matrix with zero rows"));
    }
    if m.cols() == 0 {
        return Err(Error::invalid("cannot store a matrix with zero columns"));
    }
    let rows = u32::try_from(m.rows()).map_err(|_| Error::invalid("too many rows for VEF1"))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::invalid("too many columns for VEF1"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for (index, &v) in m.data().iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::NonFinite { index });
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<DenseMatrix, FormatError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        let mut found = [0u8; 4];
        let n = bytes.len().min(4);
        found[..n].copy_from_slice(&bytes[..n]);
        return Err(FormatError::BadMagic { found });
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows == 0 {
        return Err(FormatError::EmptyDimension("rows"));
    }
    if cols == 0 {
        return Err(FormatError::EmptyDimension("columns"));
    }
    let expected = HEADER_LEN + 4 * rows * cols;
    if bytes.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(FormatError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(FormatError::NonFinite {
                row: i / cols,
                col: i % cols,
            });
        }
        data.push(f64::from(v));
    }
    Ok(DenseMatrix::from_trusted(rows, cols, data))
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_feature_file(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let bytes = encode(m)?;
    super::write_atomic(path.as_ref(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(rows: u32, cols: u32) -> Vec<u8> {
        let mut b = MAGIC.to_vec();
        b.extend_from_slice(&rows.to_le_bytes());
        b.extend_from_slice(&cols.to_le_bytes());
        b
    }

    #[test]
    fn reads_two_by_three() {
        let mut b = header(2, 3);
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        let m = decode(&b).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn bit_exact_layout() {
        let m = DenseMatrix::new(1, 2, vec![1.0, -2.5]).unwrap();
        let b = encode(&m).unwrap();
        assert_eq!(
            b,
            [
                b'V', b'E', b'F', b'1', 1, 0, 0, 0, 2, 0, 0, 0, 0x00, 0x00, 0x80, 0x3f, 0x00,
                0x00, 0x20, 0xc0
            ]
        );
    }

    #[test]
    fn distinct_error_kinds() {
        let mut b = header(2, 3);
        for v in [1.0f32; 5] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(decode(&b), Err(FormatError::Truncated { .. })));

        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(FormatError::BadMagic { .. })));

        b.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode(&b),
            Err(FormatError::NonFinite { row: 1, col: 2 })
        ));

        b.extend_from_slice(&[0u8; 4]);
        assert!(matches!(decode(&b), Err(FormatError::TrailingBytes { extra: 4 })));

        assert!(matches!(decode(&header(0, 3)), Err(FormatError::EmptyDimension(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vef");
        let m = DenseMatrix::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        write_feature_file(&path, &m).unwrap();
        let back = read_feature_file(&path).unwrap();
        for (a, b) in m.data().iter().zip(back.data()) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn rejects_f32_overflow() {
        let m = DenseMatrix::new(1, 1, vec![1e300]).unwrap();
        assert!(encode(&m).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_lossless_at_f32(
            rows in 1usize..100, cols in 1usize..64, seed in any::<u64>()
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1e3..1e3)).collect();
            let m = DenseMatrix::new(rows, cols, data).unwrap();
            let back = decode(&encode(&m).unwrap()).unwrap();
            prop_assert_eq!((back.rows(), back.cols()), (rows, cols));
            for (a, b) in m.data().iter().zip(back.data()) {
                prop_assert_eq!(*a as f32, *b as f32);
            }
            // a second pass is exact
            let again = decode(&encode(&back).unwrap()).unwrap();
            prop_assert_eq!(again, back);
        }
    }
}
