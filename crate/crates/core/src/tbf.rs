//! Tensor-blob files: `TBF1` magic, little-endian `u32` header length, a
//! UTF-8 JSON header `{"dtype":"f32le","shape":[...]}`, then the row-major
//! little-endian `f32` payload.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TBF1";
pub const DTYPE_F32LE: &str = "f32le";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dtype: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_string(&Header {
            dtype: DTYPE_F32LE.into(),
            shape: self.shape.clone(),
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(8 + header.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(Error::format("magic", "expected `TBF1`"));
        }
        let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let header_end = 8usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::format("header", "header length exceeds file size"))?;
        let header_text = std::str::from_utf8(&bytes[8..header_end])
            .map_err(|_| Error::format("header", "not valid UTF-8"))?;
        let header: Header = serde_json::from_str(header_text)
            .map_err(|e| Error::format("header", e.to_string()))?;
        if header.dtype != DTYPE_F32LE {
            return Err(Error::format(
                "dtype",
                format!("unsupported `{}`, expected `{DTYPE_F32LE}`", header.dtype),
            ));
        }
        let n = header
            .shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format("shape", "element count overflows"))?;
        let payload = &bytes[header_end..];
        if payload.len() != 4 * n {
            return Err(Error::format(
                "payload",
                format!(
                    "shape {:?} needs {} bytes, found {}",
                    header.shape,
                    4 * n,
                    payload.len()
                ),
            ));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            shape: header.shape,
            data,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_stable() {
        let t = Tensor::new(vec![2], vec![1.0, -2.5]).unwrap();
        let b = t.to_bytes();
        assert_eq!(&b[..4], b"TBF1");
        let hl = u32::from_le_bytes(b[4..8].try_into().unwrap()) as usize;
        assert_eq!(&b[8..8 + hl], br#"{"dtype":"f32le","shape":[2]}"#);
        assert_eq!(&b[8 + hl..8 + hl + 4], &1.0f32.to_le_bytes());
    }

    fn field_of(err: Error) -> String {
        match err {
            Error::Format { field, .. } => field,
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs_name_the_field() {
        let good = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap().to_bytes();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert_eq!(field_of(Tensor::from_bytes(&bad_magic).unwrap_err()), "magic");

        let truncated = &good[..good.len() - 1];
        assert_eq!(field_of(Tensor::from_bytes(truncated).unwrap_err()), "payload");

        let header = br#"{"dtype":"f64le","shape":[1]}"#;
        let mut bad_dtype = b"TBF1".to_vec();
        bad_dtype.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bad_dtype.extend_from_slice(header);
        bad_dtype.extend_from_slice(&[0; 8]);
        assert_eq!(field_of(Tensor::from_bytes(&bad_dtype).unwrap_err()), "dtype");

        let mut bad_len = good;
        bad_len[4..8].copy_from_slice(&9999u32.to_le_bytes());
        assert_eq!(field_of(Tensor::from_bytes(&bad_len).unwrap_err()), "header");
    }

    proptest! {
        #[test]
        fn round_trip(shape in proptest::collection::vec(1usize..4, 0..4), seed in any::<u32>()) {
            let n: usize = shape.iter().product();
            let data: Vec<f32> = (0..n).map(|i| (i as f32 + seed as f32).sin()).collect();
            let t = Tensor::new(shape, data).unwrap();
            prop_assert_eq!(Tensor::from_bytes(&t.to_bytes()).unwrap(), t);
        }
    }
}
