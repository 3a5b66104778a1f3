//! `TNSR` binary tensors: magic, version, dtype, rank, little-endian `u32`
//! dims, then the row-major payload.

use std::path::Path;

use crate::error::IoContext;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TNSR";
const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum TnsrData {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

impl TnsrData {
    fn len(&self) -> usize {
        match self {
            TnsrData::F32(v) => v.len(),
            TnsrData::U8(v) => v.len(),
        }
    }

    fn dtype(&self) -> u8 {
        match self {
            TnsrData::F32(_) => 0,
            TnsrData::U8(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TnsrFile {
    pub dims: Vec<usize>,
    pub data: TnsrData,
}

impl TnsrFile {
    pub fn f32(dims: &[usize], data: Vec<f32>) -> Result<Self> {
        Self::checked(dims, TnsrData::F32(data))
    }

    pub fn u8(dims: &[usize], data: Vec<u8>) -> Result<Self> {
        Self::checked(dims, TnsrData::U8(data))
    }

    fn checked(dims: &[usize], data: TnsrData) -> Result<Self> {
        if dims.len() > u8::MAX as usize || dims.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::Contract(format!("dims {dims:?} not representable")));
        }
        if dims.iter().product::<usize>() != data.len() {
            return Err(Error::Contract(format!("dims {dims:?} vs payload of {}", data.len())));
        }
        Ok(TnsrFile { dims: dims.to_vec(), data })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(7 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.data.dtype());
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        match &self.data {
            TnsrData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TnsrData::U8(v) => out.extend_from_slice(v),
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |detail: String| Error::Format { kind: "TNSR", path: path.to_path_buf(), detail };
        if bytes.len() < 7 || &bytes[..4] != MAGIC {
            return Err(bad("missing TNSR magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(bad(format!("unsupported version {}", bytes[4])));
        }
        let (dtype, ndim) = (bytes[5], bytes[6] as usize);
        let header = 7 + 4 * ndim;
        if bytes.len() < header {
            return Err(bad("truncated dims".into()));
        }
        let dims: Vec<usize> = bytes[7..header]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
            .collect();
        let count = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| bad("dims overflow".into()))?;
        let payload = &bytes[header..];
        let data = match dtype {
            0 if payload.len() == 4 * count => TnsrData::F32(
                payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect(),
            ),
            1 if payload.len() == count => TnsrData::U8(payload.to_vec()),
            0 | 1 => return Err(bad(format!("payload of {} bytes for dims {dims:?}", payload.len()))),
            d => return Err(bad(format!("unknown dtype {d}"))),
        };
        Ok(TnsrFile { dims, data })
    }

    pub fn into_f32(self, path: &Path) -> Result<(Vec<usize>, Vec<f32>)> {
        match self.data {
            TnsrData::F32(v) => Ok((self.dims, v)),
            TnsrData::U8(_) => Err(Error::Format {
                kind: "TNSR",
                path: path.to_path_buf(),
                detail: "expected f32 payload, found u8".into(),
            }),
        }
    }
}

pub fn write_tnsr(path: &Path, file: &TnsrFile) -> Result<()> {
    std::fs::write(path, file.encode()).at(path)
}

pub fn read_tnsr(path: &Path) -> Result<TnsrFile> {
    let bytes = std::fs::read(path).at(path)?;
    TnsrFile::decode(&bytes, path)
}

pub fn write_f32(path: &Path, dims: &[usize], data: &[f32]) -> Result<()> {
    write_tnsr(path, &TnsrFile::f32(dims, data.to_vec())?)
}

pub fn read_f32(path: &Path) -> Result<(Vec<usize>, Vec<f32>)> {
    read_tnsr(path)?.into_f32(path)
}
