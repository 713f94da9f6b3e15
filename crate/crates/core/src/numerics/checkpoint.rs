//! Binary parameter checkpoints.
//!
//! Layout: magic `RCNN1\0`, little-endian `u32` entry count, then per entry a
//! `u32` name length, the UTF-8 name, a `u8` dtype code (0 = f64, 1 = f32), a
//! `u32` rank, `rank` little-endian `u32` dims and the raw little-endian data.

use std::path::Path;

use super::{DType, NumericsError, ParameterStore, Scalar, Tensor};

pub const MAGIC: &[u8; 6] = b"RCNN1\0";

/// One stored tensor, kept in the precision it was written with.
#[derive(Clone, Debug, PartialEq)]
pub enum StoredTensor {
    F64(Tensor<f64>),
    F32(Tensor<f32>),
}

impl StoredTensor {
    pub fn shape(&self) -> &[usize] {
        match self {
            StoredTensor::F64(t) => t.shape(),
            StoredTensor::F32(t) => t.shape(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        match self {
            StoredTensor::F64(t) => t.cast(),
            StoredTensor::F32(t) => t.cast(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Checkpoint {
    pub entries: Vec<(String, StoredTensor)>,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn write_tensor<T: Scalar>(out: &mut Vec<u8>, t: &Tensor<T>) {
    out.push(T::DTYPE.code());
    put_u32(out, t.rank());
    for &d in t.shape() {
        put_u32(out, d);
    }
    for &x in t.data() {
        x.write_le(out);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NumericsError> {
        if self.pos + n > self.bytes.len() {
            return Err(NumericsError::Truncated(self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, NumericsError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn tensor<T: Scalar>(&mut self, shape: Vec<usize>) -> Result<Tensor<T>, NumericsError> {
        let n: usize = shape.iter().product();
        let w = T::DTYPE.width();
        let raw = self.take(n * w)?;
        let data = raw.chunks_exact(w).map(T::read_le).collect();
        Ok(Tensor::new(shape, data)?)
    }
}

impl Checkpoint {
    pub fn from_store<T: Scalar>(store: &ParameterStore<T>) -> Self {
        let entries = store
            .iter()
            .map(|(name, p)| {
                let t = match T::DTYPE {
                    DType::F64 => StoredTensor::F64(p.value.cast()),
                    DType::F32 => StoredTensor::F32(p.value.cast()),
                };
                (name.to_string(), t)
            })
            .collect();
        Checkpoint { entries }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, self.entries.len());
        for (name, t) in &self.entries {
            put_u32(&mut out, name.len());
            out.extend_from_slice(name.as_bytes());
            match t {
                StoredTensor::F64(t) => write_tensor(&mut out, t),
                StoredTensor::F32(t) => write_tensor(&mut out, t),
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NumericsError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(NumericsError::BadMagic);
        }
        let mut r = Reader {
            bytes,
            pos: MAGIC.len(),
        };
        let count = r.u32()?;
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u32()?;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| NumericsError::BadName(r.pos))?
                .to_string();
            let code = r.take(1)?[0];
            let dtype = DType::from_code(code).ok_or(NumericsError::BadDtype(code))?;
            let rank = r.u32()?;
            let shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            let t = match dtype {
                DType::F64 => StoredTensor::F64(r.tensor(shape)?),
                DType::F32 => StoredTensor::F32(r.tensor(shape)?),
            };
            entries.push((name, t));
        }
        if r.pos != bytes.len() {
            return Err(NumericsError::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(Checkpoint { entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), NumericsError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NumericsError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Copies stored values into a store with matching names and shapes.
    pub fn restore_into<T: Scalar>(&self, store: &mut ParameterStore<T>) -> Result<(), NumericsError> {
        if self.entries.len() != store.len() {
            return Err(NumericsError::EntryCount {
                expected: store.len(),
                actual: self.entries.len(),
            });
        }
        for (name, t) in &self.entries {
            let p = store
                .get_mut(name)
                .ok_or_else(|| NumericsError::UnknownName(name.clone()))?;
            if p.value.shape() != t.shape() {
                return Err(NumericsError::Tensor(super::TensorError::ShapeMismatch {
                    op: "restore",
                    left: p.value.shape().to_vec(),
                    right: t.shape().to_vec(),
                }));
            }
            p.value = t.cast();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let mut store = ParameterStore::<f32>::new();
        store
            .insert("b", Tensor::new(vec![2], vec![1.5, -2.0]).unwrap())
            .unwrap();
        let bytes = Checkpoint::from_store(&store).to_bytes();
        let mut expected = b"RCNN1\0".to_vec();
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.push(b'b');
        expected.push(1);
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1.5f32.to_le_bytes());
        expected.extend_from_slice(&(-2.0f32).to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn bad_magic_and_truncation() {
        assert!(matches!(
            Checkpoint::from_bytes(b"NOPE\0\0\0\0\0\0"),
            Err(NumericsError::BadMagic)
        ));
        let mut store = ParameterStore::<f64>::new();
        store.insert("w", Tensor::zeros(&[3, 2])).unwrap();
        let bytes = Checkpoint::from_store(&store).to_bytes();
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() - 1]),
            Err(NumericsError::Truncated(_))
        ));
    }
}
