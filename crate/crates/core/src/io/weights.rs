//! Binary weights container, little-endian:
//!
//! ```text
//! magic "PDFW" | u16 major | u16 minor
//! u32 len | activation name (utf-8)
//! u32 layer count
//! per layer: u32 inputs | u32 outputs | f32 W[inputs][outputs] | f32 b[outputs]
//! u32 len | training config fingerprint (utf-8)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::filter::{Activation, Dense, FilterModel};

use super::{FORMAT_MAJOR, FORMAT_MINOR};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"PDFW";

#[derive(Debug, Clone, PartialEq)]
pub struct WeightsFile {
    pub model: FilterModel,
    pub fingerprint: String,
    pub version: (u16, u16),
}

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_str(buf: &mut Vec<u8>, s: &str) -> Result<()> {
    put_u32(buf, s.len())?;
    buf.extend_from_slice(s.as_bytes());
    Ok(())
}

/// Serializes `model`. Parameters are stored as f32.
pub fn write_weights(model: &FilterModel, fingerprint: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(WEIGHTS_MAGIC);
    buf.extend_from_slice(&FORMAT_MAJOR.to_le_bytes());
    buf.extend_from_slice(&FORMAT_MINOR.to_le_bytes());
    put_str(&mut buf, model.activation().name())?;
    put_u32(&mut buf, model.layers().len())?;
    for layer in model.layers() {
        put_u32(&mut buf, layer.inputs)?;
        put_u32(&mut buf, layer.outputs)?;
        for &x in layer.weights.iter().chain(&layer.bias) {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    put_str(&mut buf, fingerprint)?;
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("weights file truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::Format("layer too large".into()))?,
        )?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect())
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("string is not utf-8".into()))
    }
}

pub fn read_weights(bytes: &[u8]) -> Result<WeightsFile> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != WEIGHTS_MAGIC {
        return Err(Error::Format("not a weights file".into()));
    }
    let major = r.u16()?;
    let minor = r.u16()?;
    if major != FORMAT_MAJOR {
        return Err(Error::Format(format!("unsupported format version {major}.{minor}")));
    }
    let activation: Activation = r.string()?.parse()?;
    let n = r.u32()?;
    let mut layers = Vec::with_capacity(n.min(16));
    for _ in 0..n {
        let inputs = r.u32()?;
        let outputs = r.u32()?;
        let weights = r.f32s(inputs * outputs)?;
        let bias = r.f32s(outputs)?;
        layers.push(Dense {
            inputs,
            outputs,
            weights,
            bias,
        });
    }
    let fingerprint = r.string()?;
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after weights".into()));
    }
    Ok(WeightsFile {
        model: FilterModel::from_layers(layers, activation)?,
        fingerprint,
        version: (major, minor),
    })
}

pub fn save_weights(path: &Path, model: &FilterModel, fingerprint: &str) -> Result<()> {
    fs::write(path, write_weights(model, fingerprint)?).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<WeightsFile> {
    read_weights(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::layer_widths;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn round_trip_forward_is_bitwise_equal() {
        let mut r = rng::seeded(3);
        let model = FilterModel::random(&layer_widths(32, 32, 2), Activation::Relu, &mut r).unwrap();
        let bytes = write_weights(&model, "{\"epochs\":1}").unwrap();
        let back = read_weights(&bytes).unwrap();
        assert_eq!(back.fingerprint, "{\"epochs\":1}");
        assert_eq!(back.version, (1, 0));
        assert_eq!(write_weights(&back.model, &back.fingerprint).unwrap(), bytes);
        for _ in 0..1_000 {
            let x: Vec<f64> = (0..32).map(|_| r.gen()).collect();
            let a = model.forward(&x).unwrap();
            let b = back.model.forward(&x).unwrap();
            assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn rejects_bad_headers() {
        let model = FilterModel::zeros(&[2, 2], Activation::Tanh).unwrap();
        let mut bytes = write_weights(&model, "").unwrap();
        assert!(read_weights(&bytes[..bytes.len() - 1]).is_err());
        bytes[4] = 2;
        assert!(matches!(read_weights(&bytes), Err(Error::Format(m)) if m.contains("version")));
        assert!(read_weights(b"nope").is_err());
    }
}
