//! Versioned binary checkpoint format.
//!
//! ```text
//! magic    8 bytes  "LXATCKPT"
//! version  u32 LE   1
//! config   u32 LE length, then that many bytes of JSON (ModelConfig)
//! tensors  u32 LE count, then per tensor:
//!          u16 LE name length, name bytes (UTF-8)
//!          u32 LE rank, rank × u64 LE dims
//!          product(dims) × f64 LE values, row-major
//! ```
//!
//! Values are stored as raw IEEE-754 bits so a save/load cycle is bit-exact.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use super::classifier::Classifier;
use super::config::ModelConfig;
use super::ModelError;

pub const MAGIC: &[u8; 8] = b"LXATCKPT";
pub const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

fn shapes(config: &ModelConfig) -> [Vec<usize>; 5] {
    [
        vec![config.vocab_size, config.embed_dim],
        vec![config.hidden_dim, config.embed_dim],
        vec![config.hidden_dim],
        vec![config.num_classes, config.hidden_dim],
        vec![config.num_classes],
    ]
}

pub fn write_checkpoint(model: &Classifier, mut out: impl Write) -> Result<(), ModelError> {
    let config = serde_json::to_vec(model.config()).map_err(|e| bad(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(config.len() as u32).to_le_bytes())?;
    out.write_all(&config)?;
    let params = model.parameters();
    out.write_all(&(params.len() as u32).to_le_bytes())?;
    for ((name, values), dims) in params.iter().zip(shapes(model.config())) {
        out.write_all(&(name.len() as u16).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(dims.len() as u32).to_le_bytes())?;
        for d in dims {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values.iter() {
            buf.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

fn read_u16(r: &mut impl Read) -> io::Result<u16> {
    let mut b = [0; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint(mut input: impl Read) -> Result<Classifier, ModelError> {
    let mut magic = [0; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let len = read_u32(&mut input)? as usize;
    let mut config = vec![0; len];
    input.read_exact(&mut config)?;
    let config: ModelConfig = serde_json::from_slice(&config).map_err(|e| bad(e.to_string()))?;
    config.validate()?;

    let expected = shapes(&config);
    let count = read_u32(&mut input)? as usize;
    if count != expected.len() {
        return Err(bad(format!("expected {} tensors, found {count}", expected.len())));
    }
    let mut arrays = Vec::with_capacity(count);
    for want in &expected {
        let name_len = read_u16(&mut input)? as usize;
        let mut name = vec![0; name_len];
        input.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| bad(e.to_string()))?;
        let rank = read_u32(&mut input)? as usize;
        let dims = (0..rank)
            .map(|_| read_u64(&mut input).map(|d| d as usize))
            .collect::<io::Result<Vec<_>>>()?;
        if &dims != want {
            return Err(bad(format!("tensor {name}: shape {dims:?}, expected {want:?}")));
        }
        let n: usize = dims.iter().product();
        let mut raw = vec![0; n * 8];
        input.read_exact(&mut raw)?;
        arrays.push(
            raw.chunks_exact(8)
                .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
                .collect(),
        );
    }
    let mut trailing = [0; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(bad("trailing bytes after last tensor"));
    }
    Classifier::from_parameters(config, arrays)
}

pub fn save_checkpoint(model: &Classifier, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Classifier, ModelError> {
    let bytes = fs::read(path)?;
    read_checkpoint(bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut c = ModelConfig::multiple_choice(11);
        c.seed = 9;
        c.embed_dim = 3;
        c.hidden_dim = 4;
        let mut m = Classifier::init(&c).unwrap();
        m.parameters_mut()[1].1[0] = f64::MIN_POSITIVE / 3.0;
        m.parameters_mut()[2].1[0] = -0.0;
        let mut buf = Vec::new();
        write_checkpoint(&m, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.config(), m.config());
        for ((_, a), (_, b)) in m.parameters().iter().zip(back.parameters().iter()) {
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn rejects_corruption() {
        let m = Classifier::init(&ModelConfig::binary(5)).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&m, &mut buf).unwrap();
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(read_checkpoint(bad_magic.as_slice()).is_err());
        let truncated = &buf[..buf.len() - 1];
        assert!(read_checkpoint(truncated).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_checkpoint(extra.as_slice()).is_err());
        let mut version = buf;
        version[8] = 2;
        assert!(read_checkpoint(version.as_slice()).is_err());
    }
}
