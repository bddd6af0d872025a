//! Versioned binary model files.
//!
//! Layout: magic `EWLM` | format_version u16 | architecture descriptor
//! (input_dim, hidden, layers, seq_len as u16) | parameter count u32 |
//! weights as little-endian f64 | CRC32 of all preceding bytes. Weights
//! round-trip bit-exactly, so a reloaded model produces identical outputs.

use std::path::Path;

use crate::error::PredictorError;
use crate::lstm::{LstmConfig, LstmModel};

pub const MODEL_MAGIC: &[u8; 4] = b"EWLM";
pub const FORMAT_VERSION: u16 = 1;

pub fn encode_model(model: &LstmModel) -> Vec<u8> {
    let params = model.flat_params();
    let mut buf = Vec::with_capacity(4 + 2 + 8 + 4 + params.len() * 8 + 4);
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(model.config.input_dim as u16).to_le_bytes());
    buf.extend_from_slice(&(model.config.hidden as u16).to_le_bytes());
    buf.extend_from_slice(&(model.config.layers as u16).to_le_bytes());
    buf.extend_from_slice(&(model.config.seq_len as u16).to_le_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in &params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn decode_model(bytes: &[u8]) -> Result<LstmModel, PredictorError> {
    if bytes.len() < 4 + 2 + 8 + 4 + 4 {
        return Err(PredictorError::ModelFormat("file too short".into()));
    }
    if &bytes[0..4] != MODEL_MAGIC {
        return Err(PredictorError::ModelFormat("bad magic".into()));
    }
    let crc_offset = bytes.len() - 4;
    let expected = u32::from_le_bytes(bytes[crc_offset..].try_into().unwrap());
    let actual = crc32fast::hash(&bytes[..crc_offset]);
    if expected != actual {
        return Err(PredictorError::ModelFormat(format!(
            "checksum mismatch: expected {expected:#010x}, got {actual:#010x}"
        )));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(PredictorError::ModelFormat(format!(
            "unsupported format version {version}"
        )));
    }
    let dims: Vec<usize> = (0..4)
        .map(|i| u16::from_le_bytes(bytes[6 + 2 * i..8 + 2 * i].try_into().unwrap()) as usize)
        .collect();
    let config = LstmConfig::new(dims[0], dims[1], dims[2], dims[3]);
    let count = u32::from_le_bytes(bytes[14..18].try_into().unwrap()) as usize;
    let mut model = LstmModel::zeroed(config);
    if count != model.parameter_count() {
        return Err(PredictorError::ModelFormat(format!(
            "parameter count {count} does not match architecture ({})",
            model.parameter_count()
        )));
    }
    let body = &bytes[18..crc_offset];
    if body.len() != count * 8 {
        return Err(PredictorError::ModelFormat("weight block truncated".into()));
    }
    let params: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    model.set_flat_params(&params);
    Ok(model)
}

pub fn save_model<P: AsRef<Path>>(path: P, model: &LstmModel) -> Result<(), PredictorError> {
    std::fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model<P: AsRef<Path>>(path: P) -> Result<LstmModel, PredictorError> {
    decode_model(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    #[test]
    fn save_load_roundtrip_is_bitwise_identical() {
        let model = LstmModel::init(LstmConfig::new(4, 16, 2, 6), 31);
        let bytes = encode_model(&model);
        let loaded = decode_model(&bytes).unwrap();
        assert_eq!(loaded, model);
        let fv = FeatureVector {
            window: 6,
            values: (0..24).map(|i| i as f64 / 24.0).collect(),
        };
        let a = model.forward(&fv).unwrap();
        let b = loaded.forward(&fv).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(loaded.parameter_count(), model.parameter_count());
    }

    #[test]
    fn corrupted_file_is_rejected() {
        let model = LstmModel::init(LstmConfig::new(4, 8, 1, 4), 2);
        let mut bytes = encode_model(&model);
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(
            decode_model(&bytes),
            Err(PredictorError::ModelFormat(_))
        ));
    }
}
