//! Bit-exact network checkpoints.
//!
//! Layout: magic `MLAB`, format version (u8 = 1), layer count (u8), then per
//! layer (in-dim u32, out-dim u32, activation code u8), then per layer all
//! weights (row-major) followed by the biases as little-endian f64, and a
//! trailing CRC32 of all preceding bytes.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::approximator::{Activation, Layer, Network};

const MAGIC: [u8; 4] = *b"MLAB";
const VERSION: u8 = 1;
const ACTIVATION_RELU: u8 = 0;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u8),
    #[error("CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("checkpoint truncated")]
    Truncated,
    #[error("unknown activation code {0}")]
    UnknownActivation(u8),
    #[error("inconsistent layer shapes")]
    BadShape,
    #[error("non-finite weight")]
    NonFinite,
}

/// Serializes a network to the checkpoint byte layout.
pub fn encode(net: &Network) -> Vec<u8> {
    let layers = net.layers();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&MAGIC);
    bytes.push(VERSION);
    bytes.push(u8::try_from(layers.len()).expect("more than 255 layers"));
    for layer in layers {
        bytes.extend_from_slice(&(layer.in_dim as u32).to_le_bytes());
        bytes.extend_from_slice(&(layer.out_dim as u32).to_le_bytes());
        bytes.push(ACTIVATION_RELU);
    }
    for layer in layers {
        for w in &layer.weights {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        for b in &layer.biases {
            bytes.extend_from_slice(&b.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    bytes
}

/// Parses and validates a checkpoint byte stream.
pub fn decode(bytes: &[u8]) -> Result<Network, CheckpointError> {
    if bytes.len() < MAGIC.len() + 2 + 4 {
        return Err(CheckpointError::Truncated);
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    // Magic and version are diagnosed before the CRC so a wrong-format file
    // gets the clearer error.
    if body[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if body[4] != VERSION {
        return Err(CheckpointError::UnsupportedVersion(body[4]));
    }
    if stored != computed {
        return Err(CheckpointError::CrcMismatch { stored, computed });
    }
    let layer_count = body[5] as usize;
    let mut cursor = 6usize;
    let mut shapes = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let in_dim = read_u32(body, &mut cursor)? as usize;
        let out_dim = read_u32(body, &mut cursor)? as usize;
        let activation = body.get(cursor).copied().ok_or(CheckpointError::Truncated)?;
        cursor += 1;
        if activation != ACTIVATION_RELU {
            return Err(CheckpointError::UnknownActivation(activation));
        }
        shapes.push((in_dim, out_dim));
    }
    for pair in shapes.windows(2) {
        if pair[0].1 != pair[1].0 {
            return Err(CheckpointError::BadShape);
        }
    }
    let mut layers = Vec::with_capacity(layer_count);
    for (in_dim, out_dim) in shapes {
        if in_dim == 0 || out_dim == 0 {
            return Err(CheckpointError::BadShape);
        }
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..in_dim * out_dim {
            weights.push(read_f64(body, &mut cursor)?);
        }
        let mut biases = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            biases.push(read_f64(body, &mut cursor)?);
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(CheckpointError::NonFinite);
        }
        layers.push(Layer { in_dim, out_dim, weights, biases });
    }
    if cursor != body.len() {
        return Err(CheckpointError::BadShape);
    }
    Network::from_layers(layers, Activation::ReLU).map_err(|_| CheckpointError::BadShape)
}

fn read_u32(body: &[u8], cursor: &mut usize) -> Result<u32, CheckpointError> {
    let end = *cursor + 4;
    let slice = body.get(*cursor..end).ok_or(CheckpointError::Truncated)?;
    *cursor = end;
    Ok(u32::from_le_bytes(slice.try_into().expect("4 bytes")))
}

fn read_f64(body: &[u8], cursor: &mut usize) -> Result<f64, CheckpointError> {
    let end = *cursor + 8;
    let slice = body.get(*cursor..end).ok_or(CheckpointError::Truncated)?;
    *cursor = end;
    Ok(f64::from_le_bytes(slice.try_into().expect("8 bytes")))
}

pub fn save_checkpoint(path: &Path, net: &Network) -> Result<(), CheckpointError> {
    fs::write(path, encode(net))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Network, CheckpointError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::NetworkSpec;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = Network::init(NetworkSpec::new(vec![4, 64, 64, 2], 9)).unwrap();
        let loaded = decode(&encode(&net)).unwrap();
        assert_eq!(net.layers(), loaded.layers());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("victim.ckpt");
        let net = Network::init(NetworkSpec::new(vec![4, 32, 2], 10)).unwrap();
        save_checkpoint(&path, &net).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(net.layers(), loaded.layers());
    }

    #[test]
    fn truncation_is_detected() {
        let net = Network::init(NetworkSpec::new(vec![4, 8, 2], 11)).unwrap();
        let bytes = encode(&net);
        let cut = &bytes[..bytes.len() - 9];
        assert!(matches!(
            decode(cut),
            Err(CheckpointError::CrcMismatch { .. }) | Err(CheckpointError::Truncated)
        ));
    }

    #[test]
    fn corruption_fails_the_crc() {
        let net = Network::init(NetworkSpec::new(vec![4, 8, 2], 12)).unwrap();
        let mut bytes = encode(&net);
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x01;
        assert!(matches!(decode(&bytes), Err(CheckpointError::CrcMismatch { .. })));
    }

    #[test]
    fn wrong_magic_and_version_have_distinct_errors() {
        let net = Network::init(NetworkSpec::new(vec![4, 8, 2], 13)).unwrap();
        let bytes = encode(&net);

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode(&bad_magic), Err(CheckpointError::BadMagic)));

        let mut bad_version = bytes.clone();
        bad_version[4] = 2;
        assert!(matches!(decode(&bad_version), Err(CheckpointError::UnsupportedVersion(2))));
    }

    #[test]
    fn loaded_network_forwards_identically() {
        let net = Network::init(NetworkSpec::new(vec![4, 16, 8, 2], 14)).unwrap();
        let loaded = decode(&encode(&net)).unwrap();
        let s = [0.1, -0.2, 0.3, -0.4];
        assert_eq!(net.forward(&s), loaded.forward(&s));
    }
}
