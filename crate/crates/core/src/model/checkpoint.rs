//! Checkpoint files: a plain-text header (config fields, vocabulary, tensor
//! names with shapes and byte offsets) followed by raw little-endian 32-bit
//! float blobs in header order.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::config::EncoderConfig;
use super::params::{ModelParams, ParamEntry};
use crate::data::Vocab;
use crate::numcore::Real;

const MAGIC: &str = "grace-checkpoint v1";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {reason}")]
    Malformed { reason: String },
    #[error("checkpoint is missing config field {name}")]
    MissingField { name: &'static str },
}

fn bad(reason: impl Into<String>) -> CheckpointError {
    CheckpointError::Malformed { reason: reason.into() }
}

pub fn save_checkpoint<F: Real>(
    path: &Path,
    cfg: &EncoderConfig,
    params: &ModelParams<F>,
    vocab: &Vocab,
) -> Result<(), CheckpointError> {
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("config layers {}\n", cfg.layers));
    header.push_str(&format!("config shared_layer {}\n", cfg.shared_layer));
    header.push_str(&format!("config hidden {}\n", cfg.hidden));
    header.push_str(&format!("config heads {}\n", cfg.heads));
    header.push_str(&format!("config ffn {}\n", cfg.ffn));
    header.push_str(&format!("config vocab_size {}\n", cfg.vocab_size));
    header.push_str(&format!("config max_len {}\n", cfg.max_len));
    header.push_str(&format!("config asc_layers {}\n", cfg.asc_layers));
    header.push_str(&format!("config dropout {}\n", cfg.dropout));
    for (i, token) in vocab.payload_tokens().iter().enumerate() {
        header.push_str(&format!("vocab {} {}\n", i + crate::data::SPECIALS.len(), token));
    }
    let mut offset = 0usize;
    for e in params.entries() {
        let dims: Vec<String> = e.shape.iter().map(|d| d.to_string()).collect();
        header.push_str(&format!("tensor {} {} {}\n", e.name, dims.join("x"), offset));
        offset += e.values.len() * 4;
    }
    header.push_str("end-header\n");

    let mut file = fs::File::create(path).map_err(|e| CheckpointError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let io = |e: std::io::Error| CheckpointError::Io {
        path: path.display().to_string(),
        source: e,
    };
    file.write_all(header.as_bytes()).map_err(io)?;
    let mut blob = Vec::with_capacity(offset);
    for e in params.entries() {
        for &v in &e.values {
            blob.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
        }
    }
    file.write_all(&blob).map_err(io)?;
    Ok(())
}

pub fn load_checkpoint<F: Real>(
    path: &Path,
) -> Result<(EncoderConfig, ModelParams<F>, Vocab), CheckpointError> {
    let bytes = fs::read(path).map_err(|e| CheckpointError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let end_marker = b"end-header\n";
    let header_end = bytes
        .windows(end_marker.len())
        .position(|w| w == end_marker)
        .ok_or_else(|| bad("no end-header marker"))?;
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| bad("header is not UTF-8"))?;
    let blob = &bytes[header_end + end_marker.len()..];

    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("wrong magic line"));
    }

    let mut cfg_fields: Vec<(String, String)> = Vec::new();
    let mut vocab_tokens: Vec<(usize, String)> = Vec::new();
    let mut tensors: Vec<(String, Vec<usize>, usize)> = Vec::new();
    for line in lines {
        let mut parts = line.splitn(2, ' ');
        match parts.next() {
            Some("config") => {
                let rest = parts.next().ok_or_else(|| bad("bare config line"))?;
                let (k, v) = rest
                    .split_once(' ')
                    .ok_or_else(|| bad(format!("config line '{line}'")))?;
                cfg_fields.push((k.to_string(), v.to_string()));
            }
            Some("vocab") => {
                let rest = parts.next().ok_or_else(|| bad("bare vocab line"))?;
                let (id, token) = rest
                    .split_once(' ')
                    .ok_or_else(|| bad(format!("vocab line '{line}'")))?;
                let id: usize = id.parse().map_err(|_| bad(format!("vocab id '{id}'")))?;
                vocab_tokens.push((id, token.to_string()));
            }
            Some("tensor") => {
                let rest = parts.next().ok_or_else(|| bad("bare tensor line"))?;
                let fields: Vec<&str> = rest.split(' ').collect();
                if fields.len() != 3 {
                    return Err(bad(format!("tensor line '{line}'")));
                }
                let shape: Vec<usize> = fields[1]
                    .split('x')
                    .map(|d| d.parse().map_err(|_| bad(format!("tensor shape '{}'", fields[1]))))
                    .collect::<Result<_, _>>()?;
                let offset: usize = fields[2]
                    .parse()
                    .map_err(|_| bad(format!("tensor offset '{}'", fields[2])))?;
                tensors.push((fields[0].to_string(), shape, offset));
            }
            Some(other) => return Err(bad(format!("unknown header record '{other}'"))),
            None => {}
        }
    }

    let field = |name: &'static str| -> Result<&str, CheckpointError> {
        cfg_fields
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
            .ok_or(CheckpointError::MissingField { name })
    };
    let parse_usize = |name: &'static str| -> Result<usize, CheckpointError> {
        field(name)?
            .parse()
            .map_err(|_| bad(format!("config field {name}")))
    };
    let cfg = EncoderConfig {
        layers: parse_usize("layers")?,
        shared_layer: parse_usize("shared_layer")?,
        hidden: parse_usize("hidden")?,
        heads: parse_usize("heads")?,
        ffn: parse_usize("ffn")?,
        vocab_size: parse_usize("vocab_size")?,
        max_len: parse_usize("max_len")?,
        asc_layers: parse_usize("asc_layers")?,
        dropout: field("dropout")?
            .parse()
            .map_err(|_| bad("config field dropout"))?,
    };

    vocab_tokens.sort_by_key(|(id, _)| *id);
    for (pos, (id, _)) in vocab_tokens.iter().enumerate() {
        if *id != pos + crate::data::SPECIALS.len() {
            return Err(bad(format!("non-dense vocab id {id}")));
        }
    }
    let vocab = Vocab::from_payload(vocab_tokens.into_iter().map(|(_, t)| t));

    let mut entries = Vec::with_capacity(tensors.len());
    for (name, shape, offset) in tensors {
        let numel: usize = shape.iter().product();
        let end = offset + numel * 4;
        if end > blob.len() {
            return Err(bad(format!("tensor {name} runs past the blob")));
        }
        let values: Vec<F> = blob[offset..end]
            .chunks_exact(4)
            .map(|c| F::from_f64(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        entries.push(ParamEntry { name, shape, values });
    }
    Ok((cfg, ModelParams::from_entries(entries), vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_corpus, Vocab};

    fn small() -> (EncoderConfig, ModelParams<f32>, Vocab) {
        let corpus = parse_corpus("alpha\tO\tO\nbeta\tB\tPOS\n\n").unwrap();
        let vocab = Vocab::build(&corpus, 1);
        let cfg = EncoderConfig {
            layers: 2,
            shared_layer: 1,
            hidden: 8,
            heads: 2,
            ffn: 16,
            vocab_size: vocab.len(),
            max_len: 16,
            asc_layers: 1,
            dropout: 0.1,
        };
        let params = ModelParams::init(&cfg, 5);
        (cfg, params, vocab)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (cfg, params, vocab) = small();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &cfg, &params, &vocab).unwrap();
        let (cfg2, params2, vocab2) = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(vocab.payload_tokens(), vocab2.payload_tokens());
        assert_eq!(params.len(), params2.len());
        for (a, b) in params.entries().iter().zip(params2.entries()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.shape, b.shape);
            let ab: Vec<u32> = a.values.iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u32> = b.values.iter().map(|v| v.to_bits()).collect();
            assert_eq!(ab, bb, "tensor {} not bit-exact", a.name);
        }
    }

    #[test]
    fn saved_files_are_deterministic() {
        let (cfg, params, vocab) = small();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.ckpt");
        let p2 = dir.path().join("b.ckpt");
        save_checkpoint(&p1, &cfg, &params, &vocab).unwrap();
        save_checkpoint(&p2, &cfg, &params, &vocab).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let (cfg, params, vocab) = small();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &cfg, &params, &vocab).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 10);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint::<f32>(&path),
            Err(CheckpointError::Malformed { .. })
        ));
    }
}
