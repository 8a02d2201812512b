//! Parameter checkpoints: `manifest.json` plus one little-endian f64 blob per
//! tensor, in the order the manifest lists them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub node_types: Vec<String>,
    pub hidden: usize,
    pub seed: u64,
    pub config: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
}

const FORMAT: &str = "hetnr-checkpoint/1";

pub fn save_checkpoint(
    dir: &Path,
    params: &ModelParams,
    node_types: &[String],
    seed: u64,
    config: serde_json::Value,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tensors = Vec::new();
    for (name, shape, values) in params.named_tensors(node_types) {
        let file = format!("{name}.bin");
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        tensors.push(TensorEntry { name, shape, file });
    }
    let manifest = CheckpointManifest {
        format: FORMAT.into(),
        node_types: node_types.to_vec(),
        hidden: params.hidden(),
        seed,
        config,
        tensors,
    };
    let path = dir.join("manifest.json");
    let text = crate::report::to_sorted_json(&manifest);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Loads into a parameter structure shaped like `template`.
pub fn load_checkpoint(dir: &Path, template: &ModelParams) -> Result<(ModelParams, CheckpointManifest)> {
    let path = dir.join("manifest.json");
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e))?;
    if manifest.format != FORMAT {
        return Err(Error::parse(&path, format!("unknown checkpoint format {}", manifest.format)));
    }
    let expected = template.named_tensors(&manifest.node_types);
    if expected.len() != manifest.tensors.len() {
        return Err(Error::ShapeMismatch("checkpoint tensor count".into()));
    }
    let mut flat = Vec::with_capacity(template.num_params());
    for ((name, shape, _), entry) in expected.iter().zip(&manifest.tensors) {
        if *name != entry.name || *shape != entry.shape {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint tensor {} {:?} does not match {} {:?}",
                entry.name, entry.shape, name, shape
            )));
        }
        let p = dir.join(&entry.file);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        let count: usize = shape.iter().product();
        if bytes.len() != count * 8 {
            return Err(Error::parse(&p, "blob length does not match shape"));
        }
        flat.extend(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())));
    }
    let mut params = template.clone();
    params.set_flat(&flat);
    Ok((params, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{generate_synthetic, SyntheticSpec};
    use crate::model::init_params;

    #[test]
    fn round_trip_is_bit_exact() {
        let (g, t, _) = generate_synthetic(&SyntheticSpec::tiny(1)).unwrap();
        let p = init_params(&g, &t, 6, 3).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        save_checkpoint(tmp.path(), &p, g.schema().node_types(), 3, serde_json::json!({"lr": 0.01})).unwrap();
        let (q, m) = load_checkpoint(tmp.path(), &p.zeros_like()).unwrap();
        assert_eq!(p, q);
        assert_eq!(m.tensors[0].name, "proj.A.weight");
        assert_eq!(m.hidden, 6);
        let wrong = init_params(&g, &t, 5, 3).unwrap();
        assert!(load_checkpoint(tmp.path(), &wrong).is_err());
    }
}
