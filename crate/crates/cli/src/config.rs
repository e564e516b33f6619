//! Config-file merging and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Overlays explicitly given flags onto a JSON config file. Flags win; unset
/// flags (`null`, `false`) leave the file's value in place. A run manifest is
/// accepted in place of a config file.
pub fn merge_with_file<T>(command: &str, flags: &T, file: Option<&Path>) -> Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let flag_value = serde_json::to_value(flags)?;
    let Some(path) = file else {
        return Ok(serde_json::from_value(flag_value)?);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut base: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let (Some(cmd), Some(config)) = (base.get("command"), base.get("config")) {
        if cmd != command {
            bail!(
                "{} is a manifest for `{}`, not `{command}`",
                path.display(),
                cmd.as_str().unwrap_or("?")
            );
        }
        base = config.clone();
    }
    let Value::Object(mut merged) = base else {
        bail!("{} must hold a JSON object", path.display());
    };
    let Value::Object(flag_map) = flag_value else {
        unreachable!("option structs serialize to objects");
    };
    for (k, v) in flag_map {
        if !v.is_null() && v != Value::Bool(false) {
            merged.insert(k, v);
        }
    }
    merged.remove("config");
    serde_json::from_value(Value::Object(merged))
        .with_context(|| format!("invalid settings in {}", path.display()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Record of one invocation: re-running `--config <manifest>` reproduces the outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new<T: Serialize>(command: &str, config: &T, seed: Option<u64>) -> Result<Self> {
        let mut config = serde_json::to_value(config)?;
        if let Value::Object(map) = &mut config {
            strip_nulls(map);
        }
        Ok(Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(digest(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &serde_json::to_string_pretty(self)?)
    }
}

fn strip_nulls(map: &mut Map<String, Value>) {
    map.retain(|_, v| !v.is_null());
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
