//! Scene configuration files (TOML, `key = value` with sections) and the
//! dataset train/test manifest.

use std::path::Path;

use crate::scene::{DatasetManifest, SceneConfig};
use crate::{Error, Result};

/// Loads a scene configuration from a TOML file.
pub fn load_scene_config(path: &Path) -> Result<SceneConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: SceneConfig = toml::from_str(&text).map_err(|e| Error::Config(format!(
        "{}: {e}",
        path.display()
    )))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Saves a scene configuration as TOML.
pub fn save_scene_config(path: &Path, cfg: &SceneConfig) -> Result<()> {
    let text = toml::to_string_pretty(cfg).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes the manifest with file names relative to its own directory.
pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    manifest.validate()?;
    let mut out = String::new();
    out.push_str(&format!("scene = {}\n", manifest.scene));
    for p in &manifest.train {
        out.push_str(&format!(
            "train = {}\n",
            p.file_name().unwrap_or_default().to_string_lossy()
        ));
    }
    for p in &manifest.test {
        out.push_str(&format!(
            "test = {}\n",
            p.file_name().unwrap_or_default().to_string_lossy()
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a manifest, resolving file names against the manifest directory
/// and enforcing train/test disjointness.
pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let text = std::fs::read_to_string(path)?;
    let mut manifest = DatasetManifest {
        scene: String::new(),
        train: Vec::new(),
        test: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Format {
                format: "manifest",
                reason: format!("line {}: expected `key = value`", lineno + 1),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "scene" => manifest.scene = value.to_string(),
            "train" => manifest.train.push(dir.join(value)),
            "test" => manifest.test.push(dir.join(value)),
            other => {
                return Err(Error::Format {
                    format: "manifest",
                    reason: format!("line {}: unknown key {other}", lineno + 1),
                })
            }
        }
    }
    manifest.validate()?;
    Ok(manifest)
}
