//! Run manifests: configuration hash, per-stage wall times, and content
//! hashes of every artifact file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use davies_lab::config::{serialize_config, RunConfig};

#[derive(Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub toolchain: String,
    pub total_seconds: f64,
    pub stages: Vec<StageTime>,
    pub artifacts: Vec<ArtifactEntry>,
}

impl RunManifest {
    pub fn collect(
        cfg: &RunConfig,
        stages: &[(String, f64)],
        artifacts: &[PathBuf],
        total: Duration,
    ) -> anyhow::Result<RunManifest> {
        let config_sha256 = hex(&Sha256::digest(serialize_config(cfg).as_bytes()));
        let mut entries = Vec::with_capacity(artifacts.len());
        for path in artifacts {
            entries.push(ArtifactEntry {
                path: path.display().to_string(),
                sha256: file_sha256(path)?,
            });
        }
        Ok(RunManifest {
            config_sha256,
            toolchain: format!("davies-lab {}", env!("CARGO_PKG_VERSION")),
            total_seconds: total.as_secs_f64(),
            stages: stages
                .iter()
                .map(|(s, t)| StageTime { stage: s.clone(), seconds: *t })
                .collect(),
            artifacts: entries,
        })
    }
}

pub fn file_sha256(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
