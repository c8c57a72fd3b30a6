use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliResult;
use crate::format::to_json;
use crate::io::write_text;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: &'static str,
    pub config: C,
    pub base_seed: Option<u64>,
    pub version: &'static str,
    pub timestamp: String,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &'static str, config: C, base_seed: Option<u64>) -> Self {
        RunManifest {
            command,
            config,
            base_seed,
            version: sephill::VERSION,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// Writes the manifest next to `output` as `<output>.manifest.json`.
    pub fn write_beside(&self, output: &Path) -> CliResult<PathBuf> {
        let path = manifest_path(output);
        write_text(&path, &to_json(self))?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name: OsString = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
