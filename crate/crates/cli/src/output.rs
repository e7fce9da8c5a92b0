use std::path::Path;

use seafield::{Error, Result};

/// Provenance line written at the top of every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    pub fn render(&self, kind: &str) -> String {
        format!("# seafield {kind} command={} config_sha256={} seed={}\n", self.command, self.config_hash, self.seed)
    }
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
