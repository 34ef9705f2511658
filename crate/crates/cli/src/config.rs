//! Settings file. Lookup order for the path: `--config`, then
//! `SCHEMAFORGE_CONFIG`, then `$XDG_CONFIG_HOME/schemaforge/config.toml`,
//! then `~/.config/schemaforge/config.toml`. A missing default file is
//! fine; a missing explicit one is an error.
//!
//! The API key comes from `SCHEMAFORGE_API_KEY` or the file's `api_key`.
//! There is deliberately no command-line flag for it.

use std::path::{Path, PathBuf};
use std::time::Duration;

use schemaforge_core::gateway::{ApiKey, GatewayConfig};
use schemaforge_core::truncate::TruncationConfig;
use serde::Deserialize;

use crate::error::CliError;

pub const CONFIG_ENV: &str = "SCHEMAFORGE_CONFIG";

/// No `Debug`: it would print the key.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    api_key: Option<String>,
    endpoint: Option<String>,
    model: Option<String>,
    timeout_secs: Option<u64>,
    max_retries: Option<u32>,
    #[serde(default)]
    truncate: TruncateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncateSection {
    target_bytes: Option<usize>,
    n_start: Option<usize>,
    n_min: Option<usize>,
    property_factor: Option<usize>,
}

fn default_path() -> Option<PathBuf> {
    let base = std::env::var_os("XDG_CONFIG_HOME")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".config")))?;
    Some(base.join("schemaforge").join("config.toml"))
}

impl FileConfig {
    pub fn load(explicit: Option<&Path>) -> Result<FileConfig, CliError> {
        let (path, required) = match explicit {
            Some(p) => (p.to_path_buf(), true),
            None => match std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()) {
                Some(p) => (PathBuf::from(p), true),
                None => match default_path() {
                    Some(p) => (p, false),
                    None => return Ok(FileConfig::default()),
                },
            },
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => {
                return Ok(FileConfig::default())
            }
            Err(e) => return Err(CliError::input(&path, e)),
        };
        // toml's messages quote the offending line, which may hold the key.
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.clone(),
            message: e.message().to_string(),
        })
    }

    /// Flags win over the file; the key comes from the environment first.
    pub fn gateway(&self, endpoint: Option<&str>, model: Option<&str>) -> GatewayConfig {
        let mut cfg = GatewayConfig::default();
        if let Some(url) = endpoint.or(self.endpoint.as_deref()) {
            cfg.base_url = url.to_string();
        }
        if let Some(m) = model.or(self.model.as_deref()) {
            cfg.model = m.to_string();
        }
        if let Some(s) = self.timeout_secs {
            cfg.timeout = Duration::from_secs(s);
        }
        if let Some(r) = self.max_retries {
            cfg.max_retries = r;
        }
        cfg.api_key = ApiKey::from_env().or_else(|| {
            self.api_key
                .as_deref()
                .map(str::trim)
                .filter(|k| !k.is_empty())
                .map(ApiKey::new)
        });
        cfg
    }

    /// File values over the defaults; flags are applied by the caller.
    pub fn truncation(&self) -> TruncationConfig {
        let d = TruncationConfig::default();
        let t = &self.truncate;
        TruncationConfig {
            target_bytes: t.target_bytes.unwrap_or(d.target_bytes),
            n_start: t.n_start.unwrap_or(d.n_start),
            n_min: t.n_min.unwrap_or(d.n_min),
            property_factor: t.property_factor.unwrap_or(d.property_factor),
        }
    }
}
