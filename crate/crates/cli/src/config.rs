//! Optional JSON configuration file. Command-line flags win over file values,
//! file values win over built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tesa_core::TesaError;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub pages: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub root: Option<String>,
    pub out: Option<PathBuf>,
    pub min_words: Option<usize>,
    pub min_links_in: Option<usize>,
    pub min_links_out: Option<usize>,
    pub min_token_len: Option<usize>,
    pub stopwords: Option<PathBuf>,
    pub suffix_rules: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub lambda: Option<String>,
    pub mode: Option<String>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub walks: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, TesaError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| TesaError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| TesaError::Config(format!("config {}: {e}", path.display())))
    }
}

/// First present value: flag, then file, else `None`.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>) -> Option<T> {
    flag.or_else(|| file.clone())
}
