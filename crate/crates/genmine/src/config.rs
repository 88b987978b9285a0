//! Mining run configuration and the optional `key = value` config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use genmine_core::{ScorerConfig, SourceTag};
use serde::{Deserialize, Serialize};

use crate::annotator::AnnotatorConfig;
use crate::corpus::LoadOptions;
use crate::error::{Error, Result};
use crate::http::RetryPolicy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    pub source: SourceTag,
}

impl FromStr for InputSpec {
    type Err = std::convert::Infallible;

    /// `SOURCE=PATH`, or a bare path whose file stem names the source.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (source, path) = match s.split_once('=') {
            Some((tag, path)) if !tag.contains(['/', '\\']) => {
                (tag.to_string(), PathBuf::from(path))
            }
            _ => {
                let path = PathBuf::from(s);
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (stem, path)
            }
        };
        Ok(InputSpec {
            path,
            source: source.parse()?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseSourceConfig {
    Files(Vec<PathBuf>),
    Service(AnnotatorConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: Vec<InputSpec>,
    pub parses: ParseSourceConfig,
    pub scorer: ScorerConfig,
    pub out_dir: PathBuf,
    pub emit_candidates: bool,
    pub inline_context: bool,
    pub workers: usize,
    pub seed: u64,
    pub load: LoadOptions,
    /// Scoring batches in flight at once.
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl RunConfig {
    pub fn new(
        inputs: Vec<InputSpec>,
        parses: ParseSourceConfig,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            inputs,
            parses,
            scorer: ScorerConfig::default(),
            out_dir: out_dir.into(),
            emit_candidates: false,
            inline_context: false,
            workers: 1,
            seed: 0,
            load: LoadOptions::default(),
            max_in_flight: 4,
            retry: RetryPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::Config("no input corpora given".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let ParseSourceConfig::Files(files) = &self.parses {
            if files.is_empty() {
                return Err(Error::Config(
                    "no parse files or parser endpoint given".into(),
                ));
            }
        }
        self.scorer
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parsed `key = value` config file. Blank lines and `#` comments are
/// ignored; a key given more than once keeps every value in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, Vec<String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key = value", i + 1))
            })?;
            values
                .entry(key.trim().replace('_', "-"))
                .or_default()
                .push(value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values
            .get(key)
            .and_then(|v| v.last())
            .map(String::as_str)
    }

    pub fn get_all(&self, key: &str) -> &[String] {
        self.values.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("{key}: {e}")))
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.parse_value::<bool>(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}
