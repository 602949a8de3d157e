//! Run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sqlrefine::backend::BackendConfig;
use sqlrefine::pipeline::{EvalOptions, PipelineOptions};
use sqlrefine::synth::SynthConfig;

use crate::CliError;

/// How one backend role is served.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// OpenAI-compatible chat-completions endpoint.
    Http(BackendConfig),
    /// Answers from ground truth. Without `fixtures` the oracle reads the
    /// synthesized dataset being processed.
    Oracle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fixtures: Option<PathBuf>,
    },
    /// The same reply to every request.
    Fixed { response: String },
    /// Times out on every request.
    Failing {
        #[serde(default)]
        max_retries: u32,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<BackendSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localizer: Option<BackendSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refiner: Option<BackendSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assistant: Option<BackendSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus rows or a synthesized dataset, as JSONL.
    pub corpus: PathBuf,
    /// Directory holding `<db_id>.sqlite` or `<db_id>/<db_id>.sqlite`.
    pub db_root: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    #[serde(default)]
    pub backends: BackendsConfig,
    #[serde(default)]
    pub synthesis: SynthConfig,
    #[serde(default)]
    pub pipeline: PipelineOptions,
    #[serde(default)]
    pub eval: EvalOptions,
    /// Demonstration store replacing the built-in one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub examples: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, db_root: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            corpus: corpus.into(),
            db_root: db_root.into(),
            out_dir: out_dir.into(),
            seed: 0,
            backends: BackendsConfig::default(),
            synthesis: SynthConfig::default(),
            pipeline: PipelineOptions::default(),
            eval: EvalOptions::default(),
            examples: None,
            jobs: None,
            base_dir: PathBuf::new(),
        }
    }

    /// Parse, without checking paths.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Read a config file and check that its input paths exist.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut c = Self::from_json(&text)?;
        c.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        c.check_paths()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn check_paths(&self) -> Result<(), CliError> {
        let corpus = self.resolve(&self.corpus);
        if !corpus.is_file() {
            return Err(CliError::Config(format!("corpus {} does not exist", corpus.display())));
        }
        let root = self.resolve(&self.db_root);
        if !root.is_dir() {
            return Err(CliError::Config(format!("database root {} is not a directory", root.display())));
        }
        if let Some(e) = &self.examples {
            if !self.resolve(e).is_file() {
                return Err(CliError::Config(format!("example store {} does not exist", e.display())));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.resolve(&self.corpus)
    }

    pub fn db_root_path(&self) -> PathBuf {
        self.resolve(&self.db_root)
    }

    pub fn out_path(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }
}
