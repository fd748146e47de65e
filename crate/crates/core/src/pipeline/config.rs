use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{InputFormat, DEFAULT_TITLE_SIM, DEFAULT_YEAR_MAX, DEFAULT_YEAR_MIN};
use crate::network::{EdgeWeighting, DEFAULT_TOP_N};
use crate::tmc::DEFAULT_SIGMA;
use crate::topics::{
    ImportMode, TopicModelConfig, DEFAULT_BETA, DEFAULT_BURN_IN, DEFAULT_ITERATIONS,
    DEFAULT_MIN_TOKEN_LEN, DEFAULT_TOP_N as DEFAULT_COHERENCE_TOP_N,
};

pub const CONFIG_VERSION: u32 = 1;

/// Offset added to the run seed for the topic stage.
pub const TOPICS_SEED_OFFSET: u64 = 0x100;

/// Every pipeline parameter. Keys mirror the command-line flags with `-`
/// replaced by `_`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub inputs: Vec<PathBuf>,
    pub format: InputFormat,
    pub year_min: i32,
    pub year_max: i32,
    pub title_sim: f64,
    pub lexicon: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub fallback_rule: bool,
    /// Fixed topic count.
    pub k: Option<usize>,
    /// Topic counts to sweep; the selected K is refit on the full corpus.
    pub k_list: Vec<usize>,
    /// External assignments used instead of the built-in model.
    pub topic_import: Option<PathBuf>,
    pub topic_import_mode: ImportMode,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub min_token_len: usize,
    pub coherence_top_n: usize,
    pub heldout_every: usize,
    pub seed: u64,
    pub sigma: f64,
    pub top_n: usize,
    pub weighting: EdgeWeighting,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            inputs: Vec::new(),
            format: InputFormat::Jsonl,
            year_min: DEFAULT_YEAR_MIN,
            year_max: DEFAULT_YEAR_MAX,
            title_sim: DEFAULT_TITLE_SIM,
            lexicon: None,
            candidates: None,
            fallback_rule: false,
            k: None,
            k_list: Vec::new(),
            topic_import: None,
            topic_import_mode: ImportMode::ArgmaxRows,
            alpha: None,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            min_token_len: DEFAULT_MIN_TOKEN_LEN,
            coherence_top_n: DEFAULT_COHERENCE_TOP_N,
            heldout_every: 5,
            seed: 0,
            sigma: DEFAULT_SIGMA,
            top_n: DEFAULT_TOP_N,
            weighting: EdgeWeighting::Unweighted,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// How the topic stage obtains assignments.
#[derive(Debug, Clone, PartialEq)]
pub enum TopicSource {
    Fit(usize),
    Sweep(Vec<usize>),
    Import(PathBuf, ImportMode),
}

impl RunConfig {
    /// Reads a TOML config. Relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_utf8(path)?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Logic(format!("config serialization: {e}")))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.iter_mut().for_each(join);
        self.lexicon.iter_mut().for_each(join);
        self.candidates.iter_mut().for_each(join);
        self.topic_import.iter_mut().for_each(join);
        join(&mut self.out_dir);
    }

    pub fn topic_source(&self) -> Result<TopicSource> {
        let chosen = [
            self.k.is_some(),
            !self.k_list.is_empty(),
            self.topic_import.is_some(),
        ];
        match chosen.iter().filter(|c| **c).count() {
            0 => Err(Error::config("set one of k, k_list or topic_import")),
            1 => Ok(if let Some(k) = self.k {
                TopicSource::Fit(k)
            } else if let Some(p) = &self.topic_import {
                TopicSource::Import(p.clone(), self.topic_import_mode)
            } else {
                TopicSource::Sweep(self.k_list.clone())
            }),
            _ => Err(Error::config(
                "k, k_list and topic_import are mutually exclusive",
            )),
        }
    }

    pub fn topic_model(&self, k: usize) -> TopicModelConfig {
        TopicModelConfig {
            k,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed.wrapping_add(TOPICS_SEED_OFFSET),
        }
    }

    /// Parameter checks; nothing touches the file system.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.inputs.is_empty() {
            return Err(Error::config("no input files given"));
        }
        if self.lexicon.is_none() {
            return Err(Error::config("a method lexicon is required"));
        }
        if self.year_min > self.year_max {
            return Err(Error::config(format!(
                "year_min {} is greater than year_max {}",
                self.year_min, self.year_max
            )));
        }
        if !(0.0..=1.0).contains(&self.title_sim) {
            return Err(Error::config(format!(
                "title_sim {} outside [0, 1]",
                self.title_sim
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(format!(
                "sigma must be a finite value >= 0, got {}",
                self.sigma
            )));
        }
        if self.top_n < 1 {
            return Err(Error::config("top_n must be at least 1"));
        }
        if self.coherence_top_n < 2 {
            return Err(Error::config("coherence_top_n must be at least 2"));
        }
        if self.heldout_every < 2 {
            return Err(Error::config("heldout_every must be at least 2"));
        }
        match self.topic_source()? {
            TopicSource::Fit(k) => self.topic_model(k).validate()?,
            TopicSource::Sweep(ks) => {
                for k in ks {
                    self.topic_model(k).validate()?;
                }
            }
            TopicSource::Import(..) => {}
        }
        Ok(())
    }

    /// External files the run reads.
    pub fn input_files(&self) -> Vec<PathBuf> {
        let mut files = self.inputs.clone();
        files.extend(self.lexicon.clone());
        files.extend(self.candidates.clone());
        files.extend(self.topic_import.clone());
        files
    }

    pub fn check_inputs_exist(&self) -> Result<()> {
        for f in self.input_files() {
            if !f.is_file() {
                return Err(Error::input(format!(
                    "input file {} does not exist",
                    f.display()
                )));
            }
        }
        Ok(())
    }
}
