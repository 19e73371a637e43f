//! Experiment configuration file.
//!
//! ```toml
//! [model]
//! a = 0.5        # κ_i = 1 − a·r^i
//! r = 0.5
//! s = 0.5        # geometric up-jump parameter
//! floor_n = 5
//!
//! [experiment]
//! x_grid = [6, 10, 20]
//! m_list = [1, 2, 3]
//! n_traj = 100000
//! seed = 42
//! max_steps = 1000000
//! epsilon = 1e-10
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Out-of-range values are reported with the line they appear on.

use std::fmt;
use std::path::{Path, PathBuf};

use markov_up_core::{BenchmarkModelSpec, VerifySettings, DEFAULT_EPSILON, DEFAULT_MAX_STEPS};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Largest accepted moment order.
pub const MAX_ORDER: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.path.display(), line, self.message),
            None => write!(f, "{}: {}", self.path.display(), self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub a: f64,
    pub r: f64,
    pub s: f64,
    pub floor_n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub x_grid: Vec<u64>,
    pub m_list: Vec<u32>,
    pub n_traj: usize,
    pub seed: u64,
    pub max_steps: u64,
    pub epsilon: f64,
    pub a2_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub report: String,
    pub paths: String,
    pub verdicts: String,
    pub trajectories: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            report: "report.json".into(),
            paths: "paths.csv".into(),
            verdicts: "verdicts.csv".into(),
            trajectories: "trajectories.csv".into(),
        }
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub experiment: ExperimentParams,
    #[serde(skip)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn model_spec(&self) -> BenchmarkModelSpec {
        let m = &self.model;
        BenchmarkModelSpec::new(m.a, m.r, m.s, m.floor_n).expect("validated at load time")
    }

    pub fn settings(&self, threads: Option<usize>) -> VerifySettings {
        let e = &self.experiment;
        let mut settings = VerifySettings::new(e.x_grid.clone(), e.m_list.clone(), e.n_traj, e.seed);
        settings.max_steps = e.max_steps;
        settings.epsilon = e.epsilon;
        settings.a2_tolerance = e.a2_tolerance;
        settings.threads = threads;
        settings
    }

    pub fn output_file(&self, name: &str) -> PathBuf {
        self.output.dir.join(name)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    experiment: RawExperiment,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    a: Spanned<f64>,
    r: Spanned<f64>,
    s: Spanned<f64>,
    floor_n: Spanned<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    x_grid: Spanned<Vec<u64>>,
    m_list: Spanned<Vec<u32>>,
    n_traj: Spanned<usize>,
    seed: u64,
    max_steps: Option<Spanned<u64>>,
    epsilon: Option<Spanned<f64>>,
    a2_tolerance: Option<Spanned<f64>>,
}

struct Checker<'a> {
    path: &'a Path,
    source: &'a str,
}

impl Checker<'_> {
    fn line_of<T>(&self, value: &Spanned<T>) -> usize {
        let start = value.span().start.min(self.source.len());
        self.source[..start].matches('\n').count() + 1
    }

    fn fail<T>(&self, value: &Spanned<T>, message: String) -> ConfigError {
        ConfigError {
            path: self.path.to_path_buf(),
            line: Some(self.line_of(value)),
            message,
        }
    }

    fn open_unit(&self, name: &str, value: &Spanned<f64>) -> Result<f64, ConfigError> {
        let v = *value.get_ref();
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(self.fail(value, format!("{name} = {v} is outside (0, 1)")))
        }
    }
}

pub fn parse_config(path: &Path, source: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(source).map_err(|e| {
        let line = e
            .span()
            .map(|span| source[..span.start.min(source.len())].matches('\n').count() + 1);
        ConfigError {
            path: path.to_path_buf(),
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    let check = Checker { path, source };

    let model = ModelConfig {
        a: check.open_unit("model.a", &raw.model.a)?,
        r: check.open_unit("model.r", &raw.model.r)?,
        s: check.open_unit("model.s", &raw.model.s)?,
        floor_n: *raw.model.floor_n.get_ref(),
    };

    let e = raw.experiment;
    if e.x_grid.get_ref().is_empty() {
        return Err(check.fail(&e.x_grid, "experiment.x_grid must not be empty".into()));
    }
    let m_list = e.m_list.get_ref();
    if m_list.is_empty() || m_list.iter().any(|&m| m == 0 || m > MAX_ORDER) {
        return Err(check.fail(
            &e.m_list,
            format!("experiment.m_list must be a non-empty list of orders in 1..={MAX_ORDER}"),
        ));
    }
    if *e.n_traj.get_ref() < 2 {
        return Err(check.fail(
            &e.n_traj,
            format!("experiment.n_traj = {} must be at least 2", e.n_traj.get_ref()),
        ));
    }
    let max_steps = match &e.max_steps {
        Some(v) if *v.get_ref() == 0 => {
            return Err(check.fail(v, "experiment.max_steps must be positive".into()))
        }
        Some(v) => *v.get_ref(),
        None => DEFAULT_MAX_STEPS,
    };
    let epsilon = match &e.epsilon {
        Some(v) => check.open_unit("experiment.epsilon", v)?,
        None => DEFAULT_EPSILON,
    };
    let a2_tolerance = match &e.a2_tolerance {
        Some(v) => check.open_unit("experiment.a2_tolerance", v)?,
        None => 1e-6,
    };

    Ok(ExperimentConfig {
        model,
        experiment: ExperimentParams {
            x_grid: e.x_grid.into_inner(),
            m_list: e.m_list.into_inner(),
            n_traj: e.n_traj.into_inner(),
            seed: e.seed,
            max_steps,
            epsilon,
            a2_tolerance,
        },
        output: raw.output,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let source = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: None,
        message: format!("cannot read config: {e}"),
    })?;
    parse_config(path, &source)
}
