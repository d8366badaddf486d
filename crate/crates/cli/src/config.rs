//! Experiment configuration, list parsing and thread-pool setup.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::ValueEnum;
use mkz_core::{Degree, SmoothingExponent, BUILTIN_NAMES};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

/// Environment variable overriding every other thread-count setting.
pub const THREADS_ENV: &str = "MAXPROD_THREADS";

pub const DEFAULT_GRID_N: usize = 1025;
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Worker count: a positive integer or `"auto"`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Threads {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
            _ => Err(format!("threads must be a positive integer or \"auto\", got {s:?}")),
        }
    }
}

impl Serialize for Threads {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => ser.serialize_str("auto"),
            Threads::Fixed(n) => ser.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(de)? {
            Raw::Count(0) => Err(serde::de::Error::custom("threads must be positive")),
            Raw::Count(n) => Ok(Threads::Fixed(n)),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Builtin names or paths to piecewise-linear function files.
    pub functions: Vec<String>,
    pub m_values: Vec<Degree>,
    pub alphas: Vec<SmoothingExponent>,
    pub grid_n: usize,
    pub tol: f64,
    pub output_format: OutputFormat,
    /// Standard output when absent.
    pub output_path: Option<PathBuf>,
    pub threads: Threads,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            functions: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
            m_values: (2..=9).map(|k| Degree::new(1 << k).unwrap()).collect(),
            alphas: SmoothingExponent::range(8).unwrap(),
            grid_n: DEFAULT_GRID_N,
            tol: DEFAULT_TOL,
            output_format: OutputFormat::Csv,
            output_path: None,
            threads: Threads::Auto,
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(|e| CliError::usage(format!("{e:#}")))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    /// Checks invariants and puts `m` and `alpha` in ascending order.
    pub fn normalize(&mut self) -> CliResult<()> {
        if self.functions.is_empty() {
            return Err(CliError::usage("config: functions must not be empty"));
        }
        if self.m_values.is_empty() {
            return Err(CliError::usage("config: m_values must not be empty"));
        }
        if self.alphas.is_empty() {
            return Err(CliError::usage("config: alphas must not be empty"));
        }
        if self.grid_n < 2 {
            return Err(CliError::usage(format!("config: grid_n must be >= 2, got {}", self.grid_n)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::usage(format!("config: tol must be positive, got {}", self.tol)));
        }
        check_alpha_cap(&self.alphas)?;
        self.m_values.sort_unstable();
        self.m_values.dedup();
        self.alphas.sort_unstable();
        self.alphas.dedup();
        Ok(())
    }
}

pub fn check_alpha_cap(alphas: &[SmoothingExponent]) -> CliResult<()> {
    match alphas.iter().find(|a| a.get() > SmoothingExponent::CLI_MAX) {
        Some(a) => Err(CliError::usage(format!(
            "alpha {} exceeds the cap {}",
            a.get(),
            SmoothingExponent::CLI_MAX
        ))),
        None => Ok(()),
    }
}

/// Comma-separated integers; `a-b` is an inclusive range and `a-b/k` steps by `k`.
pub fn parse_index_list(text: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (range, step) = match item.split_once('/') {
            Some((r, k)) => (r, k.parse::<u64>().map_err(|_| format!("bad step in {item:?}"))?),
            None => (item, 1),
        };
        if step == 0 {
            return Err(format!("step must be positive in {item:?}"));
        }
        match range.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| format!("bad range start in {item:?}"))?;
                let b: u64 = b.trim().parse().map_err(|_| format!("bad range end in {item:?}"))?;
                if a > b {
                    return Err(format!("empty range {item:?}"));
                }
                out.extend((a..=b).step_by(step as usize));
            }
            None => out.push(range.parse().map_err(|_| format!("bad integer {item:?}"))?),
        }
    }
    if out.is_empty() {
        return Err("list is empty".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeList(pub Vec<Degree>);

impl FromStr for DegreeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_index_list(s)?
            .into_iter()
            .map(|m| Degree::new(m).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()
            .map(DegreeList)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaList(pub Vec<SmoothingExponent>);

impl FromStr for AlphaList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_index_list(s)?
            .into_iter()
            .map(|a| {
                let a = u32::try_from(a).map_err(|_| format!("alpha {a} out of range"))?;
                if a > SmoothingExponent::CLI_MAX {
                    return Err(format!("alpha {a} exceeds the cap {}", SmoothingExponent::CLI_MAX));
                }
                SmoothingExponent::new(a).map_err(|e| e.to_string())
            })
            .collect::<Result<_, _>>()
            .map(AlphaList)
    }
}

/// Comma-separated function references.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionList(pub Vec<String>);

impl FromStr for FunctionList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let names: Vec<String> = s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        if names.is_empty() {
            return Err("function list is empty".into());
        }
        Ok(FunctionList(names))
    }
}

impl fmt::Display for FunctionList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(","))
    }
}

/// Installs the global rayon pool. `MAXPROD_THREADS` wins over `requested`.
pub fn init_threads(requested: Threads) -> CliResult<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<Threads>()
            .map_err(|e| CliError::usage(format!("{THREADS_ENV}: {e}")))?,
        Err(_) => requested,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Threads::Fixed(n) = threads {
        builder = builder.num_threads(n);
    }
    // a pool may already exist when called twice in one process
    let _ = builder.build_global();
    Ok(())
}
