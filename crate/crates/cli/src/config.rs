//! Run configuration: one TOML file plus `--set` and `GF_SEED` overrides.
//!
//! ```toml
//! map = "bundled:garage-11x7"   # or a path relative to this file
//! output = "runs/demo"
//!
//! [env]
//! visibility_k = 5
//! max_error = 10
//! six_stall_axis = "random"     # random | north-south | east-west
//!
//! [train]
//! total_timesteps = 100000
//! seed = 0
//! ```
//!
//! Sections `reward`, `metrics` and `sim` take the fields of the matching
//! library types; omitted keys keep their defaults.

use std::path::{Path, PathBuf};

use garagegen::dqn::TrainConfig;
use garagegen::env::{AxisPolicy, EnvConfig};
use garagegen::grid::{parse_initial_map, Axis, EncodingMatrix};
use garagegen::maps;
use garagegen::metrics::MetricsConfig;
use garagegen::reward::RewardParams;
use garagegen::sim::SimConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

pub const BUNDLED_PREFIX: &str = "bundled:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisSetting {
    Random,
    NorthSouth,
    EastWest,
}

impl From<AxisSetting> for AxisPolicy {
    fn from(a: AxisSetting) -> Self {
        match a {
            AxisSetting::Random => AxisPolicy::RandomPerEpisode,
            AxisSetting::NorthSouth => AxisPolicy::Fixed(Axis::NorthSouth),
            AxisSetting::EastWest => AxisPolicy::Fixed(Axis::EastWest),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub visibility_k: usize,
    pub max_error: u32,
    /// Defaults to four times the map area.
    pub max_steps: Option<usize>,
    pub six_stall_axis: AxisSetting,
}

impl Default for EnvSection {
    fn default() -> Self {
        let d = EnvConfig::default();
        Self {
            visibility_k: d.visibility_k,
            max_error: d.max_error,
            max_steps: d.max_steps,
            six_stall_axis: AxisSetting::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub map: String,
    pub output: PathBuf,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub reward: RewardParams,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub sim: SimConfig,
}

/// A parsed configuration together with the directory relative paths
/// resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl RunConfig {
    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            visibility_k: self.env.visibility_k,
            max_error: self.env.max_error,
            max_steps: self.env.max_steps,
            six_stall_axis: self.env.six_stall_axis.into(),
            reward: self.reward.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    fn validate(&self) -> Result<(), CliError> {
        self.env_config()
            .validate()
            .map_err(|e| CliError::Config(format!("[env]/[reward]: {e}")))?;
        self.train
            .validate()
            .map_err(|e| CliError::Config(format!("[train]: {e}")))?;
        self.sim
            .validate()
            .map_err(|e| CliError::Config(format!("[sim]: {e}")))?;
        Ok(())
    }
}

impl Loaded {
    /// Parses `text` after applying the seed override and then each
    /// `section.key=value` assignment in order.
    pub fn parse(
        text: &str,
        base: &Path,
        seed: Option<u64>,
        sets: &[String],
    ) -> Result<Self, CliError> {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if let Some(seed) = seed {
            for section in ["train", "sim"] {
                assign(&mut table, &format!("{section}.seed"), Value::Integer(seed as i64))?;
            }
        }
        for s in sets {
            let (key, raw) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set {s:?}: expected key=value")))?;
            assign(&mut table, key.trim(), literal(raw.trim()))?;
        }
        let config = RunConfig::deserialize(Value::Table(table))
            .map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        let loaded = Self {
            config,
            base: base.to_path_buf(),
        };
        loaded.initial_map()?;
        Ok(loaded)
    }

    pub fn load(path: &Path, seed: Option<u64>, sets: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, seed, sets)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output)
    }

    pub fn initial_map(&self) -> Result<EncodingMatrix, CliError> {
        let map = &self.config.map;
        if let Some(name) = map.strip_prefix(BUNDLED_PREFIX) {
            return maps::bundled(name).ok_or_else(|| {
                let known: Vec<&str> = maps::NAMED.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!(
                    "unknown bundled map {name:?} (known: {})",
                    known.join(", ")
                ))
            });
        }
        let path = self.resolve(Path::new(map));
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("map {}: {e}", path.display())))?;
        parse_initial_map(&text).map_err(|e| CliError::Config(format!("map {}: {e}", path.display())))
    }
}

/// TOML literal if `raw` parses as one, otherwise a bare string.
fn literal(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn assign(table: &mut Table, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("--set: bad key {key:?}")));
    }
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for s in sections {
        let entry = cur
            .entry(s.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: {s} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
