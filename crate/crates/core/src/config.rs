//! Sweep configuration files.
//!
//! A config is TOML. Scenario keys sit at the top level, the channel model in
//! `[channel_params]`, the sweep grid in `[sweep]` and solver knobs in
//! `[pipeline]`. Every key is optional; missing keys take the defaults of a
//! 20-BS / 200-user / 24-band deployment. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::{AffiliationRule, SizeSchedule};
use crate::freqalloc::ShareDenominator;
use crate::powalloc::SolverOptions;
use crate::scenario::{ChannelParams, ScenarioConfig};
use crate::{Error, Result};

/// Knobs of the per-realization pipeline that are not part of the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub affiliation: AffiliationRule,
    pub denominator: ShareDenominator,
    /// Explicit per-level caps for `m = 1..=num_bs`; the binary-tree schedule when `None`.
    pub size_caps: Option<Vec<usize>>,
    pub solver: SolverOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            affiliation: AffiliationRule::MaxOverBands,
            denominator: ShareDenominator::Total,
            size_caps: None,
            solver: SolverOptions::default(),
        }
    }
}

impl PipelineOptions {
    pub fn size_schedule(&self, num_bs: usize) -> Result<SizeSchedule> {
        match &self.size_caps {
            Some(caps) => SizeSchedule::from_caps(caps.clone()),
            None => Ok(SizeSchedule::binary_tree(num_bs)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scenario: ScenarioConfig,
    pub m_values: Vec<usize>,
    /// Meters.
    pub gamma_d_values: Vec<f64>,
    /// Guaranteed bit rates, bits/s.
    pub cgbr_values: Vec<f64>,
    pub num_realizations: u64,
    pub output_path: PathBuf,
    pub pipeline: PipelineOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            m_values: vec![2, 4, 8],
            gamma_d_values: vec![0.0, 70.0, 140.0, 210.0, 280.0],
            cgbr_values: vec![128e3, 256e3, 512e3],
            num_realizations: 500,
            output_path: PathBuf::from("sweep.csv"),
            pipeline: PipelineOptions::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let num_bs = self.scenario.num_bs;
        if self.m_values.is_empty() || self.gamma_d_values.is_empty() || self.cgbr_values.is_empty() {
            return Err(Error::InvalidConfig("m, gamma_d and cgbr lists must be non-empty".into()));
        }
        if let Some(&m) = self.m_values.iter().find(|&&m| m == 0 || m > num_bs) {
            return Err(Error::LevelOutOfRange { m, num_bs });
        }
        if self.gamma_d_values.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidConfig("gamma_d values must be finite and >= 0".into()));
        }
        if self.cgbr_values.iter().any(|r| r.is_nan() || *r < 0.0) {
            return Err(Error::InvalidConfig("cgbr values must be >= 0".into()));
        }
        if self.num_realizations == 0 {
            return Err(Error::InvalidConfig("num_realizations must be >= 1".into()));
        }
        let solver = &self.pipeline.solver;
        if !(solver.tol > 0.0 && solver.tol.is_finite()) || solver.max_iters == 0 {
            return Err(Error::InvalidConfig("solver tol must be > 0 and max_iters >= 1".into()));
        }
        let schedule = self.pipeline.size_schedule(num_bs)?;
        if schedule.num_bs() != num_bs {
            return Err(Error::InvalidConfig(format!(
                "size_caps has {} entries, expected {num_bs}",
                schedule.num_bs()
            )));
        }
        schedule.check_feasible()
    }
}

// On-disk layout. Kept separate from the domain types so the file format can
// stay flat while the library types stay nested.

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: u64,
    num_bs: usize,
    num_users: usize,
    side_length: f64,
    num_bands: usize,
    total_bandwidth: f64,
    carrier_freq: f64,
    noise_psd: f64,
    user_power_budget: f64,
    channel_params: ChannelParams,
    sweep: FileSweep,
    pipeline: FilePipeline,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct FileSweep {
    m_values: Vec<usize>,
    gamma_d_values: Vec<f64>,
    cgbr_values: Vec<f64>,
    num_realizations: u64,
    output_path: PathBuf,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct FilePipeline {
    affiliation: AffiliationRule,
    share_denominator: ShareDenominator,
    size_caps: Option<Vec<usize>>,
    solver_tol: f64,
    solver_max_iters: usize,
}

impl Default for FileConfig {
    fn default() -> Self {
        SweepConfig::default().into()
    }
}

impl Default for FileSweep {
    fn default() -> Self {
        FileConfig::default().sweep
    }
}

impl Default for FilePipeline {
    fn default() -> Self {
        FileConfig::default().pipeline
    }
}

impl From<SweepConfig> for FileConfig {
    fn from(c: SweepConfig) -> Self {
        let s = c.scenario;
        Self {
            seed: s.seed,
            num_bs: s.num_bs,
            num_users: s.num_users,
            side_length: s.side_length,
            num_bands: s.num_bands,
            total_bandwidth: s.total_bandwidth,
            carrier_freq: s.carrier_freq,
            noise_psd: s.noise_psd,
            user_power_budget: s.user_power_budget,
            channel_params: s.channel_params,
            sweep: FileSweep {
                m_values: c.m_values,
                gamma_d_values: c.gamma_d_values,
                cgbr_values: c.cgbr_values,
                num_realizations: c.num_realizations,
                output_path: c.output_path,
            },
            pipeline: FilePipeline {
                affiliation: c.pipeline.affiliation,
                share_denominator: c.pipeline.denominator,
                size_caps: c.pipeline.size_caps,
                solver_tol: c.pipeline.solver.tol,
                solver_max_iters: c.pipeline.solver.max_iters,
            },
        }
    }
}

impl From<FileConfig> for SweepConfig {
    fn from(f: FileConfig) -> Self {
        Self {
            scenario: ScenarioConfig {
                num_bs: f.num_bs,
                num_users: f.num_users,
                side_length: f.side_length,
                num_bands: f.num_bands,
                total_bandwidth: f.total_bandwidth,
                carrier_freq: f.carrier_freq,
                noise_psd: f.noise_psd,
                user_power_budget: f.user_power_budget,
                channel_params: f.channel_params,
                seed: f.seed,
            },
            m_values: f.sweep.m_values,
            gamma_d_values: f.sweep.gamma_d_values,
            cgbr_values: f.sweep.cgbr_values,
            num_realizations: f.sweep.num_realizations,
            output_path: f.sweep.output_path,
            pipeline: PipelineOptions {
                affiliation: f.pipeline.affiliation,
                denominator: f.pipeline.share_denominator,
                size_caps: f.pipeline.size_caps,
                solver: SolverOptions {
                    tol: f.pipeline.solver_tol,
                    max_iters: f.pipeline.solver_max_iters,
                },
            },
        }
    }
}

/// Parses and validates a config from TOML text.
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    let file: FileConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    let config = SweepConfig::from(file);
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Renders a config back to TOML; `parse_config` reads it back unchanged.
pub fn to_toml(config: &SweepConfig) -> String {
    toml::to_string(&FileConfig::from(config.clone())).expect("config is always representable")
}
