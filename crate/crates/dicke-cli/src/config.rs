//! Flat key-value run configuration.
//!
//! Every knob lives in one namespace: a TOML file supplies base values,
//! command-line flags override individual keys, and each command pulls
//! out what it needs. Bookkeeping keys carry sensible defaults; keys
//! that select the physics (couplings, drive timing, sweep lists) must
//! be given explicitly.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use dicke::analysis::{PlateauWindow, SectorPolicy};
use dicke::drives::ProtocolKind;
use dicke::dynamics::EvolutionPlan;
use dicke::hilbert::{build_basis, ProductBasis};
use dicke::model::{DriveParams, ModelParams};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub omega: Option<f64>,
    pub omega0: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub amplitude: Option<f64>,
    pub omega_d: Option<f64>,
    pub period: Option<f64>,
    pub n_atoms: Option<usize>,
    pub n_max: Option<usize>,
    pub protocol: Option<String>,
    pub max_steps: Option<u64>,
    pub max_level: Option<u32>,
    pub target_energy: Option<f64>,
    pub count: Option<usize>,
    pub omega_d_list: Option<Vec<f64>>,
    pub energy_list: Option<Vec<f64>>,
    pub trim_fraction: Option<f64>,
    pub sector_policy: Option<String>,
    pub sustain: Option<usize>,
    pub plateau_first: Option<usize>,
    pub plateau_last: Option<usize>,
    pub plateau_start: Option<f64>,
    pub plateau_end: Option<f64>,
    pub g1_min: Option<f64>,
    pub g1_max: Option<f64>,
    pub g1_steps: Option<usize>,
    pub g2_min: Option<f64>,
    pub g2_max: Option<f64>,
    pub g2_steps: Option<usize>,
    pub delta_n_max: Option<usize>,
    pub per_state: Option<bool>,
    pub pipeline: Option<String>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub line_output: Option<PathBuf>,
    pub fit_output: Option<PathBuf>,
}

/// Command-line overrides. Field names match [`RunConfig`] keys one to
/// one; a flag that is present wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file with the same keys as the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Boson frequency.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Atomic splitting.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Rotating coupling.
    #[arg(long)]
    pub g1: Option<f64>,
    /// Counter-rotating coupling.
    #[arg(long)]
    pub g2: Option<f64>,
    /// Drive amplitude added to both couplings during the first half step.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Drive frequency; exclusive with --period.
    #[arg(long)]
    pub omega_d: Option<f64>,
    /// Drive period; exclusive with --omega-d.
    #[arg(long)]
    pub period: Option<f64>,
    /// Number of atoms.
    #[arg(long)]
    pub n_atoms: Option<usize>,
    /// Boson cutoff (highest kept Fock level).
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Drive protocol: periodic, thue-morse, or fibonacci.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Cycle budget for the periodic protocol.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Recursion-level budget for the sequence protocols.
    #[arg(long)]
    pub max_level: Option<u32>,
    /// Decoupled energy the initial ensemble clusters around.
    #[arg(long)]
    pub target_energy: Option<f64>,
    /// Number of initial states.
    #[arg(long)]
    pub count: Option<usize>,
    /// Frequency sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub omega_d_list: Option<Vec<f64>>,
    /// Initial-energy sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub energy_list: Option<Vec<f64>>,
    /// Fraction of levels dropped at each spectral edge.
    #[arg(long)]
    pub trim_fraction: Option<f64>,
    /// Level-statistics sector policy: per-sector or full.
    #[arg(long)]
    pub sector_policy: Option<String>,
    /// Samples a threshold crossing must hold to count as heating.
    #[arg(long)]
    pub sustain: Option<usize>,
    /// First plateau sample (1-based), when the window is given in levels.
    #[arg(long)]
    pub plateau_first: Option<usize>,
    /// Last plateau sample (1-based, inclusive).
    #[arg(long)]
    pub plateau_last: Option<usize>,
    /// Plateau window start time; needs --plateau-end.
    #[arg(long)]
    pub plateau_start: Option<f64>,
    /// Plateau window end time, inclusive.
    #[arg(long)]
    pub plateau_end: Option<f64>,
    /// Coupling grid: lowest g1.
    #[arg(long)]
    pub g1_min: Option<f64>,
    /// Coupling grid: highest g1.
    #[arg(long)]
    pub g1_max: Option<f64>,
    /// Coupling grid: number of g1 points.
    #[arg(long)]
    pub g1_steps: Option<usize>,
    /// Coupling grid: lowest g2.
    #[arg(long)]
    pub g2_min: Option<f64>,
    /// Coupling grid: highest g2.
    #[arg(long)]
    pub g2_max: Option<f64>,
    /// Coupling grid: number of g2 points.
    #[arg(long)]
    pub g2_steps: Option<usize>,
    /// Extra boson levels for the convergence comparison.
    #[arg(long)]
    pub delta_n_max: Option<usize>,
    /// Write per-state columns next to the ensemble mean.
    #[arg(long)]
    pub per_state: Option<bool>,
    /// Convergence pipeline: evolve or level-stats.
    #[arg(long)]
    pub pipeline: Option<String>,
    /// Worker threads for sweep points.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Primary output file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Critical-line overlay file (phase-diagram only).
    #[arg(long)]
    pub line_output: Option<PathBuf>,
    /// Fit result JSON file (heating only).
    #[arg(long)]
    pub fit_output: Option<PathBuf>,
}

macro_rules! take {
    ($cfg:ident, $ov:ident, $($f:ident),* $(,)?) => {
        $( if $ov.$f.is_some() { $cfg.$f = $ov.$f.clone(); } )*
    };
}

fn require<T: Clone>(value: &Option<T>, key: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v.clone()),
        None => bail!(
            "missing required key `{key}` (set it in the config file or with --{})",
            key.replace('_', "-")
        ),
    }
}

impl RunConfig {
    /// Config file (when given) merged with flag overrides, flags winning.
    pub fn resolve(ov: &Overrides) -> Result<RunConfig> {
        let mut cfg: RunConfig = match &ov.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config file {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        take!(
            cfg, ov, omega, omega0, g1, g2, amplitude, omega_d, period, n_atoms, n_max,
            protocol, max_steps, max_level, target_energy, count, omega_d_list, energy_list,
            trim_fraction, sector_policy, sustain, plateau_first, plateau_last, plateau_start,
            plateau_end, g1_min, g1_max, g1_steps, g2_min, g2_max, g2_steps, delta_n_max,
            per_state, pipeline, workers, output, line_output, fit_output,
        );
        if cfg.workers() == 0 {
            bail!("workers must be at least 1");
        }
        if cfg.omega_d.is_some() && cfg.period.is_some() {
            bail!("omega_d and period both set; give exactly one");
        }
        if cfg.plateau_start.is_some() != cfg.plateau_end.is_some() {
            bail!("plateau_start and plateau_end must be set together");
        }
        Ok(cfg)
    }

    pub fn omega(&self) -> f64 {
        self.omega.unwrap_or(1.0)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0.unwrap_or(1.0)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude.unwrap_or(1.0)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms.unwrap_or(10)
    }

    pub fn n_max(&self) -> usize {
        self.n_max.unwrap_or(199)
    }

    pub fn count(&self) -> usize {
        self.count.unwrap_or(50)
    }

    pub fn trim_fraction(&self) -> f64 {
        self.trim_fraction.unwrap_or(0.1)
    }

    pub fn sustain(&self) -> usize {
        self.sustain.unwrap_or(2)
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps.unwrap_or(1_000_000)
    }

    pub fn max_level(&self) -> u32 {
        self.max_level.unwrap_or(30)
    }

    pub fn delta_n_max(&self) -> usize {
        self.delta_n_max.unwrap_or(50)
    }

    pub fn per_state(&self) -> bool {
        self.per_state.unwrap_or(false)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn couplings(&self) -> Result<(f64, f64)> {
        Ok((require(&self.g1, "g1")?, require(&self.g2, "g2")?))
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let (g1, g2) = self.couplings()?;
        Ok(ModelParams::new(self.omega(), self.omega0(), g1, g2)?)
    }

    pub fn drive(&self) -> Result<DriveParams> {
        if let Some(wd) = self.omega_d {
            return Ok(DriveParams::from_frequency(self.amplitude(), wd)?);
        }
        if let Some(t) = self.period {
            return Ok(DriveParams::new(self.amplitude(), t)?);
        }
        bail!("missing drive timing: set omega_d or period");
    }

    pub fn basis(&self) -> Result<ProductBasis> {
        Ok(build_basis(self.n_atoms(), self.n_max())?)
    }

    pub fn target_energy(&self) -> Result<f64> {
        require(&self.target_energy, "target_energy")
    }

    pub fn protocol(&self) -> Result<ProtocolKind> {
        match self.protocol.as_deref().unwrap_or("periodic") {
            "periodic" => Ok(ProtocolKind::Periodic),
            "thue-morse" => Ok(ProtocolKind::ThueMorse),
            "fibonacci" => Ok(ProtocolKind::Fibonacci),
            other => bail!("unknown protocol `{other}` (periodic, thue-morse, fibonacci)"),
        }
    }

    pub fn plan(&self) -> Result<EvolutionPlan> {
        Ok(match self.protocol()? {
            ProtocolKind::Periodic => EvolutionPlan::Periodic { max_steps: self.max_steps() },
            ProtocolKind::ThueMorse => EvolutionPlan::ThueMorse { max_level: self.max_level() },
            ProtocolKind::Fibonacci => EvolutionPlan::Fibonacci { max_level: self.max_level() },
        })
    }

    pub fn sector_policy(&self) -> Result<SectorPolicy> {
        match self.sector_policy.as_deref().unwrap_or("per-sector") {
            "per-sector" => Ok(SectorPolicy::PerParitySector),
            "full" => Ok(SectorPolicy::Full),
            other => bail!("unknown sector_policy `{other}` (per-sector, full)"),
        }
    }

    pub fn plateau_window(&self) -> Result<PlateauWindow> {
        if let (Some(start), Some(end)) = (self.plateau_start, self.plateau_end) {
            return Ok(PlateauWindow::Times { start, end });
        }
        Ok(PlateauWindow::Levels {
            first: self.plateau_first.unwrap_or(5),
            last: self.plateau_last.unwrap_or(10),
        })
    }

    pub fn output(&self, default_name: &str) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from(default_name))
    }

    /// Every effective key-value pair, defaults resolved, sorted by key.
    /// Embedded into each output file so a result can be traced back to
    /// its exact configuration.
    pub fn resolved_entries(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        put("omega", self.omega().to_string());
        put("omega0", self.omega0().to_string());
        put("amplitude", self.amplitude().to_string());
        put("n_atoms", self.n_atoms().to_string());
        put("n_max", self.n_max().to_string());
        put("count", self.count().to_string());
        put("trim_fraction", self.trim_fraction().to_string());
        put(
            "sector_policy",
            self.sector_policy.clone().unwrap_or_else(|| "per-sector".into()),
        );
        put("sustain", self.sustain().to_string());
        put("protocol", self.protocol.clone().unwrap_or_else(|| "periodic".into()));
        put("workers", self.workers().to_string());
        if let Some(v) = self.g1 {
            put("g1", v.to_string());
        }
        if let Some(v) = self.g2 {
            put("g2", v.to_string());
        }
        if let Some(v) = self.omega_d {
            put("omega_d", v.to_string());
        }
        if let Some(v) = self.period {
            put("period", v.to_string());
        }
        if let Some(v) = self.target_energy {
            put("target_energy", v.to_string());
        }
        let join = |xs: &[f64]| {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        };
        if let Some(v) = &self.omega_d_list {
            put("omega_d_list", format!("[{}]", join(v)));
        }
        if let Some(v) = &self.energy_list {
            put("energy_list", format!("[{}]", join(v)));
        }
        match self.plateau_window() {
            Ok(PlateauWindow::Times { start, end }) => {
                put("plateau_start", start.to_string());
                put("plateau_end", end.to_string());
            }
            _ => {
                put("plateau_first", self.plateau_first.unwrap_or(5).to_string());
                put("plateau_last", self.plateau_last.unwrap_or(10).to_string());
            }
        }
        match self.protocol() {
            Ok(ProtocolKind::Periodic) | Err(_) => put("max_steps", self.max_steps().to_string()),
            Ok(_) => put("max_level", self.max_level().to_string()),
        }
        for (key, v) in [
            ("g1_min", self.g1_min),
            ("g1_max", self.g1_max),
            ("g2_min", self.g2_min),
            ("g2_max", self.g2_max),
        ] {
            if let Some(v) = v {
                put(key, v.to_string());
            }
        }
        for (key, v) in [("g1_steps", self.g1_steps), ("g2_steps", self.g2_steps)] {
            if let Some(v) = v {
                put(key, v.to_string());
            }
        }
        if let Some(v) = &self.pipeline {
            put("pipeline", v.clone());
        }
        if self.pipeline.is_some() || self.delta_n_max.is_some() {
            put("delta_n_max", self.delta_n_max().to_string());
        }
        put("per_state", self.per_state().to_string());
        map
    }
}
