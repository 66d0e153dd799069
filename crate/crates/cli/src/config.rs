use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use popdyn::micro::MicroInit;
use popdyn::multi::MultiPopConfig;
use popdyn::{IntensityFunction, LambdaMode, PopulationParams};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Simulator {
    Meso,
    MesoMulti,
    Micro,
    Macro,
    Pdmp,
    Couple,
}

impl Simulator {
    pub fn name(self) -> &'static str {
        match self {
            Simulator::Meso => "meso",
            Simulator::MesoMulti => "meso_multi",
            Simulator::Micro => "micro",
            Simulator::Macro => "macro",
            Simulator::Pdmp => "pdmp",
            Simulator::Couple => "couple",
        }
    }
}

fn default_duration() -> f64 {
    10.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_seed() -> u64 {
    1
}

/// One experiment. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulator: Option<Simulator>,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Seed sweep; when non-empty it replaces `seed`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Single-population mesoscopic runs only; the multi-population table
    /// carries its own.
    #[serde(default)]
    pub lambda_mode: LambdaMode,
    /// Modulating factor of the PDMP (Hz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// PDMP recording grid (s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_dt: Option<f64>,
    /// Initial measure as `[position_mV, weight]` pairs (macro, pdmp, couple).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu0: Option<Vec<[f64; 2]>>,
    /// Second initial measure of a coupled pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu0_tilde: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<MicroInit>,
    /// Write the micro spike raster.
    #[serde(default)]
    pub raster: bool,
    /// History truncation of the macroscopic solver (s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub macro_history: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PopulationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi: Option<MultiPopConfig>,
}

impl ExperimentConfig {
    /// Ready-to-run defaults: the reference population for the discrete
    /// simulators, a bounded sigmoid population of ten neurons at
    /// `Lambda = 40 Hz` for the PDMP.
    pub fn defaults(sim: Simulator) -> Self {
        let mut cfg = ExperimentConfig {
            simulator: Some(sim),
            duration: default_duration(),
            dt: default_dt(),
            seed: default_seed(),
            seeds: Vec::new(),
            output: None,
            lambda_mode: LambdaMode::Full,
            lambda: None,
            record_dt: None,
            nu0: None,
            nu0_tilde: None,
            init: None,
            raster: false,
            macro_history: None,
            params: Some(PopulationParams::reference()),
            multi: None,
        };
        match sim {
            Simulator::Meso | Simulator::Micro => {}
            Simulator::Macro => {
                cfg.duration = 1.0;
                cfg.dt = 1e-4;
                cfg.nu0 = Some(vec![[0.0, 1.0]]);
            }
            Simulator::MesoMulti => {
                cfg.params = None;
                cfg.multi = Some(MultiPopConfig {
                    pops: vec![PopulationParams::reference(); 2],
                    j_matrix: vec![vec![0.0; 2]; 2],
                    lambda_mode: LambdaMode::Full,
                });
            }
            Simulator::Pdmp | Simulator::Couple => {
                cfg.params = Some(
                    PopulationParams::reference()
                        .with_f(IntensityFunction::reference_sigmoid())
                        .with_n(10),
                );
                cfg.lambda = Some(40.0);
                cfg.nu0 = Some(vec![[0.0, 1.0]]);
                if sim == Simulator::Couple {
                    cfg.duration = 200.0;
                    cfg.nu0_tilde = Some(vec![[5.0, 0.5]]);
                } else {
                    cfg.record_dt = Some(1e-3);
                }
            }
        }
        cfg
    }

    /// Parse a config file. A run manifest is accepted too: its `[config]`
    /// table is used, which makes any run reproducible from its outputs.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let is_manifest = table.contains_key("manifest_version");
        let value = match table.get("config") {
            Some(toml::Value::Table(inner)) if is_manifest => inner.clone(),
            _ => table,
        };
        value.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn params(&self) -> Result<&PopulationParams, CliError> {
        self.params
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [params] table".into()))
    }

    /// Structural checks that do not depend on a particular run.
    pub fn validate(&self, sim: Simulator) -> Result<(), CliError> {
        if let Some(declared) = self.simulator {
            if declared != sim {
                return Err(CliError::Config(format!(
                    "config is for simulator '{}' but '{}' was requested",
                    declared.name(),
                    sim.name()
                )));
            }
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(CliError::Config("duration must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Config("dt must be positive".into()));
        }
        match sim {
            Simulator::MesoMulti => {
                let multi = self
                    .multi
                    .as_ref()
                    .ok_or_else(|| CliError::Config("missing [multi] table".into()))?;
                multi.validate()?;
            }
            _ => self.params()?.validate()?,
        }
        if matches!(sim, Simulator::Pdmp | Simulator::Couple) && self.lambda.is_none() {
            return Err(CliError::Config("missing lambda".into()));
        }
        if sim == Simulator::Couple && (self.nu0.is_none() || self.nu0_tilde.is_none()) {
            return Err(CliError::Config("coupled runs need nu0 and nu0_tilde".into()));
        }
        self.lambda_mode.validate()?;
        Ok(())
    }
}

pub fn atoms(list: &Option<Vec<[f64; 2]>>) -> Vec<(f64, f64)> {
    list.as_deref()
        .unwrap_or(&[[0.0, 1.0]])
        .iter()
        .map(|a| (a[0], a[1]))
        .collect()
}

/// Flags shared by every subcommand, layered over the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// TOML experiment config (or a run manifest).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated seed sweep, run in parallel.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Simulated time (s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Time step (s).
    #[arg(long)]
    pub dt: Option<f64>,
}

impl CommonArgs {
    pub fn resolve(&self, sim: Simulator) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::defaults(sim),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.seeds.clear();
        }
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        if let Some(d) = self.duration {
            cfg.duration = d;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        cfg.simulator = Some(sim);
        Ok(cfg)
    }

    pub fn out_dir(&self, cfg: Option<&ExperimentConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        for sim in [
            Simulator::Meso,
            Simulator::MesoMulti,
            Simulator::Micro,
            Simulator::Macro,
            Simulator::Pdmp,
            Simulator::Couple,
        ] {
            let cfg = ExperimentConfig::defaults(sim);
            cfg.validate(sim).unwrap();
            let text = toml::to_string(&cfg).unwrap();
            assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn rejects_unknown_keys_and_mismatched_simulator() {
        assert!(matches!(ExperimentConfig::parse("bogus = 1"), Err(CliError::Config(_))));
        let cfg = ExperimentConfig::defaults(Simulator::Meso);
        assert!(cfg.validate(Simulator::Micro).is_err());
    }

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::parse(
            r#"
            duration = 2
            seeds = [1, 2]
            lambda_mode = { mode = "fixed", lambda = 277.0 }
            [params]
            n = 100
            tau_m = 0.02
            mu = 20.0
            f = { kind = "exponential", c = 10.0, theta = 10.0, delta_u = 1.0 }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.duration, 2.0);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.seed_list(), vec![1, 2]);
        assert_eq!(cfg.lambda_mode, LambdaMode::Fixed { lambda: 277.0 });
        cfg.validate(Simulator::Meso).unwrap();
    }
}
