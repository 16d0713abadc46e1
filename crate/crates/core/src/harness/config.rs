//! Experiment configuration: a named preset supplies every default, and a TOML
//! file overrides any subset of keys. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraint::{CostShaping, DualParams};
use crate::env::EnvConfig;
use crate::error::{ConfigError, Error, Result};
use crate::learner::{LearnerConfig, TrainSetup};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Full-scale learner: 3 x 1024 network, 10 000 episodes.
    Full,
    /// Single-CPU scale: 2 x 128 network, 500 episodes.
    #[default]
    Desk,
    /// Seconds-long plumbing check: 5 episodes, tiny network.
    Smoke,
}

impl Preset {
    pub fn label(self) -> &'static str {
        match self {
            Preset::Full => "full",
            Preset::Desk => "desk",
            Preset::Smoke => "smoke",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub episodes: u32,
    /// Dual variable at the start of an evaluation; it then follows the
    /// online dual update only.
    pub lambda0: f64,
    /// Seed of evaluation and baseline rollouts.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 50,
            lambda0: 0.0,
            seed: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// Training seed.
    pub seed: u64,
    /// Scaled and smoothed constraint signal (on) or the raw relative
    /// violation without tanh or EMA (off).
    pub scaling: bool,
    pub out_dir: PathBuf,
    pub env: EnvConfig,
    pub dual: DualParams,
    pub learner: LearnerConfig,
    pub eval: EvalConfig,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let learner = match preset {
            Preset::Full => LearnerConfig::default(),
            Preset::Desk => LearnerConfig {
                hidden: vec![128, 128],
                batch_size: 64,
                learning_rate: 1e-4,
                episodes: 500,
                ..LearnerConfig::default()
            },
            Preset::Smoke => LearnerConfig {
                hidden: vec![16],
                batch_size: 32,
                learning_rate: 1e-3,
                buffer_capacity: 1000,
                target_sync_interval: 100,
                episodes: 5,
                ..LearnerConfig::default()
            },
        };
        let eval = match preset {
            Preset::Smoke => EvalConfig {
                episodes: 2,
                ..EvalConfig::default()
            },
            _ => EvalConfig::default(),
        };
        Self {
            preset,
            seed: 1,
            scaling: true,
            out_dir: PathBuf::from("runs"),
            env: EnvConfig::default(),
            dual: DualParams::default(),
            learner,
            eval,
        }
    }

    pub fn shaping(&self) -> CostShaping {
        if self.scaling {
            CostShaping::Scaled
        } else {
            CostShaping::Raw
        }
    }

    pub fn train_setup(&self) -> TrainSetup {
        TrainSetup {
            env: self.env.clone(),
            dual: self.dual.clone(),
            shaping: self.shaping(),
            learner: self.learner.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env.validate().map_err(|e| e.within("env"))?;
        self.dual.validate().map_err(|e| e.within("dual"))?;
        self.learner.validate().map_err(|e| e.within("learner"))?;
        if self.eval.episodes == 0 {
            return Err(ConfigError::invalid("eval.episodes", "must be >= 1"));
        }
        if !(0.0..=self.dual.lambda_max).contains(&self.eval.lambda0) {
            return Err(ConfigError::invalid(
                "eval.lambda0",
                "must lie in [0, dual.lambda_max]",
            ));
        }
        Ok(())
    }

    /// Parses TOML text on top of the preset it names (`preset = "..."`,
    /// default `desk`). A run manifest is accepted too: its `config` table is
    /// used.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_string(),
            message,
        };
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
        if table.contains_key("manifest_format") {
            table = match table.remove("config") {
                Some(toml::Value::Table(t)) => t,
                _ => return Err(parse_err("manifest has no [config] table".into())),
            };
        }
        let preset = match table.get("preset") {
            None => Preset::default(),
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| parse_err(format!("preset: {}", e.message())))?,
        };
        let base = toml::Table::try_from(Self::preset(preset)).expect("presets serialize");
        let merged = merge(base, table);
        let cfg: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| parse_err(e.message().to_string()))?;
        cfg.validate().map_err(|e| parse_err(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// Recursively overlays `over` on `base`; tables merge, everything else is replaced.
fn merge(mut base: toml::Table, over: toml::Table) -> toml::Table {
    for (k, v) in over {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                base.insert(k, toml::Value::Table(merge(b, o)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

/// Reads and validates an experiment configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("read {}", path.display()), e))?;
    ExperimentConfig::from_toml_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ActionMode;

    #[test]
    fn full_preset_carries_reference_constants() {
        let c = ExperimentConfig::from_toml_str("preset = \"full\"", "t").unwrap();
        assert_eq!(c.env.metrics.d_th_us, 2000.0);
        assert_eq!(c.dual.kappa, 0.5);
        assert_eq!(c.dual.lambda_max, 5.0);
        assert_eq!(c.dual.t0, 5);
        assert_eq!(c.dual.eta_lambda, 0.05);
        assert_eq!(c.learner.hidden, vec![1024, 1024, 1024]);
        assert_eq!(c.learner.batch_size, 256);
        assert_eq!(c.learner.learning_rate, 1e-5);
        assert_eq!(c.learner.buffer_capacity, 100_000);
        assert_eq!(c.learner.episodes, 10_000);
        assert_eq!(c.env.step_us, 2500);
        assert_eq!(c.env.episode_steps, 100);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentConfig::from_toml_str("foo = 1", "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
        let err = ExperimentConfig::from_toml_str("[dual]\nkapa = 0.3", "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("kapa"), "{err}");
    }

    #[test]
    fn defaults_and_overrides() {
        let c = ExperimentConfig::from_toml_str("", "t").unwrap();
        assert!(!c.env.cr_lbt);
        assert!(c.scaling);
        assert_eq!(c.preset, Preset::Desk);
        let c = ExperimentConfig::from_toml_str(
            "preset = \"smoke\"\nseed = 9\n[env]\ncr_lbt = true\naction_mode = \"mcot\"\n[learner]\nepisodes = 3",
            "t",
        )
        .unwrap();
        assert!(c.env.cr_lbt);
        assert_eq!(c.env.action_mode, ActionMode::Mcot);
        assert_eq!(c.learner.episodes, 3);
        assert_eq!(c.learner.hidden, vec![16], "untouched preset keys survive");
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn invalid_values_name_the_key() {
        let err = ExperimentConfig::from_toml_str("[dual]\nkappa = -1.0", "t").unwrap_err();
        assert!(err.to_string().contains("dual.kappa"), "{err}");
        let err = ExperimentConfig::from_toml_str(
            "[[env.contenders]]\ntech = \"nru\"\npclass = \"pc1\"\nparams = { aifsn = 2, cw_min = 4, cw_max = 7, mcot_us = 2000 }",
            "t",
        )
        .unwrap_err();
        assert!(err.to_string().contains("env.contenders[0].cw_min"), "{err}");
        let err = ExperimentConfig::from_toml_str("preset = \"huge\"", "t").unwrap_err();
        assert!(err.to_string().contains("preset"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        for p in [Preset::Full, Preset::Desk, Preset::Smoke] {
            let c = ExperimentConfig::preset(p);
            let back = ExperimentConfig::from_toml_str(&c.to_toml_string(), "t").unwrap();
            assert_eq!(back, c);
        }
    }
}
