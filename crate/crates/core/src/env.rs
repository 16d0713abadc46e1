//! Control-step environment: 2.5 ms steps, 100-step episodes, discrete MAC
//! parameter actions, and the (fairness, delay) signal pair per step.

use serde::{Deserialize, Serialize};

use crate::constraint::{augment_state, CostShaping, DualController, DualParams, ViolationSignal};
use crate::error::{ConfigError, Error, Result};
use crate::medium::{
    ClassParams, ClassUpdate, ContenderConfig, MediumParams, Micros, PriorityClass, Simulator,
    Tech,
};
use crate::metrics::{build_observation, observation_dim, step_metrics, MetricsParams, StepMetrics};

/// Which MAC parameter the controller actuates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    #[default]
    Cw,
    Aifsn,
    Mcot,
}

impl ActionMode {
    pub fn label(self) -> &'static str {
        match self {
            ActionMode::Cw => "cw",
            ActionMode::Aifsn => "aifsn",
            ActionMode::Mcot => "mcot",
        }
    }
}

/// CW exponent offsets: `cw_max = 2^(a + b) - 1`.
pub const CW_OFFSET_PC1: u32 = 0;
pub const CW_OFFSET_PC3: u32 = 4;

/// Option values of one action, one per actuated class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacAction {
    /// CW exponent, AIFSN or MCOT in microseconds, depending on the mode.
    pub pc1: u32,
    pub pc3: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSpace {
    pub mode: ActionMode,
    pub pc1_options: Vec<u32>,
    pub pc3_options: Vec<u32>,
}

impl ActionSpace {
    pub fn new(mode: ActionMode) -> Self {
        let (pc1_options, pc3_options) = match mode {
            ActionMode::Cw => ((0..=6).collect(), (0..=6).collect()),
            ActionMode::Aifsn => ((1..=3).collect(), (1..=7).collect()),
            ActionMode::Mcot => {
                let mcot: Vec<u32> = (0..7).map(|k| 1000 + 500 * k).collect();
                (mcot.clone(), mcot)
            }
        };
        Self {
            mode,
            pc1_options,
            pc3_options,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.pc1_options.len() * self.pc3_options.len()
    }

    /// Row-major decode: the PC1 option varies slowest.
    pub fn decode(&self, index: usize) -> Result<MacAction> {
        let cardinality = self.cardinality();
        if index >= cardinality {
            return Err(Error::ActionOutOfRange { index, cardinality });
        }
        let cols = self.pc3_options.len();
        Ok(MacAction {
            pc1: self.pc1_options[index / cols],
            pc3: self.pc3_options[index % cols],
        })
    }

    /// Inverse of [`decode`](Self::decode); `None` when a value is off the grid.
    pub fn encode(&self, action: MacAction) -> Option<usize> {
        let i = self.pc1_options.iter().position(|&v| v == action.pc1)?;
        let j = self.pc3_options.iter().position(|&v| v == action.pc3)?;
        Some(i * self.pc3_options.len() + j)
    }

    /// Parameters of a class once the action is applied on top of `base`.
    pub fn class_params(&self, pclass: PriorityClass, value: u32, base: ClassParams) -> ClassParams {
        match self.mode {
            ActionMode::Cw => {
                let offset = match pclass {
                    PriorityClass::Pc1 => CW_OFFSET_PC1,
                    PriorityClass::Pc3 => CW_OFFSET_PC3,
                };
                let cw_max = (1u32 << (value + offset)) - 1;
                ClassParams {
                    cw_max,
                    cw_min: base.cw_min.min(cw_max),
                    ..base
                }
            }
            ActionMode::Aifsn => ClassParams {
                aifsn: value,
                ..base
            },
            ActionMode::Mcot => ClassParams {
                mcot_us: value as Micros,
                ..base
            },
        }
    }

    /// Action whose decoded parameters reproduce `pc1`/`pc3` defaults, if any.
    pub fn default_action(&self, pc1: ClassParams, pc3: ClassParams) -> Option<usize> {
        let value = |pclass: PriorityClass, p: ClassParams, opts: &[u32]| {
            opts.iter()
                .copied()
                .find(|&v| self.class_params(pclass, v, p) == p)
        };
        self.encode(MacAction {
            pc1: value(PriorityClass::Pc1, pc1, &self.pc1_options)?,
            pc3: value(PriorityClass::Pc3, pc3, &self.pc3_options)?,
        })
    }
}

/// ETSI-style default parameters of a priority class.
pub fn default_class_params(pclass: PriorityClass) -> ClassParams {
    match pclass {
        PriorityClass::Pc1 => ClassParams {
            aifsn: 2,
            cw_min: 3,
            cw_max: 7,
            mcot_us: 2000,
        },
        PriorityClass::Pc3 => ClassParams {
            aifsn: 3,
            cw_min: 15,
            cw_max: 63,
            mcot_us: 4000,
        },
    }
}

/// The reference coexistence scenario: one gNB PC1, one gNB PC3 and one
/// Wi-Fi AP PC3.
pub fn coexistence_contenders() -> Vec<ContenderConfig> {
    vec![
        ContenderConfig::new(Tech::Nru, PriorityClass::Pc1, default_class_params(PriorityClass::Pc1)),
        ContenderConfig::new(Tech::Nru, PriorityClass::Pc3, default_class_params(PriorityClass::Pc3)),
        ContenderConfig::new(Tech::Wifi, PriorityClass::Pc3, default_class_params(PriorityClass::Pc3)),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub medium: MediumParams,
    pub contenders: Vec<ContenderConfig>,
    pub cr_lbt: bool,
    pub action_mode: ActionMode,
    pub step_us: Micros,
    pub episode_steps: u32,
    /// Also apply actions to Wi-Fi contenders of the same class.
    pub actuate_ap: bool,
    /// Rebuild the simulator at every episode start instead of continuing.
    pub hard_reset: bool,
    pub metrics: MetricsParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            medium: MediumParams::default(),
            contenders: coexistence_contenders(),
            cr_lbt: false,
            action_mode: ActionMode::Cw,
            step_us: 2500,
            episode_steps: 100,
            actuate_ap: false,
            hard_reset: false,
            metrics: MetricsParams::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.medium.validate().map_err(|e| e.within("medium"))?;
        if self.contenders.is_empty() {
            return Err(ConfigError::invalid("contenders", "list must not be empty"));
        }
        for (i, c) in self.contenders.iter().enumerate() {
            c.validate(&self.medium)
                .map_err(|e| e.within(&format!("contenders[{i}]")))?;
        }
        if self.step_us == 0 {
            return Err(ConfigError::invalid("step_us", "must be > 0"));
        }
        if self.episode_steps == 0 {
            return Err(ConfigError::invalid("episode_steps", "must be >= 1"));
        }
        self.metrics.validate().map_err(|e| e.within("metrics"))?;
        let space = ActionSpace::new(self.action_mode);
        for c in self.actuated() {
            for idx in 0..space.cardinality() {
                let a = space.decode(idx).expect("in range");
                let v = match c.pclass {
                    PriorityClass::Pc1 => a.pc1,
                    PriorityClass::Pc3 => a.pc3,
                };
                space
                    .class_params(c.pclass, v, c.params)
                    .validate(&self.medium)
                    .map_err(|e| e.within("action_mode"))?;
            }
        }
        Ok(())
    }

    fn actuated(&self) -> impl Iterator<Item = &ContenderConfig> {
        self.contenders
            .iter()
            .filter(move |c| c.tech == Tech::Nru || self.actuate_ap)
    }

    pub fn node_count(&self) -> usize {
        self.contenders.iter().map(|c| c.count as usize).sum()
    }

    /// Length of the augmented observation.
    pub fn observation_dim(&self) -> usize {
        observation_dim(self.node_count()) + 1
    }
}

#[derive(Clone, Debug)]
pub struct StepResult {
    /// Augmented observation after the step (carries the updated dual variable).
    pub observation: Vec<f64>,
    /// Windowed airtime fairness.
    pub f0: f64,
    /// Smoothed PC1 access delay in microseconds.
    pub f1: f64,
    pub signal: ViolationSignal,
    /// Dual variable in force while the step ran.
    pub lambda: f64,
    pub dual_updated: bool,
    pub done: bool,
    /// 1-based step index inside the episode.
    pub step: u32,
    pub info: StepMetrics,
}

pub struct Env {
    config: EnvConfig,
    space: ActionSpace,
    sim: Simulator,
    metrics: StepMetrics,
    dual: DualController,
    step: u32,
}

impl Env {
    pub fn new(
        config: EnvConfig,
        dual: DualParams,
        shaping: CostShaping,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        dual.validate().map_err(|e| e.within("dual"))?;
        let sim = Simulator::new(config.medium.clone(), &config.contenders, config.cr_lbt, seed)?;
        let n = sim.node_count();
        Ok(Self {
            space: ActionSpace::new(config.action_mode),
            config,
            sim,
            metrics: StepMetrics::zeroed(n),
            dual: DualController::new(dual, shaping),
            step: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn dual(&self) -> &DualController {
        &self.dual
    }

    pub fn dual_mut(&mut self) -> &mut DualController {
        &mut self.dual
    }

    pub fn metrics(&self) -> &StepMetrics {
        &self.metrics
    }

    pub fn step_index(&self) -> u32 {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.config.episode_steps
    }

    pub fn observation_dim(&self) -> usize {
        self.config.observation_dim()
    }

    pub fn observation(&self) -> Vec<f64> {
        let obs = build_observation(&self.metrics, self.config.metrics.d_th_us);
        augment_state(&obs, self.dual.lambda, self.dual.params.lambda_max)
    }

    /// Fresh simulator, zeroed metrics, configured default parameters and
    /// dual variable `lambda0`.
    pub fn reset(&mut self, seed: u64, lambda0: f64) -> Vec<f64> {
        self.sim = Simulator::new(
            self.config.medium.clone(),
            &self.config.contenders,
            self.config.cr_lbt,
            seed,
        )
        .expect("configuration validated at construction");
        self.metrics = StepMetrics::zeroed(self.sim.node_count());
        self.dual = DualController::new(self.dual.params.clone(), self.dual.shaping);
        self.dual.set_lambda(lambda0);
        self.step = 0;
        self.observation()
    }

    /// Starts a new episode on the running medium: the simulator, metric
    /// smoothers and dual smoother carry over; the step counter restarts and
    /// the dual variable is set to `lambda0`.
    pub fn begin_episode(&mut self, lambda0: f64) -> Vec<f64> {
        self.dual.set_lambda(lambda0);
        self.step = 0;
        self.observation()
    }

    /// Applies the decoded action, then advances one control step.
    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        let a = self.space.decode(action)?;
        let updates: Vec<ClassUpdate> = self
            .config
            .actuated()
            .map(|c| {
                let v = match c.pclass {
                    PriorityClass::Pc1 => a.pc1,
                    PriorityClass::Pc3 => a.pc3,
                };
                ClassUpdate {
                    tech: c.tech,
                    pclass: c.pclass,
                    params: self.space.class_params(c.pclass, v, c.params),
                }
            })
            .collect();
        self.sim.apply_mac_params(&updates)?;
        Ok(self.advance())
    }

    /// Advances one control step with the parameters currently in force.
    pub fn step_fixed(&mut self) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        Ok(self.advance())
    }

    fn advance(&mut self) -> StepResult {
        let window = self.sim.run_for(self.config.step_us);
        self.metrics = step_metrics(
            &window,
            self.sim.node_info(),
            &self.metrics,
            &self.config.metrics,
        );
        self.step += 1;
        let d_th = self.config.metrics.d_th_us;
        let signal = self.dual.signal(self.metrics.pc1_delay_smooth_us, d_th);
        let lambda = self.dual.lambda;
        let dual_updated = self.dual.observe(&signal);
        StepResult {
            observation: self.observation(),
            f0: self.metrics.jfi,
            f1: self.metrics.pc1_delay_smooth_us,
            signal,
            lambda,
            dual_updated,
            done: self.is_done(),
            step: self.step,
            info: self.metrics.clone(),
        }
    }
}
