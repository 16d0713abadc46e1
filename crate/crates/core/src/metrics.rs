//! Per-control-step performance signals and the observation vector.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::medium::{NodeAirtime, NodeInfo, OutcomeKind, PriorityClass, WindowReport};

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`. An all-zero vector is
/// treated as perfectly fair.
pub fn jain_index(values: &[f64]) -> Result<f64, ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::invalid("airtimes", "list must not be empty"));
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        return Ok(1.0);
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

#[inline]
pub fn ema_update(prev: f64, sample: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha <= 1.0);
    alpha * sample + (1.0 - alpha) * prev
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsParams {
    pub d_th_us: f64,
    pub alpha_delay: f64,
    pub alpha_fast: f64,
    pub alpha_slow: f64,
    pub alpha_violation: f64,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self {
            d_th_us: 2000.0,
            alpha_delay: 0.2,
            alpha_fast: 0.3,
            alpha_slow: 0.05,
            alpha_violation: 0.05,
        }
    }
}

impl MetricsParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.d_th_us > 0.0) {
            return Err(ConfigError::invalid("d_th_us", "must be > 0"));
        }
        for (field, a) in [
            ("alpha_delay", self.alpha_delay),
            ("alpha_fast", self.alpha_fast),
            ("alpha_slow", self.alpha_slow),
            ("alpha_violation", self.alpha_violation),
        ] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(ConfigError::invalid(field, "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Raw per-node counts of one window, kept for evaluation aggregates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeWindow {
    pub successes: u64,
    pub collisions: u64,
    pub success_us: u64,
    pub collision_us: u64,
    pub overhead_us: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub jfi: f64,
    pub pc1_delay_inst_us: f64,
    /// EMA of the instantaneous PC1 delay.
    pub pc1_delay_smooth_us: f64,
    pub collision_rate: Vec<f64>,
    pub collision_trend: f64,
    pub airtime_util: f64,
    pub violation_rate: f64,
    /// Whether any PC1 frame was delivered in the window.
    pub pc1_completed: bool,
    pub nodes: Vec<NodeWindow>,
    // Smoother state carried between steps.
    pub aggregate_collision: f64,
    pub collision_fast: f64,
    pub collision_slow: f64,
}

impl StepMetrics {
    /// Quiet starting point for `nodes` contenders.
    pub fn zeroed(nodes: usize) -> Self {
        Self {
            jfi: 1.0,
            pc1_delay_inst_us: 0.0,
            pc1_delay_smooth_us: 0.0,
            collision_rate: vec![0.0; nodes],
            collision_trend: 0.0,
            airtime_util: 0.0,
            violation_rate: 0.0,
            pc1_completed: false,
            nodes: vec![NodeWindow::default(); nodes],
            aggregate_collision: 0.0,
            collision_fast: 0.0,
            collision_slow: 0.0,
        }
    }
}

/// Folds one window of simulator output into the next step's metrics.
pub fn step_metrics(
    window: &WindowReport,
    info: &[NodeInfo],
    prev: &StepMetrics,
    params: &MetricsParams,
) -> StepMetrics {
    let n = info.len();
    let mut nodes = vec![NodeWindow::default(); n];
    let mut pc1_delay_sum = 0.0;
    let mut pc1_count = 0u32;
    for o in &window.outcomes {
        let w = &mut nodes[o.node];
        match o.kind {
            OutcomeKind::Success => {
                w.successes += 1;
                if info[o.node].pclass == PriorityClass::Pc1 {
                    pc1_delay_sum += o.access_delay_us.unwrap_or(0) as f64;
                    pc1_count += 1;
                }
            }
            OutcomeKind::Collision => w.collisions += 1,
            OutcomeKind::Rs | OutcomeKind::CrPulse => {}
        }
    }
    for (w, a) in nodes.iter_mut().zip(&window.ledger.per_node) {
        let NodeAirtime {
            success_us,
            collision_us,
            rs_us,
            cr_us,
        } = *a;
        w.success_us = success_us;
        w.collision_us = collision_us;
        w.overhead_us = rs_us + cr_us;
    }

    let collision_rate: Vec<f64> = nodes
        .iter()
        .zip(&prev.collision_rate)
        .map(|(w, &carried)| {
            let attempts = w.successes + w.collisions;
            if attempts == 0 {
                carried
            } else {
                w.collisions as f64 / attempts as f64
            }
        })
        .collect();

    let total_coll: u64 = nodes.iter().map(|w| w.collisions).sum();
    let total_att: u64 = nodes.iter().map(|w| w.successes + w.collisions).sum();
    let aggregate_collision = if total_att == 0 {
        prev.aggregate_collision
    } else {
        total_coll as f64 / total_att as f64
    };
    let collision_fast = ema_update(prev.collision_fast, aggregate_collision, params.alpha_fast);
    let collision_slow = ema_update(prev.collision_slow, aggregate_collision, params.alpha_slow);

    let pc1_completed = pc1_count > 0;
    let pc1_delay_inst_us = if pc1_completed {
        pc1_delay_sum / pc1_count as f64
    } else {
        prev.pc1_delay_inst_us
    };
    let pc1_delay_smooth_us =
        ema_update(prev.pc1_delay_smooth_us, pc1_delay_inst_us, params.alpha_delay);
    let violated = if pc1_delay_smooth_us > params.d_th_us {
        1.0
    } else {
        0.0
    };

    let airtimes: Vec<f64> = nodes.iter().map(|w| w.success_us as f64).collect();
    let jfi = jain_index(&airtimes).expect("at least one contender");

    StepMetrics {
        jfi,
        pc1_delay_inst_us,
        pc1_delay_smooth_us,
        collision_rate,
        collision_trend: collision_fast - collision_slow,
        airtime_util: window.ledger.busy_us as f64 / window.duration_us() as f64,
        violation_rate: ema_update(prev.violation_rate, violated, params.alpha_violation),
        pc1_completed,
        nodes,
        aggregate_collision,
        collision_fast,
        collision_slow,
    }
}

pub const OBS_CLIP: f64 = 5.0;

/// Observation length for `nodes` contenders (before augmentation).
pub fn observation_dim(nodes: usize) -> usize {
    5 + nodes
}

/// `[delay_inst/D_th, delay_smooth/D_th, collision rates.., trend, airtime, violation]`,
/// each clipped to `[-5, 5]`.
pub fn build_observation(metrics: &StepMetrics, d_th_us: f64) -> Vec<f64> {
    let mut obs = Vec::with_capacity(observation_dim(metrics.collision_rate.len()));
    obs.push(metrics.pc1_delay_inst_us / d_th_us);
    obs.push(metrics.pc1_delay_smooth_us / d_th_us);
    obs.extend_from_slice(&metrics.collision_rate);
    obs.push(metrics.collision_trend);
    obs.push(metrics.airtime_util);
    obs.push(metrics.violation_rate);
    for x in &mut obs {
        *x = if x.is_finite() {
            x.clamp(-OBS_CLIP, OBS_CLIP)
        } else if *x > 0.0 {
            OBS_CLIP
        } else if *x < 0.0 {
            -OBS_CLIP
        } else {
            0.0
        };
    }
    obs
}
