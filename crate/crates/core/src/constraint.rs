//! Delay-constraint signal pipeline and the dual variable that prices it.
//!
//! The smoothed PC1 delay is turned into a signed relative slack (positive
//! means the constraint holds), squashed with `tanh(v / kappa)` so that the
//! signal is bounded and does not depend on the threshold's scale. The learner
//! only sees the negative part; the dual variable integrates an exponential
//! moving average of the full signed value, every `t0` steps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::metrics::ema_update;

/// Signed relative slack of a `delay <= d_th` constraint: `(d_th - delay) / d_th`.
#[inline]
pub fn relative_violation(delay: f64, d_th: f64) -> f64 {
    debug_assert!(d_th > 0.0);
    (d_th - delay) / d_th
}

#[inline]
pub fn scale_violation(v: f64, kappa: f64) -> f64 {
    debug_assert!(kappa > 0.0);
    (v / kappa).tanh()
}

/// Cost seen by the learner: only falling short of the constraint is penalized.
#[inline]
pub fn learner_cost(v_scaled: f64) -> f64 {
    v_scaled.min(0.0)
}

/// Uniform draw in `[0, lambda_max]`.
pub fn sample_lambda<R: Rng + ?Sized>(rng: &mut R, lambda_max: f64) -> f64 {
    if lambda_max <= 0.0 {
        return 0.0;
    }
    rng.random_range(0.0..=lambda_max)
}

/// Appends the normalized dual variable to an observation.
pub fn augment_state(obs: &[f64], lambda: f64, lambda_max: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(obs.len() + 1);
    out.extend_from_slice(obs);
    out.push(if lambda_max > 0.0 {
        lambda / lambda_max
    } else {
        0.0
    });
    out
}

/// Relative distance at which the dual variable snaps onto a clamp bound.
pub const BOUND_SNAP: f64 = 1e-12;

/// How the constraint signal is shaped before the learner and the dual use it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostShaping {
    /// tanh-scaled slack of the smoothed delay, EMA into the dual.
    #[default]
    Scaled,
    /// Unbounded slack of the smoothed delay without tanh or EMA, fed directly
    /// to both.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualParams {
    pub lambda_max: f64,
    pub t0: u32,
    pub eta_lambda: f64,
    pub kappa: f64,
    pub alpha_v: f64,
}

impl Default for DualParams {
    fn default() -> Self {
        Self {
            lambda_max: 5.0,
            t0: 5,
            eta_lambda: 0.05,
            kappa: 0.5,
            alpha_v: 0.2,
        }
    }
}

impl DualParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda_max >= 0.0 && self.lambda_max.is_finite()) {
            return Err(ConfigError::invalid("lambda_max", "must be finite and >= 0"));
        }
        if self.t0 == 0 {
            return Err(ConfigError::invalid("t0", "must be >= 1"));
        }
        if !(self.eta_lambda > 0.0) {
            return Err(ConfigError::invalid("eta_lambda", "must be > 0"));
        }
        if !(self.kappa > 0.0) {
            return Err(ConfigError::invalid("kappa", "must be > 0"));
        }
        if !(self.alpha_v > 0.0 && self.alpha_v <= 1.0) {
            return Err(ConfigError::invalid("alpha_v", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// The constraint signals of one step, computed once and shared by the
/// learner and the dual update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViolationSignal {
    /// Signed relative slack.
    pub v: f64,
    /// Value the dual integrates (`tanh(v / kappa)` when scaled, `v` when raw).
    pub v_scaled: f64,
    /// Negative part handed to the learner.
    pub v_neg: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualController {
    pub params: DualParams,
    pub shaping: CostShaping,
    pub lambda: f64,
    /// Smoothed signal the dual update integrates.
    pub v_ema: f64,
    steps: u64,
}

impl DualController {
    pub fn new(params: DualParams, shaping: CostShaping) -> Self {
        Self {
            params,
            shaping,
            lambda: 0.0,
            v_ema: 0.0,
            steps: 0,
        }
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda.clamp(0.0, self.params.lambda_max);
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Shapes the constraint signal from the smoothed PC1 delay.
    pub fn signal(&self, delay_smooth: f64, d_th: f64) -> ViolationSignal {
        let v = relative_violation(delay_smooth, d_th);
        match self.shaping {
            CostShaping::Scaled => {
                let v_scaled = scale_violation(v, self.params.kappa);
                ViolationSignal {
                    v,
                    v_scaled,
                    v_neg: learner_cost(v_scaled),
                }
            }
            CostShaping::Raw => ViolationSignal {
                v,
                v_scaled: v,
                v_neg: learner_cost(v),
            },
        }
    }

    /// Folds one step's signal into the smoother and runs the dual update on
    /// every `t0`-th step. Returns true when the dual moved.
    pub fn observe(&mut self, signal: &ViolationSignal) -> bool {
        self.v_ema = match self.shaping {
            CostShaping::Scaled => ema_update(self.v_ema, signal.v_scaled, self.params.alpha_v),
            CostShaping::Raw => signal.v_scaled,
        };
        self.steps += 1;
        if self.steps.is_multiple_of(self.params.t0 as u64) {
            self.dual_update();
            true
        } else {
            false
        }
    }

    /// Projected descent step `lambda <- clamp(lambda - eta * v_ema, 0, lambda_max)`.
    ///
    /// Results within a relative `1e-12` of a bound are snapped onto it: the
    /// rounding of many repeated `eta * v_ema` steps would otherwise leave
    /// lambda a few ulps short of a bound it reaches in exact arithmetic.
    pub fn dual_update(&mut self) {
        let max = self.params.lambda_max;
        let tol = BOUND_SNAP * max.max(1.0);
        let next = self.lambda - self.params.eta_lambda * self.v_ema;
        self.lambda = if next <= tol {
            0.0
        } else if next >= max - tol {
            max
        } else {
            next
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctrl(lambda: f64, v_ema: f64) -> DualController {
        let mut c = DualController::new(DualParams::default(), CostShaping::Scaled);
        c.lambda = lambda;
        c.v_ema = v_ema;
        c
    }

    #[test]
    fn relative_violation_values() {
        assert_eq!(relative_violation(2000.0, 2000.0), 0.0);
        assert_eq!(relative_violation(0.0, 2000.0), 1.0);
        assert_eq!(relative_violation(4000.0, 2000.0), -1.0);
    }

    #[test]
    fn scaling_values() {
        assert_eq!(scale_violation(0.0, 0.5), 0.0);
        assert!((scale_violation(0.5, 0.5) - 0.761_594_155_955_764_9).abs() < 1e-12);
        assert!((scale_violation(-0.5, 0.5) + 0.761_594_155_955_764_9).abs() < 1e-12);
    }

    #[test]
    fn learner_cost_values() {
        assert_eq!(learner_cost(0.4), 0.0);
        assert_eq!(learner_cost(-0.4), -0.4);
        assert_eq!(learner_cost(0.0), 0.0);
    }

    #[test]
    fn dual_update_values() {
        let mut c = ctrl(1.0, -0.5);
        c.dual_update();
        assert!((c.lambda - 1.025).abs() < 1e-12);
        assert_eq!(c.v_ema, -0.5);

        let mut c = ctrl(0.0, 0.8);
        c.dual_update();
        assert_eq!(c.lambda, 0.0);

        let mut c = ctrl(4.99, -1.0);
        c.dual_update();
        assert_eq!(c.lambda, 5.0);
    }

    #[test]
    fn full_range_sweep_takes_exactly_lambda_max_over_eta_updates() {
        let updates_until = |mut c: DualController, target: f64| {
            let mut n = 0;
            while c.lambda != target {
                c.dual_update();
                n += 1;
                assert!(n <= 1000, "never reached {target}");
            }
            n
        };
        assert_eq!(updates_until(ctrl(0.0, -1.0), 5.0), 100);
        assert_eq!(updates_until(ctrl(5.0, 1.0), 0.0), 100);
    }

    #[test]
    fn dual_runs_every_t0_steps() {
        let mut c = ctrl(1.0, 0.0);
        let sig = c.signal(4000.0, 2000.0);
        let moved: Vec<bool> = (0..10).map(|_| c.observe(&sig)).collect();
        assert_eq!(
            moved,
            [false, false, false, false, true, false, false, false, false, true]
        );
        assert!(c.lambda > 1.0);
    }

    #[test]
    fn raw_shaping_is_unbounded_and_unsmoothed() {
        let mut c = DualController::new(DualParams::default(), CostShaping::Raw);
        let sig = c.signal(10_000.0, 2000.0);
        assert_eq!(sig.v, -4.0);
        assert_eq!(sig.v_scaled, -4.0);
        assert_eq!(sig.v_neg, -4.0);
        c.observe(&sig);
        assert_eq!(c.v_ema, -4.0);
    }

    #[test]
    fn sampled_lambda_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_lambda(&mut rng, 5.0)).collect();
        assert!(draws.iter().all(|&l| (0.0..=5.0).contains(&l)));
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.5).abs() < 0.05, "mean {mean}");
        assert_eq!(sample_lambda(&mut rng, 0.0), 0.0);
    }

    #[test]
    fn augmentation_appends_normalized_lambda() {
        let obs = [0.3, 0.4];
        assert_eq!(augment_state(&obs, 0.0, 5.0), vec![0.3, 0.4, 0.0]);
        assert_eq!(augment_state(&obs, 5.0, 5.0), vec![0.3, 0.4, 1.0]);
        assert_eq!(augment_state(&obs, 2.5, 5.0).len(), obs.len() + 1);
    }

    #[test]
    fn validation_names_field() {
        let p = DualParams {
            kappa: 0.0,
            ..DualParams::default()
        };
        assert_eq!(p.validate().unwrap_err().field, "kappa");
    }

    proptest! {
        #[test]
        fn scaled_signal_is_monotone_and_odd(a in -20.0f64..20.0, b in -20.0f64..20.0, k in 0.05f64..5.0) {
            prop_assert_eq!(scale_violation(-a, k), -scale_violation(a, k));
            if a < b {
                prop_assert!(scale_violation(a, k) <= scale_violation(b, k));
            }
            prop_assert!(learner_cost(scale_violation(a, k)) <= 0.0);
            if a < b {
                prop_assert!(learner_cost(a) <= learner_cost(b));
            }
        }

        #[test]
        fn lambda_stays_in_range(
            start in 0.0f64..5.0,
            signals in proptest::collection::vec(-1.0f64..1.0, 1..200),
        ) {
            let mut c = ctrl(start, 0.0);
            for s in signals {
                c.observe(&ViolationSignal { v: s, v_scaled: s, v_neg: learner_cost(s) });
                prop_assert!((0.0..=5.0).contains(&c.lambda));
                prop_assert!((-1.0..=1.0).contains(&c.v_ema));
            }
        }
    }
}
