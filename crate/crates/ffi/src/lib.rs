//! C ABI over the qasal library.
//!
//! Every object is an opaque handle created by a `*_new` or `*_load` function
//! and released by the matching `*_free`. Fallible functions return a
//! [`QasalStatus`]; on failure a description is available from
//! [`qasal_last_error_message`] on the same thread. Results are written
//! through caller-provided out-pointers, and output pointers documented as
//! optional may be null. Panics never cross the boundary: they are caught and
//! reported as `QASAL_STATUS_PANIC`.
//!
//! Configuration is passed as TOML text in the experiment configuration
//! format of the command-line tool. A null configuration selects the default
//! preset.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use qasal::constraint::{CostShaping, DualController, DualParams};
use qasal::env::Env;
use qasal::harness::{ExperimentConfig, Preset};
use qasal::learner::{argmax, PolicyArtifact};
use qasal::medium::{OutcomeKind, Simulator, WindowReport};
use qasal::{ConfigError, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QasalStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration failed to parse or validate.
    InvalidConfig = 3,
    /// An argument was out of range or inconsistent with the handle.
    InvalidArgument = 4,
    /// The episode has ended; reset the environment first.
    EpisodeDone = 5,
    /// A file could not be read or written.
    Io = 6,
    /// A policy file is corrupt or of an unsupported version.
    Artifact = 7,
    /// An output buffer is shorter than required.
    BufferTooSmall = 8,
    /// An internal error was caught before it could unwind into C.
    Panic = 9,
}

struct Failure {
    status: QasalStatus,
    message: String,
}

impl Failure {
    fn new(status: QasalStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Self::new(QasalStatus::NullPointer, format!("`{name}` is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Parse { .. } => QasalStatus::InvalidConfig,
            Error::ActionOutOfRange { .. } | Error::Dimension(_) | Error::Compare(_) => {
                QasalStatus::InvalidArgument
            }
            Error::EpisodeDone => QasalStatus::EpisodeDone,
            Error::Artifact(_) => QasalStatus::Artifact,
            Error::Io { .. } => QasalStatus::Io,
        };
        Self::new(status, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::new(QasalStatus::InvalidConfig, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QasalStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|panic| {
        let message = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure::new(QasalStatus::Panic, message))
    });
    match outcome {
        Ok(()) => {
            set_last_error("");
            QasalStatus::Ok
        }
        Err(f) => {
            set_last_error(&f.message);
            f.status
        }
    }
}

/// # Safety
/// `ptr` is null or points to a live, exclusively borrowed `T`.
unsafe fn handle<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure::null(name))
}

/// # Safety
/// `ptr` is null or points to a writable `T`.
unsafe fn write_out<T>(ptr: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    ptr.write(value);
    Ok(())
}

/// Writes `value` when `ptr` is non-null.
///
/// # Safety
/// `ptr` is null or points to a writable `T`.
unsafe fn write_optional<T>(ptr: *mut T, value: T) {
    if !ptr.is_null() {
        ptr.write(value);
    }
}

/// # Safety
/// `ptr` is null or points to a NUL-terminated string.
unsafe fn text<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(QasalStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

/// # Safety
/// `ptr` is null or points to a NUL-terminated string.
unsafe fn config(ptr: *const c_char) -> Result<ExperimentConfig, Failure> {
    if ptr.is_null() {
        return Ok(ExperimentConfig::preset(Preset::default()));
    }
    let toml = text(ptr, "config_toml")?;
    Ok(ExperimentConfig::from_toml_str(toml, "<config_toml>")?)
}

/// # Safety
/// `ptr` is null or points to `len` readable doubles.
unsafe fn input_slice<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Copies `values` into a caller buffer of `cap` doubles. A null buffer is
/// allowed and skips the copy.
///
/// # Safety
/// `buf` is null or points to `cap` writable doubles.
unsafe fn copy_out(values: &[f64], buf: *mut f64, cap: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Ok(());
    }
    if cap < values.len() {
        return Err(Failure::new(
            QasalStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} required", values.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// # Safety
/// `ptr` is null or was returned by `boxed` and not freed since.
unsafe fn free_boxed<T>(ptr: *mut T) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qasal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Description of the last failure on this thread, or an empty string after
/// a successful call. Valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn qasal_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

// ---------------------------------------------------------------- simulator

/// Shared-medium simulator plus the most recent window it produced.
pub struct QasalSimulator {
    sim: Simulator,
    last: Option<WindowReport>,
}

/// Channel bookkeeping of one simulated window, in microseconds.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QasalWindow {
    pub start_us: u64,
    pub end_us: u64,
    pub idle_us: u64,
    pub busy_us: u64,
    /// Emitter time beyond a single emitter (overlapping transmissions).
    pub overlap_us: u64,
    pub outcome_count: usize,
}

/// One node's channel occupancy inside the last window, in microseconds.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QasalNodeAirtime {
    pub success_us: u64,
    pub collision_us: u64,
    pub rs_us: u64,
    pub cr_us: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QasalOutcomeKind {
    Success = 0,
    Collision = 1,
    /// Reservation signal filling the gap to a slot boundary.
    Rs = 2,
    /// Collision-resolution pulse.
    CrPulse = 3,
}

/// A completed transmission of the last window.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QasalOutcome {
    pub node: usize,
    pub start_us: u64,
    pub end_us: u64,
    pub kind: QasalOutcomeKind,
    /// Whether `access_delay_us` is meaningful (successful data only).
    pub has_access_delay: bool,
    pub access_delay_us: u64,
}

/// Creates a simulator for the contenders and medium of `config_toml`
/// (null for defaults). Identical configuration and seed give identical runs.
///
/// # Safety
/// `config_toml` is null or NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_simulator_new(
    config_toml: *const c_char,
    seed: u64,
    out: *mut *mut QasalSimulator,
) -> QasalStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let cfg = config(config_toml)?;
        let sim = Simulator::new(cfg.env.medium.clone(), &cfg.env.contenders, cfg.env.cr_lbt, seed)?;
        write_out(out, "out", boxed(QasalSimulator { sim, last: None }))
    })
}

/// Releases a simulator. Null is ignored.
///
/// # Safety
/// `sim` is null or a live handle from `qasal_simulator_new`.
#[no_mangle]
pub unsafe extern "C" fn qasal_simulator_free(sim: *mut QasalSimulator) {
    free_boxed(sim);
}

/// # Safety
/// `sim` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_simulator_node_count(
    sim: *mut QasalSimulator,
    out: *mut usize,
) -> QasalStatus {
    guard(|| {
        let s = handle(sim, "sim")?;
        write_out(out, "out", s.sim.node_count())
    })
}

/// Simulated clock in microseconds.
///
/// # Safety
/// `sim` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_simulator_clock_us(
    sim: *mut QasalSimulator,
    out: *mut u64,
) -> QasalStatus {
    guard(|| {
        let s = handle(sim, "sim")?;
        write_out(out, "out", s.sim.clock_us())
    })
}

/// Advances the simulation by `duration_us` and keeps the resulting window for
/// `qasal_simulator_node_airtime` and `qasal_simulator_outcome`.
///
/// # Safety
/// `sim` is a live handle; `out` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_simulator_run_for(
    sim: *mut QasalSimulator,
    duration_us: u64,
    out: *mut QasalWindow,
) -> QasalStatus {
    guard(|| {
        let s = handle(sim, "sim")?;
        if duration_us == 0 {
            return Err(Failure::new(QasalStatus::InvalidArgument, "duration_us must be > 0"));
        }
        let w = s.sim.run_for(duration_us);
        write_optional(
            out,
            QasalWindow {
                start_us: w.start_us,
                end_us: w.end_us,
                idle_us: w.ledger.idle_us,
                busy_us: w.ledger.busy_us,
                overlap_us: w.ledger.overlap_us,
                outcome_count: w.outcomes.len(),
            },
        );
        s.last = Some(w);
        Ok(())
    })
}

fn last_window(s: &QasalSimulator) -> Result<&WindowReport, Failure> {
    s.last
        .as_ref()
        .ok_or_else(|| Failure::new(QasalStatus::InvalidArgument, "no window has been run yet"))
}

/// # Safety
/// `sim` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_simulator_node_airtime(
    sim: *mut QasalSimulator,
    node: usize,
    out: *mut QasalNodeAirtime,
) -> QasalStatus {
    guard(|| {
        let s = handle(sim, "sim")?;
        let w = last_window(s)?;
        let a = w.ledger.per_node.get(node).ok_or_else(|| {
            Failure::new(QasalStatus::InvalidArgument, format!("node {node} does not exist"))
        })?;
        write_out(
            out,
            "out",
            QasalNodeAirtime {
                success_us: a.success_us,
                collision_us: a.collision_us,
                rs_us: a.rs_us,
                cr_us: a.cr_us,
            },
        )
    })
}

/// # Safety
/// `sim` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_simulator_outcome(
    sim: *mut QasalSimulator,
    index: usize,
    out: *mut QasalOutcome,
) -> QasalStatus {
    guard(|| {
        let s = handle(sim, "sim")?;
        let w = last_window(s)?;
        let o = w.outcomes.get(index).ok_or_else(|| {
            Failure::new(
                QasalStatus::InvalidArgument,
                format!("outcome {index} out of range ({} in window)", w.outcomes.len()),
            )
        })?;
        let kind = match o.kind {
            OutcomeKind::Success => QasalOutcomeKind::Success,
            OutcomeKind::Collision => QasalOutcomeKind::Collision,
            OutcomeKind::Rs => QasalOutcomeKind::Rs,
            OutcomeKind::CrPulse => QasalOutcomeKind::CrPulse,
        };
        write_out(
            out,
            "out",
            QasalOutcome {
                node: o.node,
                start_us: o.start_us,
                end_us: o.end_us,
                kind,
                has_access_delay: o.access_delay_us.is_some(),
                access_delay_us: o.access_delay_us.unwrap_or(0),
            },
        )
    })
}

// ---------------------------------------------------------------- environment

/// Control environment: simulator, metrics and dual controller.
pub struct QasalEnv {
    env: Env,
}

/// Summary of one control step.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QasalStep {
    /// Windowed airtime fairness.
    pub f0: f64,
    /// Smoothed PC1 access delay in microseconds.
    pub f1: f64,
    pub v: f64,
    pub v_scaled: f64,
    pub v_neg: f64,
    /// Dual variable in force while the step ran.
    pub lambda: f64,
    pub dual_updated: bool,
    pub done: bool,
    /// 1-based step index inside the episode.
    pub step: u32,
}

/// Creates an environment from `config_toml` (null for defaults). The
/// `scaling` key of the configuration selects the constraint shaping.
///
/// # Safety
/// `config_toml` is null or NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_env_new(
    config_toml: *const c_char,
    seed: u64,
    out: *mut *mut QasalEnv,
) -> QasalStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let cfg = config(config_toml)?;
        let env = Env::new(cfg.env.clone(), cfg.dual.clone(), cfg.shaping(), seed)?;
        write_out(out, "out", boxed(QasalEnv { env }))
    })
}

/// Releases an environment. Null is ignored.
///
/// # Safety
/// `env` is null or a live handle from `qasal_env_new`.
#[no_mangle]
pub unsafe extern "C" fn qasal_env_free(env: *mut QasalEnv) {
    free_boxed(env);
}

/// Length of the augmented observation vector.
///
/// # Safety
/// `env` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_env_observation_dim(env: *mut QasalEnv, out: *mut usize) -> QasalStatus {
    guard(|| {
        let e = handle(env, "env")?;
        write_out(out, "out", e.env.observation_dim())
    })
}

/// Number of discrete actions.
///
/// # Safety
/// `env` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_env_action_count(env: *mut QasalEnv, out: *mut usize) -> QasalStatus {
    guard(|| {
        let e = handle(env, "env")?;
        write_out(out, "out", e.env.action_space().cardinality())
    })
}

/// Restarts the medium with `seed` and sets the dual variable to `lambda0`.
/// The initial observation is copied into `obs` when it is non-null.
///
/// # Safety
/// `env` is a live handle; `obs` is null or holds `obs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qasal_env_reset(
    env: *mut QasalEnv,
    seed: u64,
    lambda0: f64,
    obs: *mut f64,
    obs_len: usize,
) -> QasalStatus {
    guard(|| {
        let e = handle(env, "env")?;
        let lambda_max = e.env.dual().params.lambda_max;
        if !(0.0..=lambda_max).contains(&lambda0) {
            return Err(Failure::new(
                QasalStatus::InvalidArgument,
                format!("lambda0 must lie in [0, {lambda_max}]"),
            ));
        }
        let o = e.env.reset(seed, lambda0);
        copy_out(&o, obs, obs_len)
    })
}

unsafe fn finish_step(
    result: qasal::Result<qasal::env::StepResult>,
    obs: *mut f64,
    obs_len: usize,
    out: *mut QasalStep,
) -> Result<(), Failure> {
    let r = result?;
    copy_out(&r.observation, obs, obs_len)?;
    write_optional(
        out,
        QasalStep {
            f0: r.f0,
            f1: r.f1,
            v: r.signal.v,
            v_scaled: r.signal.v_scaled,
            v_neg: r.signal.v_neg,
            lambda: r.lambda,
            dual_updated: r.dual_updated,
            done: r.done,
            step: r.step,
        },
    );
    Ok(())
}

/// Applies `action`, advances one control step and reports the outcome.
///
/// # Safety
/// `env` is a live handle; `obs` is null or holds `obs_len` doubles; `out`
/// is null or writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_env_step(
    env: *mut QasalEnv,
    action: usize,
    obs: *mut f64,
    obs_len: usize,
    out: *mut QasalStep,
) -> QasalStatus {
    guard(|| {
        let e = handle(env, "env")?;
        finish_step(e.env.step(action), obs, obs_len, out)
    })
}

/// Advances one control step without changing any MAC parameter.
///
/// # Safety
/// Same as `qasal_env_step`.
#[no_mangle]
pub unsafe extern "C" fn qasal_env_step_fixed(
    env: *mut QasalEnv,
    obs: *mut f64,
    obs_len: usize,
    out: *mut QasalStep,
) -> QasalStatus {
    guard(|| {
        let e = handle(env, "env")?;
        finish_step(e.env.step_fixed(), obs, obs_len, out)
    })
}

// ---------------------------------------------------------------- dual controller

/// Standalone dual-variable controller.
pub struct QasalDual {
    dual: DualController,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QasalDualParams {
    pub lambda_max: f64,
    /// Steps between dual updates.
    pub t0: u32,
    pub eta_lambda: f64,
    /// Slope of the tanh scaling.
    pub kappa: f64,
    /// Smoothing factor of the signal the dual integrates.
    pub alpha_v: f64,
}

impl From<DualParams> for QasalDualParams {
    fn from(p: DualParams) -> Self {
        Self {
            lambda_max: p.lambda_max,
            t0: p.t0,
            eta_lambda: p.eta_lambda,
            kappa: p.kappa,
            alpha_v: p.alpha_v,
        }
    }
}

impl From<QasalDualParams> for DualParams {
    fn from(p: QasalDualParams) -> Self {
        Self {
            lambda_max: p.lambda_max,
            t0: p.t0,
            eta_lambda: p.eta_lambda,
            kappa: p.kappa,
            alpha_v: p.alpha_v,
        }
    }
}

/// Shaped constraint signal of one observation.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QasalSignal {
    /// Signed relative slack, positive when the constraint holds.
    pub v: f64,
    /// Value the dual integrates.
    pub v_scaled: f64,
    /// Negative part handed to a learner.
    pub v_neg: f64,
}

/// Default dual parameters.
#[no_mangle]
pub extern "C" fn qasal_dual_default_params() -> QasalDualParams {
    DualParams::default().into()
}

/// Creates a dual controller with `lambda = 0`. A null `params` selects the
/// defaults; `scaled` chooses tanh scaling with smoothing over the raw signal.
///
/// # Safety
/// `params` is null or readable; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_dual_new(
    params: *const QasalDualParams,
    scaled: bool,
    out: *mut *mut QasalDual,
) -> QasalStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let p: DualParams = params.as_ref().map(|p| (*p).into()).unwrap_or_default();
        p.validate()?;
        let shaping = if scaled { CostShaping::Scaled } else { CostShaping::Raw };
        write_out(out, "out", boxed(QasalDual { dual: DualController::new(p, shaping) }))
    })
}

/// Releases a dual controller. Null is ignored.
///
/// # Safety
/// `dual` is null or a live handle from `qasal_dual_new`.
#[no_mangle]
pub unsafe extern "C" fn qasal_dual_free(dual: *mut QasalDual) {
    free_boxed(dual);
}

/// Shapes the signal of one smoothed delay sample, folds it into the
/// controller and runs the dual update when due.
///
/// # Safety
/// `dual` is a live handle; `signal` and `updated` are null or writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_dual_observe(
    dual: *mut QasalDual,
    delay_smooth_us: f64,
    d_th_us: f64,
    signal: *mut QasalSignal,
    updated: *mut bool,
) -> QasalStatus {
    guard(|| {
        let d = handle(dual, "dual")?;
        if !(d_th_us.is_finite() && d_th_us > 0.0) {
            return Err(Failure::new(QasalStatus::InvalidArgument, "d_th_us must be finite and > 0"));
        }
        if !(delay_smooth_us.is_finite() && delay_smooth_us >= 0.0) {
            return Err(Failure::new(
                QasalStatus::InvalidArgument,
                "delay_smooth_us must be finite and >= 0",
            ));
        }
        let sig = d.dual.signal(delay_smooth_us, d_th_us);
        let moved = d.dual.observe(&sig);
        write_optional(
            signal,
            QasalSignal {
                v: sig.v,
                v_scaled: sig.v_scaled,
                v_neg: sig.v_neg,
            },
        );
        write_optional(updated, moved);
        Ok(())
    })
}

/// # Safety
/// `dual` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_dual_lambda(dual: *mut QasalDual, out: *mut f64) -> QasalStatus {
    guard(|| {
        let d = handle(dual, "dual")?;
        write_out(out, "out", d.dual.lambda)
    })
}

/// Sets the dual variable, clamped to `[0, lambda_max]`.
///
/// # Safety
/// `dual` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn qasal_dual_set_lambda(dual: *mut QasalDual, lambda: f64) -> QasalStatus {
    guard(|| {
        let d = handle(dual, "dual")?;
        if lambda.is_nan() {
            return Err(Failure::new(QasalStatus::InvalidArgument, "lambda is NaN"));
        }
        d.dual.set_lambda(lambda);
        Ok(())
    })
}

// ---------------------------------------------------------------- policy

/// Trained Q-network loaded from a policy file.
pub struct QasalPolicy {
    artifact: PolicyArtifact,
}

/// Loads and verifies a policy file written by the training command.
///
/// # Safety
/// `path` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_policy_load(path: *const c_char, out: *mut *mut QasalPolicy) -> QasalStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let path = text(path, "path")?;
        let artifact = PolicyArtifact::load(Path::new(path))?;
        write_out(out, "out", boxed(QasalPolicy { artifact }))
    })
}

/// Releases a policy. Null is ignored.
///
/// # Safety
/// `policy` is null or a live handle from `qasal_policy_load`.
#[no_mangle]
pub unsafe extern "C" fn qasal_policy_free(policy: *mut QasalPolicy) {
    free_boxed(policy);
}

/// # Safety
/// `policy` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_policy_observation_dim(
    policy: *mut QasalPolicy,
    out: *mut usize,
) -> QasalStatus {
    guard(|| {
        let p = handle(policy, "policy")?;
        write_out(out, "out", p.artifact.meta.observation_dim)
    })
}

/// # Safety
/// `policy` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_policy_action_count(
    policy: *mut QasalPolicy,
    out: *mut usize,
) -> QasalStatus {
    guard(|| {
        let p = handle(policy, "policy")?;
        write_out(out, "out", p.artifact.meta.action_count)
    })
}

/// Greedy action for an augmented observation of `obs_len` values.
///
/// # Safety
/// `policy` is a live handle; `obs` holds `obs_len` doubles; `action` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qasal_policy_act(
    policy: *mut QasalPolicy,
    obs: *const f64,
    obs_len: usize,
    action: *mut usize,
) -> QasalStatus {
    guard(|| {
        let p = handle(policy, "policy")?;
        let x = input_slice(obs, obs_len, "obs")?;
        let dim = p.artifact.meta.observation_dim;
        if obs_len != dim {
            return Err(Failure::new(
                QasalStatus::InvalidArgument,
                format!("observation has {obs_len} values, policy expects {dim}"),
            ));
        }
        let q = p.artifact.net.forward_one(x);
        write_out(action, "action", argmax(&q))
    })
}
