//! Experiment orchestration behind the command line: training, evaluation,
//! fixed-parameter baselines, report comparison and event-trace export. Every
//! command writes a manifest next to its outputs; feeding that manifest back
//! as `--config` reproduces the run.

mod config;
mod log;
mod report;

pub use config::{load_config, EvalConfig, ExperimentConfig, Preset};
pub use log::{header as log_header, read_log, LogWriter, FIXED_COLUMNS, NODE_COLUMNS};
pub use report::{
    compare, nearest_rank, summarize, CompareRow, Comparison, EvalReport, NodeReport,
    ReportContext,
};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::{self, PolicyArtifact};
use crate::medium::{write_trace, Micros, NodeInfo, Simulator};

pub const POLICY_FILE: &str = "policy.qpol";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const EVAL_LOG: &str = "eval_log.csv";
pub const EVAL_REPORT: &str = "eval_report.toml";
pub const BASELINE_LOG: &str = "baseline_log.csv";
pub const BASELINE_REPORT: &str = "baseline_report.toml";
pub const TRACE_FILE: &str = "trace.jsonl";

/// Identifies the code that produced a run.
pub fn code_version() -> String {
    format!(
        "{} ({})",
        env!("CARGO_PKG_VERSION"),
        option_env!("QASAL_GIT_COMMIT").unwrap_or("unknown commit")
    )
}

#[derive(Serialize)]
struct Manifest<'a> {
    manifest_format: u32,
    command: &'a str,
    code_version: String,
    seed: u64,
    outputs: BTreeMap<&'a str, String>,
    log_rows: u64,
    log_crc32: String,
    config: &'a ExperimentConfig,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("create {}", dir.display()), e))
}

fn file_crc(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
    Ok(format!("{:08x}", crc32fast::hash(&bytes)))
}

fn write_manifest(
    cfg: &ExperimentConfig,
    command: &str,
    seed: u64,
    outputs: BTreeMap<&str, String>,
    log: &Path,
    log_rows: u64,
) -> Result<PathBuf> {
    let manifest = Manifest {
        manifest_format: 1,
        command,
        code_version: code_version(),
        seed,
        outputs,
        log_rows,
        log_crc32: file_crc(log)?,
        config: cfg,
    };
    let path = cfg.out_dir.join(format!("{command}_manifest.toml"));
    let text = toml::to_string(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| Error::io(format!("write {}", path.display()), e))?;
    Ok(path)
}

fn node_info(cfg: &ExperimentConfig) -> Result<Vec<NodeInfo>> {
    let sim = Simulator::new(cfg.env.medium.clone(), &cfg.env.contenders, cfg.env.cr_lbt, 0)?;
    Ok(sim.node_info().to_vec())
}

fn name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Clone, Debug)]
pub struct TrainOutputs {
    pub policy: PathBuf,
    pub log: PathBuf,
    pub manifest: PathBuf,
    pub rows: u64,
}

/// Trains a policy and writes it with its step log and manifest.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutputs> {
    cfg.validate()?;
    ensure_dir(&cfg.out_dir)?;
    let log_path = cfg.out_dir.join(TRAIN_LOG);
    let policy_path = cfg.out_dir.join(POLICY_FILE);
    let mut log = LogWriter::create(&log_path, cfg.env.node_count())?;
    let artifact = learner::run_training(&cfg.train_setup(), cfg.seed, |r| log.write(r))?;
    let rows = log.finish()?;
    artifact.save(&policy_path)?;
    let outputs = BTreeMap::from([("policy", name(&policy_path)), ("log", name(&log_path))]);
    let manifest = write_manifest(cfg, "train", cfg.seed, outputs, &log_path, rows)?;
    Ok(TrainOutputs {
        policy: policy_path,
        log: log_path,
        manifest,
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct EvalOutputs {
    pub report: EvalReport,
    pub report_path: PathBuf,
    pub summary_path: PathBuf,
    pub log: PathBuf,
    pub manifest: PathBuf,
}

fn write_summary_row(report: &EvalReport, path: &Path) -> Result<()> {
    let (head, vals) = report.summary_row();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let io = |e: csv::Error| Error::io(format!("write {}", path.display()), e.into());
    w.write_record(&head).map_err(io)?;
    w.write_record(&vals).map_err(io)?;
    w.flush().map_err(|e| Error::io(format!("write {}", path.display()), e))
}

fn finish_eval(
    cfg: &ExperimentConfig,
    command: &str,
    source: &str,
    log: LogWriter,
    log_path: PathBuf,
    report_file: &str,
    extra: Vec<(&'static str, String)>,
) -> Result<EvalOutputs> {
    let rows = log.finish()?;
    let records = read_log(&log_path)?;
    let ctx = ReportContext {
        source,
        action_mode: cfg.env.action_mode.label(),
        cr_lbt: cfg.env.cr_lbt,
        scaling: cfg.scaling,
        seed: cfg.eval.seed,
        episodes: cfg.eval.episodes,
        d_th_us: cfg.env.metrics.d_th_us,
    };
    let report = summarize(&records, &node_info(cfg)?, &ctx)?;
    let report_path = cfg.out_dir.join(report_file);
    report.save(&report_path)?;
    let summary_path = report_path.with_extension("csv");
    write_summary_row(&report, &summary_path)?;
    let mut outputs = BTreeMap::from([
        ("report", name(&report_path)),
        ("summary", name(&summary_path)),
        ("log", name(&log_path)),
    ]);
    outputs.extend(extra);
    let manifest = write_manifest(cfg, command, cfg.eval.seed, outputs, &log_path, rows)?;
    Ok(EvalOutputs {
        report,
        report_path,
        summary_path,
        log: log_path,
        manifest,
    })
}

/// Greedy rollout of a trained policy with online dual updates.
pub fn cmd_evaluate(cfg: &ExperimentConfig, policy: &Path) -> Result<EvalOutputs> {
    cfg.validate()?;
    let artifact = PolicyArtifact::load(policy)?;
    ensure_dir(&cfg.out_dir)?;
    let log_path = cfg.out_dir.join(EVAL_LOG);
    let mut log = LogWriter::create(&log_path, cfg.env.node_count())?;
    learner::evaluate(
        &artifact,
        &cfg.env,
        &cfg.dual,
        cfg.shaping(),
        cfg.eval.episodes,
        cfg.eval.seed,
        cfg.eval.lambda0,
        |r| log.write(r),
    )?;
    let extra = vec![("policy", policy.display().to_string())];
    finish_eval(cfg, "evaluate", "policy", log, log_path, EVAL_REPORT, extra)
}

/// Rollout with the configured static MAC parameters.
pub fn cmd_baseline(cfg: &ExperimentConfig) -> Result<EvalOutputs> {
    cfg.validate()?;
    ensure_dir(&cfg.out_dir)?;
    let log_path = cfg.out_dir.join(BASELINE_LOG);
    let mut log = LogWriter::create(&log_path, cfg.env.node_count())?;
    learner::run_fixed(
        &cfg.env,
        &cfg.dual,
        cfg.shaping(),
        cfg.eval.episodes,
        cfg.eval.seed,
        |r| log.write(r),
    )?;
    finish_eval(cfg, "baseline", "baseline", log, log_path, BASELINE_REPORT, Vec::new())
}

/// Loads reports and compares each against the first. Writes
/// `comparison.toml` and `comparison.txt` when `out_dir` is given.
pub fn cmd_compare(paths: &[PathBuf], out_dir: Option<&Path>) -> Result<Comparison> {
    let reports = paths
        .iter()
        .map(|p| EvalReport::load(p))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = paths
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    let cmp = compare(&labels, &reports)?;
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let write = |file: &str, text: String| {
            let p = dir.join(file);
            std::fs::write(&p, text).map_err(|e| Error::io(format!("write {}", p.display()), e))
        };
        write("comparison.toml", cmp.to_toml_string())?;
        write("comparison.txt", cmp.to_text())?;
    }
    Ok(cmp)
}

/// Runs the configured scenario with static parameters for `duration_us` and
/// writes every transmission outcome as one JSON line.
pub fn cmd_trace(cfg: &ExperimentConfig, duration_us: Micros) -> Result<PathBuf> {
    cfg.validate()?;
    if duration_us == 0 {
        return Err(crate::ConfigError::invalid("duration_us", "must be > 0").into());
    }
    ensure_dir(&cfg.out_dir)?;
    let mut sim = Simulator::new(
        cfg.env.medium.clone(),
        &cfg.env.contenders,
        cfg.env.cr_lbt,
        cfg.seed,
    )?;
    let path = cfg.out_dir.join(TRACE_FILE);
    let file = File::create(&path).map_err(|e| Error::io(format!("create {}", path.display()), e))?;
    let mut out = BufWriter::new(file);
    let mut left = duration_us;
    while left > 0 {
        let chunk = left.min(cfg.env.step_us);
        let window = sim.run_for(chunk);
        write_trace(&mut out, &window.outcomes, sim.node_info())
            .map_err(|e| Error::io(format!("write {}", path.display()), e))?;
        left -= chunk;
    }
    std::io::Write::flush(&mut out).map_err(|e| Error::io(format!("write {}", path.display()), e))?;
    Ok(path)
}
