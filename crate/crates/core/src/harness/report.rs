//! Evaluation summaries and their side-by-side comparison.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::StepRecord;
use crate::medium::{NodeInfo, PriorityClass, Tech};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeReport {
    pub name: String,
    pub tech: Tech,
    pub class: PriorityClass,
    /// Collisions over delivery attempts.
    pub collision_probability: f64,
    /// Successful airtime over all airtime the node occupied.
    pub airtime_efficiency: f64,
    pub successes: u64,
    pub collisions: u64,
    pub success_us: u64,
    pub collision_us: u64,
    pub overhead_us: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    /// What produced the report, e.g. `policy` or `baseline`.
    pub source: String,
    pub action_mode: String,
    pub cr_lbt: bool,
    pub scaling: bool,
    pub seed: u64,
    pub episodes: u32,
    pub steps: u64,
    pub d_th_ms: f64,
    pub mean_delay_ms: f64,
    /// Nearest-rank 95th percentile of the per-step smoothed delay.
    pub p95_delay_ms: f64,
    pub mean_jfi: f64,
    /// Share of steps whose smoothed delay exceeds the threshold.
    pub violation_fraction: f64,
    pub mean_lambda: f64,
    pub nodes: Vec<NodeReport>,
}

/// Nearest-rank percentile: the smallest sample with at least `p` percent of
/// the samples at or below it.
pub fn nearest_rank(samples: &[f64], p: f64) -> f64 {
    assert!(!samples.is_empty(), "percentile of an empty sample");
    assert!(p > 0.0 && p <= 100.0);
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * s.len() as f64).ceil() as usize;
    s[rank.max(1) - 1]
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Run-level facts stamped on a report.
#[derive(Clone, Debug)]
pub struct ReportContext<'a> {
    pub source: &'a str,
    pub action_mode: &'a str,
    pub cr_lbt: bool,
    pub scaling: bool,
    pub seed: u64,
    pub episodes: u32,
    pub d_th_us: f64,
}

/// Aggregates step records into a report.
pub fn summarize(records: &[StepRecord], info: &[NodeInfo], ctx: &ReportContext) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::Dimension("no steps to summarize".into()));
    }
    if let Some(r) = records.iter().find(|r| r.nodes.len() != info.len()) {
        return Err(Error::Dimension(format!(
            "step record has {} nodes, scenario has {}",
            r.nodes.len(),
            info.len()
        )));
    }
    let n = records.len() as f64;
    let delays: Vec<f64> = records.iter().map(|r| r.delay_smooth_us).collect();
    let violations = records
        .iter()
        .filter(|r| r.delay_smooth_us > ctx.d_th_us)
        .count();

    let nodes = info
        .iter()
        .enumerate()
        .map(|(k, node)| {
            let mut t = NodeReport {
                name: node.name.clone(),
                tech: node.tech,
                class: node.pclass,
                collision_probability: 0.0,
                airtime_efficiency: 0.0,
                successes: 0,
                collisions: 0,
                success_us: 0,
                collision_us: 0,
                overhead_us: 0,
            };
            for r in records {
                let w = &r.nodes[k];
                t.successes += w.successes;
                t.collisions += w.collisions;
                t.success_us += w.success_us;
                t.collision_us += w.collision_us;
                t.overhead_us += w.overhead_us;
            }
            t.collision_probability = ratio(t.collisions, t.collisions + t.successes);
            t.airtime_efficiency =
                ratio(t.success_us, t.success_us + t.collision_us + t.overhead_us);
            t
        })
        .collect();

    Ok(EvalReport {
        source: ctx.source.to_string(),
        action_mode: ctx.action_mode.to_string(),
        cr_lbt: ctx.cr_lbt,
        scaling: ctx.scaling,
        seed: ctx.seed,
        episodes: ctx.episodes,
        steps: records.len() as u64,
        d_th_ms: ctx.d_th_us / 1000.0,
        mean_delay_ms: delays.iter().sum::<f64>() / n / 1000.0,
        p95_delay_ms: nearest_rank(&delays, 95.0) / 1000.0,
        mean_jfi: records.iter().map(|r| r.jfi).sum::<f64>() / n,
        violation_fraction: violations as f64 / n,
        mean_lambda: records.iter().map(|r| r.lambda).sum::<f64>() / n,
        nodes,
    })
}

impl EvalReport {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string())
            .map_err(|e| Error::io(format!("write {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.message().to_string(),
        })
    }

    /// Metric name and value pairs in a fixed order, as compared across reports.
    pub fn metric_rows(&self) -> Vec<(String, f64)> {
        let mut rows = Vec::new();
        for n in &self.nodes {
            rows.push((format!("{} collision_probability", n.name), n.collision_probability));
        }
        for n in &self.nodes {
            rows.push((format!("{} airtime_efficiency", n.name), n.airtime_efficiency));
        }
        rows.push(("mean_delay_ms".into(), self.mean_delay_ms));
        rows.push(("p95_delay_ms".into(), self.p95_delay_ms));
        rows.push(("mean_jfi".into(), self.mean_jfi));
        rows.push(("violation_fraction".into(), self.violation_fraction));
        rows
    }

    /// Header and value row for one-line-per-run summary files.
    pub fn summary_row(&self) -> (Vec<String>, Vec<String>) {
        let mut head = vec![
            "source".to_string(),
            "cr_lbt".into(),
            "scaling".into(),
            "seed".into(),
            "episodes".into(),
        ];
        let mut vals = vec![
            self.source.clone(),
            self.cr_lbt.to_string(),
            self.scaling.to_string(),
            self.seed.to_string(),
            self.episodes.to_string(),
        ];
        for (k, v) in self.metric_rows() {
            head.push(k.replace(' ', "_"));
            vals.push(v.to_string());
        }
        (head, vals)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub metric: String,
    pub values: Vec<f64>,
    /// `values[k + 1] - values[0]` for every later report.
    pub deltas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<String>,
    pub rows: Vec<CompareRow>,
}

/// Compares every report against the first one.
pub fn compare(labels: &[String], reports: &[EvalReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Compare("need at least two reports".into()));
    }
    let names = |r: &EvalReport| r.nodes.iter().map(|n| n.name.clone()).collect::<Vec<_>>();
    let reference = names(&reports[0]);
    for (label, r) in labels.iter().zip(reports).skip(1) {
        if names(r) != reference {
            return Err(Error::Compare(format!(
                "{label} has nodes {:?}, the first report has {:?}",
                names(r),
                reference
            )));
        }
    }
    let per_report: Vec<Vec<(String, f64)>> = reports.iter().map(EvalReport::metric_rows).collect();
    let rows = per_report[0]
        .iter()
        .enumerate()
        .map(|(i, (metric, first))| {
            let values: Vec<f64> = per_report.iter().map(|r| r[i].1).collect();
            CompareRow {
                metric: metric.clone(),
                deltas: values[1..].iter().map(|v| v - first).collect(),
                values,
            }
        })
        .collect();
    Ok(Comparison {
        reports: labels.to_vec(),
        rows,
    })
}

impl Comparison {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("comparison serializes")
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut head = vec!["metric".to_string()];
        head.extend(self.reports.iter().cloned());
        for label in &self.reports[1..] {
            head.push(format!("delta {label}"));
        }
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut cells = vec![r.metric.clone()];
                cells.extend(r.values.iter().map(|v| format!("{v:.4}")));
                cells.extend(r.deltas.iter().map(|d| format!("{d:+.4}")));
                cells
            })
            .collect();
        let widths: Vec<usize> = (0..head.len())
            .map(|c| {
                body.iter()
                    .map(|row| row[c].len())
                    .chain([head[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for row in std::iter::once(&head).chain(body.iter()) {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if c == 0 {
                        format!("{cell:<w$}", w = widths[c])
                    } else {
                        format!("{cell:>w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}
