//! Per-step metrics log: comma-separated, one header row, one row per control
//! step. The leading columns are fixed; five per-node columns follow for each
//! contender, prefixed `n<index>_`. Floats are written in shortest round-trip
//! form, so reading a log back recovers every logged value exactly. Optional
//! values (`action`, `loss`) are empty when absent.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::learner::StepRecord;
use crate::metrics::NodeWindow;

pub const FIXED_COLUMNS: [&str; 17] = [
    "episode",
    "step",
    "global_step",
    "action",
    "epsilon",
    "lambda",
    "v",
    "v_scaled",
    "v_ema",
    "reward",
    "loss",
    "jfi",
    "delay_inst_us",
    "delay_smooth_us",
    "collision_trend",
    "airtime_util",
    "violation_rate",
];

pub const NODE_COLUMNS: [&str; 5] = [
    "successes",
    "collisions",
    "success_us",
    "collision_us",
    "overhead_us",
];

pub fn header(nodes: usize) -> Vec<String> {
    let mut h: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for k in 0..nodes {
        h.extend(NODE_COLUMNS.iter().map(|c| format!("n{k}_{c}")));
    }
    h
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn record_fields(r: &StepRecord) -> Vec<String> {
    let mut f = vec![
        r.episode.to_string(),
        r.step.to_string(),
        r.global_step.to_string(),
        opt(r.action),
        r.epsilon.to_string(),
        r.lambda.to_string(),
        r.v.to_string(),
        r.v_scaled.to_string(),
        r.v_ema.to_string(),
        r.reward.to_string(),
        opt(r.loss),
        r.jfi.to_string(),
        r.delay_inst_us.to_string(),
        r.delay_smooth_us.to_string(),
        r.collision_trend.to_string(),
        r.airtime_util.to_string(),
        r.violation_rate.to_string(),
    ];
    for n in &r.nodes {
        f.extend([
            n.successes.to_string(),
            n.collisions.to_string(),
            n.success_us.to_string(),
            n.collision_us.to_string(),
            n.overhead_us.to_string(),
        ]);
    }
    f
}

pub struct LogWriter {
    inner: csv::Writer<BufWriter<File>>,
    nodes: usize,
    rows: u64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

impl LogWriter {
    pub fn create(path: &Path, nodes: usize) -> Result<Self> {
        let file =
            File::create(path).map_err(|e| Error::io(format!("create {}", path.display()), e))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner
            .write_record(header(nodes))
            .map_err(|e| csv_err(path, e))?;
        Ok(Self {
            inner,
            nodes,
            rows: 0,
        })
    }

    pub fn write(&mut self, r: &StepRecord) -> Result<()> {
        if r.nodes.len() != self.nodes {
            return Err(Error::Dimension(format!(
                "log row has {} nodes, header declares {}",
                r.nodes.len(),
                self.nodes
            )));
        }
        self.inner
            .write_record(record_fields(r))
            .map_err(|e| Error::io("write log row", e.into()))?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn finish(mut self) -> Result<u64> {
        self.inner
            .flush()
            .map_err(|e| Error::io("flush log", e))?;
        let mut buf = self
            .inner
            .into_inner()
            .map_err(|e| Error::io("flush log", e.into_error()))?;
        buf.flush().map_err(|e| Error::io("flush log", e))?;
        Ok(self.rows)
    }
}

/// Reads a metrics log back into step records.
pub fn read_log(path: &Path) -> Result<Vec<StepRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let head = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let extra = head.len().checked_sub(FIXED_COLUMNS.len());
    let nodes = match extra {
        Some(x) if x % NODE_COLUMNS.len() == 0 => x / NODE_COLUMNS.len(),
        _ => {
            return Err(Error::Parse {
                path: path.display().to_string(),
                message: format!("unexpected column count {}", head.len()),
            })
        }
    };
    let expected = header(nodes);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: "header does not match the metrics log schema".into(),
        });
    }

    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let bad = |col: &str| Error::Parse {
            path: path.display().to_string(),
            message: format!("row {}: bad value in column `{col}`", line + 2),
        };
        let get = |i: usize| row.get(i).unwrap_or("");
        macro_rules! num {
            ($i:expr) => {
                get($i).parse().map_err(|_| bad(FIXED_COLUMNS[$i]))?
            };
        }
        macro_rules! opt_num {
            ($i:expr) => {
                match get($i) {
                    "" => None,
                    s => Some(s.parse().map_err(|_| bad(FIXED_COLUMNS[$i]))?),
                }
            };
        }
        let mut node_rows = Vec::with_capacity(nodes);
        for k in 0..nodes {
            let base = FIXED_COLUMNS.len() + k * NODE_COLUMNS.len();
            let field = |j: usize| -> Result<u64> {
                get(base + j)
                    .parse()
                    .map_err(|_| bad(&expected[base + j]))
            };
            node_rows.push(NodeWindow {
                successes: field(0)?,
                collisions: field(1)?,
                success_us: field(2)?,
                collision_us: field(3)?,
                overhead_us: field(4)?,
            });
        }
        out.push(StepRecord {
            episode: num!(0),
            step: num!(1),
            global_step: num!(2),
            action: opt_num!(3),
            epsilon: num!(4),
            lambda: num!(5),
            v: num!(6),
            v_scaled: num!(7),
            v_ema: num!(8),
            reward: num!(9),
            loss: opt_num!(10),
            jfi: num!(11),
            delay_inst_us: num!(12),
            delay_smooth_us: num!(13),
            collision_trend: num!(14),
            airtime_util: num!(15),
            violation_rate: num!(16),
            nodes: node_rows,
        });
    }
    Ok(out)
}
