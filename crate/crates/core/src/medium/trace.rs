use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Micros, NodeInfo, OutcomeKind, PriorityClass, Tech, TxOutcome};

/// One line of the event-trace export.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_start: Micros,
    pub t_end: Micros,
    pub node: String,
    pub tech: Tech,
    pub class: PriorityClass,
    pub kind: OutcomeKind,
    pub delay: Option<Micros>,
}

impl TraceRecord {
    pub fn new(outcome: &TxOutcome, info: &NodeInfo) -> Self {
        Self {
            t_start: outcome.start_us,
            t_end: outcome.end_us,
            node: info.name.clone(),
            tech: info.tech,
            class: info.pclass,
            kind: outcome.kind,
            delay: outcome.access_delay_us,
        }
    }
}

/// Writes outcomes as line-delimited JSON.
pub fn write_trace<W: Write>(
    mut out: W,
    outcomes: &[TxOutcome],
    info: &[NodeInfo],
) -> std::io::Result<()> {
    for o in outcomes {
        let rec = TraceRecord::new(o, &info[o.node]);
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
