//! Discrete-event model of one unlicensed channel shared by NR-U gNB classes and
//! Wi-Fi EDCA access categories under saturated downlink traffic.
//!
//! Time is an integer number of microseconds. The simulator advances from
//! instant to instant; between two instants the set of emitters on the channel
//! is constant, which makes airtime accounting exact.
//!
//! Sensing model:
//! - a contender senses the channel state strictly before an instant, so two
//!   nodes that finish their countdown at the same instant both transmit;
//! - any overlap of energy with a data transmission corrupts it;
//! - an NR-U node that finishes backoff between slot boundaries either holds the
//!   channel with a reservation signal or runs collision-resolution micro-slots
//!   (see [`gap`]).

mod gap;
mod node;
mod trace;

pub use gap::{gap_plan, GapMode, Segment, SegmentKind};
pub use node::{draw_backoff, NodeState, NodeStats};
pub use trace::{write_trace, TraceRecord};

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Simulated time in microseconds.
pub type Micros = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tech {
    Nru,
    Wifi,
}

impl Tech {
    pub fn device_label(self) -> &'static str {
        match self {
            Tech::Nru => "gNB",
            Tech::Wifi => "AP",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorityClass {
    Pc1,
    Pc3,
}

impl PriorityClass {
    pub fn label(self) -> &'static str {
        match self {
            PriorityClass::Pc1 => "PC1",
            PriorityClass::Pc3 => "PC3",
        }
    }
}

/// Which instant of a successful transmission closes the access-delay interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayReference {
    /// Head-of-line until the data transmission starts.
    #[default]
    TxStart,
    /// Head-of-line until the data transmission ends.
    TxEnd,
}

/// What a gNB does after collision resolution told it to back off.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrDeferPolicy {
    /// Keep the (exhausted) backoff counter; access again after the next AIFS.
    #[default]
    Resume,
    /// Draw a fresh counter from the current window, stage unchanged.
    Redraw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumParams {
    pub obs_slot_us: Micros,
    pub sifs_us: Micros,
    pub nru_slot_boundary_us: Micros,
    /// Smallest transmission unit; every MCOT must be at least this long.
    /// A winner always fills its whole MCOT.
    pub frame_tx_us: Micros,
    pub cr_slot_us: Micros,
    /// Upper bound on collision-resolution micro-slots per gap.
    pub cr_slot_count: u32,
    pub delay_reference: DelayReference,
    pub cr_defer: CrDeferPolicy,
}

impl Default for MediumParams {
    fn default() -> Self {
        Self {
            obs_slot_us: 9,
            sifs_us: 16,
            nru_slot_boundary_us: 500,
            frame_tx_us: 500,
            cr_slot_us: 18,
            cr_slot_count: 27,
            delay_reference: DelayReference::TxStart,
            cr_defer: CrDeferPolicy::Resume,
        }
    }
}

impl MediumParams {
    pub fn aifs_us(&self, aifsn: u32) -> Micros {
        self.sifs_us + aifsn as Micros * self.obs_slot_us
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("obs_slot_us", self.obs_slot_us),
            ("sifs_us", self.sifs_us),
            ("nru_slot_boundary_us", self.nru_slot_boundary_us),
            ("frame_tx_us", self.frame_tx_us),
            ("cr_slot_us", self.cr_slot_us),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(ConfigError::invalid(field, "must be > 0"));
            }
        }
        if self.cr_slot_count == 0 {
            return Err(ConfigError::invalid("cr_slot_count", "must be >= 1"));
        }
        if !self.cr_slot_us.is_multiple_of(2) {
            return Err(ConfigError::invalid(
                "cr_slot_us",
                "must be even (pulse and listen halves)",
            ));
        }
        if self.cr_slot_count as Micros * self.cr_slot_us > self.nru_slot_boundary_us {
            return Err(ConfigError::invalid(
                "cr_slot_count",
                "cr_slot_count * cr_slot_us must not exceed nru_slot_boundary_us",
            ));
        }
        Ok(())
    }
}

/// EDCA parameters of one traffic class on one device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassParams {
    pub aifsn: u32,
    pub cw_min: u32,
    pub cw_max: u32,
    pub mcot_us: Micros,
}

fn is_pow2_minus_one(v: u32) -> bool {
    (v as u64 + 1).is_power_of_two()
}

impl ClassParams {
    pub fn validate(&self, medium: &MediumParams) -> Result<(), ConfigError> {
        if self.aifsn == 0 {
            return Err(ConfigError::invalid("aifsn", "must be >= 1"));
        }
        if !is_pow2_minus_one(self.cw_min) {
            return Err(ConfigError::invalid("cw_min", "must be 2^j - 1"));
        }
        if !is_pow2_minus_one(self.cw_max) {
            return Err(ConfigError::invalid("cw_max", "must be 2^k - 1"));
        }
        if self.cw_min > self.cw_max {
            return Err(ConfigError::invalid("cw_max", "must be >= cw_min"));
        }
        if self.mcot_us < medium.frame_tx_us {
            return Err(ConfigError::invalid(
                "mcot_us",
                format!("must be >= frame_tx_us ({})", medium.frame_tx_us),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContenderConfig {
    pub tech: Tech,
    pub pclass: PriorityClass,
    pub params: ClassParams,
    #[serde(default = "one")]
    pub count: u32,
}

fn one() -> u32 {
    1
}

impl ContenderConfig {
    pub fn new(tech: Tech, pclass: PriorityClass, params: ClassParams) -> Self {
        Self {
            tech,
            pclass,
            params,
            count: 1,
        }
    }

    pub fn validate(&self, medium: &MediumParams) -> Result<(), ConfigError> {
        if self.count == 0 {
            return Err(ConfigError::invalid("count", "must be >= 1"));
        }
        self.params.validate(medium)
    }
}

/// New parameters for every node of one (technology, class) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassUpdate {
    pub tech: Tech,
    pub pclass: PriorityClass,
    pub params: ClassParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeKind {
    Success,
    Collision,
    Rs,
    CrPulse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TxOutcome {
    pub node: usize,
    pub start_us: Micros,
    pub end_us: Micros,
    pub kind: OutcomeKind,
    /// Set on `Success` only.
    pub access_delay_us: Option<Micros>,
}

impl TxOutcome {
    pub fn duration_us(&self) -> Micros {
        self.end_us - self.start_us
    }
}

/// Per-node channel occupancy inside one window, clipped to the window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NodeAirtime {
    pub success_us: Micros,
    pub collision_us: Micros,
    pub rs_us: Micros,
    pub cr_us: Micros,
}

impl NodeAirtime {
    pub fn total_us(&self) -> Micros {
        self.success_us + self.collision_us + self.rs_us + self.cr_us
    }
}

/// Exact airtime bookkeeping of one window.
///
/// `overlap_us` counts emitter-time in excess of one emitter, so that
/// `sum(per_node.total) - overlap_us + idle_us == window` and
/// `busy_us + idle_us == window` both hold exactly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OccupancyLedger {
    pub per_node: Vec<NodeAirtime>,
    pub idle_us: Micros,
    pub busy_us: Micros,
    pub overlap_us: Micros,
}

impl OccupancyLedger {
    fn new(nodes: usize) -> Self {
        Self {
            per_node: vec![NodeAirtime::default(); nodes],
            ..Default::default()
        }
    }

    pub fn node_airtime_sum(&self) -> Micros {
        self.per_node.iter().map(NodeAirtime::total_us).sum()
    }
}

#[derive(Clone, Debug)]
pub struct WindowReport {
    pub start_us: Micros,
    pub end_us: Micros,
    /// Outcomes whose end time lies in `(start_us, end_us]`, in completion order.
    pub outcomes: Vec<TxOutcome>,
    pub ledger: OccupancyLedger,
}

impl WindowReport {
    pub fn duration_us(&self) -> Micros {
        self.end_us - self.start_us
    }
}

/// Static description of a node, useful to label reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub name: String,
    pub tech: Tech,
    pub pclass: PriorityClass,
}

pub struct Simulator {
    medium: MediumParams,
    gap_mode: GapMode,
    nodes: Vec<NodeState>,
    info: Vec<NodeInfo>,
    rng: ChaCha8Rng,
    clock: Micros,
    /// Start of the current idle period, `None` while any node emits.
    idle_since: Option<Micros>,
}

impl Simulator {
    /// Builds a simulator. Identical `(medium, contenders, cr_lbt, seed)` yield
    /// identical outcome traces.
    pub fn new(
        medium: MediumParams,
        contenders: &[ContenderConfig],
        cr_lbt_enabled: bool,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        medium.validate()?;
        if contenders.is_empty() {
            return Err(ConfigError::invalid("contenders", "list must not be empty"));
        }
        for (i, c) in contenders.iter().enumerate() {
            c.validate(&medium)
                .map_err(|e| e.within(&format!("contenders[{i}]")))?;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes = Vec::new();
        let mut info = Vec::new();
        for c in contenders {
            for k in 0..c.count {
                let id = nodes.len();
                nodes.push(NodeState::new(id, c.tech, c.pclass, c.params, &mut rng));
                let base = format!("{} {}", c.tech.device_label(), c.pclass.label());
                let name = if c.count > 1 {
                    format!("{base} #{}", k + 1)
                } else {
                    base
                };
                info.push(NodeInfo {
                    name,
                    tech: c.tech,
                    pclass: c.pclass,
                });
            }
        }

        Ok(Self {
            medium,
            gap_mode: if cr_lbt_enabled {
                GapMode::CollisionResolution
            } else {
                GapMode::Reservation
            },
            nodes,
            info,
            rng,
            clock: 0,
            idle_since: Some(0),
        })
    }

    pub fn clock_us(&self) -> Micros {
        self.clock
    }

    pub fn medium(&self) -> &MediumParams {
        &self.medium
    }

    pub fn gap_mode(&self) -> GapMode {
        self.gap_mode
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_info(&self) -> &[NodeInfo] {
        &self.info
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    /// Remaining deferment (AIFS) of a contending node, as of the current clock.
    pub fn defer_remaining_us(&self, node: usize) -> Option<Micros> {
        let n = &self.nodes[node];
        if !n.is_contending() {
            return None;
        }
        let aifs = self.medium.aifs_us(n.active.aifsn);
        Some(match self.idle_since {
            None => aifs,
            Some(s) => {
                let start = s.max(n.eligible_from);
                (start + aifs).saturating_sub(self.clock)
            }
        })
    }

    /// Schedules new parameters for every node of the listed classes. They are
    /// adopted at each node's next backoff draw. The whole assignment is
    /// validated first; on error nothing changes.
    pub fn apply_mac_params(&mut self, updates: &[ClassUpdate]) -> Result<(), ConfigError> {
        for u in updates {
            u.params.validate(&self.medium).map_err(|e| {
                e.within(&format!("{} {}", u.tech.device_label(), u.pclass.label()))
            })?;
        }
        for u in updates {
            for n in self
                .nodes
                .iter_mut()
                .filter(|n| n.tech == u.tech && n.pclass == u.pclass)
            {
                n.schedule_params(u.params);
            }
        }
        Ok(())
    }

    /// Advances the event loop by exactly `duration_us`.
    ///
    /// Every instant `t` with `clock < t <= clock + duration_us` is fully
    /// processed, so consecutive calls compose: two runs of `d` produce the
    /// same outcomes as one run of `2d`.
    pub fn run_for(&mut self, duration_us: Micros) -> WindowReport {
        assert!(duration_us > 0, "run_for requires a positive duration");
        let start = self.clock;
        let end = start + duration_us;
        let mut ledger = OccupancyLedger::new(self.nodes.len());
        let mut outcomes = Vec::new();

        loop {
            let next_event = self.next_instant();
            let next = next_event.map_or(end, |t| t.min(end));
            self.accumulate(next - self.clock, &mut ledger);
            self.clock = next;
            if next_event == Some(next) {
                self.process_instant(&mut outcomes);
            }
            if self.clock == end {
                break;
            }
        }

        WindowReport {
            start_us: start,
            end_us: end,
            outcomes,
            ledger,
        }
    }

    fn next_instant(&self) -> Option<Micros> {
        let mut next: Option<Micros> = None;
        let mut consider = |t: Micros| {
            debug_assert!(t > self.clock, "event scheduled in the past");
            next = Some(next.map_or(t, |n: Micros| n.min(t)));
        };
        for n in &self.nodes {
            if let Some(seg) = &n.current {
                consider(seg.end);
            } else if let Some(seg) = n.plan.front() {
                consider(seg.start);
            }
        }
        if let Some(idle) = self.idle_since {
            for n in self.nodes.iter().filter(|n| n.is_contending()) {
                consider(self.access_time(n, idle));
            }
        }
        next
    }

    fn access_time(&self, n: &NodeState, idle_since: Micros) -> Micros {
        idle_since.max(n.eligible_from)
            + self.medium.aifs_us(n.active.aifsn)
            + n.backoff as Micros * self.medium.obs_slot_us
    }

    fn accumulate(&self, dt: Micros, ledger: &mut OccupancyLedger) {
        if dt == 0 {
            return;
        }
        let mut emitters = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            let Some(seg) = &n.current else { continue };
            let slot = &mut ledger.per_node[i];
            match seg.kind {
                SegmentKind::Data if n.data_corrupted => slot.collision_us += dt,
                SegmentKind::Data => slot.success_us += dt,
                SegmentKind::Rs => slot.rs_us += dt,
                SegmentKind::Pulse => slot.cr_us += dt,
                SegmentKind::Listen => continue,
            }
            emitters += 1;
        }
        if emitters == 0 {
            ledger.idle_us += dt;
        } else {
            ledger.busy_us += dt;
            ledger.overlap_us += (emitters - 1) * dt;
        }
    }

    fn process_instant(&mut self, outcomes: &mut Vec<TxOutcome>) {
        let t = self.clock;

        // Segments ending now.
        for i in 0..self.nodes.len() {
            let ends_now = self.nodes[i].current.as_ref().is_some_and(|s| s.end == t);
            if !ends_now {
                continue;
            }
            let seg = self.nodes[i].current.take().expect("checked above");
            let node = &mut self.nodes[i];
            match seg.kind {
                SegmentKind::Data => {
                    let outcome = if node.data_corrupted {
                        node.on_collision(&mut self.rng);
                        TxOutcome {
                            node: i,
                            start_us: seg.start,
                            end_us: t,
                            kind: OutcomeKind::Collision,
                            access_delay_us: None,
                        }
                    } else {
                        let delay = node.on_success(
                            seg.start,
                            t,
                            self.medium.delay_reference,
                            &mut self.rng,
                        );
                        TxOutcome {
                            node: i,
                            start_us: seg.start,
                            end_us: t,
                            kind: OutcomeKind::Success,
                            access_delay_us: Some(delay),
                        }
                    };
                    node.record(&outcome);
                    outcomes.push(outcome);
                }
                SegmentKind::Rs | SegmentKind::Pulse => {
                    let outcome = TxOutcome {
                        node: i,
                        start_us: seg.start,
                        end_us: t,
                        kind: if seg.kind == SegmentKind::Rs {
                            OutcomeKind::Rs
                        } else {
                            OutcomeKind::CrPulse
                        },
                        access_delay_us: None,
                    };
                    node.record(&outcome);
                    outcomes.push(outcome);
                }
                SegmentKind::Listen => {}
            }
        }

        // Planned segments starting now.
        for n in &mut self.nodes {
            if n.current.is_none() && n.plan.front().is_some_and(|s| s.start == t) {
                let seg = n.plan.pop_front().expect("checked above");
                if seg.kind == SegmentKind::Data {
                    n.data_corrupted = false;
                }
                n.current = Some(seg);
            }
        }

        // Countdowns that expire now; decided on the channel state before `t`.
        if let Some(idle) = self.idle_since {
            for i in 0..self.nodes.len() {
                let n = &self.nodes[i];
                if n.is_contending() && self.access_time(n, idle) == t {
                    self.begin_access(i);
                }
            }
        }

        // Collision-resolution listeners that hear energy give up.
        let emitting: Vec<bool> = self.nodes.iter().map(NodeState::is_emitting).collect();
        let any_other = |i: usize| emitting.iter().enumerate().any(|(j, &e)| e && j != i);
        for i in 0..self.nodes.len() {
            let listening = self.nodes[i]
                .current
                .as_ref()
                .is_some_and(|s| s.kind == SegmentKind::Listen);
            if listening && any_other(i) {
                let policy = self.medium.cr_defer;
                self.nodes[i].abort_attempt(t, policy, &mut self.rng);
            }
        }

        // Energy overlap corrupts every data transmission involved.
        let emitters = self.nodes.iter().filter(|n| n.is_emitting()).count();
        if emitters >= 2 {
            for n in &mut self.nodes {
                if n.current.as_ref().is_some_and(|s| s.kind == SegmentKind::Data) {
                    n.data_corrupted = true;
                }
            }
        }

        // Busy/idle transition and backoff freezing.
        if emitters > 0 {
            if let Some(idle) = self.idle_since.take() {
                let slot = self.medium.obs_slot_us;
                for n in self.nodes.iter_mut().filter(|n| n.is_contending()) {
                    let aifs_end = idle.max(n.eligible_from) + self.medium.aifs_us(n.active.aifsn);
                    if t >= aifs_end {
                        let elapsed = ((t - aifs_end) / slot) as u32;
                        debug_assert!(elapsed < n.backoff, "expired countdown was not served");
                        n.backoff -= elapsed.min(n.backoff);
                    }
                }
            }
        } else if self.idle_since.is_none() {
            self.idle_since = Some(t);
        }
    }

    fn begin_access(&mut self, i: usize) {
        let t = self.clock;
        let n = &mut self.nodes[i];
        let mcot = n.active.mcot_us;
        let plan = match n.tech {
            Tech::Wifi => {
                let mut p = VecDeque::with_capacity(1);
                p.push_back(Segment::new(t, t + mcot, SegmentKind::Data));
                p
            }
            Tech::Nru => gap_plan(t, mcot, &self.medium, self.gap_mode, &mut self.rng),
        };
        n.plan = plan;
        let first = n.plan.pop_front().expect("plans are never empty");
        debug_assert_eq!(first.start, t);
        if first.kind == SegmentKind::Data {
            n.data_corrupted = false;
        }
        n.current = Some(first);
    }
}

#[cfg(test)]
mod tests;
