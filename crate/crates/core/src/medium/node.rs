use std::collections::VecDeque;

use rand::Rng;

use super::{
    ClassParams, CrDeferPolicy, DelayReference, Micros, OutcomeKind, PriorityClass, Segment,
    SegmentKind, Tech, TxOutcome,
};

/// Uniform backoff counter in `[0, cw_current]`.
pub fn draw_backoff<R: Rng + ?Sized>(rng: &mut R, cw_current: u32) -> u32 {
    rng.random_range(0..=cw_current)
}

/// Cumulative per-node counters since the simulator was built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NodeStats {
    pub successes: u64,
    pub collisions: u64,
    pub cr_aborts: u64,
    pub success_us: Micros,
    pub collision_us: Micros,
    pub rs_us: Micros,
    pub cr_us: Micros,
    pub delay_sum_us: Micros,
}

/// MAC state of one contender.
#[derive(Clone, Debug)]
pub struct NodeState {
    pub id: usize,
    pub tech: Tech,
    pub pclass: PriorityClass,
    /// Parameters in force.
    pub active: ClassParams,
    /// Parameters waiting for the next backoff draw.
    pub pending: Option<ClassParams>,
    pub cw_current: u32,
    pub backoff: u32,
    /// Instant the current head-of-line frame started its access attempt.
    pub hol_since_us: Micros,
    pub stats: NodeStats,
    /// Earliest instant the node may count idle time toward its AIFS.
    pub(crate) eligible_from: Micros,
    pub(crate) current: Option<Segment>,
    pub(crate) plan: VecDeque<Segment>,
    pub(crate) data_corrupted: bool,
}

impl NodeState {
    pub(crate) fn new<R: Rng + ?Sized>(
        id: usize,
        tech: Tech,
        pclass: PriorityClass,
        params: ClassParams,
        rng: &mut R,
    ) -> Self {
        Self {
            id,
            tech,
            pclass,
            active: params,
            pending: None,
            cw_current: params.cw_min,
            backoff: draw_backoff(rng, params.cw_min),
            hol_since_us: 0,
            stats: NodeStats::default(),
            eligible_from: 0,
            current: None,
            plan: VecDeque::new(),
            data_corrupted: false,
        }
    }

    /// Idle-channel contention: deferring or counting down.
    pub fn is_contending(&self) -> bool {
        self.current.is_none() && self.plan.is_empty()
    }

    pub fn is_emitting(&self) -> bool {
        self.current
            .as_ref()
            .is_some_and(|s| s.kind != SegmentKind::Listen)
    }

    /// True while running collision-resolution micro-slots.
    pub fn in_cr_phase(&self) -> bool {
        self.current
            .as_ref()
            .is_some_and(|s| matches!(s.kind, SegmentKind::Listen | SegmentKind::Pulse))
    }

    pub(crate) fn schedule_params(&mut self, params: ClassParams) {
        if params == self.active {
            self.pending = None;
        } else {
            self.pending = Some(params);
        }
    }

    fn adopt_pending(&mut self) {
        if let Some(p) = self.pending.take() {
            self.active = p;
        }
    }

    /// Binary exponential backoff after a failed transmission. The frame is kept.
    pub fn on_collision<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.adopt_pending();
        let doubled = 2 * (self.cw_current as u64 + 1) - 1;
        self.cw_current = (doubled.min(self.active.cw_max as u64) as u32).max(self.active.cw_min);
        self.backoff = draw_backoff(rng, self.cw_current);
    }

    /// Window reset after a delivered frame; the next frame becomes head-of-line
    /// at `end`. Returns the access delay of the delivered frame.
    pub fn on_success<R: Rng + ?Sized>(
        &mut self,
        start: Micros,
        end: Micros,
        reference: DelayReference,
        rng: &mut R,
    ) -> Micros {
        let closing = match reference {
            DelayReference::TxStart => start,
            DelayReference::TxEnd => end,
        };
        let delay = closing - self.hol_since_us;
        self.adopt_pending();
        self.cw_current = self.active.cw_min;
        self.backoff = draw_backoff(rng, self.cw_current);
        self.hol_since_us = end;
        self.eligible_from = end;
        delay
    }

    /// Collision resolution heard another transmitter: drop the rest of the
    /// plan without touching the BEB stage.
    pub(crate) fn abort_attempt<R: Rng + ?Sized>(
        &mut self,
        now: Micros,
        policy: CrDeferPolicy,
        rng: &mut R,
    ) {
        self.current = None;
        self.plan.clear();
        self.eligible_from = now;
        self.stats.cr_aborts += 1;
        if policy == CrDeferPolicy::Redraw {
            self.adopt_pending();
            self.cw_current = self.cw_current.clamp(self.active.cw_min, self.active.cw_max);
            self.backoff = draw_backoff(rng, self.cw_current);
        }
    }

    pub(crate) fn record(&mut self, outcome: &TxOutcome) {
        let d = outcome.duration_us();
        match outcome.kind {
            OutcomeKind::Success => {
                self.stats.successes += 1;
                self.stats.success_us += d;
                self.stats.delay_sum_us += outcome.access_delay_us.unwrap_or(0);
            }
            OutcomeKind::Collision => {
                self.stats.collisions += 1;
                self.stats.collision_us += d;
                self.eligible_from = outcome.end_us;
            }
            OutcomeKind::Rs => self.stats.rs_us += d,
            OutcomeKind::CrPulse => self.stats.cr_us += d,
        }
    }
}
