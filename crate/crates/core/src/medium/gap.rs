//! What an NR-U node does between the end of its backoff and the next slot
//! boundary, where its data transmission must start.
//!
//! Reservation mode fills the gap with a reservation signal. Collision
//! resolution mode starts with a silent listen over the part of the gap that
//! does not fit a whole micro-slot, then runs up to `cr_slot_count` micro-slots
//! flush against the boundary. Each micro-slot emits a pulse in one half and
//! listens in the other; which half pulses is drawn per micro-slot. Two nodes
//! that entered the gap together separate at the first micro-slot where their
//! draws differ: the one listening hears the other's pulse and backs off. Nodes
//! with identical draws throughout still collide at the boundary.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MediumParams, Micros};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    Reservation,
    CollisionResolution,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Data,
    Rs,
    Pulse,
    /// Silent sensing; no energy on the channel.
    Listen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: Micros,
    pub end: Micros,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn new(start: Micros, end: Micros, kind: SegmentKind) -> Self {
        debug_assert!(end > start, "empty segment");
        Self { start, end, kind }
    }
}

/// Next NR-U slot boundary at or after `t`.
pub fn next_boundary(t: Micros, period: Micros) -> Micros {
    t.div_ceil(period) * period
}

/// Contiguous schedule from backoff completion at `backoff_done_at` through the
/// end of the data transmission.
pub fn gap_plan<R: Rng + ?Sized>(
    backoff_done_at: Micros,
    mcot_us: Micros,
    medium: &MediumParams,
    mode: GapMode,
    rng: &mut R,
) -> VecDeque<Segment> {
    let boundary = next_boundary(backoff_done_at, medium.nru_slot_boundary_us);
    let mut plan = VecDeque::new();
    let gap = boundary - backoff_done_at;

    if gap > 0 {
        match mode {
            GapMode::Reservation => {
                plan.push_back(Segment::new(backoff_done_at, boundary, SegmentKind::Rs));
            }
            GapMode::CollisionResolution => {
                let slot = medium.cr_slot_us;
                let half = slot / 2;
                let count = (gap / slot).min(medium.cr_slot_count as Micros);
                let lead = gap - count * slot;
                if lead > 0 {
                    plan.push_back(Segment::new(
                        backoff_done_at,
                        backoff_done_at + lead,
                        SegmentKind::Listen,
                    ));
                }
                for k in 0..count {
                    let s = backoff_done_at + lead + k * slot;
                    let (first, second) = if rng.random_bool(0.5) {
                        (SegmentKind::Pulse, SegmentKind::Listen)
                    } else {
                        (SegmentKind::Listen, SegmentKind::Pulse)
                    };
                    plan.push_back(Segment::new(s, s + half, first));
                    plan.push_back(Segment::new(s + half, s + slot, second));
                }
            }
        }
    }
    plan.push_back(Segment::new(boundary, boundary + mcot_us, SegmentKind::Data));
    plan
}
