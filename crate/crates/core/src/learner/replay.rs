use rand::Rng;

/// One owned transition, as handed to [`ReplayBuffer::push`].
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub terminal: bool,
}

impl Transition {
    pub fn view(&self) -> TransitionRef<'_> {
        TransitionRef {
            obs: &self.obs,
            action: self.action,
            reward: self.reward,
            next_obs: &self.next_obs,
            terminal: self.terminal,
        }
    }
}

/// A transition borrowed from a buffer or from an owned [`Transition`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionRef<'a> {
    pub obs: &'a [f64],
    pub action: usize,
    pub reward: f64,
    pub next_obs: &'a [f64],
    pub terminal: bool,
}

/// Bounded FIFO store; the oldest transition is evicted first.
///
/// Observations live in flat ring arrays rather than one small allocation
/// per transition. Long-lived small allocations interleaved with the large
/// short-lived buffers of the matrix products fragment the heap, so storing
/// them per transition grew memory by the size of one product buffer per step.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    /// Observation width, fixed by the first push.
    dim: usize,
    len: usize,
    /// Slot of the oldest transition once the ring is full.
    head: usize,
    obs: Vec<f64>,
    next_obs: Vec<f64>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    terminal: Vec<bool>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            dim: 0,
            len: 0,
            head: 0,
            obs: Vec::new(),
            next_obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            terminal: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Panics when the observation width differs from earlier transitions.
    pub fn push(&mut self, t: Transition) {
        if self.actions.is_empty() {
            self.dim = t.obs.len();
        }
        assert!(
            t.obs.len() == self.dim && t.next_obs.len() == self.dim,
            "transition width {} / {} differs from the buffer's {}",
            t.obs.len(),
            t.next_obs.len(),
            self.dim
        );
        if self.len < self.capacity {
            self.obs.extend_from_slice(&t.obs);
            self.next_obs.extend_from_slice(&t.next_obs);
            self.actions.push(t.action);
            self.rewards.push(t.reward);
            self.terminal.push(t.terminal);
            self.len += 1;
        } else {
            let slot = self.head;
            let span = slot * self.dim..(slot + 1) * self.dim;
            self.obs[span.clone()].copy_from_slice(&t.obs);
            self.next_obs[span].copy_from_slice(&t.next_obs);
            self.actions[slot] = t.action;
            self.rewards[slot] = t.reward;
            self.terminal[slot] = t.terminal;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// The `i`-th oldest stored transition.
    pub fn get(&self, i: usize) -> Option<TransitionRef<'_>> {
        if i >= self.len {
            return None;
        }
        let slot = (self.head + i) % self.capacity;
        let span = slot * self.dim..(slot + 1) * self.dim;
        Some(TransitionRef {
            obs: &self.obs[span.clone()],
            action: self.actions[slot],
            reward: self.rewards[slot],
            next_obs: &self.next_obs[span],
            terminal: self.terminal[slot],
        })
    }

    /// `n` distinct transitions drawn uniformly, or `None` when fewer are stored.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Option<Vec<TransitionRef<'_>>> {
        if n == 0 || self.len < n {
            return None;
        }
        Some(
            rand::seq::index::sample(rng, self.len, n)
                .into_iter()
                .map(|i| self.get(i).expect("index below len"))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(k: usize) -> Transition {
        Transition {
            obs: vec![k as f64],
            action: k,
            reward: 0.0,
            next_obs: vec![k as f64 + 1.0],
            terminal: false,
        }
    }

    #[test]
    fn sample_needs_enough_items() {
        let mut b = ReplayBuffer::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        b.push(t(0));
        assert!(b.sample(&mut rng, 2).is_none());
        b.push(t(1));
        let s = b.sample(&mut rng, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_ne!(s[0].action, s[1].action);
    }

    #[test]
    #[should_panic(expected = "width")]
    fn mixed_widths_are_rejected() {
        let mut b = ReplayBuffer::new(4);
        b.push(t(0));
        b.push(Transition {
            obs: vec![0.0, 1.0],
            ..t(1)
        });
    }

    proptest! {
        #[test]
        fn fifo_bounded(cap in 1usize..50, pushes in 0usize..200) {
            let mut b = ReplayBuffer::new(cap);
            for k in 0..pushes {
                b.push(t(k));
                prop_assert!(b.len() <= cap);
            }
            prop_assert_eq!(b.len(), pushes.min(cap));
            let first_kept = pushes.saturating_sub(cap);
            for i in 0..b.len() {
                let got = b.get(i).unwrap();
                prop_assert_eq!(got.action, first_kept + i);
                prop_assert_eq!(got.obs, &[(first_kept + i) as f64][..]);
                prop_assert_eq!(got.next_obs, &[(first_kept + i) as f64 + 1.0][..]);
            }
        }
    }
}
