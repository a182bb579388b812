//! Two-region prioritized replay: a permanent demonstration region plus a
//! ring buffer of self-generated transitions. Demonstration entries are
//! never evicted or overwritten; the ring overwrites its oldest entry once
//! full. Sampling is proportional to priority^alpha via a sum tree.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::approximator::Network;
use crate::dqn::Transition;

use super::demo::DemonstrationSet;

/// Cached pieces of an n-step lookahead: the discounted reward sum, the
/// bootstrap state s_{t+m} (absent when the episode terminated inside the
/// window), and the bootstrap discount gamma^m.
#[derive(Debug, Clone, PartialEq)]
pub struct NStepCache {
    pub reward_sum: f64,
    pub discount: f64,
    pub bootstrap: Option<Vec<f64>>,
}

impl NStepCache {
    /// The n-step target value under a given bootstrap network.
    pub fn target_value(&self, target: &Network) -> f64 {
        match &self.bootstrap {
            Some(state) => {
                let q = target.forward(state);
                self.reward_sum + self.discount * q[crate::dqn::argmax(&q)]
            }
            None => self.reward_sum,
        }
    }
}

/// Computes the n-step cache for `segment[offset]`, looking ahead within the
/// segment. Truncates at a terminal step (dropping the bootstrap) and
/// bootstraps from the last available state when the segment is cut short.
pub fn n_step_cache(segment: &[Transition], offset: usize, n: usize, gamma: f64) -> NStepCache {
    assert!(n >= 1);
    assert!(offset < segment.len());
    let mut reward_sum = 0.0;
    let mut factor = 1.0;
    let mut last = offset;
    let mut terminated = false;
    for idx in offset..(offset + n).min(segment.len()) {
        reward_sum += factor * segment[idx].reward;
        factor *= gamma;
        last = idx;
        if segment[idx].terminal {
            terminated = true;
            break;
        }
    }
    let bootstrap = if terminated { None } else { Some(segment[last].next_state.clone()) };
    NStepCache { reward_sum, discount: factor, bootstrap }
}

/// One replay entry: the transition, its n-step lookahead cache, and whether
/// it came from the demonstration region.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferEntry {
    pub transition: Transition,
    pub n_step: NStepCache,
    pub is_demo: bool,
}

/// Power-of-two-padded sum tree supporting prefix-sum descent.
#[derive(Debug, Clone)]
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(size: usize) -> Self {
        let leaves = size.next_power_of_two().max(1);
        Self { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    fn set(&mut self, index: usize, value: f64) {
        let mut idx = index + self.leaves;
        self.nodes[idx] = value;
        idx /= 2;
        while idx >= 1 {
            self.nodes[idx] = self.nodes[2 * idx] + self.nodes[2 * idx + 1];
            if idx == 1 {
                break;
            }
            idx /= 2;
        }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf index whose prefix interval contains `u` (0 <= u < total).
    fn find(&self, mut u: f64) -> usize {
        let mut idx = 1;
        while idx < self.leaves {
            let left = 2 * idx;
            if u < self.nodes[left] {
                idx = left;
            } else {
                u -= self.nodes[left];
                idx = left + 1;
            }
        }
        idx - self.leaves
    }
}

/// The DQfD replay store. Index space: `0..demo_len()` addresses the
/// demonstration region, the remainder the self-generated ring.
#[derive(Debug)]
pub struct ReplayBuffer {
    demo_entries: Vec<BufferEntry>,
    ring: Vec<BufferEntry>,
    ring_capacity: usize,
    ring_cursor: usize,
    tree: SumTree,
    alpha: f64,
    eps_demo: f64,
    eps_self: f64,
    max_raw_priority: f64,
}

impl ReplayBuffer {
    /// Seeds the permanent region from a demonstration set, computing the
    /// n-step cache of every entry. All initial priorities are 1.
    pub fn from_demonstrations(
        demos: &DemonstrationSet,
        n: usize,
        gamma: f64,
        ring_capacity: usize,
        alpha: f64,
        eps_demo: f64,
        eps_self: f64,
    ) -> Self {
        assert!(eps_demo > 0.0 && eps_self > 0.0, "priority offsets must be positive");
        let mut demo_entries = Vec::with_capacity(demos.len());
        for (start, end) in demos.episode_bounds() {
            let segment = &demos.transitions()[start..end];
            for offset in 0..segment.len() {
                demo_entries.push(BufferEntry {
                    transition: segment[offset].clone(),
                    n_step: n_step_cache(segment, offset, n, gamma),
                    is_demo: true,
                });
            }
        }
        let mut tree = SumTree::new(demo_entries.len() + ring_capacity);
        for i in 0..demo_entries.len() {
            tree.set(i, 1.0);
        }
        Self {
            demo_entries,
            ring: Vec::new(),
            ring_capacity,
            ring_cursor: 0,
            tree,
            alpha,
            eps_demo,
            eps_self,
            max_raw_priority: 1.0,
        }
    }

    pub fn demo_len(&self) -> usize {
        self.demo_entries.len()
    }

    pub fn ring_len(&self) -> usize {
        self.ring.len()
    }

    pub fn ring_capacity(&self) -> usize {
        self.ring_capacity
    }

    pub fn len(&self) -> usize {
        self.demo_entries.len() + self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, index: usize) -> &BufferEntry {
        if index < self.demo_entries.len() {
            &self.demo_entries[index]
        } else {
            &self.ring[index - self.demo_entries.len()]
        }
    }

    pub fn demo_entries(&self) -> &[BufferEntry] {
        &self.demo_entries
    }

    /// Appends a self-generated entry, overwriting the oldest one once the
    /// ring is at capacity. New entries get the highest raw priority seen so
    /// far, so they are sampled soon.
    pub fn push_self(&mut self, transition: Transition, n_step: NStepCache) {
        assert!(self.ring_capacity > 0, "ring capacity is zero");
        let entry = BufferEntry { transition, n_step, is_demo: false };
        let slot = if self.ring.len() < self.ring_capacity {
            self.ring.push(entry);
            self.ring.len() - 1
        } else {
            let slot = self.ring_cursor;
            self.ring[slot] = entry;
            self.ring_cursor = (self.ring_cursor + 1) % self.ring_capacity;
            slot
        };
        self.tree.set(self.demo_entries.len() + slot, self.max_raw_priority.powf(self.alpha));
    }

    /// Draws `batch_size` indices with probability proportional to
    /// priority^alpha.
    pub fn sample(&self, batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        assert!(!self.is_empty(), "cannot sample from an empty buffer");
        let total = self.tree.total();
        assert!(total > 0.0, "all priorities are zero");
        (0..batch_size)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                self.tree.find(u).min(self.len() - 1)
            })
            .collect()
    }

    /// Sets priority_i to |td_i| + eps, where eps depends on the entry's
    /// region. Priorities stay strictly positive.
    pub fn update_priorities(&mut self, indices: &[usize], td_abs: &[f64]) {
        assert_eq!(indices.len(), td_abs.len());
        for (&i, &td) in indices.iter().zip(td_abs) {
            let eps = if i < self.demo_entries.len() { self.eps_demo } else { self.eps_self };
            let raw = td.abs() + eps;
            debug_assert!(raw > 0.0);
            if raw > self.max_raw_priority {
                self.max_raw_priority = raw;
            }
            self.tree.set(i, raw.powf(self.alpha));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn transition(tag: f64, terminal: bool) -> Transition {
        Transition {
            state: vec![tag; 4],
            action: 0,
            reward: 1.0,
            next_state: vec![tag + 1.0; 4],
            terminal,
        }
    }

    fn chained_segment(len: usize, terminal_last: bool) -> Vec<Transition> {
        (0..len)
            .map(|i| Transition {
                state: vec![i as f64; 4],
                action: i % 2,
                reward: 1.0,
                next_state: vec![i as f64 + 1.0; 4],
                terminal: terminal_last && i == len - 1,
            })
            .collect()
    }

    fn demo_set(len: usize) -> DemonstrationSet {
        DemonstrationSet::new(chained_segment(len, true), vec![0]).unwrap()
    }

    fn buffer_with(demo: usize, capacity: usize, alpha: f64) -> ReplayBuffer {
        ReplayBuffer::from_demonstrations(&demo_set(demo), 10, 0.99, capacity, alpha, 1.0, 0.001)
    }

    #[test]
    fn n_step_cache_truncates_at_terminal() {
        let segment = chained_segment(4, true);
        // From offset 1 with n = 10: three rewards then terminal, no bootstrap.
        let cache = n_step_cache(&segment, 1, 10, 0.99);
        assert!(cache.bootstrap.is_none());
        let expected: f64 = (0..3).map(|i| 0.99f64.powi(i)).sum();
        assert!((cache.reward_sum - expected).abs() < 1e-12);
    }

    #[test]
    fn n_step_cache_bootstraps_full_window() {
        let segment = chained_segment(20, true);
        let cache = n_step_cache(&segment, 0, 10, 0.99);
        assert_eq!(cache.bootstrap.as_deref(), Some(&segment[9].next_state[..]));
        assert!((cache.discount - 0.99f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn n_step_cache_bootstraps_at_data_cut() {
        // Segment cut without a terminal flag (truncated collection).
        let segment = chained_segment(5, false);
        let cache = n_step_cache(&segment, 2, 10, 0.99);
        assert_eq!(cache.bootstrap.as_deref(), Some(&segment[4].next_state[..]));
        assert!((cache.discount - 0.99f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn ring_respects_capacity_and_overwrites_oldest() {
        let mut buf = buffer_with(3, 4, 0.4);
        for i in 0..10 {
            buf.push_self(
                transition(100.0 + i as f64, false),
                NStepCache { reward_sum: 0.0, discount: 1.0, bootstrap: None },
            );
            assert!(buf.ring_len() <= 4);
        }
        assert_eq!(buf.len(), 3 + 4);
        // After 10 pushes into capacity 4, the ring holds 8, 9, 6, 7.
        let tags: Vec<f64> = (0..4).map(|i| buf.entry(3 + i).transition.state[0] - 100.0).collect();
        assert_eq!(tags, vec![8.0, 9.0, 6.0, 7.0]);
    }

    #[test]
    fn demo_region_is_never_touched_by_pushes() {
        let mut buf = buffer_with(5, 3, 0.4);
        let before = buf.demo_entries().to_vec();
        for i in 0..1000 {
            buf.push_self(
                transition(i as f64, false),
                NStepCache { reward_sum: 1.0, discount: 0.5, bootstrap: None },
            );
        }
        assert_eq!(buf.demo_entries(), &before[..]);
    }

    #[test]
    fn equal_priorities_sample_uniformly() {
        let buf = buffer_with(10, 0, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 10_000;
        let mut counts = [0usize; 10];
        for idx in buf.sample(draws, &mut rng) {
            counts[idx] += 1;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 =
            counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 9 degrees of freedom; 27.9 is the 0.1% tail.
        assert!(chi2 < 27.9, "chi2 {chi2} with counts {counts:?}");
    }

    #[test]
    fn dominant_priority_dominates_batches() {
        // One demo entry plus 10 self entries; a single huge TD error must
        // put its entry in essentially every batch.
        let mut buf = buffer_with(1, 16, 0.4);
        for i in 0..10 {
            buf.push_self(
                transition(i as f64, false),
                NStepCache { reward_sum: 0.0, discount: 1.0, bootstrap: None },
            );
        }
        let indices: Vec<usize> = (0..11).collect();
        let mut tds = vec![0.0; 11]; // self raw priorities fall to eps_self
        tds[5] = 1e9;
        buf.update_priorities(&indices, &tds);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut hit = 0;
        let batches = 1000;
        for _ in 0..batches {
            if buf.sample(32, &mut rng).contains(&5) {
                hit += 1;
            }
        }
        assert!(hit >= 990, "dominant entry hit {hit}/1000 batches");
    }

    #[test]
    fn alpha_zero_ignores_priorities() {
        let mut buf = buffer_with(4, 0, 0.0);
        buf.update_priorities(&[0, 1, 2, 3], &[1000.0, 0.0, 5.0, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 20_000;
        let mut counts = [0usize; 4];
        for idx in buf.sample(draws, &mut rng) {
            counts[idx] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 =
            counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 16.3, "chi2 {chi2} with counts {counts:?}"); // 3 dof, 0.1% tail
    }

    #[test]
    fn priority_updates_route_eps_by_region() {
        let mut buf = buffer_with(2, 2, 1.0);
        buf.push_self(transition(0.0, false), NStepCache {
            reward_sum: 0.0,
            discount: 1.0,
            bootstrap: None,
        });
        // Same |td| lands at |td| + 1.0 for the demo entry and |td| + 0.001
        // for the self entry.
        buf.update_priorities(&[0, 2], &[0.5, 0.5]);
        assert!((buf.tree.nodes[buf.tree.leaves] - 1.5).abs() < 1e-12);
        assert!((buf.tree.nodes[buf.tree.leaves + 2] - 0.501).abs() < 1e-12);
    }
}
