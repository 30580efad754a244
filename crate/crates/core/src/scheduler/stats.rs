//! Global transition statistics and instance priorities.

use std::collections::{BTreeMap, HashMap};

use crate::solver::StateId;

pub type Transitions = BTreeMap<(StateId, StateId), u64>;

/// Sparse counts of every transition seen in any run.
#[derive(Clone, Debug, Default)]
pub struct TransitionStats {
    counts: HashMap<(StateId, StateId), u64>,
    row_sums: HashMap<StateId, u64>,
}

impl TransitionStats {
    pub fn add(&mut self, transitions: &Transitions) {
        for (&(i, j), &c) in transitions {
            *self.counts.entry((i, j)).or_insert(0) += c;
            *self.row_sums.entry(i).or_insert(0) += c;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, i: StateId, j: StateId) -> u64 {
        self.counts.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn row_sum(&self, i: StateId) -> u64 {
        self.row_sums.get(&i).copied().unwrap_or(0)
    }

    /// Empirical probability of moving from `i` to `j`.
    pub fn probability(&self, i: StateId, j: StateId) -> f64 {
        match self.row_sum(i) {
            0 => 0.0,
            total => self.count(i, j) as f64 / total as f64,
        }
    }

    /// Inverse probability, zero for transitions never seen.
    pub fn weight(&self, i: StateId, j: StateId) -> f64 {
        match self.count(i, j) {
            0 => 0.0,
            c => self.row_sum(i) as f64 / c as f64,
        }
    }

    /// Outgoing probabilities of `i`, keyed by target.
    pub fn row(&self, i: StateId) -> BTreeMap<StateId, f64> {
        self.counts
            .iter()
            .filter(|((a, _), _)| *a == i)
            .map(|((_, b), _)| (*b, self.probability(i, *b)))
            .collect()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.row_sums.keys().copied()
    }
}

/// Sum of the instance's transition counts weighted by how rare each
/// transition is globally. Instances without transitions rank first.
pub fn priority(stats: &TransitionStats, instance: &Transitions) -> f64 {
    if instance.is_empty() {
        return f64::INFINITY;
    }
    instance.iter().map(|(&(i, j), &t)| stats.weight(i, j) * t as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rare_transitions_rank_higher() {
        let mut stats = TransitionStats::default();
        stats.add(&Transitions::from([((1, 2), 9), ((1, 3), 1)]));
        let a = Transitions::from([((1, 2), 1)]);
        let b = Transitions::from([((1, 3), 1)]);
        assert!((priority(&stats, &a) - 10.0 / 9.0).abs() < 1e-12);
        assert!((priority(&stats, &b) - 10.0).abs() < 1e-12);
        assert_eq!(priority(&stats, &Transitions::new()), f64::INFINITY);
        // unseen transitions weigh nothing
        assert_eq!(priority(&stats, &Transitions::from([((7, 8), 4)])), 0.0);
    }

    fn transitions() -> impl Strategy<Value = Transitions> {
        proptest::collection::btree_map((0u64..6, 0u64..6), 1u64..20, 0..25)
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(batches in proptest::collection::vec(transitions(), 1..5)) {
            let mut stats = TransitionStats::default();
            for b in &batches {
                stats.add(b);
            }
            for i in stats.states().collect::<Vec<_>>() {
                let total: f64 = stats.row(i).values().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn more_rare_transitions_raise_priority(global in transitions().prop_filter("nonempty", |t| !t.is_empty()), extra in 1u64..5) {
            let mut stats = TransitionStats::default();
            stats.add(&global);
            let (&key, _) = global.iter().next().unwrap();
            let base = Transitions::from([(key, 1)]);
            let more = Transitions::from([(key, 1 + extra)]);
            prop_assert!(priority(&stats, &more) > priority(&stats, &base));
        }
    }
}
