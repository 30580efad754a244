//! Mutation weights and the two-stage mutation choice.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mutation::{MutationId, MutationType};

pub const INITIAL_WEIGHT: f64 = 0.1;
/// Share of the previous weight kept by an update.
pub const WEIGHT_DECAY: f64 = 0.62;
/// Share given to the observed new-trace rate.
pub const WEIGHT_GAIN: f64 = 0.38;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub weight: f64,
    pub applications: u64,
    /// Applications that produced a globally new trace.
    pub hits: u64,
}

impl Default for WeightEntry {
    fn default() -> Self {
        WeightEntry { weight: INITIAL_WEIGHT, applications: 0, hits: 0 }
    }
}

/// One weight update step.
pub fn updated_weight(previous: f64, new_trace_rate: f64) -> f64 {
    WEIGHT_DECAY * previous + WEIGHT_GAIN * new_trace_rate
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MutationWeights {
    pub entries: BTreeMap<MutationId, WeightEntry>,
}

impl MutationWeights {
    /// Every mutation of the given types at the initial weight.
    pub fn new(types: &[MutationType]) -> Self {
        let entries = types
            .iter()
            .flat_map(|t| MutationId::all_of(*t))
            .map(|id| (id, WeightEntry::default()))
            .collect();
        MutationWeights { entries }
    }

    pub fn record(&mut self, id: &MutationId, new_trace: bool) {
        let e = self.entries.entry(id.clone()).or_default();
        e.applications += 1;
        e.hits += u64::from(new_trace);
    }

    /// Moves each applied mutation's weight towards its new-trace rate.
    pub fn update(&mut self) {
        for e in self.entries.values_mut().filter(|e| e.applications > 0) {
            e.weight = updated_weight(e.weight, e.hits as f64 / e.applications as f64);
        }
    }

    pub fn weight(&self, id: &MutationId) -> f64 {
        self.entries.get(id).map_or(INITIAL_WEIGHT, |e| e.weight)
    }

    /// Picks a type uniformly from `types`, then a member of that type in
    /// proportion to its weight, or uniformly when `equiprobable`.
    pub fn choose(&self, types: &[MutationType], equiprobable: bool, rng: &mut ChaCha8Rng) -> MutationId {
        assert!(!types.is_empty(), "at least one mutation type must be enabled");
        let ty = types[rng.gen_range(0..types.len())];
        let members = MutationId::all_of(ty);
        let weights: Vec<f64> = members.iter().map(|m| self.weight(m)).collect();
        let total: f64 = weights.iter().sum();
        if equiprobable || total <= 0.0 {
            return members[rng.gen_range(0..members.len())].clone();
        }
        let mut x = rng.gen::<f64>() * total;
        for (m, w) in members.iter().zip(&weights) {
            if x < *w {
                return m.clone();
            }
            x -= w;
        }
        // Rounding can leave x just above the last positive weight.
        members[weights.iter().rposition(|w| *w > 0.0).unwrap()].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mutation::MutationKind;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn update_step() {
        assert_eq!(updated_weight(0.1, 1.0), 0.62 * 0.1 + 0.38 * 1.0);
        assert!((updated_weight(0.1, 1.0) - 0.442).abs() < 1e-15);
        assert_eq!(updated_weight(0.5, 0.5), 0.5);
    }

    #[test]
    fn unapplied_mutations_keep_their_weight() {
        let mut w = MutationWeights::new(&MutationType::ALL);
        let swap = MutationId::own(MutationKind::SwapAnd);
        w.record(&swap, true);
        w.record(&swap, false);
        w.update();
        assert_eq!(w.weight(&swap), updated_weight(0.1, 0.5));
        assert_eq!(w.weight(&MutationId::own(MutationKind::DupAnd)), 0.1);
    }

    #[test]
    fn zero_weights_are_never_chosen() {
        let mut w = MutationWeights::new(&[MutationType::Own]);
        for (id, e) in w.entries.iter_mut() {
            let keep = matches!(id.kind, MutationKind::SwapAnd | MutationKind::DupAnd);
            e.weight = if keep { 0.2 } else { 0.0 };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut swap = 0;
        for _ in 0..4000 {
            let id = w.choose(&[MutationType::Own], false, &mut rng);
            assert!(matches!(id.kind, MutationKind::SwapAnd | MutationKind::DupAnd));
            swap += usize::from(id.kind == MutationKind::SwapAnd);
        }
        assert!((1800..2200).contains(&swap));
    }

    #[test]
    fn types_are_equally_likely() {
        let w = MutationWeights::new(&MutationType::ALL);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000u32;
        let mut counts = BTreeMap::new();
        for _ in 0..n {
            *counts.entry(w.choose(&MutationType::ALL, false, &mut rng).kind.mutation_type()).or_insert(0u32) += 1;
        }
        let sigma = (f64::from(n) * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for ty in MutationType::ALL {
            assert!((f64::from(counts[&ty]) - f64::from(n) / 3.0).abs() <= 3.0 * sigma, "{ty}: {}", counts[&ty]);
        }
    }

    proptest! {
        #[test]
        fn weights_stay_in_the_open_unit_interval(rates in proptest::collection::vec(0.0f64..=1.0, 1..60)) {
            let mut w = INITIAL_WEIGHT;
            for p in rates {
                w = updated_weight(w, p);
                prop_assert!(w > 0.0 && w < 1.0);
            }
        }

        #[test]
        fn constant_rate_converges_geometrically(p in 0.0f64..=1.0, k in 1usize..40) {
            let mut w = INITIAL_WEIGHT;
            for _ in 0..k {
                w = updated_weight(w, p);
            }
            let closed = p + (INITIAL_WEIGHT - p) * WEIGHT_DECAY.powi(k as i32);
            prop_assert!((w - closed).abs() < 1e-12);
        }
    }
}
