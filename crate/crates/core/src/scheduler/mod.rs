//! Seed groups, group selection, mutation choice and the switch/rollback
//! rules that decide how long a group is worked on.
//!
//! The scheduler is a single writer: workers report runs through
//! [`Scheduler::record_run`] and every counter lives here.

mod select;
mod stats;
mod weights;

pub use select::{GroupFeatures, Heuristic};
pub use stats::{priority, TransitionStats, Transitions};
pub use weights::{updated_weight, MutationWeights, WeightEntry, INITIAL_WEIGHT, WEIGHT_DECAY, WEIGHT_GAIN};

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::{is_linear_system, ChcSystem};
use crate::mutation::{MutationChain, MutationId, MutationRecord, MutationType};
use crate::oracle::{FindingKind, GroundTruth};
use crate::solver::{TraceSummary, VerdictKind};

#[derive(Clone, Debug, PartialEq)]
pub struct SchedulerConfig {
    pub heuristic: Heuristic,
    pub mutation_types: Vec<MutationType>,
    /// Uniform choice within a type; weights are then never updated.
    pub equiprobable: bool,
    pub bug_limit: u32,
    pub unknown_limit: u32,
    pub consecutive_cap: u32,
    /// Stagnation threshold is this factor times the seed's clause count.
    pub stagnation_factor: u32,
    /// Rollback after this many stagnation thresholds without a new trace.
    pub rollback_stagnations: u32,
    pub rollback_timeouts: u32,
    pub weight_period: u64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            heuristic: Heuristic::Default,
            mutation_types: MutationType::ALL.to_vec(),
            equiprobable: false,
            bug_limit: 3,
            unknown_limit: 10,
            consecutive_cap: 100,
            stagnation_factor: 5,
            rollback_stagnations: 3,
            rollback_timeouts: 3,
            weight_period: 1000,
        }
    }
}

/// A seed and the chain of mutants derived from it.
#[derive(Clone, Debug)]
pub struct SeedGroup {
    pub seed_id: String,
    pub seed: ChcSystem,
    pub truth: GroundTruth,
    pub chain: MutationChain,
    /// The seed replayed through `chain`.
    pub current: ChcSystem,
    pub clause_count: usize,
    pub linear: bool,
    pub predicates: usize,
    pub transitions: Transitions,
    pub runs: u64,
    pub consecutive_runs: u32,
    /// Runs since the last globally new trace; reset on switch.
    pub stagnant_runs: u32,
    /// Like `stagnant_runs` but kept across switches; drives rollback.
    pub runs_without_new: u32,
    pub consecutive_timeouts: u32,
    pub unknown_count: u32,
    /// Findings on this group; never reset, the group retires at the limit.
    pub bug_count: u32,
    pub retired: bool,
    /// Bumped whenever `current` is replaced wholesale, so reports computed
    /// from an older state can be recognised.
    pub epoch: u64,
}

impl SeedGroup {
    pub fn new(seed_id: impl Into<String>, seed: ChcSystem, truth: GroundTruth) -> Self {
        let seed_id = seed_id.into();
        SeedGroup {
            chain: MutationChain { seed_id: seed_id.clone(), records: Vec::new() },
            seed_id,
            clause_count: seed.clauses.len(),
            linear: is_linear_system(&seed),
            predicates: seed.predicates.len(),
            current: seed.clone(),
            seed,
            truth,
            transitions: Transitions::new(),
            runs: 0,
            consecutive_runs: 0,
            stagnant_runs: 0,
            runs_without_new: 0,
            consecutive_timeouts: 0,
            unknown_count: 0,
            bug_count: 0,
            retired: false,
            epoch: 0,
        }
    }

    pub fn stagnation_threshold(&self, config: &SchedulerConfig) -> u32 {
        config.stagnation_factor * self.clause_count.max(1) as u32
    }

    fn rollback(&mut self) {
        self.chain.records.clear();
        self.current = self.seed.clone();
        self.stagnant_runs = 0;
        self.runs_without_new = 0;
        self.consecutive_timeouts = 0;
        self.unknown_count = 0;
        self.epoch += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchReason {
    Stagnation,
    BugLimit,
    UnknownLimit,
    ConsecutiveCap,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SwitchCheck {
    pub rollback: bool,
    pub switch: Option<SwitchReason>,
}

/// Decides whether to discard the group's mutants and whether to leave it.
pub fn should_switch(group: &SeedGroup, config: &SchedulerConfig) -> SwitchCheck {
    let threshold = group.stagnation_threshold(config);
    let rollback = group.consecutive_timeouts >= config.rollback_timeouts
        || group.runs_without_new >= config.rollback_stagnations * threshold;
    let switch = if group.bug_count >= config.bug_limit {
        Some(SwitchReason::BugLimit)
    } else if group.unknown_count >= config.unknown_limit {
        Some(SwitchReason::UnknownLimit)
    } else if group.stagnant_runs >= threshold {
        Some(SwitchReason::Stagnation)
    } else if group.consecutive_runs >= config.consecutive_cap {
        Some(SwitchReason::ConsecutiveCap)
    } else {
        None
    };
    SwitchCheck { rollback, switch }
}

/// The result of one solver run on a mutant.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub mutation: MutationId,
    pub verdict: VerdictKind,
    pub trace: TraceSummary,
    pub finding: Option<FindingKind>,
    /// The mutant and its completed record.
    pub mutant: Option<(ChcSystem, MutationRecord)>,
    /// Epoch and chain length of the group state the mutant was derived from.
    pub parent: (u64, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSnapshot {
    pub seed_id: String,
    pub truth: GroundTruth,
    pub chain_len: usize,
    pub runs: u64,
    pub consecutive_runs: u32,
    pub stagnant_runs: u32,
    pub unknown_count: u32,
    pub bug_count: u32,
    pub retired: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub runs: u64,
    pub unique_traces: usize,
    pub skipped_iterations: u64,
    pub weight_updates: u64,
    pub switches: BTreeMap<String, u64>,
    pub rollbacks: u64,
    pub findings: BTreeMap<FindingKind, u64>,
    pub verdicts: BTreeMap<VerdictKind, u64>,
    pub weights: BTreeMap<String, WeightEntry>,
    pub groups: Vec<GroupSnapshot>,
}

pub struct Scheduler {
    pub config: SchedulerConfig,
    groups: Vec<SeedGroup>,
    stats: TransitionStats,
    weights: MutationWeights,
    seen: HashSet<u64>,
    runs: u64,
    skipped: u64,
    weight_updates: u64,
    rollbacks: u64,
    switches: BTreeMap<String, u64>,
    findings: BTreeMap<FindingKind, u64>,
    verdicts: BTreeMap<VerdictKind, u64>,
    active: Option<usize>,
    visited: Vec<bool>,
    rng: ChaCha8Rng,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig, random_seed: u64) -> Self {
        Scheduler {
            weights: MutationWeights::new(&config.mutation_types),
            config,
            groups: Vec::new(),
            stats: TransitionStats::default(),
            seen: HashSet::new(),
            runs: 0,
            skipped: 0,
            weight_updates: 0,
            rollbacks: 0,
            switches: BTreeMap::new(),
            findings: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            active: None,
            visited: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(random_seed),
        }
    }

    /// Admits a seed whose baseline run produced `baseline`.
    pub fn add_group(&mut self, mut group: SeedGroup, baseline: &TraceSummary) -> usize {
        self.stats.add(&baseline.transitions);
        self.seen.insert(baseline.trace_hash());
        merge(&mut group.transitions, &baseline.transitions);
        self.groups.push(group);
        self.visited.push(false);
        self.groups.len() - 1
    }

    pub fn groups(&self) -> &[SeedGroup] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &SeedGroup {
        &self.groups[i]
    }

    pub fn stats(&self) -> &TransitionStats {
        &self.stats
    }

    pub fn weights(&self) -> &MutationWeights {
        &self.weights
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    pub fn unique_traces(&self) -> usize {
        self.seen.len()
    }

    pub fn features(&self, i: usize) -> GroupFeatures {
        let g = &self.groups[i];
        GroupFeatures { linear: g.linear, predicates: g.predicates, priority: priority(&self.stats, &g.transitions) }
    }

    /// The group to work on next, or `None` once every group is retired.
    /// Groups are visited in rounds: each switch moves to the best-ranked
    /// group not yet visited in the current round.
    pub fn current_group(&mut self) -> Option<usize> {
        if let Some(a) = self.active {
            return Some(a);
        }
        let eligible: Vec<usize> = (0..self.groups.len()).filter(|&i| !self.groups[i].retired).collect();
        if eligible.is_empty() {
            return None;
        }
        if eligible.iter().all(|&i| self.visited[i]) {
            self.visited.iter_mut().for_each(|v| *v = false);
        }
        let candidates: Vec<usize> = eligible.into_iter().filter(|&i| !self.visited[i]).collect();
        let features: Vec<GroupFeatures> = candidates.iter().map(|&i| self.features(i)).collect();
        let pick = candidates[self.config.heuristic.order(&features)[0]];
        self.visited[pick] = true;
        self.active = Some(pick);
        Some(pick)
    }

    pub fn choose_mutation(&mut self) -> MutationId {
        self.weights.choose(&self.config.mutation_types, self.config.equiprobable, &mut self.rng)
    }

    /// A fresh seed for one mutation application.
    pub fn next_rng_seed(&mut self) -> u64 {
        self.rng.gen()
    }

    /// An iteration on `g` found no applicable mutation. Counts towards
    /// stagnation so that a group without applicable mutations is left.
    pub fn record_skip(&mut self, g: usize) -> SwitchCheck {
        self.skipped += 1;
        let group = &mut self.groups[g];
        group.consecutive_runs += 1;
        group.stagnant_runs += 1;
        self.after_run(g)
    }

    pub fn record_run(&mut self, g: usize, report: RunReport) -> SwitchCheck {
        self.runs += 1;
        *self.verdicts.entry(report.verdict).or_insert(0) += 1;
        self.stats.add(&report.trace.transitions);
        let new_trace = self.seen.insert(report.trace.trace_hash());
        self.weights.record(&report.mutation, new_trace);

        let group = &mut self.groups[g];
        merge(&mut group.transitions, &report.trace.transitions);
        group.runs += 1;
        group.consecutive_runs += 1;
        if new_trace {
            group.stagnant_runs = 0;
            group.runs_without_new = 0;
        } else {
            group.stagnant_runs += 1;
            group.runs_without_new += 1;
        }
        match report.verdict {
            VerdictKind::Timeout => {
                group.consecutive_timeouts += 1;
                group.unknown_count += 1;
            }
            VerdictKind::Unknown => {
                group.consecutive_timeouts = 0;
                group.unknown_count += 1;
            }
            _ => group.consecutive_timeouts = 0,
        }
        match report.finding {
            Some(kind) => {
                *self.findings.entry(kind).or_insert(0) += 1;
                if kind != FindingKind::UnknownInfo {
                    group.bug_count += 1;
                }
            }
            None => {}
        }
        let is_bug = report.finding.is_some_and(|k| k != FindingKind::UnknownInfo);
        if let (false, Some((mutant, record))) = (is_bug, report.mutant) {
            // A mutant derived from a state that has since moved on is not
            // a continuation of the current chain.
            if report.parent == (group.epoch, group.chain.records.len()) {
                group.chain.records.push(record);
                group.current = mutant;
            }
        }
        if !self.config.equiprobable && self.runs % self.config.weight_period == 0 {
            self.weights.update();
            self.weight_updates += 1;
        }
        self.after_run(g)
    }

    fn after_run(&mut self, g: usize) -> SwitchCheck {
        let check = should_switch(&self.groups[g], &self.config);
        let group = &mut self.groups[g];
        if check.rollback {
            log::debug!("group {}: discarding {} mutants", group.seed_id, group.chain.records.len());
            group.rollback();
            self.rollbacks += 1;
        }
        if let Some(reason) = check.switch {
            log::debug!("group {}: switching ({reason:?})", group.seed_id);
            group.consecutive_runs = 0;
            group.stagnant_runs = 0;
            group.unknown_count = 0;
            group.retired |= reason == SwitchReason::BugLimit;
            *self.switches.entry(format!("{reason:?}")).or_insert(0) += 1;
            if self.active == Some(g) {
                self.active = None;
            }
        }
        check
    }

    pub fn snapshot(&self) -> StatsSnapshot {
        StatsSnapshot {
            runs: self.runs,
            unique_traces: self.seen.len(),
            skipped_iterations: self.skipped,
            weight_updates: self.weight_updates,
            switches: self.switches.clone(),
            rollbacks: self.rollbacks,
            findings: self.findings.clone(),
            verdicts: self.verdicts.clone(),
            weights: self.weights.entries.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            groups: self
                .groups
                .iter()
                .map(|g| GroupSnapshot {
                    seed_id: g.seed_id.clone(),
                    truth: g.truth,
                    chain_len: g.chain.records.len(),
                    runs: g.runs,
                    consecutive_runs: g.consecutive_runs,
                    stagnant_runs: g.stagnant_runs,
                    unknown_count: g.unknown_count,
                    bug_count: g.bug_count,
                    retired: g.retired,
                })
                .collect(),
        }
    }
}

fn merge(into: &mut Transitions, from: &Transitions) {
    for (k, v) in from {
        *into.entry(*k).or_insert(0) += v;
    }
}
