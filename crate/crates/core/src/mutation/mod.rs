//! Satisfiability-preserving mutations of CHC systems.
//!
//! Every mutation is described by a [`MutationRecord`]. The first
//! application samples its decisions from `rng_seed` and stores them in
//! `choices`; applying a record with choices is fully deterministic.

mod params;
mod rewrite;
mod rules;
mod structural;

pub use params::{rewrite_params, solver_params, toggled_params, SolverParam, EMPTY_SIMPLIFY};
pub use rewrite::{ProcessRewriter, Rewriter};
pub use rules::{
    add_lin_rule, add_nonlin_rule, lin_rule_premise, nonlin_rule_premise, PREMISE_COUNT,
};
pub use structural::{add_ineq, mix_bound_vars};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::ChcSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MutationKind {
    SwapAnd,
    DupAnd,
    BreakAnd,
    SwapOr,
    MixBoundVars,
    AddIneq,
    AddLinRule,
    AddNonlinRule,
    Rewrite,
    ParamToggle,
}

impl MutationKind {
    pub const ALL: [MutationKind; 10] = [
        MutationKind::SwapAnd,
        MutationKind::DupAnd,
        MutationKind::BreakAnd,
        MutationKind::SwapOr,
        MutationKind::MixBoundVars,
        MutationKind::AddIneq,
        MutationKind::AddLinRule,
        MutationKind::AddNonlinRule,
        MutationKind::Rewrite,
        MutationKind::ParamToggle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::SwapAnd => "SWAP_AND",
            MutationKind::DupAnd => "DUP_AND",
            MutationKind::BreakAnd => "BREAK_AND",
            MutationKind::SwapOr => "SWAP_OR",
            MutationKind::MixBoundVars => "MIX_BOUND_VARS",
            MutationKind::AddIneq => "ADD_INEQ",
            MutationKind::AddLinRule => "ADD_LIN_RULE",
            MutationKind::AddNonlinRule => "ADD_NONLIN_RULE",
            MutationKind::Rewrite => "REWRITE",
            MutationKind::ParamToggle => "PARAM_TOGGLE",
        }
    }

    pub fn mutation_type(self) -> MutationType {
        match self {
            MutationKind::Rewrite => MutationType::Rewrites,
            MutationKind::ParamToggle => MutationType::Params,
            _ => MutationType::Own,
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MutationKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        MutationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown mutation kind `{s}`"))
    }
}

/// The three groups a mutation is drawn from with equal probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationType {
    Own,
    Rewrites,
    Params,
}

impl MutationType {
    pub const ALL: [MutationType; 3] = [MutationType::Own, MutationType::Rewrites, MutationType::Params];
}

impl fmt::Display for MutationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutationType::Own => "own",
            MutationType::Rewrites => "rewrites",
            MutationType::Params => "params",
        })
    }
}

impl FromStr for MutationType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "own" => Ok(MutationType::Own),
            "rewrites" | "simplifications" => Ok(MutationType::Rewrites),
            "params" | "parameters" => Ok(MutationType::Params),
            _ => Err(format!("unknown mutation type `{s}` (expected own, rewrites or params)")),
        }
    }
}

/// A unit of weighted selection: each own kind, each rewrite parameter
/// separately, and the parameter toggle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct MutationId {
    pub kind: MutationKind,
    /// Rewrite parameter; set iff `kind` is `REWRITE`.
    pub param: Option<String>,
}

impl MutationId {
    pub fn own(kind: MutationKind) -> Self {
        MutationId { kind, param: None }
    }

    pub fn rewrite(param: impl Into<String>) -> Self {
        MutationId { kind: MutationKind::Rewrite, param: Some(param.into()) }
    }

    /// Every identifier of the given type, in catalog order.
    pub fn all_of(ty: MutationType) -> Vec<MutationId> {
        match ty {
            MutationType::Own => MutationKind::ALL
                .into_iter()
                .filter(|k| k.mutation_type() == MutationType::Own)
                .map(MutationId::own)
                .collect(),
            MutationType::Rewrites => std::iter::once(EMPTY_SIMPLIFY.to_string())
                .chain(rewrite_params().iter().cloned())
                .map(MutationId::rewrite)
                .collect(),
            MutationType::Params => vec![MutationId::own(MutationKind::ParamToggle)],
        }
    }
}

impl fmt::Display for MutationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.param {
            Some(p) => write!(f, "{}:{p}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl From<MutationId> for String {
    fn from(id: MutationId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for MutationId {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        match s.split_once(':') {
            Some((k, p)) => Ok(MutationId { kind: k.parse()?, param: Some(p.to_string()) }),
            None => Ok(MutationId::own(s.parse()?)),
        }
    }
}

/// Decisions taken by one mutation application. Paths are child-index
/// sequences from the root of the clause body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "site", rename_all = "snake_case")]
pub enum Choices {
    SwapAnd { clause: usize, path: Vec<usize>, i: usize, j: usize },
    DupAnd { clause: usize, path: Vec<usize>, index: usize },
    BreakAnd { clause: usize, path: Vec<usize>, split: usize },
    SwapOr { clause: usize, path: Vec<usize>, i: usize, j: usize },
    MixBoundVars { clause: usize, permutation: Vec<usize> },
    AddIneq { clause: usize, path: Vec<usize> },
    AddLinRule { predicate: String, premise: usize },
    /// Argument indices address `v0..v(m-1)` followed by `x1..xn`.
    AddNonlinRule { predicate: String, n: usize, body_args: Vec<Vec<usize>>, head_args: Vec<usize> },
    Rewrite { param: String },
    ParamToggle { param: String, value: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub kind: MutationKind,
    /// Rewrite parameter for `REWRITE` records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    pub rng_seed: u64,
    #[serde(default)]
    pub choices: Option<Choices>,
}

impl MutationRecord {
    pub fn new(id: &MutationId, rng_seed: u64) -> Self {
        MutationRecord { kind: id.kind, param: id.param.clone(), rng_seed, choices: None }
    }

    pub fn id(&self) -> MutationId {
        MutationId { kind: self.kind, param: self.param.clone() }
    }
}

/// The records turning a seed into its current mutant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationChain {
    pub seed_id: String,
    pub records: Vec<MutationRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MutationError {
    #[error("{kind} is not applicable: {reason}")]
    NotApplicable { kind: MutationKind, reason: String },
    #[error("recorded choices of {kind} do not fit the system: {reason}")]
    InvalidChoices { kind: MutationKind, reason: String },
}

impl MutationError {
    pub fn not_applicable(kind: MutationKind, reason: impl Into<String>) -> Self {
        MutationError::NotApplicable { kind, reason: reason.into() }
    }

    pub fn invalid(kind: MutationKind, reason: impl Into<String>) -> Self {
        MutationError::InvalidChoices { kind, reason: reason.into() }
    }
}

/// Applies mutation records. Holds the rewriting service used by `REWRITE`.
#[derive(Clone, Default)]
pub struct Mutator {
    rewriter: Option<Arc<dyn Rewriter>>,
}

impl Mutator {
    /// A mutator without rewriting service; `REWRITE` is never applicable.
    pub fn new() -> Self {
        Mutator { rewriter: None }
    }

    pub fn with_rewriter(rewriter: Arc<dyn Rewriter>) -> Self {
        Mutator { rewriter: Some(rewriter) }
    }

    /// Applies `rec` to `system`, returning the mutant and the record with
    /// its choices filled in.
    pub fn apply(
        &self,
        system: &ChcSystem,
        rec: &MutationRecord,
    ) -> Result<(ChcSystem, MutationRecord), MutationError> {
        let choices = match &rec.choices {
            Some(c) => c.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(rec.rng_seed);
                self.sample(system, rec, &mut rng)?
            }
        };
        let mutant = self.apply_choices(system, rec.kind, &choices)?;
        let mut done = rec.clone();
        done.choices = Some(choices);
        Ok((mutant, done))
    }

    /// Replays `records` from `seed` in order.
    pub fn replay(
        &self,
        seed: &ChcSystem,
        records: &[MutationRecord],
    ) -> Result<ChcSystem, MutationError> {
        records
            .iter()
            .try_fold(seed.clone(), |s, r| self.apply(&s, r).map(|(m, _)| m))
    }

    fn sample(
        &self,
        system: &ChcSystem,
        rec: &MutationRecord,
        rng: &mut ChaCha8Rng,
    ) -> Result<Choices, MutationError> {
        use MutationKind::*;
        match rec.kind {
            SwapAnd | DupAnd | BreakAnd | SwapOr | MixBoundVars | AddIneq => {
                structural::sample(system, rec.kind, rng)
            }
            AddLinRule | AddNonlinRule => rules::sample(system, rec.kind, rng),
            Rewrite => {
                let param = rec
                    .param
                    .clone()
                    .ok_or_else(|| MutationError::invalid(Rewrite, "record names no rewrite parameter"))?;
                Ok(Choices::Rewrite { param })
            }
            ParamToggle => params::sample_toggle(system, rng),
        }
    }

    fn apply_choices(
        &self,
        system: &ChcSystem,
        kind: MutationKind,
        choices: &Choices,
    ) -> Result<ChcSystem, MutationError> {
        if choices_kind(choices) != kind {
            return Err(MutationError::invalid(kind, "choices belong to another kind"));
        }
        let mut out = match choices {
            Choices::Rewrite { param } => {
                let Some(rw) = &self.rewriter else {
                    return Err(MutationError::not_applicable(kind, "no rewriting service configured"));
                };
                rewrite::rewrite_system(system, param, rw.as_ref())?
            }
            Choices::ParamToggle { param, value } => params::toggle(system, param, *value)?,
            Choices::AddLinRule { .. } | Choices::AddNonlinRule { .. } => rules::apply(system, choices)?,
            other => structural::apply(system, other)?,
        };
        for c in &mut out.clauses {
            c.normalize_form();
        }
        Ok(out)
    }
}

fn choices_kind(c: &Choices) -> MutationKind {
    match c {
        Choices::SwapAnd { .. } => MutationKind::SwapAnd,
        Choices::DupAnd { .. } => MutationKind::DupAnd,
        Choices::BreakAnd { .. } => MutationKind::BreakAnd,
        Choices::SwapOr { .. } => MutationKind::SwapOr,
        Choices::MixBoundVars { .. } => MutationKind::MixBoundVars,
        Choices::AddIneq { .. } => MutationKind::AddIneq,
        Choices::AddLinRule { .. } => MutationKind::AddLinRule,
        Choices::AddNonlinRule { .. } => MutationKind::AddNonlinRule,
        Choices::Rewrite { .. } => MutationKind::Rewrite,
        Choices::ParamToggle { .. } => MutationKind::ParamToggle,
    }
}
