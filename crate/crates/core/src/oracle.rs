//! Bug decisions for mutant verdicts, model validation and clause
//! equivalence checks.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ast::{print_declarations, quote_symbol, substitute_model, ChcClause, ChcSystem, Model, Op, Quantifier, Sort, Term};
use crate::mutation::MutationChain;
use crate::solver::{run_script, RunnerError, SolverCommand, VerdictKind};

/// Satisfiability of a seed, established once by solving it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    Sat,
    Unsat,
}

impl GroundTruth {
    /// `None` for verdicts that cannot serve as ground truth.
    pub fn from_verdict(kind: VerdictKind) -> Option<Self> {
        match kind {
            VerdictKind::Sat => Some(GroundTruth::Sat),
            VerdictKind::Unsat => Some(GroundTruth::Unsat),
            _ => None,
        }
    }
}

impl fmt::Display for GroundTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroundTruth::Sat => "sat",
            GroundTruth::Unsat => "unsat",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    CheckModel,
    HandleBug,
    Pass,
    LogInfo,
    /// The solver ended without a verdict; reported separately from bugs.
    ReportCrash,
}

/// What to do with a mutant verdict given the seed's satisfiability.
/// Timeouts count as unknown.
pub fn judge(truth: GroundTruth, verdict: VerdictKind) -> Decision {
    use GroundTruth as T;
    use VerdictKind as V;
    match (truth, verdict) {
        (T::Sat, V::Sat) => Decision::CheckModel,
        (T::Sat, V::Unsat) | (T::Unsat, V::Sat) => Decision::HandleBug,
        (T::Unsat, V::Unsat) => Decision::Pass,
        (_, V::Unknown | V::Timeout) => Decision::LogInfo,
        (_, V::Crash) => Decision::ReportCrash,
    }
}

/// Answer of the auxiliary solver on a plain satisfiability query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleAnswer {
    /// Satisfiable, with the solver's model text when it printed one.
    Sat(String),
    Unsat,
    Unknown(String),
}

/// An SMT solver used to discharge checks; distinct in role from the solver
/// under test.
pub trait OracleSolver: Send + Sync {
    /// Runs a script ending in `(check-sat)(get-model)`.
    fn check(&self, script: &str, timeout: Duration) -> Result<OracleAnswer, RunnerError>;
}

#[derive(Clone, Debug)]
pub struct ProcessOracle {
    pub command: SolverCommand,
}

impl ProcessOracle {
    pub fn new(command: SolverCommand) -> Self {
        ProcessOracle { command }
    }
}

impl OracleSolver for ProcessOracle {
    fn check(&self, script: &str, timeout: Duration) -> Result<OracleAnswer, RunnerError> {
        let out = run_script(&self.command, &[], script, timeout, &[])?;
        let mut lines = out.stdout.lines();
        // The verdict is the first line; errors after it (no model on unsat)
        // are expected.
        Ok(match lines.next().map(str::trim) {
            Some("sat") => OracleAnswer::Sat(lines.collect::<Vec<_>>().join("\n")),
            Some("unsat") => OracleAnswer::Unsat,
            other => OracleAnswer::Unknown(format!(
                "{:?}: {}",
                out.termination,
                other.unwrap_or("no output")
            )),
        })
    }
}

fn query_script(system: &ChcSystem, consts: &[(String, Sort)], asserts: &[Term]) -> String {
    let mut s = print_declarations(system);
    for (n, sort) in consts {
        let _ = writeln!(s, "(declare-const {} {sort})", quote_symbol(n));
    }
    for a in asserts {
        let _ = writeln!(s, "(assert {a})");
    }
    s.push_str("(check-sat)\n(get-model)\n");
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelCheck {
    Valid,
    /// The first clause whose substituted formula is falsifiable.
    Invalid { clause: usize, witness: String },
    /// No clause was falsified but some checks were not conclusive.
    Inconclusive { clauses: Vec<usize> },
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("model does not fit the system: {0}")]
    Model(#[from] crate::ast::ModelError),
    #[error(transparent)]
    Runner(#[from] RunnerError),
}

/// Checks every clause of `system` under `model` by asking the oracle for a
/// counterexample to the substituted clause.
pub fn validate_model(
    system: &ChcSystem,
    model: &Model,
    oracle: &dyn OracleSolver,
    timeout: Duration,
) -> Result<ModelCheck, OracleError> {
    let formulas = substitute_model(system, model)?;
    let consts: Vec<(String, Sort)> = model.constants.iter().map(|(n, s)| (n.clone(), s.clone())).collect();
    let mut inconclusive = Vec::new();
    for (i, f) in formulas.into_iter().enumerate() {
        // Open the prefix so a counterexample names the clause's variables,
        // unless a bound name would collide with a declared symbol.
        let script = match f {
            Term::Quant(Quantifier::Forall, vars, body)
                if vars.iter().all(|(n, _)| !system.is_declared(n) && !model.constants.contains_key(n)) =>
            {
                let all: Vec<(String, Sort)> = consts.iter().cloned().chain(vars).collect();
                query_script(system, &all, &[Term::not(*body)])
            }
            f => query_script(system, &consts, &[Term::not(f)]),
        };
        match oracle.check(&script, timeout)? {
            OracleAnswer::Unsat => {}
            OracleAnswer::Sat(witness) => return Ok(ModelCheck::Invalid { clause: i, witness }),
            OracleAnswer::Unknown(why) => {
                log::info!("model check of clause {i} inconclusive: {why}");
                inconclusive.push(i);
            }
        }
    }
    Ok(if inconclusive.is_empty() { ModelCheck::Valid } else { ModelCheck::Inconclusive { clauses: inconclusive } })
}

/// Bound variables of both clauses, or `None` if a name is bound with two
/// different sorts.
fn merged_binders(f: &ChcClause, r: &ChcClause) -> Option<Vec<(String, Sort)>> {
    let mut all: BTreeMap<&str, &Sort> = BTreeMap::new();
    for (n, s) in f.bound.iter().chain(&r.bound) {
        if *all.entry(n).or_insert(s) != s {
            return None;
        }
    }
    Some(all.into_iter().map(|(n, s)| (n.to_string(), s.clone())).collect())
}

/// True iff the oracle proves `f` and `r` equivalent. When the clauses agree on the sorts
/// of shared variable names the quantifier-free matrices are compared over
/// all variables as constants: equal matrices imply equal closed clauses, so
/// the check is sound, and it avoids quantifier reasoning in the oracle.
/// Otherwise the closed formulas are compared directly.
pub fn clauses_equivalent(
    system: &ChcSystem,
    f: &ChcClause,
    r: &ChcClause,
    oracle: &dyn OracleSolver,
    timeout: Duration,
) -> Result<bool, RunnerError> {
    if f.bound == r.bound && f.body == r.body && f.head == r.head {
        return Ok(true);
    }
    let (consts, lhs, rhs) = match merged_binders(f, r) {
        Some(consts) => (consts, f.matrix(), r.matrix()),
        None => (Vec::new(), f.to_formula(), r.to_formula()),
    };
    let differ = Term::App(Op::Distinct, vec![lhs, rhs]);
    Ok(oracle.check(&query_script(system, &consts, &[differ]), timeout)? == OracleAnswer::Unsat)
}

/// True iff every aligned clause pair is provably equivalent. Oracle
/// unknowns count as inequivalent.
pub fn check_equivalence(
    original: &ChcSystem,
    reduced: &ChcSystem,
    oracle: &dyn OracleSolver,
    timeout: Duration,
) -> Result<bool, RunnerError> {
    if original.clauses.len() != reduced.clauses.len() {
        return Ok(false);
    }
    for (f, r) in original.clauses.iter().zip(&reduced.clauses) {
        if !clauses_equivalent(original, f, r, oracle, timeout)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the predicate-free part of `clause`'s body is unsatisfiable with
/// the bound variables read as constants. `None` when the oracle gives up.
pub fn constraint_is_unsat(
    system: &ChcSystem,
    clause: &ChcClause,
    oracle: &dyn OracleSolver,
    timeout: Duration,
) -> Result<Option<bool>, RunnerError> {
    let conjuncts: Vec<Term> = match &clause.body {
        Term::App(Op::And, args) => args.iter().filter(|t| !t.contains_pred()).cloned().collect(),
        b if b.contains_pred() => Vec::new(),
        b => vec![b.clone()],
    };
    Ok(match oracle.check(&query_script(system, &clause.bound, &conjuncts), timeout)? {
        OracleAnswer::Unsat => Some(true),
        OracleAnswer::Sat(_) => Some(false),
        OracleAnswer::Unknown(_) => None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FindingKind {
    SatisfiabilityBug,
    ModelBug,
    Crash,
    UnknownInfo,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::SatisfiabilityBug => "satisfiability-bug",
            FindingKind::ModelBug => "model-bug",
            FindingKind::Crash => "crash",
            FindingKind::UnknownInfo => "unknown-info",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Evidence {
    VerdictPair { truth: GroundTruth, verdict: VerdictKind },
    FailingClause { index: usize, witness: String },
    Termination { detail: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub seed_id: String,
    pub truth: GroundTruth,
    pub chain: MutationChain,
    pub mutant_verdict: VerdictKind,
    pub evidence: Evidence,
}
