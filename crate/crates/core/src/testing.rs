//! In-process stand-ins for the solver and oracle, for exercising the
//! fuzzing loop without an external binary.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use indexmap::IndexMap;

use crate::ast::{ChcSystem, Model, ModelDefinition, Sort, Term};
use crate::oracle::{OracleAnswer, OracleSolver};
use crate::solver::{Outcome, RunnerError, SolveResult, Solver, SolverVerdict, StateId, TraceSummary, VerdictKind};

/// What a scripted solver says about one system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scripted {
    pub verdict: VerdictKind,
    pub states: Vec<StateId>,
}

type Script = dyn Fn(&ChcSystem, u64) -> Scripted + Send + Sync;

/// A solver whose answers come from a closure over the system and the
/// zero-based call index. `sat` answers carry the model mapping every
/// predicate to `true`.
pub struct ScriptedSolver {
    script: Box<Script>,
    calls: AtomicU64,
}

impl ScriptedSolver {
    pub fn new(script: impl Fn(&ChcSystem, u64) -> Scripted + Send + Sync + 'static) -> Self {
        ScriptedSolver { script: Box::new(script), calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

/// The model interpreting every predicate of `system` as `true`.
pub fn trivial_model(system: &ChcSystem) -> Model {
    let definitions: IndexMap<String, ModelDefinition> = system
        .predicates
        .iter()
        .map(|(name, sorts)| {
            let params = sorts.iter().enumerate().map(|(i, s)| (format!("a{i}"), s.clone())).collect();
            (name.clone(), ModelDefinition { params, ret: Sort::Bool, body: Term::bool(true) })
        })
        .collect();
    Model { definitions, constants: IndexMap::new() }
}

impl Solver for ScriptedSolver {
    fn solve(&self, system: &ChcSystem, _timeout: Duration) -> Result<SolveResult, RunnerError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        let s = (self.script)(system, n);
        let outcome = match s.verdict {
            VerdictKind::Sat => Outcome::Sat(trivial_model(system)),
            VerdictKind::Unsat => Outcome::Unsat,
            VerdictKind::Unknown => Outcome::Unknown("scripted".into()),
            VerdictKind::Timeout => Outcome::Timeout,
            VerdictKind::Crash => Outcome::Crash("scripted".into()),
        };
        Ok(SolveResult {
            verdict: SolverVerdict { outcome, wall_time: Duration::ZERO },
            trace: TraceSummary::from_states(s.states),
            stdout: s.verdict.to_string(),
            stderr: String::new(),
        })
    }
}

/// An oracle giving the same answer to every query: `Unsat` accepts every
/// model and every equivalence.
pub struct ConstantOracle(pub OracleAnswer);

impl OracleSolver for ConstantOracle {
    fn check(&self, _script: &str, _timeout: Duration) -> Result<OracleAnswer, RunnerError> {
        Ok(self.0.clone())
    }
}
