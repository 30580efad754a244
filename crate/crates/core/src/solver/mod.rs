//! Running the solver under test and classifying what it says.

mod process;
mod trace;

pub use process::{run_script, ProcessOutput, RunnerError, SolverCommand, Termination};
pub use trace::{fnv1a, StateId, TraceProfile, TraceProfileSpec, TraceSource, TraceSummary};

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ast::{parse_model, print_script, ChcSystem, Model};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat(Model),
    Unsat,
    Unknown(String),
    Timeout,
    Crash(String),
}

/// Outcome without its payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    Crash,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Sat => "sat",
            VerdictKind::Unsat => "unsat",
            VerdictKind::Unknown => "unknown",
            VerdictKind::Timeout => "timeout",
            VerdictKind::Crash => "crash",
        })
    }
}

impl Outcome {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Outcome::Sat(_) => VerdictKind::Sat,
            Outcome::Unsat => VerdictKind::Unsat,
            Outcome::Unknown(_) => VerdictKind::Unknown,
            Outcome::Timeout => VerdictKind::Timeout,
            Outcome::Crash(_) => VerdictKind::Crash,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverVerdict {
    pub outcome: Outcome,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub verdict: SolverVerdict,
    pub trace: TraceSummary,
    pub stdout: String,
    pub stderr: String,
}

/// A CHC solver that can be asked about a system.
pub trait Solver: Send + Sync {
    fn solve(&self, system: &ChcSystem, timeout: Duration) -> Result<SolveResult, RunnerError>;
}

/// Classifies raw solver output. The verdict is the last line consisting
/// solely of `sat`, `unsat` or `unknown`; on `sat` the model follows it.
pub fn classify_output(
    stdout: &str,
    stderr: &str,
    termination: Termination,
    system: &ChcSystem,
) -> Outcome {
    if termination == Termination::TimedOut {
        return Outcome::Timeout;
    }
    let lines: Vec<&str> = stdout.lines().collect();
    let verdict = lines
        .iter()
        .enumerate()
        .rev()
        .find(|(_, l)| matches!(l.trim(), "sat" | "unsat" | "unknown"));
    let describe = || {
        let tail: Vec<&str> = stderr.lines().chain(stdout.lines()).rev().take(3).collect();
        let status = match termination {
            Termination::Exited(c) => format!("exit code {c}"),
            Termination::Signaled(s) => format!("signal {s}"),
            Termination::TimedOut => unreachable!(),
        };
        format!("{status}; {}", tail.into_iter().rev().collect::<Vec<_>>().join(" | "))
    };
    match verdict {
        None => Outcome::Crash(describe()),
        Some((i, l)) => match l.trim() {
            "unsat" => Outcome::Unsat,
            "unknown" => Outcome::Unknown(describe()),
            _ => {
                let rest = lines[i + 1..].join("\n");
                match parse_model(&rest, system) {
                    Ok(m) => Outcome::Sat(m),
                    Err(e) => Outcome::Crash(format!("sat without a usable model: {e}; {}", describe())),
                }
            }
        },
    }
}

/// Runs an external solver binary on the printed system.
#[derive(Clone, Debug)]
pub struct ProcessSolver {
    pub command: SolverCommand,
    pub profile: TraceProfile,
}

impl ProcessSolver {
    pub fn new(command: SolverCommand, profile: TraceProfile) -> Self {
        ProcessSolver { command, profile }
    }

    /// Uses `profile` if the solver supports its channel, otherwise the
    /// verbose-stderr profile. Support is probed once on a trivial system.
    pub fn with_probed_profile(command: SolverCommand, profile: TraceProfile) -> Result<Self, RunnerError> {
        let candidate = ProcessSolver::new(command.clone(), profile);
        let probe = crate::ast::parse_script(
            "(declare-fun P (Int) Bool)(assert (forall ((x Int)) (=> (> x 0) (P x))))",
        )
        .expect("probe script parses");
        let r = candidate.solve(&probe, Duration::from_secs(10))?;
        if r.verdict.outcome.kind() == VerdictKind::Sat && !r.trace.is_empty() {
            return Ok(candidate);
        }
        log::warn!(
            "trace profile `{}` is not supported by {}; falling back to z3-verbose",
            candidate.profile.name(),
            command.program.display()
        );
        Ok(ProcessSolver::new(command, TraceProfile::z3_verbose()))
    }
}

impl Solver for ProcessSolver {
    fn solve(&self, system: &ChcSystem, timeout: Duration) -> Result<SolveResult, RunnerError> {
        let script = print_script(system);
        let collect: Vec<String> = match &self.profile.spec.source {
            TraceSource::TraceFile(f) => vec![f.clone()],
            TraceSource::Stderr => vec![],
        };
        let out = run_script(&self.command, &self.profile.spec.solver_args, &script, timeout, &collect)?;
        let outcome = classify_output(&out.stdout, &out.stderr, out.termination, system);
        let raw_trace = match &self.profile.spec.source {
            TraceSource::Stderr => out.stderr.as_str(),
            TraceSource::TraceFile(_) => out.files[0].1.as_deref().unwrap_or(""),
        };
        let trace = self.profile.normalize_trace(raw_trace);
        Ok(SolveResult {
            verdict: SolverVerdict { outcome, wall_time: out.elapsed },
            trace,
            stdout: out.stdout,
            stderr: out.stderr,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_script;

    fn sys() -> ChcSystem {
        parse_script("(declare-fun P (Int) Bool)(assert (forall ((x Int)) (=> (> x 0) (P x))))").unwrap()
    }

    #[test]
    fn classification_is_total() {
        let s = sys();
        let ok = Termination::Exited(0);
        assert_eq!(classify_output("unsat\n(error \"no model\")", "", Termination::Exited(1), &s), Outcome::Unsat);
        assert_eq!(classify_output("", "", Termination::TimedOut, &s), Outcome::Timeout);
        assert!(matches!(classify_output("unknown\n", "", ok, &s), Outcome::Unknown(_)));
        assert!(matches!(classify_output("", "boom", Termination::Signaled(11), &s), Outcome::Crash(_)));
        assert!(matches!(classify_output("sat\n(garbage", "", ok, &s), Outcome::Crash(_)));
        let sat = classify_output("sat\n((define-fun P ((x!0 Int)) Bool (> x!0 0)))", "", ok, &s);
        assert_eq!(sat.kind(), VerdictKind::Sat);
    }
}
