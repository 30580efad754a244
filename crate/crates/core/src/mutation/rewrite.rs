//! Equivalence-preserving rewrites of clause constraints by an external
//! simplifier.

use std::fmt::Write as _;
use std::time::Duration;

use super::{MutationError, MutationKind, EMPTY_SIMPLIFY};
use crate::ast::{parse_sexps, print_declarations, quote_symbol, term_from_sexp, Atom, ChcClause, ChcSystem, Op, SExpr, Term, TermEnv};
use crate::solver::{run_script, SolverCommand, Termination};

/// Runs a simplification script and returns its standard output.
pub trait Rewriter: Send + Sync {
    fn run(&self, script: &str) -> Result<String, String>;
}

/// A simplifier run as a child process on a script file.
#[derive(Clone, Debug)]
pub struct ProcessRewriter {
    pub command: SolverCommand,
    pub timeout: Duration,
}

impl Rewriter for ProcessRewriter {
    fn run(&self, script: &str) -> Result<String, String> {
        let out = run_script(&self.command, &[], script, self.timeout, &[]).map_err(|e| e.to_string())?;
        match out.termination {
            Termination::Exited(0) if !out.stdout.contains("(error") => Ok(out.stdout),
            t => Err(format!("simplifier failed ({t:?}): {}", out.stdout.trim())),
        }
    }
}

/// One goal per clause: the system's declarations, the clause variables as
/// constants and each predicate-free conjunct as its own assertion.
fn goal_script(system: &ChcSystem, clause: &ChcClause, conjuncts: &[&Term], param: &str) -> String {
    let mut s = print_declarations(system);
    for (name, sort) in &clause.bound {
        let _ = writeln!(s, "(declare-const {} {sort})", quote_symbol(name));
    }
    for c in conjuncts {
        let _ = writeln!(s, "(assert {c})");
    }
    if param == EMPTY_SIMPLIFY {
        s.push_str("(apply simplify)\n");
    } else {
        let _ = writeln!(s, "(apply (using-params simplify :{param} true))");
    }
    s
}

/// Formulas of the first goal in simplifier output.
fn goal_formulas(stdout: &str, env: &TermEnv) -> Result<Vec<Term>, String> {
    let sexps = parse_sexps(stdout).map_err(|e| e.to_string())?;
    let goal = sexps
        .iter()
        .find(|e| e.head() == Some("goals"))
        .and_then(|g| g.list()?.iter().find(|e| e.head() == Some("goal")))
        .ok_or("no goal in simplifier output")?;
    let items = &goal.list().unwrap()[1..];
    let mut out = Vec::new();
    let mut it = items.iter();
    while let Some(e) = it.next() {
        if let SExpr::Atom(Atom::Keyword(_), _) = e {
            it.next();
            continue;
        }
        out.push(term_from_sexp(e, env).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn rewrite_clause(
    system: &ChcSystem,
    clause: &ChcClause,
    param: &str,
    rewriter: &dyn Rewriter,
) -> Result<Option<Term>, String> {
    let parts: Vec<&Term> = match &clause.body {
        Term::App(Op::And, args) => args.iter().collect(),
        b if b.contains_pred() => return Ok(None),
        b => vec![b],
    };
    let (preds, plain): (Vec<&Term>, Vec<&Term>) = parts.into_iter().partition(|t| t.contains_pred());
    if plain.is_empty() || plain.iter().all(|t| t.is_true()) {
        return Ok(None);
    }
    let stdout = rewriter.run(&goal_script(system, clause, &plain, param))?;
    let env = TermEnv::from_system(system).with_locals(&clause.bound);
    let mut body = goal_formulas(&stdout, &env)?;
    if body.iter().eq(plain.iter().copied()) {
        return Ok(None);
    }
    body.extend(preds.into_iter().cloned());
    Ok(Some(Term::and(body)))
}

pub(super) fn rewrite_system(system: &ChcSystem, param: &str, rewriter: &dyn Rewriter) -> Result<ChcSystem, MutationError> {
    let na = |r: String| MutationError::not_applicable(MutationKind::Rewrite, r);
    if param != EMPTY_SIMPLIFY && !super::rewrite_params().iter().any(|p| p == param) {
        return Err(MutationError::invalid(MutationKind::Rewrite, format!("`{param}` is not a rewrite parameter")));
    }
    let mut out = system.clone();
    let mut changed = false;
    for (i, clause) in system.clauses.iter().enumerate() {
        if let Some(body) = rewrite_clause(system, clause, param, rewriter).map_err(|e| na(format!("clause {i}: {e}")))? {
            out.clauses[i].body = body;
            changed = true;
        }
    }
    if !changed {
        return Err(na("the simplifier left every clause unchanged".into()));
    }
    out.validate().map_err(|e| na(format!("rewritten system is ill-formed: {e}")))?;
    Ok(out)
}
