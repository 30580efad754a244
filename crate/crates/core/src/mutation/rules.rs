//! Mutations that add a clause whose body is unsatisfiable, so the set of
//! models is unchanged.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Choices, MutationError, MutationKind};
use crate::ast::{ChcClause, ChcSystem, Op, Sort, Term};

/// Number of distinct premises available to the linear rule.
pub const PREMISE_COUNT: usize = 5;

/// Upper bound on the number of body predicates of the non-linear rule.
const MAX_NONLIN_DEPTH: usize = 10;

/// The `index`-th unsatisfiable premise over the integer variable `u`.
pub fn lin_rule_premise(index: usize, u: &Term) -> Option<Term> {
    let bin = |op: Op, a: Term, b: Term| Term::App(op, vec![a, b]);
    Some(match index {
        0 => Term::bool(false),
        1 => bin(Op::Distinct, u.clone(), u.clone()),
        2 => bin(Op::Lt, u.clone(), u.clone()),
        3 => bin(Op::Eq, Term::int(0), Term::int(1)),
        4 => Term::App(Op::And, vec![bin(Op::Lt, u.clone(), Term::int(0)), bin(Op::Gt, u.clone(), Term::int(0))]),
        _ => return None,
    })
}

/// `x1 > x2 > ... > xn > x1`, unsatisfiable for every `n >= 1`.
pub fn nonlin_rule_premise(xs: &[Term]) -> Vec<Term> {
    (0..xs.len())
        .map(|i| Term::App(Op::Gt, vec![xs[i].clone(), xs[(i + 1) % xs.len()].clone()]))
        .collect()
}

fn fresh_vars(system: &ChcSystem, bases: impl IntoIterator<Item = (String, Sort)>) -> Vec<(String, Sort)> {
    let mut taken: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for (base, sort) in bases {
        let name = system.fresh_name(&base, &taken);
        taken.push(name.clone());
        out.push((name, sort));
    }
    out
}

fn signature<'a>(system: &'a ChcSystem, predicate: &str) -> Result<&'a [Sort], String> {
    system
        .predicates
        .get(predicate)
        .map(Vec::as_slice)
        .ok_or_else(|| format!("undeclared predicate `{predicate}`"))
}

/// Adds `forall v, u. premise(u) -> predicate(v)`.
pub fn add_lin_rule(system: &ChcSystem, predicate: &str, premise: usize) -> Result<ChcSystem, String> {
    let sig = signature(system, predicate)?;
    let mut bound = fresh_vars(
        system,
        sig.iter().enumerate().map(|(i, s)| (format!("v{i}"), s.clone())).chain([("u".to_string(), Sort::Int)]),
    );
    let (un, us) = bound.last().cloned().expect("u is always bound");
    let body = lin_rule_premise(premise, &Term::Var(un, us)).ok_or_else(|| format!("no premise {premise}"))?;
    let head_args = bound[..sig.len()].iter().map(|(n, s)| Term::var(n, s.clone())).collect();
    if premise == 0 || premise == 3 {
        bound.pop();
    }
    let mut out = system.clone();
    out.clauses.push(ChcClause::implication(bound, body, Term::pred(predicate, head_args)));
    Ok(out)
}

/// Adds `forall v, x1..xn. (x1 > x2 > ... > x1) and predicate(args_1) and
/// ... and predicate(args_n) -> predicate(head)`. Argument indices address
/// `v` followed by `x1..xn`; head indices address `v` only. The `x`
/// variables are not in the head, so binding them universally is the same
/// as binding them existentially in the body.
pub fn add_nonlin_rule(
    system: &ChcSystem,
    predicate: &str,
    n: usize,
    body_args: &[Vec<usize>],
    head_args: &[usize],
) -> Result<ChcSystem, String> {
    let sig = signature(system, predicate)?;
    let m = sig.len();
    if n == 0 || body_args.len() != n {
        return Err(format!("expected {n} >= 1 body applications, got {}", body_args.len()));
    }
    let bound = fresh_vars(
        system,
        sig.iter()
            .enumerate()
            .map(|(i, s)| (format!("v{i}"), s.clone()))
            .chain((1..=n).map(|i| (format!("x{i}"), Sort::Int))),
    );
    let vars: Vec<Term> = bound.iter().map(|(n, s)| Term::var(n, s.clone())).collect();
    let app = |idx: &[usize], limit: usize| -> Result<Term, String> {
        if idx.len() != m {
            return Err(format!("`{predicate}` takes {m} arguments, got {}", idx.len()));
        }
        let args = idx
            .iter()
            .zip(sig)
            .map(|(&j, s)| match vars.get(j) {
                Some(v) if j < limit && &v.sort() == s => Ok(v.clone()),
                _ => Err(format!("argument index {j} does not fit sort {s}")),
            })
            .collect::<Result<_, _>>()?;
        Ok(Term::pred(predicate, args))
    };
    let mut body = nonlin_rule_premise(&vars[m..]);
    for idx in body_args {
        body.push(app(idx, m + n)?);
    }
    let head = app(head_args, m)?;
    let mut out = system.clone();
    out.clauses.push(ChcClause::implication(bound, Term::and(body), head));
    Ok(out)
}

fn candidates(sig: &[Sort], k: usize, with_x: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (0..sig.len()).filter(|&j| sig[j] == sig[k]).collect();
    if sig[k] == Sort::Int {
        c.extend(sig.len()..sig.len() + with_x);
    }
    c
}

pub(super) fn sample(system: &ChcSystem, kind: MutationKind, rng: &mut ChaCha8Rng) -> Result<Choices, MutationError> {
    if system.predicates.is_empty() {
        return Err(MutationError::not_applicable(kind, "no predicates declared"));
    }
    let (name, sig) = system.predicates.get_index(rng.gen_range(0..system.predicates.len())).unwrap();
    let predicate = name.clone();
    if kind == MutationKind::AddLinRule {
        return Ok(Choices::AddLinRule { predicate, premise: rng.gen_range(0..PREMISE_COUNT) });
    }
    let n = rng.gen_range(1..=MAX_NONLIN_DEPTH);
    let mut pick = |k: usize, with_x: usize| {
        let c = candidates(sig, k, with_x);
        c[rng.gen_range(0..c.len())]
    };
    let body_args = (0..n).map(|_| (0..sig.len()).map(|k| pick(k, n)).collect()).collect();
    let head_args = (0..sig.len()).map(|k| pick(k, 0)).collect();
    Ok(Choices::AddNonlinRule { predicate, n, body_args, head_args })
}

pub(super) fn apply(system: &ChcSystem, choices: &Choices) -> Result<ChcSystem, MutationError> {
    let kind = super::choices_kind(choices);
    match choices {
        Choices::AddLinRule { predicate, premise } => add_lin_rule(system, predicate, *premise),
        Choices::AddNonlinRule { predicate, n, body_args, head_args } => {
            add_nonlin_rule(system, predicate, *n, body_args, head_args)
        }
        _ => unreachable!("not a rule mutation"),
    }
    .map_err(|e| MutationError::invalid(kind, e))
}
