//! Mutations that rearrange a clause without changing its meaning.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Choices, MutationError, MutationKind};
use crate::ast::{ChcClause, ChcSystem, Op, Term};

fn arity_at_least(op: Op, min: usize) -> impl Fn(&Term) -> bool {
    move |t| matches!(t, Term::App(o, args) if *o == op && args.len() >= min)
}

/// All `(clause, body path)` pairs whose subterm satisfies `eligible`, in
/// clause order and pre-order.
fn body_sites(system: &ChcSystem, eligible: impl Fn(&Term) -> bool) -> Vec<(usize, Vec<usize>)> {
    system
        .clauses
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            c.body
                .walk()
                .into_iter()
                .filter(|(_, t)| eligible(t))
                .map(move |(p, _)| (ci, p))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn distinct_pair(rng: &mut ChaCha8Rng, m: usize) -> (usize, usize) {
    let i = rng.gen_range(0..m);
    let mut j = rng.gen_range(0..m - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

pub(super) fn sample(system: &ChcSystem, kind: MutationKind, rng: &mut ChaCha8Rng) -> Result<Choices, MutationError> {
    let pick = |sites: Vec<(usize, Vec<usize>)>, rng: &mut ChaCha8Rng, what: &str| {
        if sites.is_empty() {
            Err(MutationError::not_applicable(kind, format!("no {what} in any clause body")))
        } else {
            Ok(sites[rng.gen_range(0..sites.len())].clone())
        }
    };
    let width = |ci: usize, path: &[usize]| system.clauses[ci].body.at(path).unwrap().children().len();
    match kind {
        MutationKind::SwapAnd => {
            let (clause, path) = pick(body_sites(system, arity_at_least(Op::And, 2)), rng, "conjunction")?;
            let (i, j) = distinct_pair(rng, width(clause, &path));
            Ok(Choices::SwapAnd { clause, path, i, j })
        }
        MutationKind::DupAnd => {
            let (clause, path) = pick(body_sites(system, arity_at_least(Op::And, 2)), rng, "conjunction")?;
            let index = rng.gen_range(0..width(clause, &path));
            Ok(Choices::DupAnd { clause, path, index })
        }
        MutationKind::BreakAnd => {
            let sites = body_sites(system, arity_at_least(Op::And, 3));
            let (clause, path) = pick(sites, rng, "conjunction of three or more terms")?;
            let split = rng.gen_range(1..=width(clause, &path) - 2);
            Ok(Choices::BreakAnd { clause, path, split })
        }
        MutationKind::SwapOr => {
            let (clause, path) = pick(body_sites(system, arity_at_least(Op::Or, 2)), rng, "disjunction")?;
            let (i, j) = distinct_pair(rng, width(clause, &path));
            Ok(Choices::SwapOr { clause, path, i, j })
        }
        MutationKind::AddIneq => {
            let (clause, path) = pick(body_sites(system, |t| add_ineq(t).is_some()), rng, "literal bound")?;
            Ok(Choices::AddIneq { clause, path })
        }
        MutationKind::MixBoundVars => {
            let clauses: Vec<usize> = (0..system.clauses.len())
                .filter(|&i| system.clauses[i].bound.len() >= 2)
                .collect();
            if clauses.is_empty() {
                return Err(MutationError::not_applicable(kind, "no clause binds two or more variables"));
            }
            let clause = clauses[rng.gen_range(0..clauses.len())];
            let n = system.clauses[clause].bound.len();
            let identity: Vec<usize> = (0..n).collect();
            let mut permutation = identity.clone();
            while permutation == identity {
                permutation.shuffle(rng);
            }
            Ok(Choices::MixBoundVars { clause, permutation })
        }
        _ => unreachable!("not a structural mutation"),
    }
}

/// `site ∧ weakened(site)` for an inequality between a variable and a
/// numeric literal; the weakened copy moves the literal by one in the
/// direction implied by `site`.
pub fn add_ineq(site: &Term) -> Option<Term> {
    let Term::App(op, args) = site else { return None };
    if !op.is_inequality() || args.len() != 2 {
        return None;
    }
    let is_var = |t: &Term| matches!(t, Term::Var(_, s) if s.is_arith());
    let upper = matches!(op, Op::Lt | Op::Le);
    let weakened = match (&args[0], &args[1]) {
        (v, Term::Const(c)) if is_var(v) && c.is_numeric() => {
            vec![v.clone(), Term::Const(c.offset(if upper { 1 } else { -1 })?)]
        }
        (Term::Const(c), v) if is_var(v) && c.is_numeric() => {
            vec![Term::Const(c.offset(if upper { -1 } else { 1 })?), v.clone()]
        }
        _ => return None,
    };
    Some(Term::App(Op::And, vec![site.clone(), Term::App(op.clone(), weakened)]))
}

/// Reorders the quantifier prefix: position `k` receives the variable at
/// `permutation[k]`.
pub fn mix_bound_vars(clause: &ChcClause, permutation: &[usize]) -> Result<ChcClause, String> {
    let n = clause.bound.len();
    let mut seen = vec![false; n];
    if permutation.len() != n || permutation.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(format!("{permutation:?} is not a permutation of {n} indices"));
    }
    let mut out = clause.clone();
    out.bound = permutation.iter().map(|&p| clause.bound[p].clone()).collect();
    Ok(out)
}

pub(super) fn apply(system: &ChcSystem, choices: &Choices) -> Result<ChcSystem, MutationError> {
    let mut out = system.clone();
    let kind = super::choices_kind(choices);
    let invalid = |r: &str| MutationError::invalid(kind, r);
    let clause_index = match choices {
        Choices::SwapAnd { clause, .. }
        | Choices::DupAnd { clause, .. }
        | Choices::BreakAnd { clause, .. }
        | Choices::SwapOr { clause, .. }
        | Choices::MixBoundVars { clause, .. }
        | Choices::AddIneq { clause, .. } => *clause,
        _ => unreachable!("not a structural mutation"),
    };
    let clause = out.clauses.get_mut(clause_index).ok_or_else(|| invalid("clause index out of range"))?;
    if let Choices::MixBoundVars { permutation, .. } = choices {
        *clause = mix_bound_vars(clause, permutation).map_err(|e| invalid(&e))?;
        return Ok(out);
    }
    let path = match choices {
        Choices::SwapAnd { path, .. }
        | Choices::DupAnd { path, .. }
        | Choices::BreakAnd { path, .. }
        | Choices::SwapOr { path, .. }
        | Choices::AddIneq { path, .. } => path,
        _ => unreachable!(),
    };
    let site = clause.body.at_mut(path).ok_or_else(|| invalid("path does not address a subterm"))?;
    match choices {
        Choices::SwapAnd { i, j, .. } | Choices::SwapOr { i, j, .. } => {
            let op = if kind == MutationKind::SwapAnd { Op::And } else { Op::Or };
            match site {
                Term::App(o, args) if *o == op && *i < args.len() && *j < args.len() => args.swap(*i, *j),
                _ => return Err(invalid("site is not a matching junction")),
            }
        }
        Choices::DupAnd { index, .. } => match site {
            Term::App(Op::And, args) if *index < args.len() => {
                let copy = args[*index].clone();
                args.push(copy);
            }
            _ => return Err(invalid("site is not a conjunction")),
        },
        Choices::BreakAnd { split, .. } => match site {
            Term::App(Op::And, args) if *split >= 1 && *split + 2 <= args.len() => {
                let tail = args.split_off(*split);
                args.push(Term::App(Op::And, tail));
            }
            _ => return Err(invalid("site is not a conjunction wide enough to split")),
        },
        Choices::AddIneq { .. } => {
            *site = add_ineq(site).ok_or_else(|| invalid("site is not a literal bound"))?;
        }
        _ => unreachable!(),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse_script, parse_term, Sort, TermEnv};
    use rand::SeedableRng;

    fn env() -> TermEnv {
        TermEnv::default().with_locals(&[
            ("x".into(), Sort::Int),
            ("y".into(), Sort::Int),
            ("r".into(), Sort::Real),
            ("a".into(), Sort::Bool),
            ("b".into(), Sort::Bool),
            ("c".into(), Sort::Bool),
        ])
    }

    fn t(s: &str) -> Term {
        parse_term(s, &env()).unwrap()
    }

    fn one_clause(body: &str) -> ChcSystem {
        parse_script(&format!(
            "(declare-fun P (Int) Bool)(assert (forall ((x Int) (a Bool) (b Bool) (c Bool)) (=> {body} (P x))))"
        ))
        .unwrap()
    }

    fn body_after(body: &str, choices: Choices) -> Term {
        apply(&one_clause(body), &choices).unwrap().clauses[0].body.clone()
    }

    #[test]
    fn swap_dup_break() {
        let ab = "(and a b)";
        assert_eq!(body_after(ab, Choices::SwapAnd { clause: 0, path: vec![], i: 0, j: 1 }), t("(and b a)"));
        assert_eq!(body_after(ab, Choices::DupAnd { clause: 0, path: vec![], index: 0 }), t("(and a b a)"));
        assert_eq!(
            body_after("(and a b c)", Choices::BreakAnd { clause: 0, path: vec![], split: 1 }),
            t("(and a (and b c))")
        );
        assert_eq!(
            body_after("(or a b)", Choices::SwapOr { clause: 0, path: vec![], i: 0, j: 1 }),
            t("(or b a)")
        );
        let twice = apply(
            &apply(&one_clause(ab), &Choices::SwapAnd { clause: 0, path: vec![], i: 0, j: 1 }).unwrap(),
            &Choices::SwapAnd { clause: 0, path: vec![], i: 0, j: 1 },
        )
        .unwrap();
        assert_eq!(twice, one_clause(ab));
    }

    #[test]
    fn break_needs_three_conjuncts() {
        let r = apply(&one_clause("(and a b)"), &Choices::BreakAnd { clause: 0, path: vec![], split: 1 });
        assert!(matches!(r, Err(MutationError::InvalidChoices { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = sample(&one_clause("(and a b)"), MutationKind::BreakAnd, &mut rng);
        assert!(matches!(r, Err(MutationError::NotApplicable { .. })));
    }

    #[test]
    fn ineq_weakening_directions() {
        assert_eq!(add_ineq(&t("(< x 5)")), Some(t("(and (< x 5) (< x 6))")));
        assert_eq!(add_ineq(&t("(> x 5)")), Some(t("(and (> x 5) (> x 4))")));
        assert_eq!(add_ineq(&t("(<= x (- 1))")), Some(t("(and (<= x (- 1)) (<= x 0))")));
        assert_eq!(add_ineq(&t("(>= x 0)")), Some(t("(and (>= x 0) (>= x (- 1)))")));
        assert_eq!(add_ineq(&t("(<= 3 y)")), Some(t("(and (<= 3 y) (<= 2 y))")));
        assert_eq!(add_ineq(&t("(> 3 y)")), Some(t("(and (> 3 y) (> 4 y))")));
        assert_eq!(add_ineq(&t("(< r 2.5)")), Some(t("(and (< r 2.5) (< r 3.5))")));
        assert_eq!(add_ineq(&t("(< x y)")), None);
        assert_eq!(add_ineq(&t("(< (+ x 1) 5)")), None);
    }

    #[test]
    fn mixing_the_prefix() {
        let s = parse_script(
            "(declare-fun P (Int Int Int) Bool)(assert (forall ((x Int) (y Int) (z Int)) (P x y z)))",
        )
        .unwrap();
        let c = mix_bound_vars(&s.clauses[0], &[1, 2, 0]).unwrap();
        let names: Vec<&str> = c.bound.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["y", "z", "x"]);
        assert_eq!(c.body, s.clauses[0].body);
        assert_eq!(mix_bound_vars(&s.clauses[0], &[0, 1, 2]).unwrap(), s.clauses[0]);
        assert!(mix_bound_vars(&s.clauses[0], &[0, 0, 1]).is_err());

        let single = parse_script("(declare-fun P (Int) Bool)(assert (forall ((x Int)) (P x)))").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            sample(&single, MutationKind::MixBoundVars, &mut rng),
            Err(MutationError::NotApplicable { .. })
        ));
    }

    #[test]
    fn sampled_permutations_are_not_identity() {
        let s = parse_script(
            "(declare-fun P (Int Int) Bool)(assert (forall ((x Int) (y Int)) (P x y)))",
        )
        .unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let Choices::MixBoundVars { permutation, .. } = sample(&s, MutationKind::MixBoundVars, &mut rng).unwrap()
            else {
                panic!()
            };
            assert_eq!(permutation, vec![1, 0]);
        }
    }
}
