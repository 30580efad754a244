//! Shrinking bug-triggering inputs: the mutation chain by delta debugging,
//! then the system by hierarchical deletion of clauses and subterms.

use crate::ast::{ChcClause, ChcSystem, Op, Term};
use crate::mutation::MutationRecord;

/// Cap on bug-predicate evaluations for one reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub limit: usize,
    pub used: usize,
}

impl Budget {
    pub fn new(limit: usize) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    /// Evaluates `test` if budget remains; an exhausted budget answers
    /// `false`, which keeps the current candidate.
    fn spend(&mut self, test: impl FnOnce() -> bool) -> bool {
        if self.exhausted() {
            return false;
        }
        self.used += 1;
        test()
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(2000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReduceError {
    #[error("the finding does not reproduce on the unreduced input")]
    Stale,
}

/// Removes chunks of `items` while `test` keeps holding. Chunks start at
/// half the length and halve after every pass; passes at size one repeat
/// until nothing more can go, so the result is 1-minimal unless the budget
/// runs out. `test` is assumed to hold on `items`.
pub fn ddmin<T: Clone>(items: &[T], test: &mut dyn FnMut(&[T]) -> bool, budget: &mut Budget) -> Vec<T> {
    let mut cur = items.to_vec();
    let mut size = cur.len().div_ceil(2);
    while size > 0 && !budget.exhausted() {
        let mut removed = false;
        let mut start = 0;
        while start < cur.len() {
            let end = (start + size).min(cur.len());
            let candidate: Vec<T> = cur[..start].iter().chain(&cur[end..]).cloned().collect();
            if budget.spend(|| test(&candidate)) {
                cur = candidate;
                removed = true;
            } else {
                start = end;
            }
        }
        if size == 1 {
            if !removed {
                break;
            }
        } else {
            size = size.div_ceil(2).min(cur.len().max(1));
            if size == 0 {
                break;
            }
        }
    }
    cur
}

/// Minimal subsequence of `chain` on which `bug` still holds.
pub fn reduce_chain(
    chain: &[MutationRecord],
    bug: &mut dyn FnMut(&[MutationRecord]) -> bool,
    budget: &mut Budget,
) -> Result<Vec<MutationRecord>, ReduceError> {
    if !budget.spend(|| bug(chain)) {
        return Err(ReduceError::Stale);
    }
    Ok(ddmin(chain, bug, budget))
}

/// Candidate deletions inside one clause, shallowest first.
fn deletions(clause: &ChcClause) -> Vec<ChcClause> {
    let mut sites = clause.body.walk();
    sites.sort_by_key(|(p, _)| p.len());
    let mut out = Vec::new();
    let with_body_at = |path: &[usize], t: Term| {
        let mut c = clause.clone();
        *c.body.at_mut(path).expect("path from walk") = t;
        c
    };
    for (path, t) in sites {
        match t {
            Term::App(op @ (Op::And | Op::Or), args) => {
                for k in 0..args.len() {
                    let mut rest = args.clone();
                    rest.remove(k);
                    let t = match (op, rest.len()) {
                        (Op::And, 0) => Term::bool(true),
                        (Op::Or, 0) => Term::bool(false),
                        (_, 1) => rest.pop().unwrap(),
                        _ => Term::App(op.clone(), rest),
                    };
                    out.push(with_body_at(&path, t));
                }
            }
            Term::App(Op::Ite, args) if args.len() == 3 => {
                out.push(with_body_at(&path, args[1].clone()));
                out.push(with_body_at(&path, args[2].clone()));
            }
            _ => {}
        }
    }
    for (k, (name, _)) in clause.bound.iter().enumerate() {
        if !clause.body.has_free_var(name) && !clause.head.has_free_var(name) {
            let mut c = clause.clone();
            c.bound.remove(k);
            out.push(c);
        }
    }
    out
}

/// Shrinks `system` while `bug` keeps holding. Whole clauses go first;
/// subterm deletions inside the remaining clauses are then kept only when
/// `equivalent(system, original, reduced)` accepts the edited clause
/// against its version from before this phase.
pub fn reduce_system(
    system: &ChcSystem,
    bug: &mut dyn FnMut(&ChcSystem) -> bool,
    equivalent: &mut dyn FnMut(&ChcSystem, &ChcClause, &ChcClause) -> bool,
    budget: &mut Budget,
) -> Result<ChcSystem, ReduceError> {
    if !budget.spend(|| bug(system)) {
        return Err(ReduceError::Stale);
    }
    let with_clauses = |clauses: &[ChcClause]| ChcSystem { clauses: clauses.to_vec(), ..system.clone() };
    let kept = ddmin(&system.clauses, &mut |cs| bug(&with_clauses(cs)), budget);
    let mut cur = with_clauses(&kept);
    let originals = kept;

    for i in 0..cur.clauses.len() {
        'fixpoint: loop {
            for mut candidate in deletions(&cur.clauses[i]) {
                if budget.exhausted() {
                    return Ok(cur);
                }
                candidate.normalize_form();
                let mut next = cur.clone();
                next.clauses[i] = candidate;
                if next.validate().is_err() || !equivalent(&cur, &originals[i], &next.clauses[i]) {
                    continue;
                }
                if budget.spend(|| bug(&next)) {
                    cur = next;
                    continue 'fixpoint;
                }
            }
            break;
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_script;
    use proptest::prelude::*;

    #[test]
    fn chain_of_eight_needs_two_records() {
        let items: Vec<u32> = (0..8).collect();
        let mut calls = 0;
        let out = ddmin(
            &items,
            &mut |s| {
                calls += 1;
                s.contains(&2) && s.contains(&5)
            },
            &mut Budget::default(),
        );
        assert_eq!(out, [2, 5]);
        assert!(calls < 40);
    }

    #[test]
    fn degenerate_predicates() {
        assert_eq!(ddmin(&[1], &mut |s| !s.is_empty(), &mut Budget::default()), [1]);
        assert!(ddmin(&[1, 2, 3], &mut |_| true, &mut Budget::default()).is_empty());
        let none: [u8; 0] = [];
        assert!(ddmin(&none, &mut |_| true, &mut Budget::default()).is_empty());
    }

    #[test]
    fn stale_findings_are_reported() {
        let r = reduce_chain(&[], &mut |_| false, &mut Budget::default());
        assert_eq!(r, Err(ReduceError::Stale));
    }

    #[test]
    fn budget_caps_evaluations() {
        let items: Vec<u32> = (0..64).collect();
        let mut b = Budget::new(5);
        let out = ddmin(&items, &mut |s| s.contains(&63), &mut b);
        assert_eq!(b.used, 5);
        assert!(out.contains(&63));
    }

    fn sys(text: &str) -> ChcSystem {
        parse_script(text).unwrap()
    }

    #[test]
    fn phase_two_drops_redundant_terms_only() {
        let s = sys(
            "(declare-fun P (Int) Bool)\
             (assert (forall ((x Int) (y Int)) (=> (and (> x 0) true (P x)) (P x))))",
        );
        // Syntactic stand-in for the oracle: only dropping `true` is
        // equivalence-preserving here.
        let mut equivalent = |_: &ChcSystem, f: &ChcClause, r: &ChcClause| {
            let strip = |t: &Term| match t {
                Term::App(Op::And, a) => Term::and(a.iter().filter(|x| !x.is_true()).cloned().collect()),
                t => t.clone(),
            };
            strip(&f.body) == strip(&r.body) && f.head == r.head
        };
        let out = reduce_system(&s, &mut |s| !s.clauses.is_empty(), &mut equivalent, &mut Budget::default()).unwrap();
        let c = &out.clauses[0];
        assert_eq!(c.body, Term::and(vec![
            Term::app(Op::Gt, vec![Term::var("x", crate::ast::Sort::Int), Term::int(0)]),
            Term::pred("P", vec![Term::var("x", crate::ast::Sort::Int)]),
        ]));
        // unused y is dropped, used x stays
        assert_eq!(c.bound.len(), 1);
    }

    proptest! {
        #[test]
        fn ddmin_is_one_minimal(len in 0usize..12, needed in proptest::collection::btree_set(0usize..12, 0..4)) {
            let items: Vec<usize> = (0..len).collect();
            let needed: Vec<usize> = needed.into_iter().filter(|n| *n < len).collect();
            let mut test = |s: &[usize]| needed.iter().all(|n| s.contains(n));
            let out = ddmin(&items, &mut test, &mut Budget::default());
            prop_assert_eq!(&out, &needed);
            for k in 0..out.len() {
                let mut fewer = out.clone();
                fewer.remove(k);
                prop_assert!(!test(&fewer));
            }
        }
    }
}
