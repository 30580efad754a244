//! CHC systems in the SMT-LIB2 HORN fragment.
//!
//! A [`ChcSystem`] is the parsed form of a HORN script: declarations, solver
//! options and a list of clauses `forall V. body -> head`. Clauses keep the
//! surface form they were written in so that printing reproduces the
//! original shape (implication, disjunction, negation or a bare head).

mod classify;
mod model;
mod ops;
mod parse;
mod print;
mod sexp;
mod term;

pub use classify::{classify, is_linear_system, ClauseClass, ClauseRole};
pub use model::{parse_model, substitute_model, Model, ModelDefinition, ModelError};
pub use ops::{BvIndexed, BvOp, Op};
pub use parse::{parse_script, parse_term, term_from_sexp, ParseError, TermEnv};
pub use print::{print_clause, print_declarations, print_script, quote_symbol};
pub use sexp::{parse_sexps, Atom, Pos, SExpr};
pub use term::{Literal, Quantifier, Sort, Term};

use indexmap::IndexMap;

/// A declared background function or free constant (`declare-fun` with a
/// non-`Bool` result, or `declare-const`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunDecl {
    pub args: Vec<Sort>,
    pub ret: Sort,
}

/// How a clause was written in the source script.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SurfaceForm {
    /// `(=> body head)`
    Implication,
    /// A bare head, e.g. `(P 0)`; the body is `true`.
    Fact,
    /// `(not body)`; the head is `false`.
    Negation,
    /// `(or (not b1) ... (not bk) head)`.
    ///
    /// `split` records whether the body's top-level conjunction was written
    /// as one disjunct per conjunct. `head_at` is the position of the head
    /// among the disjuncts, `None` when the clause is a query with no
    /// explicit `false` disjunct.
    Disjunction { head_at: Option<usize>, split: bool },
}

/// One constrained Horn clause `forall bound. body -> head`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChcClause {
    pub bound: Vec<(String, Sort)>,
    pub body: Term,
    pub head: Term,
    pub form: SurfaceForm,
}

impl ChcClause {
    pub fn implication(bound: Vec<(String, Sort)>, body: Term, head: Term) -> Self {
        ChcClause {
            bound,
            body,
            head,
            form: SurfaceForm::Implication,
        }
    }

    pub fn is_query(&self) -> bool {
        self.head.is_false()
    }

    /// Predicate applications occurring in the body (through `and` and
    /// `exists` nodes), in left-to-right order.
    pub fn body_predicates(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        collect_body_preds(&self.body, &mut out);
        out
    }

    /// The quantifier-free matrix `body => head`.
    pub fn matrix(&self) -> Term {
        Term::app(Op::Implies, vec![self.body.clone(), self.head.clone()])
    }

    /// The closed formula `forall bound. body => head`.
    pub fn to_formula(&self) -> Term {
        Term::forall(self.bound.clone(), self.matrix())
    }

    /// The surface form actually printable for the current body and head.
    /// Mutations may leave a stale form (a fact whose body is no longer
    /// `true`); printing and re-parsing always agrees with this.
    pub fn effective_form(&self) -> SurfaceForm {
        match &self.form {
            SurfaceForm::Fact if !self.body.is_true() => SurfaceForm::Implication,
            SurfaceForm::Negation if !self.head.is_false() => SurfaceForm::Implication,
            SurfaceForm::Disjunction { head_at, split } => {
                let split = *split && matches!(&self.body, Term::App(Op::And, cs) if cs.len() != 1);
                let width = match &self.body {
                    Term::App(Op::And, cs) if split => cs.len(),
                    _ => 1,
                };
                let head_at = match head_at {
                    Some(k) => Some((*k).min(width)),
                    None if self.head.is_false() => None,
                    None => Some(width),
                };
                SurfaceForm::Disjunction { head_at, split }
            }
            other => other.clone(),
        }
    }

    /// Replaces `form` by [`Self::effective_form`].
    pub fn normalize_form(&mut self) {
        self.form = self.effective_form();
    }

    /// Number of nodes in body and head.
    pub fn node_count(&self) -> usize {
        self.body.node_count() + self.head.node_count() + self.bound.len()
    }

    /// Checks the CHC shape: the head is a predicate application or `false`,
    /// and predicate applications in the body only occur under `and` and
    /// `exists`.
    pub fn check_shape(&self) -> Result<(), String> {
        match &self.head {
            Term::PredApp(_, args) => {
                if args.iter().any(Term::contains_pred) {
                    return Err("predicate application inside head arguments".into());
                }
            }
            t if t.is_false() => {}
            other => return Err(format!("head is neither a predicate nor false: {other}")),
        }
        check_body_shape(&self.body)
    }
}

fn collect_body_preds<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
    match t {
        Term::PredApp(..) => out.push(t),
        Term::App(Op::And, args) => args.iter().for_each(|a| collect_body_preds(a, out)),
        Term::Quant(Quantifier::Exists, _, body) => collect_body_preds(body, out),
        _ => {}
    }
}

fn check_body_shape(t: &Term) -> Result<(), String> {
    match t {
        Term::PredApp(_, args) => {
            if args.iter().any(Term::contains_pred) {
                Err("nested predicate application".into())
            } else {
                Ok(())
            }
        }
        Term::App(Op::And, args) => args.iter().try_for_each(check_body_shape),
        Term::Quant(Quantifier::Exists, _, body) => check_body_shape(body),
        other if other.contains_pred() => Err(format!(
            "predicate application in a non-conjunctive body position: {other}"
        )),
        _ => Ok(()),
    }
}

/// A parsed HORN script.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChcSystem {
    pub logic: String,
    /// Uninterpreted sorts (`declare-sort S 0`).
    pub sorts: Vec<String>,
    pub functions: IndexMap<String, FunDecl>,
    /// Uninterpreted predicates and their argument sorts.
    pub predicates: IndexMap<String, Vec<Sort>>,
    pub clauses: Vec<ChcClause>,
    /// `(set-option :name value)` pairs, names without the leading colon.
    pub options: Vec<(String, String)>,
}

impl Default for ChcSystem {
    fn default() -> Self {
        ChcSystem {
            logic: "HORN".into(),
            sorts: Vec::new(),
            functions: IndexMap::new(),
            predicates: IndexMap::new(),
            clauses: Vec::new(),
            options: Vec::new(),
        }
    }
}

impl ChcSystem {
    pub fn node_count(&self) -> usize {
        self.clauses.iter().map(ChcClause::node_count).sum()
    }

    /// True if `name` is already used by a declaration.
    pub fn is_declared(&self, name: &str) -> bool {
        self.functions.contains_key(name)
            || self.predicates.contains_key(name)
            || self.sorts.iter().any(|s| s == name)
    }

    /// Validates every clause: CHC shape, declared predicates with matching
    /// arity and argument sorts, well-sorted terms.
    pub fn validate(&self) -> Result<(), String> {
        for (i, clause) in self.clauses.iter().enumerate() {
            clause
                .check_shape()
                .map_err(|e| format!("clause {i}: {e}"))?;
            let mut scope: Vec<(String, Sort)> = clause.bound.clone();
            for t in [&clause.body, &clause.head] {
                self.validate_term(t, &mut scope)
                    .map_err(|e| format!("clause {i}: {e}"))?;
            }
            let mut names: Vec<&str> = clause.bound.iter().map(|(n, _)| n.as_str()).collect();
            names.sort_unstable();
            if names.windows(2).any(|w| w[0] == w[1]) {
                return Err(format!("clause {i}: duplicate bound variable"));
            }
        }
        Ok(())
    }

    fn validate_term(&self, t: &Term, scope: &mut Vec<(String, Sort)>) -> Result<Sort, String> {
        match t {
            Term::Var(name, sort) => {
                let bound = scope.iter().rev().find(|(n, _)| n == name).map(|(_, s)| s);
                let known = bound.or_else(|| {
                    self.functions
                        .get(name)
                        .filter(|d| d.args.is_empty())
                        .map(|d| &d.ret)
                });
                match known {
                    Some(s) if s == sort => Ok(sort.clone()),
                    Some(s) => Err(format!("variable {name} used as {sort}, bound as {s}")),
                    None => Err(format!("unbound variable {name}")),
                }
            }
            Term::Const(lit) => Ok(lit.sort()),
            Term::PredApp(p, args) => {
                let sig = self
                    .predicates
                    .get(p)
                    .ok_or_else(|| format!("undeclared predicate {p}"))?;
                if sig.len() != args.len() {
                    return Err(format!(
                        "predicate {p} expects {} arguments, got {}",
                        sig.len(),
                        args.len()
                    ));
                }
                for (a, s) in args.iter().zip(sig) {
                    let got = self.validate_term(a, scope)?;
                    if &got != s {
                        return Err(format!("predicate {p}: argument sort {got}, expected {s}"));
                    }
                }
                Ok(Sort::Bool)
            }
            Term::App(op, args) => {
                let sorts = args
                    .iter()
                    .map(|a| self.validate_term(a, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                if let Op::Fun(name, _) = op {
                    let decl = self
                        .functions
                        .get(name)
                        .ok_or_else(|| format!("undeclared function {name}"))?;
                    if decl.args != sorts {
                        return Err(format!("function {name} applied to wrong sorts"));
                    }
                }
                op.result_sort(&sorts)
            }
            Term::Quant(_, vars, body) => {
                let depth = scope.len();
                scope.extend(vars.iter().cloned());
                let s = self.validate_term(body, scope);
                scope.truncate(depth);
                match s? {
                    Sort::Bool => Ok(Sort::Bool),
                    other => Err(format!("quantifier body of sort {other}")),
                }
            }
        }
    }

    /// Returns a name based on `base` that is neither declared nor in `taken`.
    pub fn fresh_name(&self, base: &str, taken: &[String]) -> String {
        let clash = |n: &str| self.is_declared(n) || taken.iter().any(|t| t == n);
        if !clash(base) {
            return base.to_string();
        }
        (0..)
            .map(|k| format!("{base}!{k}"))
            .find(|n| !clash(n))
            .expect("unbounded name supply")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_rejects_negated_predicate() {
        let p = Term::PredApp("P".into(), vec![Term::int(0)]);
        let clause = ChcClause::implication(
            vec![],
            Term::app(Op::Not, vec![p.clone()]),
            Term::bool(false),
        );
        assert!(clause.check_shape().is_err());
        let ok = ChcClause::implication(vec![], p, Term::bool(false));
        assert!(ok.check_shape().is_ok());
    }

    #[test]
    fn fresh_name_avoids_declarations() {
        let mut sys = ChcSystem::default();
        sys.predicates.insert("v".into(), vec![Sort::Int]);
        assert_eq!(sys.fresh_name("v", &[]), "v!0");
        assert_eq!(sys.fresh_name("v", &["v!0".into()]), "v!1");
        assert_eq!(sys.fresh_name("w", &[]), "w");
    }
}
