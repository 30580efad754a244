//! Solver models: `define-fun` blocks interpreting the predicates.

use std::collections::HashSet;
use std::fmt::Write;

use indexmap::IndexMap;

use super::ops::Op;
use super::parse::{parse_sort, TermEnv, TermParser};
use super::print::quote_symbol;
use super::sexp::{parse_sexps, Atom, SExpr};
use super::term::{Sort, Term};
use super::{ChcSystem, FunDecl};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelDefinition {
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    pub body: Term,
}

/// Definitions in the order the solver printed them. Besides the system's
/// predicates this may hold auxiliary functions the definitions refer to.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub definitions: IndexMap<String, ModelDefinition>,
    /// Universe elements of uninterpreted sorts (`declare-fun` in the model).
    pub constants: IndexMap<String, Sort>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("malformed model: {0}")]
    Syntax(String),
    #[error("model does not define predicate `{0}`")]
    MissingPredicate(String),
    #[error("model defines `{name}` with {got} parameters, expected {expected}")]
    Arity { name: String, expected: usize, got: usize },
}

impl Model {
    /// Renders the model in the solver's `( (define-fun ...) ... )` format.
    pub fn to_smtlib(&self) -> String {
        let mut out = String::from("(\n");
        for (name, sort) in &self.constants {
            let _ = writeln!(out, "  (declare-fun {} () {sort})", quote_symbol(name));
        }
        for (name, d) in &self.definitions {
            let params: Vec<String> = d
                .params
                .iter()
                .map(|(n, s)| format!("({} {s})", quote_symbol(n)))
                .collect();
            let _ = writeln!(
                out,
                "  (define-fun {} ({}) {} {})",
                quote_symbol(name),
                params.join(" "),
                d.ret,
                d.body
            );
        }
        out.push(')');
        out
    }
}

/// Locates the model block in solver output and parses every definition.
pub fn parse_model(text: &str, system: &ChcSystem) -> Result<Model, ModelError> {
    let sexps = parse_sexps(text).map_err(|e| ModelError::Syntax(format!("{}: {}", e.pos, e.msg)))?;
    let block = sexps
        .iter()
        .find_map(|e| match e.list() {
            Some(items) if items.first().and_then(SExpr::symbol) == Some("model") => {
                Some(&items[1..])
            }
            Some(items) if items.iter().all(|i| i.list().is_some()) => Some(items),
            _ => None,
        })
        .ok_or_else(|| ModelError::Syntax("no model block in solver output".into()))?;

    let mut env = TermEnv::from_system(system);
    let mut model = Model::default();
    let mut pending = Vec::new();
    let syntax = |e: super::ParseError| ModelError::Syntax(e.to_string());
    for item in block {
        let items = item.list().unwrap();
        match items.first().and_then(SExpr::symbol) {
            Some("define-fun") => {
                let [_, SExpr::Atom(Atom::Symbol(name), _), SExpr::List(params, _), ret, body] = items
                else {
                    return Err(ModelError::Syntax(format!("malformed definition `{item}`")));
                };
                let params = params
                    .iter()
                    .map(|p| match p.list() {
                        Some([SExpr::Atom(Atom::Symbol(n), _), s]) => {
                            Ok((n.clone(), parse_sort(s, &env.sorts).map_err(syntax)?))
                        }
                        _ => Err(ModelError::Syntax(format!("malformed parameter `{p}`"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let ret = parse_sort(ret, &env.sorts).map_err(syntax)?;
                if !system.predicates.contains_key(name) {
                    let decl = FunDecl { args: params.iter().map(|p| p.1.clone()).collect(), ret: ret.clone() };
                    env.functions.insert(name.clone(), decl);
                }
                pending.push((name.clone(), params, ret, body));
            }
            Some("declare-fun") => match items {
                [_, SExpr::Atom(Atom::Symbol(name), _), SExpr::List(args, _), sort] if args.is_empty() => {
                    let sort = parse_sort(sort, &env.sorts).map_err(syntax)?;
                    env.functions.insert(name.clone(), FunDecl { args: vec![], ret: sort.clone() });
                    model.constants.insert(name.clone(), sort);
                }
                _ => return Err(ModelError::Syntax(format!("unsupported model entry `{item}`"))),
            },
            // Cardinality constraints on uninterpreted sorts carry no
            // information the checks need.
            Some("forall") => {}
            _ => return Err(ModelError::Syntax(format!("unsupported model entry `{item}`"))),
        }
    }
    for (name, params, ret, body) in pending {
        let local = env.clone().with_locals(&params);
        let body = TermParser::new(&local).term(body).map_err(syntax)?;
        model.definitions.insert(name, ModelDefinition { params, ret, body });
    }
    Ok(model)
}

struct Inliner<'m> {
    model: &'m Model,
    /// Names in scope of the clause; freshened binders avoid them.
    taken: HashSet<String>,
    counter: usize,
}

impl Inliner<'_> {
    fn fresh(&mut self, base: &str) -> String {
        loop {
            let n = format!("{base}!m{}", self.counter);
            self.counter += 1;
            if self.taken.insert(n.clone()) {
                return n;
            }
        }
    }

    /// Renames every binder inside `t` to a fresh name.
    fn freshen(&mut self, t: &Term) -> Term {
        match t {
            Term::Quant(q, vars, body) => {
                let renamed: Vec<(String, Sort)> =
                    vars.iter().map(|(n, s)| (self.fresh(n), s.clone())).collect();
                let map: Vec<(String, Term)> = vars
                    .iter()
                    .zip(&renamed)
                    .map(|((old, _), (new, s))| (old.clone(), Term::Var(new.clone(), s.clone())))
                    .collect();
                let body = self.freshen(&body.substitute(&map));
                Term::Quant(*q, renamed, Box::new(body))
            }
            Term::App(op, args) => Term::App(op.clone(), args.iter().map(|a| self.freshen(a)).collect()),
            Term::PredApp(p, args) => {
                Term::PredApp(p.clone(), args.iter().map(|a| self.freshen(a)).collect())
            }
            other => other.clone(),
        }
    }

    fn instantiate(&mut self, name: &str, args: Vec<Term>, depth: usize) -> Result<Term, ModelError> {
        let def = self
            .model
            .definitions
            .get(name)
            .ok_or_else(|| ModelError::MissingPredicate(name.to_string()))?;
        if def.params.len() != args.len() {
            return Err(ModelError::Arity {
                name: name.to_string(),
                expected: args.len(),
                got: def.params.len(),
            });
        }
        let map: Vec<(String, Term)> =
            def.params.iter().map(|(n, _)| n.clone()).zip(args).collect();
        let body = self.freshen(&def.body).substitute(&map);
        self.inline(&body, depth + 1)
    }

    fn inline(&mut self, t: &Term, depth: usize) -> Result<Term, ModelError> {
        if depth > 64 {
            return Err(ModelError::Syntax("recursive model definitions".into()));
        }
        Ok(match t {
            Term::PredApp(p, args) => {
                let args = args.iter().map(|a| self.inline(a, depth)).collect::<Result<_, _>>()?;
                self.instantiate(p, args, depth)?
            }
            Term::App(Op::Fun(f, _), args) if self.model.definitions.contains_key(f) => {
                let args = args.iter().map(|a| self.inline(a, depth)).collect::<Result<_, _>>()?;
                self.instantiate(f, args, depth)?
            }
            Term::Var(n, _) if self.model.definitions.get(n).is_some_and(|d| d.params.is_empty()) => {
                self.instantiate(n, vec![], depth)?
            }
            Term::App(op, args) => Term::App(
                op.clone(),
                args.iter().map(|a| self.inline(a, depth)).collect::<Result<_, _>>()?,
            ),
            Term::Quant(q, vars, body) => Term::Quant(*q, vars.clone(), Box::new(self.inline(body, depth)?)),
            other => other.clone(),
        })
    }
}

fn clause_names(t: &Term, out: &mut HashSet<String>) {
    match t {
        Term::Var(n, _) => {
            out.insert(n.clone());
        }
        Term::Quant(_, vars, body) => {
            out.extend(vars.iter().map(|(n, _)| n.clone()));
            clause_names(body, out);
        }
        _ => t.children().iter().for_each(|c| clause_names(c, out)),
    }
}

/// Per clause, the closed formula `forall bound. body' => head'` where every
/// predicate application is replaced by the model's definition.
pub fn substitute_model(system: &ChcSystem, model: &Model) -> Result<Vec<Term>, ModelError> {
    for (p, sig) in &system.predicates {
        let def = model
            .definitions
            .get(p)
            .ok_or_else(|| ModelError::MissingPredicate(p.clone()))?;
        if def.params.len() != sig.len() {
            return Err(ModelError::Arity { name: p.clone(), expected: sig.len(), got: def.params.len() });
        }
    }
    system
        .clauses
        .iter()
        .map(|c| {
            let mut taken: HashSet<String> = c.bound.iter().map(|(n, _)| n.clone()).collect();
            clause_names(&c.body, &mut taken);
            clause_names(&c.head, &mut taken);
            let mut inl = Inliner { model, taken, counter: 0 };
            let body = inl.inline(&c.body, 0)?;
            let head = inl.inline(&c.head, 0)?;
            Ok(Term::forall(c.bound.clone(), Term::app(Op::Implies, vec![body, head])))
        })
        .collect()
}
