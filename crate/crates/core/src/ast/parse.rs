//! SMT-LIB2 front end: commands, sorts, terms and clause normalization.

use std::collections::HashSet;

use indexmap::IndexMap;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Num;

use super::ops::{BvIndexed, Op};
use super::sexp::{parse_sexps, Atom, LexError, Pos, SExpr};
use super::term::{Literal, Quantifier, Sort, Term};
use super::{ChcClause, ChcSystem, FunDecl, SurfaceForm};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("sort error at {pos}: {msg}")]
    Sort { pos: Pos, msg: String },
    #[error("unsupported input at {pos}: {msg}")]
    Unsupported { pos: Pos, msg: String },
    #[error("assertion {index} is not a Horn clause: {msg}")]
    NonHorn { index: usize, msg: String },
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError::Syntax { pos: e.pos, msg: e.msg }
    }
}

fn syntax<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax { pos, msg: msg.into() })
}

fn sort_err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Sort { pos, msg: msg.into() })
}

fn unsupported<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Unsupported { pos, msg: msg.into() })
}

/// Symbols visible while parsing a term outside of a full script.
#[derive(Clone, Debug, Default)]
pub struct TermEnv {
    pub sorts: Vec<String>,
    pub functions: IndexMap<String, FunDecl>,
    pub predicates: IndexMap<String, Vec<Sort>>,
    /// Free constants, e.g. clause variables declared in an oracle query.
    pub locals: Vec<(String, Sort)>,
}

impl TermEnv {
    pub fn from_system(system: &ChcSystem) -> Self {
        TermEnv {
            sorts: system.sorts.clone(),
            functions: system.functions.clone(),
            predicates: system.predicates.clone(),
            locals: Vec::new(),
        }
    }

    pub fn with_locals(mut self, locals: &[(String, Sort)]) -> Self {
        self.locals.extend(locals.iter().cloned());
        self
    }

    fn is_global(&self, name: &str) -> bool {
        self.functions.contains_key(name)
            || self.predicates.contains_key(name)
            || self.locals.iter().any(|(n, _)| n == name)
    }
}

/// Parses a single term in `env`.
pub fn parse_term(text: &str, env: &TermEnv) -> Result<Term, ParseError> {
    let sexps = parse_sexps(text)?;
    match sexps.as_slice() {
        [one] => TermParser::new(env).term(one),
        _ => syntax(Pos::default(), "expected exactly one term"),
    }
}

/// Parses an already-read s-expression as a term in `env`.
pub fn term_from_sexp(e: &SExpr, env: &TermEnv) -> Result<Term, ParseError> {
    TermParser::new(env).term(e)
}

pub(crate) fn parse_sort(e: &SExpr, sorts: &[String]) -> Result<Sort, ParseError> {
    match e {
        SExpr::Atom(Atom::Symbol(s), pos) => match s.as_str() {
            "Bool" => Ok(Sort::Bool),
            "Int" => Ok(Sort::Int),
            "Real" => Ok(Sort::Real),
            other if sorts.iter().any(|d| d == other) => Ok(Sort::Uninterpreted(other.into())),
            other => unsupported(*pos, format!("unknown or unsupported sort `{other}`")),
        },
        SExpr::List(items, pos) => match items.as_slice() {
            [SExpr::Atom(Atom::Symbol(u), _), SExpr::Atom(Atom::Symbol(bv), _), SExpr::Atom(Atom::Numeral(w), _)]
                if u == "_" && bv == "BitVec" =>
            {
                match w.parse::<u32>() {
                    Ok(w) if w >= 1 => Ok(Sort::BitVec(w)),
                    _ => sort_err(*pos, "bit-vector width must be a positive integer"),
                }
            }
            [SExpr::Atom(Atom::Symbol(a), _), i, el] if a == "Array" => {
                Ok(Sort::array(parse_sort(i, sorts)?, parse_sort(el, sorts)?))
            }
            _ => unsupported(*pos, format!("unsupported sort `{e}`")),
        },
        other => syntax(other.pos(), "expected a sort"),
    }
}

enum Scope {
    Bound { name: String, renamed: String, sort: Sort },
    Let { name: String, value: Term },
}

pub(crate) struct TermParser<'e> {
    env: &'e TermEnv,
    scopes: Vec<Scope>,
    used: HashSet<String>,
}

impl<'e> TermParser<'e> {
    pub(crate) fn new(env: &'e TermEnv) -> Self {
        TermParser { env, scopes: Vec::new(), used: HashSet::new() }
    }

    /// Binds `name`, renaming it when it clashes with a global symbol, an
    /// enclosing binder or an earlier binder of the same term.
    fn bind(&mut self, name: &str, sort: Sort) -> String {
        let clash = |n: &str, me: &Self| {
            me.env.is_global(n)
                || me.used.contains(n)
                || me.scopes.iter().any(|s| match s {
                    Scope::Bound { renamed, .. } => renamed == n,
                    Scope::Let { name, .. } => name == n,
                })
        };
        let renamed = if clash(name, self) {
            (0..)
                .map(|k| format!("{name}!{k}"))
                .find(|n| !clash(n, self))
                .unwrap()
        } else {
            name.to_string()
        };
        self.used.insert(renamed.clone());
        self.scopes.push(Scope::Bound { name: name.into(), renamed: renamed.clone(), sort });
        renamed
    }

    fn lookup(&self, name: &str) -> Option<Term> {
        for s in self.scopes.iter().rev() {
            match s {
                Scope::Bound { name: n, renamed, sort } if n == name => {
                    return Some(Term::Var(renamed.clone(), sort.clone()))
                }
                Scope::Let { name: n, value } if n == name => return Some(value.clone()),
                _ => {}
            }
        }
        if let Some((_, s)) = self.env.locals.iter().rev().find(|(n, _)| n == name) {
            return Some(Term::Var(name.into(), s.clone()));
        }
        if let Some(d) = self.env.functions.get(name) {
            if d.args.is_empty() {
                return Some(Term::Var(name.into(), d.ret.clone()));
            }
        }
        if let Some(sig) = self.env.predicates.get(name) {
            if sig.is_empty() {
                return Some(Term::PredApp(name.into(), vec![]));
            }
        }
        None
    }

    fn binders(&self, e: &SExpr) -> Result<Vec<(String, Sort)>, ParseError> {
        let items = e.list().ok_or(ParseError::Syntax {
            pos: e.pos(),
            msg: "expected a binder list".into(),
        })?;
        if items.is_empty() {
            return syntax(e.pos(), "empty binder list");
        }
        items
            .iter()
            .map(|b| match b.list() {
                Some([SExpr::Atom(Atom::Symbol(n), _), s]) => {
                    Ok((n.clone(), parse_sort(s, &self.env.sorts)?))
                }
                _ => syntax(b.pos(), "malformed binder"),
            })
            .collect()
    }

    pub(crate) fn term(&mut self, e: &SExpr) -> Result<Term, ParseError> {
        match e {
            SExpr::Atom(a, pos) => self.atom(a, *pos),
            SExpr::List(items, pos) => {
                let Some(head) = items.first() else {
                    return syntax(*pos, "empty application");
                };
                match head {
                    SExpr::Atom(Atom::Symbol(s), _) => self.symbol_app(s, &items[1..], *pos),
                    SExpr::List(h, hpos) => self.indexed_app(h, *hpos, &items[1..], *pos),
                    _ => syntax(*pos, "malformed application"),
                }
            }
        }
    }

    fn atom(&mut self, a: &Atom, pos: Pos) -> Result<Term, ParseError> {
        Ok(match a {
            Atom::Numeral(n) => Term::Const(Literal::Int(n.parse::<BigInt>().unwrap())),
            Atom::Decimal(d) => Term::Const(Literal::Real(parse_decimal(d))),
            Atom::Hex(h) => Term::Const(Literal::BitVec {
                value: BigUint::from_str_radix(h, 16).unwrap(),
                width: 4 * h.len() as u32,
            }),
            Atom::Binary(b) => Term::Const(Literal::BitVec {
                value: BigUint::from_str_radix(b, 2).unwrap(),
                width: b.len() as u32,
            }),
            Atom::Symbol(s) if s == "true" => Term::bool(true),
            Atom::Symbol(s) if s == "false" => Term::bool(false),
            Atom::Symbol(s) => match self.lookup(s) {
                Some(t) => t,
                None => return unsupported(pos, format!("unknown symbol `{s}`")),
            },
            Atom::Keyword(k) => return syntax(pos, format!("unexpected keyword `:{k}`")),
            Atom::Str(_) => return unsupported(pos, "string literals are not supported"),
        })
    }

    fn args(&mut self, args: &[SExpr]) -> Result<Vec<Term>, ParseError> {
        args.iter().map(|a| self.term(a)).collect()
    }

    fn checked(&self, op: Op, args: Vec<Term>, pos: Pos) -> Result<Term, ParseError> {
        let sorts: Vec<Sort> = args.iter().map(Term::sort).collect();
        match op.result_sort(&sorts) {
            Ok(_) => Ok(Term::App(op, args)),
            Err(msg) => sort_err(pos, msg),
        }
    }

    fn symbol_app(&mut self, s: &str, rest: &[SExpr], pos: Pos) -> Result<Term, ParseError> {
        match s {
            "forall" | "exists" => {
                let [vars, body] = rest else {
                    return syntax(pos, format!("`{s}` expects binders and a body"));
                };
                let vars = self.binders(vars)?;
                let depth = self.scopes.len();
                let renamed: Vec<(String, Sort)> = vars
                    .into_iter()
                    .map(|(n, srt)| (self.bind(&n, srt.clone()), srt))
                    .collect();
                let body = self.term(body);
                self.scopes.truncate(depth);
                let body = body?;
                if body.sort() != Sort::Bool {
                    return sort_err(pos, "quantifier body must be Bool");
                }
                let q = if s == "forall" { Quantifier::Forall } else { Quantifier::Exists };
                Ok(Term::Quant(q, renamed, Box::new(body)))
            }
            "let" => {
                let [binds, body] = rest else {
                    return syntax(pos, "`let` expects bindings and a body");
                };
                let binds = binds.list().ok_or(ParseError::Syntax {
                    pos,
                    msg: "malformed let bindings".into(),
                })?;
                let mut values = Vec::new();
                for b in binds {
                    match b.list() {
                        Some([SExpr::Atom(Atom::Symbol(n), _), v]) => {
                            values.push((n.clone(), self.term(v)?))
                        }
                        _ => return syntax(b.pos(), "malformed let binding"),
                    }
                }
                let depth = self.scopes.len();
                for (name, value) in values {
                    self.scopes.push(Scope::Let { name, value });
                }
                let body = self.term(body);
                self.scopes.truncate(depth);
                body
            }
            "!" => match rest.first() {
                Some(t) => self.term(t),
                None => syntax(pos, "empty annotation"),
            },
            "_" => self.bv_literal(rest, pos),
            _ => {
                if let Some(op) = Op::builtin(s) {
                    let args = self.args(rest)?;
                    if op == Op::Sub {
                        if let [Term::Const(l)] = args.as_slice() {
                            if l.is_numeric() && !l.is_negative() && !is_zero(l) {
                                return Ok(Term::Const(negate(l)));
                            }
                        }
                    }
                    if args.is_empty() && !matches!(op, Op::And | Op::Or) {
                        return syntax(pos, format!("`{s}` applied to no arguments"));
                    }
                    return self.checked(op, args, pos);
                }
                if let Some(sig) = self.env.predicates.get(s).cloned() {
                    let args = self.args(rest)?;
                    check_signature(s, &sig, &args, pos)?;
                    return Ok(Term::PredApp(s.to_string(), args));
                }
                if let Some(decl) = self.env.functions.get(s).cloned() {
                    let args = self.args(rest)?;
                    check_signature(s, &decl.args, &args, pos)?;
                    return Ok(Term::App(Op::Fun(s.to_string(), decl.ret), args));
                }
                unsupported(pos, format!("unknown or unsupported function `{s}`"))
            }
        }
    }

    fn bv_literal(&self, rest: &[SExpr], pos: Pos) -> Result<Term, ParseError> {
        match rest {
            [SExpr::Atom(Atom::Symbol(v), _), SExpr::Atom(Atom::Numeral(w), _)]
                if v.starts_with("bv") && v[2..].chars().all(|c| c.is_ascii_digit()) =>
            {
                let width: u32 = w.parse().map_err(|_| ParseError::Sort {
                    pos,
                    msg: "bad bit-vector width".into(),
                })?;
                let value: BigUint = v[2..].parse().map_err(|_| ParseError::Syntax {
                    pos,
                    msg: "bad bit-vector literal".into(),
                })?;
                if width == 0 {
                    return sort_err(pos, "bit-vector width must be positive");
                }
                let value = value % (BigUint::from(1u8) << width as usize);
                Ok(Term::Const(Literal::BitVec { value, width }))
            }
            _ => unsupported(pos, "unsupported indexed identifier"),
        }
    }

    fn indexed_app(
        &mut self,
        head: &[SExpr],
        hpos: Pos,
        rest: &[SExpr],
        pos: Pos,
    ) -> Result<Term, ParseError> {
        match head {
            [SExpr::Atom(Atom::Symbol(u), _), SExpr::Atom(Atom::Symbol(name), _), idx @ ..]
                if u == "_" =>
            {
                let idx: Vec<u32> = idx
                    .iter()
                    .map(|i| match i {
                        SExpr::Atom(Atom::Numeral(n), _) => n.parse().ok(),
                        _ => None,
                    })
                    .collect::<Option<_>>()
                    .ok_or(ParseError::Syntax { pos: hpos, msg: "bad index".into() })?;
                let Some(op) = BvIndexed::from_parts(name, &idx) else {
                    return unsupported(hpos, format!("unsupported indexed operator `{name}`"));
                };
                let args = self.args(rest)?;
                self.checked(Op::BvIndexed(op), args, pos)
            }
            [SExpr::Atom(Atom::Symbol(a), _), SExpr::Atom(Atom::Symbol(c), _), sort]
                if a == "as" && c == "const" =>
            {
                let sort = parse_sort(sort, &self.env.sorts)?;
                let args = self.args(rest)?;
                self.checked(Op::ConstArray(sort), args, pos)
            }
            _ => unsupported(hpos, "unsupported application head"),
        }
    }
}

fn is_zero(l: &Literal) -> bool {
    Term::Const(l.clone()).is_zero_literal()
}

fn negate(l: &Literal) -> Literal {
    match l {
        Literal::Int(v) => Literal::Int(-v),
        Literal::Real(v) => Literal::Real(-v),
        other => other.clone(),
    }
}

fn parse_decimal(d: &str) -> BigRational {
    let (int, frac) = d.split_once('.').unwrap_or((d, ""));
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    let scale = BigInt::from(10).pow(frac.len() as u32);
    BigRational::new(digits, scale)
}

fn check_signature(name: &str, sig: &[Sort], args: &[Term], pos: Pos) -> Result<(), ParseError> {
    if sig.len() != args.len() {
        return sort_err(
            pos,
            format!("`{name}` expects {} arguments, got {}", sig.len(), args.len()),
        );
    }
    for (i, (s, a)) in sig.iter().zip(args).enumerate() {
        let got = a.sort();
        if &got != s {
            return sort_err(pos, format!("`{name}` argument {i} has sort {got}, expected {s}"));
        }
    }
    Ok(())
}

/// Parses a HORN script into a [`ChcSystem`].
///
/// `check-sat`, `get-model`, `set-info`, `exit` and similar commands are
/// dropped; the printer regenerates the solving protocol.
pub fn parse_script(text: &str) -> Result<ChcSystem, ParseError> {
    let commands = parse_sexps(text)?;
    let mut sys = ChcSystem::default();
    let mut env = TermEnv::default();
    let mut assertion = 0usize;
    for cmd in &commands {
        let pos = cmd.pos();
        let Some(items) = cmd.list() else {
            return syntax(pos, "expected a command");
        };
        let Some(name) = cmd.head() else {
            return syntax(pos, "expected a command name");
        };
        let args = &items[1..];
        match name {
            "set-logic" => match args {
                [SExpr::Atom(Atom::Symbol(l), _)] => sys.logic = l.clone(),
                _ => return syntax(pos, "malformed set-logic"),
            },
            "set-option" => match args {
                [SExpr::Atom(Atom::Keyword(k), _), v] => sys.options.push((k.clone(), v.to_string())),
                _ => return syntax(pos, "malformed set-option"),
            },
            "declare-sort" => match args {
                [SExpr::Atom(Atom::Symbol(s), _)] => declare_sort(&mut sys, &mut env, s, pos)?,
                [SExpr::Atom(Atom::Symbol(s), _), SExpr::Atom(Atom::Numeral(n), _)] => {
                    if n != "0" {
                        return unsupported(pos, "parametric sorts are not supported");
                    }
                    declare_sort(&mut sys, &mut env, s, pos)?
                }
                _ => return syntax(pos, "malformed declare-sort"),
            },
            "declare-fun" | "declare-const" => {
                let (fname, arg_sorts, ret) = match (name, args) {
                    ("declare-fun", [SExpr::Atom(Atom::Symbol(f), _), SExpr::List(a, _), r]) => {
                        let a = a
                            .iter()
                            .map(|s| parse_sort(s, &sys.sorts))
                            .collect::<Result<Vec<_>, _>>()?;
                        (f.clone(), a, parse_sort(r, &sys.sorts)?)
                    }
                    ("declare-const", [SExpr::Atom(Atom::Symbol(f), _), r]) => {
                        (f.clone(), vec![], parse_sort(r, &sys.sorts)?)
                    }
                    _ => return syntax(pos, format!("malformed {name}")),
                };
                if sys.is_declared(&fname) {
                    return syntax(pos, format!("`{fname}` declared twice"));
                }
                if ret == Sort::Bool {
                    sys.predicates.insert(fname.clone(), arg_sorts.clone());
                    env.predicates.insert(fname, arg_sorts);
                } else {
                    let decl = FunDecl { args: arg_sorts, ret };
                    sys.functions.insert(fname.clone(), decl.clone());
                    env.functions.insert(fname, decl);
                }
            }
            "assert" => {
                let [body] = args else {
                    return syntax(pos, "assert expects one term");
                };
                let term = TermParser::new(&env).term(body)?;
                if term.sort() != Sort::Bool {
                    return sort_err(pos, "asserted term is not Bool");
                }
                sys.clauses.push(clause_from_assertion(term, assertion)?);
                assertion += 1;
            }
            "define-fun" | "define-fun-rec" | "define-funs-rec" | "define-sort"
            | "declare-datatype" | "declare-datatypes" | "push" | "pop" | "declare-rel"
            | "declare-var" | "rule" | "query" | "check-sat-assuming" | "reset" => {
                return unsupported(pos, format!("command `{name}` is not supported"));
            }
            other => log::debug!("dropping command `{other}` at {pos}"),
        }
    }
    Ok(sys)
}

fn declare_sort(sys: &mut ChcSystem, env: &mut TermEnv, s: &str, pos: Pos) -> Result<(), ParseError> {
    if sys.is_declared(s) || matches!(s, "Bool" | "Int" | "Real" | "Array" | "BitVec") {
        return syntax(pos, format!("sort `{s}` declared twice"));
    }
    sys.sorts.push(s.to_string());
    env.sorts.push(s.to_string());
    Ok(())
}

fn is_head_candidate(t: &Term) -> bool {
    matches!(t, Term::PredApp(..)) || t.is_false()
}

/// Normalizes one asserted formula into implication form, remembering its
/// surface form.
pub(crate) fn clause_from_assertion(term: Term, index: usize) -> Result<ChcClause, ParseError> {
    let non_horn = |msg: String| ParseError::NonHorn { index, msg };
    let mut bound = Vec::new();
    let mut t = term;
    while let Term::Quant(Quantifier::Forall, vars, body) = t {
        bound.extend(vars);
        t = *body;
    }
    let (body, head, form) = match t {
        Term::App(Op::Implies, mut args) => {
            if args.len() != 2 {
                return Err(non_horn("implication must have exactly two operands".into()));
            }
            let head = args.pop().unwrap();
            (args.pop().unwrap(), head, SurfaceForm::Implication)
        }
        Term::App(Op::Or, disjuncts) => {
            let mut head = None;
            let mut head_at = None;
            let mut conjuncts = Vec::new();
            for (k, d) in disjuncts.into_iter().enumerate() {
                if is_head_candidate(&d) {
                    if head.is_some() {
                        return Err(non_horn("more than one positive head disjunct".into()));
                    }
                    head = Some(d);
                    head_at = Some(k);
                } else if let Term::App(Op::Not, mut inner) = d {
                    conjuncts.push(inner.pop().unwrap());
                } else {
                    conjuncts.push(Term::not(d));
                }
            }
            let split = conjuncts.len() != 1;
            let body = if split { Term::App(Op::And, conjuncts) } else { conjuncts.pop().unwrap() };
            (
                body,
                head.unwrap_or_else(|| Term::bool(false)),
                SurfaceForm::Disjunction { head_at, split },
            )
        }
        Term::App(Op::Not, mut inner) => (inner.pop().unwrap(), Term::bool(false), SurfaceForm::Negation),
        t if is_head_candidate(&t) => (Term::bool(true), t, SurfaceForm::Fact),
        other => return Err(non_horn(format!("unrecognized clause shape `{other}`"))),
    };
    let clause = ChcClause { bound, body, head, form };
    clause.check_shape().map_err(non_horn)?;
    Ok(clause)
}
