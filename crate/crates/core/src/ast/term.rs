use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ops::Op;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    Real,
    BitVec(u32),
    Array(Box<Sort>, Box<Sort>),
    Uninterpreted(String),
}

impl Sort {
    pub fn array(index: Sort, element: Sort) -> Sort {
        Sort::Array(Box::new(index), Box::new(element))
    }

    pub fn is_arith(&self) -> bool {
        matches!(self, Sort::Int | Sort::Real)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => f.write_str("Bool"),
            Sort::Int => f.write_str("Int"),
            Sort::Real => f.write_str("Real"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
            Sort::Array(i, e) => write!(f, "(Array {i} {e})"),
            Sort::Uninterpreted(name) => f.write_str(&super::print::quote_symbol(name)),
        }
    }
}

/// A literal constant. Real literals are always finite decimals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    BitVec { value: BigUint, width: u32 },
}

impl Literal {
    pub fn sort(&self) -> Sort {
        match self {
            Literal::Bool(_) => Sort::Bool,
            Literal::Int(_) => Sort::Int,
            Literal::Real(_) => Sort::Real,
            Literal::BitVec { width, .. } => Sort::BitVec(*width),
        }
    }

    /// Adds `delta` to a numeric literal.
    pub fn offset(&self, delta: i64) -> Option<Literal> {
        match self {
            Literal::Int(v) => Some(Literal::Int(v + BigInt::from(delta))),
            Literal::Real(v) => Some(Literal::Real(v + BigRational::from_integer(delta.into()))),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Literal::Int(_) | Literal::Real(_))
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Literal::Int(v) => v.is_negative(),
            Literal::Real(v) => v.is_negative(),
            _ => false,
        }
    }

    /// SMT-LIB rendering of the magnitude (no sign).
    pub(crate) fn magnitude_text(&self) -> String {
        match self {
            Literal::Bool(b) => b.to_string(),
            Literal::Int(v) => v.abs().to_string(),
            Literal::Real(v) => decimal_text(&v.abs()),
            Literal::BitVec { value, width } => {
                if width % 4 == 0 {
                    format!("#x{:0>w$}", value.to_str_radix(16), w = (*width / 4) as usize)
                } else {
                    format!("#b{:0>w$}", value.to_str_radix(2), w = *width as usize)
                }
            }
        }
    }
}

/// Renders a non-negative rational with a terminating decimal expansion.
fn decimal_text(v: &BigRational) -> String {
    let int_part = v.to_integer();
    let mut frac = v - BigRational::from_integer(int_part.clone());
    let mut digits = String::new();
    let ten = BigInt::from(10);
    // Denominators of parsed decimals are products of 2s and 5s, so this
    // terminates; the cap guards against hand-built non-decimal rationals.
    while !frac.is_zero() && digits.len() < 64 {
        frac = frac * BigRational::from_integer(ten.clone());
        let d = frac.to_integer();
        digits.push_str(&d.to_string());
        frac = frac - BigRational::from_integer(d);
    }
    if digits.is_empty() {
        digits.push('0');
    }
    format!("{int_part}.{digits}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String, Sort),
    Const(Literal),
    App(Op, Vec<Term>),
    PredApp(String, Vec<Term>),
    Quant(Quantifier, Vec<(String, Sort)>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        Term::Var(name.into(), sort)
    }

    pub fn bool(b: bool) -> Term {
        Term::Const(Literal::Bool(b))
    }

    pub fn int(v: i64) -> Term {
        Term::Const(Literal::Int(v.into()))
    }

    pub fn real(num: i64, den: i64) -> Term {
        Term::Const(Literal::Real(BigRational::new(num.into(), den.into())))
    }

    pub fn app(op: Op, args: Vec<Term>) -> Term {
        Term::App(op, args)
    }

    pub fn pred(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::PredApp(name.into(), args)
    }

    pub fn not(t: Term) -> Term {
        Term::App(Op::Not, vec![t])
    }

    /// Conjunction of `parts`, collapsing the 0- and 1-element cases.
    pub fn and(mut parts: Vec<Term>) -> Term {
        match parts.len() {
            0 => Term::bool(true),
            1 => parts.pop().unwrap(),
            _ => Term::App(Op::And, parts),
        }
    }

    /// `forall vars. body`, or just `body` when `vars` is empty.
    pub fn forall(vars: Vec<(String, Sort)>, body: Term) -> Term {
        if vars.is_empty() {
            body
        } else {
            Term::Quant(Quantifier::Forall, vars, Box::new(body))
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::Const(Literal::Bool(true)))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Term::Const(Literal::Bool(false)))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(_, s) => s.clone(),
            Term::Const(l) => l.sort(),
            Term::PredApp(..) | Term::Quant(..) => Sort::Bool,
            Term::App(op, args) => {
                let sorts: Vec<Sort> = args.iter().map(Term::sort).collect();
                op.result_sort(&sorts).unwrap_or(Sort::Bool)
            }
        }
    }

    pub fn children(&self) -> &[Term] {
        match self {
            Term::App(_, args) | Term::PredApp(_, args) => args,
            Term::Quant(_, _, body) => std::slice::from_ref(body.as_ref()),
            _ => &[],
        }
    }

    pub fn children_mut(&mut self) -> &mut [Term] {
        match self {
            Term::App(_, args) | Term::PredApp(_, args) => args,
            Term::Quant(_, _, body) => std::slice::from_mut(body.as_mut()),
            _ => &mut [],
        }
    }

    pub fn contains_pred(&self) -> bool {
        matches!(self, Term::PredApp(..)) || self.children().iter().any(Term::contains_pred)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(Term::node_count).sum::<usize>()
    }

    /// Subterm at `path` (child indices from the root).
    pub fn at(&self, path: &[usize]) -> Option<&Term> {
        path.iter().try_fold(self, |t, &i| t.children().get(i))
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Term> {
        let mut cur = self;
        for &i in path {
            cur = cur.children_mut().get_mut(i)?;
        }
        Some(cur)
    }

    /// Pre-order traversal yielding every subterm with its path.
    pub fn walk(&self) -> Vec<(Vec<usize>, &Term)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), self)];
        while let Some((path, t)) = stack.pop() {
            for (i, c) in t.children().iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i);
                stack.push((p, c));
            }
            out.push((path, t));
        }
        out
    }

    /// True if a variable called `name` occurs free.
    pub fn has_free_var(&self, name: &str) -> bool {
        match self {
            Term::Var(n, _) => n == name,
            Term::Quant(_, vars, body) => {
                !vars.iter().any(|(n, _)| n == name) && body.has_free_var(name)
            }
            _ => self.children().iter().any(|c| c.has_free_var(name)),
        }
    }

    /// Capture-avoiding substitution of free variables. Bound names are
    /// unique per clause, so a binder only shadows the names it binds.
    pub fn substitute(&self, map: &[(String, Term)]) -> Term {
        match self {
            Term::Var(n, _) => map
                .iter()
                .find(|(k, _)| k == n)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::App(op, args) => {
                Term::App(op.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
            Term::PredApp(p, args) => {
                Term::PredApp(p.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
            Term::Quant(q, vars, body) => {
                let inner: Vec<(String, Term)> = map
                    .iter()
                    .filter(|(k, _)| !vars.iter().any(|(n, _)| n == k))
                    .cloned()
                    .collect();
                Term::Quant(*q, vars.clone(), Box::new(body.substitute(&inner)))
            }
        }
    }

    /// Numeric literal value, accepting a literal directly.
    pub fn as_numeric_literal(&self) -> Option<&Literal> {
        match self {
            Term::Const(l) if l.is_numeric() => Some(l),
            _ => None,
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        match self {
            Term::Const(Literal::Int(v)) => v.is_zero(),
            Term::Const(Literal::Real(v)) => v.is_zero(),
            _ => false,
        }
    }

    pub fn is_one_literal(&self) -> bool {
        match self {
            Term::Const(Literal::Int(v)) => v.is_one(),
            _ => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        super::print::write_term(&mut s, self);
        f.write_str(&s)
    }
}
