//! SMT-LIB2 printer. Output re-parses to a structurally equal system.

use std::fmt::Write;

use super::ops::Op;
use super::term::{Literal, Term};
use super::{ChcClause, ChcSystem, SurfaceForm};

const RESERVED: &[&str] = &[
    "par", "NUMERAL", "DECIMAL", "STRING", "_", "!", "as", "let", "exists", "forall", "match",
];

fn is_simple_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

/// Renders `name` as a simple symbol when possible, otherwise `|name|`.
pub fn quote_symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(is_simple_symbol_char)
        && !RESERVED.contains(&name);
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

pub(crate) fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Var(name, _) => out.push_str(&quote_symbol(name)),
        Term::Const(lit) => write_literal(out, lit),
        Term::App(op, args) => write_app(out, &op.head_text(), args),
        Term::PredApp(p, args) if args.is_empty() => out.push_str(&quote_symbol(p)),
        Term::PredApp(p, args) => write_app(out, &quote_symbol(p), args),
        Term::Quant(q, vars, body) => {
            out.push('(');
            out.push_str(q.keyword());
            out.push_str(" (");
            write_binders(out, vars);
            out.push_str(") ");
            write_term(out, body);
            out.push(')');
        }
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    if lit.is_negative() {
        let _ = write!(out, "(- {})", lit.magnitude_text());
    } else {
        out.push_str(&lit.magnitude_text());
    }
}

fn write_app(out: &mut String, head: &str, args: &[Term]) {
    out.push('(');
    out.push_str(head);
    for a in args {
        out.push(' ');
        write_term(out, a);
    }
    out.push(')');
}

fn write_binders(out: &mut String, vars: &[(String, super::Sort)]) {
    for (i, (n, s)) in vars.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "({} {s})", quote_symbol(n));
    }
}

/// Whether a body conjunct `(not d)` may be printed as the bare disjunct
/// `d` and still read back as the same conjunct.
fn prints_as_bare_disjunct(d: &Term) -> bool {
    !matches!(d, Term::App(Op::Not, _) | Term::PredApp(..) | Term::Const(Literal::Bool(_)))
}

fn negated_disjunct(c: &Term) -> Term {
    match c {
        Term::App(Op::Not, args) if prints_as_bare_disjunct(&args[0]) => args[0].clone(),
        other => Term::not(other.clone()),
    }
}

/// The clause matrix in its surface form.
fn surface_matrix(clause: &ChcClause) -> Term {
    match clause.effective_form() {
        SurfaceForm::Implication => clause.matrix(),
        SurfaceForm::Fact => clause.head.clone(),
        SurfaceForm::Negation => Term::not(clause.body.clone()),
        SurfaceForm::Disjunction { head_at, split } => {
            let mut disjuncts: Vec<Term> = match (&clause.body, split) {
                (Term::App(Op::And, cs), true) => cs.iter().map(negated_disjunct).collect(),
                (b, _) => vec![negated_disjunct(b)],
            };
            if let Some(k) = head_at {
                disjuncts.insert(k, clause.head.clone());
            }
            Term::App(Op::Or, disjuncts)
        }
    }
}

/// The `(assert ...)` command for one clause.
pub fn print_clause(clause: &ChcClause) -> String {
    let mut out = String::from("(assert ");
    let matrix = surface_matrix(clause);
    if clause.bound.is_empty() {
        write_term(&mut out, &matrix);
    } else {
        out.push_str("(forall (");
        write_binders(&mut out, &clause.bound);
        out.push_str(") ");
        write_term(&mut out, &matrix);
        out.push(')');
    }
    out.push(')');
    out
}

/// Sort, function and predicate declarations, one per line.
pub fn print_declarations(system: &ChcSystem) -> String {
    let mut out = String::new();
    for s in &system.sorts {
        let _ = writeln!(out, "(declare-sort {} 0)", quote_symbol(s));
    }
    let mut decl = |name: &str, args: &[super::Sort], ret: &super::Sort| {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "(declare-fun {} ({}) {ret})", quote_symbol(name), args.join(" "));
    };
    for (name, f) in &system.functions {
        decl(name, &f.args, &f.ret);
    }
    for (name, args) in &system.predicates {
        decl(name, args, &super::Sort::Bool);
    }
    out
}

/// A complete script: logic, options, declarations, assertions,
/// `(check-sat)` and `(get-model)`.
pub fn print_script(system: &ChcSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(set-logic {})", quote_symbol(&system.logic));
    for (name, value) in &system.options {
        let _ = writeln!(out, "(set-option :{name} {value})");
    }
    out.push_str(&print_declarations(system));
    for c in &system.clauses {
        out.push_str(&print_clause(c));
        out.push('\n');
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_script, Sort};
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(quote_symbol("x"), "x");
        assert_eq!(quote_symbol("x!0"), "x!0");
        assert_eq!(quote_symbol("a b"), "|a b|");
        assert_eq!(quote_symbol("1x"), "|1x|");
        assert_eq!(quote_symbol("let"), "|let|");
    }

    #[test]
    fn options_precede_assertions() {
        let mut s = parse_script("(declare-fun P (Int) Bool)(assert (forall ((x Int)) (P x)))").unwrap();
        s.options.push(("fp.xform.slice".into(), "false".into()));
        let text = print_script(&s);
        let opt = text.find("(set-option :fp.xform.slice false)").unwrap();
        assert!(opt < text.find("(assert").unwrap());
        assert_eq!(parse_script(&text).unwrap(), s);
    }

    #[test]
    fn empty_system() {
        let mut s = ChcSystem::default();
        s.predicates.insert("P".into(), vec![Sort::Int]);
        let text = print_script(&s);
        assert!(text.contains("(check-sat)"));
        assert!(!text.contains("assert"));
        assert_eq!(parse_script(&text).unwrap(), s);
    }

    #[test]
    fn surface_forms_round_trip() {
        let src = "(declare-fun P (Int) Bool)(declare-fun Q (Int) Bool)\
            (assert (P 0))\
            (assert (forall ((x Int)) (not (and (P x) (> x 3)))))\
            (assert (forall ((x Int)) (or (not (P x)) (< x 2) (not (not (= x 1))) (Q x))))\
            (assert (forall ((x Int)) (or (Q x) (not (and (P x) (> x 1))))))\
            (assert (forall ((x Int)) (or (not (Q x)) false (not false))))\
            (assert (forall ((x Int)) (=> (and (Q x) (P x)) false)))";
        let s = parse_script(src).unwrap();
        let text = print_script(&s);
        assert_eq!(parse_script(&text).unwrap(), s, "{text}");
        assert!(text.contains("(assert (P 0))"));
        assert!(text.contains("(or (not (P x)) (< x 2) (= x 1) (Q x))"), "{text}");
    }
}
