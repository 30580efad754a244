use super::term::Sort;

/// Bit-vector operators without indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BvOp {
    Not,
    Neg,
    And,
    Or,
    Xor,
    Nand,
    Nor,
    Xnor,
    Add,
    Sub,
    Mul,
    Udiv,
    Urem,
    Sdiv,
    Srem,
    Smod,
    Shl,
    Lshr,
    Ashr,
    Ult,
    Ule,
    Ugt,
    Uge,
    Slt,
    Sle,
    Sgt,
    Sge,
    Comp,
    Concat,
    ToNat,
}

const BV_NAMES: &[(BvOp, &str)] = &[
    (BvOp::Not, "bvnot"),
    (BvOp::Neg, "bvneg"),
    (BvOp::And, "bvand"),
    (BvOp::Or, "bvor"),
    (BvOp::Xor, "bvxor"),
    (BvOp::Nand, "bvnand"),
    (BvOp::Nor, "bvnor"),
    (BvOp::Xnor, "bvxnor"),
    (BvOp::Add, "bvadd"),
    (BvOp::Sub, "bvsub"),
    (BvOp::Mul, "bvmul"),
    (BvOp::Udiv, "bvudiv"),
    (BvOp::Urem, "bvurem"),
    (BvOp::Sdiv, "bvsdiv"),
    (BvOp::Srem, "bvsrem"),
    (BvOp::Smod, "bvsmod"),
    (BvOp::Shl, "bvshl"),
    (BvOp::Lshr, "bvlshr"),
    (BvOp::Ashr, "bvashr"),
    (BvOp::Ult, "bvult"),
    (BvOp::Ule, "bvule"),
    (BvOp::Ugt, "bvugt"),
    (BvOp::Uge, "bvuge"),
    (BvOp::Slt, "bvslt"),
    (BvOp::Sle, "bvsle"),
    (BvOp::Sgt, "bvsgt"),
    (BvOp::Sge, "bvsge"),
    (BvOp::Comp, "bvcomp"),
    (BvOp::Concat, "concat"),
    (BvOp::ToNat, "bv2nat"),
];

impl BvOp {
    pub fn name(self) -> &'static str {
        BV_NAMES.iter().find(|(op, _)| *op == self).map(|(_, n)| *n).unwrap()
    }

    pub fn from_name(name: &str) -> Option<BvOp> {
        match name {
            "bv2int" => Some(BvOp::ToNat),
            _ => BV_NAMES.iter().find(|(_, n)| *n == name).map(|(op, _)| *op),
        }
    }

    fn is_predicate(self) -> bool {
        use BvOp::*;
        matches!(self, Ult | Ule | Ugt | Uge | Slt | Sle | Sgt | Sge)
    }
}

/// Indexed bit-vector operators, `(_ extract i j)` and friends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BvIndexed {
    Extract(u32, u32),
    ZeroExtend(u32),
    SignExtend(u32),
    Repeat(u32),
    RotateLeft(u32),
    RotateRight(u32),
    IntToBv(u32),
}

impl BvIndexed {
    pub fn from_parts(name: &str, idx: &[u32]) -> Option<BvIndexed> {
        Some(match (name, idx) {
            ("extract", [i, j]) => BvIndexed::Extract(*i, *j),
            ("zero_extend", [k]) => BvIndexed::ZeroExtend(*k),
            ("sign_extend", [k]) => BvIndexed::SignExtend(*k),
            ("repeat", [k]) => BvIndexed::Repeat(*k),
            ("rotate_left", [k]) => BvIndexed::RotateLeft(*k),
            ("rotate_right", [k]) => BvIndexed::RotateRight(*k),
            ("int2bv", [k]) => BvIndexed::IntToBv(*k),
            _ => return None,
        })
    }

    pub fn text(self) -> String {
        match self {
            BvIndexed::Extract(i, j) => format!("(_ extract {i} {j})"),
            BvIndexed::ZeroExtend(k) => format!("(_ zero_extend {k})"),
            BvIndexed::SignExtend(k) => format!("(_ sign_extend {k})"),
            BvIndexed::Repeat(k) => format!("(_ repeat {k})"),
            BvIndexed::RotateLeft(k) => format!("(_ rotate_left {k})"),
            BvIndexed::RotateRight(k) => format!("(_ rotate_right {k})"),
            BvIndexed::IntToBv(k) => format!("(_ int2bv {k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Not,
    And,
    Or,
    Implies,
    Xor,
    Eq,
    Distinct,
    Ite,
    Add,
    Sub,
    Mul,
    /// Real division `/`.
    Div,
    /// Integer division `div`.
    IntDiv,
    Mod,
    Abs,
    Le,
    Lt,
    Ge,
    Gt,
    ToReal,
    ToInt,
    IsInt,
    Select,
    Store,
    /// `(as const (Array I E))`
    ConstArray(Sort),
    Bv(BvOp),
    BvIndexed(BvIndexed),
    /// A declared background function with its result sort.
    Fun(String, Sort),
}

const CORE_NAMES: &[(&str, Op)] = &[
    ("not", Op::Not),
    ("and", Op::And),
    ("or", Op::Or),
    ("=>", Op::Implies),
    ("xor", Op::Xor),
    ("=", Op::Eq),
    ("distinct", Op::Distinct),
    ("ite", Op::Ite),
    ("+", Op::Add),
    ("-", Op::Sub),
    ("*", Op::Mul),
    ("/", Op::Div),
    ("div", Op::IntDiv),
    ("mod", Op::Mod),
    ("abs", Op::Abs),
    ("<=", Op::Le),
    ("<", Op::Lt),
    (">=", Op::Ge),
    (">", Op::Gt),
    ("to_real", Op::ToReal),
    ("to_int", Op::ToInt),
    ("is_int", Op::IsInt),
    ("select", Op::Select),
    ("store", Op::Store),
];

impl Op {
    /// Looks up a non-indexed builtin by its SMT-LIB name.
    pub fn builtin(name: &str) -> Option<Op> {
        CORE_NAMES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, op)| op.clone())
            .or_else(|| BvOp::from_name(name).map(Op::Bv))
    }

    /// Head symbol text as printed in an application.
    pub fn head_text(&self) -> String {
        match self {
            Op::ConstArray(sort) => format!("(as const {sort})"),
            Op::Bv(b) => b.name().to_string(),
            Op::BvIndexed(i) => i.text(),
            Op::Fun(name, _) => super::print::quote_symbol(name),
            other => CORE_NAMES
                .iter()
                .find(|(_, op)| op == other)
                .map(|(n, _)| n.to_string())
                .unwrap(),
        }
    }

    pub fn is_inequality(&self) -> bool {
        matches!(self, Op::Le | Op::Lt | Op::Ge | Op::Gt)
    }

    /// Sort of an application of this operator to arguments of the given
    /// sorts, or a diagnostic when ill-sorted.
    pub fn result_sort(&self, args: &[Sort]) -> Result<Sort, String> {
        let name = self.head_text();
        let err = |what: &str| Err(format!("`{name}` {what}, got ({})", join(args)));
        let all_bool = || args.iter().all(|s| *s == Sort::Bool);
        let all_arith = || !args.is_empty() && args.iter().all(Sort::is_arith);
        let arith_result = || {
            if args.iter().all(|s| *s == Sort::Int) {
                Sort::Int
            } else {
                Sort::Real
            }
        };
        let same = |a: &Sort, b: &Sort| a == b || (a.is_arith() && b.is_arith());
        match self {
            Op::Not => match args {
                [Sort::Bool] => Ok(Sort::Bool),
                _ => err("expects one Bool"),
            },
            Op::And | Op::Or | Op::Xor => {
                if all_bool() {
                    Ok(Sort::Bool)
                } else {
                    err("expects Bool arguments")
                }
            }
            Op::Implies => {
                if args.len() >= 2 && all_bool() {
                    Ok(Sort::Bool)
                } else {
                    err("expects at least two Bool arguments")
                }
            }
            Op::Eq | Op::Distinct => {
                if args.len() >= 2 && args.windows(2).all(|w| same(&w[0], &w[1])) {
                    Ok(Sort::Bool)
                } else {
                    err("expects at least two arguments of one sort")
                }
            }
            Op::Ite => match args {
                [Sort::Bool, a, b] if a == b => Ok(a.clone()),
                [Sort::Bool, a, b] if a.is_arith() && b.is_arith() => Ok(Sort::Real),
                _ => err("expects (Bool, S, S)"),
            },
            Op::Add | Op::Sub | Op::Mul => {
                if all_arith() {
                    Ok(arith_result())
                } else {
                    err("expects Int/Real arguments")
                }
            }
            Op::Div => {
                if args.len() >= 2 && all_arith() {
                    Ok(Sort::Real)
                } else {
                    err("expects at least two Int/Real arguments")
                }
            }
            Op::IntDiv | Op::Mod => {
                if args.len() >= 2 && args.iter().all(|s| *s == Sort::Int) {
                    Ok(Sort::Int)
                } else {
                    err("expects Int arguments")
                }
            }
            Op::Abs => match args {
                [s] if s.is_arith() => Ok(s.clone()),
                _ => err("expects one Int/Real"),
            },
            Op::Le | Op::Lt | Op::Ge | Op::Gt => {
                if args.len() >= 2 && all_arith() {
                    Ok(Sort::Bool)
                } else {
                    err("expects at least two Int/Real arguments")
                }
            }
            Op::ToReal => match args {
                [s] if s.is_arith() => Ok(Sort::Real),
                _ => err("expects one Int"),
            },
            Op::ToInt => match args {
                [s] if s.is_arith() => Ok(Sort::Int),
                _ => err("expects one Real"),
            },
            Op::IsInt => match args {
                [s] if s.is_arith() => Ok(Sort::Bool),
                _ => err("expects one Real"),
            },
            Op::Select => match args {
                [Sort::Array(i, e), idx] if same(i, idx) => Ok((**e).clone()),
                _ => err("expects (Array I E, I)"),
            },
            Op::Store => match args {
                [arr @ Sort::Array(i, e), idx, v] if same(i, idx) && same(e, v) => Ok(arr.clone()),
                _ => err("expects (Array I E, I, E)"),
            },
            Op::ConstArray(sort) => match (sort, args) {
                (Sort::Array(_, e), [v]) if same(e, v) => Ok(sort.clone()),
                _ => err("expects one element-sorted value"),
            },
            Op::Bv(b) => bv_result(*b, args).map_or_else(|| err("ill-sorted bit-vector operation"), Ok),
            Op::BvIndexed(ix) => bv_indexed_result(*ix, args)
                .map_or_else(|| err("ill-sorted bit-vector operation"), Ok),
            Op::Fun(_, ret) => Ok(ret.clone()),
        }
    }
}

fn bv_result(op: BvOp, args: &[Sort]) -> Option<Sort> {
    let widths: Vec<u32> = args
        .iter()
        .map(|s| match s {
            Sort::BitVec(w) => Some(*w),
            _ => None,
        })
        .collect::<Option<_>>()?;
    let first = *widths.first()?;
    let uniform = widths.iter().all(|w| *w == first);
    match op {
        BvOp::Not | BvOp::Neg => (widths.len() == 1).then_some(Sort::BitVec(first)),
        BvOp::Concat => (widths.len() >= 2).then(|| Sort::BitVec(widths.iter().sum())),
        BvOp::ToNat => (widths.len() == 1).then_some(Sort::Int),
        BvOp::Comp => (widths.len() == 2 && uniform).then_some(Sort::BitVec(1)),
        p if p.is_predicate() => (widths.len() == 2 && uniform).then_some(Sort::Bool),
        _ => (widths.len() >= 2 && uniform).then_some(Sort::BitVec(first)),
    }
}

fn bv_indexed_result(op: BvIndexed, args: &[Sort]) -> Option<Sort> {
    match (op, args) {
        (BvIndexed::IntToBv(w), [Sort::Int]) => Some(Sort::BitVec(w)),
        (BvIndexed::Extract(i, j), [Sort::BitVec(w)]) if i >= j && i < *w => {
            Some(Sort::BitVec(i - j + 1))
        }
        (BvIndexed::ZeroExtend(k) | BvIndexed::SignExtend(k), [Sort::BitVec(w)]) => {
            Some(Sort::BitVec(w + k))
        }
        (BvIndexed::Repeat(k), [Sort::BitVec(w)]) if k >= 1 => Some(Sort::BitVec(w * k)),
        (BvIndexed::RotateLeft(_) | BvIndexed::RotateRight(_), [Sort::BitVec(w)]) => {
            Some(Sort::BitVec(*w))
        }
        _ => None,
    }
}

fn join(sorts: &[Sort]) -> String {
    sorts.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}
