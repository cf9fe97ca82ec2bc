//! Expression trees and their printer.

use std::fmt;

use super::scalar::Scalar;

/// Largest axis index accepted in symbols (`T1`…`T3`, `x1`…`x3`).
pub const MAX_AXES: usize = 3;

/// A coefficient function, i.e. the symbol of a multiplication operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoeffExpr {
    /// The coordinate `x_j` (axis stored 0-based).
    Coord(usize),
    /// A named function bound at evaluation time.
    Fun(String),
    /// `Δ_j` applied to a shift-free expression.
    Diff(usize, Box<OpExpr>),
    /// `(T_j c)(x) = c(x + β e_j)` or, when `adjoint`, `c(x − β e_j)`.
    Shift { axis: usize, adjoint: bool, arg: Box<OpExpr> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpExpr {
    Scalar(Scalar),
    Mult(CoeffExpr),
    /// `T_j` or `T_j*`.
    ShiftOp { axis: usize, adjoint: bool },
    /// The difference operator `Δ_j = (T_j − 1)/β`.
    DiffOp(usize),
    /// `Q_j = (T_j − T_j*)/(2iβ)`.
    QOp(usize),
    Add(Box<OpExpr>, Box<OpExpr>),
    Sub(Box<OpExpr>, Box<OpExpr>),
    Neg(Box<OpExpr>),
    Mul(Box<OpExpr>, Box<OpExpr>),
    /// Division by a scalar expression.
    Div(Box<OpExpr>, Box<OpExpr>),
    Commutator(Box<OpExpr>, Box<OpExpr>),
}

impl OpExpr {
    pub fn shift(axis: usize, adjoint: bool) -> Self {
        OpExpr::ShiftOp { axis, adjoint }
    }

    pub fn coord(axis: usize) -> Self {
        OpExpr::Mult(CoeffExpr::Coord(axis))
    }

    pub fn fun(name: &str) -> Self {
        OpExpr::Mult(CoeffExpr::Fun(name.to_string()))
    }

    pub fn add(a: OpExpr, b: OpExpr) -> Self {
        OpExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: OpExpr, b: OpExpr) -> Self {
        OpExpr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: OpExpr, b: OpExpr) -> Self {
        OpExpr::Mul(Box::new(a), Box::new(b))
    }

    pub fn commutator(a: OpExpr, b: OpExpr) -> Self {
        OpExpr::Commutator(Box::new(a), Box::new(b))
    }

    /// True when the expression contains no shift-type operator, so that it
    /// denotes a multiplication operator.
    pub fn is_shift_free(&self) -> bool {
        match self {
            OpExpr::Scalar(_) | OpExpr::Mult(_) => true,
            OpExpr::ShiftOp { .. } | OpExpr::DiffOp(_) | OpExpr::QOp(_) => false,
            OpExpr::Neg(a) => a.is_shift_free(),
            OpExpr::Add(a, b) | OpExpr::Sub(a, b) | OpExpr::Mul(a, b) | OpExpr::Div(a, b) => {
                a.is_shift_free() && b.is_shift_free()
            }
            // a commutator of multiplications vanishes, but it is still a multiplication
            OpExpr::Commutator(a, b) => a.is_shift_free() && b.is_shift_free(),
        }
    }

    /// Largest 0-based axis mentioned, if any.
    pub fn max_axis(&self) -> Option<usize> {
        let both = |a: &OpExpr, b: &OpExpr| a.max_axis().max(b.max_axis());
        match self {
            OpExpr::Scalar(_) => None,
            OpExpr::Mult(c) => match c {
                CoeffExpr::Coord(j) => Some(*j),
                CoeffExpr::Fun(_) => None,
                CoeffExpr::Diff(j, e) => Some(*j).max(e.max_axis()),
                CoeffExpr::Shift { axis, arg, .. } => Some(*axis).max(arg.max_axis()),
            },
            OpExpr::ShiftOp { axis, .. } => Some(*axis),
            OpExpr::DiffOp(j) | OpExpr::QOp(j) => Some(*j),
            OpExpr::Neg(a) => a.max_axis(),
            OpExpr::Add(a, b) | OpExpr::Sub(a, b) | OpExpr::Mul(a, b) | OpExpr::Div(a, b) => both(a, b),
            OpExpr::Commutator(a, b) => both(a, b),
        }
    }

    /// Per-axis bound on how far the expression reaches along each axis: the
    /// largest number of shifts applied in sequence.
    pub fn shift_depth(&self) -> [usize; MAX_AXES] {
        let max = |a: [usize; MAX_AXES], b: [usize; MAX_AXES]| std::array::from_fn(|k| a[k].max(b[k]));
        let sum = |a: [usize; MAX_AXES], b: [usize; MAX_AXES]| std::array::from_fn(|k| a[k] + b[k]);
        let unit = |j: usize| std::array::from_fn(|k| usize::from(k == j));
        match self {
            OpExpr::Scalar(_) => [0; MAX_AXES],
            OpExpr::Mult(c) => match c {
                CoeffExpr::Coord(_) | CoeffExpr::Fun(_) => [0; MAX_AXES],
                CoeffExpr::Diff(j, e) => sum(unit(*j), e.shift_depth()),
                CoeffExpr::Shift { axis, arg, .. } => sum(unit(*axis), arg.shift_depth()),
            },
            OpExpr::ShiftOp { axis, .. } => unit(*axis),
            OpExpr::DiffOp(j) | OpExpr::QOp(j) => unit(*j),
            OpExpr::Neg(a) => a.shift_depth(),
            OpExpr::Add(a, b) | OpExpr::Sub(a, b) => max(a.shift_depth(), b.shift_depth()),
            OpExpr::Mul(a, b) | OpExpr::Div(a, b) | OpExpr::Commutator(a, b) => sum(a.shift_depth(), b.shift_depth()),
        }
    }

    /// Names of the functions referenced.
    pub fn functions(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_functions(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_functions(&self, out: &mut Vec<String>) {
        match self {
            OpExpr::Mult(CoeffExpr::Fun(n)) => out.push(n.clone()),
            OpExpr::Mult(CoeffExpr::Diff(_, e)) | OpExpr::Mult(CoeffExpr::Shift { arg: e, .. }) => {
                e.collect_functions(out)
            }
            OpExpr::Neg(a) => a.collect_functions(out),
            OpExpr::Add(a, b)
            | OpExpr::Sub(a, b)
            | OpExpr::Mul(a, b)
            | OpExpr::Div(a, b)
            | OpExpr::Commutator(a, b) => {
                a.collect_functions(out);
                b.collect_functions(out);
            }
            _ => {}
        }
    }
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffExpr::Coord(j) => write!(f, "x{}", j + 1),
            CoeffExpr::Fun(name) => write!(f, "{name}"),
            CoeffExpr::Diff(j, e) => write!(f, "D{}({})", j + 1, Bare(e)),
            CoeffExpr::Shift { axis, adjoint, arg } => {
                write!(f, "S{}{}({})", axis + 1, if *adjoint { "adj" } else { "" }, Bare(arg))
            }
        }
    }
}

/// Prints an expression without outer parentheses.
struct Bare<'a>(&'a OpExpr);

impl fmt::Display for Bare<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            OpExpr::Add(a, b) => write!(f, "{a} + {b}"),
            OpExpr::Sub(a, b) => write!(f, "{a} - {b}"),
            OpExpr::Mul(a, b) => write!(f, "{a} * {b}"),
            OpExpr::Div(a, b) => write!(f, "{a} / {b}"),
            e => write!(f, "{e}"),
        }
    }
}

/// Compound nodes are always parenthesized so that printing then parsing
/// reproduces the tree exactly.
impl fmt::Display for OpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpExpr::Scalar(s) => {
                let text = s.to_string();
                let atomic = text == "i" || text == "beta" || text.bytes().all(|b| b.is_ascii_digit());
                if atomic {
                    write!(f, "{text}")
                } else {
                    write!(f, "({text})")
                }
            }
            OpExpr::Mult(c) => write!(f, "{c}"),
            OpExpr::ShiftOp { axis, adjoint } => write!(f, "T{}{}", axis + 1, if *adjoint { "adj" } else { "" }),
            OpExpr::DiffOp(j) => write!(f, "D{}", j + 1),
            OpExpr::QOp(j) => write!(f, "Q{}", j + 1),
            OpExpr::Neg(a) => write!(f, "(-{a})"),
            OpExpr::Add(..) | OpExpr::Sub(..) | OpExpr::Mul(..) | OpExpr::Div(..) => write!(f, "({})", Bare(self)),
            OpExpr::Commutator(a, b) => write!(f, "[{}, {}]", Bare(a), Bare(b)),
        }
    }
}

impl OpExpr {
    /// Text that parses back to this exact tree.
    pub fn to_text(&self) -> String {
        Bare(self).to_string()
    }
}
