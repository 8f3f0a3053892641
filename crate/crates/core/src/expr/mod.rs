//! Scalar expressions over the jet-space coordinates `(t^a, x^i, p_i^a)`.
//!
//! Trees are immutable and reference counted. Every constructor in this
//! module (`add`, `mul`, `pow`, `call`, and the operator impls) returns a
//! normalized tree: flattened sums and products, folded constants, merged
//! like terms and like bases. [`Expr::simplify`] rebuilds an arbitrary tree
//! (for example a raw parse tree) through the same constructors.

mod diff;
mod display;
mod eval;
mod parse;
mod simplify;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

pub use display::format_number;
pub use eval::{EvalCache, EvalError, Point};
pub use num_rational::Rational64;
pub use parse::{parse_expr, parse_expr_with, ParseError};

/// Largest temporal or spatial dimension supported by the variable encoding.
pub const MAX_DIM: usize = 4;

/// A coordinate of the dual 1-jet space. Indices are zero based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    /// `t^a`
    Temporal(usize),
    /// `x^i`
    Spatial(usize),
    /// `p_i^a`, stored as `Momentum { i, a }`.
    Momentum { i: usize, a: usize },
}

impl VarRef {
    pub fn t(a: usize) -> Self {
        VarRef::Temporal(a)
    }

    pub fn x(i: usize) -> Self {
        VarRef::Spatial(i)
    }

    pub fn p(i: usize, a: usize) -> Self {
        VarRef::Momentum { i, a }
    }

    pub(crate) fn bit(self) -> u32 {
        match self {
            VarRef::Temporal(a) => 1 << a,
            VarRef::Spatial(i) => 1 << (MAX_DIM + i),
            VarRef::Momentum { i, a } => 1 << (2 * MAX_DIM + MAX_DIM * i + a),
        }
    }

    /// Whether the indices fit a space with `m` temporal and `n` spatial dimensions.
    pub fn in_range(self, m: usize, n: usize) -> bool {
        match self {
            VarRef::Temporal(a) => a < m,
            VarRef::Spatial(i) => i < n,
            VarRef::Momentum { i, a } => i < n && a < m,
        }
    }

    /// Every coordinate of an `(m, n)` space in canonical order: t, x, then p row-major.
    pub fn all(m: usize, n: usize) -> Vec<VarRef> {
        let mut out: Vec<VarRef> = (0..m).map(VarRef::t).collect();
        out.extend((0..n).map(VarRef::x));
        for i in 0..n {
            for a in 0..m {
                out.push(VarRef::p(i, a));
            }
        }
        out
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarRef::Temporal(a) => write!(f, "t{}", a + 1),
            VarRef::Spatial(i) => write!(f, "x{}", i + 1),
            VarRef::Momentum { i, a } => write!(f, "p{}_{}", i + 1, a + 1),
        }
    }
}

/// Bit masks selecting the variable families in [`Expr::vars`].
pub mod mask {
    pub const TEMPORAL: u32 = 0x0000_000f;
    pub const SPATIAL: u32 = 0x0000_00f0;
    pub const MOMENTUM: u32 = 0x00ff_ff00;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }
}

#[derive(Debug)]
pub enum Node {
    Const(f64),
    /// A symbolic constant carrying its value (`pi`, `e`, or a space constant).
    Named(Arc<str>, f64),
    Var(VarRef),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, Rational64),
    Quot(Expr, Expr),
    Neg(Expr),
    Call(Func, Expr),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    vars: u32,
    hash: u64,
}

/// Immutable symbolic scalar.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

fn mix(h: u64, v: u64) -> u64 {
    // splitmix64 finalizer over a running combination
    let mut z = h ^ v.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        let (vars, hash) = match &node {
            Node::Const(c) => (0, mix(1, normalize_zero(*c).to_bits())),
            Node::Named(name, _) => (
                0,
                name.bytes().fold(2u64, |h, b| mix(h, u64::from(b))),
            ),
            Node::Var(v) => (v.bit(), mix(3, u64::from(v.bit()))),
            Node::Sum(xs) => (
                xs.iter().fold(0, |m, e| m | e.vars()),
                xs.iter().fold(4u64, |h, e| mix(h, e.0.hash)),
            ),
            Node::Product(xs) => (
                xs.iter().fold(0, |m, e| m | e.vars()),
                xs.iter().fold(5u64, |h, e| mix(h, e.0.hash)),
            ),
            Node::Pow(b, r) => (
                b.vars(),
                mix(mix(mix(6, b.0.hash), *r.numer() as u64), *r.denom() as u64),
            ),
            Node::Quot(a, b) => (a.vars() | b.vars(), mix(mix(7, a.0.hash), b.0.hash)),
            Node::Neg(a) => (a.vars(), mix(8, a.0.hash)),
            Node::Call(f, a) => (a.vars(), mix(mix(9, *f as u64), a.0.hash)),
        };
        Expr(Arc::new(Inner { node, vars, hash }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Bit mask of the coordinates this expression references.
    pub fn vars(&self) -> u32 {
        self.0.vars
    }

    pub fn depends_on(&self, v: VarRef) -> bool {
        self.0.vars & v.bit() != 0
    }

    pub fn constant(c: f64) -> Expr {
        Expr::from_node(Node::Const(normalize_zero(c)))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn named(name: &str, value: f64) -> Expr {
        Expr::from_node(Node::Named(Arc::from(name), value))
    }

    pub fn var(v: VarRef) -> Expr {
        Expr::from_node(Node::Var(v))
    }

    pub fn t(a: usize) -> Expr {
        Expr::var(VarRef::t(a))
    }

    pub fn x(i: usize) -> Expr {
        Expr::var(VarRef::x(i))
    }

    pub fn p(i: usize, a: usize) -> Expr {
        Expr::var(VarRef::p(i, a))
    }

    /// Unnormalized constructors used by the parser to keep the raw tree.
    pub(crate) fn raw(node: Node) -> Expr {
        Expr::from_node(node)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Const(_) | Node::Named(..) | Node::Var(_) => 0,
            Node::Sum(xs) | Node::Product(xs) => xs.iter().map(Expr::size).sum(),
            Node::Pow(b, _) => b.size(),
            Node::Quot(a, b) => a.size() + b.size(),
            Node::Neg(a) | Node::Call(_, a) => a.size(),
        }
    }

    fn rank(&self) -> u8 {
        match self.node() {
            Node::Const(_) => 0,
            Node::Named(..) => 1,
            Node::Var(_) => 2,
            Node::Call(..) => 3,
            Node::Pow(..) => 4,
            Node::Product(_) => 5,
            Node::Sum(_) => 6,
            Node::Quot(..) => 7,
            Node::Neg(_) => 8,
        }
    }
}

fn normalize_zero(c: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Structural total order used to canonicalize sums and products.
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let by_rank = self.rank().cmp(&other.rank());
        if by_rank != Ordering::Equal {
            return by_rank;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.total_cmp(b),
            (Node::Named(a, _), Node::Named(b, _)) => a.cmp(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Call(f, a), Node::Call(g, b)) => f.cmp(g).then_with(|| a.cmp(b)),
            (Node::Pow(a, r), Node::Pow(b, s)) => a.cmp(b).then_with(|| r.cmp(s)),
            (Node::Product(xs), Node::Product(ys)) | (Node::Sum(xs), Node::Sum(ys)) => {
                for (x, y) in xs.iter().zip(ys) {
                    let o = x.cmp(y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                xs.len().cmp(&ys.len())
            }
            (Node::Quot(a, b), Node::Quot(c, d)) => a.cmp(c).then_with(|| b.cmp(d)),
            (Node::Neg(a), Node::Neg(b)) => a.cmp(b),
            _ => unreachable!("ranks matched"),
        }
    }
}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::constant(rhs))
            }
        }
        impl std::ops::$tr<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), Expr::constant(rhs))
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![a, -b]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul(vec![a, Expr::powi(b, -1)]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul(vec![Expr::constant(-1.0), self])
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -(self.clone())
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        Expr::add(iter.collect())
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}
