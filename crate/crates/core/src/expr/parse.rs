//! Pratt parser for the scalar expression grammar.
//!
//! Precedence, tightest first: `^` (right associative), unary `-`,
//! `*` and `/`, then `+` and `-`. Variables are `t<a>`, `x<i>` and
//! `p<i>_<a>` with one-based indices; `pi` and `e` are built in.

use std::collections::BTreeMap;

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul};
use thiserror::Error;

use super::{Expr, Func, Node, Rational64, VarRef, MAX_DIM};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("index out of range at {pos}: `{name}` with (m, n) = ({m}, {n})")]
    IndexOutOfRange { name: String, pos: usize, m: usize, n: usize },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn syntax(pos: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { pos, msg: msg.into() }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        if c.is_ascii_whitespace() {
            k += 1;
            continue;
        }
        let start = k;
        if c.is_ascii_digit() {
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            if k + 1 < bytes.len() && bytes[k] == b'.' && bytes[k + 1].is_ascii_digit() {
                k += 1;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
            }
            if k < bytes.len() && (bytes[k] == b'e' || bytes[k] == b'E') {
                let mut j = k + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    k = j;
                }
            }
            let text = &src[start..k];
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(start, format!("bad number `{text}`")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_') {
                k += 1;
            }
            out.push((Tok::Ident(src[start..k].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(syntax(start, format!("unexpected character `{c}`"))),
            };
            out.push((tok, start));
            k += c.len_utf8();
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    m: usize,
    n: usize,
    constants: &'a BTreeMap<String, f64>,
}

const BP_ADD: u8 = 10;
const BP_MUL: u8 = 20;
const BP_NEG: u8 = 30;
const BP_POW: u8 = 40;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        while let Tok::Op(op) = *self.peek() {
            let (lbp, rbp) = match op {
                '+' | '-' => (BP_ADD, BP_ADD),
                '*' | '/' => (BP_MUL, BP_MUL),
                '^' => (BP_POW, BP_POW - 1),
                _ => unreachable!(),
            };
            if lbp <= min_bp {
                break;
            }
            let op_pos = self.pos();
            self.bump();
            let rhs = self.expr(rbp)?;
            lhs = match op {
                '+' => Expr::raw(Node::Sum(vec![lhs, rhs])),
                '-' => Expr::raw(Node::Sum(vec![lhs, Expr::raw(Node::Neg(rhs))])),
                '*' => Expr::raw(Node::Product(vec![lhs, rhs])),
                '/' => Expr::raw(Node::Quot(lhs, rhs)),
                '^' => {
                    let r = const_rational(&rhs).ok_or_else(|| {
                        syntax(op_pos, "exponent must be an integer or rational constant; use exp/ln for general powers")
                    })?;
                    Expr::raw(Node::Pow(lhs, r))
                }
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::raw(Node::Const(v))),
            Tok::Op('-') => {
                let arg = self.expr(BP_NEG)?;
                Ok(Expr::raw(Node::Neg(arg)))
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                match self.bump() {
                    (Tok::RParen, _) => Ok(inner),
                    (_, p) => Err(syntax(p, "expected `)`")),
                }
            }
            Tok::Ident(name) => self.ident(name, pos),
            Tok::End => Err(syntax(pos, "unexpected end of input")),
            other => Err(syntax(pos, format!("unexpected token {other:?}"))),
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Expr, ParseError> {
        if let Some(f) = Func::from_name(&name) {
            if *self.peek() != Tok::LParen {
                return Err(syntax(self.pos(), format!("`{name}` must be called with parentheses")));
            }
            self.bump();
            let arg = self.expr(0)?;
            return match self.bump() {
                (Tok::RParen, _) => Ok(Expr::raw(Node::Call(f, arg))),
                (_, p) => Err(syntax(p, "expected `)` after function argument")),
            };
        }
        if let Some(v) = self.variable(&name, pos)? {
            return Ok(Expr::var(v));
        }
        match name.as_str() {
            "pi" => Ok(Expr::named("pi", std::f64::consts::PI)),
            "e" => Ok(Expr::named("e", std::f64::consts::E)),
            _ => match self.constants.get(&name) {
                Some(v) => Ok(Expr::named(&name, *v)),
                None => Err(ParseError::UnknownIdentifier { name, pos }),
            },
        }
    }

    fn variable(&self, name: &str, pos: usize) -> Result<Option<VarRef>, ParseError> {
        let (head, tail) = name.split_at(1);
        let index = |s: &str| -> Option<usize> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            s.parse().ok()
        };
        let v = match head {
            "t" | "x" => match index(tail) {
                Some(k) => {
                    if k == 0 {
                        return Err(syntax(pos, format!("`{name}`: indices start at 1")));
                    }
                    if head == "t" {
                        VarRef::t(k - 1)
                    } else {
                        VarRef::x(k - 1)
                    }
                }
                None => return Ok(None),
            },
            "p" => {
                let Some((i, a)) = tail.split_once('_') else {
                    return Ok(None);
                };
                match (index(i), index(a)) {
                    (Some(i), Some(a)) => {
                        if i == 0 || a == 0 {
                            return Err(syntax(pos, format!("`{name}`: indices start at 1")));
                        }
                        VarRef::p(i - 1, a - 1)
                    }
                    _ => return Ok(None),
                }
            }
            _ => return Ok(None),
        };
        if !v.in_range(self.m, self.n) {
            return Err(ParseError::IndexOutOfRange {
                name: name.to_string(),
                pos,
                m: self.m,
                n: self.n,
            });
        }
        Ok(Some(v))
    }
}

/// Fold a constant exponent tree to a rational.
fn const_rational(e: &Expr) -> Option<Rational64> {
    match e.node() {
        Node::Const(c) => f64_to_rational(*c),
        Node::Neg(a) => const_rational(a).map(|r| -r),
        Node::Sum(xs) => xs.iter().try_fold(Rational64::from_integer(0), |acc, x| {
            const_rational(x).and_then(|r| acc.checked_add(&r))
        }),
        Node::Product(xs) => xs.iter().try_fold(Rational64::from_integer(1), |acc, x| {
            const_rational(x).and_then(|r| acc.checked_mul(&r))
        }),
        Node::Quot(a, b) => {
            let (a, b) = (const_rational(a)?, const_rational(b)?);
            if b == Rational64::from_integer(0) {
                None
            } else {
                a.checked_div(&b)
            }
        }
        Node::Pow(b, r) if r.is_integer() => {
            let b = const_rational(b)?;
            let k = i32::try_from(*r.numer()).ok()?;
            if b == Rational64::from_integer(0) && k < 0 {
                return None;
            }
            Some(b.pow(k))
        }
        _ => None,
    }
}

fn f64_to_rational(c: f64) -> Option<Rational64> {
    if !c.is_finite() || c.abs() > 1e15 {
        return None;
    }
    for den in 1..=1000i64 {
        let num = (c * den as f64).round();
        if (num / den as f64 - c).abs() <= 1e-12 * c.abs().max(1.0) {
            return Some(Rational64::new(num as i64, den));
        }
    }
    None
}

/// Parse `src` for a space with `dims = (m, n)`.
pub fn parse_expr(src: &str, dims: (usize, usize)) -> Result<Expr, ParseError> {
    parse_expr_with(src, dims, &BTreeMap::new())
}

/// Parse with additional named constants (for example `mass` and `c`).
pub fn parse_expr_with(
    src: &str,
    dims: (usize, usize),
    constants: &BTreeMap<String, f64>,
) -> Result<Expr, ParseError> {
    let (m, n) = dims;
    if m > MAX_DIM || n > MAX_DIM {
        return Err(syntax(0, format!("dimensions ({m}, {n}) exceed {MAX_DIM}")));
    }
    let mut p = Parser {
        toks: lex(src)?,
        at: 0,
        m,
        n,
        constants,
    };
    let e = p.expr(0)?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => Err(syntax(p.pos(), "unexpected trailing input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("2^3^2", (1, 1)).unwrap().simplify();
        assert_eq!(e.as_const(), Some(512.0));
        let e = parse_expr("-2^2", (1, 1)).unwrap().simplify();
        assert_eq!(e.as_const(), Some(-4.0));
        let e = parse_expr("8/2/2 - 1 - 1", (1, 1)).unwrap().simplify();
        assert_eq!(e.as_const(), Some(0.0));
        let e = parse_expr("2^-1*4", (1, 1)).unwrap().simplify();
        assert_eq!(e.as_const(), Some(2.0));
    }

    #[test]
    fn momentum_variables() {
        let e = parse_expr("p1_2 * t1", (2, 2)).unwrap();
        match e.node() {
            Node::Product(xs) => {
                assert_eq!(xs[0], Expr::p(0, 1));
                assert_eq!(xs[1], Expr::t(0));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_expr("p1_3", (2, 2)),
            Err(ParseError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            parse_expr("x3", (2, 2)),
            Err(ParseError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_expr("x1 + * 2", (2, 2)) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_expr("x1^x2", (2, 2)),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("mass*x1", (2, 2)),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(parse_expr("(x1", (2, 2)).is_err());
        assert!(parse_expr("sin x1", (2, 2)).is_err());
    }

    #[test]
    fn named_constants() {
        let mut k = BTreeMap::new();
        k.insert("mass".to_string(), 2.0);
        let e = parse_expr_with("1/(4*mass)", (1, 1), &k).unwrap().simplify();
        assert_eq!(e.eval(&crate::expr::Point::zeros(1, 1)).unwrap(), 0.125);
        assert_eq!(e.to_string(), "0.25/mass");
    }

    #[test]
    fn decimal_exponents_become_rationals() {
        let e = parse_expr("x1^0.5", (1, 1)).unwrap();
        assert!(matches!(e.node(), Node::Pow(_, r) if *r == Rational64::new(1, 2)));
        let e = parse_expr("1.5e2", (1, 1)).unwrap();
        assert_eq!(e.as_const(), Some(150.0));
    }
}
