use std::fmt::{self, Write};

use super::{Expr, Node, Rational64};

// binding levels, loosest first
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f, 0)
    }
}

pub fn format_number(c: f64) -> String {
    let a = c.abs();
    if c == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) {
        format!("{c}")
    } else {
        format!("{c:e}")
    }
}

fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) if *c < 0.0 => UNARY,
        Node::Const(_) | Node::Named(..) | Node::Var(_) | Node::Call(..) => ATOM,
        Node::Sum(_) => SUM,
        Node::Product(xs) => match xs[0].as_const() {
            Some(c) if c < 0.0 => UNARY.min(PRODUCT),
            _ => PRODUCT,
        },
        Node::Pow(_, r) if *r.numer() < 0 => PRODUCT,
        Node::Pow(..) => POWER,
        Node::Quot(..) => PRODUCT,
        Node::Neg(_) => UNARY,
    }
}

fn write_expr<W: Write>(e: &Expr, out: &mut W, min: u8) -> fmt::Result {
    if level(e) < min {
        out.write_char('(')?;
        write_bare(e, out)?;
        return out.write_char(')');
    }
    write_bare(e, out)
}

fn is_negative(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => *c < 0.0,
        Node::Product(xs) => xs[0].as_const().is_some_and(|c| c < 0.0),
        Node::Neg(_) => true,
        _ => false,
    }
}

fn negated(e: &Expr) -> Expr {
    match e.node() {
        Node::Neg(a) => a.clone(),
        _ => -e.clone(),
    }
}

fn write_exponent<W: Write>(r: Rational64, out: &mut W) -> fmt::Result {
    if r.is_integer() && *r.numer() >= 0 {
        write!(out, "{}", r.numer())
    } else if r.is_integer() {
        write!(out, "({})", r.numer())
    } else {
        write!(out, "({}/{})", r.numer(), r.denom())
    }
}

fn write_bare<W: Write>(e: &Expr, out: &mut W) -> fmt::Result {
    match e.node() {
        Node::Const(c) => out.write_str(&format_number(*c)),
        Node::Named(name, _) => out.write_str(name),
        Node::Var(v) => write!(out, "{v}"),
        Node::Call(f, a) => {
            write!(out, "{}(", f.name())?;
            write_expr(a, out, 0)?;
            out.write_char(')')
        }
        Node::Sum(xs) => {
            for (k, x) in xs.iter().enumerate() {
                if k == 0 {
                    write_expr(x, out, SUM)?;
                } else if is_negative(x) {
                    out.write_str(" - ")?;
                    write_expr(&negated(x), out, PRODUCT)?;
                } else {
                    out.write_str(" + ")?;
                    write_expr(x, out, PRODUCT)?;
                }
            }
            Ok(())
        }
        Node::Product(xs) => {
            let (coeff, rest) = match xs[0].as_const() {
                Some(c) => (c, &xs[1..]),
                None => (1.0, &xs[..]),
            };
            let mut num: Vec<&Expr> = Vec::new();
            let mut den: Vec<(Expr, Rational64)> = Vec::new();
            for x in rest {
                match x.node() {
                    Node::Pow(b, r) if *r.numer() < 0 => den.push((b.clone(), -r)),
                    _ => num.push(x),
                }
            }
            let mut first = true;
            if coeff == -1.0 && !num.is_empty() {
                out.write_char('-')?;
            } else if coeff != 1.0 || num.is_empty() {
                out.write_str(&format_number(coeff))?;
                first = false;
            }
            for x in num {
                if !first {
                    out.write_char('*')?;
                }
                write_expr(x, out, UNARY)?;
                first = false;
            }
            for (b, r) in den {
                out.write_char('/')?;
                if r == Rational64::from_integer(1) {
                    write_expr(&b, out, ATOM)?;
                } else {
                    write_expr(&b, out, ATOM)?;
                    out.write_char('^')?;
                    write_exponent(r, out)?;
                }
            }
            Ok(())
        }
        Node::Pow(b, r) => {
            if *r.numer() < 0 {
                out.write_str("1/")?;
                write_expr(b, out, ATOM)?;
                let r = -r;
                if r != Rational64::from_integer(1) {
                    out.write_char('^')?;
                    write_exponent(r, out)?;
                }
                Ok(())
            } else {
                write_expr(b, out, ATOM)?;
                out.write_char('^')?;
                write_exponent(*r, out)
            }
        }
        Node::Quot(a, b) => {
            write_expr(a, out, PRODUCT)?;
            out.write_char('/')?;
            write_expr(b, out, POWER)
        }
        Node::Neg(a) => {
            out.write_char('-')?;
            write_expr(a, out, UNARY)
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse_expr;

    fn roundtrip(src: &str) -> String {
        parse_expr(src, (2, 2)).unwrap().simplify().to_string()
    }

    #[test]
    fn readable_forms() {
        assert_eq!(roundtrip("x1 + x1"), "2*x1");
        assert_eq!(roundtrip("1/sin(x1)^2"), "1/sin(x1)^2");
        assert_eq!(roundtrip("-x1*x2"), "-x1*x2");
        assert_eq!(roundtrip("t1 - 2*x1"), "t1 - 2*x1");
        assert_eq!(roundtrip("sqrt(x2)"), "x2^(1/2)");
        assert_eq!(roundtrip("(x1 + 1)^2"), "(x1 + 1)^2");
        assert_eq!(roundtrip("0.5*p1_2"), "0.5*p1_2");
    }

    #[test]
    fn tiny_constants_use_exponent_form() {
        assert_eq!(roundtrip("1e-20*x1"), "1e-20*x1");
    }
}
