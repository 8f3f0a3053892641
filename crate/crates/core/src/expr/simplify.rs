use super::{Expr, Func, Node, Rational64};

impl Expr {
    /// Normalized sum.
    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut konst = 0.0;
        let mut parts: Vec<(Expr, f64)> = Vec::with_capacity(terms.len());
        for t in terms {
            push_term(t, &mut konst, &mut parts);
        }
        parts.sort_by(|a, b| a.0.cmp(&b.0));

        let mut out: Vec<Expr> = Vec::with_capacity(parts.len() + 1);
        let mut iter = parts.into_iter().peekable();
        while let Some((rest, mut c)) = iter.next() {
            while let Some((next, d)) = iter.peek() {
                if *next == rest {
                    c += *d;
                    iter.next();
                } else {
                    break;
                }
            }
            if c != 0.0 {
                out.push(scale(rest, c));
            }
        }
        if konst != 0.0 {
            out.push(Expr::constant(konst));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::from_node(Node::Sum(out)),
        }
    }

    /// Normalized product.
    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut coeff = 1.0;
        let mut bases: Vec<(Expr, Rational64)> = Vec::with_capacity(factors.len());
        let mut exp_args: Vec<Expr> = Vec::new();
        for f in factors {
            push_factor(f, &mut coeff, &mut bases, &mut exp_args);
        }
        if coeff == 0.0 {
            return Expr::zero();
        }
        bases.sort_by(|a, b| a.0.cmp(&b.0));

        let mut rebuilt: Vec<Expr> = Vec::with_capacity(bases.len() + 1);
        let mut iter = bases.into_iter().peekable();
        while let Some((base, mut r)) = iter.next() {
            while let Some((next, s)) = iter.peek() {
                if *next == base {
                    r += *s;
                    iter.next();
                } else {
                    break;
                }
            }
            if r != Rational64::from_integer(0) {
                rebuilt.push(Expr::pow(base, r));
            }
        }
        if !exp_args.is_empty() {
            let arg = Expr::add(exp_args);
            if !arg.is_zero() {
                rebuilt.push(Expr::call(Func::Exp, arg));
            }
        }

        // pow/call may hand back constants, products or exponentials that
        // have to be merged again
        let needs_pass = rebuilt.iter().any(|f| {
            matches!(f.node(), Node::Const(_) | Node::Product(_))
        }) || rebuilt
            .iter()
            .filter(|f| matches!(f.node(), Node::Call(Func::Exp, _)))
            .count()
            > 1;
        if needs_pass {
            rebuilt.push(Expr::constant(coeff));
            return Expr::mul(rebuilt);
        }

        rebuilt.sort();
        if coeff == 1.0 {
            match rebuilt.len() {
                0 => Expr::one(),
                1 => rebuilt.pop().unwrap(),
                _ => Expr::from_node(Node::Product(rebuilt)),
            }
        } else if rebuilt.is_empty() {
            Expr::constant(coeff)
        } else {
            let mut xs = Vec::with_capacity(rebuilt.len() + 1);
            xs.push(Expr::constant(coeff));
            xs.extend(rebuilt);
            Expr::from_node(Node::Product(xs))
        }
    }

    /// Normalized power with a rational exponent.
    pub fn pow(base: Expr, r: Rational64) -> Expr {
        if r == Rational64::from_integer(0) {
            return Expr::one();
        }
        if r == Rational64::from_integer(1) {
            return base;
        }
        match base.node() {
            Node::Const(c) => {
                let c = *c;
                let folded = if r.is_integer() {
                    let n = *r.numer();
                    if c == 0.0 && n < 0 {
                        None
                    } else {
                        i32::try_from(n).ok().map(|n| c.powi(n))
                    }
                } else if c > 0.0 {
                    Some(c.powf(*r.numer() as f64 / *r.denom() as f64))
                } else {
                    None
                };
                match folded {
                    Some(v) if v.is_finite() => Expr::constant(v),
                    _ => Expr::from_node(Node::Pow(base, r)),
                }
            }
            Node::Pow(inner, s) if r.is_integer() => Expr::pow(inner.clone(), s * r),
            Node::Product(xs) if r.is_integer() => {
                Expr::mul(xs.iter().map(|x| Expr::pow(x.clone(), r)).collect())
            }
            Node::Call(Func::Exp, u) => Expr::call(
                Func::Exp,
                Expr::mul(vec![Expr::constant(rational_to_f64(r)), u.clone()]),
            ),
            _ => Expr::from_node(Node::Pow(base, r)),
        }
    }

    pub fn powi(base: Expr, n: i64) -> Expr {
        Expr::pow(base, Rational64::from_integer(n))
    }

    /// Normalized function application.
    pub fn call(f: Func, arg: Expr) -> Expr {
        if f == Func::Sqrt {
            return Expr::pow(arg, Rational64::new(1, 2));
        }
        if let Some(c) = arg.as_const() {
            let v = match f {
                Func::Sin => Some(c.sin()),
                Func::Cos => Some(c.cos()),
                Func::Tan => Some(c.tan()),
                Func::Exp => Some(c.exp()),
                Func::Ln if c > 0.0 => Some(c.ln()),
                Func::Sinh => Some(c.sinh()),
                Func::Cosh => Some(c.cosh()),
                _ => None,
            };
            if let Some(v) = v.filter(|v| v.is_finite()) {
                return Expr::constant(v);
            }
        }
        if f == Func::Ln {
            if let Node::Call(Func::Exp, u) = arg.node() {
                return u.clone();
            }
        }
        Expr::from_node(Node::Call(f, arg))
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::call(Func::Ln, self.clone())
    }

    /// Rebuild the tree through the normalizing constructors: constant
    /// folding, 0/1 absorption, flattening and like-term collection.
    /// Idempotent.
    pub fn simplify(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Named(..) | Node::Var(_) => self.clone(),
            Node::Sum(xs) => Expr::add(xs.iter().map(Expr::simplify).collect()),
            Node::Product(xs) => Expr::mul(xs.iter().map(Expr::simplify).collect()),
            Node::Pow(b, r) => Expr::pow(b.simplify(), *r),
            Node::Quot(a, b) => Expr::mul(vec![a.simplify(), Expr::powi(b.simplify(), -1)]),
            Node::Neg(a) => -a.simplify(),
            Node::Call(f, a) => Expr::call(*f, a.simplify()),
        }
    }
}

pub(crate) fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn push_term(t: Expr, konst: &mut f64, parts: &mut Vec<(Expr, f64)>) {
    match t.node() {
        Node::Const(c) => *konst += c,
        Node::Sum(xs) => {
            for x in xs {
                push_term(x.clone(), konst, parts);
            }
        }
        Node::Product(xs) => match xs[0].as_const() {
            Some(c) if xs.len() == 2 && matches!(xs[1].node(), Node::Sum(_)) => {
                let Node::Sum(ys) = xs[1].node() else { unreachable!() };
                for y in ys {
                    push_term(Expr::mul(vec![Expr::constant(c), y.clone()]), konst, parts);
                }
            }
            Some(c) => {
                let rest = if xs.len() == 2 {
                    xs[1].clone()
                } else {
                    Expr::from_node(Node::Product(xs[1..].to_vec()))
                };
                parts.push((rest, c));
            }
            None => parts.push((t.clone(), 1.0)),
        },
        _ => parts.push((t, 1.0)),
    }
}

fn scale(rest: Expr, c: f64) -> Expr {
    if c == 1.0 {
        return rest;
    }
    let mut xs = vec![Expr::constant(c)];
    match rest.node() {
        Node::Product(ys) => xs.extend(ys.iter().cloned()),
        _ => xs.push(rest),
    }
    Expr::from_node(Node::Product(xs))
}

fn push_factor(
    f: Expr,
    coeff: &mut f64,
    bases: &mut Vec<(Expr, Rational64)>,
    exp_args: &mut Vec<Expr>,
) {
    match f.node() {
        Node::Const(c) => *coeff *= c,
        Node::Product(xs) => {
            for x in xs {
                push_factor(x.clone(), coeff, bases, exp_args);
            }
        }
        Node::Pow(b, r) => bases.push((b.clone(), *r)),
        Node::Call(Func::Exp, u) => exp_args.push(u.clone()),
        _ => bases.push((f, Rational64::from_integer(1))),
    }
}
