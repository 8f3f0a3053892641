use std::collections::HashMap;
use std::sync::Arc;

use super::{Expr, Func, Node, Rational64, VarRef};

impl Expr {
    /// Exact partial derivative with respect to a coordinate.
    ///
    /// The result is built with the normalizing constructors, so it is
    /// already simplified whenever `self` is. Shared subexpressions are
    /// differentiated once.
    pub fn diff(&self, v: VarRef) -> Expr {
        self.diff_memo(v, &mut HashMap::new())
    }

    fn diff_memo(&self, v: VarRef, memo: &mut HashMap<usize, Expr>) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        let shared = Arc::strong_count(&self.0) > 1;
        let key = Arc::as_ptr(&self.0) as usize;
        if shared {
            if let Some(d) = memo.get(&key) {
                return d.clone();
            }
        }
        let d = self.diff_node(v, memo);
        if shared {
            memo.insert(key, d.clone());
        }
        d
    }

    fn diff_node(&self, v: VarRef, memo: &mut HashMap<usize, Expr>) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Named(..) => Expr::zero(),
            Node::Var(_) => Expr::one(),
            Node::Sum(xs) => Expr::add(xs.iter().map(|x| x.diff_memo(v, memo)).collect::<Vec<_>>()),
            Node::Product(xs) => {
                let mut terms = Vec::new();
                for (k, x) in xs.iter().enumerate() {
                    if !x.depends_on(v) {
                        continue;
                    }
                    let mut fs: Vec<Expr> = xs.to_vec();
                    fs[k] = x.diff_memo(v, memo);
                    terms.push(Expr::mul(fs));
                }
                Expr::add(terms)
            }
            Node::Pow(b, r) => Expr::mul(vec![
                Expr::constant(*r.numer() as f64 / *r.denom() as f64),
                Expr::pow(b.clone(), r - Rational64::from_integer(1)),
                b.diff_memo(v, memo),
            ]),
            Node::Quot(a, b) => {
                let da = a.diff_memo(v, memo);
                let db = b.diff_memo(v, memo);
                da * Expr::powi(b.clone(), -1) - Expr::mul(vec![a.clone(), db, Expr::powi(b.clone(), -2)])
            }
            Node::Neg(a) => -a.diff_memo(v, memo),
            Node::Call(f, u) => {
                let outer = match f {
                    Func::Sin => u.cos(),
                    Func::Cos => -u.sin(),
                    Func::Tan => Expr::powi(u.cos(), -2),
                    Func::Exp => Expr::call(Func::Exp, u.clone()),
                    Func::Ln => Expr::powi(u.clone(), -1),
                    Func::Sqrt => Expr::pow(u.clone(), Rational64::new(-1, 2)) * 0.5,
                    Func::Sinh => Expr::call(Func::Cosh, u.clone()),
                    Func::Cosh => Expr::call(Func::Sinh, u.clone()),
                };
                outer * u.diff_memo(v, memo)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Point};

    fn e(src: &str) -> Expr {
        parse_expr(src, (2, 2)).unwrap().simplify()
    }

    #[test]
    fn table_derivatives() {
        assert_eq!(e("sin(x1)").diff(VarRef::x(0)), e("cos(x1)"));
        assert_eq!(e("t1^2").diff(VarRef::x(0)), Expr::zero());
        assert_eq!(e("x1*x2").diff(VarRef::x(0)), Expr::x(1));
        assert_eq!(e("ln(x1)").diff(VarRef::x(0)), e("1/x1"));
    }

    #[test]
    fn matches_central_difference() {
        // exp(2*t1)*p1_1 at t1 = 0.3, p1_1 = 1.2
        let f = e("exp(2*t1)*p1_1");
        let d = f.diff(VarRef::t(0));
        let mut pt = Point::zeros(2, 2);
        pt.t[0] = 0.3;
        pt.p[0][0] = 1.2;
        let h = 1e-6;
        let mut plus = pt.clone();
        plus.t[0] += h;
        let mut minus = pt.clone();
        minus.t[0] -= h;
        let fd = (f.eval(&plus).unwrap() - f.eval(&minus).unwrap()) / (2.0 * h);
        assert!((d.eval(&pt).unwrap() - fd).abs() < 1e-7);
    }

    #[test]
    fn raw_quotient_tree() {
        let raw = parse_expr("x1/(1 + x2)", (2, 2)).unwrap();
        let d = raw.diff(VarRef::x(1)).simplify();
        let mut pt = Point::zeros(2, 2);
        pt.x = vec![0.4, 0.7];
        let expect = -0.4 / (1.7f64 * 1.7);
        assert!((d.eval(&pt).unwrap() - expect).abs() < 1e-14);
    }
}
