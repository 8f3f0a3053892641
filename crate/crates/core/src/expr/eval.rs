use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Expr, Func, Node, VarRef};

/// Coordinates of one point of the jet space. `p[i][a]` holds `p_i^a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<Vec<f64>>,
}

impl Point {
    pub fn zeros(m: usize, n: usize) -> Point {
        Point {
            t: vec![0.0; m],
            x: vec![0.0; n],
            p: vec![vec![0.0; m]; n],
        }
    }

    pub fn m(&self) -> usize {
        self.t.len()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, v: VarRef) -> Option<f64> {
        match v {
            VarRef::Temporal(a) => self.t.get(a).copied(),
            VarRef::Spatial(i) => self.x.get(i).copied(),
            VarRef::Momentum { i, a } => self.p.get(i).and_then(|row| row.get(a)).copied(),
        }
    }

    pub fn set(&mut self, v: VarRef, value: f64) {
        match v {
            VarRef::Temporal(a) => self.t[a] = value,
            VarRef::Spatial(i) => self.x[i] = value,
            VarRef::Momentum { i, a } => self.p[i][a] = value,
        }
    }

    /// Copy with one coordinate shifted by `h`.
    pub fn shifted(&self, v: VarRef, h: f64) -> Point {
        let mut out = self.clone();
        let cur = out.get(v).unwrap_or(0.0);
        out.set(v, cur + h);
        out
    }

    /// Shape check against the active dimensions.
    pub fn matches(&self, m: usize, n: usize) -> bool {
        self.t.len() == m && self.x.len() == n && self.p.len() == n && self.p.iter().all(|r| r.len() == m)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error in `{subtree}`: {reason}")]
    Domain { subtree: String, reason: &'static str },
    #[error("point has no coordinate {0}")]
    MissingVar(VarRef),
}

fn domain(e: &Expr, reason: &'static str) -> EvalError {
    EvalError::Domain {
        subtree: e.to_string(),
        reason,
    }
}

/// Values of shared subexpressions at one point.
///
/// Reusing a cache across the components of a tensor evaluates every shared
/// subtree once. A cache is only valid for the point it was filled at.
#[derive(Default)]
pub struct EvalCache {
    values: HashMap<usize, f64>,
}

impl EvalCache {
    pub fn new() -> EvalCache {
        EvalCache::default()
    }
}

impl Expr {
    /// Evaluate in double precision.
    pub fn eval(&self, pt: &Point) -> Result<f64, EvalError> {
        self.eval_cached(pt, &mut EvalCache::new())
    }

    /// Evaluate, memoizing shared subexpressions in `cache`.
    pub fn eval_cached(&self, pt: &Point, cache: &mut EvalCache) -> Result<f64, EvalError> {
        let shared = Arc::strong_count(&self.0) > 1 && !matches!(self.node(), Node::Const(_) | Node::Named(..) | Node::Var(_));
        let key = Arc::as_ptr(&self.0) as usize;
        if shared {
            if let Some(v) = cache.values.get(&key) {
                return Ok(*v);
            }
        }
        let v = self.eval_node(pt, cache)?;
        if shared {
            cache.values.insert(key, v);
        }
        Ok(v)
    }

    fn eval_node(&self, pt: &Point, cache: &mut EvalCache) -> Result<f64, EvalError> {
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Named(_, v) => Ok(*v),
            Node::Var(v) => pt.get(*v).ok_or(EvalError::MissingVar(*v)),
            Node::Sum(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += x.eval_cached(pt, cache)?;
                }
                Ok(acc)
            }
            Node::Product(xs) => {
                let mut acc = 1.0;
                for x in xs {
                    acc *= x.eval_cached(pt, cache)?;
                }
                Ok(acc)
            }
            Node::Pow(b, r) => {
                let base = b.eval_cached(pt, cache)?;
                let (k, d) = (*r.numer(), *r.denom());
                if base == 0.0 && k < 0 {
                    return Err(domain(self, "division by zero"));
                }
                let v = if d == 1 {
                    match i32::try_from(k) {
                        Ok(k) => base.powi(k),
                        Err(_) => base.powf(k as f64),
                    }
                } else if base >= 0.0 {
                    base.powf(k as f64 / d as f64)
                } else if d % 2 == 1 {
                    let mag = (-base).powf(k as f64 / d as f64);
                    if k % 2 == 0 {
                        mag
                    } else {
                        -mag
                    }
                } else {
                    return Err(domain(self, "even root of a negative number"));
                };
                finite(self, v)
            }
            Node::Quot(a, b) => {
                let num = a.eval_cached(pt, cache)?;
                let den = b.eval_cached(pt, cache)?;
                if den == 0.0 {
                    return Err(domain(self, "division by zero"));
                }
                finite(self, num / den)
            }
            Node::Neg(a) => Ok(-a.eval_cached(pt, cache)?),
            Node::Call(f, a) => {
                let u = a.eval_cached(pt, cache)?;
                let v = match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tan => u.tan(),
                    Func::Exp => u.exp(),
                    Func::Ln => {
                        if u <= 0.0 {
                            return Err(domain(self, "logarithm of a non-positive number"));
                        }
                        u.ln()
                    }
                    Func::Sqrt => {
                        if u < 0.0 {
                            return Err(domain(self, "square root of a negative number"));
                        }
                        u.sqrt()
                    }
                    Func::Sinh => u.sinh(),
                    Func::Cosh => u.cosh(),
                };
                finite(self, v)
            }
        }
    }
}

fn finite(e: &Expr, v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(domain(e, "non-finite result"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn at(src: &str, set: &[(VarRef, f64)]) -> Result<f64, EvalError> {
        let mut pt = Point::zeros(2, 2);
        for (v, x) in set {
            pt.set(*v, *x);
        }
        parse_expr(src, (2, 2)).unwrap().eval(&pt)
    }

    #[test]
    fn constants_and_inverse_pairs() {
        assert_eq!(at("pi", &[]).unwrap(), std::f64::consts::PI);
        assert_eq!(at("0", &[]).unwrap(), 0.0);
        let v = at("ln(exp(t1))", &[(VarRef::t(0), 2.5)]).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
        let v = at("sin(x1)^2 + cos(x1)^2", &[(VarRef::x(0), 0.7)]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_name_the_subtree() {
        match at("1/x1", &[]) {
            Err(EvalError::Domain { subtree, .. }) => assert_eq!(subtree, "1/x1"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(at("ln(x1 - 1)", &[]), Err(EvalError::Domain { .. })));
        assert!(matches!(at("sqrt(-1 - x2)", &[]), Err(EvalError::Domain { .. })));
        assert!(at("(-8)^(1/3)", &[]).unwrap() + 2.0 < 1e-12);
    }
}
