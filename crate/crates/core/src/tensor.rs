//! Dense d-tensors with typed index slots.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{EvalCache, EvalError, Expr, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Temporal,
    Spatial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct IndexSlot {
    pub kind: Kind,
    pub variance: Variance,
}

pub const T_UP: IndexSlot = IndexSlot {
    kind: Kind::Temporal,
    variance: Variance::Up,
};
pub const T_DOWN: IndexSlot = IndexSlot {
    kind: Kind::Temporal,
    variance: Variance::Down,
};
pub const S_UP: IndexSlot = IndexSlot {
    kind: Kind::Spatial,
    variance: Variance::Up,
};
pub const S_DOWN: IndexSlot = IndexSlot {
    kind: Kind::Spatial,
    variance: Variance::Down,
};

impl IndexSlot {
    pub fn extent(self, m: usize, n: usize) -> usize {
        match self.kind {
            Kind::Temporal => m,
            Kind::Spatial => n,
        }
    }
}

/// All multi-indices of the given extents in row-major order.
pub fn multi_indices(extents: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = extents.iter().product();
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    let mut cur = vec![0; extents.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for k in (0..extents.len()).rev() {
            cur[k] += 1;
            if cur[k] < extents[k] {
                break;
            }
            cur[k] = 0;
        }
    }
    out
}

/// Named dense array of expressions, row-major over its slots.
#[derive(Clone, Debug, PartialEq)]
pub struct DTensor {
    pub name: String,
    pub slots: Vec<IndexSlot>,
    m: usize,
    n: usize,
    comps: Vec<Expr>,
}

impl DTensor {
    /// Build every component with `f`, in parallel.
    pub fn from_fn<F>(name: impl Into<String>, slots: &[IndexSlot], m: usize, n: usize, f: F) -> DTensor
    where
        F: Fn(&[usize]) -> Expr + Sync,
    {
        let extents: Vec<usize> = slots.iter().map(|s| s.extent(m, n)).collect();
        let comps = multi_indices(&extents).par_iter().map(|idx| f(idx)).collect();
        DTensor {
            name: name.into(),
            slots: slots.to_vec(),
            m,
            n,
            comps,
        }
    }

    pub fn zeros(name: impl Into<String>, slots: &[IndexSlot], m: usize, n: usize) -> DTensor {
        let extents: Vec<usize> = slots.iter().map(|s| s.extent(m, n)).collect();
        DTensor {
            name: name.into(),
            slots: slots.to_vec(),
            m,
            n,
            comps: vec![Expr::zero(); extents.iter().product()],
        }
    }

    pub fn scalar(name: impl Into<String>, value: Expr, m: usize, n: usize) -> DTensor {
        DTensor {
            name: name.into(),
            slots: Vec::new(),
            m,
            n,
            comps: vec![value],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn extents(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.extent(self.m, self.n)).collect()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.slots.len(), "index rank mismatch for `{}`", self.name);
        let mut off = 0;
        for (k, s) in idx.iter().zip(&self.slots) {
            let e = s.extent(self.m, self.n);
            assert!(*k < e, "index {idx:?} out of range for `{}`", self.name);
            off = off * e + k;
        }
        off
    }

    pub fn at(&self, idx: &[usize]) -> &Expr {
        &self.comps[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Expr) {
        let off = self.offset(idx);
        self.comps[off] = value;
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn indices(&self) -> Vec<Vec<usize>> {
        multi_indices(&self.extents())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &Expr)> {
        self.indices().into_iter().zip(self.comps.iter())
    }

    pub fn renamed(mut self, name: impl Into<String>) -> DTensor {
        self.name = name.into();
        self
    }

    /// Same signature, components mapped by `f(index, component)`.
    pub fn map<F>(&self, name: impl Into<String>, f: F) -> DTensor
    where
        F: Fn(&[usize], &Expr) -> Expr + Sync,
    {
        let idx = self.indices();
        let comps = idx.par_iter().zip(self.comps.par_iter()).map(|(i, e)| f(i, e)).collect();
        DTensor {
            name: name.into(),
            slots: self.slots.clone(),
            m: self.m,
            n: self.n,
            comps,
        }
    }

    /// Componentwise `self - other`; signatures must agree.
    pub fn minus(&self, other: &DTensor, name: impl Into<String>) -> DTensor {
        assert_eq!(self.slots, other.slots, "signature mismatch: `{}` vs `{}`", self.name, other.name);
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect();
        DTensor {
            name: name.into(),
            slots: self.slots.clone(),
            m: self.m,
            n: self.n,
            comps,
        }
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn eval(&self, pt: &Point) -> Result<NumTensor, EvalError> {
        self.eval_cached(pt, &mut EvalCache::new())
    }

    pub fn eval_cached(&self, pt: &Point, cache: &mut EvalCache) -> Result<NumTensor, EvalError> {
        let values = self.comps.iter().map(|e| e.eval_cached(pt, cache)).collect::<Result<_, _>>()?;
        Ok(NumTensor {
            name: self.name.clone(),
            slots: self.slots.clone(),
            extents: self.extents(),
            values,
        })
    }

    /// Stable text form, one `name[i,j,...] = expr` line per component
    /// with one-based indices.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (idx, e) in self.iter() {
            out.push_str(&format!("{}{} = {}\n", self.name, bracket(&idx), e));
        }
        out
    }
}

pub(crate) fn bracket(idx: &[usize]) -> String {
    if idx.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = idx.iter().map(|k| (k + 1).to_string()).collect();
    format!("[{}]", parts.join(","))
}

impl fmt::Display for DTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A [`DTensor`] evaluated at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumTensor {
    pub name: String,
    pub slots: Vec<IndexSlot>,
    pub extents: Vec<usize>,
    pub values: Vec<f64>,
}

impl NumTensor {
    pub fn at(&self, idx: &[usize]) -> f64 {
        let mut off = 0;
        for (k, e) in idx.iter().zip(&self.extents) {
            off = off * e + k;
        }
        self.values[off]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (idx, v) in multi_indices(&self.extents).iter().zip(&self.values) {
            out.push_str(&format!("{}{} = {}\n", self.name, bracket(idx), crate::expr::format_number(*v)));
        }
        if self.extents.is_empty() {
            out = format!("{} = {}\n", self.name, crate::expr::format_number(self.values[0]));
        }
        out
    }
}
