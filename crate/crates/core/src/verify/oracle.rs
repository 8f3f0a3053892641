//! Numeric first-principles recomputation of the connection and curvature
//! objects. Only the expression evaluator is shared with the symbolic path:
//! metrics are evaluated entrywise, inverted with LU and differentiated by
//! Richardson-refined central differences.

use nalgebra::DMatrix;

use crate::expr::{EvalCache, EvalError, Expr, Point, VarRef};
use crate::space::{HamiltonSpace, Matrix};

/// Step of differences applied to metric entries.
pub const ORACLE_INNER_STEP: f64 = 1e-4;
/// Step of differences applied to already differentiated quantities.
pub const ORACLE_OUTER_STEP: f64 = 1e-3;

/// Central difference of a vector-valued function along `v`, with one
/// Richardson refinement: `(4 D(h/2) - D(h)) / 3`.
pub fn central_difference<F>(f: F, pt: &Point, v: VarRef, h: f64) -> Result<Vec<f64>, EvalError>
where
    F: Fn(&Point) -> Result<Vec<f64>, EvalError>,
{
    let diff = |h: f64| -> Result<Vec<f64>, EvalError> {
        let up = f(&pt.shifted(v, h))?;
        let down = f(&pt.shifted(v, -h))?;
        Ok(up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let coarse = diff(h)?;
    let fine = diff(h / 2.0)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

fn singular() -> EvalError {
    EvalError::Domain {
        subtree: "metric".into(),
        reason: "numerically singular",
    }
}

fn eval_matrix(mat: &Matrix, pt: &Point) -> Result<DMatrix<f64>, EvalError> {
    let d = mat.len();
    let mut cache = EvalCache::new();
    let mut out = DMatrix::zeros(d, d);
    for (r, row) in mat.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            out[(r, c)] = e.eval_cached(pt, &mut cache)?;
        }
    }
    Ok(out)
}

/// A metric over a block of coordinates, sampled numerically.
#[derive(Clone, Debug)]
pub struct NumericMetric {
    entries: Matrix,
    entries_are_inverse: bool,
    coords: Vec<VarRef>,
}

impl NumericMetric {
    /// `g_ij` on the spatial coordinates, obtained by inverting `g^ij`.
    pub fn spatial(space: &HamiltonSpace) -> NumericMetric {
        NumericMetric {
            entries: space.g_inv.clone(),
            entries_are_inverse: true,
            coords: (0..space.n).map(VarRef::x).collect(),
        }
    }

    /// `h_ab` on the temporal coordinates.
    pub fn temporal(space: &HamiltonSpace) -> NumericMetric {
        NumericMetric {
            entries: space.h.clone(),
            entries_are_inverse: false,
            coords: (0..space.m).map(VarRef::t).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn pair(&self, pt: &Point) -> Result<(DMatrix<f64>, DMatrix<f64>), EvalError> {
        let given = eval_matrix(&self.entries, pt)?;
        let other = given.clone().try_inverse().ok_or_else(singular)?;
        if other.iter().any(|v| !v.is_finite()) {
            return Err(singular());
        }
        Ok(if self.entries_are_inverse { (other, given) } else { (given, other) })
    }

    /// Covariant components, row-major.
    pub fn lower(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        Ok(self.pair(pt)?.0.transpose().as_slice().to_vec())
    }

    /// Contravariant components, row-major.
    pub fn upper(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        Ok(self.pair(pt)?.1.transpose().as_slice().to_vec())
    }

    /// `Gamma^k_ij = g^kl (d_i g_lj + d_j g_li - d_l g_ij) / 2` as `[k, i, j]`.
    pub fn christoffel(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        let d = self.dim();
        let upper = self.upper(pt)?;
        let dg: Vec<Vec<f64>> = self
            .coords
            .iter()
            .map(|&v| central_difference(|q| self.lower(q), pt, v, ORACLE_INNER_STEP))
            .collect::<Result<_, _>>()?;
        let mut out = vec![0.0; d * d * d];
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += upper[k * d + l] * (dg[i][l * d + j] + dg[j][l * d + i] - dg[l][i * d + j]);
                    }
                    out[(k * d + i) * d + j] = 0.5 * s;
                }
            }
        }
        Ok(out)
    }

    /// `Rfrak^r_kij = d_j G^r_ki - d_i G^r_kj + G^p_ki G^r_pj - G^p_kj G^r_pi`
    /// as `[r, k, i, j]`.
    pub fn riemann(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        let d = self.dim();
        let g = self.christoffel(pt)?;
        let dg: Vec<Vec<f64>> = self
            .coords
            .iter()
            .map(|&v| central_difference(|q| self.christoffel(q), pt, v, ORACLE_OUTER_STEP))
            .collect::<Result<_, _>>()?;
        let at = |t: &[f64], a: usize, b: usize, c: usize| t[(a * d + b) * d + c];
        let mut out = vec![0.0; d * d * d * d];
        for r in 0..d {
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        let mut s = at(&dg[j], r, k, i) - at(&dg[i], r, k, j);
                        for p in 0..d {
                            s += at(&g, p, k, i) * at(&g, r, p, j) - at(&g, p, k, j) * at(&g, r, p, i);
                        }
                        out[((r * d + k) * d + i) * d + j] = s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `R_ki = Rfrak^r_kir` as `[k, i]`.
    pub fn ricci(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        let d = self.dim();
        let riem = self.riemann(pt)?;
        Ok((0..d * d)
            .map(|ki| (0..d).map(|r| riem[(r * d * d + ki) * d + r]).sum())
            .collect())
    }

    /// `g^ki R_ki`.
    pub fn scalar(&self, pt: &Point) -> Result<f64, EvalError> {
        let upper = self.upper(pt)?;
        Ok(self.ricci(pt)?.iter().zip(&upper).map(|(r, g)| r * g).sum())
    }
}

/// Spatial Christoffel symbols `[k, i, j]` at `pt`.
pub fn oracle_christoffel(space: &HamiltonSpace, pt: &Point) -> Result<Vec<f64>, EvalError> {
    NumericMetric::spatial(space).christoffel(pt)
}

/// `Rfrak^r_kij` of the spatial metric at `pt`, as `[r, k, i, j]`.
pub fn oracle_riemann(space: &HamiltonSpace, pt: &Point) -> Result<Vec<f64>, EvalError> {
    NumericMetric::spatial(space).riemann(pt)
}

/// Numeric versions of the objects built from the Hamiltonian.
pub(super) struct Hamiltonian {
    space: HamiltonSpace,
    ham: Expr,
}

impl Hamiltonian {
    pub(super) fn new(space: &HamiltonSpace) -> Hamiltonian {
        Hamiltonian {
            space: space.clone(),
            ham: space.hamiltonian(),
        }
    }

    fn value(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        Ok(vec![self.ham.eval(pt)?])
    }

    fn d(&self, v: VarRef, pt: &Point) -> Result<f64, EvalError> {
        Ok(central_difference(|q| self.value(q), pt, v, ORACLE_INNER_STEP)?[0])
    }

    fn dd(&self, v: VarRef, w: VarRef, pt: &Point) -> Result<f64, EvalError> {
        Ok(central_difference(|q| Ok(vec![self.d(w, q)?]), pt, v, ORACLE_OUTER_STEP)?[0])
    }

    /// `G^(i)(j)_(a)(b) = (1/2) d^2 H / dp_i^a dp_j^b` as `[i, j, a, b]`.
    pub(super) fn vertical_metric(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        let (m, n) = (self.space.m, self.space.n);
        let mut out = Vec::with_capacity(n * n * m * m);
        for i in 0..n {
            for j in 0..n {
                for a in 0..m {
                    for b in 0..m {
                        out.push(0.5 * self.dd(VarRef::p(i, a), VarRef::p(j, b), pt)?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `N1^(a)_(i)b = chi^a_bc p_i^c` as `[a, i, b]`.
    pub(super) fn n1(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        let (m, n) = (self.space.m, self.space.n);
        let chi = NumericMetric::temporal(&self.space).christoffel(pt)?;
        let mut out = Vec::with_capacity(m * n * m);
        for a in 0..m {
            for i in 0..n {
                for b in 0..m {
                    out.push((0..m).map(|c| chi[(a * m + b) * m + c] * pt.p[i][c]).sum());
                }
            }
        }
        Ok(out)
    }

    /// The general formula
    /// `N2^(a)_(i)j = (h^ab / 4)[dg_ij/dx^k dH/dp_k^b - dg_ij/dp_k^b dH/dx^k
    ///  + g_ik d^2H/dx^j dp_k^b + g_jk d^2H/dx^i dp_k^b]` as `[a, i, j]`.
    pub(super) fn n2(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        let (m, n) = (self.space.m, self.space.n);
        let metric = NumericMetric::spatial(&self.space);
        let g = metric.lower(pt)?;
        let h_inv = NumericMetric::temporal(&self.space).upper(pt)?;
        let dg_x: Vec<Vec<f64>> = (0..n)
            .map(|k| central_difference(|q| metric.lower(q), pt, VarRef::x(k), ORACLE_INNER_STEP))
            .collect::<Result<_, _>>()?;
        let mut dg_p = vec![vec![Vec::new(); m]; n];
        let mut dh_p = vec![vec![0.0; m]; n];
        let mut ddh = vec![vec![vec![0.0; n]; m]; n];
        for k in 0..n {
            for b in 0..m {
                let pk = VarRef::p(k, b);
                dg_p[k][b] = central_difference(|q| metric.lower(q), pt, pk, ORACLE_INNER_STEP)?;
                dh_p[k][b] = self.d(pk, pt)?;
                for j in 0..n {
                    ddh[k][b][j] = self.dd(VarRef::x(j), pk, pt)?;
                }
            }
        }
        let dh_x: Vec<f64> = (0..n).map(|k| self.d(VarRef::x(k), pt)).collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(m * n * n);
        for a in 0..m {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for b in 0..m {
                        let mut inner = 0.0;
                        for k in 0..n {
                            inner += dg_x[k][i * n + j] * dh_p[k][b] - dg_p[k][b][i * n + j] * dh_x[k]
                                + g[i * n + k] * ddh[k][b][j]
                                + g[j * n + k] * ddh[k][b][i];
                        }
                        s += 0.25 * h_inv[a * m + b] * inner;
                    }
                    out.push(s);
                }
            }
        }
        Ok(out)
    }

    /// `A^i_jc = (1/2) g^il dg_lj/dt^c` as `[i, j, c]`, valid when g does
    /// not depend on the momenta.
    pub(super) fn cartan_a(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        let (m, n) = (self.space.m, self.space.n);
        let metric = NumericMetric::spatial(&self.space);
        let upper = metric.upper(pt)?;
        let dg: Vec<Vec<f64>> = (0..m)
            .map(|c| central_difference(|q| metric.lower(q), pt, VarRef::t(c), ORACLE_INNER_STEP))
            .collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(n * n * m);
        for i in 0..n {
            for j in 0..n {
                for dgc in &dg {
                    out.push(0.5 * (0..n).map(|l| upper[i * n + l] * dgc[l * n + j]).sum::<f64>());
                }
            }
        }
        Ok(out)
    }
}
