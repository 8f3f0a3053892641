//! Deflection d-tensors, the electromagnetic field, Maxwell-like identities,
//! Einstein-like blocks and the generalized conservation laws.
//!
//! Index storage:
//!
//! | object | slots |
//! |--------|-------|
//! | raw `Delta^(a)_(i)b` | `[a, i, b]` |
//! | raw `Delta^(a)_(i)j` | `[a, i, j]` |
//! | raw `theta^(a)(j)_(i)(b)` | `[a, i, j, b]` |
//! | `Delta^(i)_(a)b` | `[i, a, b]` |
//! | `Delta^(i)_(a)j` | `[i, a, j]` |
//! | `theta^(i)(j)_(a)(b)` | `[i, j, a, b]` |
//! | `p^(i)_(a)` | `[i, a]` |
//! | `F^(i)_(a)j` | `[i, a, j]` |
//! | `f^(i)(j)_(a)(b)` | `[i, j, a, b]` |

use thiserror::Error;

use crate::connections::Geometry;
use crate::curvature::{covariant, Cov, CurvatureData};
use crate::expr::{Expr, VarRef};
use crate::tensor::{DTensor, IndexSlot, S_DOWN, S_UP, T_DOWN, T_UP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("the Einstein constant kappa must be nonzero")]
    ZeroKappa,
}

fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::add(terms.into_iter().collect())
}

fn tensor(name: &str, slots: &[IndexSlot], geo: &Geometry, f: impl Fn(&[usize]) -> Expr + Sync) -> DTensor {
    DTensor::from_fn(name, slots, geo.m(), geo.n(), f)
}

fn pairs(a: usize, b: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..a).flat_map(move |x| (0..b).map(move |y| (x, y)))
}

/// An identity `lhs = rhs` between two tensors of the same signature.
#[derive(Clone, Debug)]
pub struct Identity {
    pub name: String,
    /// The geometric statement the identity checks.
    pub construct: &'static str,
    pub lhs: DTensor,
    pub rhs: DTensor,
}

impl Identity {
    fn new(name: impl Into<String>, construct: &'static str, lhs: DTensor, rhs: DTensor) -> Identity {
        assert_eq!(lhs.slots, rhs.slots, "identity sides disagree in signature");
        Identity {
            name: name.into(),
            construct,
            lhs,
            rhs,
        }
    }
}

/// Raw, metrical and closed-form deflection d-tensors.
#[derive(Clone, Debug)]
pub struct Deflections {
    /// `Delta^(a)_(i)b = p_i^a/b`
    pub raw_t: DTensor,
    /// `Delta^(a)_(i)j = p_i^a|j`
    pub raw_x: DTensor,
    /// `theta^(a)(j)_(i)(b) = p_i^a|^(j)_(b)`
    pub raw_v: DTensor,
    pub metrical_t: DTensor,
    pub metrical_x: DTensor,
    pub metrical_v: DTensor,
    /// `p^(i)_(a) = G^(i)(k)_(a)(c) p_k^c`
    pub liouville: DTensor,
    pub closed_t: DTensor,
    pub closed_x: DTensor,
    pub closed_v: DTensor,
}

/// `G^(i)(k)_(a)(c) X^(c)_(k)...`, raising the momentum pair of a raw tensor
/// whose first two slots are `(a) (i)`; the pair moves to the front as `(i) (a)`.
fn metrical(geo: &Geometry, raw: &DTensor, name: &str) -> DTensor {
    let (m, n) = (geo.m(), geo.n());
    let mut slots = vec![S_UP, T_DOWN];
    slots.extend(&raw.slots[2..]);
    tensor(name, &slots, geo, |ix| {
        let (i, a, rest) = (ix[0], ix[1], &ix[2..]);
        sum(pairs(n, m).filter_map(|(k, c)| {
            let g = geo.g_vertical.at(&[i, k, a, c]);
            if g.is_zero() {
                return None;
            }
            let mut src = vec![c, k];
            src.extend_from_slice(rest);
            Some(g * raw.at(&src))
        }))
    })
}

/// `U_ia = g_ik U^(k)_(a)` as `[i, a]`.
fn lowered_u(geo: &Geometry) -> DTensor {
    let n = geo.n();
    tensor("U_ia", &[S_DOWN, T_DOWN], geo, |ix| {
        sum((0..n).map(|k| geo.g(ix[0], k) * &geo.space.u[k][ix[1]]))
    })
}

/// `U_ka.j = dU_ka/dx^j - U_sa Gamma^s_kj` as `[k, a, j]`.
fn u_bullet(geo: &Geometry) -> DTensor {
    let n = geo.n();
    let u = lowered_u(geo);
    tensor("U_ka.j", &[S_DOWN, T_DOWN, S_DOWN], geo, |ix| {
        let (k, a, j) = (ix[0], ix[1], ix[2]);
        let mut terms = vec![u.at(&[k, a]).diff(VarRef::x(j))];
        for s in 0..n {
            terms.push(-(u.at(&[s, a]) * geo.gamma.at(&[s, k, j])));
        }
        sum(terms)
    })
}

pub fn deflections(geo: &Geometry) -> Deflections {
    let (m, n) = (geo.m(), geo.n());
    let cc = &geo.cartan;
    let raw_t = covariant(geo, &geo.p, Cov::Time).renamed("Delta^(a)_(i)b");
    let raw_x = covariant(geo, &geo.p, Cov::Space).renamed("Delta^(a)_(i)j");
    let raw_v = covariant(geo, &geo.p, Cov::Vertical).renamed("theta^(a)(j)_(i)(b)");
    let metrical_t = metrical(geo, &raw_t, "Delta^(i)_(a)b");
    let metrical_x = metrical(geo, &raw_x, "Delta^(i)_(a)j");
    let lifted = metrical(geo, &raw_v, "");
    let metrical_v = tensor("theta^(i)(j)_(a)(b)", &[S_UP, S_UP, T_DOWN, T_DOWN], geo, |ix| {
        lifted.at(&[ix[0], ix[2], ix[1], ix[3]]).clone()
    });
    let liouville = metrical(geo, &geo.p, "p^(i)_(a)");

    let (closed_t, closed_x, closed_v) = if m == 1 {
        let h11 = geo.h(0, 0);
        // -h_11 g^ik A^r_k1 p_r
        let ct = tensor("Delta^(i)_(a)b", &[S_UP, T_DOWN, T_DOWN], geo, |ix| {
            let i = ix[0];
            -(h11 * sum(pairs(n, n).map(|(k, r)| Expr::mul(vec![geo.g_inv(i, k).clone(), cc.a.at(&[r, k, 0]).clone(), Expr::p(r, 0)]))))
        });
        // h_11 g^ik [-N2_(k)j - H^r_kj p_r]
        let cx = tensor("Delta^(i)_(a)j", &[S_UP, T_DOWN, S_DOWN], geo, |ix| {
            let (i, j) = (ix[0], ix[2]);
            h11 * sum((0..n).map(|k| {
                let inner = sum(std::iter::once(-geo.nonlinear.n2.at(&[0, k, j]))
                    .chain((0..n).map(|r| -(cc.h.at(&[r, k, j]) * Expr::p(r, 0)))));
                geo.g_inv(i, k) * inner
            }))
        });
        // h_11 g^ij - h_11 g^ik C^{r(j)}_{k(1)} p_r
        let cv = tensor("theta^(i)(j)_(a)(b)", &[S_UP, S_UP, T_DOWN, T_DOWN], geo, |ix| {
            let (i, j) = (ix[0], ix[1]);
            let corr = sum(pairs(n, n).map(|(k, r)| Expr::mul(vec![geo.g_inv(i, k).clone(), cc.c.at(&[r, j, k, 0]).clone(), Expr::p(r, 0)])));
            h11 * (geo.g_inv(i, j) - corr)
        });
        (ct, cx, cv)
    } else {
        let ub = u_bullet(geo);
        // -h_ac g^ik A^r_kb p_r^c
        let ct = tensor("Delta^(i)_(a)b", &[S_UP, T_DOWN, T_DOWN], geo, |ix| {
            let (i, a, b) = (ix[0], ix[1], ix[2]);
            -sum((0..m).flat_map(|c| pairs(n, n).map(move |(k, r)| (c, k, r))).map(|(c, k, r)| {
                Expr::mul(vec![geo.h(a, c).clone(), geo.g_inv(i, k).clone(), cc.a.at(&[r, k, b]).clone(), Expr::p(r, c)])
            }))
        });
        // -(g^ik / 4)(U_ka.j + U_ja.k)
        let cx = tensor("Delta^(i)_(a)j", &[S_UP, T_DOWN, S_DOWN], geo, |ix| {
            let (i, a, j) = (ix[0], ix[1], ix[2]);
            -(sum((0..n).map(|k| geo.g_inv(i, k) * (ub.at(&[k, a, j]) + ub.at(&[j, a, k])))) * 0.25)
        });
        // h_ab g^ij
        let cv = tensor("theta^(i)(j)_(a)(b)", &[S_UP, S_UP, T_DOWN, T_DOWN], geo, |ix| {
            geo.h(ix[2], ix[3]) * geo.g_inv(ix[0], ix[1])
        });
        (ct, cx, cv)
    };
    Deflections {
        raw_t,
        raw_x,
        raw_v,
        metrical_t,
        metrical_x,
        metrical_v,
        liouville,
        closed_t,
        closed_x,
        closed_v,
    }
}

/// Electromagnetic components of the Liouville-Hamilton field.
#[derive(Clone, Debug)]
pub struct EmField {
    /// `F^(i)_(a)j = (Delta^(i)_(a)j - Delta^(j)_(a)i) / 2`
    pub f: DTensor,
    /// `f^(i)(j)_(a)(b) = (theta^(i)(j)_(a)(b) - theta^(j)(i)_(a)(b)) / 2`
    pub f_vertical: DTensor,
    /// `F` from the branch closed form.
    pub closed: DTensor,
}

pub fn em_field(geo: &Geometry, defl: &Deflections) -> EmField {
    let (m, n) = (geo.m(), geo.n());
    let dx = &defl.metrical_x;
    let dv = &defl.metrical_v;
    let f = tensor("F^(i)_(a)j", &[S_UP, T_DOWN, S_DOWN], geo, |ix| {
        let (i, a, j) = (ix[0], ix[1], ix[2]);
        (dx.at(&[i, a, j]) - dx.at(&[j, a, i])) * 0.5
    });
    let f_vertical = tensor("f^(i)(j)_(a)(b)", &[S_UP, S_UP, T_DOWN, T_DOWN], geo, |ix| {
        let (i, j, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        (dv.at(&[i, j, a, b]) - dv.at(&[j, i, a, b])) * 0.5
    });
    let closed = if m == 1 {
        let n2 = &geo.nonlinear.n2;
        let h = &geo.cartan.h;
        // (h_11 / 2)[g^jk N2_(k)i - g^ik N2_(k)j + (g^jk H^r_ki - g^ik H^r_kj) p_r]
        tensor("F^(i)_(a)j", &[S_UP, T_DOWN, S_DOWN], geo, |ix| {
            let (i, j) = (ix[0], ix[2]);
            let mut terms = Vec::new();
            for k in 0..n {
                terms.push(geo.g_inv(j, k) * n2.at(&[0, k, i]));
                terms.push(-(geo.g_inv(i, k) * n2.at(&[0, k, j])));
                for r in 0..n {
                    let bracket = geo.g_inv(j, k) * h.at(&[r, k, i]) - geo.g_inv(i, k) * h.at(&[r, k, j]);
                    terms.push(bracket * Expr::p(r, 0));
                }
            }
            geo.h(0, 0) * sum(terms) * 0.5
        })
    } else {
        let ub = u_bullet(geo);
        // (1/8)[g^jk U_ka.i - g^ik U_ka.j + g^jk U_ia.k - g^ik U_ja.k]
        tensor("F^(i)_(a)j", &[S_UP, T_DOWN, S_DOWN], geo, |ix| {
            let (i, a, j) = (ix[0], ix[1], ix[2]);
            let terms = (0..n).flat_map(|k| {
                [
                    geo.g_inv(j, k) * ub.at(&[k, a, i]),
                    -(geo.g_inv(i, k) * ub.at(&[k, a, j])),
                    geo.g_inv(j, k) * ub.at(&[i, a, k]),
                    -(geo.g_inv(i, k) * ub.at(&[j, a, k])),
                ]
            });
            sum(terms) * 0.125
        })
    };
    EmField { f, f_vertical, closed }
}

/// Everything the Maxwell-like and deflection identities need.
pub struct FieldInputs<'a> {
    pub geo: &'a Geometry,
    pub curv: &'a CurvatureData,
    pub defl: &'a Deflections,
}

/// Commutation identities for the raw deflection tensors:
///
/// * `Delta_(p)b|k - Delta_(p)k/b = -p_r R^r_pbk - Delta_(p)r T^r_bk - theta^(r)_(p)(f) R^(f)_(r)bk`
/// * `Delta_(p)j|k - Delta_(p)k|j = -p_r R^r_pjk - theta^(r)_(p)(f) R^(f)_(r)jk`
/// * `Delta_(p)j|^(k)_(c) - theta^(k)_(p)(c)|j = -p_r P^r_pj(c)^(k) - Delta_(p)r C^{r(k)}_{j(c)} - theta^(r)_(p)(f) P^(f)(k)_(r)j(c)`
///
/// The `p R` and `p P` terms are scaled by `-sign`: `sign = -1` gives the
/// forms above, which hold; `sign = 1` flips them.
pub fn deflection_identities_with_sign(inp: &FieldInputs, sign: f64) -> Vec<Identity> {
    let FieldInputs { geo, curv, defl } = *inp;
    let (m, n) = (geo.m(), geo.n());
    let t_aj = curv.torsion.get("T^r_aj");
    let r_xt = curv.torsion.get("R^(f)_(r)aj");
    let r_xx = curv.torsion.get("R^(f)_(r)ij");
    let p_vx = curv.torsion.get("P^(f)(j)_(r)i(b)");
    let r_ibk = curv.curvature.get("R^l_ibk");
    let r_ijk = curv.curvature.get("R^l_ijk");
    let p_ijc = curv.curvature.get("P^l(k)_ij(c)");
    let c = &geo.cartan.c;
    let (raw_t, raw_x, raw_v) = (&defl.raw_t, &defl.raw_x, &defl.raw_v);

    let theta_r = |d: usize, p: usize, rt: &DTensor, x: usize, y: usize| -> Vec<Expr> {
        pairs(n, m)
            .map(|(r, f)| -(raw_v.at(&[d, p, r, f]) * rt.at(&[f, r, x, y])))
            .collect()
    };

    let t_x = covariant(geo, raw_t, Cov::Space);
    let x_t = covariant(geo, raw_x, Cov::Time);
    let slots1 = [T_UP, S_DOWN, T_DOWN, S_DOWN];
    let lhs1 = tensor("", &slots1, geo, |ix| {
        let (d, p, b, k) = (ix[0], ix[1], ix[2], ix[3]);
        t_x.at(&[d, p, b, k]) - x_t.at(&[d, p, k, b])
    });
    let rhs1 = tensor("", &slots1, geo, |ix| {
        let (d, p, b, k) = (ix[0], ix[1], ix[2], ix[3]);
        let mut terms: Vec<Expr> = (0..n).map(|r| Expr::p(r, d) * r_ibk.at(&[r, p, b, k]) * sign).collect();
        terms.extend((0..n).map(|r| -(raw_x.at(&[d, p, r]) * t_aj.at(&[r, b, k]))));
        terms.extend(theta_r(d, p, r_xt, b, k));
        sum(terms)
    });

    let x_x = covariant(geo, raw_x, Cov::Space);
    let slots2 = [T_UP, S_DOWN, S_DOWN, S_DOWN];
    let lhs2 = tensor("", &slots2, geo, |ix| {
        let (d, p, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        x_x.at(&[d, p, j, k]) - x_x.at(&[d, p, k, j])
    });
    let rhs2 = tensor("", &slots2, geo, |ix| {
        let (d, p, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        let mut terms: Vec<Expr> = (0..n).map(|r| Expr::p(r, d) * r_ijk.at(&[r, p, j, k]) * sign).collect();
        terms.extend(theta_r(d, p, r_xx, j, k));
        sum(terms)
    });

    let x_v = covariant(geo, raw_x, Cov::Vertical);
    let v_x = covariant(geo, raw_v, Cov::Space);
    let slots3 = [T_UP, S_DOWN, S_DOWN, S_UP, T_DOWN];
    let lhs3 = tensor("", &slots3, geo, |ix| {
        let (d, p, j, k, cc) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        x_v.at(&[d, p, j, k, cc]) - v_x.at(&[d, p, k, cc, j])
    });
    let rhs3 = tensor("", &slots3, geo, |ix| {
        let (d, p, j, k, cc) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let mut terms: Vec<Expr> = (0..n).map(|r| Expr::p(r, d) * p_ijc.at(&[r, k, p, j, cc]) * sign).collect();
        terms.extend((0..n).map(|r| -(raw_x.at(&[d, p, r]) * c.at(&[r, k, j, cc]))));
        terms.extend(pairs(n, m).map(|(r, f)| -(raw_v.at(&[d, p, r, f]) * p_vx.at(&[f, k, r, j, cc]))));
        sum(terms)
    });

    vec![
        Identity::new("deflection commutator /b |k", "non-metrical deflection identity (temporal-spatial)", lhs1, rhs1),
        Identity::new("deflection commutator |j |k", "non-metrical deflection identity (spatial-spatial)", lhs2, rhs2),
        Identity::new("deflection commutator |j vertical", "non-metrical deflection identity (spatial-vertical)", lhs3, rhs3),
    ]
}

pub fn deflection_identities(inp: &FieldInputs) -> Vec<Identity> {
    deflection_identities_with_sign(inp, -1.0)
}

fn antisym_pair(t: &DTensor, ix: &[usize], p: usize, q: usize) -> Expr {
    let mut sw = ix.to_vec();
    sw.swap(p, q);
    (t.at(ix) - t.at(&sw)) * 0.5
}

/// `X(i,j,k) + X(j,k,i) + X(k,i,j)` over slot positions `(p, q, r)`.
fn cyclic(ix: &[usize], p: usize, q: usize, r: usize, x: impl Fn(&[usize]) -> Expr) -> Expr {
    let (i, j, k) = (ix[p], ix[q], ix[r]);
    let mut out = Vec::with_capacity(3);
    for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
        let mut v = ix.to_vec();
        v[p] = a;
        v[q] = b;
        v[r] = c;
        out.push(x(&v));
    }
    sum(out)
}

/// The three Maxwell-like identity groups of the active branch:
///
/// * `F^(i)_(a)k/b = A_{i,k}{Delta^(i)_(a)b|k + Delta^(i)_(a)r T^r_bk + theta^(i)(r)_(a)(f) R^(f)_(r)bk - R^i_rbk p^(r)_(a)} / 2`
/// * `S_{ijk} F^(i)_(a)j|k = -S_{ijk}{theta^(i)(r)_(a)(f) R^(f)_(r)jk - R^i_rjk p^(r)_(a)} / 2`
/// * m >= 2: `S_{ijk} F^(i)_(a)j|^(k)_(c) = 0`; m = 1:
///   `F^(i)_(1)j|^(k)_(1) = A_{i,j}{theta^(i)(k)|j + P^i_rj(1)^(k) p^(r) - Delta^(i)_(1)r C^{r(k)}_{j(1)} - theta^(i)(r) P^(1)(k)_(r)j(1)} / 2`
///
/// where `A` is the alternate sum and `S` the cyclic sum. Covariant
/// derivatives of `F` are the antisymmetrized covariant derivatives of the
/// metrical deflection `Delta^(i)_(a)j`.
///
/// `sign = -1` gives the forms above, which hold; `sign = 1` flips every
/// Liouville-curvature term.
pub fn maxwell_identities_with_sign(inp: &FieldInputs, sign: f64) -> Vec<Identity> {
    let FieldInputs { geo, curv, defl } = *inp;
    let (m, n) = (geo.m(), geo.n());
    let t_aj = curv.torsion.get("T^r_aj");
    let r_xt = curv.torsion.get("R^(f)_(r)aj");
    let r_xx = curv.torsion.get("R^(f)_(r)ij");
    let r_ibk = curv.curvature.get("R^l_ibk");
    let r_ijk = curv.curvature.get("R^l_ijk");
    let (dt, dx, dv, pl) = (&defl.metrical_t, &defl.metrical_x, &defl.metrical_v, &defl.liouville);

    // F^(i)_(a)k/b
    let dx_t = covariant(geo, dx, Cov::Time);
    let dt_x = covariant(geo, dt, Cov::Space);
    let slots1 = [S_UP, T_DOWN, S_DOWN, T_DOWN];
    let lhs1 = tensor("", &slots1, geo, |ix| antisym_pair(&dx_t, ix, 0, 2));
    let x1 = tensor("", &slots1, geo, |ix| {
        let (i, a, k, b) = (ix[0], ix[1], ix[2], ix[3]);
        let mut terms = vec![dt_x.at(&[i, a, b, k]).clone()];
        for r in 0..n {
            terms.push(dx.at(&[i, a, r]) * t_aj.at(&[r, b, k]));
            terms.push(r_ibk.at(&[i, r, b, k]) * pl.at(&[r, a]) * sign);
            for f in 0..m {
                terms.push(dv.at(&[i, r, a, f]) * r_xt.at(&[f, r, b, k]));
            }
        }
        sum(terms)
    });
    let rhs1 = tensor("", &slots1, geo, |ix| antisym_pair(&x1, ix, 0, 2));

    // sum_{ijk} F^(i)_(a)j|k
    let dx_x = covariant(geo, dx, Cov::Space);
    let slots2 = [S_UP, T_DOWN, S_DOWN, S_DOWN];
    let f_bar = tensor("", &slots2, geo, |ix| antisym_pair(&dx_x, ix, 0, 2));
    let lhs2 = tensor("", &slots2, geo, |ix| cyclic(ix, 0, 2, 3, |v| f_bar.at(v).clone()));
    let x2 = tensor("", &slots2, geo, |ix| {
        let (i, a, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        let mut terms = Vec::new();
        for r in 0..n {
            terms.push(r_ijk.at(&[i, r, j, k]) * pl.at(&[r, a]) * sign);
            for f in 0..m {
                terms.push(dv.at(&[i, r, a, f]) * r_xx.at(&[f, r, j, k]));
            }
        }
        sum(terms) * -0.5
    });
    let rhs2 = tensor("", &slots2, geo, |ix| cyclic(ix, 0, 2, 3, |v| x2.at(v).clone()));

    let dx_v = covariant(geo, dx, Cov::Vertical);
    let slots3 = [S_UP, T_DOWN, S_DOWN, S_UP, T_DOWN];
    let (lhs3, rhs3, label3) = if m >= 2 {
        // sum_{ijk} F^(i)_(a)j|^(k)_(c) = 0
        let f_v = tensor("", &slots3, geo, |ix| antisym_pair(&dx_v, ix, 0, 2));
        let lhs = tensor("", &slots3, geo, |ix| cyclic(ix, 0, 2, 3, |v| f_v.at(v).clone()));
        (lhs, DTensor::zeros("", &slots3, m, n), "Maxwell-like identity: cyclic vertical derivative of F")
    } else {
        // F^(i)_(1)j|^(k)_(1) = A_{i,j}{theta^(i)(k)|j + P^i_rj(1)^(k) p^(r) - Delta^(i)_(1)r C^{r(k)}_{j(1)} - theta^(i)(r) P^(1)(k)_(r)j(1)} / 2
        let c = &geo.cartan.c;
        let p_ijc = curv.curvature.get("P^l(k)_ij(c)");
        let p_vx = curv.torsion.get("P^(f)(j)_(r)i(b)");
        let dv_x = covariant(geo, dv, Cov::Space);
        let lhs = tensor("", &slots3, geo, |ix| antisym_pair(&dx_v, ix, 0, 2));
        let x3 = tensor("", &slots3, geo, |ix| {
            let (i, j, k) = (ix[0], ix[2], ix[3]);
            let mut terms = vec![dv_x.at(&[i, k, 0, 0, j]).clone()];
            for r in 0..n {
                terms.push(-(p_ijc.at(&[i, k, r, j, 0]) * pl.at(&[r, 0]) * sign));
                terms.push(-(dx.at(&[i, 0, r]) * c.at(&[r, k, j, 0])));
                terms.push(-(dv.at(&[i, r, 0, 0]) * p_vx.at(&[0, k, r, j, 0])));
            }
            sum(terms)
        });
        let rhs = tensor("", &slots3, geo, |ix| antisym_pair(&x3, ix, 0, 2));
        (lhs, rhs, "Maxwell-like identity: vertical derivative of F")
    };

    vec![
        Identity::new("maxwell temporal", "Maxwell-like identity: temporal derivative of F", lhs1, rhs1),
        Identity::new("maxwell cyclic spatial", "Maxwell-like identity: cyclic spatial derivative of F", lhs2, rhs2),
        Identity::new("maxwell vertical", label3, lhs3, rhs3),
    ]
}

pub fn maxwell_identities(inp: &FieldInputs) -> Vec<Identity> {
    maxwell_identities_with_sign(inp, -1.0)
}

/// Whether an Einstein-like block determines a stress-energy component or
/// is a compatibility condition requiring it to vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockRole {
    Determined,
    Compatibility,
}

#[derive(Clone, Debug)]
pub struct EinsteinBlock {
    /// Name of the stress-energy block, e.g. `T_ij`.
    pub name: &'static str,
    /// Geometric side of the equation.
    pub lhs: DTensor,
    pub role: BlockRole,
}

#[derive(Clone, Debug)]
pub struct Einstein {
    pub kappa: f64,
    pub blocks: Vec<EinsteinBlock>,
    /// `G^AB`: `h^ab`, `g^ij`, `h^ab g_ij`.
    pub block_metric: Vec<DTensor>,
}

impl Einstein {
    /// Stress-energy components `lhs / kappa` for every block.
    pub fn stress_energy(&self) -> Vec<DTensor> {
        let k = 1.0 / self.kappa;
        self.blocks.iter().map(|b| b.lhs.map(b.name, |_, e| e * k)).collect()
    }

    pub fn block(&self, name: &str) -> Option<&EinsteinBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn compatibility(&self) -> impl Iterator<Item = &EinsteinBlock> {
        self.blocks.iter().filter(|b| b.role == BlockRole::Compatibility)
    }
}

pub fn einstein(geo: &Geometry, curv: &CurvatureData, kappa: f64) -> Result<Einstein, FieldError> {
    if kappa == 0.0 {
        return Err(FieldError::ZeroKappa);
    }
    let (m, n) = (geo.m(), geo.n());
    let multi = m >= 2;
    let ric = &curv.ricci;
    let half_sc = &ric.scalars.sc * 0.5;
    let neg = |t: &DTensor| t.map("", |_, e| -e);
    let role = |det_multi: bool, det_single: bool| {
        if (multi && det_multi) || (!multi && det_single) {
            BlockRole::Determined
        } else {
            BlockRole::Compatibility
        }
    };
    let chi_ab = ric.get("chi_ab");
    let r_ij = ric.get("R_ij");
    let s_block = ric.get("S^(i)(j)_(a)(b)");
    let mut blocks = vec![
        EinsteinBlock {
            name: "T_ab",
            lhs: tensor("", &[T_DOWN, T_DOWN], geo, |ix| chi_ab.at(ix) - &half_sc * geo.h(ix[0], ix[1])),
            role: BlockRole::Determined,
        },
        EinsteinBlock {
            name: "T_ij",
            lhs: tensor("", &[S_DOWN, S_DOWN], geo, |ix| r_ij.at(ix) - &half_sc * geo.g(ix[0], ix[1])),
            role: BlockRole::Determined,
        },
        EinsteinBlock {
            name: "T^(i)(j)_(a)(b)",
            lhs: tensor("", &[S_UP, S_UP, T_DOWN, T_DOWN], geo, |ix| {
                let g = Expr::mul(vec![half_sc.clone(), geo.h(ix[2], ix[3]).clone(), geo.g_inv(ix[0], ix[1]).clone()]);
                -s_block.at(ix) - g
            }),
            role: BlockRole::Determined,
        },
        EinsteinBlock { name: "T_ia", lhs: ric.get("R_ia").clone(), role: BlockRole::Determined },
        EinsteinBlock { name: "T_ai", lhs: ric.get("R_ai").clone(), role: BlockRole::Compatibility },
        EinsteinBlock { name: "T_a(b)^(j)", lhs: ric.get("R_a(b)^(j)").clone(), role: BlockRole::Compatibility },
        EinsteinBlock { name: "T^(i)_(a)b", lhs: neg(ric.get("P^(i)_(a)b")), role: role(false, true) },
        EinsteinBlock { name: "T_i(b)^(j)", lhs: neg(ric.get("P_i(b)^(j)")), role: role(false, true) },
        EinsteinBlock { name: "T^(i)_(a)j", lhs: neg(ric.get("P^(i)_(a)j")), role: role(false, true) },
    ];
    for b in &mut blocks {
        b.lhs.name = b.name.to_string();
    }
    let block_metric = vec![
        geo.h_upper.clone().renamed("h^ab"),
        geo.g_upper.clone().renamed("g^ij"),
        DTensor::from_fn("h^ab g_ij", &[T_UP, T_UP, S_DOWN, S_DOWN], m, n, |ix| geo.h_inv(ix[0], ix[1]) * geo.g(ix[2], ix[3])),
    ];
    Ok(Einstein { kappa, blocks, block_metric })
}

/// Residuals of the generalized conservation laws.
#[derive(Clone, Debug)]
pub struct Conservation {
    pub laws: Vec<Identity>,
    /// Raised tensors the laws are written in.
    pub auxiliaries: Vec<DTensor>,
}

pub fn conservation(geo: &Geometry, curv: &CurvatureData) -> Conservation {
    let (m, n) = (geo.m(), geo.n());
    let ric = &curv.ricci;
    let half_sc = &ric.scalars.sc * 0.5;
    let chi_ab = ric.get("chi_ab");
    let r_ij = ric.get("R_ij");
    let r_ia = ric.get("R_ia");

    // chi^f_b = h^fc chi_cb
    let chi_up = tensor("chi^f_b", &[T_UP, T_DOWN], geo, |ix| sum((0..m).map(|c| geo.h_inv(ix[0], c) * chi_ab.at(&[c, ix[1]]))));
    // R^i_j = g^iq R_qj
    let r_up = tensor("R^i_j", &[S_UP, S_DOWN], geo, |ix| sum((0..n).map(|q| geo.g_inv(ix[0], q) * r_ij.at(&[q, ix[1]]))));
    // R^i_b = g^iq R_qb
    let r_ib_up = tensor("R^i_b", &[S_UP, T_DOWN], geo, |ix| sum((0..n).map(|q| geo.g_inv(ix[0], q) * r_ia.at(&[q, ix[1]]))));
    // R^r_j - Sc/2 delta^r_j
    let x_space = r_up.map("", |ix, e| if ix[0] == ix[1] { e - &half_sc } else { e.clone() });
    let x_space_div = covariant(geo, &x_space, Cov::Space);
    let r_ib_div = covariant(geo, &r_ib_up, Cov::Space);
    let r_ib_trace = |b: usize| sum((0..n).map(|r| r_ib_div.at(&[r, b, r]).clone()));

    let mut auxiliaries = vec![chi_up.clone(), r_up, r_ib_up];
    let laws = if m >= 2 {
        // [chi^f_b - Sc/2 delta^f_b]_/f = -R^r_b|r
        let x_time = chi_up.map("", |ix, e| if ix[0] == ix[1] { e - &half_sc } else { e.clone() });
        let x_time_div = covariant(geo, &x_time, Cov::Time);
        let lhs1 = tensor("", &[T_DOWN], geo, |ix| sum((0..m).map(|f| x_time_div.at(&[f, ix[0], f]).clone())));
        let rhs1 = tensor("", &[T_DOWN], geo, |ix| -r_ib_trace(ix[0]));
        // [R^r_j - Sc/2 delta^r_j]_|r = 0
        let lhs2 = tensor("", &[S_DOWN], geo, |ix| sum((0..n).map(|r| x_space_div.at(&[r, ix[0], r]).clone())));
        vec![
            Identity::new("conservation temporal", "generalized conservation law (temporal)", lhs1, rhs1),
            Identity::new("conservation spatial", "generalized conservation law (spatial)", lhs2, DTensor::zeros("", &[S_DOWN], m, n)),
        ]
    } else {
        let p_t = ric.get("P^(i)_(a)b");
        let p_x = ric.get("P^(i)_(a)j");
        let p_mixed = ric.get("P_i(b)^(j)");
        let s_block = ric.get("S^(i)(j)_(a)(b)");
        let h11 = geo.h_inv(0, 0);
        // P^(1)_(i)1 = h^11 g_iq P^(q)_(1)1
        let p1 = tensor("P^(1)_(i)1", &[T_UP, S_DOWN, T_DOWN], geo, |ix| {
            h11 * sum((0..n).map(|q| geo.g(ix[1], q) * p_t.at(&[q, 0, 0])))
        });
        // P^(1)_(i)j = h^11 g_iq P^(q)_(1)j
        let p2 = tensor("P^(1)_(i)j", &[T_UP, S_DOWN, S_DOWN], geo, |ix| {
            h11 * sum((0..n).map(|q| geo.g(ix[1], q) * p_x.at(&[q, 0, ix[2]])))
        });
        // P^{i(j)}_(1) = g^iq P_q(1)^(j)
        let p3 = tensor("P^i(j)_(1)", &[S_UP, S_UP, T_DOWN], geo, |ix| {
            sum((0..n).map(|q| geo.g_inv(ix[0], q) * p_mixed.at(&[q, 0, ix[1]])))
        });
        // S^(1)(j)_(i)(1) = h^11 g_iq S^(q)(j)_(1)(1)
        let s1 = tensor("S^(1)(j)_(i)(1)", &[T_UP, S_UP, S_DOWN, T_DOWN], geo, |ix| {
            h11 * sum((0..n).map(|q| geo.g(ix[2], q) * s_block.at(&[q, ix[1], 0, 0])))
        });

        // [(R - S)/2]_/1 = R^r_1|r - P^(1)_(r)1|^(r)_(1)
        let sc_t = covariant(geo, &DTensor::scalar("", half_sc.clone(), m, n), Cov::Time);
        let p1_v = covariant(geo, &p1, Cov::Vertical);
        let lhs1 = sc_t.renamed("");
        let rhs1 = tensor("", &[T_DOWN], geo, |_| {
            r_ib_trace(0) - sum((0..n).map(|r| p1_v.at(&[0, r, 0, r, 0]).clone()))
        });
        // [R^r_j - (R - S)/2 delta^r_j]_|r = P^(1)_(r)j|^(r)_(1)
        let p2_v = covariant(geo, &p2, Cov::Vertical);
        let lhs2 = tensor("", &[S_DOWN], geo, |ix| sum((0..n).map(|r| x_space_div.at(&[r, ix[0], r]).clone())));
        let rhs2 = tensor("", &[S_DOWN], geo, |ix| sum((0..n).map(|r| p2_v.at(&[0, r, ix[0], r, 0]).clone())));
        // [S^(1)(j)_(r)(1) + (R - S)/2 delta^j_r]|^(r)_(1) = -P^{r(j)}_(1)|r
        let x3 = s1.map("", |ix, e| if ix[1] == ix[2] { e + &half_sc } else { e.clone() });
        let x3_v = covariant(geo, &x3, Cov::Vertical);
        let p3_x = covariant(geo, &p3, Cov::Space);
        let lhs3 = tensor("", &[S_UP], geo, |ix| sum((0..n).map(|r| x3_v.at(&[0, ix[0], r, 0, r, 0]).clone())));
        let rhs3 = tensor("", &[S_UP], geo, |ix| -sum((0..n).map(|r| p3_x.at(&[r, ix[0], 0, r]).clone())));
        auxiliaries.extend([p1, p2, p3, s1]);
        vec![
            Identity::new("conservation temporal", "generalized conservation law (temporal)", lhs1, rhs1),
            Identity::new("conservation spatial", "generalized conservation law (spatial)", lhs2, rhs2),
            Identity::new("conservation vertical", "generalized conservation law (vertical)", lhs3, rhs3),
        ]
    };
    Conservation { laws, auxiliaries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::HamiltonSpace;
    use rand::SeedableRng;

    fn max_gap(id: &Identity, space: &HamiltonSpace, count: usize) -> f64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let pt = space.domain.sample(&mut rng);
            let l = id.lhs.eval(&pt).unwrap();
            let r = id.rhs.eval(&pt).unwrap();
            for (a, b) in l.values.iter().zip(&r.values) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    fn load(name: &str) -> HamiltonSpace {
        match name {
            "warped" => HamiltonSpace::from_toml(include_str!("../tests/fixtures/warped.toml")).unwrap(),
            "finsler" => HamiltonSpace::from_toml(include_str!("../tests/fixtures/finsler.toml")).unwrap(),
            _ => HamiltonSpace::bundled(name).unwrap(),
        }
    }

    fn with_space<T>(name: &str, f: impl FnOnce(&HamiltonSpace, &FieldInputs) -> T) -> T {
        let space = load(name);
        let geo = Geometry::new(&space);
        let curv = CurvatureData::new(&geo);
        let defl = deflections(&geo);
        f(&space, &FieldInputs { geo: &geo, curv: &curv, defl: &defl })
    }

    #[test]
    fn antisymmetrized_derivative_is_not_the_derivative_of_f() {
        with_space("warped", |space, inp| {
            let em = em_field(inp.geo, inp.defl);
            let literal = covariant(inp.geo, &em.f, Cov::Space);
            let d = covariant(inp.geo, &inp.defl.metrical_x, Cov::Space);
            let anti = tensor("", &literal.slots, inp.geo, |ix| antisym_pair(&d, ix, 0, 2));
            assert!(max_gap(&Identity::new("", "", literal, anti), space, 3) > 1e-3);
        });
    }

    fn assert_holds(ids: &[Identity], space: &HamiltonSpace, tol: f64) {
        for id in ids {
            let gap = max_gap(id, space, 4);
            assert!(gap < tol, "{} on {}: {gap:e}", id.name, space.name);
        }
    }

    #[test]
    fn deflection_and_maxwell_identities_hold() {
        for name in ["sphere2_u", "warped", "m1sphere", "finsler"] {
            with_space(name, |space, inp| {
                assert_holds(&deflection_identities(inp), space, 1e-10);
                assert_holds(&maxwell_identities(inp), space, 1e-10);
            });
        }
    }

    #[test]
    fn flipped_liouville_curvature_sign_breaks_the_identities() {
        with_space("sphere2", |space, inp| {
            let flipped = deflection_identities_with_sign(inp, 1.0);
            assert!(max_gap(&flipped[1], space, 4) > 0.1);
        });
        with_space("finsler", |space, inp| {
            let flipped = maxwell_identities_with_sign(inp, 1.0);
            assert!(max_gap(&flipped[0], space, 4) > 0.1);
            assert!(max_gap(&flipped[2], space, 4) > 0.1);
        });
    }

    #[test]
    fn closed_forms_match_engine() {
        for name in ["sphere2_u", "timewarp", "gravitational", "warped", "m1sphere", "finsler"] {
            with_space(name, |space, inp| {
                let d = inp.defl;
                let em = em_field(inp.geo, d);
                let pairs = [
                    (&d.metrical_t, &d.closed_t),
                    (&d.metrical_x, &d.closed_x),
                    (&d.metrical_v, &d.closed_v),
                    (&em.f, &em.closed),
                ];
                let ids: Vec<Identity> = pairs.iter().map(|(a, b)| Identity::new(a.name.clone(), "", (*a).clone(), (*b).clone())).collect();
                assert_holds(&ids, space, 1e-10);
                let zero = DTensor::zeros("", &em.f_vertical.slots, inp.geo.m(), inp.geo.n());
                assert_holds(&[Identity::new("f", "", em.f_vertical.clone(), zero)], space, 1e-12);
            });
        }
    }

    #[test]
    fn multi_time_vertical_deflection_is_block_metric() {
        with_space("warped", |_, inp| {
            let geo = inp.geo;
            for (idx, e) in inp.defl.metrical_v.iter() {
                let want = geo.h(idx[2], idx[3]) * geo.g_inv(idx[0], idx[1]);
                assert_eq!(e.simplify(), want.simplify(), "{idx:?}");
            }
        });
    }

    #[test]
    fn sphere_einstein_blocks() {
        with_space("sphere2", |space, inp| {
            let e = einstein(inp.geo, inp.curv, 1.0).unwrap();
            let se = e.stress_energy();
            let pt = space.domain.midpoint();
            let get = |name: &str| se.iter().find(|t| t.name == name).unwrap().eval(&pt).unwrap();
            let t_ab = get("T_ab");
            assert!((t_ab.at(&[0, 0]) + 1.0).abs() < 1e-12 && t_ab.at(&[0, 1]).abs() < 1e-12);
            assert!(get("T_ij").max_abs() < 1e-12);
            let t_v = get("T^(i)(j)_(a)(b)");
            let g11 = 1.0 / pt.x[0].sin().powi(2);
            assert!((t_v.at(&[1, 1, 1, 1]) + g11).abs() < 1e-12);
            assert_eq!(einstein(inp.geo, inp.curv, 0.0).unwrap_err(), FieldError::ZeroKappa);
        });
    }

    #[test]
    fn timewarp_compatibility_blocks_vanish() {
        with_space("timewarp", |space, inp| {
            let e = einstein(inp.geo, inp.curv, 2.0).unwrap();
            let names: Vec<&str> = e.compatibility().map(|b| b.name).collect();
            assert_eq!(names, ["T_ai", "T_a(b)^(j)", "T^(i)_(a)b", "T_i(b)^(j)", "T^(i)_(a)j"]);
            let pt = space.domain.midpoint();
            for b in e.compatibility() {
                assert!(b.lhs.eval(&pt).unwrap().max_abs() < 1e-12, "{}", b.name);
            }
        });
    }

    #[test]
    fn conservation_on_sphere() {
        with_space("sphere2", |space, inp| {
            let c = conservation(inp.geo, inp.curv);
            assert_eq!(c.laws.len(), 2);
            assert_holds(&c.laws, space, 1e-12);
        });
        with_space("m1sphere", |_, inp| {
            let c = conservation(inp.geo, inp.curv);
            assert_eq!(c.laws.len(), 3);
            assert_eq!(c.laws[2].lhs.slots, [S_UP]);
        });
    }
}
