//! Christoffel symbols, the canonical nonlinear connection, adapted
//! derivatives and the Cartan canonical connection.
//!
//! Index storage (zero based, row-major over the listed slots):
//!
//! | object | slots |
//! |--------|-------|
//! | `chi`  | `chi^a_bc` as `[a, b, c]` |
//! | `gamma`| `Gamma^k_ij` as `[k, i, j]` |
//! | `G`    | `G^(i)(j)_(a)(b)` as `[i, j, a, b]` |
//! | `N1`   | `N1^(a)_(i)b` as `[a, i, b]` |
//! | `N2`   | `N2^(a)_(i)j` as `[a, i, j]` |
//! | `A`    | `A^i_jc` as `[i, j, c]` |
//! | `H`    | `H^i_jk` as `[i, j, k]` |
//! | `C`    | `C^{i(k)}_{j(c)}` as `[i, k, j, c]` |

use crate::expr::{mask, Expr, VarRef};
use crate::space::{Fault, HamiltonSpace};
use crate::tensor::{DTensor, S_DOWN, S_UP, T_DOWN, T_UP};

/// Direction of an adapted derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `delta / delta t^a`
    Time(usize),
    /// `delta / delta x^i`
    Space(usize),
    /// `d / d p_i^a`
    Vertical { i: usize, a: usize },
}

#[derive(Clone, Debug)]
pub struct NonlinearConnection {
    pub n1: DTensor,
    /// The components used downstream: the Corollary form for m >= 2,
    /// the general form for m = 1.
    pub n2: DTensor,
    /// The general formula of the existence Theorem.
    pub n2_general: DTensor,
    /// `-Gamma^k_ij p_k^a + T^(a)_(i)j`, m >= 2 only.
    pub n2_corollary: Option<DTensor>,
    /// `T^(a)_(i)j = (h^ab / 4)(U_ib.j + U_jb.i)`, m >= 2 only.
    pub t_aux: Option<DTensor>,
    m: usize,
    n: usize,
}

impl NonlinearConnection {
    /// Adapted derivative of a scalar expression.
    pub fn derivative(&self, e: &Expr, dir: Direction) -> Expr {
        match dir {
            Direction::Time(a) => self.delta_t(e, a),
            Direction::Space(i) => self.delta_x(e, i),
            Direction::Vertical { i, a } => e.diff(VarRef::p(i, a)),
        }
    }

    /// `de/dt^a - N1^(b)_(j)a de/dp_j^b`
    pub fn delta_t(&self, e: &Expr, a: usize) -> Expr {
        self.corrected(e, e.diff(VarRef::t(a)), |b, j| self.n1.at(&[b, j, a]))
    }

    /// `de/dx^i - N2^(b)_(j)i de/dp_j^b`
    pub fn delta_x(&self, e: &Expr, i: usize) -> Expr {
        self.corrected(e, e.diff(VarRef::x(i)), |b, j| self.n2.at(&[b, j, i]))
    }

    fn corrected<'a>(&'a self, e: &Expr, base: Expr, coeff: impl Fn(usize, usize) -> &'a Expr) -> Expr {
        if e.vars() & mask::MOMENTUM == 0 {
            return base;
        }
        let mut terms = vec![base];
        for j in 0..self.n {
            for b in 0..self.m {
                let v = VarRef::p(j, b);
                if e.depends_on(v) {
                    terms.push(-(coeff(b, j) * e.diff(v)));
                }
            }
        }
        Expr::add(terms)
    }
}

#[derive(Clone, Debug)]
pub struct CartanConnection {
    pub chi: DTensor,
    pub a: DTensor,
    pub h: DTensor,
    pub c: DTensor,
    /// `A^i_jc = (g^il / 2) delta g_lj / delta t^c`
    pub a_general: DTensor,
    /// `H^i_jk = (g^ir / 2)(delta_k g_jr + delta_j g_kr - delta_r g_jk)`
    pub h_general: DTensor,
    /// `C^{i(k)}_{j(c)} = -(g_jr / 2)(d g^ir/dp_k^c + d g^kr/dp_i^c - d g^ik/dp_r^c)`
    pub c_general: DTensor,
}

/// Every connection-level object of one space.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub space: HamiltonSpace,
    pub hamiltonian: Expr,
    pub h_lower: DTensor,
    pub h_upper: DTensor,
    pub g_lower: DTensor,
    pub g_upper: DTensor,
    /// The polymomenta `p_i^a` as a tensor `[a, i]`.
    pub p: DTensor,
    pub chi: DTensor,
    pub gamma: DTensor,
    pub g_vertical: DTensor,
    pub nonlinear: NonlinearConnection,
    pub cartan: CartanConnection,
}

fn apply_fault(t: DTensor, key: &str, fault: Option<&Fault>) -> DTensor {
    match fault {
        Some(f) if f.object == key => {
            let idx: Vec<usize> = f.index.iter().map(|k| k - 1).collect();
            let mut t = t;
            let v = t.at(&idx).clone() * f.scale + f.offset;
            t.set(&idx, v);
            t
        }
        _ => t,
    }
}

fn metric_tensor(name: &str, slots: [crate::tensor::IndexSlot; 2], mat: &[Vec<Expr>], m: usize, n: usize) -> DTensor {
    DTensor::from_fn(name, &slots, m, n, |i| mat[i[0]][i[1]].clone())
}

/// `chi^a_bc = (h^ad / 2)(d h_db / dt^c + d h_dc / dt^b - d h_bc / dt^d)`
pub fn temporal_christoffel(space: &HamiltonSpace) -> DTensor {
    let m = space.m;
    let (h, hi) = (&space.h, &space.h_inv);
    DTensor::from_fn("chi", &[T_UP, T_DOWN, T_DOWN], m, space.n, |ix| {
        let (a, b, c) = (ix[0], ix[1], ix[2]);
        let terms = (0..m)
            .map(|d| {
                let bracket = h[d][b].diff(VarRef::t(c)) + h[d][c].diff(VarRef::t(b)) - h[b][c].diff(VarRef::t(d));
                Expr::mul(vec![Expr::constant(0.5), hi[a][d].clone(), bracket])
            })
            .collect();
        Expr::add(terms)
    })
}

/// `Gamma^k_ij = (g^kl / 2)(d g_li / dx^j + d g_lj / dx^i - d g_ij / dx^l)`
pub fn spatial_christoffel(space: &HamiltonSpace) -> DTensor {
    let n = space.n;
    let (g, gi) = (&space.g, &space.g_inv);
    DTensor::from_fn("gamma", &[S_UP, S_DOWN, S_DOWN], space.m, n, |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        let terms = (0..n)
            .map(|l| {
                let bracket = g[l][i].diff(VarRef::x(j)) + g[l][j].diff(VarRef::x(i)) - g[i][j].diff(VarRef::x(l));
                Expr::mul(vec![Expr::constant(0.5), gi[k][l].clone(), bracket])
            })
            .collect();
        Expr::add(terms)
    })
}

/// `G^(i)(j)_(a)(b) = h_ab g^ij`
pub fn vertical_metric(space: &HamiltonSpace) -> DTensor {
    DTensor::from_fn("G", &[S_UP, S_UP, T_DOWN, T_DOWN], space.m, space.n, |ix| {
        &space.h[ix[2]][ix[3]] * &space.g_inv[ix[0]][ix[1]]
    })
}

/// The canonical nonlinear connection from `chi` and `gamma`.
pub fn nonlinear_connection(space: &HamiltonSpace, chi: &DTensor, gamma: &DTensor) -> NonlinearConnection {
    let (m, n) = (space.m, space.n);
    let fault = space.fault.as_ref();
    let n1 = DTensor::from_fn("N1", &[T_UP, S_DOWN, T_DOWN], m, n, |ix| {
        let (a, i, b) = (ix[0], ix[1], ix[2]);
        Expr::add((0..m).map(|c| chi.at(&[a, b, c]) * Expr::p(i, c)).collect())
    });
    let n1 = apply_fault(n1, "N1", fault);

    let ham = space.hamiltonian();
    let (g, hi) = (&space.g, &space.h_inv);
    let dh_dp: Vec<Vec<Expr>> = (0..n).map(|k| (0..m).map(|b| ham.diff(VarRef::p(k, b))).collect()).collect();
    let dh_dx: Vec<Expr> = (0..n).map(|k| ham.diff(VarRef::x(k))).collect();
    let n2_general = DTensor::from_fn("N2", &[T_UP, S_DOWN, S_DOWN], m, n, |ix| {
        let (a, i, j) = (ix[0], ix[1], ix[2]);
        let mut terms = Vec::new();
        for b in 0..m {
            if hi[a][b].is_zero() {
                continue;
            }
            let mut inner = Vec::new();
            for k in 0..n {
                inner.push(g[i][j].diff(VarRef::x(k)) * &dh_dp[k][b]);
                inner.push(-(g[i][j].diff(VarRef::p(k, b)) * &dh_dx[k]));
                inner.push(&g[i][k] * dh_dp[k][b].diff(VarRef::x(j)));
                inner.push(&g[j][k] * dh_dp[k][b].diff(VarRef::x(i)));
            }
            terms.push(Expr::mul(vec![Expr::constant(0.25), hi[a][b].clone(), Expr::add(inner)]));
        }
        Expr::add(terms)
    });

    let (n2, n2_corollary, t_aux) = if m >= 2 {
        let u_low: Vec<Vec<Expr>> = (0..n)
            .map(|i| (0..m).map(|b| Expr::add((0..n).map(|k| &g[i][k] * &space.u[k][b]).collect())).collect())
            .collect();
        // U_kb.r = dU_kb/dx^r - U_sb Gamma^s_kr
        let bullet = |k: usize, b: usize, r: usize| -> Expr {
            let mut terms = vec![u_low[k][b].diff(VarRef::x(r))];
            for s in 0..n {
                terms.push(-(&u_low[s][b] * gamma.at(&[s, k, r])));
            }
            Expr::add(terms)
        };
        let t_aux = DTensor::from_fn("T", &[T_UP, S_DOWN, S_DOWN], m, n, |ix| {
            let (a, i, j) = (ix[0], ix[1], ix[2]);
            let terms = (0..m)
                .filter(|b| !hi[a][*b].is_zero())
                .map(|b| Expr::mul(vec![Expr::constant(0.25), hi[a][b].clone(), bullet(i, b, j) + bullet(j, b, i)]))
                .collect();
            Expr::add(terms)
        });
        let corollary = DTensor::from_fn("N2", &[T_UP, S_DOWN, S_DOWN], m, n, |ix| {
            let (a, i, j) = (ix[0], ix[1], ix[2]);
            let mut terms: Vec<Expr> = (0..n).map(|k| -(gamma.at(&[k, i, j]) * Expr::p(k, a))).collect();
            terms.push(t_aux.at(ix).clone());
            Expr::add(terms)
        });
        (corollary.clone(), Some(corollary), Some(t_aux))
    } else {
        (n2_general.clone(), None, None)
    };
    let n2 = apply_fault(n2, "N2", fault);

    NonlinearConnection {
        n1,
        n2,
        n2_general,
        n2_corollary,
        t_aux,
        m,
        n,
    }
}

/// The Cartan canonical connection.
pub fn cartan_connection(
    space: &HamiltonSpace,
    nonlinear: &NonlinearConnection,
    chi: &DTensor,
    gamma: &DTensor,
) -> CartanConnection {
    let (m, n) = (space.m, space.n);
    let (g, gi) = (&space.g, &space.g_inv);
    let fault = space.fault.as_ref();

    let a_general = DTensor::from_fn("A", &[S_UP, S_DOWN, T_DOWN], m, n, |ix| {
        let (i, j, c) = (ix[0], ix[1], ix[2]);
        Expr::add(
            (0..n)
                .map(|l| Expr::mul(vec![Expr::constant(0.5), gi[i][l].clone(), nonlinear.delta_t(&g[l][j], c)]))
                .collect(),
        )
    });
    let dx: Vec<Vec<Vec<Expr>>> = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| nonlinear.delta_x(&g[i][j], k)).collect()).collect())
        .collect();
    let h_general = DTensor::from_fn("H", &[S_UP, S_DOWN, S_DOWN], m, n, |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        Expr::add(
            (0..n)
                .map(|r| {
                    let bracket = &dx[j][r][k] + &dx[k][r][j] - &dx[j][k][r];
                    Expr::mul(vec![Expr::constant(0.5), gi[i][r].clone(), bracket])
                })
                .collect(),
        )
    });
    let c_general = DTensor::from_fn("C", &[S_UP, S_UP, S_DOWN, T_DOWN], m, n, |ix| {
        let (i, k, j, c) = (ix[0], ix[1], ix[2], ix[3]);
        Expr::add(
            (0..n)
                .map(|r| {
                    let bracket = gi[i][r].diff(VarRef::p(k, c)) + gi[k][r].diff(VarRef::p(i, c))
                        - gi[i][k].diff(VarRef::p(r, c));
                    Expr::mul(vec![Expr::constant(-0.5), g[j][r].clone(), bracket])
                })
                .collect(),
        )
    });

    let (a, h, c) = if m >= 2 {
        let a = DTensor::from_fn("A", &[S_UP, S_DOWN, T_DOWN], m, n, |ix| {
            let (i, j, c) = (ix[0], ix[1], ix[2]);
            Expr::add(
                (0..n)
                    .map(|l| Expr::mul(vec![Expr::constant(0.5), gi[i][l].clone(), g[l][j].diff(VarRef::t(c))]))
                    .collect(),
            )
        });
        let h = gamma.clone().renamed("H");
        let c = DTensor::zeros("C", &[S_UP, S_UP, S_DOWN, T_DOWN], m, n);
        (a, h, c)
    } else {
        (a_general.clone(), h_general.clone(), c_general.clone())
    };

    CartanConnection {
        chi: chi.clone(),
        a: apply_fault(a, "A", fault),
        h: apply_fault(h, "H", fault),
        c: apply_fault(c, "C", fault),
        a_general,
        h_general,
        c_general,
    }
}

impl Geometry {
    pub fn new(space: &HamiltonSpace) -> Geometry {
        let (m, n) = (space.m, space.n);
        let fault = space.fault.as_ref();
        let chi = apply_fault(temporal_christoffel(space), "chi", fault);
        let gamma = apply_fault(spatial_christoffel(space), "gamma", fault);
        let nonlinear = nonlinear_connection(space, &chi, &gamma);
        let cartan = cartan_connection(space, &nonlinear, &chi, &gamma);
        Geometry {
            hamiltonian: space.hamiltonian(),
            h_lower: metric_tensor("h", [T_DOWN, T_DOWN], &space.h, m, n),
            h_upper: metric_tensor("h_inv", [T_UP, T_UP], &space.h_inv, m, n),
            g_lower: metric_tensor("g", [S_DOWN, S_DOWN], &space.g, m, n),
            g_upper: metric_tensor("g_inv", [S_UP, S_UP], &space.g_inv, m, n),
            p: DTensor::from_fn("p", &[T_UP, S_DOWN], m, n, |ix| Expr::p(ix[1], ix[0])),
            g_vertical: vertical_metric(space),
            chi,
            gamma,
            nonlinear,
            cartan,
            space: space.clone(),
        }
    }

    pub fn m(&self) -> usize {
        self.space.m
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn h(&self, a: usize, b: usize) -> &Expr {
        &self.space.h[a][b]
    }

    pub fn h_inv(&self, a: usize, b: usize) -> &Expr {
        &self.space.h_inv[a][b]
    }

    pub fn g(&self, i: usize, j: usize) -> &Expr {
        &self.space.g[i][j]
    }

    pub fn g_inv(&self, i: usize, j: usize) -> &Expr {
        &self.space.g_inv[i][j]
    }

    pub fn derivative(&self, e: &Expr, dir: Direction) -> Expr {
        self.nonlinear.derivative(e, dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Point;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn sphere_point(x1: f64, x2: f64) -> Point {
        let mut pt = Point::zeros(2, 2);
        pt.x = vec![x1, x2];
        pt.p = vec![vec![0.3, -0.7], vec![0.5, 0.2]];
        pt
    }

    #[test]
    fn flat_space_connections_vanish() {
        let geo = Geometry::new(&HamiltonSpace::bundled("flat2x2").unwrap());
        assert!(geo.chi.is_structurally_zero());
        assert!(geo.gamma.is_structurally_zero());
        assert!(geo.nonlinear.n1.is_structurally_zero());
        assert!(geo.nonlinear.n2.is_structurally_zero());
        assert!(geo.nonlinear.n2_general.is_structurally_zero());
        assert!(geo.cartan.a.is_structurally_zero());
        let pt = Point::zeros(2, 2);
        assert_eq!(geo.g_vertical.at(&[0, 0, 1, 1]).eval(&pt).unwrap(), -1.0);
    }

    #[test]
    fn exponential_time_metric_christoffel() {
        let src = "dims = { m = 1, n = 1 }\nh = [[\"exp(2*t1)\"]]\ng_inv = [[\"1\"]]\n";
        let geo = Geometry::new(&HamiltonSpace::from_toml(src).unwrap());
        assert!(geo.chi.at(&[0, 0, 0]).is_one());
    }

    #[test]
    fn sphere_christoffels() {
        let geo = Geometry::new(&HamiltonSpace::bundled("sphere2").unwrap());
        let pt = sphere_point(0.7, 0.1);
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        assert!(close(geo.gamma.at(&[0, 1, 1]).eval(&pt).unwrap(), -s * c, 1e-14));
        assert!(close(geo.gamma.at(&[1, 0, 1]).eval(&pt).unwrap(), c / s, 1e-14));
        assert!(close(geo.gamma.at(&[1, 1, 0]).eval(&pt).unwrap(), c / s, 1e-14));
    }

    #[test]
    fn sphere_n2_at_quarter_turn() {
        let geo = Geometry::new(&HamiltonSpace::bundled("sphere2").unwrap());
        let pt = sphere_point(std::f64::consts::FRAC_PI_4, 0.3);
        for a in 0..2 {
            let v = geo.nonlinear.n2.at(&[a, 1, 1]).eval(&pt).unwrap();
            assert!(close(v, 0.5 * pt.p[0][a], 1e-14));
            let w = geo.nonlinear.n2_general.at(&[a, 1, 1]).eval(&pt).unwrap();
            assert!(close(w, v, 1e-12));
        }
    }

    #[test]
    fn timewarp_cartan_a_is_identity_in_first_time() {
        let geo = Geometry::new(&HamiltonSpace::bundled("timewarp").unwrap());
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(geo.cartan.a.at(&[i, j, 0]).as_const(), Some(want));
                assert!(geo.cartan.a.at(&[i, j, 1]).is_zero());
            }
        }
    }

    #[test]
    fn adapted_derivative_of_momentum() {
        let geo = Geometry::new(&HamiltonSpace::bundled("timewarp").unwrap());
        let e = Expr::p(1, 0);
        let d = geo.derivative(&e, Direction::Space(0));
        assert_eq!(d, -geo.nonlinear.n2.at(&[0, 1, 0]).clone());
        let d = geo.derivative(&e, Direction::Time(1));
        let want = -Expr::add((0..2).map(|f| geo.chi.at(&[0, f, 1]) * Expr::p(1, f)).collect());
        let pt = Point { t: vec![0.4, 0.9], x: vec![0.3, 0.5], p: vec![vec![0.2, -0.6], vec![0.7, 0.1]] };
        assert!(close(d.eval(&pt).unwrap(), want.eval(&pt).unwrap(), 1e-14));
        let e = Expr::x(0).sin();
        assert_eq!(geo.derivative(&e, Direction::Space(0)), Expr::x(0).cos());
    }

    #[test]
    fn m1_general_n2_is_levi_civita() {
        let geo = Geometry::new(&HamiltonSpace::bundled("m1sphere").unwrap());
        let mut pt = Point::zeros(1, 2);
        pt.x = vec![0.9, 0.2];
        pt.p = vec![vec![0.4], vec![-0.3]];
        for i in 0..2 {
            for j in 0..2 {
                let want: f64 = (0..2)
                    .map(|k| -geo.gamma.at(&[k, i, j]).eval(&pt).unwrap() * pt.p[k][0])
                    .sum();
                assert!(close(geo.nonlinear.n2.at(&[0, i, j]).eval(&pt).unwrap(), want, 1e-13));
            }
        }
    }
}
