//! Covariant derivatives of the Cartan connection, the d-torsion and
//! d-curvature tables, Ricci blocks and scalar curvature.

use crate::connections::{Direction, Geometry};
use crate::expr::{Expr, VarRef};
use crate::tensor::{DTensor, IndexSlot, Kind, Variance, S_DOWN, S_UP, T_DOWN, T_UP};

/// The three covariant derivatives of the Cartan connection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cov {
    /// `_/c`, based on `delta / delta t^c`; appends a temporal down slot.
    Time,
    /// `_|k`, based on `delta / delta x^k`; appends a spatial down slot.
    Space,
    /// `|^(k)_(c)`, based on `d / d p_k^c`; appends a spatial up slot `k`
    /// followed by a temporal down slot `c`.
    Vertical,
}

/// Covariant derivative of every component of `x`.
///
/// Per index: temporal up `+chi^d_fc`, temporal down `-chi^f_bc` (under
/// `/c` only); spatial up `+A^i_rc`, `+H^i_rk`, `+C^{i(k)}_{r(c)}` and
/// spatial down `-A^r_jc`, `-H^r_jk`, `-C^{r(k)}_{j(c)}` under `/c`, `|k`
/// and the vertical derivative respectively.
pub fn covariant(geo: &Geometry, x: &DTensor, kind: Cov) -> DTensor {
    let (m, n) = (geo.m(), geo.n());
    let mut slots = x.slots.clone();
    let (suffix, label) = match kind {
        Cov::Time => (vec![T_DOWN], "/"),
        Cov::Space => (vec![S_DOWN], "|"),
        Cov::Vertical => (vec![S_UP, T_DOWN], "|v"),
    };
    slots.extend(&suffix);
    let rank = x.rank();
    let cartan = &geo.cartan;
    DTensor::from_fn(format!("{}{}", x.name, label), &slots, m, n, |ix| {
        let (base, tail) = ix.split_at(rank);
        let dir = match kind {
            Cov::Time => Direction::Time(tail[0]),
            Cov::Space => Direction::Space(tail[0]),
            Cov::Vertical => Direction::Vertical { i: tail[0], a: tail[1] },
        };
        let mut terms = vec![geo.derivative(x.at(base), dir)];
        let mut moved = base.to_vec();
        for (q, slot) in x.slots.iter().enumerate() {
            let v = base[q];
            let extent = slot.extent(m, n);
            for s in 0..extent {
                let coeff: Option<Expr> = match (kind, slot.kind, slot.variance) {
                    (Cov::Time, Kind::Temporal, Variance::Up) => Some(cartan.chi.at(&[v, s, tail[0]]).clone()),
                    (Cov::Time, Kind::Temporal, Variance::Down) => Some(-cartan.chi.at(&[s, v, tail[0]])),
                    (Cov::Time, Kind::Spatial, Variance::Up) => Some(cartan.a.at(&[v, s, tail[0]]).clone()),
                    (Cov::Time, Kind::Spatial, Variance::Down) => Some(-cartan.a.at(&[s, v, tail[0]])),
                    (Cov::Space, Kind::Spatial, Variance::Up) => Some(cartan.h.at(&[v, s, tail[0]]).clone()),
                    (Cov::Space, Kind::Spatial, Variance::Down) => Some(-cartan.h.at(&[s, v, tail[0]])),
                    (Cov::Vertical, Kind::Spatial, Variance::Up) => {
                        Some(cartan.c.at(&[v, tail[0], s, tail[1]]).clone())
                    }
                    (Cov::Vertical, Kind::Spatial, Variance::Down) => {
                        Some(-cartan.c.at(&[s, tail[0], v, tail[1]]))
                    }
                    _ => None,
                };
                let Some(coeff) = coeff else { break };
                if coeff.is_zero() {
                    continue;
                }
                moved[q] = s;
                let comp = x.at(&moved);
                if !comp.is_zero() {
                    terms.push(coeff * comp);
                }
            }
            moved[q] = v;
        }
        Expr::add(terms)
    })
}

/// One entry of a torsion, curvature or Ricci table.
#[derive(Clone, Debug)]
pub struct Cell {
    pub name: &'static str,
    pub value: DTensor,
    /// An independent formula for the same cell, when the tables give one.
    pub alternate: Option<DTensor>,
    /// Whether the tables declare this cell zero for the active branch.
    pub expect_zero: bool,
}

impl Cell {
    fn new(name: &'static str, value: DTensor) -> Cell {
        Cell {
            name,
            value: value.renamed(name),
            alternate: None,
            expect_zero: false,
        }
    }

    fn zero(mut self, zero: bool) -> Cell {
        self.expect_zero = zero;
        self
    }

    fn with_alternate(mut self, alt: DTensor) -> Cell {
        self.alternate = Some(alt.renamed(self.name));
        self
    }
}

/// An ordered table of named cells.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub cells: Vec<Cell>,
}

impl Table {
    pub fn get(&self, name: &str) -> &DTensor {
        &self
            .cell(name)
            .unwrap_or_else(|| panic!("no cell `{name}`"))
            .value
    }

    pub fn cell(&self, name: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.name == name)
    }

    fn push(&mut self, cell: Cell) {
        self.cells.push(cell);
    }
}

fn kron(a: usize, b: usize) -> bool {
    a == b
}

fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::add(terms.into_iter().collect())
}

fn tensor(name: &str, slots: &[IndexSlot], geo: &Geometry, f: impl Fn(&[usize]) -> Expr + Sync) -> DTensor {
    DTensor::from_fn(name, slots, geo.m(), geo.n(), f)
}

/// `Rfrak^r_kij = dGamma^r_ki/dx^j - dGamma^r_kj/dx^i + Gamma^p_ki Gamma^r_pj - Gamma^p_kj Gamma^r_pi`
/// stored as `[r, k, i, j]`.
pub fn levi_civita_riemann(geo: &Geometry, gamma: &DTensor) -> DTensor {
    let n = geo.n();
    tensor("Rfrak^r_kij", &[S_UP, S_DOWN, S_DOWN, S_DOWN], geo, |ix| {
        let (r, k, i, j) = (ix[0], ix[1], ix[2], ix[3]);
        let mut terms = vec![
            gamma.at(&[r, k, i]).diff(VarRef::x(j)),
            -gamma.at(&[r, k, j]).diff(VarRef::x(i)),
        ];
        for p in 0..n {
            terms.push(gamma.at(&[p, k, i]) * gamma.at(&[r, p, j]));
            terms.push(-(gamma.at(&[p, k, j]) * gamma.at(&[r, p, i])));
        }
        sum(terms)
    })
}

/// `chi^d_abc = dchi^d_ab/dt^c - dchi^d_ac/dt^b + chi^f_ab chi^d_fc - chi^f_ac chi^d_fb`
/// stored as `[d, a, b, c]`.
fn temporal_riemann(geo: &Geometry) -> DTensor {
    let chi = &geo.cartan.chi;
    let m = geo.m();
    tensor("chi^d_abc", &[T_UP, T_DOWN, T_DOWN, T_DOWN], geo, |ix| {
        let (c, f, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        let mut terms = vec![
            chi.at(&[c, f, a]).diff(VarRef::t(b)),
            -chi.at(&[c, f, b]).diff(VarRef::t(a)),
        ];
        for d in 0..m {
            terms.push(chi.at(&[d, f, a]) * chi.at(&[c, d, b]));
            terms.push(-(chi.at(&[d, f, b]) * chi.at(&[c, d, a])));
        }
        sum(terms)
    })
}

/// The torsion cells of the Cartan connection.
pub fn torsion(geo: &Geometry) -> Table {
    let (m, n) = (geo.m(), geo.n());
    let multi = m >= 2;
    let nl = &geo.nonlinear;
    let c = &geo.cartan;
    let mut t = Table::default();

    t.push(
        Cell::new(
            "T^a_bc",
            tensor("", &[T_UP, T_DOWN, T_DOWN], geo, |ix| {
                c.chi.at(&[ix[0], ix[1], ix[2]]) - c.chi.at(&[ix[0], ix[2], ix[1]])
            }),
        )
        .zero(true),
    );
    t.push(
        Cell::new(
            "T^r_ij",
            tensor("", &[S_UP, S_DOWN, S_DOWN], geo, |ix| {
                c.h.at(&[ix[0], ix[1], ix[2]]) - c.h.at(&[ix[0], ix[2], ix[1]])
            }),
        )
        .zero(true),
    );
    t.push(Cell::new(
        "T^r_aj",
        tensor("", &[S_UP, T_DOWN, S_DOWN], geo, |ix| -c.a.at(&[ix[0], ix[2], ix[1]])),
    ));
    t.push(
        Cell::new(
            "P^r(j)_i(a)",
            tensor("", &[S_UP, S_UP, S_DOWN, T_DOWN], geo, |ix| c.c.at(ix).clone()),
        )
        .zero(multi),
    );

    // P^(f)(j)_(r)a(b) = dN1^(f)_(r)a/dp_j^b + delta^f_b A^j_ra - delta^j_r chi^f_ba
    let p_vht_general = tensor("", &[T_UP, S_UP, S_DOWN, T_DOWN, T_DOWN], geo, |ix| {
        let (f, j, r, a, b) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        let mut terms = vec![nl.n1.at(&[f, r, a]).diff(VarRef::p(j, b))];
        if kron(f, b) {
            terms.push(c.a.at(&[j, r, a]).clone());
        }
        if kron(j, r) {
            terms.push(-c.chi.at(&[f, b, a]));
        }
        sum(terms)
    });
    let p_vht_closed = tensor("", &[T_UP, S_UP, S_DOWN, T_DOWN, T_DOWN], geo, |ix| {
        let (f, j, r, a, b) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
        if kron(f, b) {
            c.a.at(&[j, r, a]).clone()
        } else {
            Expr::zero()
        }
    });
    t.push(if multi {
        Cell::new("P^(f)(j)_(r)a(b)", p_vht_closed).with_alternate(p_vht_general)
    } else {
        Cell::new("P^(f)(j)_(r)a(b)", p_vht_general).with_alternate(p_vht_closed)
    });

    // P^(f)(j)_(r)i(b) = dN2^(f)_(r)i/dp_j^b + delta^f_b H^j_ri
    t.push(
        Cell::new(
            "P^(f)(j)_(r)i(b)",
            tensor("", &[T_UP, S_UP, S_DOWN, S_DOWN, T_DOWN], geo, |ix| {
                let (f, j, r, i, b) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
                let mut terms = vec![nl.n2.at(&[f, r, i]).diff(VarRef::p(j, b))];
                if kron(f, b) {
                    terms.push(c.h.at(&[j, r, i]).clone());
                }
                sum(terms)
            }),
        )
        .zero(multi),
    );

    // R^(f)_(r)ab = delta_b N1^(f)_(r)a - delta_a N1^(f)_(r)b
    let r_tt_general = tensor("", &[T_UP, S_DOWN, T_DOWN, T_DOWN], geo, |ix| {
        let (f, r, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        nl.delta_t(nl.n1.at(&[f, r, a]), b) - nl.delta_t(nl.n1.at(&[f, r, b]), a)
    });
    let chi4 = temporal_riemann(geo);
    let r_tt_closed = tensor("", &[T_UP, S_DOWN, T_DOWN, T_DOWN], geo, |ix| {
        let (f, r, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        sum((0..m).map(|g| chi4.at(&[f, g, a, b]) * Expr::p(r, g)))
    });
    t.push(if multi {
        Cell::new("R^(f)_(r)ab", r_tt_closed).with_alternate(r_tt_general)
    } else {
        Cell::new("R^(f)_(r)ab", r_tt_general).with_alternate(r_tt_closed).zero(true)
    });

    // R^(f)_(r)aj = delta_j N1^(f)_(r)a - delta_a N2^(f)_(r)j
    let r_xt_general = tensor("", &[T_UP, S_DOWN, T_DOWN, S_DOWN], geo, |ix| {
        let (f, r, a, j) = (ix[0], ix[1], ix[2], ix[3]);
        nl.delta_x(nl.n1.at(&[f, r, a]), j) - nl.delta_t(nl.n2.at(&[f, r, j]), a)
    });
    let cell = Cell::new("R^(f)_(r)aj", r_xt_general.clone());
    t.push(match &nl.t_aux {
        Some(t_aux) => {
            // -dN2^(f)_(r)j/dt^a - chi^f_ca T^(c)_(r)j
            let closed = tensor("", &[T_UP, S_DOWN, T_DOWN, S_DOWN], geo, |ix| {
                let (f, r, a, j) = (ix[0], ix[1], ix[2], ix[3]);
                let mut terms = vec![-nl.n2.at(&[f, r, j]).diff(VarRef::t(a))];
                for cc in 0..m {
                    terms.push(-(c.chi.at(&[f, cc, a]) * t_aux.at(&[cc, r, j])));
                }
                sum(terms)
            });
            Cell::new("R^(f)_(r)aj", closed).with_alternate(r_xt_general)
        }
        None => cell,
    });

    // R^(f)_(r)ij = delta_j N2^(f)_(r)i - delta_i N2^(f)_(r)j
    let r_xx_general = tensor("", &[T_UP, S_DOWN, S_DOWN, S_DOWN], geo, |ix| {
        let (f, r, i, j) = (ix[0], ix[1], ix[2], ix[3]);
        nl.delta_x(nl.n2.at(&[f, r, i]), j) - nl.delta_x(nl.n2.at(&[f, r, j]), i)
    });
    t.push(match &nl.t_aux {
        Some(t_aux) => {
            // -Rfrak^k_rij p_k^f + [T^(f)_(r)i|j - T^(f)_(r)j|i]
            let rfrak = levi_civita_riemann(geo, &geo.gamma);
            let t_bar = covariant(geo, t_aux, Cov::Space);
            let closed = tensor("", &[T_UP, S_DOWN, S_DOWN, S_DOWN], geo, |ix| {
                let (f, r, i, j) = (ix[0], ix[1], ix[2], ix[3]);
                let mut terms: Vec<Expr> = (0..n).map(|k| -(rfrak.at(&[k, r, i, j]) * Expr::p(k, f))).collect();
                terms.push(t_bar.at(&[f, r, i, j]).clone());
                terms.push(-t_bar.at(&[f, r, j, i]));
                sum(terms)
            });
            Cell::new("R^(f)_(r)ij", closed).with_alternate(r_xx_general)
        }
        None => Cell::new("R^(f)_(r)ij", r_xx_general),
    });

    // vertical-vertical torsion, zero by the symmetry of C
    t.push(
        Cell::new(
            "S^(f)(i)(j)_(r)(a)(b)",
            tensor("", &[T_UP, S_UP, S_UP, S_DOWN, T_DOWN, T_DOWN], geo, |ix| {
                let (f, i, j, r, a, b) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
                let mut terms = Vec::new();
                if kron(f, b) {
                    terms.push(c.c.at(&[j, i, r, a]).clone());
                }
                if kron(f, a) {
                    terms.push(-c.c.at(&[i, j, r, b]));
                }
                sum(terms)
            }),
        )
        .zero(true),
    );
    t
}

/// The curvature cells of the Cartan connection, including the v-block
/// combinations.
pub fn curvature(geo: &Geometry, torsion: &Table) -> Table {
    let (m, n) = (geo.m(), geo.n());
    let multi = m >= 2;
    let nl = &geo.nonlinear;
    let cc = &geo.cartan;
    let (a, h, c) = (&cc.a, &cc.h, &cc.c);
    let r_tt = torsion.get("R^(f)_(r)ab");
    let r_xt = torsion.get("R^(f)_(r)aj");
    let r_xx = torsion.get("R^(f)_(r)ij");
    let p_vt = torsion.get("P^(f)(j)_(r)a(b)");
    let p_vx = torsion.get("P^(f)(j)_(r)i(b)");
    let mut t = Table::default();

    // C^{l(r)}_{i(f)} R^(f)_(r)XY
    let c_contract = |l: usize, i: usize, rt: &DTensor, x: usize, y: usize| -> Vec<Expr> {
        let mut terms = Vec::new();
        for r in 0..n {
            for f in 0..m {
                let coeff = c.at(&[l, r, i, f]);
                if !coeff.is_zero() {
                    terms.push(coeff * rt.at(&[f, r, x, y]));
                }
            }
        }
        terms
    };

    t.push(Cell::new("chi^d_abc", temporal_riemann(geo)).zero(!multi));

    // R^l_ibc = delta_c A^l_ib - delta_b A^l_ic + A^r_ib A^l_rc - A^r_ic A^l_rb + C^{l(r)}_{i(f)} R^(f)_(r)bc
    t.push(
        Cell::new(
            "R^l_ibc",
            tensor("", &[S_UP, S_DOWN, T_DOWN, T_DOWN], geo, |ix| {
                let (l, i, b, c_) = (ix[0], ix[1], ix[2], ix[3]);
                let mut terms = vec![nl.delta_t(a.at(&[l, i, b]), c_), -nl.delta_t(a.at(&[l, i, c_]), b)];
                for r in 0..n {
                    terms.push(a.at(&[r, i, b]) * a.at(&[l, r, c_]));
                    terms.push(-(a.at(&[r, i, c_]) * a.at(&[l, r, b])));
                }
                terms.extend(c_contract(l, i, r_tt, b, c_));
                sum(terms)
            }),
        )
        .zero(!multi),
    );

    // R^l_ibk = delta_k A^l_ib - delta_b H^l_ik + A^r_ib H^l_rk - H^r_ik A^l_rb + C^{l(r)}_{i(f)} R^(f)_(r)bk
    t.push(Cell::new(
        "R^l_ibk",
        tensor("", &[S_UP, S_DOWN, T_DOWN, S_DOWN], geo, |ix| {
            let (l, i, b, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut terms = vec![nl.delta_x(a.at(&[l, i, b]), k), -nl.delta_t(h.at(&[l, i, k]), b)];
            for r in 0..n {
                terms.push(a.at(&[r, i, b]) * h.at(&[l, r, k]));
                terms.push(-(h.at(&[r, i, k]) * a.at(&[l, r, b])));
            }
            terms.extend(c_contract(l, i, r_xt, b, k));
            sum(terms)
        }),
    ));

    // R^l_ijk = delta_k H^l_ij - delta_j H^l_ik + H^r_ij H^l_rk - H^r_ik H^l_rj + C^{l(r)}_{i(f)} R^(f)_(r)jk
    let r_xxx = tensor("", &[S_UP, S_DOWN, S_DOWN, S_DOWN], geo, |ix| {
        let (l, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
        let mut terms = vec![nl.delta_x(h.at(&[l, i, j]), k), -nl.delta_x(h.at(&[l, i, k]), j)];
        for r in 0..n {
            terms.push(h.at(&[r, i, j]) * h.at(&[l, r, k]));
            terms.push(-(h.at(&[r, i, k]) * h.at(&[l, r, j])));
        }
        terms.extend(c_contract(l, i, r_xx, j, k));
        sum(terms)
    });
    if multi {
        t.push(Cell::new("R^l_ijk", levi_civita_riemann(geo, h)).with_alternate(r_xxx));
    } else {
        t.push(Cell::new("R^l_ijk", r_xxx));
    }

    let c_time = covariant(geo, c, Cov::Time);
    let c_space = covariant(geo, c, Cov::Space);
    // P^l(k)_ib(c) = dA^l_ib/dp_k^c - C^{l(k)}_{i(c)/b} + C^{l(r)}_{i(f)} P^(f)(k)_(r)b(c)
    t.push(
        Cell::new(
            "P^l(k)_ib(c)",
            tensor("", &[S_UP, S_UP, S_DOWN, T_DOWN, T_DOWN], geo, |ix| {
                let (l, k, i, b, c_) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
                let mut terms = vec![a.at(&[l, i, b]).diff(VarRef::p(k, c_)), -c_time.at(&[l, k, i, c_, b])];
                for r in 0..n {
                    for f in 0..m {
                        terms.push(c.at(&[l, r, i, f]) * p_vt.at(&[f, k, r, b, c_]));
                    }
                }
                sum(terms)
            }),
        )
        .zero(multi),
    );
    // P^l(k)_ij(c) = dH^l_ij/dp_k^c - C^{l(k)}_{i(c)|j} + C^{l(r)}_{i(f)} P^(f)(k)_(r)j(c)
    t.push(
        Cell::new(
            "P^l(k)_ij(c)",
            tensor("", &[S_UP, S_UP, S_DOWN, S_DOWN, T_DOWN], geo, |ix| {
                let (l, k, i, j, c_) = (ix[0], ix[1], ix[2], ix[3], ix[4]);
                let mut terms = vec![h.at(&[l, i, j]).diff(VarRef::p(k, c_)), -c_space.at(&[l, k, i, c_, j])];
                for r in 0..n {
                    for f in 0..m {
                        terms.push(c.at(&[l, r, i, f]) * p_vx.at(&[f, k, r, j, c_]));
                    }
                }
                sum(terms)
            }),
        )
        .zero(multi),
    );
    // S^l(j)(k)_i(b)(c) = dC^{l(j)}_{i(b)}/dp_k^c - dC^{l(k)}_{i(c)}/dp_j^b
    //                     + C^{r(j)}_{i(b)} C^{l(k)}_{r(c)} - C^{r(k)}_{i(c)} C^{l(j)}_{r(b)}
    t.push(
        Cell::new(
            "S^l(j)(k)_i(b)(c)",
            tensor("", &[S_UP, S_UP, S_UP, S_DOWN, T_DOWN, T_DOWN], geo, |ix| {
                let (l, j, k, i, b, c_) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
                let mut terms = vec![
                    c.at(&[l, j, i, b]).diff(VarRef::p(k, c_)),
                    -c.at(&[l, k, i, c_]).diff(VarRef::p(j, b)),
                ];
                for r in 0..n {
                    terms.push(c.at(&[r, j, i, b]) * c.at(&[l, k, r, c_]));
                    terms.push(-(c.at(&[r, k, i, c_]) * c.at(&[l, j, r, b])));
                }
                sum(terms)
            }),
        )
        .zero(multi),
    );

    let chi_c = t.get("chi^d_abc").clone();
    let r_ibc = t.get("R^l_ibc").clone();
    let r_ibk = t.get("R^l_ibk").clone();
    let r_ijk = t.get("R^l_ijk").clone();
    // -R^(d)(i)_(l)(a)bc = delta^i_l chi^d_abc - delta^d_a R^i_lbc
    t.push(Cell::new(
        "-R^(d)(i)_(l)(a)bc",
        tensor("", &[T_UP, S_UP, S_DOWN, T_DOWN, T_DOWN, T_DOWN], geo, |ix| {
            let (d, i, l, a_, b, c_) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
            let mut terms = Vec::new();
            if kron(i, l) {
                terms.push(chi_c.at(&[d, a_, b, c_]).clone());
            }
            if kron(d, a_) {
                terms.push(-r_ibc.at(&[i, l, b, c_]));
            }
            sum(terms)
        }),
    ));
    // -R^(d)(i)_(l)(a)bk = -delta^d_a R^i_lbk
    t.push(Cell::new(
        "-R^(d)(i)_(l)(a)bk",
        tensor("", &[T_UP, S_UP, S_DOWN, T_DOWN, T_DOWN, S_DOWN], geo, |ix| {
            let (d, i, l, a_, b, k) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
            if kron(d, a_) {
                -r_ibk.at(&[i, l, b, k])
            } else {
                Expr::zero()
            }
        }),
    ));
    // -R^(d)(l)_(i)(a)jk = -delta^d_a R^l_ijk
    t.push(Cell::new(
        "-R^(d)(l)_(i)(a)jk",
        tensor("", &[T_UP, S_UP, S_DOWN, T_DOWN, S_DOWN, S_DOWN], geo, |ix| {
            let (d, l, i, a_, j, k) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
            if kron(d, a_) {
                -r_ijk.at(&[l, i, j, k])
            } else {
                Expr::zero()
            }
        }),
    ));
    t
}

/// Scalar curvatures.
#[derive(Clone, Debug)]
pub struct Scalars {
    /// `h^ab chi_ab`
    pub chi: Expr,
    /// `g^ij R_ij`
    pub r: Expr,
    /// `h^11 g_ij S^(i)(j)_(1)(1)`, zero for m >= 2.
    pub s: Expr,
    /// `R - S` for m = 1, `chi + R` for m >= 2.
    pub sc: Expr,
}

/// Ricci blocks `R_AB = R^D_ABD` and the scalar curvatures.
#[derive(Clone, Debug)]
pub struct Ricci {
    pub blocks: Table,
    pub scalars: Scalars,
}

impl Ricci {
    pub fn get(&self, name: &str) -> &DTensor {
        self.blocks.get(name)
    }
}

pub fn ricci(geo: &Geometry, curv: &Table) -> Ricci {
    let (m, n) = (geo.m(), geo.n());
    let multi = m >= 2;
    let chi_c = curv.get("chi^d_abc");
    let r_ibk = curv.get("R^l_ibk");
    let r_ijk = curv.get("R^l_ijk");
    let p_t = curv.get("P^l(k)_ib(c)");
    let p_x = curv.get("P^l(k)_ij(c)");
    let s_v = curv.get("S^l(j)(k)_i(b)(c)");
    let mut t = Table::default();

    t.push(
        Cell::new(
            "chi_ab",
            tensor("", &[T_DOWN, T_DOWN], geo, |ix| sum((0..m).map(|f| chi_c.at(&[f, ix[0], ix[1], f]).clone()))),
        )
        .zero(!multi),
    );
    t.push(Cell::new("R_ai", DTensor::zeros("", &[T_DOWN, S_DOWN], m, n)).zero(true));
    t.push(Cell::new(
        "R_ia",
        tensor("", &[S_DOWN, T_DOWN], geo, |ix| sum((0..n).map(|r| r_ibk.at(&[r, ix[0], ix[1], r]).clone()))),
    ));
    t.push(Cell::new(
        "R_ij",
        tensor("", &[S_DOWN, S_DOWN], geo, |ix| sum((0..n).map(|r| r_ijk.at(&[r, ix[0], ix[1], r]).clone()))),
    ));
    t.push(Cell::new("R_a(b)^(j)", DTensor::zeros("", &[T_DOWN, T_DOWN, S_UP], m, n)).zero(true));
    // P^(i)_(a)b = P^{i(r)}_{rb(a)}
    t.push(
        Cell::new(
            "P^(i)_(a)b",
            tensor("", &[S_UP, T_DOWN, T_DOWN], geo, |ix| {
                let (i, a, b) = (ix[0], ix[1], ix[2]);
                sum((0..n).map(|r| p_t.at(&[i, r, r, b, a]).clone()))
            }),
        )
        .zero(multi),
    );
    // P_i(b)^(j) = P^{r(j)}_{ir(b)}
    t.push(
        Cell::new(
            "P_i(b)^(j)",
            tensor("", &[S_DOWN, T_DOWN, S_UP], geo, |ix| {
                let (i, b, j) = (ix[0], ix[1], ix[2]);
                sum((0..n).map(|r| p_x.at(&[r, j, i, r, b]).clone()))
            }),
        )
        .zero(multi),
    );
    // P^(i)_(a)j = P^{i(r)}_{rj(a)}
    t.push(
        Cell::new(
            "P^(i)_(a)j",
            tensor("", &[S_UP, T_DOWN, S_DOWN], geo, |ix| {
                let (i, a, j) = (ix[0], ix[1], ix[2]);
                sum((0..n).map(|r| p_x.at(&[i, r, r, j, a]).clone()))
            }),
        )
        .zero(multi),
    );
    // S^(i)(j)_(a)(b) = S^{i(j)(r)}_{r(a)(b)}
    t.push(
        Cell::new(
            "S^(i)(j)_(a)(b)",
            tensor("", &[S_UP, S_UP, T_DOWN, T_DOWN], geo, |ix| {
                let (i, j, a, b) = (ix[0], ix[1], ix[2], ix[3]);
                sum((0..n).map(|r| s_v.at(&[i, j, r, r, a, b]).clone()))
            }),
        )
        .zero(multi),
    );

    let chi_ab = t.get("chi_ab");
    let r_ij = t.get("R_ij");
    let s_block = t.get("S^(i)(j)_(a)(b)");
    let chi = sum((0..m).flat_map(|a| (0..m).map(move |b| (a, b))).map(|(a, b)| geo.h_inv(a, b) * chi_ab.at(&[a, b])));
    let r = sum((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| geo.g_inv(i, j) * r_ij.at(&[i, j])));
    let s = if multi {
        Expr::zero()
    } else {
        sum((0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| Expr::mul(vec![geo.h_inv(0, 0).clone(), geo.g(i, j).clone(), s_block.at(&[i, j, 0, 0]).clone()])))
    };
    let sc = if multi { &chi + &r } else { &r - &s };
    Ricci {
        blocks: t,
        scalars: Scalars { chi, r, s, sc },
    }
}

/// Torsion, curvature and Ricci data of one space.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub torsion: Table,
    pub curvature: Table,
    pub ricci: Ricci,
    /// `Rfrak^r_kij` from the spatial Christoffel symbols.
    pub rfrak: DTensor,
}

impl CurvatureData {
    pub fn new(geo: &Geometry) -> CurvatureData {
        let torsion = torsion(geo);
        let curvature = curvature(geo, &torsion);
        let ricci = ricci(geo, &curvature);
        CurvatureData {
            rfrak: levi_civita_riemann(geo, &geo.gamma),
            torsion,
            curvature,
            ricci,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Point;
    use crate::space::HamiltonSpace;

    fn sphere_pt(x1: f64) -> Point {
        Point {
            t: vec![0.5, 0.5],
            x: vec![x1, 0.3],
            p: vec![vec![0.4, -0.2], vec![0.1, 0.7]],
        }
    }

    #[test]
    fn metric_is_parallel_on_sphere() {
        let geo = Geometry::new(&HamiltonSpace::bundled("sphere2_u").unwrap());
        let d = covariant(&geo, &geo.g_lower, Cov::Space);
        let v = d.eval(&sphere_pt(0.7)).unwrap();
        assert!(v.max_abs() < 1e-14, "{:?}", v.values);
    }

    #[test]
    fn sphere_curvature_and_ricci() {
        let geo = Geometry::new(&HamiltonSpace::bundled("sphere2").unwrap());
        let data = CurvatureData::new(&geo);
        let pt = sphere_pt(0.7);
        let s2 = 0.7f64.sin().powi(2);
        let r = data.curvature.get("R^l_ijk");
        assert!((r.at(&[0, 1, 0, 1]).eval(&pt).unwrap() + s2).abs() < 1e-12);
        assert!((r.at(&[0, 1, 1, 0]).eval(&pt).unwrap() - s2).abs() < 1e-12);
        let ric = data.ricci.get("R_ij").eval(&pt).unwrap();
        assert!((ric.at(&[0, 0]) - 1.0).abs() < 1e-12);
        assert!((ric.at(&[1, 1]) - s2).abs() < 1e-12);
        assert!((data.ricci.scalars.sc.eval(&pt).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_tables_vanish() {
        let geo = Geometry::new(&HamiltonSpace::bundled("flat2x2").unwrap());
        let data = CurvatureData::new(&geo);
        for cell in data.torsion.cells.iter().chain(&data.curvature.cells).chain(&data.ricci.blocks.cells) {
            assert!(cell.value.is_structurally_zero(), "{}", cell.name);
        }
    }

    #[test]
    fn timewarp_torsion_cells() {
        let geo = Geometry::new(&HamiltonSpace::bundled("timewarp").unwrap());
        let data = CurvatureData::new(&geo);
        let t = data.torsion.get("T^r_aj");
        let p = data.torsion.get("P^(f)(j)_(r)a(b)");
        for r in 0..2 {
            for j in 0..2 {
                let want = if r == j { -1.0 } else { 0.0 };
                assert_eq!(t.at(&[r, 0, j]).as_const(), Some(want));
                for f in 0..2 {
                    for b in 0..2 {
                        let want = if f == b && r == j { 1.0 } else { 0.0 };
                        assert_eq!(p.at(&[f, j, r, 0, b]).as_const().unwrap_or(f64::NAN), want);
                    }
                }
            }
        }
    }

    #[test]
    fn alternates_agree_and_zero_cells_vanish() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for name in ["sphere2", "sphere2_u", "timewarp", "m1sphere", "gravitational"] {
            let space = HamiltonSpace::bundled(name).unwrap();
            let geo = Geometry::new(&space);
            let data = CurvatureData::new(&geo);
            for _ in 0..3 {
                let pt = space.domain.sample(&mut rng);
                let cells = data.torsion.cells.iter().chain(&data.curvature.cells).chain(&data.ricci.blocks.cells);
                for cell in cells {
                    let v = cell.value.eval(&pt).unwrap();
                    if let Some(alt) = &cell.alternate {
                        let w = alt.eval(&pt).unwrap();
                        for (x, y) in v.values.iter().zip(&w.values) {
                            assert!((x - y).abs() < 1e-9, "{name} {}: {x} vs {y}", cell.name);
                        }
                    }
                    if cell.expect_zero {
                        assert!(v.max_abs() < 1e-9, "{name} {} not zero", cell.name);
                    }
                }
            }
        }
    }
}
