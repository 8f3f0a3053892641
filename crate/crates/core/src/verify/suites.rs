//! The identity families sampled by `run_suite`.

use super::oracle::{central_difference, Hamiltonian, NumericMetric};
use super::{Check, Mode, SampleConfig, Suite, VerifyError};
use crate::connections::Geometry;
use crate::curvature::{covariant, Cov, CurvatureData, Table};
use crate::expr::{EvalCache, Expr, Point, VarRef};
use crate::field::{self, BlockRole, FieldInputs, Identity};
use crate::space::HamiltonSpace;
use crate::tensor::{DTensor, IndexSlot, S_DOWN, S_UP, T_DOWN, T_UP};

/// Tolerance of the finite-difference checks: `|L - R| <= 1e-6 max(1, |v|)`.
const FD_TOL: f64 = 1e-6;
/// Tolerance of numeric oracle comparisons.
const ORACLE_TOL: f64 = 1e-6;
/// Tolerance of identities required to vanish to rounding.
const STRICT_TOL: f64 = 1e-12;

fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::add(terms.into_iter().collect())
}

fn from_identity(id: Identity) -> Check {
    Check::tensors(id.name, id.construct, id.lhs, id.rhs)
}

/// Covariant derivatives of the metrics that the Cartan connection keeps
/// parallel.
fn metricity(geo: &Geometry) -> Vec<Check> {
    let cases = [
        ("g_ij|k = 0", "Cartan connection: horizontal spatial metricity", &geo.g_lower, Cov::Space),
        ("g^ij|^(k)_(c) = 0", "Cartan connection: vertical metricity of g^ij", &geo.g_upper, Cov::Vertical),
        ("h_ab/c = 0", "Cartan connection: temporal metricity of h", &geo.h_lower, Cov::Time),
        ("h_ab|k = 0", "Cartan connection: spatial derivative of h", &geo.h_lower, Cov::Space),
        ("h_ab|^(k)_(c) = 0", "Cartan connection: vertical derivative of h", &geo.h_lower, Cov::Vertical),
        ("g_ij/c = 0", "Cartan connection: temporal metricity of g", &geo.g_lower, Cov::Time),
    ];
    cases
        .into_iter()
        .map(|(name, construct, t, kind)| Check::zero(name, construct, covariant(geo, t, kind)))
        .collect()
}

fn table_cells(kind: &str, table: &Table) -> Vec<Check> {
    let mut out = Vec::new();
    for cell in &table.cells {
        if let Some(alt) = &cell.alternate {
            out.push(Check::tensors(
                format!("{kind} {}: closed = general", cell.name),
                format!("{kind} table cell {}", cell.name),
                cell.value.clone(),
                alt.clone(),
            ));
        }
        if cell.expect_zero {
            out.push(Check::zero(
                format!("{kind} {} = 0", cell.name),
                format!("{kind} table: vanishing cell {}", cell.name),
                cell.value.clone(),
            ));
        }
    }
    out
}

fn transposed(t: &DTensor, p: usize, q: usize) -> DTensor {
    t.map(format!("{}^T", t.name), |ix, _| {
        let mut sw = ix.to_vec();
        sw.swap(p, q);
        t.at(&sw).clone()
    })
}

/// `g^ir X^j_r.. + g^jr X^i_r..` for a curvature tensor whose first two
/// slots are `l, i`.
fn raised_symmetrization(geo: &Geometry, x: &DTensor, name: &str) -> DTensor {
    let mut slots = vec![S_UP, S_UP];
    slots.extend(&x.slots[2..]);
    let n = geo.n();
    DTensor::from_fn(name, &slots, geo.m(), n, |ix| {
        let (i, j, rest) = (ix[0], ix[1], &ix[2..]);
        let at = |up: usize, r: usize| {
            let mut k = vec![up, r];
            k.extend_from_slice(rest);
            x.at(&k).clone()
        };
        sum((0..n).flat_map(|r| [geo.g_inv(i, r) * at(j, r), geo.g_inv(j, r) * at(i, r)]))
    })
}

/// Closed forms against general formulas, vanishing cells, symmetries.
fn tables(geo: &Geometry, curv: &CurvatureData) -> Vec<Check> {
    let mut out = Vec::new();
    let nl = &geo.nonlinear;
    let cc = &geo.cartan;
    if geo.m() >= 2 {
        out.push(Check::tensors(
            "N2 general = -Gamma p + T",
            "nonlinear connection: general formula against the multi-time corollary",
            nl.n2_general.clone(),
            nl.n2.clone(),
        ));
        out.push(Check::tensors("A closed = general", "Cartan connection: A^i_jc", cc.a.clone(), cc.a_general.clone()));
        out.push(Check::tensors("H closed = general", "Cartan connection: H^i_jk", cc.h.clone(), cc.h_general.clone()));
        out.push(Check::tensors("C closed = general", "Cartan connection: C^{i(k)}_{j(c)}", cc.c.clone(), cc.c_general.clone()));
        out.push(
            Check::zero("C = 0", "Cartan connection: vertical coefficients vanish", cc.c.clone())
                .with_tolerance(STRICT_TOL, STRICT_TOL),
        );
    }
    out.extend(table_cells("torsion", &curv.torsion));
    out.extend(table_cells("curvature", &curv.curvature));
    out.extend(table_cells("ricci", &curv.ricci.blocks));
    out.push(Check::tensors(
        "Gamma^k_ij = Gamma^k_ji",
        "spatial Christoffel symbols are symmetric",
        geo.gamma.clone(),
        transposed(&geo.gamma, 1, 2),
    ));
    out.push(Check::tensors(
        "chi^a_bc = chi^a_cb",
        "temporal Christoffel symbols are symmetric",
        geo.chi.clone(),
        transposed(&geo.chi, 1, 2),
    ));
    let c = &curv.curvature;
    out.push(Check::zero(
        "g^ir R^j_rbk + g^jr R^i_rbk = 0",
        "antisymmetry of the raised curvature R^l_ibk",
        raised_symmetrization(geo, c.get("R^l_ibk"), "sym R_ibk"),
    ));
    out.push(Check::zero(
        "g^ir R^j_rkl + g^jr R^i_rkl = 0",
        "antisymmetry of the raised curvature R^l_ijk",
        raised_symmetrization(geo, c.get("R^l_ijk"), "sym R_ijk"),
    ));
    // P^l(k)_ij(c) is stored [l, k, i, j, c]; move k behind the pair.
    let p = c.get("P^l(k)_ij(c)");
    let p_reordered = DTensor::from_fn("P", &[S_UP, S_DOWN, S_DOWN, S_UP, T_DOWN], geo.m(), geo.n(), |ix| {
        p.at(&[ix[0], ix[3], ix[1], ix[2], ix[4]]).clone()
    });
    out.push(Check::zero(
        "g^ir P^j(l)_rk(c) + g^jr P^i(l)_rk(c) = 0",
        "antisymmetry of the raised curvature P^l(k)_ij(c)",
        raised_symmetrization(geo, &p_reordered, "sym P"),
    ));
    out
}

fn deflection(geo: &Geometry, curv: &CurvatureData, defl: &field::Deflections) -> Vec<Check> {
    let (m, n) = (geo.m(), geo.n());
    let inp = FieldInputs { geo, curv, defl };
    let mut out: Vec<Check> = field::deflection_identities(&inp).into_iter().map(from_identity).collect();
    let lv = &defl.liouville;
    let cov_v = covariant(geo, lv, Cov::Vertical);
    out.push(Check::tensors(
        "Delta^(i)_(a)b = p^(i)_(a)/b",
        "metrical deflection: temporal covariant derivative of the Liouville field",
        defl.metrical_t.clone(),
        covariant(geo, lv, Cov::Time),
    ));
    out.push(Check::tensors(
        "Delta^(i)_(a)j = p^(i)_(a)|j",
        "metrical deflection: spatial covariant derivative of the Liouville field",
        defl.metrical_x.clone(),
        covariant(geo, lv, Cov::Space),
    ));
    out.push(Check::tensors(
        "theta^(i)(j)_(a)(b) = p^(i)_(a)|^(j)_(b)",
        "metrical deflection: vertical covariant derivative of the Liouville field",
        defl.metrical_v.clone(),
        DTensor::from_fn("", &[S_UP, S_UP, T_DOWN, T_DOWN], m, n, |ix| cov_v.at(&[ix[0], ix[2], ix[1], ix[3]]).clone()),
    ));
    out.push(Check::tensors(
        "Delta^(i)_(a)b closed form",
        "metrical deflection d-tensors in closed form (temporal)",
        defl.metrical_t.clone(),
        defl.closed_t.clone(),
    ));
    out.push(Check::tensors(
        "Delta^(i)_(a)j closed form",
        "metrical deflection d-tensors in closed form (spatial)",
        defl.metrical_x.clone(),
        defl.closed_x.clone(),
    ));
    out.push(Check::tensors(
        "theta^(i)(j)_(a)(b) closed form",
        "metrical deflection d-tensors in closed form (vertical)",
        defl.metrical_v.clone(),
        defl.closed_v.clone(),
    ));
    if m >= 2 {
        let block = DTensor::from_fn("", &[S_UP, S_UP, T_DOWN, T_DOWN], m, n, |ix| geo.h(ix[2], ix[3]) * geo.g_inv(ix[0], ix[1]));
        out.push(
            Check::tensors(
                "theta^(i)(j)_(a)(b) = h_ab g^ij",
                "vertical deflection equals the fundamental vertical metric",
                defl.metrical_v.clone(),
                block,
            )
            .with_tolerance(STRICT_TOL, STRICT_TOL),
        );
        let closed = DTensor::from_fn("", &[S_UP, T_DOWN], m, n, |ix| {
            sum((0..m).flat_map(|b| (0..n).map(move |j| (b, j))).map(|(b, j)| {
                Expr::mul(vec![geo.h(ix[1], b).clone(), geo.g_inv(ix[0], j).clone(), Expr::p(j, b)])
            }))
        });
        out.push(Check::tensors(
            "p^(i)_(a) = h_ab g^ij p_j^b",
            "metrical Liouville field",
            lv.clone(),
            closed,
        ));
    }
    let em = field::em_field(geo, defl);
    out.push(Check::tensors(
        "F^(i)_(a)j closed form",
        "electromagnetic components in closed form",
        em.f.clone(),
        em.closed.clone(),
    ));
    out.push(Check::tensors(
        "F^(i)_(a)j = -F^(j)_(a)i",
        "electromagnetic components are antisymmetric",
        em.f.clone(),
        em.f.map("", |ix, _| -em.f.at(&[ix[2], ix[1], ix[0]])),
    ));
    out.push(
        Check::zero("f^(i)(j)_(a)(b) = 0", "vertical electromagnetic components vanish", em.f_vertical)
            .with_tolerance(STRICT_TOL, STRICT_TOL),
    );
    out
}

fn maxwell(geo: &Geometry, curv: &CurvatureData, defl: &field::Deflections) -> Vec<Check> {
    let inp = FieldInputs { geo, curv, defl };
    field::maxwell_identities(&inp).into_iter().map(from_identity).collect()
}

fn einstein(geo: &Geometry, curv: &CurvatureData, kappa: f64) -> Result<Vec<Check>, VerifyError> {
    let e = field::einstein(geo, curv, kappa)?;
    let (m, n) = (geo.m(), geo.n());
    let mut out = Vec::new();
    for b in e.compatibility() {
        out.push(Check::zero(
            format!("{} = 0", b.name),
            format!("Einstein-like equations: compatibility block {}", b.name),
            b.lhs.clone(),
        ));
    }
    let delta = |slots: [IndexSlot; 2]| DTensor::from_fn("delta", &slots, m, n, |ix| Expr::constant(f64::from(ix[0] == ix[1])));
    let hh = DTensor::from_fn("", &[T_UP, T_DOWN], m, n, |ix| sum((0..m).map(|c| geo.h_inv(ix[0], c) * geo.h(c, ix[1]))));
    let gg = DTensor::from_fn("", &[S_UP, S_DOWN], m, n, |ix| sum((0..n).map(|k| geo.g_inv(ix[0], k) * geo.g(k, ix[1]))));
    out.push(Check::tensors("h^ac h_cb = delta", "block metric: temporal inverse", hh, delta([T_UP, T_DOWN])));
    out.push(Check::tensors("g^ik g_kj = delta", "block metric: spatial inverse", gg, delta([S_UP, S_DOWN])));
    if let Some(t) = e.block("T_ij") {
        out.push(
            Check::tensors(
                "T_ij = T_ji",
                "Einstein-like equations: symmetry of the spatial stress-energy",
                t.lhs.clone(),
                transposed(&t.lhs, 0, 1),
            )
            .report_only(),
        );
    }
    let k = 1.0 / kappa;
    for b in e.blocks.iter().filter(|b| b.role == BlockRole::Determined) {
        out.push(
            Check::zero(
                format!("|{}|", b.name),
                format!("Einstein-like equations: stress-energy block {}", b.name),
                b.lhs.map(b.name, |_, x| x * k),
            )
            .report_only(),
        );
    }
    Ok(out)
}

fn conservation(space: &HamiltonSpace, geo: &Geometry, curv: &CurvatureData) -> Vec<Check> {
    let mode = if space.bianchi_expected { Mode::Required } else { Mode::ReportOnly };
    field::conservation(geo, curv)
        .laws
        .into_iter()
        .map(|id| from_identity(id).with_mode(mode))
        .collect()
}

/// Symbolic first partials of `t` against Richardson central differences.
pub fn fd_check(name: &str, t: &DTensor, partials: Vec<(VarRef, DTensor)>, step: f64) -> Check {
    let t = t.clone();
    Check::numeric(
        format!("fd: partials of {name}"),
        format!("symbolic first partials of {name} against central differences"),
        move |pt: &Point, cache: &mut EvalCache| {
            let mut sym = Vec::new();
            let mut num = Vec::new();
            for (v, d) in &partials {
                sym.extend(d.eval_cached(pt, cache)?.values);
                num.extend(central_difference(|q| Ok(t.eval(q)?.values), pt, *v, step)?);
            }
            Ok((sym, num))
        },
    )
    .with_scale(super::Scale::Magnitude)
    .with_tolerance(FD_TOL, FD_TOL)
}

fn fd_checks(space: &HamiltonSpace, geo: &Geometry, step: f64) -> Vec<Check> {
    let (m, n) = (space.m, space.n);
    let vars = VarRef::all(m, n);
    let matrix = |name: &str, mat: &[Vec<Expr>], slots| DTensor::from_fn(name, slots, m, n, |ix| mat[ix[0]][ix[1]].clone());
    let objects = [
        DTensor::scalar("H", space.hamiltonian(), m, n),
        matrix("h_ab", &space.h, &[T_DOWN, T_DOWN]),
        matrix("g^ij", &space.g_inv, &[S_UP, S_UP]),
        matrix("g_ij", &space.g, &[S_DOWN, S_DOWN]),
        geo.chi.clone().renamed("chi"),
        geo.gamma.clone().renamed("Gamma"),
        geo.g_vertical.clone().renamed("G"),
        geo.nonlinear.n1.clone().renamed("N1"),
        geo.nonlinear.n2.clone().renamed("N2"),
        geo.cartan.a.clone().renamed("A"),
        geo.cartan.h.clone().renamed("H^i_jk"),
        geo.cartan.c.clone().renamed("C"),
    ];
    objects
        .iter()
        .map(|t| {
            let partials = vars
                .iter()
                .map(|&v| (v, t.map(format!("d{}", t.name), |_, e| e.diff(v))))
                .collect();
            fd_check(&t.name, t, partials, step)
        })
        .collect()
}

fn numeric_check<F>(name: &str, construct: &str, symbolic: DTensor, numeric: F) -> Check
where
    F: Fn(&Point) -> Result<Vec<f64>, crate::expr::EvalError> + Send + Sync + 'static,
{
    Check::numeric(name, construct, move |pt: &Point, cache: &mut EvalCache| {
        Ok((symbolic.eval_cached(pt, cache)?.values, numeric(pt)?))
    })
    .with_tolerance(ORACLE_TOL, ORACLE_TOL)
}

/// Numeric first-principles recomputation of the symbolic objects.
fn oracle(space: &HamiltonSpace, geo: &Geometry, curv: &CurvatureData, cfg: &SampleConfig) -> Vec<Check> {
    let mut out = fd_checks(space, geo, cfg.fd_step);
    let ham = std::sync::Arc::new(Hamiltonian::new(space));
    let temporal = NumericMetric::temporal(space);
    {
        let t = temporal.clone();
        out.push(numeric_check("oracle: chi", "temporal Christoffel symbols", geo.chi.clone(), move |pt| t.christoffel(pt)));
    }
    {
        let hm = ham.clone();
        out.push(numeric_check("oracle: G", "fundamental vertical metric as a Hessian of H", geo.g_vertical.clone(), move |pt| {
            hm.vertical_metric(pt)
        }));
    }
    {
        let hm = ham.clone();
        out.push(numeric_check("oracle: N1", "temporal nonlinear connection", geo.nonlinear.n1.clone(), move |pt| hm.n1(pt)));
    }
    if space.g_depends_on_momenta() {
        out.push(
            Check::numeric(
                "oracle: spatial recomputation not applicable",
                "g depends on the momenta; Gamma, Rfrak, Ricci, N2 and the Cartan coefficients are not recomputed",
                |_: &Point, _: &mut EvalCache| Ok((Vec::new(), Vec::new())),
            )
            .report_only(),
        );
        return out;
    }
    let spatial = NumericMetric::spatial(space);
    let hm = ham.clone();
    out.push(numeric_check("oracle: N2", "spatial nonlinear connection, general formula", geo.nonlinear.n2.clone(), move |pt| {
        hm.n2(pt)
    }));
    let s = spatial.clone();
    out.push(numeric_check("oracle: Gamma", "spatial Christoffel symbols", geo.gamma.clone(), move |pt| s.christoffel(pt)));
    let s = spatial.clone();
    out.push(numeric_check("oracle: Rfrak", "Levi-Civita curvature of g", curv.rfrak.clone(), move |pt| s.riemann(pt)));
    let s = spatial.clone();
    out.push(numeric_check("oracle: R_ij", "spatial Ricci block", curv.ricci.get("R_ij").clone(), move |pt| s.ricci(pt)));
    let (r, sc) = (curv.ricci.scalars.r.clone(), curv.ricci.scalars.sc.clone());
    let (s, t) = (spatial.clone(), temporal.clone());
    out.push(
        Check::numeric("oracle: R and Sc", "scalar curvatures", move |pt: &Point, cache: &mut EvalCache| {
            let num_r = s.scalar(pt)?;
            let chi = if t.dim() >= 2 { t.scalar(pt)? } else { 0.0 };
            Ok((vec![r.eval_cached(pt, cache)?, sc.eval_cached(pt, cache)?], vec![num_r, chi + num_r]))
        })
        .with_tolerance(ORACLE_TOL, ORACLE_TOL),
    );
    let hm = ham.clone();
    out.push(numeric_check("oracle: A", "Cartan connection A^i_jc", geo.cartan.a.clone(), move |pt| hm.cartan_a(pt)));
    let s = spatial.clone();
    out.push(numeric_check("oracle: H", "Cartan connection H^i_jk", geo.cartan.h.clone(), move |pt| s.christoffel(pt)));
    let len = geo.cartan.c.components().len();
    out.push(numeric_check("oracle: C", "Cartan connection C^{i(k)}_{j(c)}", geo.cartan.c.clone(), move |_| Ok(vec![0.0; len])));
    out
}

/// The checks making up `suite` on `space`.
pub fn build_checks(space: &HamiltonSpace, suite: Suite, cfg: &SampleConfig, kappa: f64) -> Result<Vec<Check>, VerifyError> {
    let suites = suite.expand();
    let geo = Geometry::new(space);
    let mut out = Vec::new();
    let needs_curvature = suites.iter().any(|s| *s != Suite::Metricity);
    let curv = needs_curvature.then(|| CurvatureData::new(&geo));
    let needs_defl = suites.iter().any(|s| matches!(s, Suite::Deflection | Suite::Maxwell));
    let defl = needs_defl.then(|| field::deflections(&geo));
    if suites.contains(&Suite::Einstein) && kappa == 0.0 {
        return Err(field::FieldError::ZeroKappa.into());
    }
    for s in suites {
        let curv = curv.as_ref();
        match s {
            Suite::Metricity => out.extend(metricity(&geo)),
            Suite::Tables => out.extend(tables(&geo, curv.unwrap())),
            Suite::Deflection => out.extend(deflection(&geo, curv.unwrap(), defl.as_ref().unwrap())),
            Suite::Maxwell => out.extend(maxwell(&geo, curv.unwrap(), defl.as_ref().unwrap())),
            Suite::Einstein => out.extend(einstein(&geo, curv.unwrap(), kappa)?),
            Suite::Conservation => out.extend(conservation(space, &geo, curv.unwrap())),
            Suite::Oracle => out.extend(oracle(space, &geo, curv.unwrap(), cfg)),
            Suite::All => unreachable!("expanded"),
        }
    }
    Ok(out)
}
