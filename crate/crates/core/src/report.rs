//! Object selectors, point parsing and the stable text/JSON renderings
//! used by the command-line tool.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::connections::Geometry;
use crate::curvature::{CurvatureData, Table};
use crate::expr::{format_number, EvalCache, EvalError, Expr, Point, VarRef};
use crate::field::{self, FieldError};
use crate::space::{HamiltonSpace, SpaceError};
use crate::tensor::{bracket, multi_indices, DTensor, IndexSlot, Kind, Variance};
use crate::verify::{IdentityResult, SampleConfig, Suite, VerifyError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown object `{0}`; see --list-objects")]
    UnknownObject(String),
    #[error("invalid point `{0}`: {1}")]
    InvalidPoint(String, String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        match self {
            ReportError::UnknownObject(_) => "unknown_object",
            ReportError::InvalidPoint(..) => "invalid_point",
            ReportError::Space(e) => e.code(),
            ReportError::Verify(e) => e.code(),
            ReportError::Field(_) => "invalid_kappa",
            ReportError::Eval(_) => "evaluation_error",
        }
    }
}

/// One entry of a machine-readable error list.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ErrorEntry {
    pub code: String,
    pub message: String,
}

impl ErrorEntry {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> ErrorEntry {
        ErrorEntry {
            code: code.into(),
            message: message.into(),
        }
    }
}

impl From<&ReportError> for ErrorEntry {
    fn from(e: &ReportError) -> Self {
        ErrorEntry::new(e.code(), e.to_string())
    }
}

pub fn error_list(errors: &[ErrorEntry]) -> String {
    serde_json::to_string_pretty(errors).expect("error list serializes")
}

/// Objects `compute` can emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Object {
    Chi,
    Gamma,
    G,
    N,
    Cartan,
    Torsion,
    Curvature,
    Ricci,
    Scalar,
    Deflection,
    Em,
    Einstein,
}

impl Object {
    pub const ALL: [Object; 12] = [
        Object::Chi,
        Object::Gamma,
        Object::G,
        Object::N,
        Object::Cartan,
        Object::Torsion,
        Object::Curvature,
        Object::Ricci,
        Object::Scalar,
        Object::Deflection,
        Object::Em,
        Object::Einstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Object::Chi => "chi",
            Object::Gamma => "gamma",
            Object::G => "G",
            Object::N => "N",
            Object::Cartan => "cartan",
            Object::Torsion => "torsion",
            Object::Curvature => "curvature",
            Object::Ricci => "ricci",
            Object::Scalar => "scalar",
            Object::Deflection => "deflection",
            Object::Em => "em",
            Object::Einstein => "einstein",
        }
    }

    /// The geometric construct the selector emits.
    pub fn construct(self) -> &'static str {
        match self {
            Object::Chi => "temporal Christoffel symbols chi^a_bc of h_ab",
            Object::Gamma => "spatial Christoffel symbols Gamma^k_ij of g_ij",
            Object::G => "fundamental vertical metrical d-tensor G^(i)(j)_(a)(b)",
            Object::N => "canonical nonlinear connection N = (N1^(a)_(i)b, N2^(a)_(i)j)",
            Object::Cartan => "Cartan canonical connection CGamma(N) = (chi^a_bc, A^i_jc, H^i_jk, C^i(k)_j(c))",
            Object::Torsion => "torsion d-tensors of the Cartan connection (torsion table)",
            Object::Curvature => "curvature d-tensors of the Cartan connection (curvature table)",
            Object::Ricci => "Ricci d-tensor blocks",
            Object::Scalar => "scalar curvatures chi, R, S and Sc",
            Object::Deflection => "deflection d-tensors, raw and metrical, with the Liouville field",
            Object::Em => "electromagnetic components F^(i)_(a)j and f^(i)(j)_(a)(b)",
            Object::Einstein => "stress-energy blocks of the Einstein-like equations",
        }
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Object {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Object::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| ReportError::UnknownObject(s.to_string()))
    }
}

/// `name  construct` lines for every selector.
pub fn list_objects() -> String {
    Object::ALL
        .iter()
        .map(|o| format!("{:<11} {}\n", o.name(), o.construct()))
        .collect()
}

/// The domain midpoint overridden by `k=v` pairs such as `x1=0.7,p2_1=-0.3`.
/// Returns the point and whether it lies inside the sampling box.
pub fn parse_point(spec: &str, space: &HamiltonSpace) -> Result<(Point, bool), ReportError> {
    let bad = |msg: String| ReportError::InvalidPoint(spec.to_string(), msg);
    let mut pt = space.domain.midpoint();
    let names: Vec<(String, VarRef)> = VarRef::all(space.m, space.n).into_iter().map(|v| (v.to_string(), v)).collect();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = part.split_once('=').ok_or_else(|| bad(format!("expected name=value, got `{part}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let var = names
            .iter()
            .find(|(n, _)| n == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| bad(format!("`{key}` is not a coordinate of this space")))?;
        let x: f64 = value.parse().map_err(|_| bad(format!("`{value}` is not a number")))?;
        if !x.is_finite() {
            return Err(bad(format!("`{value}` is not finite")));
        }
        pt.set(var, x);
    }
    let inside = space.domain.contains(&pt);
    Ok((pt, inside))
}

fn slot_label(s: &IndexSlot) -> &'static str {
    match (s.kind, s.variance) {
        (Kind::Temporal, Variance::Up) => "t^",
        (Kind::Temporal, Variance::Down) => "t_",
        (Kind::Spatial, Variance::Up) => "s^",
        (Kind::Spatial, Variance::Down) => "s_",
    }
}

fn named(t: &DTensor, name: &str) -> DTensor {
    t.clone().renamed(name)
}

fn cells(table: &Table) -> Vec<DTensor> {
    table.cells.iter().map(|c| c.value.clone()).collect()
}

/// Components of an object, or its scalars.
pub enum Computed {
    Tensors(Vec<DTensor>),
    Scalars(Vec<(&'static str, Expr)>),
}

/// Build the symbolic components of `object` on `space`.
pub fn compute(space: &HamiltonSpace, object: Object, kappa: f64) -> Result<Computed, ReportError> {
    let geo = Geometry::new(space);
    let tensors = match object {
        Object::Chi => vec![named(&geo.chi, "chi^a_bc")],
        Object::Gamma => vec![named(&geo.gamma, "Gamma^k_ij")],
        Object::G => vec![named(&geo.g_vertical, "G^(i)(j)_(a)(b)")],
        Object::N => vec![
            named(&geo.nonlinear.n1, "N1^(a)_(i)b"),
            named(&geo.nonlinear.n2, "N2^(a)_(i)j"),
        ],
        Object::Cartan => vec![
            named(&geo.cartan.chi, "chi^a_bc"),
            named(&geo.cartan.a, "A^i_jc"),
            named(&geo.cartan.h, "H^i_jk"),
            named(&geo.cartan.c, "C^i(k)_j(c)"),
        ],
        Object::Torsion => cells(&crate::curvature::torsion(&geo)),
        Object::Curvature | Object::Ricci | Object::Scalar | Object::Einstein => {
            let curv = CurvatureData::new(&geo);
            match object {
                Object::Curvature => cells(&curv.curvature),
                Object::Ricci => cells(&curv.ricci.blocks),
                Object::Scalar => {
                    let s = &curv.ricci.scalars;
                    let mut out = vec![("chi", s.chi.clone()), ("R", s.r.clone())];
                    if space.m == 1 {
                        out.push(("S", s.s.clone()));
                    }
                    out.push(("Sc", s.sc.clone()));
                    return Ok(Computed::Scalars(out));
                }
                _ => field::einstein(&geo, &curv, kappa)?.stress_energy(),
            }
        }
        Object::Deflection => {
            let d = field::deflections(&geo);
            vec![d.raw_t, d.raw_x, d.raw_v, d.metrical_t, d.metrical_x, d.metrical_v, d.liouville]
        }
        Object::Em => {
            let d = field::deflections(&geo);
            let em = field::em_field(&geo, &d);
            vec![em.f, em.f_vertical]
        }
    };
    Ok(Computed::Tensors(tensors))
}

/// Output format of `compute`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}`; expected text or json")),
        }
    }
}

fn json_number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn value_json(e: &Expr, at: Option<&Point>, cache: &mut EvalCache) -> Result<Value, EvalError> {
    Ok(match at {
        Some(pt) => json_number(e.eval_cached(pt, cache)?),
        None => match e.as_const() {
            Some(c) => json_number(c),
            None => Value::String(e.to_string()),
        },
    })
}

fn value_text(e: &Expr, at: Option<&Point>, cache: &mut EvalCache) -> Result<String, EvalError> {
    Ok(match at {
        Some(pt) => format_number(e.eval_cached(pt, cache)?),
        None => e.to_string(),
    })
}

/// Render computed components, numerically when `at` is given. Components
/// appear in lexicographic order of their one-based indices.
pub fn render(
    space: &HamiltonSpace,
    object: Object,
    computed: &Computed,
    at: Option<&Point>,
    format: Format,
) -> Result<String, ReportError> {
    let mut cache = EvalCache::new();
    match format {
        Format::Text => {
            let mut out = format!("# {} on {}: {}\n", object, space.name, object.construct());
            match computed {
                Computed::Scalars(xs) => {
                    for (name, e) in xs {
                        out.push_str(&format!("{name} = {}\n", value_text(e, at, &mut cache)?));
                    }
                }
                Computed::Tensors(ts) => {
                    for t in ts {
                        for (idx, e) in multi_indices(&t.extents()).iter().zip(t.components()) {
                            out.push_str(&format!("{}{} = {}\n", t.name, bracket(idx), value_text(e, at, &mut cache)?));
                        }
                    }
                }
            }
            Ok(out)
        }
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("space".into(), json!(space.name));
            doc.insert("object".into(), json!(object.name()));
            doc.insert("construct".into(), json!(object.construct()));
            doc.insert("at".into(), at.map_or(Value::Null, |p| serde_json::to_value(p).expect("point serializes")));
            match computed {
                Computed::Scalars(xs) => {
                    let mut m = Map::new();
                    for (name, e) in xs {
                        m.insert((*name).into(), value_json(e, at, &mut cache)?);
                    }
                    doc.insert("scalars".into(), Value::Object(m));
                }
                Computed::Tensors(ts) => {
                    let mut list = Vec::new();
                    for t in ts {
                        let mut comps = Vec::new();
                        for (idx, e) in multi_indices(&t.extents()).iter().zip(t.components()) {
                            let one_based: Vec<usize> = idx.iter().map(|k| k + 1).collect();
                            comps.push(json!({"index": one_based, "value": value_json(e, at, &mut cache)?}));
                        }
                        let slots: Vec<&str> = t.slots.iter().map(slot_label).collect();
                        list.push(json!({"name": t.name, "slots": slots, "components": comps}));
                    }
                    doc.insert("tensors".into(), Value::Array(list));
                }
            }
            Ok(serde_json::to_string_pretty(&Value::Object(doc)).expect("report serializes") + "\n")
        }
    }
}

#[derive(Serialize)]
struct Tolerances {
    abs: f64,
    rel: f64,
}

/// The JSON document printed by `verify`.
#[derive(Serialize)]
pub struct VerifyReport<'a> {
    space: &'a str,
    suite: &'a str,
    seed: u64,
    samples: usize,
    tolerances: Tolerances,
    kappa: f64,
    results: &'a [IdentityResult],
}

impl<'a> VerifyReport<'a> {
    pub fn new(space: &'a HamiltonSpace, suite: Suite, cfg: &SampleConfig, kappa: f64, results: &'a [IdentityResult]) -> Self {
        VerifyReport {
            space: &space.name,
            suite: suite.name(),
            seed: cfg.seed,
            samples: cfg.count,
            tolerances: Tolerances {
                abs: cfg.tol_abs,
                rel: cfg.tol_rel,
            },
            kappa,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Whether every pass-required identity passed.
    pub fn passed(&self) -> bool {
        self.results.iter().all(IdentityResult::ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityResult> {
        self.results.iter().filter(|r| !r.ok())
    }
}
