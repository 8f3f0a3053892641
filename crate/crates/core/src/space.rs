//! Hamilton space definitions: loading, validation and symbolic inverses.
//!
//! A space is given by the structured tuple `(h, g_inv, U, F)` of
//!
//! ```text
//! H = h_ab(t) g^ij(t,x) p_i^a p_j^b + U^(i)_(a)(t,x) p_i^a + F(t,x)
//! ```
//!
//! For one temporal dimension a raw Hamiltonian `H_raw` may be given
//! instead, in which case `g^ij = h^11 * (1/2) d^2 H / dp_i^1 dp_j^1`.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{mask, parse_expr_with, EvalError, Expr, ParseError, Point, VarRef, MAX_DIM};

pub type Matrix = Vec<Vec<Expr>>;

/// Seed of the fixed sample set used while validating a space.
const VALIDATION_SEED: u64 = 0x005e_ed0f_5ace;
const SYMMETRY_SAMPLES: usize = 20;
const SINGULARITY_SAMPLES: usize = 50;
const SYMMETRY_TOL: f64 = 1e-10;
const SINGULAR_DET: f64 = 1e-12;
const INVERSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpaceError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed space document: {0}")]
    Document(String),
    #[error("dimensions out of range: m = {m}, n = {n}; each must lie in 1..={MAX_DIM}")]
    DimensionOutOfRange { m: i64, n: i64 },
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("field `{field}` must be {expected}")]
    Shape { field: String, expected: String },
    #[error("field `{field}`: {source}")]
    Expression { field: String, source: ParseError },
    #[error("field `{field}` {detail}")]
    InvalidDependency { field: String, detail: String },
    #[error("metric `{field}` is not symmetric: {detail}")]
    Asymmetric { field: String, detail: String },
    #[error("metric `{field}` is singular on the sampling domain: {detail}")]
    Singular { field: String, detail: String },
    #[error("a raw Hamiltonian is only accepted for m = 1; Kronecker h-regularity forces the structured form (h, g_inv, U, F) when m >= 2")]
    RawWithMultiTime,
    #[error("fields {0} cannot be combined")]
    Conflicting(String),
    #[error("Kronecker h-regularity fails: {0}")]
    Kronecker(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("field `{field}` cannot be evaluated on the domain: {source}")]
    Evaluation { field: String, source: EvalError },
    #[error("invalid fault block: {0}")]
    InvalidFault(String),
}

impl SpaceError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            SpaceError::Io { .. } => "io_error",
            SpaceError::Document(_) => "parse_error",
            SpaceError::DimensionOutOfRange { .. } => "dimension_out_of_range",
            SpaceError::MissingField(_) => "missing_required_field",
            SpaceError::Shape { .. } => "shape_mismatch",
            SpaceError::Expression { .. } => "expression_error",
            SpaceError::InvalidDependency { .. } => "invalid_dependency",
            SpaceError::Asymmetric { .. } => "asymmetric_metric",
            SpaceError::Singular { .. } => "singular_metric",
            SpaceError::RawWithMultiTime => "raw_hamiltonian_with_multi_time",
            SpaceError::Conflicting(_) => "conflicting_fields",
            SpaceError::Kronecker(_) => "kronecker_regularity",
            SpaceError::InvalidDomain(_) => "invalid_domain",
            SpaceError::Evaluation { .. } => "evaluation_error",
            SpaceError::InvalidFault(_) => "invalid_fault",
        }
    }
}

/// Sampling box: one closed interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    m: usize,
    n: usize,
    bounds: BTreeMap<VarRef, (f64, f64)>,
}

impl Domain {
    pub const DEFAULT_BASE: (f64, f64) = (0.2, 1.2);
    pub const DEFAULT_MOMENTUM: (f64, f64) = (-1.0, 1.0);

    pub fn default_for(m: usize, n: usize) -> Domain {
        let bounds = VarRef::all(m, n)
            .into_iter()
            .map(|v| {
                let b = match v {
                    VarRef::Momentum { .. } => Self::DEFAULT_MOMENTUM,
                    _ => Self::DEFAULT_BASE,
                };
                (v, b)
            })
            .collect();
        Domain { m, n, bounds }
    }

    pub fn bounds(&self, v: VarRef) -> (f64, f64) {
        self.bounds[&v]
    }

    pub fn set_bounds(&mut self, v: VarRef, lo: f64, hi: f64) {
        self.bounds.insert(v, (lo, hi));
    }

    /// True when some interval has zero width.
    pub fn is_degenerate(&self) -> bool {
        self.bounds.values().any(|(lo, hi)| lo == hi)
    }

    pub fn midpoint(&self) -> Point {
        let mut pt = Point::zeros(self.m, self.n);
        for (v, (lo, hi)) in &self.bounds {
            pt.set(*v, 0.5 * (lo + hi));
        }
        pt
    }

    pub fn contains(&self, pt: &Point) -> bool {
        self.bounds.iter().all(|(v, (lo, hi))| {
            pt.get(*v).is_some_and(|x| *lo <= x && x <= *hi)
        })
    }

    /// One uniform draw, coordinates taken in canonical order.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        let mut pt = Point::zeros(self.m, self.n);
        for v in VarRef::all(self.m, self.n) {
            let (lo, hi) = self.bounds[&v];
            let u: f64 = rng.gen();
            pt.set(v, lo + u * (hi - lo));
        }
        pt
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarRef, (f64, f64))> + '_ {
        self.bounds.iter().map(|(v, b)| (*v, *b))
    }
}

/// Deliberate corruption of one computed component, used by the bundled
/// negative-control fixtures. The component becomes `scale * value + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fault {
    pub object: String,
    /// One-based component index.
    pub index: Vec<usize>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
    /// Suites this corruption is expected to break.
    #[serde(default)]
    pub corrupts: Vec<String>,
}

fn one() -> f64 {
    1.0
}

/// Objects a [`Fault`] may target.
pub const FAULT_TARGETS: [&str; 7] = ["chi", "gamma", "N1", "N2", "A", "H", "C"];

/// A validated multi-time Hamilton space.
#[derive(Debug, Clone)]
pub struct HamiltonSpace {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub h: Matrix,
    pub h_inv: Matrix,
    pub g_inv: Matrix,
    pub g: Matrix,
    /// `u[i][a]` is `U^(i)_(a)`.
    pub u: Matrix,
    pub f: Expr,
    pub h_raw: Option<Expr>,
    pub domain: Domain,
    pub constants: BTreeMap<String, f64>,
    /// Whether the contracted Bianchi identity guarantees the conservation laws.
    pub bianchi_expected: bool,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum Entry {
    Text(String),
    Integer(i64),
    Number(f64),
}

impl Entry {
    fn text(&self) -> String {
        match self {
            Entry::Text(s) => s.clone(),
            Entry::Integer(k) => k.to_string(),
            Entry::Number(x) => format!("{x}"),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct Dims {
    m: i64,
    n: i64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    bianchi_expected: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    constants: BTreeMap<String, f64>,
    dims: Option<Dims>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_inv: Option<Vec<Vec<Entry>>>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    u: Option<Vec<Vec<Entry>>>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    f: Option<Entry>,
    #[serde(rename = "H_raw", default, skip_serializing_if = "Option::is_none")]
    h_raw: Option<Entry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    domain: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fault: Option<Fault>,
}

struct Ctx<'a> {
    m: usize,
    n: usize,
    constants: &'a BTreeMap<String, f64>,
}

impl Ctx<'_> {
    fn parse(&self, field: &str, e: &Entry) -> Result<Expr, SpaceError> {
        parse_expr_with(&e.text(), (self.m, self.n), self.constants)
            .map(|x| x.simplify())
            .map_err(|source| SpaceError::Expression {
                field: field.to_string(),
                source,
            })
    }

    fn matrix(
        &self,
        field: &str,
        rows: &[Vec<Entry>],
        shape: (usize, usize),
    ) -> Result<Matrix, SpaceError> {
        if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
            return Err(SpaceError::Shape {
                field: field.to_string(),
                expected: format!("a {}x{} array", shape.0, shape.1),
            });
        }
        rows.iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, e)| self.parse(&format!("{field}[{}][{}]", r + 1, c + 1), e))
                    .collect()
            })
            .collect()
    }
}

fn check_vars(field: &str, e: &Expr, allowed: u32, what: &str) -> Result<(), SpaceError> {
    if e.vars() & !allowed != 0 {
        return Err(SpaceError::InvalidDependency {
            field: field.to_string(),
            detail: format!("may depend only on {what}, got `{e}`"),
        });
    }
    Ok(())
}

fn eval_at(field: &str, e: &Expr, pt: &Point) -> Result<f64, SpaceError> {
    e.eval(pt).map_err(|source| SpaceError::Evaluation {
        field: field.to_string(),
        source,
    })
}

fn eval_matrix(field: &str, mat: &Matrix, pt: &Point) -> Result<DMatrix<f64>, SpaceError> {
    let k = mat.len();
    let mut out = DMatrix::zeros(k, k);
    for r in 0..k {
        for c in 0..k {
            out[(r, c)] = eval_at(field, &mat[r][c], pt)?;
        }
    }
    Ok(out)
}

fn validation_points(domain: &Domain, count: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    let mut pts = vec![domain.midpoint()];
    pts.extend((1..count).map(|_| domain.sample(&mut rng)));
    pts
}

fn check_symmetric(field: &str, mat: &Matrix, pts: &[Point]) -> Result<(), SpaceError> {
    let k = mat.len();
    for r in 0..k {
        for c in r + 1..k {
            if mat[r][c] == mat[c][r] {
                continue;
            }
            for pt in pts {
                let a = eval_at(field, &mat[r][c], pt)?;
                let b = eval_at(field, &mat[c][r], pt)?;
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(SpaceError::Asymmetric {
                        field: field.to_string(),
                        detail: format!(
                            "[{r1}][{c1}] = `{}` but [{c1}][{r1}] = `{}`",
                            mat[r][c],
                            mat[c][r],
                            r1 = r + 1,
                            c1 = c + 1
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

fn check_nonsingular(field: &str, mat: &Matrix, pts: &[Point]) -> Result<(), SpaceError> {
    for pt in pts {
        let det = eval_matrix(field, mat, pt)?.determinant();
        if det.abs() < SINGULAR_DET {
            return Err(SpaceError::Singular {
                field: field.to_string(),
                detail: format!("|det| = {:e} at {}", det.abs(), describe_point(pt)),
            });
        }
    }
    Ok(())
}

fn check_inverse(field: &str, mat: &Matrix, inv: &Matrix, pts: &[Point]) -> Result<(), SpaceError> {
    for pt in pts {
        let prod = eval_matrix(field, mat, pt)? * eval_matrix(field, inv, pt)?;
        let k = mat.len();
        let err = (prod - DMatrix::<f64>::identity(k, k)).abs().max();
        if err > INVERSE_TOL {
            return Err(SpaceError::Singular {
                field: field.to_string(),
                detail: format!("symbolic inverse is inaccurate ({err:e}) at {}", describe_point(pt)),
            });
        }
    }
    Ok(())
}

/// Signs of the eigenvalues, as (positive, negative) counts.
fn signature(mat: &DMatrix<f64>) -> (usize, usize) {
    let eig = SymmetricEigen::new(mat.clone());
    let pos = eig.eigenvalues.iter().filter(|l| **l > 0.0).count();
    (pos, mat.nrows() - pos)
}

pub(crate) fn describe_point(pt: &Point) -> String {
    let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
    let p: Vec<String> = pt.p.iter().map(|r| format!("[{}]", fmt(r))).collect();
    format!("t = [{}], x = [{}], p = [{}]", fmt(&pt.t), fmt(&pt.x), p.join(", "))
}

/// Symbolic determinant by Laplace expansion along the first row.
pub fn determinant(mat: &Matrix) -> Expr {
    let k = mat.len();
    let idx: Vec<usize> = (0..k).collect();
    det_minor(mat, 0, &idx)
}

fn det_minor(mat: &Matrix, row: usize, cols: &[usize]) -> Expr {
    if cols.len() == 1 {
        return mat[row][cols[0]].clone();
    }
    let mut terms = Vec::new();
    for (k, &c) in cols.iter().enumerate() {
        let entry = &mat[row][c];
        if entry.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = det_minor(mat, row + 1, &rest);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(Expr::mul(vec![Expr::constant(sign), entry.clone(), minor]));
    }
    Expr::add(terms)
}

/// Symbolic inverse by adjugate over determinant (k <= 4).
///
/// The determinant is not checked here; see [`check_invertible`] for the
/// sampled-domain test.
pub fn invert_metric(mat: &Matrix) -> Matrix {
    let k = mat.len();
    assert!(k <= MAX_DIM && mat.iter().all(|r| r.len() == k), "invert_metric needs a square matrix of size <= 4");
    let inv_det = Expr::powi(determinant(mat), -1);
    let mut out = vec![vec![Expr::zero(); k]; k];
    for r in 0..k {
        for c in 0..k {
            // inverse[r][c] = cofactor(c, r) / det
            let rows: Vec<usize> = (0..k).filter(|&x| x != c).collect();
            let cols: Vec<usize> = (0..k).filter(|&x| x != r).collect();
            let cof = if k == 1 {
                Expr::one()
            } else {
                let sub: Matrix = rows.iter().map(|&i| cols.iter().map(|&j| mat[i][j].clone()).collect()).collect();
                determinant(&sub)
            };
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            out[r][c] = Expr::mul(vec![Expr::constant(sign), cof, inv_det.clone()]);
        }
    }
    out
}

/// Reject `mat` if its determinant falls below `1e-12` at any sampled point.
pub fn check_invertible(field: &str, mat: &Matrix, domain: &Domain) -> Result<(), SpaceError> {
    check_nonsingular(field, mat, &validation_points(domain, SINGULARITY_SAMPLES))
}

impl HamiltonSpace {
    pub fn from_path(path: impl AsRef<Path>) -> Result<HamiltonSpace, SpaceError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| SpaceError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("space");
        Self::from_toml_named(&src, stem)
    }

    pub fn from_toml(src: &str) -> Result<HamiltonSpace, SpaceError> {
        Self::from_toml_named(src, "space")
    }

    /// Load `src`; `fallback_name` is used when the document has no `name`.
    pub fn from_toml_named(src: &str, fallback_name: &str) -> Result<HamiltonSpace, SpaceError> {
        let doc: SpaceDoc = toml::from_str(src).map_err(|e| SpaceError::Document(e.to_string()))?;
        build(doc, fallback_name)
    }

    /// A bundled space or negative-control fixture by name.
    pub fn bundled(name: &str) -> Option<HamiltonSpace> {
        bundled_source(name).map(|src| {
            Self::from_toml_named(src, name).unwrap_or_else(|e| panic!("bundled space `{name}` is invalid: {e}"))
        })
    }

    /// Load a path, or a bundled name when no such file exists.
    pub fn resolve(spec: &str) -> Result<HamiltonSpace, SpaceError> {
        if !Path::new(spec).exists() {
            if let Some(src) = bundled_source(spec) {
                return Self::from_toml_named(src, spec);
            }
        }
        Self::from_path(spec)
    }

    /// The Hamiltonian `H_raw`, or `h_ab g^ij p_i^a p_j^b + U^(i)_(a) p_i^a + F`.
    pub fn hamiltonian(&self) -> Expr {
        if let Some(h) = &self.h_raw {
            return h.clone();
        }
        let mut terms = Vec::new();
        for a in 0..self.m {
            for b in 0..self.m {
                for i in 0..self.n {
                    for j in 0..self.n {
                        terms.push(Expr::mul(vec![
                            self.h[a][b].clone(),
                            self.g_inv[i][j].clone(),
                            Expr::p(i, a),
                            Expr::p(j, b),
                        ]));
                    }
                }
            }
        }
        for i in 0..self.n {
            for a in 0..self.m {
                terms.push(self.u[i][a].clone() * Expr::p(i, a));
            }
        }
        terms.push(self.f.clone());
        Expr::add(terms)
    }

    /// Whether g depends on the polymomenta (only possible for m = 1).
    pub fn g_depends_on_momenta(&self) -> bool {
        self.g_inv.iter().flatten().any(|e| e.vars() & mask::MOMENTUM != 0)
    }

    /// Normalized document that reloads to the same component expressions.
    pub fn to_toml(&self) -> String {
        let mat = |m: &Matrix| -> Vec<Vec<Entry>> {
            m.iter().map(|r| r.iter().map(|e| Entry::Text(e.to_string())).collect()).collect()
        };
        let domain = self
            .domain
            .iter()
            .map(|(v, (lo, hi))| (v.to_string(), [lo, hi]))
            .collect();
        let doc = SpaceDoc {
            name: Some(self.name.clone()),
            bianchi_expected: self.bianchi_expected,
            constants: self.constants.clone(),
            dims: Some(Dims {
                m: self.m as i64,
                n: self.n as i64,
            }),
            h: Some(mat(&self.h)),
            g_inv: if self.h_raw.is_some() { None } else { Some(mat(&self.g_inv)) },
            u: if self.h_raw.is_some() { None } else { Some(mat(&self.u)) },
            f: if self.h_raw.is_some() { None } else { Some(Entry::Text(self.f.to_string())) },
            h_raw: self.h_raw.as_ref().map(|e| Entry::Text(e.to_string())),
            domain,
            fault: self.fault.clone(),
        };
        toml::to_string(&doc).expect("space documents always serialize")
    }
}

fn build(doc: SpaceDoc, fallback_name: &str) -> Result<HamiltonSpace, SpaceError> {
    let dims = doc.dims.ok_or_else(|| SpaceError::MissingField("dims".into()))?;
    let in_range = |k: i64| (1..=MAX_DIM as i64).contains(&k);
    if !in_range(dims.m) || !in_range(dims.n) {
        return Err(SpaceError::DimensionOutOfRange { m: dims.m, n: dims.n });
    }
    let (m, n) = (dims.m as usize, dims.n as usize);
    for name in doc.constants.keys() {
        if matches!(name.as_str(), "pi" | "e") || crate::expr::Func::from_name(name).is_some() {
            return Err(SpaceError::Document(format!("constant name `{name}` is reserved")));
        }
        if parse_expr_with(name, (m, n), &BTreeMap::new()).is_ok_and(|e| e.vars() != 0) {
            return Err(SpaceError::Document(format!("constant name `{name}` clashes with a coordinate")));
        }
    }
    let ctx = Ctx {
        m,
        n,
        constants: &doc.constants,
    };

    if doc.h_raw.is_some() && m >= 2 {
        return Err(SpaceError::RawWithMultiTime);
    }
    let h_rows = doc.h.as_ref().ok_or_else(|| SpaceError::MissingField("h".into()))?;
    let h = ctx.matrix("h", h_rows, (m, m))?;
    for (a, row) in h.iter().enumerate() {
        for (b, e) in row.iter().enumerate() {
            check_vars(&format!("h[{}][{}]", a + 1, b + 1), e, mask::TEMPORAL, "t")?;
        }
    }

    let h_raw = match &doc.h_raw {
        Some(e) => {
            if doc.u.is_some() || doc.f.is_some() {
                return Err(SpaceError::Conflicting("`H_raw` and `U`/`F`".into()));
            }
            Some(ctx.parse("H_raw", e)?)
        }
        None => None,
    };
    let declared_g_inv = match &doc.g_inv {
        Some(rows) => Some(ctx.matrix("g_inv", rows, (n, n))?),
        None if h_raw.is_some() => None,
        None => return Err(SpaceError::MissingField("g_inv".into())),
    };
    let base = mask::TEMPORAL | mask::SPATIAL;
    if let Some(g) = &declared_g_inv {
        let allowed = if m == 1 { base | mask::MOMENTUM } else { base };
        let what = if m == 1 { "(t, x, p)" } else { "(t, x)" };
        for (i, row) in g.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                check_vars(&format!("g_inv[{}][{}]", i + 1, j + 1), e, allowed, what)?;
            }
        }
    }
    let u = match &doc.u {
        Some(rows) => ctx.matrix("U", rows, (n, m))?,
        None => vec![vec![Expr::zero(); m]; n],
    };
    for (i, row) in u.iter().enumerate() {
        for (a, e) in row.iter().enumerate() {
            check_vars(&format!("U[{}][{}]", i + 1, a + 1), e, base, "(t, x)")?;
        }
    }
    let f = match &doc.f {
        Some(e) => ctx.parse("F", e)?,
        None => Expr::zero(),
    };
    check_vars("F", &f, base, "(t, x)")?;

    let domain = build_domain(m, n, &doc.domain)?;
    let pts = validation_points(&domain, SINGULARITY_SAMPLES);
    let sym_pts = &pts[..SYMMETRY_SAMPLES];

    check_symmetric("h", &h, sym_pts)?;
    check_nonsingular("h", &h, &pts)?;
    let h_inv = simplify_matrix(invert_metric(&h));
    check_inverse("h", &h, &h_inv, &pts)?;

    let g_inv = match (&h_raw, declared_g_inv) {
        (Some(hr), declared) => {
            // g^ij = h^11 * (1/2) d^2 H / dp_i^1 dp_j^1
            let derived: Matrix = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let d2 = hr.diff(VarRef::p(i, 0)).diff(VarRef::p(j, 0));
                            Expr::mul(vec![Expr::constant(0.5), h_inv[0][0].clone(), d2])
                        })
                        .collect()
                })
                .collect();
            if let Some(declared) = declared {
                compare_matrices("g_inv", &derived, &declared, sym_pts)?;
            }
            derived
        }
        (None, Some(declared)) => declared,
        (None, None) => unreachable!("checked above"),
    };
    check_symmetric("g_inv", &g_inv, sym_pts)?;
    check_nonsingular("g_inv", &g_inv, &pts)?;
    let g = simplify_matrix(invert_metric(&g_inv));
    check_inverse("g_inv", &g_inv, &g, &pts)?;

    let fault = match doc.fault {
        Some(fault) => Some(check_fault(fault, m, n)?),
        None => None,
    };

    let space = HamiltonSpace {
        name: doc.name.unwrap_or_else(|| fallback_name.to_string()),
        m,
        n,
        h,
        h_inv,
        g_inv,
        g,
        u,
        f,
        h_raw,
        domain,
        constants: doc.constants,
        bianchi_expected: doc.bianchi_expected,
        fault,
    };
    if m == 1 {
        check_kronecker(&space, &pts)?;
    }
    Ok(space)
}

fn simplify_matrix(mat: Matrix) -> Matrix {
    mat.into_iter().map(|r| r.into_iter().map(|e| e.simplify()).collect()).collect()
}

fn compare_matrices(field: &str, a: &Matrix, b: &Matrix, pts: &[Point]) -> Result<(), SpaceError> {
    for pt in pts {
        let (x, y) = (eval_matrix(field, a, pt)?, eval_matrix(field, b, pt)?);
        let err = (&x - &y).abs().max();
        if err > SYMMETRY_TOL * x.abs().max().max(1.0) {
            return Err(SpaceError::Kronecker(format!(
                "declared g_inv differs from h^11 * (1/2) d^2 H/dp dp by {err:e} at {}",
                describe_point(pt)
            )));
        }
    }
    Ok(())
}

/// For m = 1: the Hessian of H in the polymomenta must reproduce
/// `h_11 g^ij`, with rank n and one signature over the domain.
fn check_kronecker(space: &HamiltonSpace, pts: &[Point]) -> Result<(), SpaceError> {
    let n = space.n;
    let ham = space.hamiltonian();
    let hess: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    Expr::mul(vec![
                        Expr::constant(0.5),
                        space.h_inv[0][0].clone(),
                        ham.diff(VarRef::p(i, 0)).diff(VarRef::p(j, 0)),
                    ])
                })
                .collect()
        })
        .collect();
    let mut sig = None;
    for pt in pts {
        let derived = eval_matrix("g_inv", &hess, pt)?;
        let declared = eval_matrix("g_inv", &space.g_inv, pt)?;
        let err = (&derived - &declared).abs().max();
        if err > SYMMETRY_TOL * declared.abs().max().max(1.0) {
            return Err(SpaceError::Kronecker(format!(
                "g_inv is not h^11 * (1/2) d^2 H/dp dp (mismatch {err:e} at {}); a polymomentum-dependent g must be given through H_raw",
                describe_point(pt)
            )));
        }
        let s = signature(&derived);
        match sig {
            None => sig = Some(s),
            Some(prev) if prev != s => {
                return Err(SpaceError::Kronecker(format!(
                    "signature of g changes from {prev:?} to {s:?} at {}",
                    describe_point(pt)
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

fn build_domain(m: usize, n: usize, entries: &BTreeMap<String, [f64; 2]>) -> Result<Domain, SpaceError> {
    let mut domain = Domain::default_for(m, n);
    for (name, [lo, hi]) in entries {
        let v = VarRef::all(m, n)
            .into_iter()
            .find(|v| v.to_string() == *name)
            .ok_or_else(|| SpaceError::InvalidDomain(format!("`{name}` is not a coordinate of this space")))?;
        if !lo.is_finite() || !hi.is_finite() {
            return Err(SpaceError::InvalidDomain(format!("bounds of `{name}` must be finite")));
        }
        if lo > hi {
            return Err(SpaceError::InvalidDomain(format!("`{name}` has lo = {lo} > hi = {hi}")));
        }
        domain.set_bounds(v, *lo, *hi);
    }
    Ok(domain)
}

fn check_fault(fault: Fault, m: usize, n: usize) -> Result<Fault, SpaceError> {
    let extents: &[usize] = match fault.object.as_str() {
        "chi" => &[m, m, m],
        "gamma" | "H" => &[n, n, n],
        "N1" => &[m, n, m],
        "N2" => &[m, n, n],
        "A" => &[n, n, m],
        "C" => &[n, n, n, m],
        other => {
            return Err(SpaceError::InvalidFault(format!(
                "unknown object `{other}`; expected one of {FAULT_TARGETS:?}"
            )))
        }
    };
    let ok = fault.index.len() == extents.len()
        && fault.index.iter().zip(extents).all(|(k, e)| (1..=*e).contains(k));
    if !ok {
        return Err(SpaceError::InvalidFault(format!(
            "index {:?} does not address a component of `{}`",
            fault.index, fault.object
        )));
    }
    Ok(fault)
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        /// Names of the bundled spaces and fixtures.
        pub const BUNDLED: &[&str] = &[$($name),*];

        /// Source text of a bundled space.
        pub fn bundled_source(name: &str) -> Option<&'static str> {
            match name {
                $($name => Some(include_str!(concat!("../spaces/", $name, ".toml"))),)*
                _ => None,
            }
        }
    };
}

bundled!(
    "flat2x2",
    "sphere2",
    "sphere2_u",
    "timewarp",
    "m1sphere",
    "gravitational",
    "corrupt_gamma",
    "corrupt_n2",
    "corrupt_cartan_a",
    "corrupt_m1_n2",
);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn mat(rows: &[&[&str]], dims: (usize, usize)) -> Matrix {
        rows.iter()
            .map(|r| r.iter().map(|s| parse_expr(s, dims).unwrap().simplify()).collect())
            .collect()
    }

    #[test]
    fn diagonal_inverse() {
        let inv = invert_metric(&mat(&[&["2", "0"], &["0", "4"]], (1, 2)));
        assert_eq!(inv[0][0].as_const(), Some(0.5));
        assert_eq!(inv[1][1].as_const(), Some(0.25));
        assert!(inv[0][1].is_zero());
        let inv = invert_metric(&mat(&[&["1", "0"], &["0", "sin(x1)^2"]], (1, 2)));
        assert!(inv[0][0].is_one());
        assert_eq!(inv[1][1], parse_expr("1/sin(x1)^2", (1, 2)).unwrap().simplify());
    }

    #[test]
    fn inverse_matches_numeric_inversion() {
        let vals = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.25], [0.5, 0.25, 2.0]];
        let sym: Matrix = vals.iter().map(|r| r.iter().map(|v| Expr::constant(*v)).collect()).collect();
        let inv = invert_metric(&sym);
        let num = DMatrix::from_fn(3, 3, |r, c| vals[r][c]).try_inverse().unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!((inv[r][c].as_const().unwrap() - num[(r, c)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn determinant_skips_zero_entries() {
        let d = determinant(&mat(&[&["x1", "0", "0"], &["0", "x2", "0"], &["0", "0", "2"]], (1, 3)));
        assert_eq!(d, parse_expr("2*x1*x2", (1, 3)).unwrap().simplify());
    }

    #[test]
    fn error_codes() {
        let base = "dims = { m = 2, n = 2 }\nh = [[\"1\", \"0\"], [\"0\", \"-1\"]]\n";
        let e = HamiltonSpace::from_toml(base).unwrap_err();
        assert_eq!(e.code(), "missing_required_field");
        let e = HamiltonSpace::from_toml("dims = { m = 5, n = 2 }").unwrap_err();
        assert_eq!(e.code(), "dimension_out_of_range");
        let asym = "dims = { m = 2, n = 1 }\nh = [[\"t1\", \"1\"], [\"0\", \"1\"]]\ng_inv = [[\"1\"]]\n";
        assert_eq!(HamiltonSpace::from_toml(asym).unwrap_err().code(), "asymmetric_metric");
        let sing = format!("{base}g_inv = [[\"1\", \"1\"], [\"1\", \"1\"]]\n");
        assert_eq!(HamiltonSpace::from_toml(&sing).unwrap_err().code(), "singular_metric");
        let raw = format!("{base}H_raw = \"p1_1^2\"\n");
        assert_eq!(HamiltonSpace::from_toml(&raw).unwrap_err().code(), "raw_hamiltonian_with_multi_time");
        let dep = format!("{base}g_inv = [[\"1 + p1_1^2\", \"0\"], [\"0\", \"1\"]]\n");
        assert_eq!(HamiltonSpace::from_toml(&dep).unwrap_err().code(), "invalid_dependency");
        let dom = format!("{base}g_inv = [[\"1\", \"0\"], [\"0\", \"1\"]]\ndomain = {{ x1 = [1.0, 0.0] }}\n");
        assert_eq!(HamiltonSpace::from_toml(&dom).unwrap_err().code(), "invalid_domain");
    }

    #[test]
    fn numeric_entries_are_accepted() {
        let src = "dims = { m = 1, n = 2 }\nh = [[1]]\ng_inv = [[2.5, 0], [0, \"x1\"]]\n";
        let s = HamiltonSpace::from_toml(src).unwrap();
        assert_eq!(s.g_inv[0][0].as_const(), Some(2.5));
        assert_eq!(s.g[0][0].as_const(), Some(0.4));
    }

    #[test]
    fn structured_m1_with_momentum_metric_is_rejected() {
        let src = "dims = { m = 1, n = 1 }\nh = [[\"1\"]]\ng_inv = [[\"1 + p1_1^2\"]]\n";
        assert_eq!(HamiltonSpace::from_toml(src).unwrap_err().code(), "kronecker_regularity");
    }

    #[test]
    fn raw_hamiltonian_extracts_metric() {
        let src = "dims = { m = 1, n = 2 }\nh = [[\"exp(2*t1)\"]]\nH_raw = \"exp(2*t1)*(p1_1^2 + x1*p2_1^2) + x2*p1_1\"\ndomain = { x1 = [0.5, 1.5] }\n";
        let s = HamiltonSpace::from_toml(src).unwrap();
        assert!(s.g_inv[0][0].is_one());
        assert_eq!(s.g_inv[1][1], Expr::x(0));
        assert!(s.g_inv[0][1].is_zero());
    }

    #[test]
    fn bundled_spaces_load_and_roundtrip() {
        for name in BUNDLED {
            let s = HamiltonSpace::bundled(name).unwrap();
            let again = HamiltonSpace::from_toml(&s.to_toml()).unwrap();
            assert_eq!(again.g_inv, s.g_inv, "{name}");
            assert_eq!(again.h, s.h, "{name}");
            assert_eq!(again.u, s.u, "{name}");
            assert_eq!(again.hamiltonian(), s.hamiltonian(), "{name}");
            assert_eq!(again.domain, s.domain, "{name}");
        }
    }

    #[test]
    fn gravitational_metric_is_scaled_potential() {
        let s = HamiltonSpace::bundled("gravitational").unwrap();
        let pt = s.domain.midpoint();
        for (i, phi) in [1.0, 2.0, 3.0].iter().enumerate() {
            let v = s.g_inv[i][i].eval(&pt).unwrap();
            assert!((v - phi / (4.0 * 1.5 * 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn m1sphere_metric_from_hessian() {
        let s = HamiltonSpace::bundled("m1sphere").unwrap();
        let declared = mat(&[&["1", "0"], &["0", "1/sin(x1)^2"]], (1, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pt = s.domain.sample(&mut rng);
            for i in 0..2 {
                for j in 0..2 {
                    let a = s.g_inv[i][j].eval(&pt).unwrap();
                    let b = declared[i][j].eval(&pt).unwrap();
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sampling_box_is_respected() {
        let d = Domain::default_for(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert!(d.contains(&d.sample(&mut rng)));
        }
        assert!(!d.is_degenerate());
    }
}
