//! Equation specifications: structure, validation, JSON persistence.
//!
//! An [`EquationSpec`] describes
//!
//! ```text
//! d_t^kappa u = f(t,x) + sum_t  a_t(t,x) * t^{v_t} * prod_l (d_t^{i_l} d_x^{q_l} u)^{r_l}
//! ```
//!
//! over N space axes, with one moment sequence per axis plus one for t
//! (`moments[0]` is the t-sequence m_0, `moments[1..]` are m_1..m_N).
//! Coefficients, polynomial inhomogeneities, and polynomial initial data are
//! stored as exact rationals and materialized into a chosen arithmetic mode
//! by the solver; t-dependent data is stored in the normalized basis
//! t^j / m_0(j).
//!
//! [`EquationSpec::validate`] returns diagnostics instead of failing: errors
//! block solving (ill-formed factor data, recursion not well-founded),
//! warnings do not (vanishing coefficient at t = 0).
//!
//! The JSON schema is documented in the repository README; load errors carry
//! a JSON-pointer path to the offending node.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rug::Rational;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::moments::{MomentError, MomentSequence};
use crate::scalar::{parse_rational, Scalar};
use crate::series::{MultiIndex, SeriesError, XSeries};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error(transparent)]
    Moment(#[from] MomentError),
}

/// Polynomial in x with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RatPoly {
    coeffs: BTreeMap<MultiIndex, Rational>,
}

impl RatPoly {
    pub fn new() -> Self {
        RatPoly { coeffs: BTreeMap::new() }
    }

    pub fn from_coeffs<I: IntoIterator<Item = (MultiIndex, Rational)>>(items: I) -> Self {
        let mut p = RatPoly::new();
        for (idx, c) in items {
            p.insert(idx, c);
        }
        p
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        Self::from_coeffs([(MultiIndex::zero(dim), c)])
    }

    pub fn insert(&mut self, idx: MultiIndex, c: Rational) {
        if c == 0 {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.coeffs.iter()
    }

    pub fn max_dim(&self) -> Option<usize> {
        self.coeffs.keys().next().map(|k| k.dim())
    }

    /// Materialize into a mode series, dropping degrees above `cap`.
    pub fn materialize<C: Scalar>(&self, dim: usize, cap: u32, ctx: C::Ctx) -> XSeries<C> {
        let entries = self
            .coeffs
            .iter()
            .filter(|(idx, _)| idx.total() <= cap as u64)
            .map(|(idx, c)| (idx.clone(), C::from_rational(ctx, c)));
        XSeries::from_entries(dim, cap, ctx, entries).expect("filtered entries fit cap")
    }
}

/// One factor (d_t^i d_x^q u)^r of a nonlinear term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermFactor {
    pub i: u32,
    pub q: MultiIndex,
    pub r: u32,
}

/// Coefficient a(t,x) of a term, stored in the normalized t-basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoeffSpec {
    Const(Rational),
    /// Entries (j, a_{j,*}(x)): coefficient of t^j / m_0(j).
    Poly(Vec<(u32, RatPoly)>),
}

impl CoeffSpec {
    pub fn one() -> Self {
        CoeffSpec::Const(Rational::from(1))
    }

    /// Coefficient of t^j / m_0(j) as a rational polynomial.
    pub fn entry(&self, dim: usize, j: u32) -> RatPoly {
        match self {
            CoeffSpec::Const(c) => {
                if j == 0 {
                    RatPoly::constant(dim, c.clone())
                } else {
                    RatPoly::new()
                }
            }
            CoeffSpec::Poly(entries) => entries
                .iter()
                .find(|(jj, _)| *jj == j)
                .map(|(_, p)| p.clone())
                .unwrap_or_default(),
        }
    }

    pub fn vanishes_at_t0(&self, dim: usize) -> bool {
        self.entry(dim, 0).is_zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub v: u32,
    pub coeff: CoeffSpec,
    pub factors: Vec<TermFactor>,
}

impl Term {
    /// sum_l r_l i_l, the total t-derivative load of the term.
    pub fn total_ri(&self) -> u64 {
        self.factors.iter().map(|f| f.r as u64 * f.i as u64).sum()
    }

    /// sum_l r_l, the number of solution copies multiplied together.
    pub fn total_r(&self) -> u64 {
        self.factors.iter().map(|f| f.r as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inhomogeneity {
    Zero,
    /// Entries (j, f_{j,*}(x)) in the normalized t-basis.
    Poly(Vec<(u32, RatPoly)>),
    /// Normalized entries f_{j,*} = c k^j Gamma(1 + sigma j).
    Gevrey { sigma: Rational, c: Rational, k: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialData {
    Poly(RatPoly),
    /// prod_d 1/(1 - x_d), truncated at materialization time.
    Geom,
    /// Extremal datum prod_d sum_k a_d^k (k!)^{s_d} x_d^k / m_d(k);
    /// `a = None` uses the computed per-axis regularity lower constants.
    Em { a: Option<Vec<Rational>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    /// Index into `terms` when the finding is term-specific.
    pub term: Option<usize>,
}

impl Diagnostic {
    fn error(term: Option<usize>, message: String) -> Self {
        Diagnostic { severity: Severity::Error, message, term }
    }
    fn warning(term: Option<usize>, message: String) -> Self {
        Diagnostic { severity: Severity::Warning, message, term }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    /// Number of space axes N.
    pub dim: usize,
    /// Order kappa >= 1 of the t-derivative on the left-hand side.
    pub kappa: u32,
    /// moments[0] for t, moments[1..=N] for the space axes.
    pub moments: Vec<Arc<MomentSequence>>,
    pub terms: Vec<Term>,
    pub inhomogeneity: Inhomogeneity,
    /// kappa entries: u_{j,*} = initial[j] for j < kappa.
    pub initial: Vec<InitialData>,
}

impl EquationSpec {
    pub fn t_moment(&self) -> &Arc<MomentSequence> {
        &self.moments[0]
    }

    /// Moment sequences of the space axes (length N).
    pub fn x_moments(&self) -> &[Arc<MomentSequence>] {
        &self.moments[1..]
    }

    /// Largest |q| over all factors; 0 when no factor differentiates in x.
    pub fn q_max(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.factors.iter())
            .map(|f| f.q.total() as u32)
            .max()
            .unwrap_or(0)
    }

    /// Structural diagnostics. Solving requires no `Error` entries;
    /// warnings are informational.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.kappa == 0 {
            out.push(Diagnostic::error(None, "kappa must be >= 1".into()));
        }
        if self.dim == 0 {
            out.push(Diagnostic::error(None, "need at least one space axis".into()));
        }
        if self.moments.len() != self.dim + 1 {
            out.push(Diagnostic::error(
                None,
                format!("need {} moment sequences (t plus each axis), got {}", self.dim + 1, self.moments.len()),
            ));
        }
        if self.initial.len() != self.kappa as usize {
            out.push(Diagnostic::error(
                None,
                format!("need kappa = {} initial entries, got {}", self.kappa, self.initial.len()),
            ));
        }
        for (idx, init) in self.initial.iter().enumerate() {
            match init {
                InitialData::Poly(p) => {
                    if let Some(d) = p.max_dim() {
                        if d != self.dim {
                            out.push(Diagnostic::error(
                                None,
                                format!("initial entry {idx} has {d} axes, equation has {}", self.dim),
                            ));
                        }
                    }
                }
                InitialData::Em { a: Some(a) } => {
                    if a.len() != self.dim {
                        out.push(Diagnostic::error(
                            None,
                            format!("initial entry {idx}: extremal datum needs {} rates, got {}", self.dim, a.len()),
                        ));
                    }
                    if a.iter().any(|x| *x <= 0) {
                        out.push(Diagnostic::error(
                            None,
                            format!("initial entry {idx}: extremal rates must be positive"),
                        ));
                    }
                }
                _ => {}
            }
        }
        for (ti, term) in self.terms.iter().enumerate() {
            if term.factors.is_empty() {
                out.push(Diagnostic::error(
                    Some(ti),
                    "term has no factors; fold pure source terms into the inhomogeneity".into(),
                ));
                continue;
            }
            let mut seen = BTreeSet::new();
            for f in &term.factors {
                if f.q.dim() != self.dim {
                    out.push(Diagnostic::error(
                        Some(ti),
                        format!("factor q has {} axes, equation has {}", f.q.dim(), self.dim),
                    ));
                }
                if f.r == 0 {
                    out.push(Diagnostic::error(Some(ti), "factor power r must be >= 1".into()));
                }
                if f.i >= self.kappa {
                    out.push(Diagnostic::error(
                        Some(ti),
                        format!("factor t-derivative order {} must be < kappa = {}", f.i, self.kappa),
                    ));
                }
                if !seen.insert((f.i, f.q.clone())) {
                    out.push(Diagnostic::error(
                        Some(ti),
                        format!("duplicate factor (i={}, q={}); merge powers into r", f.i, f.q),
                    ));
                }
            }
            // Well-foundedness: entry j of the term feeds u_{j+kappa} and
            // reads u up to index j - v + max_l i_l < j + kappa.
            let max_i = term.factors.iter().map(|f| f.i as i64).max().unwrap_or(0);
            if max_i - (term.v as i64) >= self.kappa as i64 {
                out.push(Diagnostic::error(
                    Some(ti),
                    format!(
                        "recursion not well-founded: max i - v = {} must be < kappa = {}",
                        max_i - term.v as i64,
                        self.kappa
                    ),
                ));
            }
            if term.coeff.vanishes_at_t0(self.dim) {
                out.push(Diagnostic::warning(
                    Some(ti),
                    "coefficient vanishes at t = 0; term only acts from its t^1 entry on".into(),
                ));
            }
        }
        out
    }

    pub fn is_solver_ready(&self) -> bool {
        self.validate().iter().all(|d| d.severity != Severity::Error)
    }
}

/// True when the diagnostics contain no errors.
pub fn no_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().all(|d| d.severity != Severity::Error)
}

// ---------------------------------------------------------------------------
// JSON loading
// ---------------------------------------------------------------------------

struct Node<'a> {
    v: &'a Value,
    path: String,
}

impl<'a> Node<'a> {
    fn err(&self, message: impl Into<String>) -> LoadError {
        LoadError::Schema { pointer: self.path.clone(), message: message.into() }
    }

    fn field(&self, name: &str) -> Result<Node<'a>, LoadError> {
        self.opt_field(name)
            .ok_or_else(|| self.err(format!("missing required field {name:?}")))
    }

    fn opt_field(&self, name: &str) -> Option<Node<'a>> {
        self.v
            .as_object()
            .and_then(|o| o.get(name))
            .map(|v| Node { v, path: format!("{}/{}", self.path, name) })
    }

    fn as_object(&self) -> Result<&'a Map<String, Value>, LoadError> {
        self.v.as_object().ok_or_else(|| self.err("expected an object"))
    }

    fn as_array(&self) -> Result<Vec<Node<'a>>, LoadError> {
        let arr = self.v.as_array().ok_or_else(|| self.err("expected an array"))?;
        Ok(arr
            .iter()
            .enumerate()
            .map(|(i, v)| Node { v, path: format!("{}/{}", self.path, i) })
            .collect())
    }

    fn as_u32(&self) -> Result<u32, LoadError> {
        self.v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| self.err("expected a small nonnegative integer"))
    }

    fn as_str(&self) -> Result<&'a str, LoadError> {
        self.v.as_str().ok_or_else(|| self.err("expected a string"))
    }

    fn as_rational(&self) -> Result<Rational, LoadError> {
        match self.v {
            Value::String(s) => parse_rational(s)
                .ok_or_else(|| self.err(format!("cannot parse {s:?} as a rational"))),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Rational::from(i))
                } else {
                    Err(self.err("non-integer numbers lose exactness; use a string like \"3/2\""))
                }
            }
            _ => Err(self.err("expected a rational (string or integer)")),
        }
    }
}

fn load_multi_index(node: &Node, dim: usize) -> Result<MultiIndex, LoadError> {
    let items = node.as_array()?;
    if items.len() != dim {
        return Err(node.err(format!("expected {dim} axis entries, got {}", items.len())));
    }
    let mut v = Vec::with_capacity(dim);
    for item in &items {
        v.push(item.as_u32()?);
    }
    Ok(MultiIndex::from_slice(&v))
}

fn load_rat_poly(node: &Node, dim: usize) -> Result<RatPoly, LoadError> {
    let mut p = RatPoly::new();
    for item in node.as_array()? {
        let idx = load_multi_index(&item.field("idx")?, dim)?;
        let c = item.field("c")?.as_rational()?;
        p.insert(idx, c);
    }
    Ok(p)
}

fn load_t_entries(node: &Node, dim: usize) -> Result<Vec<(u32, RatPoly)>, LoadError> {
    let mut out: Vec<(u32, RatPoly)> = Vec::new();
    for item in node.as_array()? {
        let j = item.field("j")?.as_u32()?;
        if out.iter().any(|(jj, _)| *jj == j) {
            return Err(item.err(format!("duplicate t-entry j = {j}")));
        }
        let p = load_rat_poly(&item.field("series")?, dim)?;
        out.push((j, p));
    }
    out.sort_by_key(|(j, _)| *j);
    Ok(out)
}

fn load_moment(node: &Node) -> Result<Arc<MomentSequence>, LoadError> {
    let kind = node.field("kind")?;
    let s = node.field("s")?.as_rational()?;
    let m = match kind.as_str()? {
        "gamma" => MomentSequence::gamma(s).map_err(|e| kind.err(e.to_string()))?,
        "ratio" => {
            let values_node = node.field("values")?;
            let mut values = Vec::new();
            for item in values_node.as_array()? {
                values.push(item.as_rational()?);
            }
            MomentSequence::ratio_table(s, values).map_err(|e| values_node.err(e.to_string()))?
        }
        other => return Err(kind.err(format!("unknown moment kind {other:?}; expected \"gamma\" or \"ratio\""))),
    };
    Ok(Arc::new(m))
}

/// Parse an equation spec from JSON text.
pub fn load_str(text: &str) -> Result<EquationSpec, LoadError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| LoadError::Json(e.to_string()))?;
    load_value(&value)
}

pub fn load(bytes: &[u8]) -> Result<EquationSpec, LoadError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| LoadError::Json(format!("not UTF-8: {e}")))?;
    load_str(text)
}

pub fn load_value(value: &Value) -> Result<EquationSpec, LoadError> {
    let root = Node { v: value, path: String::new() };
    root.as_object()?;

    let dim = root.field("N")?.as_u32()? as usize;
    if dim == 0 {
        return Err(root.field("N")?.err("N must be >= 1"));
    }
    let kappa = root.field("kappa")?.as_u32()?;

    let moments_node = root.field("moments")?;
    let moment_items = moments_node.as_array()?;
    if moment_items.len() != dim + 1 {
        return Err(moments_node.err(format!(
            "expected {} moment sequences (t plus {} axes), got {}",
            dim + 1,
            dim,
            moment_items.len()
        )));
    }
    let mut moments = Vec::with_capacity(dim + 1);
    for item in &moment_items {
        moments.push(load_moment(item)?);
    }

    let mut terms = Vec::new();
    for item in root.field("terms")?.as_array()? {
        let v = match item.opt_field("v") {
            Some(n) => n.as_u32()?,
            None => 0,
        };
        let coeff = match item.opt_field("coeff") {
            None => CoeffSpec::one(),
            Some(cnode) => match cnode.field("kind")?.as_str()? {
                "const" => CoeffSpec::Const(cnode.field("c")?.as_rational()?),
                "poly" => CoeffSpec::Poly(load_t_entries(&cnode.field("entries")?, dim)?),
                other => {
                    return Err(cnode
                        .field("kind")?
                        .err(format!("unknown coeff kind {other:?}; expected \"const\" or \"poly\"")))
                }
            },
        };
        let mut factors = Vec::new();
        for fnode in item.field("factors")?.as_array()? {
            let i = fnode.field("i")?.as_u32()?;
            let q = load_multi_index(&fnode.field("q")?, dim)?;
            let r = fnode.field("r")?.as_u32()?;
            factors.push(TermFactor { i, q, r });
        }
        terms.push(Term { v, coeff, factors });
    }

    let inhomogeneity = match root.opt_field("inhomogeneity") {
        None => Inhomogeneity::Zero,
        Some(node) => match node.field("kind")?.as_str()? {
            "zero" => Inhomogeneity::Zero,
            "poly" => Inhomogeneity::Poly(load_t_entries(&node.field("entries")?, dim)?),
            "gevrey" => Inhomogeneity::Gevrey {
                sigma: node.field("sigma")?.as_rational()?,
                c: node.field("c")?.as_rational()?,
                k: node.field("k")?.as_rational()?,
            },
            other => {
                return Err(node.field("kind")?.err(format!(
                    "unknown inhomogeneity kind {other:?}; expected \"zero\", \"poly\", or \"gevrey\""
                )))
            }
        },
    };

    let initial_node = root.field("initial")?;
    let mut initial = Vec::new();
    for item in initial_node.as_array()? {
        let kind = item.field("kind")?;
        initial.push(match kind.as_str()? {
            "poly" => InitialData::Poly(load_rat_poly(&item.field("series")?, dim)?),
            "geom" => InitialData::Geom,
            "em" => {
                let a = match item.opt_field("a") {
                    None => None,
                    Some(anode) => {
                        let mut rates = Vec::new();
                        for r in anode.as_array()? {
                            rates.push(r.as_rational()?);
                        }
                        Some(rates)
                    }
                };
                InitialData::Em { a }
            }
            other => {
                return Err(kind.err(format!(
                    "unknown initial kind {other:?}; expected \"poly\", \"geom\", or \"em\""
                )))
            }
        });
    }

    Ok(EquationSpec { dim, kappa, moments, terms, inhomogeneity, initial })
}

// ---------------------------------------------------------------------------
// JSON saving
// ---------------------------------------------------------------------------

fn rational_json(r: &Rational) -> Value {
    Value::String(r.to_string())
}

fn rat_poly_json(p: &RatPoly) -> Value {
    let items: Vec<Value> = p
        .iter()
        .map(|(idx, c)| json!({ "idx": idx.as_slice(), "c": rational_json(c) }))
        .collect();
    Value::Array(items)
}

fn t_entries_json(entries: &[(u32, RatPoly)]) -> Value {
    let items: Vec<Value> = entries
        .iter()
        .map(|(j, p)| json!({ "j": j, "series": rat_poly_json(p) }))
        .collect();
    Value::Array(items)
}

pub fn to_value(spec: &EquationSpec) -> Value {
    let moments: Vec<Value> = spec
        .moments
        .iter()
        .map(|m| match m.ratio_table_entries() {
            None => json!({ "kind": "gamma", "s": m.order().to_string() }),
            Some(tbl) => json!({
                "kind": "ratio",
                "s": m.order().to_string(),
                "values": tbl.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            }),
        })
        .collect();

    let terms: Vec<Value> = spec
        .terms
        .iter()
        .map(|t| {
            let coeff = match &t.coeff {
                CoeffSpec::Const(c) => json!({ "kind": "const", "c": rational_json(c) }),
                CoeffSpec::Poly(entries) => {
                    json!({ "kind": "poly", "entries": t_entries_json(entries) })
                }
            };
            let factors: Vec<Value> = t
                .factors
                .iter()
                .map(|f| json!({ "i": f.i, "q": f.q.as_slice(), "r": f.r }))
                .collect();
            json!({ "v": t.v, "coeff": coeff, "factors": factors })
        })
        .collect();

    let inhomogeneity = match &spec.inhomogeneity {
        Inhomogeneity::Zero => json!({ "kind": "zero" }),
        Inhomogeneity::Poly(entries) => json!({ "kind": "poly", "entries": t_entries_json(entries) }),
        Inhomogeneity::Gevrey { sigma, c, k } => json!({
            "kind": "gevrey",
            "sigma": rational_json(sigma),
            "c": rational_json(c),
            "k": rational_json(k),
        }),
    };

    let initial: Vec<Value> = spec
        .initial
        .iter()
        .map(|init| match init {
            InitialData::Poly(p) => json!({ "kind": "poly", "series": rat_poly_json(p) }),
            InitialData::Geom => json!({ "kind": "geom" }),
            InitialData::Em { a: None } => json!({ "kind": "em" }),
            InitialData::Em { a: Some(rates) } => json!({
                "kind": "em",
                "a": rates.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            }),
        })
        .collect();

    json!({
        "N": spec.dim,
        "kappa": spec.kappa,
        "moments": moments,
        "terms": terms,
        "inhomogeneity": inhomogeneity,
        "initial": initial,
    })
}

/// Pretty JSON; key order is alphabetical, hence deterministic.
pub fn save(spec: &EquationSpec) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(spec)).expect("value serializes");
    s.push('\n');
    s
}

/// SHA-256 of the canonical JSON form, used in report provenance.
pub fn spec_sha256(spec: &EquationSpec) -> String {
    let mut hasher = Sha256::new();
    hasher.update(save(spec).as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Materialization of generated data
// ---------------------------------------------------------------------------

/// prod_d 1/(1 - x_d) truncated at total degree `cap`: every multi-index
/// with |idx| <= cap has coefficient 1.
pub fn geom_series<C: Scalar>(dim: usize, cap: u32, ctx: C::Ctx) -> XSeries<C> {
    let mut idxs: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for prefix in &idxs {
            let used: u32 = prefix.iter().sum();
            for k in 0..=(cap - used.min(cap)) {
                let mut v = prefix.clone();
                v.push(k);
                next.push(v);
            }
        }
        idxs = next;
    }
    let one = C::one(ctx);
    XSeries::from_entries(
        dim,
        cap,
        ctx,
        idxs.into_iter().map(|v| (MultiIndex::from_slice(&v), one.clone())),
    )
    .expect("indices fit cap")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaterializeError {
    #[error("extremal datum needs explicit rates: {0}")]
    NeedsExplicitRates(String),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Scalar(#[from] crate::scalar::ScalarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Extremal initial datum prod_d sum_k a_d^k (k!)^{s_d} x_d^k / m_d(k),
/// truncated at total degree `cap`. With `rates = None` the per-axis rate
/// a_d is the computed regularity lower constant min_j ratio_d(j)/(j+1)^{s_d}
/// (exact mode requires integer s_d for this).
pub fn em_series<C: Scalar>(
    x_moments: &[Arc<MomentSequence>],
    rates: Option<&[Rational]>,
    cap: u32,
    ctx: C::Ctx,
) -> Result<XSeries<C>, MaterializeError> {
    let dim = x_moments.len();
    if let Some(rs) = rates {
        if rs.len() != dim {
            return Err(MaterializeError::NeedsExplicitRates(format!(
                "got {} rates for {dim} axes",
                rs.len()
            )));
        }
    }
    // Per-axis 1-D coefficient tables c_d[k] = a_d^k (k!)^{s_d} / m_d(k).
    let mut tables: Vec<Vec<C>> = Vec::with_capacity(dim);
    for (d, m) in x_moments.iter().enumerate() {
        let rate: Rational = match rates {
            Some(rs) => rs[d].clone(),
            None => {
                if !C::IS_EXACT {
                    // Float mode: f64 bound rounded into a rational is fine,
                    // the datum only needs to be *some* admissible rate.
                    let (lo, _) = m.regularity_bounds_f64(cap as usize + 1)?;
                    Rational::from_f64(lo).ok_or_else(|| {
                        MaterializeError::NeedsExplicitRates(format!("axis {d} rate not finite"))
                    })?
                } else {
                    let (lo, _) = m.regularity_bounds_exact(cap as usize + 1).map_err(|e| {
                        MaterializeError::NeedsExplicitRates(format!("axis {d}: {e}"))
                    })?;
                    lo
                }
            }
        };
        let s = m.order();
        let mut col = Vec::with_capacity(cap as usize + 1);
        for k in 0..=cap {
            let a_pow = C::from_rational(ctx, &rate).powi(k as i32);
            let fact_s = C::factorial(ctx, k).pow_rational(s)?;
            let mk: C = m.value_scalar(ctx, k as usize)?;
            col.push(a_pow.mul(&fact_s).div(&mk));
        }
        tables.push(col);
    }
    // Tensor product truncated by total degree.
    let mut acc = XSeries::constant(dim, cap, ctx, C::one(ctx));
    for (d, col) in tables.iter().enumerate() {
        let axis_series = XSeries::from_entries(
            dim,
            cap,
            ctx,
            col.iter().enumerate().map(|(k, c)| {
                let mut v = vec![0u32; dim];
                v[d] = k as u32;
                (MultiIndex::from_slice(&v), c.clone())
            }),
        )?;
        acc = acc.mul(&axis_series);
    }
    Ok(acc)
}
