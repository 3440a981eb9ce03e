//! Moment Newton polygon and the critical Gevrey value sigma_c.
//!
//! Each equation spec induces a set of support points in the plane:
//!
//! * the principal point (s_0 kappa, -kappa) from the left-hand side,
//! * one point per term: x = sum_l r_l (s_0 i_l + lambda(s q_l)),
//!   y = v - sum_l r_l i_l, with lambda(s q) = sum_d s_d q_d.
//!
//! Every point spawns the quadrant {(a, b): a <= x, b >= y}; the polygon is
//! the convex hull of the union. Terms whose abscissa exceeds s_0 kappa
//! (the set S) stick out of the principal quadrant and create boundary
//! edges of positive slope; the critical value is
//!
//! ```text
//! sigma_c = max over S of (x_t - s_0 kappa) / (kappa + v_t - sum r_l i_l)
//! ```
//!
//! and 0 when S is empty. Equivalently 1/sigma_c is the smallest positive
//! boundary slope; both routes are computed and cross-checked. The maximizer
//! k* (ties broken by smallest v, then lexicographically smallest factor
//! list) drives the divergent counterexample construction.
//!
//! For sigma >= sigma_c the slope inequality
//!
//! ```text
//! (sigma + s_0)(kappa + v - sum r_l i_l) >= s_0 v + sum_l r_l lambda(s q_l)
//! ```
//!
//! holds for every term, with equality at k* when sigma = sigma_c > 0;
//! [`check_slope_inequality`] reports the per-term margins.

use rug::Rational;
use thiserror::Error;

use crate::equation::{no_errors, Diagnostic, EquationSpec, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolygonError {
    #[error("spec has validation errors; fix them before building the polygon")]
    InvalidSpec { diagnostics: Vec<Diagnostic> },
}

/// A support point; `term = None` marks the principal point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportPoint {
    pub x: Rational,
    pub y: Rational,
    pub term: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonPolygon {
    /// Principal point plus one point per term, in term order.
    pub points: Vec<SupportPoint>,
    /// Indices of terms with abscissa strictly above s_0 kappa.
    pub s_terms: Vec<usize>,
    /// Lower convex chain from the principal point through the S-points.
    pub hull: Vec<SupportPoint>,
    /// Slopes of consecutive hull edges; strictly increasing, all positive.
    pub positive_slopes: Vec<Rational>,
    pub sigma_c: Rational,
    /// Maximizing term of sigma_c; `None` when S is empty.
    pub kstar: Option<usize>,
}

/// lambda(s q) = sum_d s_d q_d for one factor's q.
fn lambda_sq(spec: &EquationSpec, q: &crate::series::MultiIndex) -> Rational {
    let mut acc = Rational::new();
    for (d, m) in spec.x_moments().iter().enumerate() {
        acc += m.order().clone() * q.get(d);
    }
    acc
}

/// Support point of one term.
fn term_point(spec: &EquationSpec, term: &Term) -> (Rational, Rational) {
    let s0 = spec.t_moment().order();
    let mut x = Rational::new();
    for f in &term.factors {
        let per_copy = s0.clone() * f.i + lambda_sq(spec, &f.q);
        x += per_copy * f.r;
    }
    let y = Rational::from(term.v) - term.total_ri();
    (x, y)
}

/// Tie-break key for k*: smallest v, then lexicographic factor list
/// (i, q graded-lex, r).
fn kstar_key(term: &Term) -> (u32, Vec<(u32, Vec<u32>, u32)>) {
    (
        term.v,
        term.factors.iter().map(|f| (f.i, f.q.as_slice().to_vec(), f.r)).collect(),
    )
}

pub fn build(spec: &EquationSpec) -> Result<NewtonPolygon, PolygonError> {
    let diagnostics = spec.validate();
    if !no_errors(&diagnostics) {
        return Err(PolygonError::InvalidSpec { diagnostics });
    }
    let s0 = spec.t_moment().order();
    let kappa = Rational::from(spec.kappa);
    let principal_x = Rational::from(s0 * &kappa);
    let principal_y = Rational::from(-kappa.clone());
    let principal = SupportPoint { x: principal_x.clone(), y: principal_y.clone(), term: None };

    let mut points = vec![principal.clone()];
    let mut s_terms = Vec::new();
    let mut sigma_c = Rational::new();
    let mut kstar: Option<usize> = None;

    for (ti, term) in spec.terms.iter().enumerate() {
        let (x, y) = term_point(spec, term);
        if x > principal_x {
            s_terms.push(ti);
            // Denominator kappa + v - sum r_l i_l > 0 by well-foundedness
            // (max_l i_l - v < kappa and r_l >= 1).
            let denom = Rational::from(&y - &principal_y);
            debug_assert!(denom > 0);
            let candidate = Rational::from(&x - &principal_x) / denom;
            let better = match &kstar {
                None => true,
                Some(prev) => {
                    candidate > sigma_c
                        || (candidate == sigma_c
                            && kstar_key(term) < kstar_key(&spec.terms[*prev]))
                }
            };
            if better {
                sigma_c = candidate;
                kstar = Some(ti);
            }
        }
        points.push(SupportPoint { x, y, term: Some(ti) });
    }

    let hull = lower_chain(&principal, &points);
    let positive_slopes: Vec<Rational> = hull
        .windows(2)
        .map(|w| Rational::from(&w[1].y - &w[0].y) / Rational::from(&w[1].x - &w[0].x))
        .collect();

    // Cross-check: 1/sigma_c equals the smallest positive boundary slope.
    if let Some(first) = positive_slopes.first() {
        debug_assert_eq!(Rational::from(1) / first.clone(), sigma_c);
    } else {
        debug_assert_eq!(sigma_c, 0);
    }
    debug_assert!(positive_slopes.windows(2).all(|w| w[0] < w[1]));

    Ok(NewtonPolygon { points, s_terms, hull, positive_slopes, sigma_c, kstar })
}

/// Andrew's monotone lower chain over the principal point and the points
/// strictly to its right. Points at equal x keep only the lowest y; points
/// left of (or at) the principal abscissa lie inside the principal quadrant.
fn lower_chain(principal: &SupportPoint, points: &[SupportPoint]) -> Vec<SupportPoint> {
    let mut cand: Vec<&SupportPoint> =
        points.iter().filter(|p| p.x > principal.x).collect();
    cand.sort_by(|a, b| a.x.cmp(&b.x).then_with(|| a.y.cmp(&b.y)));
    cand.dedup_by(|next, prev| next.x == prev.x); // keep first = lowest y per x

    let mut chain: Vec<SupportPoint> = vec![principal.clone()];
    for p in cand {
        while chain.len() >= 2 {
            let a = &chain[chain.len() - 2];
            let b = &chain[chain.len() - 1];
            // Pop b when it is on or above segment a->p (non-right turn).
            let cross = Rational::from(&b.x - &a.x) * Rational::from(&p.y - &a.y)
                - Rational::from(&b.y - &a.y) * Rational::from(&p.x - &a.x);
            if cross <= 0 {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(p.clone());
    }
    chain
}

/// Per-term margins of the slope inequality at a given sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeCheck {
    pub sigma: Rational,
    /// (sigma + s_0)(kappa + v - sum ri) - (s_0 v + sum r lambda(sq)) per term.
    pub margins: Vec<Rational>,
    pub ok: bool,
}

pub fn check_slope_inequality(spec: &EquationSpec, sigma: &Rational) -> SlopeCheck {
    let s0 = spec.t_moment().order();
    let mut margins = Vec::with_capacity(spec.terms.len());
    for term in &spec.terms {
        let lhs = Rational::from(sigma + s0)
            * (Rational::from(spec.kappa) + term.v - term.total_ri());
        let mut rhs = s0.clone() * term.v;
        for f in &term.factors {
            rhs += lambda_sq(spec, &f.q) * f.r;
        }
        margins.push(lhs - rhs);
    }
    let ok = margins.iter().all(|m| *m >= 0);
    SlopeCheck { sigma: sigma.clone(), margins, ok }
}

/// CSV rendering: `kind,x,y,slope,term_id` rows for every support point,
/// every hull vertex (chain order), and every hull edge slope (attributed
/// to the edge's right endpoint). Exact fractions throughout.
pub fn hull_csv(polygon: &NewtonPolygon) -> String {
    let mut out = String::from("kind,x,y,slope,term_id\n");
    let term_id = |p: &SupportPoint| match p.term {
        None => "principal".to_string(),
        Some(t) => t.to_string(),
    };
    for p in &polygon.points {
        out.push_str(&format!("point,{},{},,{}\n", p.x, p.y, term_id(p)));
    }
    for p in &polygon.hull {
        out.push_str(&format!("hull,{},{},,{}\n", p.x, p.y, term_id(p)));
    }
    for (slope, edge_end) in polygon.positive_slopes.iter().zip(polygon.hull.iter().skip(1)) {
        out.push_str(&format!("slope,,,{},{}\n", slope, term_id(edge_end)));
    }
    out
}
