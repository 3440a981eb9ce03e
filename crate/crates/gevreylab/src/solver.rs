//! Formal power-series solver for moment equations, the majorant
//! domination checker, and the sharpness construction.
//!
//! The equation d_{m0;t}^kappa u = f + sum_t a_t t^{v_t} prod_l
//! (d_{m0;t}^{i_l} d_{m;x}^{q_l} u)^{r_l} determines the normalized
//! entries u_j of u = sum_j u_j(x) t^j / m_0(j) one at a time:
//!
//! ```text
//! u_{j+kappa} = f_j + sum_t (m_0(j) / m_0(j - v_t)) S_t[j - v_t]
//! ```
//!
//! where S_t is the normalized t-Cauchy product of the coefficient
//! series of a_t with the factor series d^{q_l} u_{. + i_l} (each taken
//! r_l times), built through per-term prefix products so that step j
//! costs one new convolution entry per prefix level. Entries carry a
//! degree budget cap(j) = d_out + (J - j) q_max (one extra q_max block
//! below kappa) so every stored coefficient of the output is exact up
//! to its cap despite truncation.

use std::collections::HashMap;
use std::sync::Arc;

use rug::{Integer, Rational};
use thiserror::Error;

use crate::analysis::{nagumo_norm, AlphaIndex, AnalysisError, KstarData, NormParams};
use crate::equation::{
    em_series, geom_series, no_errors, spec_sha256, CoeffSpec, Diagnostic, EquationSpec,
    InitialData, Inhomogeneity, MaterializeError, Severity, Term, TermFactor,
};
use crate::moments::{MomentError, MomentSequence};
use crate::polygon::{self, PolygonError};
use crate::scalar::{Exact, Mode, Scalar, ScalarError};
use crate::series::{MultiIndex, SeriesError, TSeries, XSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("equation spec has validation errors: {}", diagnostics_text(.0))]
    InvalidSpec(Vec<Diagnostic>),
    #[error("non-finite value while computing entry {j}; try more bits or exact mode")]
    Overflow { j: usize },
    #[error(transparent)]
    Materialize(#[from] MaterializeError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

fn diagnostics_text(diags: &[Diagnostic]) -> String {
    let msgs: Vec<&str> = diags.iter().map(|d| d.message.as_str()).collect();
    msgs.join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveRequest {
    pub spec: EquationSpec,
    /// Highest t-index to compute.
    pub j_max: u32,
    /// Guaranteed exact x-degree budget of the top entry.
    pub d_out: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub spec_sha256: String,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<C: Scalar> {
    pub u: TSeries<C>,
    /// cap(j) for j = 0..=j_max.
    pub degree_schedule: Vec<u32>,
    pub provenance: Provenance,
}

/// Degree budget per entry: d_out for the last entry, growing by q_max
/// per step backwards; initial entries get one extra q_max block since
/// they feed the first computed entry through derivatives.
pub fn degree_schedule(spec: &EquationSpec, j_max: u32, d_out: u32) -> Vec<u32> {
    let q_max = spec.q_max();
    let kappa = spec.kappa;
    (0..=j_max)
        .map(|j| {
            if j_max < kappa {
                d_out
            } else if j < kappa {
                d_out + (j_max - kappa + 1) * q_max
            } else {
                d_out + (j_max - j) * q_max
            }
        })
        .collect()
}

fn materialize_initial<C: Scalar>(
    spec: &EquationSpec,
    j: usize,
    cap: u32,
    ctx: C::Ctx,
) -> Result<XSeries<C>, SolveError> {
    Ok(match &spec.initial[j] {
        InitialData::Poly(p) => p.materialize(spec.dim, cap, ctx),
        InitialData::Geom => geom_series(spec.dim, cap, ctx),
        InitialData::Em { a } => em_series(spec.x_moments(), a.as_deref(), cap, ctx)?,
    })
}

fn materialize_inhomogeneity<C: Scalar>(
    spec: &EquationSpec,
    j: u32,
    cap: u32,
    ctx: C::Ctx,
) -> Result<XSeries<C>, SolveError> {
    Ok(match &spec.inhomogeneity {
        Inhomogeneity::Zero => XSeries::zero(spec.dim, cap, ctx),
        Inhomogeneity::Poly(entries) => entries
            .iter()
            .find(|(jj, _)| *jj == j)
            .map(|(_, p)| p.materialize(spec.dim, cap, ctx))
            .unwrap_or_else(|| XSeries::zero(spec.dim, cap, ctx)),
        Inhomogeneity::Gevrey { sigma, c, k } => {
            let gamma = C::gamma_one_plus(ctx, &Rational::from(sigma * j))?;
            let val = C::from_rational(ctx, c)
                .mul(&C::from_rational(ctx, k).powi(j as i32))
                .mul(&gamma);
            XSeries::constant(spec.dim, cap, ctx, val)
        }
    })
}

/// Expanded factor list of a term: each (i, q) repeated r times, in
/// canonical order.
fn expanded_factors(term: &Term) -> Vec<(u32, MultiIndex)> {
    let mut out = Vec::new();
    for TermFactor { i, q, r } in &term.factors {
        for _ in 0..*r {
            out.push((*i, q.clone()));
        }
    }
    out
}

/// Memoized moment x-derivatives of solution entries, keyed by (q, entry).
struct DerivCache<C: Scalar> {
    map: HashMap<(MultiIndex, usize), XSeries<C>>,
}

impl<C: Scalar> DerivCache<C> {
    fn get(
        &mut self,
        entries: &[XSeries<C>],
        q: &MultiIndex,
        e: usize,
        moments: &[Arc<MomentSequence>],
    ) -> Result<XSeries<C>, SolveError> {
        if q.total() == 0 {
            return Ok(entries[e].clone());
        }
        if let Some(hit) = self.map.get(&(q.clone(), e)) {
            return Ok(hit.clone());
        }
        let d = entries[e].moment_dx_multi(q, moments)?;
        self.map.insert((q.clone(), e), d.clone());
        Ok(d)
    }
}

/// Compute the entries u_0..u_{j_max} of the formal solution.
pub fn solve<C: Scalar>(req: &SolveRequest, ctx: C::Ctx) -> Result<Solution<C>, SolveError> {
    let spec = &req.spec;
    let diags = spec.validate();
    if !no_errors(&diags) {
        return Err(SolveError::InvalidSpec(
            diags.into_iter().filter(|d| d.severity == Severity::Error).collect(),
        ));
    }
    let provenance = Provenance { spec_sha256: spec_sha256(spec), mode: C::mode_of(ctx) };
    let kappa = spec.kappa;
    let j_max = req.j_max;
    let schedule = degree_schedule(spec, j_max, req.d_out);
    let m0 = spec.t_moment().clone();
    let x_moments: Vec<Arc<MomentSequence>> = spec.x_moments().to_vec();

    let mut entries: Vec<XSeries<C>> = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max.min(kappa - 1) {
        entries.push(materialize_initial(spec, j as usize, schedule[j as usize], ctx)?);
    }
    if j_max < kappa {
        return Ok(Solution {
            u: TSeries::new(m0, entries),
            degree_schedule: schedule,
            provenance,
        });
    }

    let term_factors: Vec<Vec<(u32, MultiIndex)>> =
        spec.terms.iter().map(expanded_factors).collect();
    // prefix[t][k][j''] = entry j'' of the normalized product of the
    // coefficient series with the first k factor series of term t,
    // stored at cap(j'' + kappa).
    let mut prefixes: Vec<Vec<Vec<XSeries<C>>>> = spec
        .terms
        .iter()
        .map(|t| vec![Vec::new(); t.total_r() as usize + 1])
        .collect();
    let mut cache = DerivCache { map: HashMap::new() };

    for j in 0..=(j_max - kappa) {
        let out_cap = schedule[(j + kappa) as usize];
        let mut acc = materialize_inhomogeneity::<C>(spec, j, out_cap, ctx)?;

        for (t_idx, term) in spec.terms.iter().enumerate() {
            if term.v > j {
                continue;
            }
            // Extend this term's prefix pyramid through index j - v_t;
            // factor entries b + i_l <= j + kappa - 1 all exist already.
            let jpp_new = (j - term.v) as usize;
            let levels = &mut prefixes[t_idx];
            while levels[0].len() <= jpp_new {
                let jpp = levels[0].len();
                let store_cap = schedule[jpp + kappa as usize];
                let a_entry: XSeries<C> =
                    term.coeff.entry(spec.dim, jpp as u32).materialize(spec.dim, store_cap, ctx);
                levels[0].push(a_entry);
                for k in 1..levels.len() {
                    let (i_l, q_l) = &term_factors[t_idx][k - 1];
                    let mut sum = XSeries::zero(spec.dim, store_cap, ctx);
                    for a in 0..=jpp {
                        let b = jpp - a;
                        if levels[k - 1][a].is_zero() {
                            continue;
                        }
                        let factor = cache.get(&entries, q_l, b + *i_l as usize, &x_moments)?;
                        if factor.is_zero() {
                            continue;
                        }
                        let w: C = m0.multinomial_scalar(ctx, jpp, &[a, b])?;
                        sum = sum
                            .add(&levels[k - 1][a].mul(&factor).truncated(store_cap).scale(&w));
                    }
                    levels[k].push(sum);
                }
            }
            let s_entry = &levels[levels.len() - 1][jpp_new];
            if s_entry.is_zero() {
                continue;
            }
            let shift_w: C = m0.value_quotient_scalar(ctx, j as usize, jpp_new)?;
            acc = acc.add(&s_entry.truncated(out_cap).scale(&shift_w));
        }

        if !acc.all_finite() {
            return Err(SolveError::Overflow { j: (j + kappa) as usize });
        }
        entries.push(acc);
    }

    Ok(Solution { u: TSeries::new(m0, entries), degree_schedule: schedule, provenance })
}

// ---------------------------------------------------------------------------
// Majorant domination
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MajorantError {
    #[error("majorant construction needs sigma + s_0 > 0, got {0}")]
    NonPositiveWeight(Rational),
    #[error("term {term}: sum r_l i_l - v must be < kappa for the majorant recursion")]
    IllFounded { term: usize },
    #[error("coefficient norm index of term {term} at t-index {j0} has a component below 1; sigma is below the admissible range")]
    IndexBelowOne { term: usize, j0: u32 },
    #[error("solution has {got} entries, majorant comparison needs order >= kappa = {kappa}")]
    SolutionTooShort { got: usize, kappa: u32 },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Moment(#[from] MomentError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantEntry {
    pub j: u32,
    /// Normalized norm N_j of the computed entry.
    pub n_j: f64,
    /// Majorant value v_j at the certified constant.
    pub v_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantReport {
    pub sigma: Rational,
    pub r: Rational,
    pub varsigma: Rational,
    /// Common value of the components of the per-step norm index.
    pub alpha_sigma: Rational,
    /// Smallest dyadic-grid constant >= 1 achieving domination (the
    /// doubling limit when domination failed).
    pub c_star: Rational,
    pub dominated: bool,
    pub entries: Vec<MajorantEntry>,
    /// For kappa >= 2: true when no term contributes to any initial
    /// majorant value (all composition index sets empty); None for
    /// kappa = 1, where no such values exist.
    pub empty_initial_composition: Option<bool>,
}

/// Exact scaffolding shared by all candidate constants during bisection.
struct MajorantFrame {
    kappa: u32,
    /// Uniform composition arity: max over terms of sum_l r_l. Shorter
    /// terms are padded with extra v factors, which only enlarges the
    /// majorant because v_0 >= 1 and every quantity is nonnegative.
    r_tilde: usize,
    /// Normalized inhomogeneity norms g_j for j = 0..=J-kappa.
    g: Vec<Rational>,
    /// Per term: (sum r_l i_l, v_t).
    term_shift: Vec<(u64, u64)>,
    /// Per term: normalized coefficient norms at t-index j0, without
    /// the domination constant.
    coeff_norms: Vec<Vec<Rational>>,
    /// Normalized norms N_j of the computed entries.
    n: Vec<Rational>,
    /// v_0 and the initial-norm parts for 1 <= j < kappa.
    base: Vec<Rational>,
    /// Terms with a nonempty composition set, per index 1 <= j < kappa.
    v_sets: Vec<Vec<usize>>,
}

impl MajorantFrame {
    /// sum over j_0 + j_1 + ... + j_{r_tilde} = m of a_{t,j_0} prod v_{j_k},
    /// using the convolution powers of v computed so far.
    fn compose(&self, pows: &[Vec<Rational>], t: usize, m: i64) -> Rational {
        if m < 0 {
            return Rational::new();
        }
        let m = m as usize;
        let mut acc = Rational::new();
        for (j0, a) in self.coeff_norms[t].iter().enumerate().take(m + 1) {
            if *a == 0 {
                continue;
            }
            let rest = m - j0;
            let conv = if self.r_tilde == 0 {
                if rest == 0 {
                    Rational::from(1)
                } else {
                    Rational::new()
                }
            } else {
                pows[self.r_tilde].get(rest).cloned().unwrap_or_default()
            };
            if conv != 0 {
                acc += Rational::from(a * &conv);
            }
        }
        acc
    }

    /// Majorant sequence at constant c, and whether it dominates n.
    fn run(&self, c: &Rational) -> (Vec<Rational>, bool) {
        let j_top = self.n.len() - 1;
        let rt = self.r_tilde;
        let mut v: Vec<Rational> = Vec::with_capacity(j_top + 1);
        // pows[k][m] = (v^{*k})_m, plain Cauchy convolution powers.
        let mut pows: Vec<Vec<Rational>> = vec![Vec::new(); rt + 1];
        for j in 0..=j_top {
            let val = if (j as u32) < self.kappa {
                let mut val = self.base[j].clone();
                if j >= 1 {
                    for &t in &self.v_sets[j - 1] {
                        let (plus, minus) = self.term_shift[t];
                        let m = j as i64 - self.kappa as i64 + plus as i64 - minus as i64;
                        val += c.clone() * self.compose(&pows, t, m);
                    }
                }
                val
            } else {
                let jj = j - self.kappa as usize;
                let mut val = self.g[jj].clone();
                for t in 0..self.term_shift.len() {
                    let (plus, minus) = self.term_shift[t];
                    let m = jj as i64 + plus as i64 - minus as i64;
                    val += c.clone() * self.compose(&pows, t, m);
                }
                val
            };
            // Extend v and its convolution powers through index j.
            v.push(val);
            let m = v.len() - 1;
            for k in 1..=rt {
                let entry = if k == 1 {
                    v[m].clone()
                } else {
                    let mut acc = Rational::new();
                    for a in 0..=m {
                        if pows[k - 1][a] != 0 && v[m - a] != 0 {
                            acc += Rational::from(&pows[k - 1][a] * &v[m - a]);
                        }
                    }
                    acc
                };
                pows[k].push(entry);
            }
        }
        let dominated = self.n.iter().zip(&v).all(|(n, vv)| n <= vv);
        (v, dominated)
    }
}

fn rat_of<C: Scalar>(x: &C) -> Rational {
    x.to_rational().unwrap_or_default()
}

/// Verify that the norm sequence of a computed solution is dominated by
/// the recursive majorant sequence at Gevrey level sigma, reporting the
/// smallest dyadic constant achieving it. All comparisons are exact
/// rational arithmetic; in float mode the norms enter through their
/// exact dyadic values.
pub fn check_majorant<C: Scalar>(
    solution: &Solution<C>,
    spec: &EquationSpec,
    sigma: &Rational,
    r: &Rational,
    ctx: C::Ctx,
) -> Result<MajorantReport, MajorantError> {
    let kappa = spec.kappa;
    let dim = spec.dim;
    let m0 = spec.t_moment().clone();
    let s0 = m0.order().clone();
    let s: Vec<Rational> = spec.x_moments().iter().map(|m| m.order().clone()).collect();
    let weight = Rational::from(sigma + &s0);
    if weight <= 0 {
        return Err(MajorantError::NonPositiveWeight(weight));
    }
    for (t_idx, term) in spec.terms.iter().enumerate() {
        if term.total_ri() as i64 - term.v as i64 >= kappa as i64 {
            return Err(MajorantError::IllFounded { term: t_idx });
        }
    }
    let j_top = solution.u.t_order();
    if (j_top as u32) < kappa {
        return Err(MajorantError::SolutionTooShort { got: j_top + 1, kappa });
    }

    // varsigma = max((1 - w (kappa + max v)) / w,
    //                max_t 1 / (w (kappa - sum r_l i_l + v_t))).
    let max_v = spec.terms.iter().map(|t| t.v).max().unwrap_or(0);
    let mut varsigma = (Rational::from(1) - weight.clone() * (kappa + max_v)) / weight.clone();
    for term in &spec.terms {
        let depth = Rational::from(kappa + term.v) - Rational::from(term.total_ri());
        let cand = Rational::from(1) / (weight.clone() * depth);
        if cand > varsigma {
            varsigma = cand;
        }
    }
    let v_bar = Rational::from(&varsigma + max_v);
    let alpha_sigma = weight.clone() * (Rational::from(kappa) + &v_bar);

    let gamma_sigma = |j: u32| -> Result<Rational, MajorantError> {
        Ok(Exact::gamma_one_plus((), &Rational::from(sigma * j))?)
    };
    let alpha_at = |j: u32| -> AlphaIndex {
        if j == 0 {
            AlphaIndex::Zero
        } else {
            AlphaIndex::uniform(dim, alpha_sigma.clone() * j)
        }
    };

    // N_j = |u_j|_{j alpha, r, s} / (m_0(j) Gamma(1 + sigma j)).
    let mut n = Vec::with_capacity(j_top + 1);
    for j in 0..=j_top as u32 {
        let p = NormParams::new(alpha_at(j), r.clone(), s.clone(), dim)?;
        let norm = rat_of(&nagumo_norm(solution.u.entry(j as usize), &p)?);
        let denom = m0.value_exact(j as usize)? * gamma_sigma(j)?;
        n.push(norm / denom);
    }

    // g_j = |f_j|_{(j+kappa) alpha} / (m_0(j+kappa) Gamma(1+sigma(j+kappa))).
    let mut g = Vec::new();
    for j in 0..=(j_top as u32 - kappa) {
        let cap = solution.degree_schedule[(j + kappa) as usize];
        let fj = materialize_inhomogeneity::<C>(spec, j, cap, ctx)?;
        let p = NormParams::new(alpha_at(j + kappa), r.clone(), s.clone(), dim)?;
        let norm = rat_of(&nagumo_norm(&fj, &p)?);
        let denom = m0.value_exact((j + kappa) as usize)? * gamma_sigma(j + kappa)?;
        g.push(norm / denom);
    }

    // Per-term shifts and normalized coefficient norms at the shifted
    // index alpha'_sigma(j0) = (j0 + kappa + v - sum r_l i_l) alpha_sigma
    // - sum_l r_l q_l, componentwise.
    let mut term_shift = Vec::with_capacity(spec.terms.len());
    let mut coeff_norms = Vec::with_capacity(spec.terms.len());
    for (t_idx, term) in spec.terms.iter().enumerate() {
        term_shift.push((term.total_ri(), term.v as u64));
        let sum_ri = Rational::from(term.total_ri());
        let mut rq = vec![Rational::new(); dim];
        for f in &term.factors {
            for d in 0..dim {
                rq[d] += Rational::from(f.r * f.q.get(d));
            }
        }
        let mut norms = Vec::new();
        for j0 in 0..j_top as u32 {
            let lead = Rational::from(j0 + kappa + term.v) - &sum_ri;
            let comps: Vec<Rational> =
                (0..dim).map(|d| lead.clone() * &alpha_sigma - &rq[d]).collect();
            if comps.iter().any(|c| *c < 1) {
                return Err(MajorantError::IndexBelowOne { term: t_idx, j0 });
            }
            let a_poly = term.coeff.entry(dim, j0);
            if a_poly.is_zero() {
                norms.push(Rational::new());
                continue;
            }
            let a_mat: XSeries<C> = a_poly.materialize(dim, u32::MAX, ctx);
            let p = NormParams::new(AlphaIndex::Pos(comps), r.clone(), s.clone(), dim)?;
            let norm = rat_of(&nagumo_norm(&a_mat, &p)?);
            let denom = gamma_sigma(j0)? * m0.value_exact(j0 as usize)?;
            norms.push(norm / denom);
        }
        coeff_norms.push(norms);
    }

    // Base values: v_0 = 1 + |phi_0|_0, then the initial-norm parts.
    let mut base = Vec::with_capacity(kappa as usize);
    base.push(Rational::from(1) + &n[0]);
    for j in 1..kappa {
        base.push(n[j as usize].clone());
    }
    let mut v_sets = Vec::new();
    for j in 1..kappa {
        let members = spec
            .terms
            .iter()
            .enumerate()
            .filter(|(_, term)| {
                j as i64 - kappa as i64 + term.total_ri() as i64 - term.v as i64 >= 0
            })
            .map(|(t, _)| t)
            .collect();
        v_sets.push(members);
    }
    let empty_initial_composition =
        if kappa >= 2 { Some(v_sets.iter().all(Vec::is_empty)) } else { None };

    let r_tilde = spec.terms.iter().map(|t| t.total_r()).max().unwrap_or(0) as usize;
    let frame = MajorantFrame { kappa, r_tilde, g, term_shift, coeff_norms, n, base, v_sets };

    // Domination is monotone in the constant, so scan-and-bisect finds
    // the smallest admissible dyadic value.
    let one = Rational::from(1);
    let (v_one, ok_one) = frame.run(&one);
    let (c_star, dominated, v_final) = if ok_one {
        (one, true, v_one)
    } else {
        let mut hi = Rational::from(2);
        let mut found = false;
        for _ in 0..40 {
            let (_, ok) = frame.run(&hi);
            if ok {
                found = true;
                break;
            }
            hi *= 2;
        }
        if !found {
            (hi, false, v_one)
        } else {
            let mut lo = Rational::from(&hi / 2u32);
            for _ in 0..20 {
                let mid = Rational::from(&lo + &hi) / 2u32;
                let (_, ok) = frame.run(&mid);
                if ok {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let (v, ok) = frame.run(&hi);
            (hi, ok, v)
        }
    };

    let entries = frame
        .n
        .iter()
        .zip(&v_final)
        .enumerate()
        .map(|(j, (nj, vj))| MajorantEntry { j: j as u32, n_j: nj.to_f64(), v_j: vj.to_f64() })
        .collect();
    Ok(MajorantReport {
        sigma: sigma.clone(),
        r: r.clone(),
        varsigma,
        alpha_sigma,
        c_star,
        dominated,
        entries,
        empty_initial_composition,
    })
}

// ---------------------------------------------------------------------------
// Sharpness construction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CounterexampleError {
    #[error("critical value is zero; nothing to sharpen")]
    NoPositiveSlope,
    #[error("term {term} has a non-constant or non-positive coefficient")]
    CoeffNotConstPositive { term: usize },
    #[error("distinguished term {term} is not of the supported factor shape")]
    UnsupportedShape { term: usize },
    #[error(transparent)]
    Polygon(#[from] PolygonError),
}

/// The transformed problem whose solution realizes the critical growth.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub spec: EquationSpec,
    pub sigma_c: Rational,
    pub kstar_term: usize,
    pub i_star: u32,
    pub v_star: u32,
    pub q_star: MultiIndex,
}

impl Counterexample {
    pub fn kstar_data(&self) -> KstarData {
        KstarData {
            i_star: self.i_star,
            v_star: self.v_star,
            q_star: self.q_star.clone(),
            s_orders: self.spec.moments.iter().map(|m| m.order().clone()).collect(),
        }
    }
}

/// Build the sharpness problem from a template: keep the terms, replace
/// the distinguished initial datum by the extremal series, the other
/// initial data by the geometric series, and drop the inhomogeneity.
/// Requires a positive critical value, constant positive coefficients,
/// and a distinguished term shaped (i*, q*, 1) or (0, 0, p) (i*, q*, 1).
pub fn build_counterexample(
    template: &EquationSpec,
) -> Result<Counterexample, CounterexampleError> {
    let poly = polygon::build(template)?;
    if poly.sigma_c == 0 {
        return Err(CounterexampleError::NoPositiveSlope);
    }
    for (t_idx, term) in template.terms.iter().enumerate() {
        match &term.coeff {
            CoeffSpec::Const(c) if *c > 0 => {}
            _ => return Err(CounterexampleError::CoeffNotConstPositive { term: t_idx }),
        }
    }
    let kstar_term = poly.kstar.expect("positive critical value has a witness term");
    let term = &template.terms[kstar_term];
    let zero_q = MultiIndex::zero(template.dim);
    let star = match term.factors.as_slice() {
        [f] if f.r == 1 => f,
        [pad, f] if pad.i == 0 && pad.q == zero_q && f.r == 1 => f,
        _ => return Err(CounterexampleError::UnsupportedShape { term: kstar_term }),
    };
    let (i_star, q_star) = (star.i, star.q.clone());

    let mut spec = template.clone();
    spec.inhomogeneity = Inhomogeneity::Zero;
    for (j, init) in spec.initial.iter_mut().enumerate() {
        *init = if j as u32 == i_star {
            InitialData::Em { a: None }
        } else {
            InitialData::Geom
        };
    }
    Ok(Counterexample {
        spec,
        sigma_c: poly.sigma_c,
        kstar_term,
        i_star,
        v_star: term.v,
        q_star,
    })
}

// ---------------------------------------------------------------------------
// Exact product lower bound
// ---------------------------------------------------------------------------

/// prod_{k=0}^{j-1} prod_{l=1}^{v} (k (v + a) + l) and (j v)!, as exact
/// integers; the first dominates the second.
pub fn technical_product_lower_bound(j: u32, v: u32, a: u32) -> (Integer, Integer) {
    let mut lhs = Integer::from(1);
    for k in 0..j {
        for l in 1..=v {
            lhs *= k * (v + a) + l;
        }
    }
    let rhs = Integer::from(Integer::factorial(j * v));
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::RatPoly;
    use crate::scalar::Fp;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::from_slice(v)
    }

    fn gamma1() -> Arc<MomentSequence> {
        Arc::new(MomentSequence::gamma(Rational::from(1)).unwrap())
    }

    fn heat_spec(initial: InitialData) -> EquationSpec {
        EquationSpec {
            dim: 1,
            kappa: 1,
            moments: vec![gamma1(), gamma1()],
            terms: vec![Term {
                v: 0,
                coeff: CoeffSpec::one(),
                factors: vec![TermFactor { i: 0, q: mi(&[2]), r: 1 }],
            }],
            inhomogeneity: Inhomogeneity::Zero,
            initial: vec![initial],
        }
    }

    fn burgers_spec(initial: InitialData) -> EquationSpec {
        EquationSpec {
            dim: 1,
            kappa: 1,
            moments: vec![gamma1(), gamma1()],
            terms: vec![
                Term {
                    v: 0,
                    coeff: CoeffSpec::one(),
                    factors: vec![TermFactor { i: 0, q: mi(&[2]), r: 1 }],
                },
                Term {
                    v: 0,
                    coeff: CoeffSpec::Const(Rational::from(2)),
                    factors: vec![
                        TermFactor { i: 0, q: mi(&[0]), r: 1 },
                        TermFactor { i: 0, q: mi(&[1]), r: 1 },
                    ],
                },
            ],
            inhomogeneity: Inhomogeneity::Zero,
            initial: vec![initial],
        }
    }

    fn x_squared() -> InitialData {
        let mut p = RatPoly::new();
        p.insert(mi(&[2]), Rational::from(1));
        InitialData::Poly(p)
    }

    fn x_poly() -> InitialData {
        let mut p = RatPoly::new();
        p.insert(mi(&[1]), Rational::from(1));
        InitialData::Poly(p)
    }

    #[test]
    fn heat_polynomial_closed_form() {
        // d_t u = d_x^2 u with u_0 = x^2: u = x^2 + 2t, so the
        // normalized entries are x^2, 2, 0, 0, ...
        let req = SolveRequest { spec: heat_spec(x_squared()), j_max: 6, d_out: 4 };
        let sol = solve::<Exact>(&req, ()).unwrap();
        assert_eq!(sol.u.entry(0).get(&mi(&[2])), Rational::from(1));
        assert_eq!(sol.u.entry(1).get(&mi(&[0])), Rational::from(2));
        assert_eq!(sol.u.entry(1).nonzero_len(), 1);
        for j in 2..=6 {
            assert!(sol.u.entry(j).is_zero(), "entry {j} should vanish");
        }
    }

    #[test]
    fn transport_diffusion_growth() {
        // d_t u = d_x^2 u + 2 u d_x u with u_0 = x: the solution is
        // x / (1 - 2t), with normalized entries j! 2^j x.
        let req = SolveRequest { spec: burgers_spec(x_poly()), j_max: 8, d_out: 4 };
        let sol = solve::<Exact>(&req, ()).unwrap();
        for j in 0..=8u32 {
            let entry = sol.u.entry(j as usize);
            let expect = Exact::factorial((), j) * Rational::from(Integer::from(1) << j);
            assert_eq!(entry.get(&mi(&[1])), expect, "entry {j}");
            assert_eq!(entry.nonzero_len(), 1, "entry {j} is a multiple of x");
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let req = SolveRequest { spec: burgers_spec(InitialData::Geom), j_max: 6, d_out: 3 };
        let a = solve::<Exact>(&req, ()).unwrap();
        let b = solve::<Exact>(&req, ()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linear_superposition() {
        let solved = |init: InitialData| {
            let req = SolveRequest { spec: heat_spec(init), j_max: 5, d_out: 6 };
            solve::<Exact>(&req, ()).unwrap()
        };
        let mut p = RatPoly::new();
        p.insert(mi(&[2]), Rational::from(3));
        p.insert(mi(&[4]), Rational::from((1, 2)));
        let combined = solved(InitialData::Poly(p));
        let a = solved(x_squared());
        let mut p4 = RatPoly::new();
        p4.insert(mi(&[4]), Rational::from(1));
        let b = solved(InitialData::Poly(p4));
        for j in 0..=5usize {
            let want = a
                .u
                .entry(j)
                .scale(&Rational::from(3))
                .add(&b.u.entry(j).scale(&Rational::from((1, 2))));
            assert_eq!(*combined.u.entry(j), want, "entry {j}");
        }
    }

    #[test]
    fn initial_only_below_kappa() {
        let mut spec = heat_spec(x_squared());
        spec.kappa = 2;
        spec.initial.push(InitialData::Geom);
        let req = SolveRequest { spec, j_max: 1, d_out: 5 };
        let sol = solve::<Exact>(&req, ()).unwrap();
        assert_eq!(sol.u.t_order(), 1);
        assert_eq!(sol.degree_schedule, vec![5, 5]);
        assert_eq!(sol.u.entry(1).get(&mi(&[3])), Rational::from(1));
    }

    #[test]
    fn schedule_shape() {
        let spec = burgers_spec(InitialData::Geom);
        // q_max = 2, kappa = 1, J = 4, d_out = 3:
        // initial cap 3 + 4*2 = 11, then 3 + (4-j)*2.
        assert_eq!(degree_schedule(&spec, 4, 3), vec![11, 9, 7, 5, 3]);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut spec = heat_spec(x_squared());
        spec.initial.clear();
        let req = SolveRequest { spec, j_max: 3, d_out: 2 };
        assert!(matches!(solve::<Exact>(&req, ()), Err(SolveError::InvalidSpec(_))));
    }

    #[test]
    fn gevrey_inhomogeneity_entries() {
        let mut spec = heat_spec(x_squared());
        spec.inhomogeneity = Inhomogeneity::Gevrey {
            sigma: Rational::from(1),
            c: Rational::from(3),
            k: Rational::from((1, 2)),
        };
        let req = SolveRequest { spec, j_max: 4, d_out: 4 };
        let sol = solve::<Exact>(&req, ()).unwrap();
        // u_1 = f_0 + d_x^2 u_0 = 3 + 2.
        assert_eq!(sol.u.entry(1).get(&mi(&[0])), Rational::from(5));
        // u_2 = f_1 + d_x^2 u_1 = 3 * (1/2) * 1! + 0.
        assert_eq!(sol.u.entry(2).get(&mi(&[0])), Rational::from((3, 2)));
    }

    #[test]
    fn heat_majorant_dominates_at_constant_one() {
        let req = SolveRequest { spec: heat_spec(InitialData::Geom), j_max: 12, d_out: 4 };
        let sol = solve::<Exact>(&req, ()).unwrap();
        let report =
            check_majorant(&sol, &req.spec, &Rational::from(1), &Rational::from((1, 2)), ())
                .unwrap();
        assert!(report.dominated);
        assert_eq!(report.c_star, Rational::from(1));
        assert_eq!(report.alpha_sigma, Rational::from(3));
        assert_eq!(report.varsigma, Rational::from((1, 2)));
        assert_eq!(report.empty_initial_composition, None);
        // v_j = 3 / 2^j for the geometric datum: v_3 = 3/8, up to the
        // 2^-31 shaved off by the degree-28 truncation of the datum.
        let e3 = &report.entries[3];
        assert!((e3.v_j - 0.375).abs() < 1e-8);
        assert!(e3.n_j <= e3.v_j);
    }

    #[test]
    fn transport_diffusion_majorant_dominates() {
        let req = SolveRequest { spec: burgers_spec(InitialData::Geom), j_max: 12, d_out: 4 };
        let sol = solve::<Exact>(&req, ()).unwrap();
        let report =
            check_majorant(&sol, &req.spec, &Rational::from(1), &Rational::from((1, 2)), ())
                .unwrap();
        assert!(report.dominated);
        assert_eq!(report.c_star, Rational::from(1));
    }

    #[test]
    fn majorant_rejects_sigma_below_admissible() {
        // At sigma = 0 the shifted coefficient index of the transport
        // term has a component below 1, so the construction refuses.
        let req = SolveRequest { spec: burgers_spec(InitialData::Geom), j_max: 4, d_out: 2 };
        let sol = solve::<Exact>(&req, ()).unwrap();
        let err =
            check_majorant(&sol, &req.spec, &Rational::new(), &Rational::from((1, 2)), ())
                .unwrap_err();
        assert!(matches!(err, MajorantError::IndexBelowOne { .. }));
    }

    #[test]
    fn counterexample_build_and_growth() {
        let template = burgers_spec(InitialData::Geom);
        let ce = build_counterexample(&template).unwrap();
        assert_eq!(ce.sigma_c, Rational::from(1));
        assert_eq!(ce.i_star, 0);
        assert_eq!(ce.v_star, 0);
        assert_eq!(ce.q_star, mi(&[2]));
        assert_eq!(ce.spec.initial, vec![InitialData::Em { a: None }]);
        let req = SolveRequest { spec: ce.spec.clone(), j_max: 10, d_out: 2 };
        let sol = solve::<Exact>(&req, ()).unwrap();
        // Entries at the origin dominate the pure-diffusion growth (2j)!.
        for j in 0..=10u32 {
            let val = sol.u.entry(j as usize).get(&mi(&[0]));
            let floor = Rational::from(Integer::from(Integer::factorial(2 * j)));
            assert!(val >= floor, "entry {j}: {val} < {floor}");
        }
    }

    #[test]
    fn counterexample_rejects_zero_slope() {
        // Pure transport d_t u = d_x u has no strict support point.
        let spec = EquationSpec {
            dim: 1,
            kappa: 1,
            moments: vec![gamma1(), gamma1()],
            terms: vec![Term {
                v: 0,
                coeff: CoeffSpec::one(),
                factors: vec![TermFactor { i: 0, q: mi(&[1]), r: 1 }],
            }],
            inhomogeneity: Inhomogeneity::Zero,
            initial: vec![InitialData::Geom],
        };
        assert!(matches!(build_counterexample(&spec), Err(CounterexampleError::NoPositiveSlope)));
    }

    #[test]
    fn counterexample_rejects_negative_coefficient() {
        let mut spec = burgers_spec(InitialData::Geom);
        spec.terms[1].coeff = CoeffSpec::Const(Rational::from(-2));
        assert!(matches!(
            build_counterexample(&spec),
            Err(CounterexampleError::CoeffNotConstPositive { term: 1 })
        ));
    }

    #[test]
    fn technical_lemma_exact() {
        for j in 0..=12u32 {
            for v in 1..=4u32 {
                for a in 0..=4u32 {
                    let (lhs, rhs) = technical_product_lower_bound(j, v, a);
                    assert!(lhs >= rhs, "j={j} v={v} a={a}: {lhs} < {rhs}");
                }
            }
        }
    }

    #[test]
    fn float_solve_matches_exact() {
        let req = SolveRequest { spec: burgers_spec(InitialData::Geom), j_max: 8, d_out: 3 };
        let exact = solve::<Exact>(&req, ()).unwrap();
        let float = solve::<Fp>(&req, 128).unwrap();
        for j in 0..=8usize {
            for (idx, c) in exact.u.entry(j).iter() {
                let fc = float.u.entry(j).get(&idx).to_f64();
                let ec = c.to_f64();
                assert!(
                    (fc - ec).abs() <= 1e-12 * ec.abs().max(1.0),
                    "entry {j} at {idx}: {fc} vs {ec}"
                );
            }
        }
        assert_eq!(float.provenance.mode, Mode::Float { bits: 128 });
    }
}
