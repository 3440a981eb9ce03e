//! Modified Nagumo norms, their algebraic inequalities, and growth
//! diagnostics for t-series.
//!
//! For a norm index alpha in {0} u [1,oo)^N, a radius 0 < r < 1 and
//! weights s_d >= 1, the norm of f(x) = sum_j f_j x^j is
//!
//! ```text
//! |f|_{0,r,s}     = sum_j |f_j| r^{|j|}
//! |f|_{alpha,r,s} = max_j |f_j| r^{lambda(alpha)+|j|} / theta_{alpha,s}(j)
//! theta_{alpha,s}(j) = prod_d binom(alpha_d + j_d - 1, j_d)^{s_d}
//! ```
//!
//! with lambda(alpha) = sum_d alpha_d. The module verifies, by exact
//! rational arithmetic on randomized inputs, the inequalities the solver
//! relies on: submultiplicativity under the index sum, the index shift,
//! the moment-derivative bound with explicit regularity constants, the
//! sup bound on a smaller polydisc, the Vandermonde convolution that
//! powers the product proof, and the Gevrey-norm chain. A dedicated
//! search routine exhibits a counterexample to submultiplicativity once
//! any weight drops below 1, showing that hypothesis is sharp.
//!
//! The module also hosts the sigma-Gevrey estimator (least squares in
//! the basis {1, j, j ln j} on log-sup data) and the lower-bound
//! diagnostics used by the sharpness construction.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::Rational;
use thiserror::Error;

use crate::moments::{MomentError, MomentSequence};
use crate::scalar::{Exact, Scalar, ScalarError};
use crate::series::{MultiIndex, SeriesError, TSeries, XSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("norm index has {got} components, series has {expected} axes")]
    DimMismatch { got: usize, expected: usize },
    #[error("norm radius must lie strictly between 0 and 1, got {0}")]
    InvalidRadius(Rational),
    #[error("norm index components must be >= 1, got {0}")]
    InvalidAlpha(Rational),
    #[error("norm weights must be >= 1, got {0}")]
    InvalidWeight(Rational),
    #[error("exact norms need an integer index sum, got lambda = {0}")]
    ExactNeedsIntegerLambda(Rational),
    #[error("exact norms need integer weights, got {0}")]
    ExactNeedsIntegerWeight(Rational),
    #[error("derivative order cannot be added to the zero norm index")]
    ZeroIndexShift,
    #[error("series has t-order {t_order}, but at least 12 entries are needed")]
    SeriesTooShort { t_order: usize },
    #[error("window {lo}..={hi} does not fit a series of t-order {t_order}")]
    InvalidWindow { lo: u32, hi: u32, t_order: usize },
    #[error("only {available} usable points in the window; at least 4 are needed")]
    FewerThanFourPoints { available: usize },
    #[error("lower-bound data needs at least 2 usable points, got {available}")]
    FewerThanTwoPoints { available: usize },
    #[error("sequence value at t-index {j} is not positive; cannot take logs")]
    ValueNotPositive { j: u32 },
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

// ---------------------------------------------------------------------------
// Norm indices
// ---------------------------------------------------------------------------

/// Norm index alpha in {0} u [1,oo)^N.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaIndex {
    Zero,
    Pos(Vec<Rational>),
}

impl AlphaIndex {
    /// Index with every component equal to `c` (c >= 1).
    pub fn uniform(dim: usize, c: Rational) -> Self {
        AlphaIndex::Pos(vec![c; dim])
    }

    /// lambda(alpha) = sum of components; 0 for the zero index.
    pub fn lambda(&self) -> Rational {
        match self {
            AlphaIndex::Zero => Rational::new(),
            AlphaIndex::Pos(v) => v.iter().fold(Rational::new(), |acc, c| acc + c),
        }
    }

    pub fn add(&self, other: &AlphaIndex) -> AlphaIndex {
        match (self, other) {
            (AlphaIndex::Zero, b) => b.clone(),
            (a, AlphaIndex::Zero) => a.clone(),
            (AlphaIndex::Pos(a), AlphaIndex::Pos(b)) => {
                assert_eq!(a.len(), b.len(), "index dimensions must agree");
                AlphaIndex::Pos(
                    a.iter().zip(b).map(|(x, y)| Rational::from(x + y)).collect(),
                )
            }
        }
    }

    /// alpha + q for a derivative order q; the zero index only admits q = 0.
    pub fn add_index(&self, q: &MultiIndex) -> Result<AlphaIndex, AnalysisError> {
        match self {
            AlphaIndex::Zero => {
                if q.total() == 0 {
                    Ok(AlphaIndex::Zero)
                } else {
                    Err(AnalysisError::ZeroIndexShift)
                }
            }
            AlphaIndex::Pos(a) => {
                if a.len() != q.dim() {
                    return Err(AnalysisError::DimMismatch { got: q.dim(), expected: a.len() });
                }
                Ok(AlphaIndex::Pos(
                    a.iter()
                        .enumerate()
                        .map(|(d, c)| Rational::from(c + q.get(d)))
                        .collect(),
                ))
            }
        }
    }

    /// j * alpha; j = 0 collapses to the zero index.
    pub fn scale(&self, j: u32) -> AlphaIndex {
        if j == 0 {
            return AlphaIndex::Zero;
        }
        match self {
            AlphaIndex::Zero => AlphaIndex::Zero,
            AlphaIndex::Pos(v) => {
                AlphaIndex::Pos(v.iter().map(|c| Rational::from(c * j)).collect())
            }
        }
    }

    pub fn is_integer(&self) -> bool {
        match self {
            AlphaIndex::Zero => true,
            AlphaIndex::Pos(v) => v.iter().all(|c| c.is_integer()),
        }
    }
}

impl fmt::Display for AlphaIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaIndex::Zero => write!(f, "0"),
            AlphaIndex::Pos(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
        }
    }
}

/// Validated parameter pack (alpha, r, s) of a modified Nagumo norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    alpha: AlphaIndex,
    r: Rational,
    s: Vec<Rational>,
}

impl NormParams {
    pub fn new(
        alpha: AlphaIndex,
        r: Rational,
        s: Vec<Rational>,
        dim: usize,
    ) -> Result<Self, AnalysisError> {
        if r <= 0 || r >= 1 {
            return Err(AnalysisError::InvalidRadius(r));
        }
        if s.len() != dim {
            return Err(AnalysisError::DimMismatch { got: s.len(), expected: dim });
        }
        for w in &s {
            if *w < 1 {
                return Err(AnalysisError::InvalidWeight(w.clone()));
            }
        }
        if let AlphaIndex::Pos(v) = &alpha {
            if v.len() != dim {
                return Err(AnalysisError::DimMismatch { got: v.len(), expected: dim });
            }
            for c in v {
                if *c < 1 {
                    return Err(AnalysisError::InvalidAlpha(c.clone()));
                }
            }
        }
        Ok(NormParams { alpha, r, s })
    }

    pub fn alpha(&self) -> &AlphaIndex {
        &self.alpha
    }

    pub fn radius(&self) -> &Rational {
        &self.r
    }

    pub fn weights(&self) -> &[Rational] {
        &self.s
    }

    /// Same (r, s) under a different index.
    pub fn with_alpha(&self, alpha: AlphaIndex) -> Result<Self, AnalysisError> {
        NormParams::new(alpha, self.r.clone(), self.s.clone(), self.s.len())
    }

    /// lambda(s) = sum of the weights.
    pub fn lambda_s(&self) -> Rational {
        self.s.iter().fold(Rational::new(), |acc, w| acc + w)
    }

    pub fn s_max(&self) -> Rational {
        self.s.iter().max().cloned().unwrap_or_else(|| Rational::from(1))
    }
}

// ---------------------------------------------------------------------------
// Norm evaluation
// ---------------------------------------------------------------------------

/// binom(top, k) = top (top-1) ... (top-k+1) / k! for rational top.
pub fn binom_rat(top: &Rational, k: u32) -> Rational {
    let mut num = Rational::from(1);
    for i in 0..k {
        num *= Rational::from(top - i);
    }
    num / Exact::factorial((), k)
}

/// theta_{alpha,s}(j) = prod_d binom(alpha_d + j_d - 1, j_d)^{s_d} for
/// integer weights; the exact rational form of the weight coefficient.
pub fn theta_coeff(
    alpha: &AlphaIndex,
    s: &[Rational],
    idx: &MultiIndex,
) -> Result<Rational, AnalysisError> {
    let v = match alpha {
        AlphaIndex::Zero => return Ok(Rational::from(1)),
        AlphaIndex::Pos(v) => v,
    };
    let mut out = Rational::from(1);
    for d in 0..v.len() {
        let w = &s[d];
        if !w.is_integer() {
            return Err(AnalysisError::ExactNeedsIntegerWeight(w.clone()));
        }
        let e = w.numer().to_i32().expect("small weight");
        let top = Rational::from(&v[d] + idx.get(d)) - 1u32;
        out *= binom_rat(&top, idx.get(d)).pow(e);
    }
    Ok(out)
}

fn theta_scalar<C: Scalar>(
    ctx: C::Ctx,
    alpha: &[Rational],
    s: &[Rational],
    idx: &MultiIndex,
) -> Result<C, AnalysisError> {
    let mut out = C::one(ctx);
    for d in 0..alpha.len() {
        let top = Rational::from(&alpha[d] + idx.get(d)) - 1u32;
        let b = C::from_rational(ctx, &binom_rat(&top, idx.get(d)));
        out = out.mul(&b.pow_rational(&s[d])?);
    }
    Ok(out)
}

/// r^e for rational e; exact only when e is an integer.
fn pow_rat_scalar<C: Scalar>(ctx: C::Ctx, base: &Rational, e: &Rational) -> Result<C, ScalarError> {
    C::from_rational(ctx, base).pow_rational(e)
}

fn norm_core<C: Scalar>(f: &XSeries<C>, p: &NormParams) -> Result<C, AnalysisError> {
    let ctx = f.ctx();
    match &p.alpha {
        AlphaIndex::Zero => {
            let r = C::from_rational(ctx, &p.r);
            let mut acc = C::zero(ctx);
            for (idx, c) in f.iter() {
                acc = acc.add(&c.abs().mul(&r.powi(idx.total() as i32)));
            }
            Ok(acc)
        }
        AlphaIndex::Pos(v) => {
            let lambda = p.alpha.lambda();
            let mut best = C::zero(ctx);
            for (idx, c) in f.iter() {
                let e = Rational::from(&lambda + idx.total());
                let rp: C = pow_rat_scalar(ctx, &p.r, &e)?;
                let theta: C = theta_scalar(ctx, v, &p.s, &idx)?;
                let val = c.abs().mul(&rp).div(&theta);
                if val.total_cmp(&best) == std::cmp::Ordering::Greater {
                    best = val;
                }
            }
            Ok(best)
        }
    }
}

/// Modified Nagumo norm of a series. Exact arithmetic requires an
/// integer index sum and integer weights; the float path evaluates the
/// same expression at the context precision.
pub fn nagumo_norm<C: Scalar>(f: &XSeries<C>, p: &NormParams) -> Result<C, AnalysisError> {
    if let AlphaIndex::Pos(v) = &p.alpha {
        if v.len() != f.dim() {
            return Err(AnalysisError::DimMismatch { got: v.len(), expected: f.dim() });
        }
    }
    if p.s.len() != f.dim() {
        return Err(AnalysisError::DimMismatch { got: p.s.len(), expected: f.dim() });
    }
    if C::IS_EXACT {
        let lambda = p.alpha.lambda();
        if !lambda.is_integer() {
            return Err(AnalysisError::ExactNeedsIntegerLambda(lambda));
        }
        for w in &p.s {
            if !w.is_integer() {
                return Err(AnalysisError::ExactNeedsIntegerWeight(w.clone()));
            }
        }
    }
    norm_core(f, p)
}

/// Compare lhs <= rhs, allowing a 2^-30 relative band in float mode to
/// absorb rounding at the evaluation sites.
pub fn leq_with_slack<C: Scalar>(lhs: &C, rhs: &C) -> bool {
    if C::IS_EXACT {
        lhs.total_cmp(rhs) != std::cmp::Ordering::Greater
    } else {
        let slack = (1.0 + rhs.to_f64().abs()) / 1073741824.0;
        lhs.to_f64() <= rhs.to_f64() + slack
    }
}

/// Square of the norm without the weight validation, for weights with
/// integer doubles (2 s_d integer). Used to certify that the product
/// inequality genuinely fails below weight 1: squaring keeps every
/// quantity rational even for half-integer weights.
fn norm_sq_unchecked(
    f: &XSeries<Rational>,
    alpha: &AlphaIndex,
    r: &Rational,
    s_doubled: &[u32],
) -> Rational {
    match alpha {
        AlphaIndex::Zero => {
            let mut acc = Rational::new();
            for (idx, c) in f.iter() {
                acc += Rational::from(c.abs_ref()) * r.clone().pow(idx.total() as i32);
            }
            acc.clone() * acc
        }
        AlphaIndex::Pos(v) => {
            let lambda = alpha.lambda();
            assert!(lambda.is_integer(), "integer index sum required");
            let le = lambda.numer().to_i32().expect("small lambda");
            let mut best = Rational::new();
            for (idx, c) in f.iter() {
                let ca = Rational::from(c.abs_ref());
                let mut val = ca.clone() * ca * r.clone().pow(2 * (le + idx.total() as i32));
                for d in 0..v.len() {
                    let top = Rational::from(&v[d] + idx.get(d)) - 1u32;
                    val /= binom_rat(&top, idx.get(d)).pow(s_doubled[d]);
                }
                if val > best {
                    best = val;
                }
            }
            best
        }
    }
}

// ---------------------------------------------------------------------------
// Property suite
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: String,
    pub trials: u32,
    pub failures: u32,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSuiteReport {
    pub seed: u64,
    pub trials_per_property: u32,
    pub properties: Vec<PropertyReport>,
    pub all_passed: bool,
}

impl NormSuiteReport {
    pub fn summary_lines(&self) -> Vec<String> {
        self.properties
            .iter()
            .map(|p| {
                let status = if p.failures == 0 { "ok" } else { "FAILED" };
                format!("{}: {} ({} trials, {} failures)", p.name, status, p.trials, p.failures)
            })
            .collect()
    }
}

struct TrialEnv {
    dim: usize,
    s: Vec<Rational>,
    moments: Vec<Arc<MomentSequence>>,
    r: Rational,
    params: NormParams,
}

fn rand_rational(rng: &mut ChaCha8Rng, max_num: i64, max_den: u32) -> Rational {
    let num = rng.random_range(-max_num..=max_num);
    let den = rng.random_range(1..=max_den);
    Rational::from((num, den as i64))
}

fn rand_radius(rng: &mut ChaCha8Rng) -> Rational {
    let den = rng.random_range(3u32..=9);
    let num = rng.random_range(1u32..den);
    Rational::from((num, den))
}

fn rand_alpha(rng: &mut ChaCha8Rng, dim: usize, allow_zero: bool) -> AlphaIndex {
    if allow_zero && rng.random_bool(0.15) {
        return AlphaIndex::Zero;
    }
    AlphaIndex::Pos((0..dim).map(|_| Rational::from(rng.random_range(1u32..=4))).collect())
}

fn rand_poly(rng: &mut ChaCha8Rng, dim: usize, cap: u32) -> XSeries<Rational> {
    let per_axis = if dim == 1 { 5 } else { 3 };
    for _ in 0..4 {
        let n_terms = rng.random_range(1..=4);
        let mut entries = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            let idx: Vec<u32> = (0..dim).map(|_| rng.random_range(0..=per_axis)).collect();
            let c = rand_rational(rng, 6, 3);
            entries.push((MultiIndex::from_slice(&idx), c));
        }
        let f = XSeries::from_entries(dim, cap, (), entries).expect("degrees below cap");
        if !f.is_zero() {
            return f;
        }
    }
    XSeries::constant(dim, cap, (), Rational::from(1))
}

fn rand_env(rng: &mut ChaCha8Rng) -> TrialEnv {
    let dim = rng.random_range(1usize..=2);
    let mut s = Vec::with_capacity(dim);
    let mut moments = Vec::with_capacity(dim);
    for _ in 0..dim {
        let sd: u32 = rng.random_range(1..=3);
        // Mostly gamma kind; sometimes a ratio table with a scaled ratio,
        // exercising regularity constants away from the gamma values.
        let m = if sd == 1 && rng.random_bool(0.25) {
            let c = [Rational::from((1, 2)), Rational::from(2), Rational::from(3)]
                [rng.random_range(0..3usize)]
            .clone();
            let ratios: Vec<Rational> =
                (0..32u32).map(|j| Rational::from(&c * (j + 1))).collect();
            MomentSequence::ratio_table(Rational::from(1), ratios).expect("inside envelope")
        } else {
            MomentSequence::gamma(Rational::from(sd)).expect("positive order")
        };
        s.push(Rational::from(sd));
        moments.push(Arc::new(m));
    }
    let r = rand_radius(rng);
    let alpha = rand_alpha(rng, dim, true);
    let params = NormParams::new(alpha, r.clone(), s.clone(), dim).expect("valid by construction");
    TrialEnv { dim, s, moments, r, params }
}

fn record_failure(report: &mut PropertyReport, witness: String) {
    report.failures += 1;
    if report.witness.is_none() {
        report.witness = Some(witness);
    }
}

/// Smallest exact epsilon > 0 with rho (1+eps)^g < r, seeded from the
/// float solution of the equality.
fn sup_epsilon(r: &Rational, rho: &Rational, g: u32) -> Rational {
    if g == 0 {
        return Rational::from(r - rho) / (Rational::from(2) * rho);
    }
    let ratio = r.to_f64() / rho.to_f64();
    let guess = (ratio.powf(1.0 / g as f64) - 1.0) / 2.0;
    let mut eps = Rational::from_f64(guess.max(1e-9)).unwrap_or_else(|| Rational::from((1, 1024)));
    loop {
        let grown = rho.clone() * Rational::from(1 + eps.clone()).pow(g as i32);
        if eps > 0 && grown < *r {
            return eps;
        }
        eps /= 2;
    }
}

fn poly_desc(f: &XSeries<Rational>) -> String {
    let terms: Vec<String> =
        f.iter().map(|(idx, c)| format!("{c} x^{idx}")).collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

/// Run `trials` randomized exact trials of each norm inequality.
/// The same seed always reproduces the same trial stream.
pub fn check_norm_properties(seed: u64, trials: u32) -> Result<NormSuiteReport, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = [
        "product submultiplicativity",
        "index shift",
        "moment derivative bound",
        "sup bound on a smaller polydisc",
        "binomial convolution identity",
        "gevrey norm chain",
    ];
    let mut reports: Vec<PropertyReport> = names
        .iter()
        .map(|n| PropertyReport { name: n.to_string(), trials, failures: 0, witness: None })
        .collect();

    for _ in 0..trials {
        let env = rand_env(&mut rng);
        let dim = env.dim;
        let cap = 24u32;
        let f = rand_poly(&mut rng, dim, cap);
        let g = rand_poly(&mut rng, dim, cap);

        // Product: |fg|_{alpha+beta} <= |f|_alpha |g|_beta.
        {
            let beta = rand_alpha(&mut rng, dim, true);
            let p_a = &env.params;
            let p_b = p_a.with_alpha(beta.clone())?;
            let p_ab = p_a.with_alpha(p_a.alpha().add(&beta))?;
            let lhs = nagumo_norm(&f.mul(&g), &p_ab)?;
            let rhs = nagumo_norm(&f, p_a)?.mul(&nagumo_norm(&g, &p_b)?);
            if !leq_with_slack(&lhs, &rhs) {
                record_failure(
                    &mut reports[0],
                    format!(
                        "r={} s={:?} alpha={} beta={} f={} g={} lhs={lhs} rhs={rhs}",
                        env.r,
                        env.s,
                        p_a.alpha(),
                        beta,
                        poly_desc(&f),
                        poly_desc(&g),
                    ),
                );
            }
        }

        // Index shift: |f|_{alpha+beta} <= r^{lambda(beta)} |f|_alpha.
        {
            let beta = rand_alpha(&mut rng, dim, false);
            let p_a = &env.params;
            let p_ab = p_a.with_alpha(p_a.alpha().add(&beta))?;
            let lhs = nagumo_norm(&f, &p_ab)?;
            let lam = beta.lambda();
            let factor: Rational = pow_rat_scalar::<Rational>((), &env.r, &lam)?;
            let rhs = nagumo_norm(&f, p_a)?.mul(&factor);
            if !leq_with_slack(&lhs, &rhs) {
                record_failure(
                    &mut reports[1],
                    format!(
                        "r={} s={:?} alpha={} beta={} f={} lhs={lhs} rhs={rhs}",
                        env.r,
                        env.s,
                        p_a.alpha(),
                        beta,
                        poly_desc(&f),
                    ),
                );
            }
        }

        // Moment derivative: |d^q f|_{alpha+q} <= prod_d A_d^{q_d}
        // (q_d! binom(alpha_d+q_d-1, q_d))^{s_d} |f|_alpha.
        {
            let alpha = rand_alpha(&mut rng, dim, false);
            let p_a = env.params.with_alpha(alpha.clone())?;
            let mut qv: Vec<u32> = (0..dim).map(|_| rng.random_range(0..=2)).collect();
            if qv.iter().all(|&x| x == 0) {
                qv[0] = 1;
            }
            let q = MultiIndex::from_slice(&qv);
            let df = f.moment_dx_multi(&q, &env.moments)?;
            let p_aq = env.params.with_alpha(alpha.add_index(&q)?)?;
            let lhs = nagumo_norm(&df, &p_aq)?;
            let mut bound = nagumo_norm(&f, &p_a)?;
            let comps = match &alpha {
                AlphaIndex::Pos(v) => v,
                AlphaIndex::Zero => unreachable!("sampled without zero"),
            };
            for d in 0..dim {
                let qd = q.get(d);
                if qd == 0 {
                    continue;
                }
                // Valid through index 24, past every degree the trial
                // polynomials can reach.
                let (_, upper) = env.moments[d].regularity_bounds_exact(24)?;
                let sd = env.s[d].numer().to_i32().expect("small weight");
                let top = Rational::from(&comps[d] + qd) - 1u32;
                let gamma_quot =
                    (Exact::factorial((), qd) * binom_rat(&top, qd)).pow(sd);
                bound = bound.mul(&(upper.pow(qd as i32) * gamma_quot));
            }
            if !leq_with_slack(&lhs, &bound) {
                record_failure(
                    &mut reports[2],
                    format!(
                        "r={} s={:?} alpha={alpha} q={q} f={} lhs={lhs} bound={bound}",
                        env.r,
                        env.s,
                        poly_desc(&f),
                    ),
                );
            }
        }

        // Sup bound: max over a rational grid in [-rho, rho]^N of |f|
        // is at most A^{lambda(alpha)} |f|_alpha.
        {
            let p_a = &env.params;
            let den = rng.random_range(3u32..=6);
            let num = rng.random_range(1u32..den);
            let rho = Rational::from((num, den)) * &env.r;
            let lam_s = p_a.lambda_s();
            let g_exp = Rational::from(&lam_s - dim as u32);
            debug_assert!(g_exp.is_integer() && g_exp >= 0);
            let g_exp = g_exp.numer().to_u32().expect("small weight sum");
            let eps = sup_epsilon(&env.r, &rho, g_exp);
            let s_hat = p_a.s_max().numer().to_i32().expect("integer weight");
            let grown = rho.clone() * Rational::from(1 + eps.clone()).pow(g_exp as i32);
            let a_const = (Rational::from(1) + &eps) / &eps;
            let a_const = a_const.pow(s_hat) / Rational::from(&env.r - &grown);
            let lam_a = p_a.alpha().lambda();
            debug_assert!(lam_a.is_integer());
            let bound_factor = a_const.pow(lam_a.numer().to_i32().expect("small lambda"));
            let bound = nagumo_norm(&f, p_a)?.mul(&bound_factor);
            let mut worst = Rational::new();
            let pts_per_axis = 32u32;
            let mut grid_idx = vec![0u32; dim];
            loop {
                let point: Vec<Rational> = grid_idx
                    .iter()
                    .map(|&k| Rational::from((2 * k as i64 - 31, 31)) * &rho)
                    .collect();
                let val = f.eval(&point).abs();
                if val > worst {
                    worst = val;
                }
                let mut d = 0;
                loop {
                    if d == dim {
                        break;
                    }
                    grid_idx[d] += 1;
                    if grid_idx[d] < pts_per_axis {
                        break;
                    }
                    grid_idx[d] = 0;
                    d += 1;
                }
                if d == dim {
                    break;
                }
            }
            if !(worst <= bound) {
                record_failure(
                    &mut reports[3],
                    format!(
                        "r={} rho={rho} s={:?} alpha={} f={} sup>={worst} bound={bound}",
                        env.r,
                        env.s,
                        p_a.alpha(),
                        poly_desc(&f),
                    ),
                );
            }
        }

        // Vandermonde convolution:
        // sum_k binom(a+k-1,k) binom(b+j-k-1,j-k) = binom(a+b+j-1,j).
        {
            let a = Rational::from((rng.random_range(2u32..=8), 2));
            let b = Rational::from((rng.random_range(2u32..=8), 2));
            let j = rng.random_range(0u32..=10);
            let mut lhs = Rational::new();
            for k in 0..=j {
                let ta = Rational::from(&a + k) - 1u32;
                let tb = Rational::from(&b + (j - k)) - 1u32;
                lhs += binom_rat(&ta, k) * binom_rat(&tb, j - k);
            }
            let tab = Rational::from(&a + &b) + j - 1u32;
            let rhs = binom_rat(&tab, j);
            if lhs != rhs {
                record_failure(
                    &mut reports[4],
                    format!("a={a} b={b} j={j} lhs={lhs} rhs={rhs}"),
                );
            }
        }

        // Gevrey norm chain: with R_j = |K^j Gamma(1+sigma j) g|_{j alpha} /
        // Gamma(1+sigma j), each step obeys R_{j+1} <= K r^{lambda(alpha)} R_j.
        {
            let alpha = rand_alpha(&mut rng, dim, false);
            let sigma = rng.random_range(0u32..=2);
            let k_rat = Rational::from((rng.random_range(1u32..=4), rng.random_range(1u32..=2)));
            let lam = alpha.lambda();
            let step: Rational = pow_rat_scalar::<Rational>((), &env.r, &lam)?;
            let step = step * &k_rat;
            let mut prev: Option<Rational> = None;
            let mut chain_ok = true;
            for j in 0..=4u32 {
                let gamma_j = Exact::factorial((), sigma * j);
                let kj = k_rat.clone().pow(j as i32);
                let fj = g.scale(&Rational::from(&kj * &gamma_j));
                let p_j = env.params.with_alpha(alpha.scale(j))?;
                let r_j = nagumo_norm(&fj, &p_j)? / &gamma_j;
                if let Some(prev) = &prev {
                    if r_j > Rational::from(&step * prev) {
                        chain_ok = false;
                    }
                }
                prev = Some(r_j);
            }
            if !chain_ok {
                record_failure(
                    &mut reports[5],
                    format!(
                        "r={} s={:?} alpha={alpha} sigma={sigma} K={k_rat} g={}",
                        env.r,
                        env.s,
                        poly_desc(&g),
                    ),
                );
            }
        }
    }

    let all_passed = reports.iter().all(|r| r.failures == 0);
    Ok(NormSuiteReport { seed, trials_per_property: trials, properties: reports, all_passed })
}

// ---------------------------------------------------------------------------
// Sharpness of the weight hypothesis
// ---------------------------------------------------------------------------

/// Exact certificate that product submultiplicativity fails for a
/// weight below 1: both sides are reported squared so that half-integer
/// weights stay inside rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpnessWitness {
    pub r: Rational,
    /// Doubled weights: the norm weight on axis d is s_doubled[d] / 2.
    pub s_doubled: Vec<u32>,
    pub alpha: AlphaIndex,
    pub beta: AlphaIndex,
    pub f_desc: String,
    pub g_desc: String,
    pub lhs_sq: Rational,
    pub rhs_sq: Rational,
}

/// Search for a violation of |fg|_{alpha+beta} <= |f|_alpha |g|_beta
/// with weight 1/2. The first candidate is the known sharp family
/// f = g = 1 + x at r = 3/4; randomized candidates follow.
pub fn product_sharpness_below_one(seed: u64, max_trials: u32) -> Option<SharpnessWitness> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = AlphaIndex::uniform(1, Rational::from(1));
    let mut candidates: Vec<(XSeries<Rational>, XSeries<Rational>, Rational)> = Vec::new();
    let base = XSeries::from_entries(
        1,
        8,
        (),
        [
            (MultiIndex::from_slice(&[0]), Rational::from(1)),
            (MultiIndex::from_slice(&[1]), Rational::from(1)),
        ],
    )
    .expect("small degrees");
    candidates.push((base.clone(), base, Rational::from((3, 4))));
    for _ in 0..max_trials {
        let f = rand_poly(&mut rng, 1, 8);
        let g = rand_poly(&mut rng, 1, 8);
        candidates.push((f, g, rand_radius(&mut rng)));
    }
    for (f, g, r) in candidates {
        let s_doubled = vec![1u32];
        let lhs_sq = norm_sq_unchecked(&f.mul(&g), &one.add(&one), &r, &s_doubled);
        let rhs_sq = norm_sq_unchecked(&f, &one, &r, &s_doubled)
            * norm_sq_unchecked(&g, &one, &r, &s_doubled);
        if lhs_sq > rhs_sq {
            return Some(SharpnessWitness {
                r,
                s_doubled,
                alpha: one.clone(),
                beta: one.clone(),
                f_desc: poly_desc(&f),
                g_desc: poly_desc(&g),
                lhs_sq,
                rhs_sq,
            });
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Gevrey order estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct GevreyEstimate {
    pub sigma_hat: f64,
    /// Fitted window lo..=hi in the t-index.
    pub window: (u32, u32),
    /// Root mean square residual of the fit.
    pub residual: f64,
    pub rho: Rational,
    /// Usable points (j, ln M_j) that entered the fit.
    pub points: Vec<(u32, f64)>,
    /// True when every entry in the window vanished, so no growth rate
    /// is observable and sigma_hat is reported as 0 by convention.
    pub degenerate: bool,
}

/// Solve the 3x3 normal equations for y ~ c0 + c1 j + c2 (j ln j).
fn fit_growth(points: &[(u32, f64)]) -> (f64, f64, f64) {
    let mut m = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for &(j, y) in points {
        let x = [1.0, j as f64, j as f64 * (j as f64).ln().max(0.0)];
        for (row, &xr) in x.iter().enumerate() {
            for (col, &xc) in x.iter().enumerate() {
                m[row][col] += xr * xc;
            }
            b[row] += xr * y;
        }
    }
    let det3 = |a: [[f64; 3]; 3]| -> f64 {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det3(m);
    let mut coeffs = [0.0f64; 3];
    for k in 0..3 {
        let mut mk = m;
        for row in 0..3 {
            mk[row][k] = b[row];
        }
        coeffs[k] = det3(mk) / d;
    }
    (coeffs[0], coeffs[1], coeffs[2])
}

/// Estimate the Gevrey order of a t-series from the growth of
/// ln(sup-majorant of the entry at radius rho / m_0(j)) against
/// {1, j, j ln j}; the j ln j coefficient is the order estimate,
/// clamped at zero.
pub fn estimate_gevrey<C: Scalar>(
    u: &TSeries<C>,
    rho: &Rational,
    window: Option<(u32, u32)>,
) -> Result<GevreyEstimate, AnalysisError> {
    let t_order = u.t_order();
    if t_order < 12 {
        return Err(AnalysisError::SeriesTooShort { t_order });
    }
    let (lo, hi) = window.unwrap_or(((t_order / 2) as u32, t_order as u32));
    if lo > hi || (hi as usize) > t_order {
        return Err(AnalysisError::InvalidWindow { lo, hi, t_order });
    }
    let m0 = u.m0().clone();
    let mut points = Vec::new();
    let mut saw_nonzero = false;
    for j in lo..=hi {
        let entry = u.entry(j as usize);
        if entry.is_zero() {
            continue;
        }
        saw_nonzero = true;
        let sup = entry.sup_majorant(rho);
        if let Some(ln_sup) = sup.ln_f64() {
            let y = ln_sup - m0.value_log_f64(j as usize)?;
            points.push((j, y));
        }
    }
    if !saw_nonzero {
        return Ok(GevreyEstimate {
            sigma_hat: 0.0,
            window: (lo, hi),
            residual: 0.0,
            rho: rho.clone(),
            points,
            degenerate: true,
        });
    }
    if points.len() < 4 {
        return Err(AnalysisError::FewerThanFourPoints { available: points.len() });
    }
    let (c0, c1, c2) = fit_growth(&points);
    let mut ss = 0.0;
    for &(j, y) in &points {
        let x = j as f64;
        let yhat = c0 + c1 * x + c2 * x * x.ln().max(0.0);
        ss += (y - yhat) * (y - yhat);
    }
    let residual = (ss / points.len() as f64).sqrt();
    Ok(GevreyEstimate {
        sigma_hat: c2.max(0.0),
        window: (lo, hi),
        residual,
        rho: rho.clone(),
        points,
        degenerate: false,
    })
}

// ---------------------------------------------------------------------------
// Lower-bound diagnostics
// ---------------------------------------------------------------------------

/// Data of the distinguished term driving the sharpness construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KstarData {
    pub i_star: u32,
    pub v_star: u32,
    pub q_star: MultiIndex,
    /// Orders (s_0, s_1, ..., s_N) of the moment sequences.
    pub s_orders: Vec<Rational>,
}

impl KstarData {
    /// Stride of the t-indices hit by iterating the distinguished term:
    /// jhat(j) = j (v* + kappa - i*) + i*.
    pub fn jhat(&self, kappa: u32, j: u32) -> u32 {
        j * (self.v_star + kappa - self.i_star) + self.i_star
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub sigma_prime: f64,
    pub detected: bool,
    /// First t-step index j (not jhat) in the probe half exceeding the
    /// affine envelope fitted on the first half.
    pub first_violation_j: Option<u32>,
    /// Largest excess over the envelope in the probe half.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    /// Certified affine lower envelope: L_j >= slope * j + intercept on
    /// the window, with slope the minimal increment and the intercept
    /// attained at some j.
    pub slope: f64,
    pub intercept: f64,
    /// Points (j, L_j) of the factorial-normalized log values.
    pub points: Vec<(u32, f64)>,
    pub window: (u32, u32),
    pub violations: Vec<ViolationReport>,
}

fn ln_factorial(n: u32) -> f64 {
    let mut acc = 0.0f64;
    for k in 2..=n as u64 {
        acc += (k as f64).ln();
    }
    acc
}

fn ln_gamma_one_plus(z: f64) -> f64 {
    // ln Gamma(1+z) via Stirling with four correction terms, accurate
    // well below 1e-9 once the argument is lifted above 8 through
    // Gamma(1+z) = Gamma(2+z) / (1+z).
    let mut lifted = 0.0f64;
    let mut z = z;
    while z < 8.0 {
        z += 1.0;
        lifted += z.ln();
    }
    let w = z + 1.0;
    let inv = 1.0 / w;
    let series = inv / 12.0 - inv.powi(3) / 360.0 + inv.powi(5) / 1260.0 - inv.powi(7) / 1680.0;
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - lifted
}

/// Evaluate the entries of a t-series at x = 0, as logs; errors when a
/// required value is zero or negative.
fn entry_logs_at_zero<C: Scalar>(
    u: &TSeries<C>,
    indices: &[u32],
) -> Result<Vec<f64>, AnalysisError> {
    let zero = MultiIndex::zero(u.dim());
    let mut out = Vec::with_capacity(indices.len());
    for &j in indices {
        let v = u.entry(j as usize).get(&zero);
        match v.ln_f64() {
            Some(l) => out.push(l),
            None => return Err(AnalysisError::ValueNotPositive { j }),
        }
    }
    Ok(out)
}

/// Check the factorial-type lower bound along the distinguished
/// subsequence and probe Gevrey orders sigma' for violations.
///
/// L_j = ln u_{jhat(j)}(0) - s_0 ln((j v*)!) - sum_d s_d ln((j q*_d)!)
/// must stay bounded below by an affine function of j; each sigma'
/// below the critical value should be rejected: an affine envelope of
/// D_j = ln u_{jhat}(0) - ln Gamma(1+sigma' jhat) - ln m_0(jhat), fitted
/// on the first half of the window, is exceeded in the second half.
pub fn check_lower_bound<C: Scalar>(
    u: &TSeries<C>,
    kappa: u32,
    kstar: &KstarData,
    sigma_primes: &[Rational],
    window: Option<(u32, u32)>,
) -> Result<LowerBoundReport, AnalysisError> {
    let t_order = u.t_order() as u32;
    let max_j = (1..)
        .take_while(|&j| kstar.jhat(kappa, j) <= t_order)
        .last()
        .unwrap_or(0);
    // By default fit and probe over the upper half of the reachable
    // steps, away from the small-index transient.
    let (lo, hi) = window.unwrap_or(((max_j / 2).max(1), max_j));
    if lo > hi || kstar.jhat(kappa, hi) > t_order || lo == 0 {
        return Err(AnalysisError::InvalidWindow { lo, hi, t_order: t_order as usize });
    }
    let js: Vec<u32> = (lo..=hi).collect();
    if js.len() < 2 {
        return Err(AnalysisError::FewerThanTwoPoints { available: js.len() });
    }
    let jhats: Vec<u32> = js.iter().map(|&j| kstar.jhat(kappa, j)).collect();
    let logs = entry_logs_at_zero(u, &jhats)?;

    let s0 = kstar.s_orders[0].to_f64();
    let sx: Vec<f64> = kstar.s_orders[1..].iter().map(|s| s.to_f64()).collect();
    let mut points = Vec::with_capacity(js.len());
    for (k, &j) in js.iter().enumerate() {
        let mut l = logs[k] - s0 * ln_factorial(j * kstar.v_star);
        for (d, sd) in sx.iter().enumerate() {
            l -= sd * ln_factorial(j * kstar.q_star.get(d));
        }
        if !l.is_finite() {
            return Err(AnalysisError::ValueNotPositive { j });
        }
        points.push((j, l));
    }
    let slope = points
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::INFINITY, f64::min);
    let intercept = points
        .iter()
        .map(|&(j, l)| l - slope * j as f64)
        .fold(f64::INFINITY, f64::min);

    // Per-order probes.
    let m0 = u.m0().clone();
    let mut m0_logs = Vec::with_capacity(jhats.len());
    for &jh in &jhats {
        m0_logs.push(m0.value_log_f64(jh as usize)?);
    }
    let mut violations = Vec::with_capacity(sigma_primes.len());
    let mid = js.len() / 2;
    for sp in sigma_primes {
        let spf = sp.to_f64();
        let d_vals: Vec<(u32, u32, f64)> = js
            .iter()
            .zip(&jhats)
            .zip(logs.iter().zip(&m0_logs))
            .map(|((&j, &jh), (&lu, &lm))| {
                let d = lu - ln_gamma_one_plus(spf * jh as f64) - lm;
                (j, jh, d)
            })
            .collect();
        // Affine fit a + b jhat on the first half, in the least squares
        // sense, then shift up so it dominates every first-half point.
        let head = &d_vals[..mid];
        let n = head.len() as f64;
        let sx1: f64 = head.iter().map(|&(_, jh, _)| jh as f64).sum();
        let sy: f64 = head.iter().map(|&(_, _, d)| d).sum();
        let sxx: f64 = head.iter().map(|&(_, jh, _)| (jh as f64) * (jh as f64)).sum();
        let sxy: f64 = head.iter().map(|&(_, jh, d)| jh as f64 * d).sum();
        let denom = n * sxx - sx1 * sx1;
        let b = (n * sxy - sx1 * sy) / denom;
        let mut a = (sy - b * sx1) / n;
        let max_resid = head
            .iter()
            .map(|&(_, jh, d)| d - (a + b * jh as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        a += max_resid;
        let mut first = None;
        let mut margin = f64::NEG_INFINITY;
        for &(j, jh, d) in &d_vals[mid..] {
            let excess = d - (a + b * jh as f64);
            if excess > margin {
                margin = excess;
            }
            if excess > 0.0 && first.is_none() {
                first = Some(j);
            }
        }
        violations.push(ViolationReport {
            sigma_prime: spf,
            detected: first.is_some(),
            first_violation_j: first,
            margin,
        });
    }

    Ok(LowerBoundReport { slope, intercept, points, window: (lo, hi), violations })
}
