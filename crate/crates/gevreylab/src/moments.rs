//! Moment sequences m(j) and moment-derivative weights.
//!
//! A moment sequence of order s > 0 satisfies m(0) = 1 and the regularity
//! bounds
//!
//! ```text
//! a * (j+1)^s <= m(j+1)/m(j) <= A * (j+1)^s      for all j >= 0
//! ```
//!
//! for some constants 0 < a <= A. Two kinds are supported:
//! * `gamma(s)`: m(j) = Gamma(1 + s j), the model family (s = 1 gives j!),
//! * `ratio`: a finite user table of consecutive ratios m(j+1)/m(j),
//!   validated against the same analytic envelope as the gamma family.
//!
//! The analytic envelope for the gamma family is
//!
//! ```text
//! e^(-s-1) s^s <= ratio(j) / (j+1)^s <= (1 + 1/s)^s e s^s,
//! ```
//!
//! which pins the regularity constants a, A used by derivative bounds and by
//! the default choice of the extremal initial datum.
//!
//! Values are served in three forms: exact rationals (gamma with integer s,
//! or ratio tables), high-precision logs (any kind; 192-bit working
//! precision so that adjacent differences recover ratios to well below
//! 2^-40 relative error), and mode scalars via [`Scalar`].

use std::fmt;
use std::sync::Mutex;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use thiserror::Error;

use crate::scalar::Scalar;

/// Working precision for log-domain moment values. Partial sums of log
/// ratios reach ~3e5 by j = 1e4; 192 bits leaves ~2^-173 relative error,
/// far below the 2^-40 budget on adjacent differences.
const LOG_PREC: u32 = 192;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentError {
    #[error("moment order must be positive, got {order}")]
    NonPositiveOrder { order: String },
    #[error("ratio table entry {index} is not positive")]
    NonPositiveRatio { index: usize },
    #[error("ratio table entry {index} violates the order-{order} regularity envelope")]
    NonRegularRatio { index: usize, order: String },
    #[error("ratio table exhausted: need index {index}, table has {len} entries")]
    TableExhausted { index: usize, len: usize },
    #[error("multinomial parts sum to {got}, expected {expected}")]
    MultinomialPartsMismatch { got: u64, expected: u64 },
    #[error("exact values unavailable: {reason}")]
    ExactUnavailable { reason: String },
    #[error(transparent)]
    Scalar(#[from] crate::scalar::ScalarError),
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// m(j) = Gamma(1 + s j).
    Gamma,
    /// Explicit consecutive ratios; m(j) = prod_{k<j} table[k].
    Ratio(Vec<Rational>),
}

/// A moment sequence with memoized exact values and high-precision logs.
///
/// Equality compares kind and order (and the table for ratio kind); caches
/// are excluded.
#[derive(Debug)]
pub struct MomentSequence {
    kind: Kind,
    order: Rational,
    /// log m(j) partial sums at LOG_PREC; logs[0] = 0.
    logs: Mutex<Vec<Float>>,
    /// m(j) prefix products; only for exact kinds (integer-s gamma, ratio).
    exact: Option<Mutex<Vec<Rational>>>,
}

impl PartialEq for MomentSequence {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.order == other.order
    }
}

impl Clone for MomentSequence {
    fn clone(&self) -> Self {
        MomentSequence::with_kind(self.kind.clone(), self.order.clone())
    }
}

impl fmt::Display for MomentSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Gamma => write!(f, "gamma({})", self.order),
            Kind::Ratio(t) => write!(f, "ratio(s={}, {} entries)", self.order, t.len()),
        }
    }
}

/// Analytic envelope constants (lo, hi) for ratio(j)/(j+1)^s at order s.
pub fn envelope_f64(s: f64) -> (f64, f64) {
    let lo = (-s - 1.0).exp() * s.powf(s);
    let hi = (1.0 + 1.0 / s).powf(s) * std::f64::consts::E * s.powf(s);
    (lo, hi)
}

impl MomentSequence {
    fn with_kind(kind: Kind, order: Rational) -> Self {
        let exact_capable = match &kind {
            Kind::Gamma => order.is_integer(),
            Kind::Ratio(_) => true,
        };
        MomentSequence {
            kind,
            order,
            logs: Mutex::new(vec![Float::with_val(LOG_PREC, 0)]),
            exact: exact_capable.then(|| Mutex::new(vec![Rational::from(1)])),
        }
    }

    /// The gamma family m(j) = Gamma(1 + s j), s > 0 rational.
    pub fn gamma(s: Rational) -> Result<Self, MomentError> {
        if s <= 0 {
            return Err(MomentError::NonPositiveOrder { order: s.to_string() });
        }
        Ok(Self::with_kind(Kind::Gamma, s))
    }

    /// A finite ratio table of declared order s. Each entry is checked
    /// against the order-s analytic envelope; comparison in f64 with a
    /// 1e-12 relative slack band.
    pub fn ratio_table(s: Rational, ratios: Vec<Rational>) -> Result<Self, MomentError> {
        if s <= 0 {
            return Err(MomentError::NonPositiveOrder { order: s.to_string() });
        }
        let sf = s.to_f64();
        let (lo, hi) = envelope_f64(sf);
        for (index, r) in ratios.iter().enumerate() {
            if *r <= 0 {
                return Err(MomentError::NonPositiveRatio { index });
            }
            let scaled = r.to_f64() / ((index as f64) + 1.0).powf(sf);
            if scaled < lo * (1.0 - 1e-12) || scaled > hi * (1.0 + 1e-12) {
                return Err(MomentError::NonRegularRatio { index, order: s.to_string() });
            }
        }
        Ok(Self::with_kind(Kind::Ratio(ratios), s))
    }

    pub fn order(&self) -> &Rational {
        &self.order
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Gamma => "gamma",
            Kind::Ratio(_) => "ratio",
        }
    }

    pub fn ratio_table_entries(&self) -> Option<&[Rational]> {
        match &self.kind {
            Kind::Gamma => None,
            Kind::Ratio(t) => Some(t),
        }
    }

    /// Whether m(j) is an exact rational for every in-range j.
    pub fn is_exact_kind(&self) -> bool {
        self.exact.is_some()
    }

    /// m(j+1)/m(j) as an exact rational. Gamma kind with integer s = n:
    /// ratio(j) = (nj+1)(nj+2)...(nj+n). Errors for non-integer gamma
    /// orders and for out-of-table ratio indices.
    pub fn ratio_exact(&self, j: usize) -> Result<Rational, MomentError> {
        match &self.kind {
            Kind::Gamma => {
                if !self.order.is_integer() {
                    return Err(MomentError::ExactUnavailable {
                        reason: format!("gamma({}) has irrational ratios", self.order),
                    });
                }
                let n = self.order.numer().to_u64().expect("small integer order");
                let base = n * j as u64;
                let mut prod = Integer::from(1);
                for k in 1..=n {
                    prod *= Integer::from(base + k);
                }
                Ok(Rational::from(prod))
            }
            Kind::Ratio(t) => t
                .get(j)
                .cloned()
                .ok_or(MomentError::TableExhausted { index: j, len: t.len() }),
        }
    }

    /// m(j+1)/m(j) in high precision (LOG_PREC bits).
    pub fn ratio_hp(&self, j: usize) -> Result<Float, MomentError> {
        match &self.kind {
            Kind::Gamma if !self.order.is_integer() => {
                // exp(lngamma(1+s(j+1)) - lngamma(1+sj)).
                let s = Float::with_val(LOG_PREC, &self.order);
                let z0 = Float::with_val(LOG_PREC, 1) + &s * Float::with_val(LOG_PREC, j as u64);
                let z1 = Float::with_val(LOG_PREC, &z0 + &s);
                let d = z1.ln_gamma() - z0.ln_gamma();
                Ok(d.exp())
            }
            _ => Ok(Float::with_val(LOG_PREC, &self.ratio_exact(j)?)),
        }
    }

    /// m(j+1)/m(j) as f64.
    pub fn ratio_f64(&self, j: usize) -> Result<f64, MomentError> {
        Ok(self.ratio_hp(j)?.to_f64())
    }

    fn ensure_logs(&self, j: usize) -> Result<(), MomentError> {
        let mut logs = self.logs.lock().expect("logs lock");
        while logs.len() <= j {
            let k = logs.len() - 1;
            let step = match &self.kind {
                Kind::Gamma if !self.order.is_integer() => {
                    let s = Float::with_val(LOG_PREC, &self.order);
                    let z0 = Float::with_val(LOG_PREC, 1)
                        + &s * Float::with_val(LOG_PREC, k as u64);
                    let z1 = Float::with_val(LOG_PREC, &z0 + &s);
                    z1.ln_gamma() - z0.ln_gamma()
                }
                _ => {
                    let r = self.ratio_exact(k)?;
                    Float::with_val(LOG_PREC, &r).ln()
                }
            };
            let next = Float::with_val(LOG_PREC, logs.last().expect("nonempty") + &step);
            logs.push(next);
        }
        Ok(())
    }

    /// log m(j) at LOG_PREC bits.
    pub fn value_log(&self, j: usize) -> Result<Float, MomentError> {
        self.ensure_logs(j)?;
        Ok(self.logs.lock().expect("logs lock")[j].clone())
    }

    pub fn value_log_f64(&self, j: usize) -> Result<f64, MomentError> {
        Ok(self.value_log(j)?.to_f64())
    }

    /// m(j) as an exact rational; errors for non-integer gamma orders.
    pub fn value_exact(&self, j: usize) -> Result<Rational, MomentError> {
        let cell = self.exact.as_ref().ok_or_else(|| MomentError::ExactUnavailable {
            reason: format!("gamma({}) values are irrational", self.order),
        })?;
        let mut vals = cell.lock().expect("exact lock");
        while vals.len() <= j {
            let k = vals.len() - 1;
            let r = self.ratio_exact(k)?;
            let next = Rational::from(vals.last().expect("nonempty") * &r);
            vals.push(next);
        }
        Ok(vals[j].clone())
    }

    /// m(j) as a mode scalar: exact kinds go through the rational cache,
    /// non-integer gamma orders evaluate Gamma directly (float mode only).
    pub fn value_scalar<C: Scalar>(&self, ctx: C::Ctx, j: usize) -> Result<C, MomentError> {
        if self.is_exact_kind() {
            return Ok(C::from_rational(ctx, &self.value_exact(j)?));
        }
        let z = Rational::from(&self.order * Rational::from(j as u64));
        Ok(C::gamma_one_plus(ctx, &z)?)
    }

    /// m(j+1)/m(j) as a mode scalar.
    pub fn ratio_scalar<C: Scalar>(&self, ctx: C::Ctx, j: usize) -> Result<C, MomentError> {
        if self.is_exact_kind() {
            return Ok(C::from_rational(ctx, &self.ratio_exact(j)?));
        }
        let a = self.value_scalar::<C>(ctx, j + 1)?;
        let b = self.value_scalar::<C>(ctx, j)?;
        Ok(a.div(&b))
    }

    /// m(j)/m(k) for k <= j, as a mode scalar. Used for the t^v shift.
    pub fn value_quotient_scalar<C: Scalar>(
        &self,
        ctx: C::Ctx,
        j: usize,
        k: usize,
    ) -> Result<C, MomentError> {
        debug_assert!(k <= j);
        if self.is_exact_kind() {
            let num = self.value_exact(j)?;
            let den = self.value_exact(k)?;
            return Ok(C::from_rational(ctx, &Rational::from(num / den)));
        }
        let a = self.value_scalar::<C>(ctx, j)?;
        let b = self.value_scalar::<C>(ctx, k)?;
        Ok(a.div(&b))
    }

    /// Moment multinomial m(j) / (m(p_1) ... m(p_k)); parts must sum to j.
    pub fn multinomial_scalar<C: Scalar>(
        &self,
        ctx: C::Ctx,
        j: usize,
        parts: &[usize],
    ) -> Result<C, MomentError> {
        let got: u64 = parts.iter().map(|&p| p as u64).sum();
        if got != j as u64 {
            return Err(MomentError::MultinomialPartsMismatch { got, expected: j as u64 });
        }
        let mut out = self.value_scalar::<C>(ctx, j)?;
        for &p in parts {
            let m = self.value_scalar::<C>(ctx, p)?;
            out = out.div(&m);
        }
        Ok(out)
    }

    /// Regularity constants (a, A) valid for ratios up to index j_max:
    /// a = min_j ratio(j)/(j+1)^s, A = max_j ratio(j)/(j+1)^s, as f64.
    pub fn regularity_bounds_f64(&self, j_max: usize) -> Result<(f64, f64), MomentError> {
        let s = self.order.to_f64();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..=j_max {
            let scaled = self.ratio_f64(j)? / ((j as f64) + 1.0).powf(s);
            lo = lo.min(scaled);
            hi = hi.max(scaled);
        }
        Ok((lo, hi))
    }

    /// Exact regularity constants for integer-order exact kinds:
    /// requires ratio(j)/(j+1)^s rational, i.e. integer s.
    pub fn regularity_bounds_exact(
        &self,
        j_max: usize,
    ) -> Result<(Rational, Rational), MomentError> {
        if !self.order.is_integer() {
            return Err(MomentError::ExactUnavailable {
                reason: format!("order {} is not an integer", self.order),
            });
        }
        let s = self.order.numer().to_i32().expect("small order");
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for j in 0..=j_max {
            let denom = Rational::from((j as u64) + 1).pow(s);
            let scaled = self.ratio_exact(j)? / denom;
            if lo.as_ref().is_none_or(|v| scaled < *v) {
                lo = Some(scaled.clone());
            }
            if hi.as_ref().is_none_or(|v| scaled > *v) {
                hi = Some(scaled);
            }
        }
        Ok((lo.expect("j_max >= 0"), hi.expect("j_max >= 0")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn gamma(n: i64) -> MomentSequence {
        MomentSequence::gamma(Rational::from(n)).unwrap()
    }

    fn gamma_r(n: i64, d: i64) -> MomentSequence {
        MomentSequence::gamma(Rational::from((n, d))).unwrap()
    }

    #[test]
    fn gamma2_values() {
        // m(j) = (2j)!: 1, 2, 24, 720.
        let m = gamma(2);
        assert_eq!(m.value_exact(0).unwrap(), Rational::from(1));
        assert_eq!(m.value_exact(1).unwrap(), Rational::from(2));
        assert_eq!(m.value_exact(2).unwrap(), Rational::from(24));
        assert_eq!(m.value_exact(3).unwrap(), Rational::from(720));
    }

    #[test]
    fn gamma2_ratio() {
        // ratio(3) = m(4)/m(3) = 8!/6! = 56.
        let m = gamma(2);
        assert_eq!(m.ratio_exact(3).unwrap(), Rational::from(56));
    }

    #[test]
    fn gamma1_is_factorial() {
        let m = gamma(1);
        assert_eq!(m.value_exact(5).unwrap(), Rational::from(120));
        assert_eq!(m.ratio_exact(4).unwrap(), Rational::from(5));
    }

    #[test]
    fn multinomial_gamma2() {
        // m(3)/(m(1) m(1) m(1)) = 720/8 = 90; m(2)/(m(1)m(1)) = 24/4 = 6.
        let m = gamma(2);
        let w: Rational = m.multinomial_scalar((), 2, &[1, 1]).unwrap();
        assert_eq!(w, Rational::from(6));
        let w3: Rational = m.multinomial_scalar((), 3, &[1, 1, 1]).unwrap();
        assert_eq!(w3, Rational::from(90));
        assert!(matches!(
            m.multinomial_scalar::<Rational>((), 3, &[1, 1]),
            Err(MomentError::MultinomialPartsMismatch { got: 2, expected: 3 })
        ));
    }

    #[test]
    fn value_log_matches_exact() {
        let m = gamma(2);
        for j in [1usize, 5, 17] {
            let lg = m.value_log(j).unwrap().to_f64();
            let exact = Scalar::ln_f64(&m.value_exact(j).unwrap()).unwrap();
            assert!((lg - exact).abs() < 1e-12 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn value_log_differences_recover_ratio_tightly() {
        // Half-integer order: logs come from lngamma differences.
        let m = gamma_r(3, 2);
        for j in [0usize, 3, 50, 500] {
            let d = (m.value_log(j + 1).unwrap() - m.value_log(j).unwrap()).exp();
            let r = m.ratio_hp(j).unwrap();
            let rel = (Float::with_val(LOG_PREC, &d - &r) / &r).abs().to_f64();
            assert!(rel < 2f64.powi(-60), "rel err {rel} at j={j}");
        }
    }

    #[test]
    fn non_integer_gamma_has_no_exact_values() {
        let m = gamma_r(1, 2);
        assert!(!m.is_exact_kind());
        assert!(m.value_exact(1).is_err());
        // Float route works: m(1) = Gamma(3/2) = sqrt(pi)/2.
        let v: Float = m.value_scalar(128, 1).unwrap();
        assert!((v.to_f64() - 0.8862269254527580).abs() < 1e-15);
    }

    #[test]
    fn ratio_table_accepts_factorial_prefix() {
        // j! ratios: 1, 2, 3, 4, 5 at order 1.
        let t: Vec<Rational> = (1..=5).map(Rational::from).collect();
        let m = MomentSequence::ratio_table(Rational::from(1), t).unwrap();
        assert_eq!(m.value_exact(3).unwrap(), Rational::from(6));
        assert!(matches!(
            m.ratio_exact(5),
            Err(MomentError::TableExhausted { index: 5, len: 5 })
        ));
    }

    #[test]
    fn ratio_table_rejects_envelope_violation() {
        // Entry 1000x above the order-1 envelope cap.
        let t = vec![Rational::from(1), Rational::from(20000)];
        assert!(matches!(
            MomentSequence::ratio_table(Rational::from(1), t),
            Err(MomentError::NonRegularRatio { index: 1, .. })
        ));
    }

    #[test]
    fn ratio_table_rejects_nonpositive() {
        let t = vec![Rational::from(1), Rational::from(0)];
        assert!(matches!(
            MomentSequence::ratio_table(Rational::from(1), t),
            Err(MomentError::NonPositiveRatio { index: 1 })
        ));
    }

    #[test]
    fn gamma_envelope_holds_along_family() {
        // ratio(j)/(j+1)^s stays in the analytic envelope for the gamma kind.
        for (n, d) in [(1i64, 1i64), (3, 2), (2, 1), (3, 1)] {
            let m = gamma_r(n, d);
            let s = (n as f64) / (d as f64);
            let (lo, hi) = envelope_f64(s);
            for j in (0..10_000).step_by(97) {
                let scaled = m.ratio_f64(j).unwrap() / ((j as f64) + 1.0).powf(s);
                assert!(scaled >= lo * (1.0 - 1e-12), "s={s} j={j} scaled={scaled} lo={lo}");
                assert!(scaled <= hi * (1.0 + 1e-12), "s={s} j={j} scaled={scaled} hi={hi}");
            }
        }
    }

    #[test]
    fn regularity_sandwich() {
        // a^j (j!)^s <= m(j) <= A^j (j!)^s from the computed constants.
        for (n, d) in [(1i64, 1i64), (2, 1)] {
            let m = gamma_r(n, d);
            let s = m.order().numer().to_i32().unwrap();
            let (a, big_a) = m.regularity_bounds_exact(40).unwrap();
            for j in 0..=40usize {
                let fact_s = Rational::from(Integer::from(Integer::factorial(j as u32))).pow(s);
                let v = m.value_exact(j).unwrap();
                let lo = Rational::from(a.clone().pow(j as i32)) * fact_s.clone();
                let hi = Rational::from(big_a.clone().pow(j as i32)) * fact_s;
                assert!(lo <= v && v <= hi, "sandwich fails at j={j}");
            }
        }
    }

    #[test]
    fn gamma1_regularity_constants_are_one() {
        let m = gamma(1);
        let (a, big_a) = m.regularity_bounds_exact(100).unwrap();
        assert_eq!(a, Rational::from(1));
        assert_eq!(big_a, Rational::from(1));
    }

    #[test]
    fn quotient_scalar() {
        let m = gamma(1);
        let q: Rational = m.value_quotient_scalar((), 5, 2).unwrap();
        assert_eq!(q, Rational::from(60)); // 120/2
    }
}
