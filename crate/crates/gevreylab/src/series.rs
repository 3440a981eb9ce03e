//! Truncated formal power series in the space variables and in t.
//!
//! [`XSeries`] is a polynomial in x_1..x_N truncated by *total* degree: the
//! `cap` field records the largest total degree up to which the coefficients
//! are trusted. Arithmetic propagates caps (`min` of the operands); the
//! moment x-derivative lowers the cap by one per application because the
//! dropped degree-(cap+1) coefficients would have contributed.
//!
//! [`TSeries`] is a finite t-expansion in the *normalized* basis
//! t^j / m_0(j): entry j stores the x-coefficient of that basis element.
//! Products therefore carry moment multinomial weights
//! m_0(j) / (m_0(a) m_0(b)), a + b = j, and the moment t-derivative is a
//! plain index shift.
//!
//! Equality of `XSeries` compares dimensions and nonzero coefficients only;
//! caps are bookkeeping, not data.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::moments::{MomentError, MomentSequence};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("multi-index has {got} axes, series has {expected}")]
    DimMismatch { got: usize, expected: usize },
    #[error("entry of total degree {degree} exceeds cap {cap}")]
    DegreeAboveCap { degree: u64, cap: u32 },
    #[error("derivative needs cap >= 1, series has cap 0")]
    CapUnderflow,
    #[error("t-derivative of order {order} exceeds stored t-order {t_order}")]
    OrderUnderflow { order: usize, t_order: usize },
    #[error(transparent)]
    Moment(#[from] MomentError),
}

/// Exponent vector (j_1, ..., j_N). Ordered by total degree, then
/// lexicographically; this makes serialized coefficient lists
/// degree-sorted and deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Box<[u32]>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim].into_boxed_slice())
    }

    /// Unit vector along `axis` (0-based).
    pub fn unit(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis {axis} out of range for dim {dim}");
        let mut v = vec![0; dim];
        v[axis] = 1;
        MultiIndex(v.into_boxed_slice())
    }

    pub fn from_slice(v: &[u32]) -> Self {
        MultiIndex(v.to_vec().into_boxed_slice())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Total degree |j| = j_1 + ... + j_N.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&k| k as u64).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect::<Vec<_>>()
                .into_boxed_slice(),
        )
    }

    /// Component-wise subtraction; `None` if any component would go negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        assert_eq!(self.dim(), other.dim());
        let mut v = Vec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            v.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(v.into_boxed_slice()))
    }

    fn bump(&self, axis: usize, delta: i64) -> Self {
        let mut v = self.0.to_vec();
        v[axis] = (v[axis] as i64 + delta) as u32;
        MultiIndex(v.into_boxed_slice())
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total().cmp(&other.total()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone)]
enum Repr<C: Scalar> {
    /// One space axis: coefficient of x^k at position k. No trailing zeros.
    Dense(Vec<C>),
    /// General case: nonzero coefficients only.
    Sparse(BTreeMap<MultiIndex, C>),
}

/// Polynomial in x_1..x_N, trusted up to total degree `cap`.
#[derive(Debug, Clone)]
pub struct XSeries<C: Scalar> {
    dim: usize,
    cap: u32,
    ctx: C::Ctx,
    repr: Repr<C>,
}

impl<C: Scalar> PartialEq for XSeries<C> {
    fn eq(&self, other: &Self) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let a: Vec<(MultiIndex, &C)> = self.iter().collect();
        let b: Vec<(MultiIndex, &C)> = other.iter().collect();
        a == b
    }
}

impl<C: Scalar> XSeries<C> {
    pub fn zero(dim: usize, cap: u32, ctx: C::Ctx) -> Self {
        let repr = if dim == 1 { Repr::Dense(Vec::new()) } else { Repr::Sparse(BTreeMap::new()) };
        XSeries { dim, cap, ctx, repr }
    }

    pub fn constant(dim: usize, cap: u32, ctx: C::Ctx, c: C) -> Self {
        let mut s = Self::zero(dim, cap, ctx);
        if !c.is_zero() {
            s.set(MultiIndex::zero(dim), c);
        }
        s
    }

    pub fn monomial(
        dim: usize,
        cap: u32,
        ctx: C::Ctx,
        idx: MultiIndex,
        c: C,
    ) -> Result<Self, SeriesError> {
        let mut s = Self::zero(dim, cap, ctx);
        if idx.dim() != dim {
            return Err(SeriesError::DimMismatch { got: idx.dim(), expected: dim });
        }
        if idx.total() > cap as u64 {
            return Err(SeriesError::DegreeAboveCap { degree: idx.total(), cap });
        }
        if !c.is_zero() {
            s.set(idx, c);
        }
        Ok(s)
    }

    pub fn from_entries<I>(dim: usize, cap: u32, ctx: C::Ctx, entries: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (MultiIndex, C)>,
    {
        let mut s = Self::zero(dim, cap, ctx);
        for (idx, c) in entries {
            if idx.dim() != dim {
                return Err(SeriesError::DimMismatch { got: idx.dim(), expected: dim });
            }
            if idx.total() > cap as u64 {
                return Err(SeriesError::DegreeAboveCap { degree: idx.total(), cap });
            }
            if !c.is_zero() {
                let cur = s.get(&idx);
                s.set(idx, cur.add(&c));
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn ctx(&self) -> C::Ctx {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Dense(v) => v.is_empty(),
            Repr::Sparse(m) => m.is_empty(),
        }
    }

    pub fn nonzero_len(&self) -> usize {
        match &self.repr {
            Repr::Dense(v) => v.iter().filter(|c| !c.is_zero()).count(),
            Repr::Sparse(m) => m.len(),
        }
    }

    /// Largest total degree with a nonzero coefficient.
    pub fn max_total_degree(&self) -> Option<u64> {
        match &self.repr {
            Repr::Dense(v) => Some((v.len() as u64).checked_sub(1)?),
            Repr::Sparse(m) => m.keys().map(|k| k.total()).max(),
        }
    }

    pub fn get(&self, idx: &MultiIndex) -> C {
        debug_assert_eq!(idx.dim(), self.dim);
        match &self.repr {
            Repr::Dense(v) => {
                let k = idx.get(0) as usize;
                v.get(k).cloned().unwrap_or_else(|| C::zero(self.ctx))
            }
            Repr::Sparse(m) => m.get(idx).cloned().unwrap_or_else(|| C::zero(self.ctx)),
        }
    }

    fn set(&mut self, idx: MultiIndex, c: C) {
        match &mut self.repr {
            Repr::Dense(v) => {
                let k = idx.get(0) as usize;
                if c.is_zero() {
                    if k < v.len() {
                        v[k] = c;
                        while v.last().is_some_and(|x| x.is_zero()) {
                            v.pop();
                        }
                    }
                    return;
                }
                if k >= v.len() {
                    v.resize(k + 1, C::zero(self.ctx));
                }
                v[k] = c;
            }
            Repr::Sparse(m) => {
                if c.is_zero() {
                    m.remove(&idx);
                } else {
                    m.insert(idx, c);
                }
            }
        }
    }

    /// Nonzero coefficients in degree-then-lex order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (MultiIndex, &C)> + '_> {
        match &self.repr {
            Repr::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| (MultiIndex::from_slice(&[k as u32]), c)),
            ),
            Repr::Sparse(m) => Box::new(m.iter().map(|(k, c)| (k.clone(), c))),
        }
    }

    /// Cap-tightening; keeps coefficients of total degree <= new_cap.
    pub fn truncated(&self, new_cap: u32) -> Self {
        let cap = self.cap.min(new_cap);
        let mut out = Self::zero(self.dim, cap, self.ctx);
        for (idx, c) in self.iter() {
            if idx.total() <= cap as u64 {
                out.set(idx, c.clone());
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, true)
    }

    fn combine(&self, other: &Self, negate: bool) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let cap = self.cap.min(other.cap);
        let mut out = self.truncated(cap);
        for (idx, c) in other.iter() {
            if idx.total() > cap as u64 {
                continue;
            }
            let cur = out.get(&idx);
            let next = if negate { cur.sub(c) } else { cur.add(c) };
            out.set(idx, next);
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.dim, self.cap, self.ctx);
        for (idx, c) in self.iter() {
            out.set(idx, c.neg());
        }
        out
    }

    pub fn scale(&self, factor: &C) -> Self {
        let mut out = Self::zero(self.dim, self.cap, self.ctx);
        if factor.is_zero() {
            return out;
        }
        for (idx, c) in self.iter() {
            out.set(idx, c.mul(factor));
        }
        out
    }

    /// Truncated product; result cap = min of operand caps.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let cap = self.cap.min(other.cap);
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => {
                if a.is_empty() || b.is_empty() {
                    return Self::zero(self.dim, cap, self.ctx);
                }
                let out_len = (a.len() + b.len() - 1).min(cap as usize + 1);
                let mut v = vec![C::zero(self.ctx); out_len];
                for (i, ca) in a.iter().enumerate() {
                    if ca.is_zero() || i >= out_len {
                        continue;
                    }
                    for (j, cb) in b.iter().enumerate() {
                        if i + j >= out_len {
                            break;
                        }
                        if cb.is_zero() {
                            continue;
                        }
                        v[i + j] = v[i + j].add(&ca.mul(cb));
                    }
                }
                while v.last().is_some_and(|x| x.is_zero()) {
                    v.pop();
                }
                XSeries { dim: self.dim, cap, ctx: self.ctx, repr: Repr::Dense(v) }
            }
            _ => {
                let mut out = Self::zero(self.dim, cap, self.ctx);
                for (ia, ca) in self.iter() {
                    if ia.total() > cap as u64 {
                        continue;
                    }
                    for (ib, cb) in other.iter() {
                        if ia.total() + ib.total() > cap as u64 {
                            continue;
                        }
                        let idx = ia.add(&ib);
                        let cur = out.get(&idx);
                        out.set(idx, cur.add(&ca.mul(cb)));
                    }
                }
                out
            }
        }
    }

    /// Moment derivative along `axis` with moment sequence `m`:
    /// out_{..., k, ...} = in_{..., k+1, ...} * m(k+1)/m(k).
    /// Lowers the cap by one.
    pub fn moment_dx(&self, axis: usize, m: &MomentSequence) -> Result<Self, SeriesError> {
        assert!(axis < self.dim, "axis out of range");
        if self.cap == 0 {
            return Err(SeriesError::CapUnderflow);
        }
        let cap = self.cap - 1;
        let mut out = Self::zero(self.dim, cap, self.ctx);
        for (idx, c) in self.iter() {
            let k = idx.get(axis);
            if k == 0 {
                continue;
            }
            let w: C = m.ratio_scalar(self.ctx, (k - 1) as usize)?;
            let target = idx.bump(axis, -1);
            if target.total() <= cap as u64 {
                out.set(target, c.mul(&w));
            }
        }
        Ok(out)
    }

    /// Iterated moment derivative d^{q_1}_{x_1} ... d^{q_N}_{x_N}.
    /// `moments[d]` is the sequence for axis d.
    pub fn moment_dx_multi(
        &self,
        q: &MultiIndex,
        moments: &[Arc<MomentSequence>],
    ) -> Result<Self, SeriesError> {
        if q.dim() != self.dim {
            return Err(SeriesError::DimMismatch { got: q.dim(), expected: self.dim });
        }
        assert_eq!(moments.len(), self.dim, "one moment sequence per axis");
        let mut out = self.clone();
        for axis in 0..self.dim {
            for _ in 0..q.get(axis) {
                out = out.moment_dx(axis, &moments[axis])?;
            }
        }
        Ok(out)
    }

    /// sum |c_j| rho^{|j|}: the sup of the majorant polynomial on the
    /// closed polydisk of radius rho.
    pub fn sup_majorant(&self, rho: &rug::Rational) -> C {
        let r = C::from_rational(self.ctx, rho);
        let mut acc = C::zero(self.ctx);
        for (idx, c) in self.iter() {
            let w = r.powi(idx.total() as i32);
            acc = acc.add(&c.abs().mul(&w));
        }
        acc
    }

    /// Evaluate at a point (one scalar per axis).
    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.dim, "one coordinate per axis");
        let mut acc = C::zero(self.ctx);
        for (idx, c) in self.iter() {
            let mut term = c.clone();
            for (axis, x) in point.iter().enumerate() {
                let e = idx.get(axis);
                if e > 0 {
                    term = term.mul(&x.powi(e as i32));
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// All coefficients finite (always true in exact mode).
    pub fn all_finite(&self) -> bool {
        self.iter().all(|(_, c)| c.is_finite())
    }

    /// JSON form: degree-sorted `[{"idx": [...], "c": "..."}]`.
    pub fn to_json(&self) -> Value {
        let items: Vec<Value> = self
            .iter()
            .map(|(idx, c)| json!({ "idx": idx.as_slice(), "c": c.coeff_string() }))
            .collect();
        Value::Array(items)
    }
}

/// Finite t-expansion in the normalized basis t^j / m_0(j).
#[derive(Debug, Clone, PartialEq)]
pub struct TSeries<C: Scalar> {
    m0: Arc<MomentSequence>,
    entries: Vec<XSeries<C>>,
}

impl<C: Scalar> TSeries<C> {
    /// `entries[j]` is the coefficient of t^j / m_0(j); must be nonempty.
    pub fn new(m0: Arc<MomentSequence>, entries: Vec<XSeries<C>>) -> Self {
        assert!(!entries.is_empty(), "t-series needs at least entry 0");
        let dim = entries[0].dim();
        assert!(entries.iter().all(|e| e.dim() == dim), "mixed dimensions");
        TSeries { m0, entries }
    }

    pub fn m0(&self) -> &Arc<MomentSequence> {
        &self.m0
    }

    pub fn t_order(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.entries[0].dim()
    }

    pub fn entry(&self, j: usize) -> &XSeries<C> {
        &self.entries[j]
    }

    pub fn entries(&self) -> &[XSeries<C>] {
        &self.entries
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.m0, other.m0, "mixed t-moment sequences");
        let len = self.entries.len().min(other.entries.len());
        let entries =
            (0..len).map(|j| self.entries[j].add(&other.entries[j])).collect();
        TSeries { m0: self.m0.clone(), entries }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.m0, other.m0, "mixed t-moment sequences");
        let len = self.entries.len().min(other.entries.len());
        let entries =
            (0..len).map(|j| self.entries[j].sub(&other.entries[j])).collect();
        TSeries { m0: self.m0.clone(), entries }
    }

    pub fn scale(&self, factor: &C) -> Self {
        TSeries {
            m0: self.m0.clone(),
            entries: self.entries.iter().map(|e| e.scale(factor)).collect(),
        }
    }

    /// Normalized Cauchy product: entry_j = sum_{a+b=j} w(j;a,b) A_a B_b
    /// with w(j;a,b) = m_0(j) / (m_0(a) m_0(b)).
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        assert_eq!(self.m0, other.m0, "mixed t-moment sequences");
        let len = self.entries.len().min(other.entries.len());
        let dim = self.dim();
        let ctx = self.entries[0].ctx();
        let mut entries = Vec::with_capacity(len);
        for j in 0..len {
            let cap = (0..=j)
                .map(|a| self.entries[a].cap().min(other.entries[j - a].cap()))
                .min()
                .expect("nonempty range");
            let mut acc = XSeries::zero(dim, cap, ctx);
            for a in 0..=j {
                let b = j - a;
                if self.entries[a].is_zero() || other.entries[b].is_zero() {
                    continue;
                }
                let w: C = self.m0.multinomial_scalar(ctx, j, &[a, b])?;
                let prod = self.entries[a].mul(&other.entries[b]);
                acc = acc.add(&prod.scale(&w));
            }
            entries.push(acc);
        }
        Ok(TSeries { m0: self.m0.clone(), entries })
    }

    /// Moment t-derivative of order `i`: an index shift in the normalized
    /// basis. Errors when `i` exceeds the stored t-order.
    pub fn moment_dt(&self, i: usize) -> Result<Self, SeriesError> {
        if i > self.t_order() {
            return Err(SeriesError::OrderUnderflow { order: i, t_order: self.t_order() });
        }
        Ok(TSeries { m0: self.m0.clone(), entries: self.entries[i..].to_vec() })
    }

    /// Entrywise iterated moment x-derivative.
    pub fn moment_dx_multi(
        &self,
        q: &MultiIndex,
        moments: &[Arc<MomentSequence>],
    ) -> Result<Self, SeriesError> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.moment_dx_multi(q, moments))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TSeries { m0: self.m0.clone(), entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    type XS = XSeries<Rational>;

    fn gamma(n: i64) -> Arc<MomentSequence> {
        Arc::new(MomentSequence::gamma(Rational::from(n)).unwrap())
    }

    fn poly1(cap: u32, coeffs: &[i64]) -> XS {
        XSeries::from_entries(
            1,
            cap,
            (),
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| (MultiIndex::from_slice(&[k as u32]), Rational::from(c))),
        )
        .unwrap()
    }

    #[test]
    fn multi_index_order_is_graded() {
        let a = MultiIndex::from_slice(&[0, 2]);
        let b = MultiIndex::from_slice(&[3, 0]);
        assert!(a < b); // total degree 2 < 3
        let c = MultiIndex::from_slice(&[1, 1]);
        assert!(a < c); // same degree, lex
    }

    #[test]
    fn mul_truncates_to_min_cap() {
        let a = poly1(3, &[1, 1]); // 1 + x, cap 3
        let b = poly1(1, &[1, 1]); // 1 + x, cap 1
        let p = a.mul(&b); // (1+x)^2 truncated at cap 1
        assert_eq!(p.cap(), 1);
        assert_eq!(p.get(&MultiIndex::from_slice(&[0])), Rational::from(1));
        assert_eq!(p.get(&MultiIndex::from_slice(&[1])), Rational::from(2));
        assert_eq!(p.get(&MultiIndex::from_slice(&[2])), Rational::from(0));
    }

    #[test]
    fn moment_dx_gamma2_example() {
        // gamma(2), f = x^2: derivative is m(2)/m(1) x = 12 x.
        let m = gamma(2);
        let f = poly1(4, &[0, 0, 1]);
        let d = f.moment_dx(0, &m).unwrap();
        assert_eq!(d.cap(), 3);
        assert_eq!(d.get(&MultiIndex::from_slice(&[1])), Rational::from(12));
        assert_eq!(d.nonzero_len(), 1);
    }

    #[test]
    fn moment_dx_gamma1_is_classical() {
        // gamma(1): moment derivative = d/dx on polynomials.
        let m = gamma(1);
        let f = poly1(5, &[3, 0, 5, 7]); // 3 + 5x^2 + 7x^3
        let d = f.moment_dx(0, &m).unwrap();
        assert_eq!(d, poly1(4, &[0, 10, 21]));
    }

    #[test]
    fn moment_dx_cap_underflow() {
        let m = gamma(1);
        let f = poly1(0, &[2]);
        assert!(matches!(f.moment_dx(0, &m), Err(SeriesError::CapUnderflow)));
    }

    #[test]
    fn sparse_dense_mul_agree() {
        // Same product through the dense (N=1) and sparse (N=2, y unused) paths.
        let a1 = poly1(4, &[1, 2, 3]);
        let b1 = poly1(4, &[0, 1, 1]);
        let dense = a1.mul(&b1);

        let lift = |p: &XS| {
            XSeries::from_entries(
                2,
                p.cap(),
                (),
                p.iter().map(|(idx, c)| (MultiIndex::from_slice(&[idx.get(0), 0]), c.clone())),
            )
            .unwrap()
        };
        let sparse = lift(&a1).mul(&lift(&b1));
        for (idx, c) in dense.iter() {
            let lifted = MultiIndex::from_slice(&[idx.get(0), 0]);
            assert_eq!(sparse.get(&lifted), *c);
        }
        assert_eq!(sparse.nonzero_len(), dense.nonzero_len());
    }

    #[test]
    fn sup_majorant_counts_abs_values() {
        let f = poly1(3, &[1, -2, 0, 4]);
        // 1 + 2*(1/2) + 4*(1/8) = 5/2.
        assert_eq!(f.sup_majorant(&Rational::from((1, 2))), Rational::from((5, 2)));
    }

    #[test]
    fn eval_horner_free() {
        let f = poly1(3, &[1, -2, 0, 4]);
        let v = f.eval(&[Rational::from((1, 2))]);
        // 1 - 1 + 4/8 = 1/2.
        assert_eq!(v, Rational::from((1, 2)));
    }

    #[test]
    fn equality_ignores_cap() {
        let a = poly1(3, &[1, 2]);
        let b = poly1(7, &[1, 2]);
        assert_eq!(a, b);
    }

    #[test]
    fn tseries_mul_normalized_weights() {
        // gamma(1): entry_j of u*u with u = sum_j t^j/j! (all entries 1)
        // is sum_{a+b=j} j!/(a! b!) = 2^j.
        let m0 = gamma(1);
        let ones = TSeries::new(
            m0.clone(),
            (0..6).map(|_| XSeries::constant(1, 0, (), Rational::from(1))).collect(),
        );
        let sq = ones.mul(&ones).unwrap();
        for j in 0..=5usize {
            let c = sq.entry(j).get(&MultiIndex::zero(1));
            assert_eq!(c, Scalar::powi(&Rational::from(2), j as i32));
        }
    }

    #[test]
    fn tseries_mul_is_associative() {
        // Weighted Cauchy products associate: (ab)c = a(bc).
        let m0 = gamma(2);
        let mk = |coeffs: &[&[i64]]| {
            TSeries::new(m0.clone(), coeffs.iter().map(|c| poly1(4, c)).collect())
        };
        let a = mk(&[&[1, 1], &[0, 2], &[3]]);
        let b = mk(&[&[2], &[1, 1], &[0, 0, 1]]);
        let c = mk(&[&[1], &[5], &[1, 2]]);
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn tseries_dt_shifts() {
        let m0 = gamma(1);
        let u = TSeries::new(m0, vec![poly1(2, &[1]), poly1(2, &[0, 2]), poly1(2, &[3])]);
        let d = u.moment_dt(1).unwrap();
        assert_eq!(d.t_order(), 1);
        assert_eq!(d.entry(0), &poly1(2, &[0, 2]));
        assert!(u.moment_dt(3).is_err());
    }
}
