//! Exact truncated series in `Q[t_0, ..., t_{r-1}][x^±1, y^±1]`.
//!
//! A [`Series`] is a sparse map from [`Monomial`]s to exact rationals. Every
//! ring operation drops monomials whose total t-degree exceeds the series'
//! [`TruncationPolicy`], and no zero coefficient is ever stored.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational numbers used for every coefficient and coordinate.
pub type Q = BigRational;

/// Builds the rational `p/q`.
pub fn q(p: i64, d: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(d))
}

/// Builds the integer `n` as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Renders a rational as `p/q`, the exchange format of every JSON document.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((p, d)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(p, d))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// A vector of the exponent lattice `Z^2`, written `(a, b)` for `x^a y^b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVector {
    pub a: i64,
    pub b: i64,
}

impl LatticeVector {
    pub const fn new(a: i64, b: i64) -> Self {
        LatticeVector { a, b }
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// Splits `v = c * v'` with `v'` primitive and `c >= 1`.
    pub fn primitive(self) -> Result<(LatticeVector, i64)> {
        if self.is_zero() {
            return Err(Error::ZeroVector);
        }
        let c = self.a.gcd(&self.b);
        Ok((LatticeVector::new(self.a / c, self.b / c), c))
    }

    /// `det(self | other) = a1 b2 - b1 a2`.
    pub fn det(self, other: LatticeVector) -> i64 {
        self.a * other.b - self.b * other.a
    }

    pub fn dot(self, other: LatticeVector) -> i64 {
        self.a * other.a + self.b * other.b
    }

    /// Rotation by a quarter turn counterclockwise.
    pub fn rot90(self) -> LatticeVector {
        LatticeVector::new(-self.b, self.a)
    }

    pub fn scale(self, c: i64) -> LatticeVector {
        LatticeVector::new(self.a * c, self.b * c)
    }
}

impl std::ops::Add for LatticeVector {
    type Output = LatticeVector;
    fn add(self, o: LatticeVector) -> LatticeVector {
        LatticeVector::new(self.a + o.a, self.b + o.b)
    }
}

impl std::ops::Sub for LatticeVector {
    type Output = LatticeVector;
    fn sub(self, o: LatticeVector) -> LatticeVector {
        LatticeVector::new(self.a - o.a, self.b - o.b)
    }
}

impl std::ops::Neg for LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        LatticeVector::new(-self.a, -self.b)
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// `t^{t_exps} z^m`. The derived order (t-exponents first, then `m`) is the
/// deterministic iteration and serialization order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub t: Vec<u16>,
    pub m: LatticeVector,
}

impl Monomial {
    pub fn new(t: Vec<u16>, m: LatticeVector) -> Self {
        Monomial { t, m }
    }

    pub fn unit(nvars: usize) -> Self {
        Monomial { t: vec![0; nvars], m: LatticeVector::new(0, 0) }
    }

    pub fn t_degree(&self) -> u32 {
        self.t.iter().map(|&e| e as u32).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.m.is_zero() && self.t.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let t = self.t.iter().zip(&other.t).map(|(a, b)| a + b).collect();
        Monomial { t, m: self.m + other.m }
    }
}

/// Bound used for series that are exact polynomials (wall functions). Such a
/// series must be re-bounded with [`Series::rebound`] before taking inverses,
/// powers with negative exponent or logarithms.
pub const EXACT: u32 = u32::MAX;

/// Truncation: monomials of total t-degree above `t_bound` are discarded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub t_bound: u32,
}

/// A truncated sparse series with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    nvars: usize,
    trunc: TruncationPolicy,
    terms: BTreeMap<Monomial, Q>,
}

impl Series {
    pub fn zero(nvars: usize, t_bound: u32) -> Self {
        Series { nvars, trunc: TruncationPolicy { t_bound }, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize, t_bound: u32) -> Self {
        let mut s = Series::zero(nvars, t_bound);
        s.terms.insert(Monomial::unit(nvars), Q::one());
        s
    }

    /// The single term `c t^t z^m` (or zero if it is truncated away).
    pub fn term(nvars: usize, t_bound: u32, t: Vec<u16>, m: LatticeVector, c: Q) -> Self {
        let mut s = Series::zero(nvars, t_bound);
        s.insert(Monomial::new(t, m), c);
        s
    }

    /// Assembles a series from arbitrary terms, summing repeated monomials.
    pub fn from_terms<I>(nvars: usize, t_bound: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, Q)>,
    {
        let mut s = Series::zero(nvars, t_bound);
        for (mono, c) in terms {
            if mono.t.len() != nvars {
                return Err(Error::VariableCount(nvars, mono.t.len()));
            }
            s.add_term(mono, c);
        }
        Ok(s)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn t_bound(&self) -> u32 {
        self.trunc.t_bound
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.trunc
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.iter().next().is_some_and(|(k, v)| k.is_unit() && v.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> Q {
        self.terms.get(mono).cloned().unwrap_or_else(Q::zero)
    }

    /// Smallest total t-degree among the non-unit terms, if any.
    pub fn t_order(&self) -> Option<u32> {
        self.terms.keys().filter(|k| !k.is_unit()).map(Monomial::t_degree).min()
    }

    fn insert(&mut self, mono: Monomial, c: Q) {
        if !c.is_zero() && mono.t_degree() <= self.trunc.t_bound {
            self.terms.insert(mono, c);
        }
    }

    /// Adds `c * mono` in place, respecting truncation and removing zeros.
    pub fn add_term(&mut self, mono: Monomial, c: Q) {
        if c.is_zero() || mono.t_degree() > self.trunc.t_bound {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_compatible(&self, other: &Series) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::VariableCount(self.nvars, other.nvars));
        }
        Ok(())
    }

    /// The result of combining two series keeps the tighter truncation.
    fn joint_bound(&self, other: &Series) -> u32 {
        self.trunc.t_bound.min(other.trunc.t_bound)
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.trunc.t_bound = self.joint_bound(other);
        out.terms.retain(|k, _| k.t_degree() <= out.trunc.t_bound);
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Series {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = -v.clone();
        }
        out
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> Series {
        if c.is_zero() {
            return Series::zero(self.nvars, self.trunc.t_bound);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.mul_filtered(other, |_| true)
    }

    /// Product that additionally discards every monomial rejected by `keep`.
    ///
    /// `keep` must describe an ideal-compatible cut (if a monomial is dropped,
    /// so is every multiple of it by a monomial that can occur), otherwise the
    /// result depends on the order of operations.
    pub fn mul_filtered<F>(&self, other: &Series, keep: F) -> Result<Series>
    where
        F: Fn(&Monomial) -> bool,
    {
        self.check_compatible(other)?;
        let bound = self.joint_bound(other);
        let mut out = Series::zero(self.nvars, bound);
        for (ka, va) in &self.terms {
            let da = ka.t_degree();
            if da > bound {
                continue;
            }
            for (kb, vb) in &other.terms {
                if da + kb.t_degree() > bound {
                    continue;
                }
                let mono = ka.mul(kb);
                if keep(&mono) {
                    out.add_term(mono, va * vb);
                }
            }
        }
        Ok(out)
    }

    /// Re-truncates at a lower bound (a larger bound leaves the series as is).
    pub fn with_bound(&self, t_bound: u32) -> Series {
        let mut out = self.clone();
        out.trunc.t_bound = t_bound.min(self.trunc.t_bound);
        out.terms.retain(|k, _| k.t_degree() <= out.trunc.t_bound);
        out
    }

    /// Reinterprets the series under a new bound, dropping terms above it.
    /// Raising the bound is only meaningful for exact polynomials.
    pub fn rebound(&self, t_bound: u32) -> Series {
        let mut out = self.clone();
        out.trunc.t_bound = t_bound;
        out.terms.retain(|k, _| k.t_degree() <= t_bound);
        out
    }

    /// Retains only the terms accepted by `keep`.
    pub fn filtered<F: Fn(&Monomial) -> bool>(&self, keep: F) -> Series {
        let mut out = self.clone();
        out.terms.retain(|k, _| keep(k));
        out
    }

    /// Splits off the t-constant part and checks that it is exactly 1.
    fn unit_tail(&self) -> Result<Series> {
        if self.trunc.t_bound == EXACT {
            return Err(Error::InvalidParameter("series needs a finite truncation bound".into()));
        }
        let mut g = self.clone();
        let unit = Monomial::unit(self.nvars);
        if g.terms.remove(&unit) != Some(Q::one()) {
            return Err(Error::NotUnit);
        }
        if g.terms.keys().any(|k| k.t_degree() == 0) {
            return Err(Error::NotUnit);
        }
        Ok(g)
    }

    /// `1/f` by the geometric series in `f - 1`.
    pub fn inverse(&self) -> Result<Series> {
        let g = self.unit_tail()?.neg();
        let mut acc = Series::one(self.nvars, self.trunc.t_bound);
        let mut power = acc.clone();
        for _ in 0..self.trunc.t_bound {
            power = power.mul(&g)?;
            if power.is_zero() {
                break;
            }
            acc = acc.add(&power)?;
        }
        Ok(acc)
    }

    /// `f^n` for any integer `n`; negative powers require a unit.
    pub fn int_pow(&self, n: i64) -> Result<Series> {
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Series::one(self.nvars, self.trunc.t_bound);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq)?;
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq)?;
            }
        }
        Ok(acc)
    }

    /// `log f = sum_{n >= 1} (-1)^{n+1} (f - 1)^n / n`.
    pub fn log1(&self) -> Result<Series> {
        let g = self.unit_tail()?;
        let mut acc = Series::zero(self.nvars, self.trunc.t_bound);
        let mut power = Series::one(self.nvars, self.trunc.t_bound);
        for n in 1..=self.trunc.t_bound.max(1) as i64 {
            power = power.mul(&g)?;
            if power.is_zero() {
                break;
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&power.scale(&q(sign, n)))?;
        }
        Ok(acc)
    }

    /// Collapses every `t_i` to 1. The result has no t-variables.
    pub fn substitute_t_one(&self) -> Series {
        let mut out = Series::zero(0, 0);
        for (k, v) in &self.terms {
            out.add_term(Monomial::new(Vec::new(), k.m), v.clone());
        }
        out
    }

    /// Coefficients of a series in `y` alone, keyed by the `y`-exponent.
    pub fn y_coefficients(&self) -> Result<BTreeMap<i64, Q>> {
        let mut out: BTreeMap<i64, Q> = BTreeMap::new();
        for (k, v) in &self.terms {
            if k.m.a != 0 {
                return Err(Error::LeftoverX);
            }
            *out.entry(k.m.b).or_insert_with(Q::zero) += v;
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Structural scan: no zero coefficients, no over-truncation monomials,
    /// consistent variable count.
    pub fn is_well_formed(&self) -> bool {
        self.terms.iter().all(|(k, v)| !v.is_zero() && k.t.len() == self.nvars && k.t_degree() <= self.trunc.t_bound)
    }

    /// Serializable view of the terms.
    pub fn to_json_terms(&self) -> Vec<TermJson> {
        self.terms.iter().map(|(k, v)| TermJson { c: fmt_q(v), t: k.t.clone(), m: [k.m.a, k.m.b] }).collect()
    }

    pub fn from_json_terms(nvars: usize, t_bound: u32, terms: &[TermJson]) -> Result<Series> {
        let mut out = Vec::with_capacity(terms.len());
        for term in terms {
            let c = parse_q(&term.c)?;
            out.push((Monomial::new(term.t.clone(), LatticeVector::new(term.m[0], term.m[1])), c));
        }
        Series::from_terms(nvars, t_bound, out)
    }
}

/// JSON form of one term: `{"c": "p/q", "t": [...], "m": [m1, m2]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub c: String,
    pub t: Vec<u16>,
    pub m: [i64; 2],
}

/// Serialized series with its truncation data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub nvars: usize,
    pub t_bound: u32,
    pub terms: Vec<TermJson>,
}

impl From<&Series> for SeriesJson {
    fn from(s: &Series) -> Self {
        SeriesJson { nvars: s.nvars, t_bound: s.trunc.t_bound, terms: s.to_json_terms() }
    }
}

impl TryFrom<&SeriesJson> for Series {
    type Error = Error;
    fn try_from(j: &SeriesJson) -> Result<Series> {
        Series::from_json_terms(j.nvars, j.t_bound, &j.terms)
    }
}

fn fmt_monomial(f: &mut fmt::Formatter<'_>, k: &Monomial) -> fmt::Result {
    let mut first = true;
    let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
        if !first {
            write!(f, "*")?;
        }
        first = false;
        Ok(())
    };
    for (i, &e) in k.t.iter().enumerate() {
        if e > 0 {
            sep(f)?;
            if e == 1 {
                write!(f, "t{i}")?
            } else {
                write!(f, "t{i}^{e}")?
            }
        }
    }
    for (name, e) in [("x", k.m.a), ("y", k.m.b)] {
        if e != 0 {
            sep(f)?;
            if e == 1 {
                write!(f, "{name}")?
            } else {
                write!(f, "{name}^{e}")?
            }
        }
    }
    Ok(())
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, v)) in self.terms.iter().enumerate() {
            let neg = v.is_negative();
            let abs = v.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if k.is_unit() {
                write!(f, "{abs}")?;
            } else {
                if !abs.is_one() {
                    write!(f, "{abs}*")?;
                }
                fmt_monomial(f, k)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[u16]) -> Vec<u16> {
        v.to_vec()
    }

    fn lv(a: i64, b: i64) -> LatticeVector {
        LatticeVector::new(a, b)
    }

    fn one_plus(nvars: usize, bound: u32, tv: &[u16], m: LatticeVector) -> Series {
        Series::one(nvars, bound).add(&Series::term(nvars, bound, t(tv), m, qi(1))).unwrap()
    }

    #[test]
    fn primitive_splits_content() {
        assert_eq!(lv(6, -9).primitive().unwrap(), (lv(2, -3), 3));
        assert_eq!(lv(0, -4).primitive().unwrap(), (lv(0, -1), 4));
        assert_eq!(lv(0, 0).primitive(), Err(Error::ZeroVector));
    }

    #[test]
    fn add_examples() {
        let a = one_plus(2, 5, &[1, 0], lv(1, 0));
        let minus = Series::term(2, 5, t(&[1, 0]), lv(1, 0), qi(-1));
        assert!(a.add(&minus).unwrap().is_one());

        let b = Series::term(2, 5, t(&[0, 1]), lv(0, 1), qi(1));
        let s = a.add(&b).unwrap();
        assert_eq!(s.len(), 3);

        let c = Series::term(2, 1, t(&[1, 0]), lv(1, 0), qi(1));
        let d = Series::term(2, 1, t(&[1, 1]), lv(1, 1), qi(1));
        let s = c.add(&d).unwrap();
        assert_eq!(s, c);
    }

    #[test]
    fn mul_examples() {
        let a = one_plus(2, 5, &[1, 0], lv(1, 0));
        let b = one_plus(2, 5, &[0, 1], lv(0, 1));
        let p = a.mul(&b).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.coeff(&Monomial::new(t(&[1, 1]), lv(1, 1))), qi(1));

        let cube = a.int_pow(3).unwrap();
        assert_eq!(cube.coeff(&Monomial::new(t(&[1, 0]), lv(1, 0))), qi(3));
        assert_eq!(cube.coeff(&Monomial::new(t(&[2, 0]), lv(2, 0))), qi(3));

        let a1 = a.with_bound(1);
        let p1 = a1.mul(&b.with_bound(1)).unwrap();
        assert_eq!(p1.len(), 3);
    }

    #[test]
    fn inverse_is_geometric() {
        let f = one_plus(1, 3, &[1], lv(1, 0));
        let inv = f.int_pow(-1).unwrap();
        for (k, sign) in [(0i64, 1i64), (1, -1), (2, 1), (3, -1)] {
            assert_eq!(inv.coeff(&Monomial::new(vec![k as u16], lv(k, 0))), qi(sign));
        }
        assert_eq!(inv.len(), 4);
        assert!(f.int_pow(0).unwrap().is_one());
        let round = f.int_pow(2).unwrap().mul(&f.int_pow(-2).unwrap()).unwrap();
        assert!(round.is_one());
    }

    #[test]
    fn negative_power_needs_unit() {
        let f = Series::term(1, 3, vec![0], lv(1, 0), qi(2));
        assert_eq!(f.int_pow(-1), Err(Error::NotUnit));
        assert_eq!(f.log1(), Err(Error::NotUnit));
    }

    #[test]
    fn log_of_one_plus_9y3() {
        // Carry the y-degree in a single t so that y^9 is kept at t-bound 3.
        let f = Series::one(1, 3).add(&Series::term(1, 3, vec![1], lv(0, 3), qi(9))).unwrap();
        let l = f.log1().unwrap().substitute_t_one().y_coefficients().unwrap();
        assert_eq!(l.get(&3), Some(&qi(9)));
        assert_eq!(l.get(&6), Some(&q(-81, 2)));
        assert_eq!(l.get(&9), Some(&qi(243)));
        assert!(Series::one(1, 3).log1().unwrap().is_zero());
    }

    #[test]
    fn substitute_collapses() {
        let f = Series::one(2, 5).add(&Series::term(2, 5, t(&[1, 2]), lv(0, 3), qi(3))).unwrap().substitute_t_one();
        assert_eq!(f.y_coefficients().unwrap().get(&3), Some(&qi(3)));
        let g = Series::term(2, 5, t(&[1, 0]), lv(1, 0), qi(1))
            .add(&Series::term(2, 5, t(&[0, 1]), lv(1, 0), qi(1)))
            .unwrap()
            .substitute_t_one();
        assert_eq!(g.coeff(&Monomial::new(vec![], lv(1, 0))), qi(2));
        assert_eq!(g.y_coefficients(), Err(Error::LeftoverX));
    }

    #[test]
    fn rational_text_round_trip() {
        for s in ["135/4", "-78/1", "0/1"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(parse_q("7").unwrap(), qi(7));
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn display_is_readable() {
        let f = one_plus(2, 4, &[1, 1], lv(1, 1));
        assert_eq!(f.to_string(), "1 + t0*t1*x*y");
    }
}
