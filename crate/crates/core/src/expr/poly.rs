//! Multivariate polynomials with rational coefficients over the declared
//! parameter symbols, including an exact multivariate gcd.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::symbol::Symbol;

/// A power product of parameters, sorted by symbol with positive exponents.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PMono(Vec<(Symbol, u32)>);

impl PMono {
    pub fn one() -> Self {
        PMono(Vec::new())
    }

    pub fn var(s: &Symbol) -> Self {
        PMono(vec![(s.clone(), 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(Symbol, u32)>) -> Self {
        pairs.retain(|(_, e)| *e > 0);
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Symbol, u32)> = Vec::with_capacity(pairs.len());
        for (s, e) in pairs {
            match out.last_mut() {
                Some((ls, le)) if *ls == s => *le += e,
                _ => out.push((s, e)),
            }
        }
        PMono(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, s: &Symbol) -> u32 {
        self.0
            .iter()
            .find(|(v, _)| v == s)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &PMono) -> PMono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        PMono(out)
    }

    /// `self / other` when every exponent of `other` is covered.
    pub fn div(&self, other: &PMono) -> Option<PMono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (s, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < *s {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == *s {
                let oe = other.0[j].1;
                j += 1;
                match e.cmp(&oe) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((s.clone(), e - oe)),
                }
            } else {
                out.push((s.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(PMono(out))
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &PMono) -> PMono {
        let mut out = Vec::new();
        for (s, e) in &self.0 {
            let oe = other.exponent(s);
            if oe > 0 {
                out.push((s.clone(), (*e).min(oe)));
            }
        }
        PMono(out)
    }

    pub fn without(&self, s: &Symbol) -> PMono {
        PMono(self.0.iter().filter(|(v, _)| v != s).cloned().collect())
    }
}

/// Lexicographic order with symbols taken in ascending name order.
impl Ord for PMono {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((sa, ea)), Some((sb, eb))) => match sa.cmp(sb) {
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                },
            }
        }
    }
}

impl PartialOrd for PMono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for PMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (k, (s, e)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{}", s)?;
            } else {
                write!(f, "{}^{}", s, e)?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial in parameters with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ParamPoly {
    terms: BTreeMap<PMono, BigRational>,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl ParamPoly {
    pub fn zero() -> Self {
        ParamPoly::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(PMono::one(), c);
        }
        ParamPoly { terms }
    }

    pub fn int(n: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn var(s: &Symbol) -> Self {
        Self::term(PMono::var(s), BigRational::one())
    }

    pub fn term(m: PMono, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        ParamPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    /// The constant value when the polynomial has no parameter dependence.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PMono, &BigRational)> {
        self.terms.iter()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.terms
            .keys()
            .flat_map(|m| m.pairs().iter().map(|(s, _)| s.clone()))
            .collect()
    }

    pub fn leading(&self) -> Option<(&PMono, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn scale(&self, c: &BigRational) -> ParamPoly {
        if c.is_zero() {
            return ParamPoly::zero();
        }
        ParamPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn mul_term(&self, m: &PMono, c: &BigRational) -> ParamPoly {
        if c.is_zero() {
            return ParamPoly::zero();
        }
        ParamPoly {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.mul(m), v * c))
                .collect(),
        }
    }

    fn add_term(&mut self, m: PMono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn pow(&self, e: u32) -> ParamPoly {
        let mut out = ParamPoly::one();
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                out = &out * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        out
    }

    /// Make the leading coefficient one; returns the factor divided out.
    pub fn monic(&self) -> (ParamPoly, BigRational) {
        match self.leading() {
            None => (ParamPoly::zero(), BigRational::one()),
            Some((_, lc)) => {
                let lc = lc.clone();
                (self.scale(&lc.recip()), lc)
            }
        }
    }

    pub fn eval<F: Fn(&Symbol) -> Option<f64>>(&self, lookup: &F) -> Option<f64> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = c.to_f64()?;
            for (s, e) in m.pairs() {
                t *= lookup(s)?.powi(*e as i32);
            }
            acc += t;
        }
        Some(acc)
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &ParamPoly) -> Option<ParamPoly> {
        let (lm, lc) = d.leading()?;
        if d.terms.len() == 1 {
            let inv = lc.recip();
            let mut terms = BTreeMap::new();
            for (m, c) in &self.terms {
                terms.insert(m.div(lm)?, c * &inv);
            }
            return Some(ParamPoly { terms });
        }
        let mut r = self.clone();
        let mut q = ParamPoly::zero();
        while let Some((rm, rc)) = r.leading() {
            let tm = rm.div(lm)?;
            let tc = rc / lc;
            r = &r - &d.mul_term(&tm, &tc);
            q.add_term(tm, tc);
        }
        Some(q)
    }

    fn main_symbol(&self) -> Option<Symbol> {
        self.terms
            .keys()
            .flat_map(|m| m.pairs().first().map(|(s, _)| s.clone()))
            .min()
    }

    fn degree_in(&self, s: &Symbol) -> u32 {
        self.terms.keys().map(|m| m.exponent(s)).max().unwrap_or(0)
    }

    /// Coefficients as a polynomial in `s`, indexed by degree.
    fn coeffs_in(&self, s: &Symbol) -> Vec<ParamPoly> {
        let mut out = vec![ParamPoly::zero(); self.degree_in(s) as usize + 1];
        for (m, c) in &self.terms {
            out[m.exponent(s) as usize].add_term(m.without(s), c.clone());
        }
        out
    }

    fn from_coeffs_in(s: &Symbol, coeffs: &[ParamPoly]) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (k, c) in coeffs.iter().enumerate() {
            let m = PMono::from_pairs(vec![(s.clone(), k as u32)]);
            for (cm, cc) in &c.terms {
                out.add_term(cm.mul(&m), cc.clone());
            }
        }
        out
    }

    fn content_in(&self, s: &Symbol) -> ParamPoly {
        self.coeffs_in(s)
            .into_iter()
            .filter(|c| !c.is_zero())
            .fold(ParamPoly::zero(), |g, c| g.gcd(&c))
    }

    fn primitive_in(&self, s: &Symbol) -> ParamPoly {
        let c = self.content_in(s);
        if c.is_zero() {
            return self.clone();
        }
        self.div_exact(&c).expect("content divides")
    }

    /// Pseudo-remainder of `self` by `d` viewed as polynomials in `s`.
    fn prem_in(&self, d: &ParamPoly, s: &Symbol) -> ParamPoly {
        let dc = d.coeffs_in(s);
        let dd = dc.len() - 1;
        let lc = dc[dd].clone();
        let mut r = self.coeffs_in(s);
        while r.len() > dd && !r.is_empty() {
            let rd = r.len() - 1;
            let lr = r[rd].clone();
            if lr.is_zero() {
                r.pop();
                continue;
            }
            let shift = rd - dd;
            for c in r.iter_mut() {
                *c = &*c * &lc;
            }
            for (k, dk) in dc.iter().enumerate() {
                r[k + shift] = &r[k + shift] - &(&lr * dk);
            }
            r.pop();
        }
        while r.last().is_some_and(|c| c.is_zero()) {
            r.pop();
        }
        ParamPoly::from_coeffs_in(s, &r)
    }

    /// Monic greatest common divisor over Q[params].
    pub fn gcd(&self, other: &ParamPoly) -> ParamPoly {
        if self.is_zero() {
            return other.monic().0;
        }
        if other.is_zero() {
            return self.monic().0;
        }
        if self.is_constant() || other.is_constant() {
            return ParamPoly::one();
        }
        if self.terms.len() == 1 || other.terms.len() == 1 {
            let mut g: Option<PMono> = None;
            for m in self.terms.keys().chain(other.terms.keys()) {
                g = Some(match g {
                    None => m.clone(),
                    Some(g) => g.gcd(m),
                });
            }
            return ParamPoly::term(g.unwrap_or_default(), BigRational::one());
        }
        if self == other {
            return self.monic().0;
        }
        let s = match (self.main_symbol(), other.main_symbol()) {
            (Some(a), Some(b)) => a.min(b),
            _ => return ParamPoly::one(),
        };
        let da = self.degree_in(&s);
        let db = other.degree_in(&s);
        if da == 0 {
            return self.gcd(&other.content_in(&s));
        }
        if db == 0 {
            return other.gcd(&self.content_in(&s));
        }
        let ca = self.content_in(&s);
        let cb = other.content_in(&s);
        let c = ca.gcd(&cb);
        let (mut p, mut q) = (self.primitive_in(&s), other.primitive_in(&s));
        if p.degree_in(&s) < q.degree_in(&s) {
            std::mem::swap(&mut p, &mut q);
        }
        let g = loop {
            let r = p.prem_in(&q, &s);
            if r.is_zero() {
                break q;
            }
            if r.degree_in(&s) == 0 {
                break ParamPoly::one();
            }
            p = q;
            q = r.primitive_in(&s);
        };
        let g = if g.degree_in(&s) == 0 {
            ParamPoly::one()
        } else {
            g.primitive_in(&s)
        };
        (&c * &g).monic().0
    }

    pub fn write_grouped(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.len() > 1 {
            write!(f, "({})", self)
        } else {
            write!(f, "{}", self)
        }
    }
}

pub(crate) fn fmt_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                f.write_str(&fmt_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", fmt_rational(&a), m)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Add for &ParamPoly {
    type Output = ParamPoly;
    fn add(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &ParamPoly {
    type Output = ParamPoly;
    fn sub(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &ParamPoly {
    type Output = ParamPoly;
    fn mul(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &ParamPoly {
    type Output = ParamPoly;
    fn neg(self) -> ParamPoly {
        ParamPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::sym;

    fn a() -> ParamPoly {
        ParamPoly::var(&sym("a"))
    }
    fn b() -> ParamPoly {
        ParamPoly::var(&sym("b"))
    }

    #[test]
    fn lex_order_puts_higher_first_variable_last() {
        let m1 = PMono::from_pairs(vec![(sym("a"), 1)]);
        let m2 = PMono::from_pairs(vec![(sym("b"), 3)]);
        assert!(m1 > m2);
        assert!(PMono::one() < m2);
    }

    #[test]
    fn gcd_of_products() {
        let x = &a() + &b();
        let y = &a() - &ParamPoly::int(2);
        let z = &(&a() * &b()) + &ParamPoly::int(1);
        let p = &(&x * &y) * &z;
        let q = &(&x * &z) * &(&b() + &ParamPoly::int(3));
        let g = p.gcd(&q);
        let expect = (&x * &z).monic().0;
        assert_eq!(g, expect);
    }

    #[test]
    fn gcd_with_monomial() {
        let p = &(&a() * &a()) * &b();
        let q = &(&a() * &b()) + &a();
        assert_eq!(p.gcd(&q), a());
    }

    #[test]
    fn coprime_gives_one() {
        let p = &a() + &ParamPoly::int(1);
        let q = &b() + &ParamPoly::int(1);
        assert!(p.gcd(&q).is_one());
    }

    #[test]
    fn exact_division_roundtrip() {
        let p = &(&a() + &b()) * &(&a() - &b());
        let q = p.div_exact(&(&a() + &b())).unwrap();
        assert_eq!(q, &a() - &b());
        assert!(p.div_exact(&(&a() + &ParamPoly::int(1))).is_none());
    }

    #[test]
    fn display_is_readable() {
        let p = &(&a() * &ParamPoly::int(2)) - &(&b().pow(2)).scale(&rat(1, 2));
        assert_eq!(p.to_string(), "2*a - 1/2*b^2");
    }
}
