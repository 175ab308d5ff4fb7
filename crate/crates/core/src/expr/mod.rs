//! Exact normal-form expressions.
//!
//! An [`Expr`] is a finite sum of [`Monomial`]s (rational powers and
//! exponentials of variables) with [`Coeff`] coefficients (reduced rational
//! functions of parameters). Equal normal forms mean equal functions.

pub mod coeff;
pub mod compiled;
pub mod integrate;
pub mod matrix;
pub mod monomial;
pub mod poly;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_rational::BigRational;
use num_traits::{One, Zero};

pub use coeff::Coeff;
pub use monomial::{Monomial, Q64};
pub use poly::{PMono, ParamPoly};

use crate::error::{Error, Result};
use crate::symbol::Symbol;

/// Numeric values for variables and parameters.
pub type Point = BTreeMap<Symbol, f64>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Expr {
    terms: BTreeMap<Monomial, Coeff>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr::coeff(Coeff::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::coeff(Coeff::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Expr::coeff(Coeff::ratio(n, d))
    }

    pub fn rational(r: BigRational) -> Self {
        Expr::coeff(Coeff::rational(r))
    }

    pub fn coeff(c: Coeff) -> Self {
        Expr::term(Monomial::one(), c)
    }

    pub fn param(p: &Symbol) -> Self {
        Expr::coeff(Coeff::param(p))
    }

    pub fn var(v: &Symbol) -> Self {
        Expr::term(Monomial::var(v), Coeff::one())
    }

    pub fn power(v: &Symbol, p: Q64) -> Self {
        Expr::term(Monomial::power(v, p), Coeff::one())
    }

    /// `exp(slope * v)`.
    pub fn exp(v: &Symbol, slope: ParamPoly) -> Result<Self> {
        if slope.total_degree() > 1 {
            return Err(Error::NotRepresentable(format!(
                "exponential slope {} has degree above one",
                slope
            )));
        }
        Ok(Expr::term(Monomial::exp(v, slope), Coeff::one()))
    }

    pub fn term(m: Monomial, c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Expr { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Coeff)>>(it: I) -> Self {
        let mut e = Expr::zero();
        for (m, c) in it {
            e.add_term(m, c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_coeff().is_some_and(|c| c.is_one())
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coefficient_of(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn single_term(&self) -> Option<(&Monomial, &Coeff)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// The coefficient when the expression involves no variables.
    pub fn as_coeff(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.as_coeff()?.as_rational()
    }

    pub fn is_var_free(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        self.terms
            .keys()
            .flat_map(|m| m.variables().cloned())
            .collect()
    }

    /// Parameters appearing in coefficients or exponential slopes.
    pub fn parameters(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for (m, c) in &self.terms {
            out.extend(c.symbols());
            for s in m.exps().values() {
                out.extend(s.symbols());
            }
        }
        out
    }

    pub fn depends_on(&self, v: &Symbol) -> bool {
        self.terms.keys().any(|m| m.depends_on(v))
    }

    fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get() + &c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn scale(&self, c: &Coeff) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Expr::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), k * c)))
    }

    pub fn scale_rational(&self, r: &BigRational) -> Expr {
        self.scale(&Coeff::rational(r.clone()))
    }

    pub fn mul_term(&self, m: &Monomial, c: &Coeff) -> Expr {
        Expr::from_terms(self.terms.iter().map(|(k, v)| (k.mul(m), v * c)))
    }

    /// Exact partial derivative with respect to a variable.
    pub fn diff(&self, v: &Symbol) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let p = m.power_of(v);
            if !p.is_zero() {
                let pc = Coeff::rational(q_to_big(&p));
                out.add_term(m.with_power(v, p - Q64::one()), c * &pc);
            }
            if let Some(s) = m.slope_of(v) {
                out.add_term(m.clone(), c * &Coeff::from_poly(s.clone()));
            }
        }
        out
    }

    /// Multiplicative inverse of a single-term expression.
    pub fn inverse(&self) -> Result<Expr> {
        let (m, c) = self.single_term().ok_or_else(|| {
            if self.is_zero() {
                Error::DivisionByZero("inverse of zero".into())
            } else {
                Error::NotRepresentable(format!("inverse of multi-term expression {}", self))
            }
        })?;
        let ci = c
            .recip()
            .ok_or_else(|| Error::DivisionByZero("zero coefficient".into()))?;
        Ok(Expr::term(m.pow(-Q64::one()), ci))
    }

    /// Division by a single-term or variable-free expression.
    pub fn div(&self, d: &Expr) -> Result<Expr> {
        if d.is_zero() {
            return Err(Error::DivisionByZero(format!("{} / 0", self)));
        }
        if let Some(c) = d.as_coeff() {
            let ci = c.recip().ok_or_else(|| Error::DivisionByZero("zero".into()))?;
            return Ok(self.scale(&ci));
        }
        Ok(self * &d.inverse()?)
    }

    pub fn pow_int(&self, e: i64) -> Result<Expr> {
        if e < 0 {
            return self.inverse()?.pow_int(-e);
        }
        let mut out = Expr::one();
        let mut base = self.clone();
        let mut k = e as u64;
        while k > 0 {
            if k & 1 == 1 {
                out = &out * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(out)
    }

    /// Exact rational power. Non-integer powers need a single-term base whose
    /// coefficient is a perfect power.
    pub fn pow_rational(&self, q: Q64) -> Result<Expr> {
        if q.is_integer() {
            return self.pow_int(*q.numer());
        }
        if self.is_zero() {
            return if *q.numer() > 0 {
                Ok(Expr::zero())
            } else {
                Err(Error::DivisionByZero("negative power of zero".into()))
            };
        }
        let (m, c) = self.single_term().ok_or_else(|| {
            Error::NotRepresentable(format!("({})^({}) of a multi-term base", self, q))
        })?;
        let r = *q.denom() as u32;
        let root = c.root(r).ok_or_else(|| {
            Error::NotRepresentable(format!("coefficient {} has no exact root of order {}", c, r))
        })?;
        let cc = root.pow(*q.numer()).ok_or_else(|| {
            Error::DivisionByZero("zero coefficient".into())
        })?;
        Ok(Expr::term(m.pow(q), cc))
    }

    /// Simultaneous substitution of variables.
    ///
    /// Powers go through [`Expr::pow_rational`]; an exponential of a
    /// substituted variable requires an affine image without constant part
    /// whose slopes stay of degree at most one.
    pub fn substitute_affine(&self, assign: &BTreeMap<Symbol, Expr>) -> Result<Expr> {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let mut keep = Monomial::one();
            let mut factor = Expr::coeff(c.clone());
            for (v, p) in m.pows() {
                match assign.get(v) {
                    Some(img) => factor = &factor * &img.pow_rational(*p)?,
                    None => keep = keep.mul(&Monomial::power(v, *p)),
                }
            }
            for (v, s) in m.exps() {
                match assign.get(v) {
                    Some(img) => factor = &factor * &exp_of_affine(s, img)?,
                    None => keep = keep.mul(&Monomial::exp(v, s.clone())),
                }
            }
            for (km, kc) in factor.mul_term(&keep, &Coeff::one()).terms {
                out.add_term(km, kc);
            }
        }
        Ok(out)
    }

    /// Floating-point evaluation of the normal form.
    pub fn eval_numeric(&self, point: &Point) -> Result<f64> {
        let lookup = |s: &Symbol| point.get(s).copied();
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let cv = eval_coeff(c, point)?;
            acc += cv * eval_monomial(m, point, &lookup)?;
        }
        Ok(acc)
    }

    pub fn map_coeffs<F: Fn(&Coeff) -> Coeff>(&self, f: F) -> Expr {
        Expr::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }
}

pub(crate) fn q_to_big(q: &Q64) -> BigRational {
    BigRational::new((*q.numer()).into(), (*q.denom()).into())
}

pub(crate) fn eval_coeff(c: &Coeff, point: &Point) -> Result<f64> {
    let lookup = |s: &Symbol| point.get(s).copied();
    for s in c.symbols() {
        if !point.contains_key(&s) {
            return Err(Error::Unassigned(s));
        }
    }
    let n = c.num().eval(&lookup).unwrap_or(f64::NAN);
    if c.den().is_one() {
        return Ok(n);
    }
    let d = c.den().eval(&lookup).unwrap_or(f64::NAN);
    if d == 0.0 {
        return Err(Error::DivisionByZero(format!("denominator {} vanishes", c.den())));
    }
    Ok(n / d)
}

fn eval_monomial<F: Fn(&Symbol) -> Option<f64>>(
    m: &Monomial,
    point: &Point,
    lookup: &F,
) -> Result<f64> {
    let mut t = 1.0;
    for (v, p) in m.pows() {
        let x = *point.get(v).ok_or_else(|| Error::Unassigned(v.clone()))?;
        if p.is_integer() {
            if x == 0.0 && *p.numer() < 0 {
                return Err(Error::DivisionByZero(format!("{}^{} at {} = 0", v, p, v)));
            }
            t *= x.powi(*p.numer() as i32);
        } else {
            if x < 0.0 {
                return Err(Error::DomainError(format!(
                    "{}^({}) at negative {} = {}",
                    v, p, v, x
                )));
            }
            if x == 0.0 && *p.numer() < 0 {
                return Err(Error::DivisionByZero(format!("{}^({}) at {} = 0", v, p, v)));
            }
            let e = *p.numer() as f64 / *p.denom() as f64;
            t *= if *p.denom() == 2 && *p.numer() == 1 {
                x.sqrt()
            } else {
                x.powf(e)
            };
        }
    }
    for (v, s) in m.exps() {
        let x = *point.get(v).ok_or_else(|| Error::Unassigned(v.clone()))?;
        for p in s.symbols() {
            if !point.contains_key(&p) {
                return Err(Error::Unassigned(p));
            }
        }
        let sv = s.eval(lookup).unwrap_or(f64::NAN);
        t *= (sv * x).exp();
    }
    Ok(t)
}

fn exp_of_affine(slope: &ParamPoly, img: &Expr) -> Result<Expr> {
    let mut out = Expr::one();
    for (m, c) in img.terms() {
        if m.is_one() {
            return Err(Error::NotRepresentable(format!(
                "exp of an affine image with constant part {}",
                c
            )));
        }
        let v = match (m.pows().iter().next(), m.pows().len(), m.exps().len()) {
            (Some((v, p)), 1, 0) if p.is_one() => v,
            _ => {
                return Err(Error::NotRepresentable(format!(
                    "exp of non-affine image {}",
                    img
                )))
            }
        };
        if !c.is_polynomial() {
            return Err(Error::NotRepresentable(format!(
                "exp slope {} * {} is not polynomial",
                slope, c
            )));
        }
        let s = slope * c.num();
        out = &out * &Expr::exp(v, s)?;
    }
    Ok(out)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let t = fmt_term(m, c);
            if k == 0 {
                f.write_str(&t)?;
            } else if let Some(rest) = t.strip_prefix('-') {
                write!(f, " - {}", rest)?;
            } else {
                write!(f, " + {}", t)?;
            }
        }
        Ok(())
    }
}

fn fmt_term(m: &Monomial, c: &Coeff) -> String {
    if m.is_one() {
        return c.to_string();
    }
    if let Some(r) = c.as_rational() {
        if r.is_one() {
            return m.to_string();
        }
        if r == -BigRational::one() {
            return format!("-{}", m);
        }
        let s = if r.is_integer() {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        };
        return format!("{}*{}", s, m);
    }
    format!("{}*{}", c.fmt_factor(), m)
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        let (big, small) = if self.terms.len() >= rhs.terms.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $f:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $f(self, rhs: Expr) -> Expr {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $f(self, rhs: &Expr) -> Expr {
                (&self).$f(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $f(self, rhs: Expr) -> Expr {
                self.$f(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl AddAssign<&Expr> for Expr {
    fn add_assign(&mut self, rhs: &Expr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl AddAssign for Expr {
    fn add_assign(&mut self, rhs: Expr) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl SubAssign<&Expr> for Expr {
    fn sub_assign(&mut self, rhs: &Expr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let mut out = Expr::zero();
        for e in iter {
            out += e;
        }
        out
    }
}

impl Zero for Expr {
    fn zero() -> Self {
        Expr::zero()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::sym;

    fn x() -> Expr {
        Expr::var(&sym("x"))
    }
    fn z() -> Expr {
        Expr::var(&sym("z"))
    }
    fn a() -> Expr {
        Expr::param(&sym("a"))
    }
    fn e_az(k: i64) -> Expr {
        Expr::exp(&sym("z"), ParamPoly::var(&sym("a")).scale(&poly::rat(k, 1))).unwrap()
    }

    #[test]
    fn additive_inverse_is_zero() {
        assert!((x() + (-x())).is_zero());
    }

    #[test]
    fn square_roots_multiply_to_identity() {
        let r = x().pow_rational(Q64::new(1, 2)).unwrap();
        assert_eq!(&r * &r, x());
    }

    #[test]
    fn exponentials_combine() {
        assert_eq!(&e_az(-1) * &e_az(-1), e_az(-2));
        assert_eq!(&e_az(1) * &e_az(-1), Expr::one());
    }

    #[test]
    fn derivatives_match_hand_values() {
        let f = &(&x() * &x()) - &z();
        assert_eq!(f.diff(&sym("x")), Expr::int(2) * x());
        assert!(a().diff(&sym("x")).is_zero());
        let b = Expr::param(&sym("b"));
        let g = &(&(&a() * &x()) + &b) * &e_az(-1);
        let expect = -(&(&a() * &(&(&a() * &x()) + &b)) * &e_az(-1));
        assert_eq!(g.diff(&sym("z")), expect);
    }

    #[test]
    fn rational_powers() {
        assert_eq!(
            x().pow_rational(Q64::new(1, 2)).unwrap(),
            Expr::power(&sym("x"), Q64::new(1, 2))
        );
        assert_eq!(Expr::int(4).pow_rational(Q64::new(1, 2)).unwrap(), Expr::int(2));
        assert!(matches!(
            (x() + z()).pow_rational(Q64::new(1, 2)),
            Err(Error::NotRepresentable(_))
        ));
    }

    #[test]
    fn affine_substitution() {
        let mut m = BTreeMap::new();
        m.insert(sym("x"), &x() + &(&a() * &z()));
        let sq = (&x() * &x()).substitute_affine(&m).unwrap();
        let expect = &(&(&x() * &x()) + &(&Expr::int(2) * &(&a() * &(&x() * &z()))))
            + &(&(&a() * &a()) * &(&z() * &z()));
        assert_eq!(sq, expect);
        let mut id = BTreeMap::new();
        id.insert(sym("x"), x());
        id.insert(sym("z"), z());
        let g = &e_az(-1) * &x();
        assert_eq!(g.substitute_affine(&id).unwrap(), g);
    }

    #[test]
    fn substitution_into_exponential_matches_numeric() {
        let mut m = BTreeMap::new();
        m.insert(sym("x"), &x() + &(&a() * &z()));
        let g = &e_az(-1) * &x();
        let s = g.substitute_affine(&m).unwrap();
        assert_eq!(s, &e_az(-1) * &(&x() + &(&a() * &z())));
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..20 {
            let (xv, zv, av) = (next(), next(), next());
            let p: Point = [(sym("x"), xv), (sym("z"), zv), (sym("a"), av)].into_iter().collect();
            let direct = (-av * zv).exp() * (xv + av * zv);
            assert!((s.eval_numeric(&p).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn numeric_evaluation() {
        let p: Point = [(sym("x"), 2.0), (sym("z"), 1.0)].into_iter().collect();
        assert_eq!((&(&x() * &x()) - &z()).eval_numeric(&p).unwrap(), 3.0);
        let q: Point = [(sym("x"), -1.0)].into_iter().collect();
        assert!(matches!(
            x().pow_rational(Q64::new(1, 2)).unwrap().eval_numeric(&q),
            Err(Error::DomainError(_))
        ));
        let r: Point = [(sym("a"), 1.0), (sym("z"), 0.0)].into_iter().collect();
        assert_eq!(e_az(-1).eval_numeric(&r).unwrap(), 1.0);
    }

    #[test]
    fn display_forms() {
        assert_eq!(Expr::power(&sym("x"), Q64::new(1, 2)).to_string(), "x^(1/2)");
        assert_eq!(e_az(-1).to_string(), "exp(-a*z)");
        let t = x().div(&(Expr::int(2) * a())).unwrap();
        assert_eq!(t.to_string(), "1/(2*a)*x");
    }
}
