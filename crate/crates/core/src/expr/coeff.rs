//! Reduced rational functions of the parameters.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::{fmt_rational, ParamPoly};
use crate::symbol::Symbol;

/// `num / den` with `gcd(num, den) = 1` and a monic denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coeff {
    num: ParamPoly,
    den: ParamPoly,
}

impl Coeff {
    pub fn zero() -> Self {
        Coeff {
            num: ParamPoly::zero(),
            den: ParamPoly::one(),
        }
    }

    pub fn one() -> Self {
        Coeff::from_poly(ParamPoly::one())
    }

    pub fn int(n: i64) -> Self {
        Coeff::from_poly(ParamPoly::int(n))
    }

    pub fn rational(r: BigRational) -> Self {
        Coeff::from_poly(ParamPoly::constant(r))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Coeff::rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn param(s: &Symbol) -> Self {
        Coeff::from_poly(ParamPoly::var(s))
    }

    pub fn from_poly(num: ParamPoly) -> Self {
        Coeff {
            num,
            den: ParamPoly::one(),
        }
    }

    /// Builds and reduces `num / den`; `None` if `den` is zero.
    pub fn new(num: ParamPoly, den: ParamPoly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if num.is_zero() {
            return Some(Coeff::zero());
        }
        if let Some(c) = den.as_constant() {
            return Some(Coeff::from_poly(num.scale(&c.recip())));
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides numerator"),
                den.div_exact(&g).expect("gcd divides denominator"),
            )
        };
        let (den, lc) = den.monic();
        Some(Coeff {
            num: num.scale(&lc.recip()),
            den,
        })
    }

    pub fn num(&self) -> &ParamPoly {
        &self.num
    }

    pub fn den(&self) -> &ParamPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn symbols(&self) -> std::collections::BTreeSet<Symbol> {
        let mut s = self.num.symbols();
        s.extend(self.den.symbols());
        s
    }

    pub fn recip(&self) -> Option<Coeff> {
        Coeff::new(self.den.clone(), self.num.clone())
    }

    pub fn scale_rational(&self, r: &BigRational) -> Coeff {
        if r.is_zero() {
            return Coeff::zero();
        }
        Coeff {
            num: self.num.scale(r),
            den: self.den.clone(),
        }
    }

    pub fn pow(&self, e: i64) -> Option<Coeff> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let k = e.unsigned_abs() as u32;
        Some(Coeff {
            num: base.num.pow(k),
            den: base.den.pow(k),
        })
    }

    /// Exact `r`-th root when numerator and denominator are perfect powers
    /// of a single term each.
    pub fn root(&self, r: u32) -> Option<Coeff> {
        if r == 1 {
            return Some(self.clone());
        }
        let rn = single_term_root(&self.num, r)?;
        let rd = single_term_root(&self.den, r)?;
        Coeff::new(rn, rd)
    }

    pub fn eval<F: Fn(&Symbol) -> Option<f64>>(&self, lookup: &F) -> Option<f64> {
        let n = self.num.eval(lookup)?;
        if self.den.is_one() {
            return Some(n);
        }
        Some(n / self.den.eval(lookup)?)
    }

    /// Printed so that the result can be multiplied on the right without
    /// ambiguity, e.g. `(a + 2*b^2)/(2*a)`.
    pub fn fmt_factor(&self) -> String {
        if self.den.is_one() {
            return if self.num.num_terms() > 1 {
                format!("({})", self.num)
            } else {
                self.num.to_string()
            };
        }
        let l = self
            .num
            .terms()
            .map(|(_, c)| c.denom().clone())
            .fold(BigInt::one(), |acc, d| num_integer::Integer::lcm(&acc, &d));
        let l = BigRational::from_integer(l);
        let num = self.num.scale(&l);
        let den = self.den.scale(&l);
        let num_s = if num.num_terms() > 1 {
            format!("({})", num)
        } else {
            num.to_string()
        };
        let den_atomic = den.num_terms() == 1
            && den.terms().next().is_some_and(|(m, c)| {
                (c.is_one() && m.pairs().len() == 1 && m.pairs()[0].1 == 1) || m.is_one()
            });
        if den_atomic {
            format!("{}/{}", num_s, den)
        } else {
            format!("{}/({})", num_s, den)
        }
    }
}

fn integer_root(n: &BigInt, r: u32) -> Option<BigInt> {
    if n.is_negative() {
        if r % 2 == 0 {
            return None;
        }
        return integer_root(&-n, r).map(|v| -v);
    }
    let v = n.nth_root(r);
    (num_traits::pow(v.clone(), r as usize) == *n).then_some(v)
}

fn single_term_root(p: &ParamPoly, r: u32) -> Option<ParamPoly> {
    if p.num_terms() != 1 {
        return None;
    }
    let (m, c) = p.terms().next()?;
    let rn = integer_root(c.numer(), r)?;
    let rd = integer_root(c.denom(), r)?;
    let mut pairs = Vec::new();
    for (s, e) in m.pairs() {
        if e % r != 0 {
            return None;
        }
        pairs.push((s.clone(), e / r));
    }
    Some(ParamPoly::term(
        super::poly::PMono::from_pairs(pairs),
        BigRational::new(rn, rd),
    ))
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            if let Some(c) = self.num.as_constant() {
                return f.write_str(&fmt_rational(&c));
            }
            return write!(f, "{}", self.num);
        }
        f.write_str(&self.fmt_factor())
    }
}

impl fmt::Debug for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Add for &Coeff {
    type Output = Coeff;
    fn add(self, rhs: &Coeff) -> Coeff {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return Coeff::from_poly(&self.num + &rhs.num);
        }
        if self.den == rhs.den {
            return Coeff::new(&self.num + &rhs.num, self.den.clone()).expect("nonzero den");
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        Coeff::new(num, &self.den * &rhs.den).expect("nonzero den")
    }
}

impl Sub for &Coeff {
    type Output = Coeff;
    fn sub(self, rhs: &Coeff) -> Coeff {
        self + &(-rhs)
    }
}

impl Mul for &Coeff {
    type Output = Coeff;
    fn mul(self, rhs: &Coeff) -> Coeff {
        if self.is_zero() || rhs.is_zero() {
            return Coeff::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return Coeff::from_poly(&self.num * &rhs.num);
        }
        if let Some(r) = self.as_rational() {
            return rhs.scale_rational(&r);
        }
        if let Some(r) = rhs.as_rational() {
            return self.scale_rational(&r);
        }
        Coeff::new(&self.num * &rhs.num, &self.den * &rhs.den).expect("nonzero den")
    }
}

impl Div for &Coeff {
    type Output = Option<Coeff>;
    fn div(self, rhs: &Coeff) -> Option<Coeff> {
        Some(self * &rhs.recip()?)
    }
}

impl Neg for &Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Zero for Coeff {
    fn zero() -> Self {
        Coeff::zero()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl Add for Coeff {
    type Output = Coeff;
    fn add(self, rhs: Coeff) -> Coeff {
        &self + &rhs
    }
}

impl One for Coeff {
    fn one() -> Self {
        Coeff::one()
    }
}

impl Mul for Coeff {
    type Output = Coeff;
    fn mul(self, rhs: Coeff) -> Coeff {
        &self * &rhs
    }
}
