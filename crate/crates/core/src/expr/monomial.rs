use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};

use super::poly::ParamPoly;
use crate::symbol::Symbol;

/// Rational exponent of a variable.
pub type Q64 = Ratio<i64>;

/// A product `Π v^{p_v} · Π exp(s_v · v)` over variables.
///
/// Exponents are rational and exponential slopes are parameter polynomials
/// of total degree at most one. Zero exponents and zero slopes are never
/// stored, so structural equality is mathematical equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pows: BTreeMap<Symbol, Q64>,
    exps: BTreeMap<Symbol, ParamPoly>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: &Symbol) -> Self {
        Monomial::power(v, Q64::one())
    }

    pub fn power(v: &Symbol, p: Q64) -> Self {
        let mut m = Monomial::one();
        if !p.is_zero() {
            m.pows.insert(v.clone(), p);
        }
        m
    }

    pub fn exp(v: &Symbol, slope: ParamPoly) -> Self {
        let mut m = Monomial::one();
        if !slope.is_zero() {
            m.exps.insert(v.clone(), slope);
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.pows.is_empty() && self.exps.is_empty()
    }

    pub fn pows(&self) -> &BTreeMap<Symbol, Q64> {
        &self.pows
    }

    pub fn exps(&self) -> &BTreeMap<Symbol, ParamPoly> {
        &self.exps
    }

    pub fn power_of(&self, v: &Symbol) -> Q64 {
        self.pows.get(v).copied().unwrap_or_else(Q64::zero)
    }

    pub fn slope_of(&self, v: &Symbol) -> Option<&ParamPoly> {
        self.exps.get(v)
    }

    pub fn depends_on(&self, v: &Symbol) -> bool {
        self.pows.contains_key(v) || self.exps.contains_key(v)
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.pows.keys().chain(self.exps.keys())
    }

    /// Product of monomials. Slopes add, so the degree bound is preserved.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.clone();
        for (v, p) in &other.pows {
            let e = out.pows.entry(v.clone()).or_insert_with(Q64::zero);
            *e += p;
            if e.is_zero() {
                out.pows.remove(v);
            }
        }
        for (v, s) in &other.exps {
            let e = out.exps.entry(v.clone()).or_default();
            *e = &*e + s;
            if e.is_zero() {
                out.exps.remove(v);
            }
        }
        out
    }

    /// Integer or rational power; exponential slopes are scaled by `q`.
    pub fn pow(&self, q: Q64) -> Monomial {
        if q.is_zero() {
            return Monomial::one();
        }
        let qb = num_rational::BigRational::new((*q.numer()).into(), (*q.denom()).into());
        Monomial {
            pows: self.pows.iter().map(|(v, p)| (v.clone(), p * q)).collect(),
            exps: self
                .exps
                .iter()
                .map(|(v, s)| (v.clone(), s.scale(&qb)))
                .collect(),
        }
    }

    pub fn without_power(&self, v: &Symbol) -> Monomial {
        let mut m = self.clone();
        m.pows.remove(v);
        m
    }

    pub fn without_var(&self, v: &Symbol) -> Monomial {
        let mut m = self.clone();
        m.pows.remove(v);
        m.exps.remove(v);
        m
    }

    pub fn with_power(&self, v: &Symbol, p: Q64) -> Monomial {
        let mut m = self.clone();
        if p.is_zero() {
            m.pows.remove(v);
        } else {
            m.pows.insert(v.clone(), p);
        }
        m
    }

    pub fn is_polynomial(&self) -> bool {
        self.exps.is_empty() && self.pows.values().all(|p| p.is_integer() && *p.numer() > 0)
    }

    pub fn degree(&self) -> Q64 {
        self.pows.values().fold(Q64::zero(), |a, p| a + p)
    }
}

pub(crate) fn fmt_q(q: &Q64) -> String {
    if q.is_integer() {
        if *q.numer() < 0 {
            format!("({})", q.numer())
        } else {
            q.numer().to_string()
        }
    } else {
        format!("({}/{})", q.numer(), q.denom())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            Ok(())
        };
        for (v, p) in &self.pows {
            sep(f)?;
            if p.is_one() {
                write!(f, "{}", v)?;
            } else {
                write!(f, "{}^{}", v, fmt_q(p))?;
            }
        }
        for (v, s) in &self.exps {
            sep(f)?;
            if s.is_one() {
                write!(f, "exp({})", v)?;
            } else if let Some(c) = s.as_constant() {
                if c == -num_rational::BigRational::one() {
                    write!(f, "exp(-{})", v)?;
                } else {
                    write!(f, "exp({}*{})", super::poly::fmt_rational(&c), v)?;
                }
            } else if s.num_terms() == 1 {
                write!(f, "exp({}*{})", s, v)?;
            } else {
                write!(f, "exp(({})*{})", s, v)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
