//! Antiderivatives inside the expression class.

use num_traits::{One, Zero};

use super::{q_to_big, Coeff, Expr, Monomial, Q64};
use crate::error::{Error, Result};
use crate::symbol::Symbol;

/// An antiderivative of `e` in `v`, term by term.
///
/// Power terms use the power rule, `v^p exp(s v)` with a nonnegative integer
/// `p` is integrated by parts. `v^(-1)` and fractional powers times an
/// exponential leave the class and return `NotRepresentable`.
pub fn integrate(e: &Expr, v: &Symbol) -> Result<Expr> {
    let mut out = Expr::zero();
    for (m, c) in e.terms() {
        out += integrate_term(m, c, v)?;
    }
    Ok(out)
}

fn integrate_term(m: &Monomial, c: &Coeff, v: &Symbol) -> Result<Expr> {
    let p = m.power_of(v);
    match m.slope_of(v) {
        None => {
            if p == -Q64::one() {
                return Err(Error::NotRepresentable(format!(
                    "antiderivative of {}^(-1) in {} is logarithmic",
                    v, v
                )));
            }
            let np = p + Q64::one();
            let k = Coeff::rational(q_to_big(&np).recip());
            Ok(Expr::term(m.with_power(v, np), c * &k))
        }
        Some(s) => {
            if !p.is_integer() || *p.numer() < 0 {
                return Err(Error::NotRepresentable(format!(
                    "antiderivative of {}^{} exp(({})*{}) is not elementary in the class",
                    v, p, s, v
                )));
            }
            let inv_s = Coeff::from_poly(s.clone())
                .recip()
                .expect("stored slopes are nonzero");
            let lead = Expr::term(m.clone(), c * &inv_s);
            if p.is_zero() {
                return Ok(lead);
            }
            let pm = m.with_power(v, p - Q64::one());
            let k = &(c * &inv_s) * &Coeff::rational(q_to_big(&p));
            Ok(&lead - &integrate_term(&pm, &k, v)?)
        }
    }
}
