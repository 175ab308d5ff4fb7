//! Expressions lowered to flat floating-point programs for path simulation.

use super::{eval_coeff, Expr, Point};
use crate::error::{Error, Result};
use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy)]
enum Pow {
    Int(i32),
    Sqrt,
    Real(f64),
}

#[derive(Debug, Clone)]
struct Term {
    c: f64,
    pows: Vec<(usize, Pow)>,
    exps: Vec<(usize, f64)>,
}

/// An expression with parameters bound, evaluated on a state slice.
#[derive(Debug, Clone)]
pub struct Compiled {
    terms: Vec<Term>,
}

impl Compiled {
    pub fn new(e: &Expr, vars: &[Symbol], params: &Point) -> Result<Self> {
        let idx = |v: &Symbol| {
            vars.iter()
                .position(|s| s == v)
                .ok_or_else(|| Error::UndeclaredSymbol(v.to_string()))
        };
        let mut terms = Vec::with_capacity(e.num_terms());
        for (m, c) in e.terms() {
            let cv = eval_coeff(c, params)?;
            let mut pows = Vec::new();
            for (v, p) in m.pows() {
                let k = if p.is_integer() {
                    Pow::Int(*p.numer() as i32)
                } else if *p.numer() == 1 && *p.denom() == 2 {
                    Pow::Sqrt
                } else {
                    Pow::Real(*p.numer() as f64 / *p.denom() as f64)
                };
                pows.push((idx(v)?, k));
            }
            let mut exps = Vec::new();
            for (v, s) in m.exps() {
                let sv = s
                    .eval(&|p: &Symbol| params.get(p).copied())
                    .ok_or_else(|| Error::Unassigned(s.symbols().into_iter().next().unwrap_or_else(|| v.clone())))?;
                exps.push((idx(v)?, sv));
            }
            terms.push(Term { c: cv, pows, exps });
        }
        Ok(Compiled { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Constant value when no variable appears.
    pub fn as_constant(&self) -> Option<f64> {
        if self.terms.iter().all(|t| t.pows.is_empty() && t.exps.is_empty()) {
            Some(self.terms.iter().map(|t| t.c).sum())
        } else {
            None
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let mut v = t.c;
            for &(i, p) in &t.pows {
                v *= match p {
                    Pow::Int(1) => x[i],
                    Pow::Int(k) => x[i].powi(k),
                    Pow::Sqrt => x[i].sqrt(),
                    Pow::Real(r) => x[i].powf(r),
                };
            }
            if !t.exps.is_empty() {
                let s: f64 = t.exps.iter().map(|&(i, s)| s * x[i]).sum();
                v *= s.exp();
            }
            acc += v;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{ParamPoly, Q64};
    use crate::symbol::sym;

    #[test]
    fn agrees_with_reference_evaluation() {
        let (x, z, a) = (sym("x"), sym("z"), sym("a"));
        let e = &(&Expr::power(&x, Q64::new(1, 2)) * &Expr::exp(&z, ParamPoly::var(&a)).unwrap())
            + &(&Expr::param(&a) * &Expr::power(&x, Q64::new(-2, 1)));
        let params: Point = [(a.clone(), 0.7)].into_iter().collect();
        let c = Compiled::new(&e, &[x.clone(), z.clone()], &params).unwrap();
        let p: Point = [(x, 1.3), (z, -0.4), (a, 0.7)].into_iter().collect();
        assert!((c.eval(&[1.3, -0.4]) - e.eval_numeric(&p).unwrap()).abs() < 1e-14);
    }
}
