//! Text syntax for expressions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! primary := integer | symbol | '(' expr ')' | 'exp' '(' expr ')' | 'sqrt' '(' expr ')'
//! exponent:= integer | '(' '-'? integer ('/' integer)? ')'
//! ```
//!
//! `exp` accepts only `c * v` with `c` a polynomial in the parameters and `v`
//! a variable; divisors must be single terms or free of variables.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::expr::{Expr, ParamPoly, Q64};
use crate::symbol::Symbol;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && (chars[i].1 == '.' || chars[i].1 == 'e' || chars[i].1 == 'E') {
                return Err(Error::Syntax {
                    pos: chars[i].0,
                    msg: "floating point literals are not allowed; write p/q".into(),
                });
            }
            let s: String = chars[start..i].iter().map(|&(_, c)| c).collect();
            out.push((pos, Tok::Num(s.parse().expect("digits"))));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|&(_, c)| c).collect();
            out.push((pos, Tok::Ident(s)));
        } else if "+-*/^()".contains(c) {
            out.push((pos, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Syntax {
                pos,
                msg: format!("unexpected character `{}`", c),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    vars: &'a [Symbol],
    params: &'a [Symbol],
}

impl Parser<'_> {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{}`", c)))
        }
    }

    fn syntax(&self, msg: String) -> Error {
        Error::Syntax {
            pos: self.pos(),
            msg,
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.peek() == Some(&Tok::Op('/')) {
                self.at += 1;
                let pos = self.pos();
                let d = self.unary()?;
                acc = acc.div(&d).map_err(|e| at(pos, e))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let pos = self.pos();
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let q = self.exponent()?;
        let r = if q.is_integer() {
            base.pow_int(*q.numer())
        } else {
            base.pow_rational(q)
        };
        r.map_err(|e| at(pos, e))
    }

    fn integer(&mut self) -> Result<i64> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let v = i64::try_from(n.clone()).map_err(|_| self.syntax("exponent too large".into()))?;
                self.at += 1;
                Ok(v)
            }
            _ => Err(self.syntax("expected an integer".into())),
        }
    }

    fn exponent(&mut self) -> Result<Q64> {
        if self.eat('(') {
            let neg = self.eat('-');
            let n = self.integer()?;
            let d = if self.eat('/') { self.integer()? } else { 1 };
            self.expect(')')?;
            if d == 0 {
                return Err(self.syntax("zero denominator in exponent".into()));
            }
            Ok(Q64::new(if neg { -n } else { n }, d))
        } else {
            Ok(Q64::from_integer(self.integer()?))
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.at += 1;
                Ok(Expr::rational(BigRational::from_integer(n)))
            }
            Some(Tok::Op('(')) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if name == "exp" || name == "sqrt" {
                    self.expect('(')?;
                    let inner_pos = self.pos();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return if name == "exp" {
                        exp_of(&arg).map_err(|e| at(inner_pos, e))
                    } else {
                        arg.pow_rational(Q64::new(1, 2)).map_err(|e| at(inner_pos, e))
                    };
                }
                if let Some(v) = self.vars.iter().find(|v| v.name() == name) {
                    Ok(Expr::var(v))
                } else if let Some(p) = self.params.iter().find(|p| p.name() == name) {
                    Ok(Expr::param(p))
                } else {
                    Err(Error::Syntax {
                        pos,
                        msg: format!("undeclared symbol `{}`", name),
                    })
                }
            }
            Some(Tok::Op(c)) => Err(self.syntax(format!("unexpected `{}`", c))),
            None => Err(self.syntax("unexpected end of input".into())),
        }
    }
}

fn at(pos: usize, e: Error) -> Error {
    match e {
        Error::Syntax { .. } | Error::NotRepresentableAt { .. } => e,
        other => Error::NotRepresentableAt {
            pos,
            msg: other.to_string(),
        },
    }
}

/// `exp(c·v)` for an argument that is a parameter polynomial times one variable.
fn exp_of(arg: &Expr) -> Result<Expr> {
    if arg.is_zero() {
        return Ok(Expr::one());
    }
    let vars = arg.variables();
    if vars.len() != 1 {
        return Err(Error::NotRepresentable(format!(
            "exp argument {} is not linear in one variable",
            arg
        )));
    }
    let v = vars.into_iter().next().expect("one variable");
    let mut slope = ParamPoly::zero();
    for (m, c) in arg.terms() {
        if *m != crate::expr::Monomial::var(&v) || !c.is_polynomial() {
            return Err(Error::NotRepresentable(format!(
                "exp argument {} is not a polynomial multiple of {}",
                arg, v
            )));
        }
        slope = &slope + c.num();
    }
    Expr::exp(&v, slope)
}

/// Parses `text` with the given variable and parameter names in scope.
pub fn parse_expr(text: &str, vars: &[Symbol], params: &[Symbol]) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        vars,
        params,
    };
    if p.toks.is_empty() {
        return Err(p.syntax("empty expression".into()));
    }
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(p.syntax("trailing input".into()));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::sym;

    fn ctx() -> (Vec<Symbol>, Vec<Symbol>) {
        (
            vec![sym("x"), sym("y"), sym("z")],
            vec![sym("a"), sym("b"), sym("sigma0")],
        )
    }

    fn p(s: &str) -> Result<Expr> {
        let (v, q) = ctx();
        parse_expr(s, &v, &q)
    }

    #[test]
    fn ou_drift() {
        let e = p("a*x + b").unwrap();
        let want = &(&Expr::param(&sym("a")) * &Expr::var(&sym("x"))) + &Expr::param(&sym("b"));
        assert_eq!(e, want);
    }

    #[test]
    fn cir_diffusion() {
        let e = p("sigma0*sqrt(x)").unwrap();
        let want = &Expr::param(&sym("sigma0")) * &Expr::power(&sym("x"), Q64::new(1, 2));
        assert_eq!(e, want);
    }

    #[test]
    fn closure_boundary() {
        assert!(matches!(p("exp(x^2)"), Err(Error::NotRepresentableAt { pos: 4, .. })));
        assert!(matches!(p("1/(x + 1)"), Err(Error::NotRepresentableAt { .. })));
        assert!(matches!(p("x +"), Err(Error::Syntax { pos: 3, .. })));
        assert!(matches!(p("0.5*x"), Err(Error::Syntax { pos: 1, .. })));
        assert!(matches!(p("q*x"), Err(Error::Syntax { pos: 0, .. })));
    }

    #[test]
    fn printed_forms_reparse() {
        for s in [
            "x^(1/2)*exp(-a*z)",
            "1/(2*a)*x - 1/2*b^2",
            "(a + 2*b^2)/(2*a)*x*exp((a + 1)*z)",
            "x^(-1)*y^3 - 7/3",
            "-x^2 + z",
            "exp(-2*a*z)*(a*x + b)",
        ] {
            let e = p(s).unwrap();
            assert_eq!(p(&e.to_string()).unwrap(), e, "{} printed as {}", s, e);
        }
        assert_eq!(p("-x^2").unwrap(), -(&Expr::var(&sym("x")) * &Expr::var(&sym("x"))));
    }
}
