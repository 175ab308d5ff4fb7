//! Time-extended SDE models and their generator.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::matrix::{self, Mat};
use crate::expr::{Expr, Point};
use crate::symbol::Symbol;

/// Open interval `(lo, hi)`; infinite bounds allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(default = "neg_inf")]
    pub lo: f64,
    #[serde(default = "pos_inf")]
    pub hi: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

impl Interval {
    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    /// Finite box used for random probes: unbounded sides are cut at
    /// distance two from the finite end (or to `[-1, 1]`), then shrunk by
    /// ten percent on each side.
    pub fn probe_box(&self) -> (f64, f64) {
        let (lo, hi) = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo, self.hi),
            (true, false) => (self.lo, self.lo + 2.0),
            (false, true) => (self.hi - 2.0, self.hi),
            (false, false) => return (-1.0, 1.0),
        };
        let w = hi - lo;
        (lo + 0.1 * w, hi - 0.1 * w)
    }

    fn anchor(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            let (a, b) = self.probe_box();
            0.5 * (a + b)
        }
    }
}

/// An SDE `dX = μ dt + σ dW` on `n` variables driven by `m` Brownian motions.
#[derive(Debug, Clone, PartialEq)]
pub struct Sde {
    pub name: String,
    pub vars: Vec<Symbol>,
    pub time_var: Option<usize>,
    pub params: Vec<Symbol>,
    pub domain: Vec<Interval>,
    pub drift: Vec<Expr>,
    pub diffusion: Mat,
    pub nonexplosive: bool,
    a: Mat,
}

/// `A = ½ σ σᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSquare(pub Mat);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankProbe {
    pub ranks: Vec<usize>,
    pub rank: usize,
    pub constant: bool,
}

impl Sde {
    pub fn new(
        name: &str,
        vars: Vec<Symbol>,
        time_var: Option<&str>,
        params: Vec<Symbol>,
        drift: Vec<Expr>,
        diffusion: Mat,
        nonexplosive: bool,
    ) -> Result<Self> {
        let n = vars.len();
        let time_var = match time_var {
            None => None,
            Some(t) => Some(
                vars.iter()
                    .position(|v| v.name() == t)
                    .ok_or_else(|| Error::UndeclaredSymbol(t.to_string()))?,
            ),
        };
        let sde = Sde {
            name: name.to_string(),
            domain: vec![Interval::REAL; n],
            a: Vec::new(),
            vars,
            time_var,
            params,
            drift,
            diffusion,
            nonexplosive,
        };
        sde.validate()?;
        Ok(sde.with_cache())
    }

    pub fn with_domain(mut self, var: &str, iv: Interval) -> Result<Self> {
        let i = self
            .var_index(var)
            .ok_or_else(|| Error::UndeclaredSymbol(var.to_string()))?;
        if !(iv.lo < iv.hi) {
            return Err(Error::InvalidModel(format!("empty domain for {}", var)));
        }
        self.domain[i] = iv;
        Ok(self)
    }

    fn with_cache(mut self) -> Self {
        let st = matrix::transpose(&self.diffusion);
        let half = Expr::ratio(1, 2);
        self.a = matrix::scale(&matrix::matmul(&self.diffusion, &st), &half);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        let distinct: BTreeSet<_> = self.vars.iter().chain(&self.params).collect();
        if distinct.len() != n + self.params.len() {
            return Err(Error::DeclarationMismatch(
                "variables and parameters must be distinct".into(),
            ));
        }
        if self.drift.len() != n {
            return Err(Error::Shape(format!(
                "drift has {} entries for {} variables",
                self.drift.len(),
                n
            )));
        }
        if self.diffusion.len() != n {
            return Err(Error::Shape(format!(
                "diffusion has {} rows for {} variables",
                self.diffusion.len(),
                n
            )));
        }
        let m = matrix::cols(&self.diffusion);
        if m == 0 || self.diffusion.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("diffusion rows must share a positive width".into()));
        }
        for e in self.drift.iter().chain(self.diffusion.iter().flatten()) {
            self.check_expr(e)?;
        }
        if let Some(t) = self.time_var {
            if !self.drift[t].is_one() || self.diffusion[t].iter().any(|e| !e.is_zero()) {
                return Err(Error::InvalidModel(format!(
                    "time variable {} needs drift 1 and zero diffusion",
                    self.vars[t]
                )));
            }
        }
        Ok(())
    }

    /// Every symbol of `e` is declared with the right role.
    pub fn check_expr(&self, e: &Expr) -> Result<()> {
        for v in e.variables() {
            if !self.vars.contains(&v) {
                return Err(if self.params.contains(&v) {
                    Error::DeclarationMismatch(format!("parameter {} used as a variable", v))
                } else {
                    Error::UndeclaredSymbol(v.to_string())
                });
            }
        }
        for p in e.parameters() {
            if !self.params.contains(&p) {
                return Err(if self.vars.contains(&p) {
                    Error::DeclarationMismatch(format!("variable {} used as a parameter", p))
                } else {
                    Error::UndeclaredSymbol(p.to_string())
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn m(&self) -> usize {
        matrix::cols(&self.diffusion)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name() == name)
    }

    pub fn time_symbol(&self) -> Option<&Symbol> {
        self.time_var.map(|t| &self.vars[t])
    }

    /// Indices of variables other than the time variable.
    pub fn spatial(&self) -> Vec<usize> {
        (0..self.n()).filter(|i| Some(*i) != self.time_var).collect()
    }

    pub fn a_matrix(&self) -> &Mat {
        &self.a
    }

    pub fn diffusion_square(&self) -> DiffusionSquare {
        DiffusionSquare(self.a.clone())
    }

    /// `L f = A^{ij} ∂_i ∂_j f + μ^i ∂_i f`.
    pub fn generator_apply(&self, f: &Expr) -> Expr {
        let grads: Vec<Expr> = self.vars.iter().map(|v| f.diff(v)).collect();
        let mut out = Expr::zero();
        for (i, g) in grads.iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            if !self.drift[i].is_zero() {
                out += &self.drift[i] * g;
            }
            for (j, v) in self.vars.iter().enumerate() {
                if !self.a[i][j].is_zero() {
                    out += &self.a[i][j] * &g.diff(v);
                }
            }
        }
        out
    }

    /// The generator without the time variable's drift term.
    pub fn spatial_generator_apply(&self, f: &Expr) -> Expr {
        match self.time_symbol() {
            None => self.generator_apply(f),
            Some(t) => &self.generator_apply(f) - &f.diff(t),
        }
    }

    /// Directional derivative `Y(f) = Y^i ∂_i f`.
    pub fn vector_field_apply(&self, y: &[Expr], f: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (yi, v) in y.iter().zip(&self.vars) {
            if !yi.is_zero() {
                out += yi * &f.diff(v);
            }
        }
        out
    }

    pub fn gradient(&self, f: &Expr) -> Vec<Expr> {
        self.vars.iter().map(|v| f.diff(v)).collect()
    }

    /// Jacobian `J[i][k] = ∂_k f^i`.
    pub fn jacobian(&self, f: &[Expr]) -> Mat {
        f.iter().map(|fi| self.gradient(fi)).collect()
    }

    pub fn anchor_point(&self, params: &Point) -> Point {
        let mut p = params.clone();
        for (v, iv) in self.vars.iter().zip(&self.domain) {
            p.insert(v.clone(), iv.anchor());
        }
        p
    }

    /// A random point in the probe box with parameters drawn from `[1/2, 2]`.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Point {
        let mut p = Point::new();
        for s in &self.params {
            p.insert(s.clone(), rng.random_range(0.5..2.0));
        }
        for (v, iv) in self.vars.iter().zip(&self.domain) {
            let (lo, hi) = iv.probe_box();
            p.insert(v.clone(), rng.random_range(lo..hi));
        }
        p
    }

    /// Probe points for numeric cross-checks; the first is the anchor.
    pub fn probe_points(&self, trials: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(trials);
        if trials == 0 {
            return out;
        }
        let first = self.random_point(&mut rng);
        let params: Point = first
            .iter()
            .filter(|(k, _)| self.params.contains(k))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        out.push(self.anchor_point(&params));
        while out.len() < trials {
            out.push(self.random_point(&mut rng));
        }
        out
    }

    /// Numeric rank of `A` at probe points.
    pub fn rank_probe(&self, trials: usize, seed: u64) -> Result<RankProbe> {
        if trials == 0 {
            return Err(Error::InvalidConfig("rank probe needs at least one trial".into()));
        }
        let mut ranks = Vec::with_capacity(trials);
        for p in self.probe_points(trials, seed) {
            let mut num = Vec::with_capacity(self.n());
            let mut ok = true;
            for row in &self.a {
                let mut r = Vec::with_capacity(self.n());
                for e in row {
                    match e.eval_numeric(&p) {
                        Ok(v) if v.is_finite() => r.push(v),
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    break;
                }
                num.push(r);
            }
            if ok {
                ranks.push(numeric_rank(num, 1e-9));
            }
        }
        if ranks.is_empty() {
            return Err(Error::NoValidSample);
        }
        let rank = *ranks.iter().max().unwrap_or(&0);
        let constant = ranks.iter().all(|r| *r == ranks[0]);
        Ok(RankProbe {
            ranks,
            rank,
            constant,
        })
    }
}

/// Rank by Gaussian elimination with partial pivoting.
pub fn numeric_rank(mut a: Vec<Vec<f64>>, tol: f64) -> usize {
    let rows = a.len();
    let cols = a.first().map(|r| r.len()).unwrap_or(0);
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (piv, val) = (rank..rows)
            .map(|r| (r, a[r][c].abs()))
            .fold((rank, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if val <= tol * scale {
            continue;
        }
        a.swap(rank, piv);
        for r in rank + 1..rows {
            let f = a[r][c] / a[rank][c];
            for k in c..cols {
                a[r][k] -= f * a[rank][k];
            }
        }
        rank += 1;
    }
    rank
}
