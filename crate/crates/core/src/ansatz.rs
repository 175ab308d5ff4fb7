//! Symmetry algebras as exact nullspaces of the determining system restricted
//! to a finite function basis.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::determining::{doob_residual, sde_residual, sigma_t_grad, ResidualReport};
use crate::error::{Error, Result};
use crate::expr::{Coeff, Expr, Monomial};
use crate::linalg::{solve_combination, Rref, SparseRow};
use crate::sde::Sde;
use crate::symbol::Symbol;
use crate::transform::{apply_field, InfTransform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Unknowns `(Y, C, τ, H)`.
    General,
    /// Unknowns `(Y, C, τ, k)` with `H = σᵀ∇k`.
    Doob,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::General => "general",
            Mode::Doob => "doob",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Mode::General),
            "doob" => Ok(Mode::Doob),
            _ => Err(Error::InvalidConfig(format!("unknown mode {}", s))),
        }
    }
}

/// One scalar unknown function. `C(a, b)` stands for the antisymmetric pair
/// `C[a][b] = −C[b][a]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Y(usize),
    C(usize, usize),
    Tau,
    H(usize),
    K,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Y(i) => write!(f, "Y[{}]", i),
            Component::C(a, b) => write!(f, "C[{}][{}]", a, b),
            Component::Tau => write!(f, "tau"),
            Component::H(a) => write!(f, "H[{}]", a),
            Component::K => write!(f, "k"),
        }
    }
}

/// Function basis for every unknown component, with optional per-component
/// overrides.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnsatzBasis {
    pub default: Vec<Expr>,
    pub overrides: BTreeMap<Component, Vec<Expr>>,
}

impl AnsatzBasis {
    pub fn uniform(basis: Vec<Expr>) -> Self {
        AnsatzBasis {
            default: basis,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with(mut self, c: Component, basis: Vec<Expr>) -> Self {
        self.overrides.insert(c, basis);
        self
    }

    pub fn for_component(&self, c: Component) -> &[Expr] {
        self.overrides.get(&c).unwrap_or(&self.default)
    }

    /// Basis functions within each list must be distinct, nonzero and
    /// declared in the model.
    pub fn validate(&self, sde: &Sde) -> Result<()> {
        for list in std::iter::once(&self.default).chain(self.overrides.values()) {
            let mut seen = BTreeSet::new();
            for e in list {
                sde.check_expr(e)?;
                if e.is_zero() {
                    return Err(Error::InvalidConfig("zero basis function".into()));
                }
                if !seen.insert(e.clone()) {
                    return Err(Error::InvalidConfig(format!("repeated basis function {}", e)));
                }
            }
        }
        Ok(())
    }
}

/// Monomials of total degree at most `deg` in `vars`, lowest degree first.
pub fn polynomial_basis(vars: &[Symbol], deg: u32) -> Vec<Expr> {
    let mut out = vec![Expr::one()];
    let mut layer = vec![Expr::one()];
    for _ in 0..deg {
        let mut next: Vec<Expr> = Vec::new();
        for e in &layer {
            for v in vars {
                let p = e * &Expr::var(v);
                if !next.contains(&p) {
                    next.push(p);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// All products `a·b`, duplicates removed, order of first appearance kept.
pub fn product_basis(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let mut out: Vec<Expr> = Vec::new();
    for x in a {
        for y in b {
            let p = x * y;
            if !p.is_zero() && !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// A symmetry together with its potential in Doob mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub v: InfTransform,
    pub k: Option<Expr>,
}

impl Generator {
    pub fn new(v: InfTransform, k: Option<Expr>) -> Self {
        Generator { v, k }
    }

    /// `[G1, G2]`, with potential `Y1(k2) − Y2(k1)` when both carry one.
    pub fn bracket(&self, other: &Generator, vars: &[Symbol]) -> Generator {
        let v = self.v.bracket(&other.v, vars);
        let k = match (&self.k, &other.k) {
            (Some(k1), Some(k2)) => {
                Some(&apply_field(vars, &self.v.y, k2) - &apply_field(vars, &other.v.y, k1))
            }
            _ => None,
        };
        Generator { v, k }
    }

    /// Flattened coordinates used for span computations.
    pub fn key_vector(&self) -> BTreeMap<(Component, Monomial), Coeff> {
        let mut out = BTreeMap::new();
        let mut put = |c: Component, e: &Expr| {
            for (m, x) in e.terms() {
                out.insert((c, m.clone()), x.clone());
            }
        };
        for (i, e) in self.v.y.iter().enumerate() {
            put(Component::Y(i), e);
        }
        for (a, row) in self.v.c.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                put(Component::C(a, b), e);
            }
        }
        put(Component::Tau, &self.v.tau);
        for (a, e) in self.v.h.iter().enumerate() {
            put(Component::H(a), e);
        }
        if let Some(k) = &self.k {
            put(Component::K, k);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let s = |e: &Expr| e.to_string();
        json!({
            "y": self.v.y.iter().map(s).collect::<Vec<_>>(),
            "c": self.v.c.iter().map(|r| r.iter().map(s).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "tau": s(&self.v.tau),
            "h": self.v.h.iter().map(s).collect::<Vec<_>>(),
            "k": self.k.as_ref().map(s),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub closed: bool,
    /// The first pair whose bracket leaves the span.
    pub offending: Option<(usize, usize)>,
    /// `[G_i, G_j] = Σ_l c_l G_l` for every pair that stays in the span.
    pub constants: Vec<((usize, usize), Vec<Coeff>)>,
}

impl ClosureReport {
    pub fn constant(&self, i: usize, j: usize) -> Option<&[Coeff]> {
        self.constants
            .iter()
            .find(|((a, b), _)| (*a, *b) == (i, j))
            .map(|(_, c)| c.as_slice())
    }

    pub fn to_json(&self) -> Value {
        let table: Vec<Value> = self
            .constants
            .iter()
            .map(|((i, j), c)| {
                json!({"i": i, "j": j, "coefficients": c.iter().map(|x| x.to_string()).collect::<Vec<_>>()})
            })
            .collect();
        json!({"closed": self.closed, "offending": self.offending, "structure_constants": table})
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemStats {
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrySpace {
    pub mode: Mode,
    pub vars: Vec<Symbol>,
    pub generators: Vec<Generator>,
    pub stats: Option<SystemStats>,
    pub closure: Option<ClosureReport>,
}

impl SymmetrySpace {
    pub fn from_generators(mode: Mode, vars: Vec<Symbol>, generators: Vec<Generator>) -> Self {
        SymmetrySpace {
            mode,
            vars,
            generators,
            stats: None,
            closure: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    /// Coordinates of `g` in the spanning set, if it lies in the span.
    pub fn membership(&self, g: &Generator) -> Option<Vec<Coeff>> {
        let cols: Vec<_> = self.generators.iter().map(Generator::key_vector).collect();
        solve_combination(&cols, &g.key_vector())
    }

    pub fn contains(&self, g: &Generator) -> bool {
        self.membership(g).is_some()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "mode": self.mode.name(),
            "dimension": self.dimension(),
            "generators": self.generators.iter().map(Generator::to_json).collect::<Vec<_>>(),
            "system": self.stats.as_ref().map(|s| json!({"unknowns": s.unknowns, "equations": s.equations, "rank": s.rank})),
            "closure": self.closure.as_ref().map(ClosureReport::to_json),
        })
    }
}

fn layout(sde: &Sde, mode: Mode) -> Vec<Component> {
    let mut out: Vec<Component> = (0..sde.n()).map(Component::Y).collect();
    for a in 0..sde.m() {
        for b in a + 1..sde.m() {
            out.push(Component::C(a, b));
        }
    }
    out.push(Component::Tau);
    match mode {
        Mode::General => out.extend((0..sde.m()).map(Component::H)),
        Mode::Doob => out.push(Component::K),
    }
    out
}

fn unit(sde: &Sde, comp: Component, f: &Expr) -> Generator {
    let mut v = InfTransform::zero(sde.n(), sde.m());
    let mut k = None;
    match comp {
        Component::Y(i) => v.y[i] = f.clone(),
        Component::C(a, b) => {
            v.c[a][b] = f.clone();
            v.c[b][a] = -f;
        }
        Component::Tau => v.tau = f.clone(),
        Component::H(a) => v.h[a] = f.clone(),
        Component::K => {
            v.h = sigma_t_grad(sde, f);
            k = Some(f.clone());
        }
    }
    Generator { v, k }
}

fn residual(sde: &Sde, mode: Mode, g: &Generator) -> Result<ResidualReport> {
    match mode {
        Mode::General => sde_residual(sde, &g.v),
        Mode::Doob => {
            let zero = Expr::zero();
            doob_residual(sde, &g.v, g.k.as_ref().unwrap_or(&zero))
        }
    }
}

/// Solves the determining system with every unknown expanded in `basis`.
///
/// Columns follow the layout `Y^0..Y^{n-1}, C(a<b), τ, H or k`, each crossed
/// with its basis list; the returned generators are the kernel vectors of the
/// reduced system, one per free column.
pub fn solve(sde: &Sde, basis: &AnsatzBasis, mode: Mode) -> Result<SymmetrySpace> {
    basis.validate(sde)?;
    let mut columns: Vec<Generator> = Vec::new();
    for comp in layout(sde, mode) {
        for f in basis.for_component(comp) {
            columns.push(unit(sde, comp, f));
        }
    }
    let residuals: Vec<Vec<(String, Expr)>> = columns
        .par_iter()
        .map(|g| {
            let r = residual(sde, mode, g)
                .map_err(|e| Error::BasisNotClosed(e.to_string()))?;
            Ok(r.entries
                .into_iter()
                .filter(|e| !e.informational && !e.expr.is_zero())
                .map(|e| (e.label, e.expr))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: BTreeMap<(String, Monomial), SparseRow> = BTreeMap::new();
    for (j, entries) in residuals.into_iter().enumerate() {
        for (label, e) in entries {
            for (m, c) in e.terms() {
                rows.entry((label.clone(), m.clone()))
                    .or_default()
                    .insert(j, c.clone());
            }
        }
    }
    let equations = rows.len();
    let mut rref = Rref::new(columns.len());
    for (_, row) in rows {
        rref.insert(row);
    }
    let mut generators = Vec::new();
    for vec in rref.nullspace() {
        let mut v = InfTransform::zero(sde.n(), sde.m());
        let mut k = match mode {
            Mode::Doob => Some(Expr::zero()),
            Mode::General => None,
        };
        for (j, c) in &vec {
            let col = &columns[*j];
            let s = Expr::coeff(c.clone());
            v = v.add(&col.v.scale(&s));
            if let (Some(k), Some(kc)) = (k.as_mut(), col.k.as_ref()) {
                *k += kc * &s;
            }
        }
        let g = Generator { v, k };
        let check = residual(sde, mode, &g)?;
        if !check.all_zero() {
            return Err(Error::BasisNotClosed(format!(
                "kernel vector fails {}",
                check.nonzero_labels().join(", ")
            )));
        }
        generators.push(g);
    }
    Ok(SymmetrySpace {
        mode,
        vars: sde.vars.clone(),
        stats: Some(SystemStats {
            unknowns: columns.len(),
            equations,
            rank: rref.rank(),
        }),
        generators,
        closure: None,
    })
}

/// Expands every pairwise bracket in the span of the generators.
pub fn closure_check(space: &SymmetrySpace) -> ClosureReport {
    let cols: Vec<_> = space.generators.iter().map(Generator::key_vector).collect();
    let mut constants = Vec::new();
    let mut offending = None;
    let n = space.generators.len();
    for i in 0..n {
        for j in i + 1..n {
            let b = space.generators[i].bracket(&space.generators[j], &space.vars);
            match solve_combination(&cols, &b.key_vector()) {
                Some(c) => constants.push(((i, j), c)),
                None => {
                    if offending.is_none() {
                        offending = Some((i, j));
                    }
                }
            }
        }
    }
    ClosureReport {
        closed: offending.is_none(),
        offending,
        constants,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::sym;

    fn bm() -> Sde {
        Sde::new(
            "bm1d",
            vec![sym("x"), sym("z")],
            Some("z"),
            vec![],
            vec![Expr::zero(), Expr::one()],
            vec![vec![Expr::one()], vec![Expr::zero()]],
            true,
        )
        .unwrap()
    }

    #[test]
    fn bm_quadratic_nullities() {
        let s = bm();
        let b = AnsatzBasis::uniform(polynomial_basis(&s.vars, 2));
        assert_eq!(b.default.len(), 6);
        let d = solve(&s, &b, Mode::Doob).unwrap();
        assert_eq!(d.dimension(), 6);
        let g = solve(&s, &b, Mode::General).unwrap();
        assert_eq!(g.dimension(), 6);
        assert!(closure_check(&d).closed);
    }

    #[test]
    fn empty_basis_is_trivial() {
        let s = bm();
        let sp = solve(&s, &AnsatzBasis::default(), Mode::Doob).unwrap();
        assert_eq!(sp.dimension(), 0);
    }
}
