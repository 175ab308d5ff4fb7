//! Measure changes of Doob type: recovering the potential `k` from `H`,
//! classifying symmetries, and packaging Girsanov densities.

use serde_json::{json, Value};

use crate::determining::{doob_residual, sde_residual, sigma_t_grad, ResidualReport};
use crate::error::{Error, Result};
use crate::expr::integrate::integrate;
use crate::expr::matrix::{self, Mat};
use crate::expr::Expr;
use crate::sde::Sde;
use crate::symbol::Symbol;
use crate::transform::InfTransform;

/// Outcome of solving `σᵀ∇k = H`.
#[derive(Debug, Clone, PartialEq)]
pub enum KRecovery {
    /// `k` is determined up to an additive function of `free`, the
    /// variables with zero diffusion rows.
    Family { k: Expr, free: Vec<Symbol> },
    /// The gradient candidate fails `∂_j g_i = ∂_i g_j` for this pair.
    NonDoob {
        witness: (Symbol, Symbol),
        mismatch: Expr,
    },
    Undecided(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymmetryClass {
    Doob(Expr),
    AlmostDoob(Expr),
    NonDoob {
        witness: (Symbol, Symbol),
        mismatch: Expr,
    },
    Undecided(String),
}

impl SymmetryClass {
    pub fn name(&self) -> &'static str {
        match self {
            SymmetryClass::Doob(_) => "doob",
            SymmetryClass::AlmostDoob(_) => "almost_doob",
            SymmetryClass::NonDoob { .. } => "non_doob",
            SymmetryClass::Undecided(_) => "undecided",
        }
    }

    pub fn k(&self) -> Option<&Expr> {
        match self {
            SymmetryClass::Doob(k) | SymmetryClass::AlmostDoob(k) => Some(k),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            SymmetryClass::Doob(k) | SymmetryClass::AlmostDoob(k) => {
                json!({"class": self.name(), "k": k.to_string()})
            }
            SymmetryClass::NonDoob { witness, mismatch } => json!({
                "class": self.name(),
                "witness": [witness.0.name(), witness.1.name()],
                "mismatch": mismatch.to_string(),
            }),
            SymmetryClass::Undecided(r) => json!({"class": self.name(), "reason": r}),
        }
    }
}

/// A verdict together with whether `V` actually solves the symmetry equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: SymmetryClass,
    pub is_symmetry: bool,
}

/// Girsanov integrands along a path: `θ = h∘X`, `½|h|²` and optionally the
/// potential `𝔥` when `h = σᵀ∇𝔥` and `½|h|² = −L(𝔥)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRecipe {
    pub theta: Vec<Expr>,
    pub half_norm: Expr,
    pub doob_potential: Option<Expr>,
}

/// Removes the constant term, fixing the additive freedom in `k`.
pub fn normalize_k(k: &Expr) -> Expr {
    Expr::from_terms(
        k.terms()
            .filter(|(m, _)| !m.is_one())
            .map(|(m, c)| (m.clone(), c.clone())),
    )
}

fn noise_rows(sde: &Sde) -> Vec<usize> {
    (0..sde.n())
        .filter(|&i| sde.diffusion[i].iter().any(|e| !e.is_zero()))
        .collect()
}

/// Solves `σᵀ∇k = H` for `k` up to a function of the noise-free variables.
pub fn recover_k(sde: &Sde, h: &[Expr]) -> Result<KRecovery> {
    if h.len() != sde.m() {
        return Err(Error::Shape(format!(
            "H has {} components, expected {}",
            h.len(),
            sde.m()
        )));
    }
    for e in h {
        sde.check_expr(e)?;
    }
    let rows = noise_rows(sde);
    let free: Vec<Symbol> = (0..sde.n())
        .filter(|i| !rows.contains(i))
        .map(|i| sde.vars[i].clone())
        .collect();
    if h.iter().all(Expr::is_zero) {
        return Ok(KRecovery::Family {
            k: Expr::zero(),
            free,
        });
    }
    if rows.len() != sde.m() {
        return Ok(KRecovery::Undecided(format!(
            "{} noise-carrying variables for {} Brownian motions",
            rows.len(),
            sde.m()
        )));
    }
    // g solves σ_Sᵀ g = H on the noise-carrying rows.
    let st: Mat = (0..sde.m())
        .map(|a| rows.iter().map(|&i| sde.diffusion[i][a].clone()).collect())
        .collect();
    let g = match matrix::inverse(&st) {
        Ok(inv) => matrix::matvec(&inv, h),
        Err(_) => {
            return Ok(KRecovery::Undecided(
                "σ restricted to the noise variables has no exact inverse".into(),
            ))
        }
    };
    let xs: Vec<&Symbol> = rows.iter().map(|&i| &sde.vars[i]).collect();
    for a in 0..xs.len() {
        for b in a + 1..xs.len() {
            let mismatch = &g[a].diff(xs[b]) - &g[b].diff(xs[a]);
            if !mismatch.is_zero() {
                return Ok(KRecovery::NonDoob {
                    witness: (xs[a].clone(), xs[b].clone()),
                    mismatch,
                });
            }
        }
    }
    let mut k = Expr::zero();
    for (a, x) in xs.iter().enumerate() {
        let rest = &g[a] - &k.diff(x);
        match integrate(&rest, x) {
            Ok(p) => k += p,
            Err(e) => return Ok(KRecovery::Undecided(format!("antiderivative in {}: {}", x, e))),
        }
    }
    let check: Vec<Expr> = sigma_t_grad(sde, &k);
    if check.as_slice() != h {
        return Ok(KRecovery::Undecided(
            "recovered potential does not reproduce H".into(),
        ));
    }
    Ok(KRecovery::Family {
        k: normalize_k(&k),
        free,
    })
}

/// Decides whether `V` is a Doob symmetry, fixing the free time dependence
/// of `k` through `L(k) = 0` when possible.
pub fn classify(sde: &Sde, v: &InfTransform) -> Result<Classification> {
    let is_symmetry = sde_residual(sde, v)?.all_zero();
    let class = match recover_k(sde, &v.h)? {
        KRecovery::NonDoob { witness, mismatch } => SymmetryClass::NonDoob { witness, mismatch },
        KRecovery::Undecided(r) => SymmetryClass::Undecided(r),
        KRecovery::Family { k, free } => fix_time_part(sde, k, &free)?,
    };
    Ok(Classification { class, is_symmetry })
}

fn fix_time_part(sde: &Sde, k: Expr, free: &[Symbol]) -> Result<SymmetryClass> {
    let lk = sde.generator_apply(&k);
    if lk.is_zero() {
        return Ok(SymmetryClass::Doob(k));
    }
    let t = sde.time_symbol();
    let only_time = free.iter().all(|f| Some(f) == t);
    if !only_time {
        return Ok(SymmetryClass::Undecided(
            "noise-free variables other than time".into(),
        ));
    }
    let Some(t) = t else {
        return Ok(SymmetryClass::AlmostDoob(k));
    };
    if lk.variables().iter().any(|v| v != t) {
        return Ok(SymmetryClass::AlmostDoob(k));
    }
    // L(g(z)) = g'(z) because z has unit drift and no noise.
    match integrate(&lk, t) {
        Ok(g) => {
            let full = normalize_k(&(&k - &g));
            if sde.generator_apply(&full).is_zero() {
                Ok(SymmetryClass::Doob(full))
            } else {
                Ok(SymmetryClass::AlmostDoob(k))
            }
        }
        Err(e) => Ok(SymmetryClass::Undecided(format!(
            "time antiderivative of L(k): {}",
            e
        ))),
    }
}

/// `doob.h[α]`: `h_α − σ^i_α ∂_i 𝔥`; `doob.norm`: `½Σh_α² + L(𝔥)`.
pub fn doob_condition_residual(sde: &Sde, h: &[Expr], hpot: &Expr) -> Result<ResidualReport> {
    if h.len() != sde.m() {
        return Err(Error::Shape(format!(
            "h has {} components, expected {}",
            h.len(),
            sde.m()
        )));
    }
    for e in h.iter().chain(std::iter::once(hpot)) {
        sde.check_expr(e)?;
    }
    let mut out = ResidualReport::default();
    let stk = sigma_t_grad(sde, hpot);
    for a in 0..sde.m() {
        out.push(format!("doob.h[{}]", a), vec![h[a].clone(), -stk[a].clone()]);
    }
    out.push(
        "doob.norm".into(),
        vec![half_norm(h), sde.generator_apply(hpot)],
    );
    Ok(out)
}

fn half_norm(h: &[Expr]) -> Expr {
    let s: Expr = h.iter().map(|e| e * e).sum();
    &s * &Expr::ratio(1, 2)
}

pub fn density_recipe(sde: &Sde, h: &[Expr], hpot: Option<&Expr>) -> Result<DensityRecipe> {
    if !sde.nonexplosive {
        return Err(Error::NonExplosiveRequired);
    }
    if h.len() != sde.m() {
        return Err(Error::Shape(format!(
            "h has {} components, expected {}",
            h.len(),
            sde.m()
        )));
    }
    let doob_potential = match hpot {
        Some(p) if doob_condition_residual(sde, h, p)?.all_zero() => Some(p.clone()),
        _ => None,
    };
    Ok(DensityRecipe {
        theta: h.to_vec(),
        half_norm: half_norm(h),
        doob_potential,
    })
}

/// `doob_residual` for a classified symmetry, if it has a potential.
pub fn doob_report(sde: &Sde, v: &InfTransform, class: &SymmetryClass) -> Result<Option<ResidualReport>> {
    match class.k() {
        Some(k) => Ok(Some(doob_residual(sde, v, k)?)),
        None => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ParamPoly;
    use crate::symbol::sym;

    fn x() -> Expr {
        Expr::var(&sym("x"))
    }
    fn z() -> Expr {
        Expr::var(&sym("z"))
    }

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
    fn bm_v2_potential_gets_time_part() {
        let s = bm();
        let v = InfTransform::new(
            vec![&Expr::int(2) * &(&x() * &z()), &Expr::int(2) * &(&z() * &z())],
            vec![vec![Expr::zero()]],
            &Expr::int(4) * &z(),
            vec![&Expr::int(-2) * &x()],
        )
        .unwrap();
        let c = classify(&s, &v).unwrap();
        assert!(c.is_symmetry);
        assert_eq!(c.class, SymmetryClass::Doob(&z() - &(&x() * &x())));
    }

    #[test]
    fn recover_k_bm() {
        let s = bm();
        match recover_k(&s, &[&Expr::int(-2) * &x()]).unwrap() {
            KRecovery::Family { k, free } => {
                assert_eq!(k, -(&x() * &x()));
                assert_eq!(free, vec![sym("z")]);
            }
            other => panic!("{:?}", other),
        }
        assert_eq!(
            recover_k(&s, &[Expr::zero()]).unwrap(),
            KRecovery::Family {
                k: Expr::zero(),
                free: vec![sym("z")]
            }
        );
    }

    #[test]
    fn doob_conditions() {
        let s = bm();
        let pot = &x() - &(&z() * &Expr::ratio(1, 2));
        assert!(doob_condition_residual(&s, &[Expr::one()], &pot)
            .unwrap()
            .all_zero());
        let r = doob_condition_residual(&s, &[Expr::one()], &x()).unwrap();
        assert_eq!(r.get("doob.norm").unwrap().expr, Expr::ratio(1, 2));
        let d = density_recipe(&s, &[Expr::one()], Some(&pot)).unwrap();
        assert_eq!(d.half_norm, Expr::ratio(1, 2));
        assert!(d.doob_potential.is_some());
    }

    #[test]
    fn ou_half_norm() {
        let a = sym("a");
        let s = Sde::new(
            "ou",
            vec![sym("x"), sym("z")],
            Some("z"),
            vec![a.clone(), sym("b")],
            vec![
                &(&Expr::param(&a) * &x()) + &Expr::param(&sym("b")),
                Expr::one(),
            ],
            vec![vec![Expr::one()], vec![Expr::zero()]],
            true,
        )
        .unwrap();
        let e = Expr::exp(&sym("z"), -&ParamPoly::var(&a)).unwrap();
        let h = &Expr::param(&a) * &e;
        let d = density_recipe(&s, &[h], None).unwrap();
        let e2 = Expr::exp(&sym("z"), ParamPoly::var(&a).scale(&crate::expr::poly::rat(-2, 1))).unwrap();
        let want = &(&(&Expr::param(&a) * &Expr::param(&a)) * &e2) * &Expr::ratio(1, 2);
        assert_eq!(d.half_norm, want);
        assert!(d.doob_potential.is_none());
    }
}
