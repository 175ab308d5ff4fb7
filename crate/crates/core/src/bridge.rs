//! Correspondence between Doob symmetries and Lie point symmetries of the
//! Kolmogorov equation `L(u) = 0`.

use crate::determining::{doob_residual, pde_residual, sigma_t_grad};
use crate::error::{Error, Result};
use crate::expr::matrix::{self, Mat};
use crate::expr::{Coeff, Expr};
use crate::sde::Sde;
use crate::transform::{apply_field, InfTransform};

/// `Ξ = m ∂_z + φ^i ∂_{x^i} − k u ∂_u`; `phi` follows the spatial variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSymmetry {
    pub m_coef: Expr,
    pub phi: Vec<Expr>,
    pub k: Expr,
}

impl PdeSymmetry {
    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.m_coef)
            .chain(&self.phi)
            .chain(std::iter::once(&self.k))
    }

    pub fn scale(&self, c: &Coeff) -> PdeSymmetry {
        PdeSymmetry {
            m_coef: self.m_coef.scale(c),
            phi: self.phi.iter().map(|e| e.scale(c)).collect(),
            k: self.k.scale(c),
        }
    }

    /// A nonzero rational `c` with `self = c · other`, if one exists.
    pub fn ratio_to(&self, other: &PdeSymmetry) -> Option<Coeff> {
        let pairs: Vec<(&Expr, &Expr)> = self.exprs().zip(other.exprs()).collect();
        let (a, b) = pairs.iter().find(|(_, b)| !b.is_zero())?;
        let (m, cb) = b.terms().next()?;
        let ca = a.coefficient_of(m);
        let c = (&ca / cb)?;
        c.as_rational()?;
        if c.is_zero() {
            return None;
        }
        pairs
            .iter()
            .all(|(a, b)| **a == b.scale(&c))
            .then_some(c)
    }

    /// Human-readable vector field, e.g. `2*x*z d/dx + 2*z^2 d/dz + u*(x^2 - z) d/du`.
    pub fn describe(&self, sde: &Sde) -> String {
        let mut parts = Vec::new();
        for (phi, i) in self.phi.iter().zip(sde.spatial()) {
            if !phi.is_zero() {
                parts.push(format!("({}) d/d{}", phi, sde.vars[i]));
            }
        }
        if !self.m_coef.is_zero() {
            let t = sde.time_symbol().map(|s| s.to_string()).unwrap_or_default();
            parts.push(format!("({}) d/d{}", self.m_coef, t));
        }
        if !self.k.is_zero() {
            parts.push(format!("u*({}) d/du", -&self.k));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Repackages a Doob pair `(V, k)` as the vector field `Ξ = Y − k u ∂_u`.
pub fn sde_to_pde(sde: &Sde, v: &InfTransform, k: &Expr) -> Result<PdeSymmetry> {
    let t = sde.time_var.ok_or(Error::NoTimeVariable)?;
    let r = doob_residual(sde, v, k)?;
    if !r.all_zero() {
        return Err(Error::DoobResidualNonzero(r.nonzero_labels().join(", ")));
    }
    Ok(PdeSymmetry {
        m_coef: v.y[t].clone(),
        phi: sde.spatial().iter().map(|&i| v.y[i].clone()).collect(),
        k: k.clone(),
    })
}

/// Recovers `(V, k)` from a Kolmogorov symmetry with `τ = L(m)`,
/// `H = σᵀ∇k` and
/// `C = (σᵀσ)⁻¹σᵀ ∇Y σ − (σᵀσ)⁻¹σᵀ Y(σ) − ½τI`.
pub fn pde_to_sde(sde: &Sde, xi: &PdeSymmetry) -> Result<(InfTransform, Expr)> {
    let t = sde.time_var.ok_or(Error::NoTimeVariable)?;
    let r = pde_residual(sde, xi)?;
    if !r.all_zero() {
        return Err(Error::PdeResidualNonzero(r.nonzero_labels().join(", ")));
    }
    let n = sde.n();
    let mut y = vec![Expr::zero(); n];
    y[t] = xi.m_coef.clone();
    for (phi, i) in xi.phi.iter().zip(sde.spatial()) {
        y[i] = phi.clone();
    }
    let tau = sde.generator_apply(&xi.m_coef);
    let h = sigma_t_grad(sde, &xi.k);
    let sigma = &sde.diffusion;
    let st = matrix::transpose(sigma);
    let sts = matrix::matmul(&st, sigma);
    let d = matrix::det(&sts);
    let dinv = match d.inverse() {
        Ok(e) => e,
        Err(_) => return Err(Error::SingularSigma),
    };
    let inv = matrix::scale(&matrix::adjugate(&sts), &dinv);
    let jy = sde.jacobian(&y);
    let ys: Mat = matrix::map(sigma, |e| apply_field(&sde.vars, &y, e));
    let left = matrix::matmul(&inv, &st);
    let c1 = matrix::matmul(&left, &matrix::matmul(&jy, sigma));
    let c2 = matrix::matmul(&left, &ys);
    let m = sde.m();
    let half_tau = matrix::scale(&matrix::identity(m), &(&tau * &Expr::ratio(1, 2)));
    let c = matrix::sub(&matrix::sub(&c1, &c2), &half_tau);
    if !matrix::is_antisymmetric(&c) {
        return Err(Error::InvalidTransform(
            "recovered C is not antisymmetric".into(),
        ));
    }
    let v = InfTransform { y, c, tau, h };
    let check = doob_residual(sde, &v, &xi.k)?;
    if !check.all_zero() {
        return Err(Error::DoobResidualNonzero(check.nonzero_labels().join(", ")));
    }
    Ok((v, xi.k.clone()))
}

/// `pde_to_sde(sde_to_pde(V, k)) = (V, k)` on normal forms.
pub fn round_trip_check(sde: &Sde, v: &InfTransform, k: &Expr) -> Result<bool> {
    let xi = sde_to_pde(sde, v, k)?;
    let (v2, k2) = pde_to_sde(sde, &xi)?;
    Ok(v2 == *v && k2 == *k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::sym;

    fn heat2() -> Sde {
        Sde::new(
            "bm2d",
            vec![sym("x"), sym("y"), sym("z")],
            Some("z"),
            vec![],
            vec![Expr::zero(), Expr::zero(), Expr::one()],
            vec![
                vec![Expr::one(), Expr::zero()],
                vec![Expr::zero(), Expr::one()],
                vec![Expr::zero(), Expr::zero()],
            ],
            true,
        )
        .unwrap()
    }

    #[test]
    fn rotation_recovers_antisymmetric_c() {
        let s = heat2();
        let (x, y) = (Expr::var(&sym("x")), Expr::var(&sym("y")));
        let xi = PdeSymmetry {
            m_coef: Expr::zero(),
            phi: vec![y.clone(), -x.clone()],
            k: Expr::zero(),
        };
        let (v, _) = pde_to_sde(&s, &xi).unwrap();
        assert_eq!(
            v.c,
            vec![vec![Expr::zero(), Expr::one()], vec![Expr::int(-1), Expr::zero()]]
        );
        assert!(v.tau.is_zero());
        assert!(round_trip_check(&s, &v, &Expr::zero()).unwrap());
    }

    #[test]
    fn u_scaling_maps_to_zero_quadruple() {
        let s = heat2();
        let xi = PdeSymmetry {
            m_coef: Expr::zero(),
            phi: vec![Expr::zero(), Expr::zero()],
            k: Expr::int(-1),
        };
        let (v, k) = pde_to_sde(&s, &xi).unwrap();
        assert!(v.is_zero());
        assert_eq!(k, Expr::int(-1));
    }
}
