//! Finite and infinitesimal stochastic transformations.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::matrix::{self, Mat};
use crate::expr::{Expr, Q64};
use crate::sde::Sde;
use crate::symbol::Symbol;

/// `T = (Φ, B, η, h)`: space map, rotation, time-change density, Girsanov drift.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTransform {
    pub phi: Vec<Expr>,
    pub phi_inv: Option<Vec<Expr>>,
    pub b: Mat,
    pub eta: Expr,
    pub h: Vec<Expr>,
}

/// `V = (Y, C, τ, H)` with `C` antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct InfTransform {
    pub y: Vec<Expr>,
    pub c: Mat,
    pub tau: Expr,
    pub h: Vec<Expr>,
}

/// `Y(f) = Y^i ∂_i f`.
pub fn apply_field(vars: &[Symbol], y: &[Expr], f: &Expr) -> Expr {
    let mut out = Expr::zero();
    for (yi, v) in y.iter().zip(vars) {
        if !yi.is_zero() {
            out += yi * &f.diff(v);
        }
    }
    out
}

fn identity_map(vars: &[Symbol]) -> Vec<Expr> {
    vars.iter().map(Expr::var).collect()
}

fn is_identity_map(vars: &[Symbol], phi: &[Expr]) -> bool {
    phi.len() == vars.len() && phi.iter().zip(vars).all(|(p, v)| *p == Expr::var(v))
}

/// `f ∘ φ`, skipping the work when `φ` is the identity.
pub fn compose_expr(vars: &[Symbol], f: &Expr, phi: &[Expr]) -> Result<Expr> {
    if is_identity_map(vars, phi) {
        return Ok(f.clone());
    }
    let assign: BTreeMap<Symbol, Expr> = vars.iter().cloned().zip(phi.iter().cloned()).collect();
    f.substitute_affine(&assign)
}

fn compose_vec(vars: &[Symbol], fs: &[Expr], phi: &[Expr]) -> Result<Vec<Expr>> {
    fs.iter().map(|f| compose_expr(vars, f, phi)).collect()
}

fn compose_mat(vars: &[Symbol], m: &Mat, phi: &[Expr]) -> Result<Mat> {
    matrix::try_map(m, |e| compose_expr(vars, e, phi))
}

impl FiniteTransform {
    pub fn identity(vars: &[Symbol], m: usize) -> Self {
        FiniteTransform {
            phi: identity_map(vars),
            phi_inv: Some(identity_map(vars)),
            b: matrix::identity(m),
            eta: Expr::one(),
            h: vec![Expr::zero(); m],
        }
    }

    /// Pure Girsanov change `(id, I, 1, h)`.
    pub fn girsanov(vars: &[Symbol], h: Vec<Expr>) -> Self {
        let m = h.len();
        FiniteTransform {
            h,
            ..FiniteTransform::identity(vars, m)
        }
    }

    /// Pure time change `(id, I, η, 0)`.
    pub fn time_change(vars: &[Symbol], m: usize, eta: Expr) -> Self {
        FiniteTransform {
            eta,
            ..FiniteTransform::identity(vars, m)
        }
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn has_identity_map(&self, vars: &[Symbol]) -> bool {
        is_identity_map(vars, &self.phi)
    }

    fn inverse_map(&self, vars: &[Symbol]) -> Result<Vec<Expr>> {
        if self.has_identity_map(vars) {
            return Ok(identity_map(vars));
        }
        self.phi_inv.clone().ok_or(Error::MissingInverse)
    }

    fn check_shapes(&self, n: usize) -> Result<()> {
        let m = self.m();
        if self.phi.len() != n {
            return Err(Error::Shape(format!("Φ has {} components for {} variables", self.phi.len(), n)));
        }
        if self.phi_inv.as_ref().is_some_and(|p| p.len() != n) {
            return Err(Error::Shape("Φ⁻¹ has the wrong length".into()));
        }
        if self.b.len() != m || self.b.iter().any(|r| r.len() != m) {
            return Err(Error::Shape(format!("B must be {}×{}", m, m)));
        }
        Ok(())
    }

    /// Checks the structural invariants against a model.
    ///
    /// `BᵀB = I` and `Φ∘Φ⁻¹ = id` are decided on normal forms (the latter
    /// only when the composition is representable); `det B = 1` and `η > 0`
    /// are checked at probe points.
    pub fn validate(&self, sde: &Sde) -> Result<()> {
        self.check_shapes(sde.n())?;
        if self.m() != sde.m() {
            return Err(Error::Shape(format!(
                "transform acts on {} noises, model has {}",
                self.m(),
                sde.m()
            )));
        }
        for e in self
            .phi
            .iter()
            .chain(self.phi_inv.iter().flatten())
            .chain(self.b.iter().flatten())
            .chain(std::iter::once(&self.eta))
            .chain(&self.h)
        {
            sde.check_expr(e)?;
        }
        let btb = matrix::matmul(&matrix::transpose(&self.b), &self.b);
        if btb != matrix::identity(self.m()) {
            return Err(Error::InvalidTransform("B is not orthogonal".into()));
        }
        if let Some(inv) = &self.phi_inv {
            match compose_vec(&sde.vars, &self.phi, inv) {
                Ok(id) if id != identity_map(&sde.vars) => {
                    return Err(Error::InvalidTransform("Φ∘Φ⁻¹ is not the identity".into()))
                }
                _ => {}
            }
        } else if !self.has_identity_map(&sde.vars) {
            return Err(Error::MissingInverse);
        }
        let d = matrix::det(&self.b);
        for p in sde.probe_points(32, 0x5eed) {
            if let Ok(v) = d.eval_numeric(&p) {
                if v <= 0.0 {
                    return Err(Error::InvalidTransform("det B is not +1".into()));
                }
            }
            if let Ok(v) = self.eta.eval_numeric(&p) {
                if v <= 0.0 {
                    return Err(Error::InvalidTransform("η is not positive".into()));
                }
            }
        }
        Ok(())
    }

    /// `T2 ∘ T1` where `self = T2`.
    pub fn compose(&self, t1: &FiniteTransform, vars: &[Symbol]) -> Result<FiniteTransform> {
        let t2 = self;
        let phi = compose_vec(vars, &t2.phi, &t1.phi)?;
        let b = matrix::matmul(&compose_mat(vars, &t2.b, &t1.phi)?, &t1.b);
        let eta = &compose_expr(vars, &t2.eta, &t1.phi)? * &t1.eta;
        let h2 = compose_vec(vars, &t2.h, &t1.phi)?;
        let s = t1.eta.pow_rational(Q64::new(-1, 2))?;
        let rot = matrix::matvec(&matrix::transpose(&t1.b), &h2);
        let h = rot
            .iter()
            .zip(&t1.h)
            .map(|(r, h1)| &(&s * r) + h1)
            .collect();
        let phi_inv = match (&t1.phi_inv, &t2.phi_inv) {
            (Some(i1), Some(i2)) => Some(compose_vec(vars, i1, i2)?),
            _ => None,
        };
        Ok(FiniteTransform {
            phi,
            phi_inv,
            b,
            eta,
            h,
        })
    }

    /// `T⁻¹ = (Φ⁻¹, Bᵀ∘Φ⁻¹, η⁻¹∘Φ⁻¹, −(√η B h)∘Φ⁻¹)`.
    pub fn invert(&self, vars: &[Symbol]) -> Result<FiniteTransform> {
        let inv = self.inverse_map(vars)?;
        let b = compose_mat(vars, &matrix::transpose(&self.b), &inv)?;
        let eta = compose_expr(vars, &self.eta.inverse()?, &inv)?;
        let s = self.eta.pow_rational(Q64::new(1, 2))?;
        let bh = matrix::matvec(&self.b, &self.h);
        let h = bh
            .iter()
            .map(|e| compose_expr(vars, &-(&s * e), &inv))
            .collect::<Result<Vec<_>>>()?;
        Ok(FiniteTransform {
            phi: inv,
            phi_inv: Some(self.phi.clone()),
            b,
            eta,
            h,
        })
    }

    /// The transformed SDE `E_T(μ, σ)`.
    pub fn et_apply(&self, sde: &Sde) -> Result<Sde> {
        self.check_shapes(sde.n())?;
        if self.h.iter().any(|e| !e.is_zero()) && !sde.nonexplosive {
            return Err(Error::NonExplosiveRequired);
        }
        let vars = &sde.vars;
        let jac = sde.jacobian(&self.phi);
        let js = matrix::matmul(&jac, &sde.diffusion);
        let jsh = matrix::matvec(&js, &self.h);
        let inv_eta = self.eta.inverse()?;
        let inv_sqrt = self.eta.pow_rational(Q64::new(-1, 2))?;
        let drift_pre: Vec<Expr> = self
            .phi
            .iter()
            .zip(&jsh)
            .map(|(p, t)| &(&sde.generator_apply(p) + t) * &inv_eta)
            .collect();
        let sigma_pre = matrix::scale(
            &matrix::matmul(&js, &matrix::transpose(&self.b)),
            &inv_sqrt,
        );
        let inv = self.inverse_map(vars)?;
        let drift = compose_vec(vars, &drift_pre, &inv)?;
        let diffusion = compose_mat(vars, &sigma_pre, &inv)?;
        let time_ok = sde
            .time_var
            .is_some_and(|t| drift[t].is_one() && diffusion[t].iter().all(|e| e.is_zero()));
        let time_name = if time_ok {
            sde.time_symbol().map(|s| s.name().to_string())
        } else {
            None
        };
        let mut out = Sde::new(
            &format!("{}'", sde.name),
            vars.clone(),
            time_name.as_deref(),
            sde.params.clone(),
            drift,
            diffusion,
            sde.nonexplosive,
        )?;
        out.domain = sde.domain.clone();
        Ok(out)
    }

    /// Symbolic equality of all components.
    pub fn same_as(&self, other: &FiniteTransform) -> bool {
        self.phi == other.phi && self.b == other.b && self.eta == other.eta && self.h == other.h
    }

    /// `E_T(μ, σ) = (μ, σ)`.
    pub fn is_finite_symmetry(&self, sde: &Sde) -> Result<bool> {
        let t = self.et_apply(sde)?;
        Ok(t.drift == sde.drift && t.diffusion == sde.diffusion)
    }

    /// `T_*(V)`, the push-forward of an infinitesimal transformation.
    pub fn push_forward(&self, v: &InfTransform, vars: &[Symbol]) -> Result<InfTransform> {
        let inv = self.inverse_map(vars)?;
        let y_pre: Vec<Expr> = self
            .phi
            .iter()
            .map(|p| apply_field(vars, &v.y, p))
            .collect();
        let bt = matrix::transpose(&self.b);
        let yb = matrix::map(&self.b, |e| apply_field(vars, &v.y, e));
        let c_pre = matrix::add(
            &matrix::matmul(&matrix::matmul(&self.b, &v.c), &bt),
            &matrix::matmul(&yb, &bt),
        );
        let tau_pre = &v.tau + &apply_field(vars, &v.y, &self.eta).div(&self.eta)?;
        let m = self.m();
        let half_tau = matrix::scale(&matrix::identity(m), &(&v.tau * &Expr::ratio(1, 2)));
        let tc = matrix::add(&half_tau, &v.c);
        let tch = matrix::matvec(&tc, &self.h);
        let yh: Vec<Expr> = self.h.iter().map(|e| apply_field(vars, &v.y, e)).collect();
        let inner: Vec<Expr> = (0..m)
            .map(|a| &(&v.h[a] + &yh[a]) - &tch[a])
            .collect();
        let s = self.eta.pow_rational(Q64::new(1, 2))?;
        let h_pre: Vec<Expr> = matrix::matvec(&self.b, &inner)
            .iter()
            .map(|e| &s * e)
            .collect();
        Ok(InfTransform {
            y: compose_vec(vars, &y_pre, &inv)?,
            c: compose_mat(vars, &c_pre, &inv)?,
            tau: compose_expr(vars, &tau_pre, &inv)?,
            h: compose_vec(vars, &h_pre, &inv)?,
        })
    }
}

impl InfTransform {
    pub fn new(y: Vec<Expr>, c: Mat, tau: Expr, h: Vec<Expr>) -> Result<Self> {
        let m = h.len();
        if c.len() != m || c.iter().any(|r| r.len() != m) {
            return Err(Error::Shape(format!("C must be {}×{}", m, m)));
        }
        if !matrix::is_antisymmetric(&c) {
            return Err(Error::InvalidTransform("C is not antisymmetric".into()));
        }
        Ok(InfTransform { y, c, tau, h })
    }

    pub fn zero(n: usize, m: usize) -> Self {
        InfTransform {
            y: vec![Expr::zero(); n],
            c: matrix::zeros(m, m),
            tau: Expr::zero(),
            h: vec![Expr::zero(); m],
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn is_zero(&self) -> bool {
        self.y.iter().all(|e| e.is_zero())
            && matrix::is_zero(&self.c)
            && self.tau.is_zero()
            && self.h.iter().all(|e| e.is_zero())
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.y
            .iter()
            .chain(self.c.iter().flatten())
            .chain(std::iter::once(&self.tau))
            .chain(&self.h)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> InfTransform {
        InfTransform {
            y: self.y.iter().map(&f).collect(),
            c: matrix::map(&self.c, &f),
            tau: f(&self.tau),
            h: self.h.iter().map(&f).collect(),
        }
    }

    pub fn scale(&self, s: &Expr) -> InfTransform {
        self.map(|e| e * s)
    }

    pub fn add(&self, other: &InfTransform) -> InfTransform {
        InfTransform {
            y: self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect(),
            c: matrix::add(&self.c, &other.c),
            tau: &self.tau + &other.tau,
            h: self.h.iter().zip(&other.h).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &InfTransform) -> InfTransform {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// The Lie bracket `[V1, V2]` with `self = V1`.
    pub fn bracket(&self, other: &InfTransform, vars: &[Symbol]) -> InfTransform {
        let (v1, v2) = (self, other);
        let y: Vec<Expr> = (0..v1.n())
            .map(|i| &apply_field(vars, &v1.y, &v2.y[i]) - &apply_field(vars, &v2.y, &v1.y[i]))
            .collect();
        let c12 = matrix::matmul(&v1.c, &v2.c);
        let c21 = matrix::matmul(&v2.c, &v1.c);
        let dc = matrix::sub(
            &matrix::map(&v2.c, |e| apply_field(vars, &v1.y, e)),
            &matrix::map(&v1.c, |e| apply_field(vars, &v2.y, e)),
        );
        let c = matrix::sub(&dc, &matrix::sub(&c12, &c21));
        let tau = &apply_field(vars, &v1.y, &v2.tau) - &apply_field(vars, &v2.y, &v1.tau);
        let m = v1.m();
        let half = Expr::ratio(1, 2);
        let t1 = matrix::add(&matrix::scale(&matrix::identity(m), &(&v1.tau * &half)), &v1.c);
        let t2 = matrix::add(&matrix::scale(&matrix::identity(m), &(&v2.tau * &half)), &v2.c);
        let a = matrix::matvec(&t1, &v2.h);
        let b = matrix::matvec(&t2, &v1.h);
        let h = (0..m)
            .map(|k| {
                &(&(&apply_field(vars, &v1.y, &v2.h[k]) - &apply_field(vars, &v2.y, &v1.h[k]))
                    + &a[k])
                    - &b[k]
            })
            .collect();
        InfTransform { y, c, tau, h }
    }
}
