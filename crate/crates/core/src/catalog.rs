//! Worked models with their published symmetries, Kolmogorov generators
//! and Monte Carlo defaults.
//!
//! Each model lives in an embedded TOML file; the family members
//! `Ṽ_α`, `Ṽ_β` for Brownian motion are generated here from their
//! template functions.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::bridge::{round_trip_check, sde_to_pde, PdeSymmetry};
use crate::determining::{doob_residual, pde_residual, sde_residual, sigma_t_grad, ResidualReport};
use crate::doob::{classify, SymmetryClass};
use crate::error::{Error, Result};
use crate::expr::integrate::integrate;
use crate::expr::matrix;
use crate::expr::{Coeff, Expr};
use crate::io::{ModelFile, SymmetryDecl};
use crate::sde::Sde;
use crate::transform::InfTransform;

pub const MODELS: [&str; 4] = ["bm1d", "ou", "cir", "bm2d"];

const PROBES: usize = 100;
const PROBE_SEED: u64 = 0x5eed;

fn source(name: &str) -> Option<&'static str> {
    match name {
        "bm1d" => Some(include_str!("../models/bm1d.toml")),
        "ou" => Some(include_str!("../models/ou.toml")),
        "cir" => Some(include_str!("../models/cir.toml")),
        "bm2d" => Some(include_str!("../models/bm2d.toml")),
        _ => None,
    }
}

/// `Ṽ_α = ((½αx, ∫α), 0, α, −½xα′)` for Brownian motion in any dimension,
/// with `α` a function of time only.
pub fn alpha_family(sde: &Sde, alpha: &Expr) -> Result<InfTransform> {
    let t = sde.time_var.ok_or(Error::NoTimeVariable)?;
    let ts = sde.vars[t].clone();
    if alpha.variables().iter().any(|v| *v != ts) {
        return Err(Error::InvalidTransform("alpha must depend on time only".into()));
    }
    let spatial = sde.spatial();
    if spatial.len() != sde.m() {
        return Err(Error::Shape("alpha family needs one noise per coordinate".into()));
    }
    let da = alpha.diff(&ts);
    let half = Expr::ratio(1, 2);
    let mut y = vec![Expr::zero(); sde.n()];
    let mut h = Vec::new();
    for &i in &spatial {
        let xi = Expr::var(&sde.vars[i]);
        y[i] = &(&half * alpha) * &xi;
        h.push(-&(&(&half * &da) * &xi));
    }
    y[t] = integrate(alpha, &ts)?;
    InfTransform::new(y, matrix::zeros(sde.m(), sde.m()), alpha.clone(), h)
}

/// `Ṽ_β = ((βy, −βx, 0), [[0, β], [−β, 0]], 0, (−yβ′, xβ′))` for planar
/// Brownian motion.
pub fn beta_family(sde: &Sde, beta: &Expr) -> Result<InfTransform> {
    let t = sde.time_var.ok_or(Error::NoTimeVariable)?;
    let ts = sde.vars[t].clone();
    let spatial = sde.spatial();
    if spatial.len() != 2 || sde.m() != 2 {
        return Err(Error::Shape("beta family is planar".into()));
    }
    if beta.variables().iter().any(|v| *v != ts) {
        return Err(Error::InvalidTransform("beta must depend on time only".into()));
    }
    let db = beta.diff(&ts);
    let x = Expr::var(&sde.vars[spatial[0]]);
    let yv = Expr::var(&sde.vars[spatial[1]]);
    let mut y = vec![Expr::zero(); sde.n()];
    y[spatial[0]] = beta * &yv;
    y[spatial[1]] = -&(beta * &x);
    let c = vec![
        vec![Expr::zero(), beta.clone()],
        vec![-beta, Expr::zero()],
    ];
    let h = vec![-&(&db * &yv), &db * &x];
    InfTransform::new(y, c, Expr::zero(), h)
}

/// A catalog model with the names of its generated family members.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub model: ModelFile,
    pub families: Vec<String>,
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        &self.model.sde.name
    }

    pub fn sde(&self) -> &Sde {
        &self.model.sde
    }

    /// The zero field with `k = −1`, whose Kolmogorov image is `u ∂_u`.
    pub fn trivial(&self) -> (InfTransform, Expr) {
        (InfTransform::zero(self.sde().n(), self.sde().m()), Expr::int(-1))
    }
}

fn add_family(model: &mut ModelFile, name: &str, v: InfTransform, class: &str) -> String {
    model.symmetries.insert(
        name.to_string(),
        SymmetryDecl {
            v,
            k: None,
            class: Some(class.to_string()),
        },
    );
    name.to_string()
}

pub fn load(name: &str) -> Result<CatalogEntry> {
    let text = source(name).ok_or_else(|| Error::UnknownModel(name.to_string()))?;
    let mut model = ModelFile::parse(text)?;
    let mut families = Vec::new();
    if name == "bm1d" || name == "bm2d" {
        let z = model.expr("z")?;
        let z2 = model.expr("z^2")?;
        let sde = model.sde.clone();
        for (n, a, class) in [
            ("Valpha_1", Expr::one(), "doob"),
            ("Valpha_z", z.clone(), "doob"),
            ("Valpha_z2", z2, "almost_doob"),
        ] {
            let v = alpha_family(&sde, &a)?;
            families.push(add_family(&mut model, n, v, class));
        }
        if name == "bm2d" {
            let v = beta_family(&sde, &z)?;
            families.push(add_family(&mut model, "Vbeta_z", v, "non_doob"));
        }
    }
    Ok(CatalogEntry { model, families })
}

pub fn entries() -> Result<Vec<CatalogEntry>> {
    MODELS.iter().map(|n| load(n)).collect()
}

/// Every catalog symmetry has identically zero residuals.
pub fn self_test() -> Result<()> {
    for e in entries()? {
        for (n, d) in &e.model.symmetries {
            let r = sde_residual(e.sde(), &d.v)?;
            if !r.all_zero() {
                return Err(Error::SelfTest(format!(
                    "{}.{}: {}",
                    e.name(),
                    n,
                    r.nonzero_labels().join(", ")
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SymmetryRow {
    pub name: String,
    pub residual: ResidualReport,
    pub probe_worst: f64,
    pub expected: Option<String>,
    pub class: SymmetryClass,
    pub is_symmetry: bool,
    /// For Doob entries with a recorded `k`: the Doob residual vanishes.
    pub doob_ok: Option<bool>,
    /// For almost-Doob entries with a recorded `k`: `H = σᵀ∇k` yet `L(k) ≠ 0`.
    pub remark_ok: Option<bool>,
}

impl SymmetryRow {
    pub fn class_ok(&self) -> bool {
        self.expected
            .as_deref()
            .is_none_or(|c| c == self.class.name())
    }

    pub fn pass(&self) -> bool {
        self.is_symmetry
            && self.probe_worst < 1e-9
            && self.class_ok()
            && self.doob_ok != Some(false)
            && self.remark_ok != Some(false)
    }
}

#[derive(Debug, Clone)]
pub struct BridgeRow {
    pub symmetry: String,
    pub xi: PdeSymmetry,
    /// Name of the listed generator it matches and the scalar factor.
    pub matched: Option<(String, Coeff)>,
    pub round_trip: bool,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub model: String,
    pub symmetries: Vec<SymmetryRow>,
    pub bridge: Vec<BridgeRow>,
    pub pde_ok: Vec<(String, bool)>,
    pub generators_matched: usize,
    pub generators_expected: usize,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.symmetries.iter().all(SymmetryRow::pass)
            && self.pde_ok.iter().all(|(_, ok)| *ok)
            && self.bridge.iter().all(|b| b.matched.is_some() && b.round_trip)
            && self.generators_matched == self.generators_expected
    }

    pub fn to_json(&self, sde: &Sde) -> Value {
        json!({
            "model": self.model,
            "pass": self.pass(),
            "symmetries": self.symmetries.iter().map(|r| json!({
                "name": r.name,
                "is_symmetry": r.is_symmetry,
                "probe_worst": r.probe_worst,
                "expected": r.expected,
                "class": r.class.to_json(),
                "doob_ok": r.doob_ok,
                "remark_ok": r.remark_ok,
                "pass": r.pass(),
            })).collect::<Vec<_>>(),
            "bridge": self.bridge.iter().map(|b| json!({
                "symmetry": b.symmetry,
                "xi": b.xi.describe(sde),
                "matched": b.matched.as_ref().map(|(n, _)| n),
                "scalar": b.matched.as_ref().map(|(_, c)| c.to_string()),
                "round_trip": b.round_trip,
            })).collect::<Vec<_>>(),
            "pde": self.pde_ok.iter().map(|(n, ok)| json!({"name": n, "ok": ok})).collect::<Vec<_>>(),
            "generators_matched": self.generators_matched,
            "generators_expected": self.generators_expected,
        })
    }
}

fn check_row(sde: &Sde, name: &str, d: &SymmetryDecl) -> Result<SymmetryRow> {
    let mut residual = sde_residual(sde, &d.v)?;
    let probe_worst = residual.probe(sde, PROBES, PROBE_SEED).worst;
    let c = classify(sde, &d.v)?;
    let (doob_ok, remark_ok) = match (d.class.as_deref(), &d.k) {
        (Some("doob"), Some(k)) => (Some(doob_residual(sde, &d.v, k)?.all_zero()), None),
        (Some("almost_doob"), Some(k)) => {
            let h_ok = sigma_t_grad(sde, k) == d.v.h;
            (None, Some(h_ok && !sde.generator_apply(k).is_zero()))
        }
        _ => (None, None),
    };
    Ok(SymmetryRow {
        name: name.to_string(),
        residual,
        probe_worst,
        expected: d.class.clone(),
        class: c.class,
        is_symmetry: c.is_symmetry,
        doob_ok,
        remark_ok,
    })
}

fn bridge_row(
    sde: &Sde,
    model: &ModelFile,
    name: &str,
    v: &InfTransform,
    k: &Expr,
) -> Result<BridgeRow> {
    let xi = sde_to_pde(sde, v, k)?;
    let matched = model
        .pdes
        .iter()
        .find_map(|(n, p)| xi.ratio_to(p).map(|c| (n.clone(), c)));
    Ok(BridgeRow {
        symmetry: name.to_string(),
        xi,
        matched,
        round_trip: round_trip_check(sde, v, k)?,
    })
}

/// Residuals, classes and the Kolmogorov correspondence for one model.
pub fn verify(entry: &CatalogEntry) -> Result<VerifyReport> {
    let sde = entry.sde();
    let model = &entry.model;
    let mut symmetries = Vec::new();
    let mut bridge = Vec::new();
    for (n, d) in &model.symmetries {
        let row = check_row(sde, n, d)?;
        if let SymmetryClass::Doob(ck) = &row.class {
            let k = d.k.as_ref().unwrap_or(ck);
            if row.is_symmetry && !entry.families.contains(n) {
                bridge.push(bridge_row(sde, model, n, &d.v, k)?);
            }
        }
        symmetries.push(row);
    }
    let (zero, k) = entry.trivial();
    bridge.push(bridge_row(sde, model, "u_scaling", &zero, &k)?);
    let pde_ok = model
        .pdes
        .iter()
        .map(|(n, p)| Ok((n.clone(), pde_residual(sde, p)?.all_zero())))
        .collect::<Result<Vec<_>>>()?;
    let matched: BTreeSet<String> = bridge
        .iter()
        .filter_map(|b| b.matched.as_ref().map(|(n, _)| n.clone()))
        .collect();
    Ok(VerifyReport {
        model: entry.name().to_string(),
        symmetries,
        bridge,
        pde_ok,
        generators_matched: matched.len(),
        generators_expected: model.pdes.len(),
    })
}

pub fn verify_all() -> Result<Vec<VerifyReport>> {
    entries()?.iter().map(verify).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_self_test() {
        self_test().unwrap();
    }

    #[test]
    fn unknown_model() {
        assert_eq!(load("heston").unwrap_err(), Error::UnknownModel("heston".into()));
    }

    #[test]
    fn every_model_verifies() {
        for r in verify_all().unwrap() {
            for s in &r.symmetries {
                assert!(s.pass(), "{}.{}: {:?} {:?}", r.model, s.name, s.class, s);
            }
            for b in &r.bridge {
                assert!(b.matched.is_some() && b.round_trip, "{}.{}", r.model, b.symmetry);
            }
            assert_eq!(r.generators_matched, r.generators_expected, "{}", r.model);
        }
    }

    #[test]
    fn alpha_z_is_a_quarter_of_v2() {
        let e = load("bm1d").unwrap();
        let v2 = &e.model.symmetry("V2").unwrap().v;
        let va = &e.model.symmetry("Valpha_z").unwrap().v;
        assert_eq!(*va, v2.scale(&Expr::ratio(1, 4)));
    }

    #[test]
    fn beta_witness_is_the_plane() {
        let e = load("bm2d").unwrap();
        let c = classify(e.sde(), &e.model.symmetry("Vbeta_z").unwrap().v).unwrap();
        match c.class {
            SymmetryClass::NonDoob { witness, .. } => {
                assert_eq!((witness.0.name(), witness.1.name()), ("x", "y"))
            }
            other => panic!("{:?}", other),
        }
    }
}
