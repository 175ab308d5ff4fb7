//! TOML model files.
//!
//! ```toml
//! [model]
//! name = "ou"
//! vars = ["x", "z"]
//! time_var = "z"
//! params = ["a", "b"]
//! drift = ["a*x + b", "1"]
//! sigma = ["1", "0"]            # one column may be written flat
//! nonexplosive = true
//! domain = { x = { lo = 0.0, hi = inf } }
//!
//! [symmetry.V1]
//! y = ["1/2*exp(-a*z)", "0"]
//! tau = "0"
//! h = ["a*exp(-a*z)"]
//! k = "(a*x + b)*exp(-a*z)"
//! ```
//!
//! Further sections: `[pde.NAME]` (`m`, `phi`, `k`), `[transform.NAME]`
//! (`phi`, `phi_inv`, `b`, `eta`, `h`, `potential`), `[ansatz]` (`basis`,
//! `override`) and `[mc]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzBasis, Component};
use crate::bridge::PdeSymmetry;
use crate::error::{Error, Result};
use crate::expr::matrix::{self, Mat};
use crate::expr::Expr;
use crate::io::parse::parse_expr;
use crate::montecarlo::McConfig;
use crate::sde::{Interval, Sde};
use crate::symbol::Symbol;
use crate::transform::{FiniteTransform, InfTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryDecl {
    pub v: InfTransform,
    pub k: Option<Expr>,
    /// Expected class name, when the file records one.
    pub class: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformDecl {
    pub t: FiniteTransform,
    pub potential: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub sde: Sde,
    pub symmetries: BTreeMap<String, SymmetryDecl>,
    pub pdes: BTreeMap<String, PdeSymmetry>,
    pub transforms: BTreeMap<String, TransformDecl>,
    pub ansatz: Option<AnsatzBasis>,
    pub mc: Option<McConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MatRaw {
    Full(Vec<Vec<String>>),
    Column(Vec<String>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRaw {
    name: String,
    vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_var: Option<String>,
    #[serde(default)]
    params: Vec<String>,
    drift: Vec<String>,
    sigma: MatRaw,
    #[serde(default)]
    nonexplosive: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    domain: BTreeMap<String, Interval>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymmetryRaw {
    y: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<Vec<Vec<String>>>,
    #[serde(default = "zero_str")]
    tau: String,
    h: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PdeRaw {
    m: String,
    phi: Vec<String>,
    #[serde(default = "zero_str")]
    k: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformRaw {
    phi: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_inv: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<MatRaw>,
    #[serde(default = "one_str")]
    eta: String,
    h: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    potential: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnsatzRaw {
    basis: Vec<String>,
    #[serde(default, rename = "override", skip_serializing_if = "BTreeMap::is_empty")]
    overrides: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRaw {
    model: ModelRaw,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    symmetry: BTreeMap<String, SymmetryRaw>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pde: BTreeMap<String, PdeRaw>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    transform: BTreeMap<String, TransformRaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ansatz: Option<AnsatzRaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mc: Option<McConfig>,
}

fn zero_str() -> String {
    "0".into()
}
fn one_str() -> String {
    "1".into()
}

struct Scope {
    vars: Vec<Symbol>,
    params: Vec<Symbol>,
}

impl Scope {
    fn expr(&self, what: &str, s: &str) -> Result<Expr> {
        parse_expr(s, &self.vars, &self.params)
            .map_err(|e| Error::ModelFile(format!("{}: `{}`: {}", what, s, e)))
    }

    fn vec(&self, what: &str, v: &[String]) -> Result<Vec<Expr>> {
        v.iter()
            .enumerate()
            .map(|(i, s)| self.expr(&format!("{}[{}]", what, i), s))
            .collect()
    }

    fn mat(&self, what: &str, m: &MatRaw) -> Result<Mat> {
        match m {
            MatRaw::Full(rows) => rows
                .iter()
                .enumerate()
                .map(|(i, r)| self.vec(&format!("{}[{}]", what, i), r))
                .collect(),
            MatRaw::Column(col) => Ok(self
                .vec(what, col)?
                .into_iter()
                .map(|e| vec![e])
                .collect()),
        }
    }
}

fn ansatz_basis(scope: &Scope, sde: &Sde, a: AnsatzRaw) -> Result<AnsatzBasis> {
    let mut basis = AnsatzBasis::uniform(scope.vec("ansatz.basis", &a.basis)?);
    for (c, list) in a.overrides {
        let comp = parse_component(&c, sde)?;
        basis = basis.with(comp, scope.vec(&format!("ansatz.override.{}", c), &list)?);
    }
    Ok(basis)
}

/// A standalone basis file: `basis = [...]` plus an optional `[override]`
/// table, read in the scope of `sde`.
pub fn parse_basis(text: &str, sde: &Sde) -> Result<AnsatzBasis> {
    let raw: AnsatzRaw = toml::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))?;
    let scope = Scope {
        vars: sde.vars.clone(),
        params: sde.params.clone(),
    };
    ansatz_basis(&scope, sde, raw)
}

fn parse_component(s: &str, sde: &Sde) -> Result<Component> {
    let bad = || Error::ModelFile(format!("unknown ansatz component `{}`", s));
    let idx = |t: &str| -> Result<usize> { t.parse().map_err(|_| bad()) };
    let c = match s {
        "tau" => Component::Tau,
        "k" => Component::K,
        _ if s.starts_with("Y[") && s.ends_with(']') => Component::Y(idx(&s[2..s.len() - 1])?),
        _ if s.starts_with("H[") && s.ends_with(']') => Component::H(idx(&s[2..s.len() - 1])?),
        _ if s.starts_with("C[") && s.ends_with(']') => {
            let inner = &s[2..s.len() - 1];
            let (a, b) = inner.split_once("][").ok_or_else(bad)?;
            Component::C(idx(a)?, idx(b)?)
        }
        _ => return Err(bad()),
    };
    let ok = match c {
        Component::Y(i) => i < sde.n(),
        Component::H(a) => a < sde.m(),
        Component::C(a, b) => a < b && b < sde.m(),
        _ => true,
    };
    if ok {
        Ok(c)
    } else {
        Err(bad())
    }
}

fn strs(v: &[Expr]) -> Vec<String> {
    v.iter().map(|e| e.to_string()).collect()
}

fn mat_raw(m: &Mat) -> MatRaw {
    if matrix::cols(m) == 1 {
        MatRaw::Column(m.iter().map(|r| r[0].to_string()).collect())
    } else {
        MatRaw::Full(m.iter().map(|r| strs(r)).collect())
    }
}

impl ModelFile {
    pub fn new(sde: Sde) -> Self {
        ModelFile {
            sde,
            symmetries: BTreeMap::new(),
            pdes: BTreeMap::new(),
            transforms: BTreeMap::new(),
            ansatz: None,
            mc: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: FileRaw = toml::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))?;
        let m = raw.model;
        let vars: Vec<Symbol> = m.vars.iter().map(|s| Symbol::new(s)).collect();
        let params: Vec<Symbol> = m.params.iter().map(|s| Symbol::new(s)).collect();
        let scope = Scope {
            vars: vars.clone(),
            params: params.clone(),
        };
        let drift = scope.vec("drift", &m.drift)?;
        let sigma = scope.mat("sigma", &m.sigma)?;
        let mut sde = Sde::new(
            &m.name,
            vars,
            m.time_var.as_deref(),
            params,
            drift,
            sigma,
            m.nonexplosive,
        )?;
        for (v, iv) in m.domain {
            sde = sde.with_domain(&v, iv)?;
        }
        let mut out = ModelFile::new(sde);
        for (name, s) in raw.symmetry {
            let what = format!("symmetry.{}", name);
            let y = scope.vec(&format!("{}.y", what), &s.y)?;
            let h = scope.vec(&format!("{}.h", what), &s.h)?;
            let c = match &s.c {
                Some(c) => scope.mat(&format!("{}.c", what), &MatRaw::Full(c.clone()))?,
                None => matrix::zeros(h.len(), h.len()),
            };
            let tau = scope.expr(&format!("{}.tau", what), &s.tau)?;
            let v = InfTransform::new(y, c, tau, h)
                .map_err(|e| Error::ModelFile(format!("{}: {}", what, e)))?;
            let k = s
                .k
                .as_ref()
                .map(|k| scope.expr(&format!("{}.k", what), k))
                .transpose()?;
            out.symmetries.insert(
                name,
                SymmetryDecl {
                    v,
                    k,
                    class: s.class,
                },
            );
        }
        for (name, p) in raw.pde {
            let what = format!("pde.{}", name);
            out.pdes.insert(
                name,
                PdeSymmetry {
                    m_coef: scope.expr(&format!("{}.m", what), &p.m)?,
                    phi: scope.vec(&format!("{}.phi", what), &p.phi)?,
                    k: scope.expr(&format!("{}.k", what), &p.k)?,
                },
            );
        }
        for (name, t) in raw.transform {
            let what = format!("transform.{}", name);
            let h = scope.vec(&format!("{}.h", what), &t.h)?;
            let b = match &t.b {
                Some(b) => scope.mat(&format!("{}.b", what), b)?,
                None => matrix::identity(h.len()),
            };
            let ft = FiniteTransform {
                phi: scope.vec(&format!("{}.phi", what), &t.phi)?,
                phi_inv: t
                    .phi_inv
                    .as_ref()
                    .map(|p| scope.vec(&format!("{}.phi_inv", what), p))
                    .transpose()?,
                b,
                eta: scope.expr(&format!("{}.eta", what), &t.eta)?,
                h,
            };
            let potential = t
                .potential
                .as_ref()
                .map(|p| scope.expr(&format!("{}.potential", what), p))
                .transpose()?;
            out.transforms
                .insert(name, TransformDecl { t: ft, potential });
        }
        if let Some(a) = raw.ansatz {
            out.ansatz = Some(ansatz_basis(&scope, &out.sde, a)?);
        }
        out.mc = raw.mc;
        Ok(out)
    }

    pub fn print(&self) -> String {
        let s = &self.sde;
        let domain: BTreeMap<String, Interval> = s
            .vars
            .iter()
            .zip(&s.domain)
            .filter(|(_, iv)| **iv != Interval::REAL)
            .map(|(v, iv)| (v.to_string(), *iv))
            .collect();
        let raw = FileRaw {
            model: ModelRaw {
                name: s.name.clone(),
                vars: s.vars.iter().map(|v| v.to_string()).collect(),
                time_var: s.time_symbol().map(|t| t.to_string()),
                params: s.params.iter().map(|p| p.to_string()).collect(),
                drift: strs(&s.drift),
                sigma: mat_raw(&s.diffusion),
                nonexplosive: s.nonexplosive,
                domain,
            },
            symmetry: self
                .symmetries
                .iter()
                .map(|(n, d)| {
                    let c = (!matrix::is_zero(&d.v.c))
                        .then(|| d.v.c.iter().map(|r| strs(r)).collect());
                    (
                        n.clone(),
                        SymmetryRaw {
                            y: strs(&d.v.y),
                            c,
                            tau: d.v.tau.to_string(),
                            h: strs(&d.v.h),
                            k: d.k.as_ref().map(|k| k.to_string()),
                            class: d.class.clone(),
                        },
                    )
                })
                .collect(),
            pde: self
                .pdes
                .iter()
                .map(|(n, p)| {
                    (
                        n.clone(),
                        PdeRaw {
                            m: p.m_coef.to_string(),
                            phi: strs(&p.phi),
                            k: p.k.to_string(),
                        },
                    )
                })
                .collect(),
            transform: self
                .transforms
                .iter()
                .map(|(n, t)| {
                    let b = (t.t.b != matrix::identity(t.t.m())).then(|| {
                        MatRaw::Full(t.t.b.iter().map(|r| strs(r)).collect())
                    });
                    (
                        n.clone(),
                        TransformRaw {
                            phi: strs(&t.t.phi),
                            phi_inv: t.t.phi_inv.as_ref().map(|p| strs(p)),
                            b,
                            eta: t.t.eta.to_string(),
                            h: strs(&t.t.h),
                            potential: t.potential.as_ref().map(|p| p.to_string()),
                        },
                    )
                })
                .collect(),
            ansatz: self.ansatz.as_ref().map(|a| AnsatzRaw {
                basis: strs(&a.default),
                overrides: a
                    .overrides
                    .iter()
                    .map(|(c, l)| (c.to_string(), strs(l)))
                    .collect(),
            }),
            mc: self.mc.clone(),
        };
        toml::to_string(&raw).expect("model files serialize")
    }

    /// The named symmetry or an error listing what exists.
    pub fn symmetry(&self, name: &str) -> Result<&SymmetryDecl> {
        self.symmetries.get(name).ok_or_else(|| {
            Error::ModelFile(format!(
                "no symmetry `{}` in {} (have: {})",
                name,
                self.sde.name,
                self.symmetries.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn transform(&self, name: &str) -> Result<&TransformDecl> {
        self.transforms.get(name).ok_or_else(|| {
            Error::ModelFile(format!(
                "no transform `{}` in {} (have: {})",
                name,
                self.sde.name,
                self.transforms.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    /// Parses an expression in this model's scope.
    pub fn expr(&self, text: &str) -> Result<Expr> {
        parse_expr(text, &self.sde.vars, &self.sde.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIR: &str = r#"
[model]
name = "cir"
vars = ["x", "z"]
time_var = "z"
params = ["a", "b", "sigma0"]
drift = ["a*x + b", "1"]
sigma = ["sigma0*sqrt(x)", "0"]
nonexplosive = true
domain = { x = { lo = 0.0, hi = inf } }

[symmetry.V2]
y = ["x*exp(a*z)", "1/a*exp(a*z)"]
tau = "exp(a*z)"
h = ["0"]
k = "0"
class = "doob"

[transform.girsanov]
phi = ["x", "z"]
phi_inv = ["x", "z"]
h = ["1"]

[ansatz]
basis = ["1", "x", "z"]
override = { k = ["x"] }

[mc]
seed = 7
params = { a = -1.0, b = 1.0, sigma0 = 0.5 }
x0 = { x = 1.0 }
"#;

    #[test]
    fn parse_print_parse() {
        let m = ModelFile::parse(CIR).unwrap();
        assert_eq!(m.sde.domain[0].lo, 0.0);
        assert!(m.sde.domain[0].hi.is_infinite());
        assert_eq!(m.symmetries["V2"].class.as_deref(), Some("doob"));
        assert_eq!(m.ansatz.as_ref().unwrap().for_component(Component::K).len(), 1);
        let again = ModelFile::parse(&m.print()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = CIR.replace("tau = \"exp(a*z)\"", "tau = \"exp(x^2)\"");
        let err = ModelFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("symmetry.V2.tau"), "{}", err);
    }
}
