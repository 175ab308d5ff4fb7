use rayon::prelude::*;
use serde::Serialize;

use super::sim::PathBundle;
use super::stats::{mean_and_var, mean_weight, pairwise_sum, snis, weighted_ks, KsResult};
use crate::doob::DensityRecipe;
use crate::error::{Error, Result};
use crate::expr::compiled::Compiled;

/// One moment comparison `E_Q[f(X′_t)]` against `E[f(X_t)]`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub time: f64,
    /// Exponents over the spatial coordinates.
    pub exponents: Vec<u32>,
    pub transformed: f64,
    pub direct: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsRow {
    pub time: f64,
    pub coordinate: usize,
    pub d: f64,
    pub n_eff: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub moments: Vec<MomentRow>,
    pub ks: Vec<KsRow>,
    pub mean_weight: f64,
    pub mean_weight_se: f64,
    pub z_max: f64,
    pub p_min: f64,
    pub seeds: (u64, u64),
    pub n_paths: (usize, usize),
    pub pass: bool,
}

impl CompareReport {
    pub fn worst_z(&self) -> f64 {
        self.moments.iter().map(|m| m.z.abs()).fold(0.0, f64::max)
    }

    pub fn min_p(&self) -> f64 {
        self.ks.iter().map(|k| k.p_value).fold(1.0, f64::min)
    }
}

/// Exponent vectors with total degree `1..=cap` over `k` coordinates.
pub fn exponent_vectors(k: usize, cap: u32) -> Vec<Vec<u32>> {
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            if cur.iter().sum::<u32>() > 0 {
                out.push(cur.clone());
            }
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(k, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, cap, &mut Vec::new(), &mut out);
    out.sort_by_key(|v| (v.iter().sum::<u32>(), std::cmp::Reverse(v.clone())));
    out
}

fn monomial_values(b: &PathBundle, e: usize, coords: &[usize], exps: &[u32]) -> Vec<f64> {
    (0..b.n_paths())
        .map(|p| {
            let s = b.state(p, e);
            coords
                .iter()
                .zip(exps)
                .map(|(&c, &k)| s[c].powi(k as i32))
                .product()
        })
        .collect()
}

/// Weighted moments and KS statistics of a transformed bundle against a
/// bundle simulated directly from the transformed equation.
pub fn weak_compare(
    transformed: &PathBundle,
    direct: &PathBundle,
    z_max: f64,
    p_min: f64,
) -> Result<CompareReport> {
    if transformed.times != direct.times {
        return Err(Error::InvalidConfig("bundles use different evaluation times".into()));
    }
    if transformed.n() != direct.n() {
        return Err(Error::Shape("bundles have different dimensions".into()));
    }
    let coords = direct.spatial();
    let exps = exponent_vectors(coords.len(), transformed.cfg.degree_cap.max(1));
    let zero = vec![0.0; direct.n_paths()];
    let mut moments = Vec::new();
    let mut ks = Vec::new();
    for (e, &t) in transformed.times.iter().enumerate() {
        for ex in &exps {
            let ft = monomial_values(transformed, e, &coords, ex);
            let fd = monomial_values(direct, e, &coords, ex);
            let (mt, vt) = snis(&ft, &transformed.logw);
            let (md, vd) = snis(&fd, &zero);
            let z = (mt - md) / (vt + vd).sqrt();
            moments.push(MomentRow {
                time: t,
                exponents: ex.clone(),
                transformed: mt,
                direct: md,
                z: if z.is_finite() { z } else if mt == md { 0.0 } else { f64::INFINITY },
            });
        }
        for &c in &coords {
            let a = transformed.column(e, c);
            let b = direct.column(e, c);
            let KsResult { d, n_eff, p_value } = weighted_ks(&a, &transformed.logw, &b);
            ks.push(KsRow {
                time: t,
                coordinate: c,
                d,
                n_eff,
                p_value,
            });
        }
    }
    let (mw, se) = mean_weight(&transformed.logw);
    let pass = moments.iter().all(|m| m.z.abs() < z_max) && ks.iter().all(|k| k.p_value > p_min);
    Ok(CompareReport {
        moments,
        ks,
        mean_weight: mw,
        mean_weight_se: se,
        z_max,
        p_min,
        seeds: (transformed.cfg.seed, direct.cfg.seed),
        n_paths: (transformed.n_paths(), direct.n_paths()),
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PathwiseReport {
    pub max: f64,
    pub mean: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Per path, `|Σ h·ΔW − ½Σ|h|²dt − (𝔥(X_T) − 𝔥(X_0))|` on the bundle's
/// own paths.
pub fn doob_pathwise_check(bundle: &PathBundle, recipe: &DensityRecipe) -> Result<PathwiseReport> {
    let pot = recipe.doob_potential.as_ref().ok_or(Error::PotentialMissing)?;
    let src = &bundle.source;
    let c = |e| Compiled::new(e, &src.vars, &src.params);
    let theta: Vec<Compiled> = recipe.theta.iter().map(c).collect::<Result<_>>()?;
    let half = c(&recipe.half_norm)?;
    let hp = c(pot)?;
    let dt = src.dt;
    let diffs: Vec<Result<f64>> = (0..bundle.n_paths())
        .into_par_iter()
        .map(|p| {
            let mut lhs = 0.0;
            let terminal = src.replay(p, |_, x, dw| {
                for (t, d) in theta.iter().zip(dw) {
                    lhs += t.eval(x) * d;
                }
                lhs -= half.eval(x) * dt;
                Ok(())
            })?;
            let rhs = hp.eval(&terminal) - hp.eval(&src.x0);
            Ok((lhs - rhs).abs())
        })
        .collect();
    let diffs: Vec<f64> = diffs.into_iter().collect::<Result<_>>()?;
    Ok(PathwiseReport {
        max: diffs.iter().cloned().fold(0.0, f64::max),
        mean: pairwise_sum(&diffs) / diffs.len() as f64,
        dt,
        n_paths: diffs.len(),
        seed: src.seed,
    })
}

/// Girsanov sanity numbers for one component of `W′` at the last
/// evaluation time: weighted first and second moments with their standard
/// errors, and the mean weight.
#[derive(Debug, Clone, Serialize)]
pub struct GirsanovReport {
    pub mean: f64,
    pub mean_se: f64,
    pub second: f64,
    pub second_se: f64,
    pub mean_weight: f64,
    pub mean_weight_se: f64,
}

pub fn girsanov_moments(bundle: &PathBundle, a: usize) -> GirsanovReport {
    let e = bundle.times.len() - 1;
    let w = bundle.w_column(e, a);
    let sq: Vec<f64> = w.iter().map(|x| x * x).collect();
    let (m1, v1) = snis(&w, &bundle.logw);
    let (m2, v2) = snis(&sq, &bundle.logw);
    let (mw, se) = mean_weight(&bundle.logw);
    GirsanovReport {
        mean: m1,
        mean_se: v1.sqrt(),
        second: m2,
        second_se: v2.sqrt(),
        mean_weight: mw,
        mean_weight_se: se,
    }
}

/// Plain mean and its standard error for a column, for unweighted checks.
pub fn plain_mean(bundle: &PathBundle, e: usize, c: usize) -> (f64, f64) {
    let (m, v) = mean_and_var(&bundle.column(e, c));
    (m, v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_two_coords() {
        let v = exponent_vectors(2, 2);
        assert_eq!(v, vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(exponent_vectors(1, 3), vec![vec![1], vec![2], vec![3]]);
    }
}
