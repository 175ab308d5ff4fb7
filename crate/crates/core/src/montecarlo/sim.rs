use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::McConfig;
use crate::error::{Error, Result};
use crate::expr::compiled::Compiled;
use crate::expr::Point;
use crate::sde::{Interval, Sde};
use crate::symbol::Symbol;
use crate::transform::FiniteTransform;

/// Everything needed to regenerate a path from its index.
#[derive(Debug)]
pub(crate) struct Source {
    pub vars: Vec<Symbol>,
    pub time_var: Option<usize>,
    pub params: Point,
    drift: Vec<Compiled>,
    diffusion: Vec<Vec<Compiled>>,
    domain: Vec<Interval>,
    pub x0: Vec<f64>,
    pub m: usize,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Source {
    fn new(sde: &Sde, cfg: &McConfig) -> Result<Self> {
        cfg.validate()?;
        if !sde.nonexplosive {
            return Err(Error::NonExplosiveRequired);
        }
        let params = param_point(sde, cfg)?;
        let drift = sde
            .drift
            .iter()
            .map(|e| Compiled::new(e, &sde.vars, &params))
            .collect::<Result<_>>()?;
        let diffusion = sde
            .diffusion
            .iter()
            .map(|r| r.iter().map(|e| Compiled::new(e, &sde.vars, &params)).collect())
            .collect::<Result<_>>()?;
        for k in cfg.x0.keys() {
            if sde.var_index(k).is_none() {
                return Err(Error::InvalidConfig(format!("x0 names unknown variable {}", k)));
            }
        }
        let mut x0 = Vec::with_capacity(sde.n());
        for (i, v) in sde.vars.iter().enumerate() {
            let val = match cfg.x0.get(v.name()) {
                Some(x) => *x,
                None if Some(i) == sde.time_var => 0.0,
                None => {
                    return Err(Error::InvalidConfig(format!("x0 missing for {}", v)));
                }
            };
            if !sde.domain[i].contains(val) {
                return Err(Error::InvalidConfig(format!(
                    "x0 {} = {} lies outside the domain",
                    v, val
                )));
            }
            x0.push(val);
        }
        Ok(Source {
            vars: sde.vars.clone(),
            time_var: sde.time_var,
            params,
            drift,
            diffusion,
            domain: sde.domain.clone(),
            x0,
            m: sde.m(),
            dt: cfg.dt,
            steps: cfg.steps(),
            seed: cfg.seed,
        })
    }

    /// Runs path `p`, calling `visit(step, x_k, dW_k)` before every update,
    /// and returns the terminal state.
    pub fn replay(
        &self,
        p: usize,
        mut visit: impl FnMut(usize, &[f64], &[f64]) -> Result<()>,
    ) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(p as u64);
        let n = self.x0.len();
        let sq = self.dt.sqrt();
        let mut x = self.x0.clone();
        let mut next = vec![0.0; n];
        let mut dw = vec![0.0; self.m];
        for k in 0..self.steps {
            for d in dw.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *d = z * sq;
            }
            visit(k, &x, &dw)?;
            for i in 0..n {
                let mut v = x[i] + self.drift[i].eval(&x) * self.dt;
                for (a, d) in dw.iter().enumerate() {
                    let s = &self.diffusion[i][a];
                    if !s.is_zero() {
                        v += s.eval(&x) * d;
                    }
                }
                next[i] = v;
            }
            std::mem::swap(&mut x, &mut next);
            if (0..n).any(|i| !self.domain[i].contains(x[i])) {
                return Err(Error::DomainExit { path: p, step: k + 1 });
            }
        }
        Ok(x)
    }
}

fn param_point(sde: &Sde, cfg: &McConfig) -> Result<Point> {
    let mut out = Point::new();
    for p in &sde.params {
        let v = cfg
            .params
            .get(p.name())
            .ok_or_else(|| Error::InvalidConfig(format!("no value for parameter {}", p)))?;
        out.insert(p.clone(), *v);
    }
    Ok(out)
}

/// Simulated or transformed paths, kept only at the evaluation times.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub cfg: McConfig,
    pub vars: Vec<Symbol>,
    pub time_var: Option<usize>,
    pub m: usize,
    pub times: Vec<f64>,
    states: Vec<f64>,
    w_prime: Vec<f64>,
    /// Girsanov log-density over the whole horizon.
    pub logw: Vec<f64>,
    /// Total elapsed time on the path's own clock.
    pub clock: Vec<f64>,
    pub(crate) source: Arc<Source>,
}

impl PathBundle {
    pub fn n_paths(&self) -> usize {
        self.logw.len()
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    /// State of path `p` at evaluation time `e`.
    pub fn state(&self, p: usize, e: usize) -> &[f64] {
        let n = self.n();
        let o = (p * self.times.len() + e) * n;
        &self.states[o..o + n]
    }

    /// Driving Brownian motion of path `p` at evaluation time `e`.
    pub fn w(&self, p: usize, e: usize) -> &[f64] {
        let o = (p * self.times.len() + e) * self.m;
        &self.w_prime[o..o + self.m]
    }

    /// Component `c` across paths at evaluation time `e`.
    pub fn column(&self, e: usize, c: usize) -> Vec<f64> {
        (0..self.n_paths()).map(|p| self.state(p, e)[c]).collect()
    }

    pub fn w_column(&self, e: usize, a: usize) -> Vec<f64> {
        (0..self.n_paths()).map(|p| self.w(p, e)[a]).collect()
    }

    /// Indices of non-time variables.
    pub fn spatial(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| Some(i) != self.time_var).collect()
    }

    /// Rows `path_id, t, X_1..X_n, logw`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let names: Vec<String> = self.vars.iter().map(|v| v.to_string()).collect();
        writeln!(w, "path_id,t,{},logw", names.join(","))?;
        for p in 0..self.n_paths() {
            for (e, t) in self.times.iter().enumerate() {
                let xs: Vec<String> = self.state(p, e).iter().map(|x| format!("{:e}", x)).collect();
                writeln!(w, "{},{},{},{:e}", p, t, xs.join(","), self.logw[p])?;
            }
        }
        Ok(())
    }
}

struct PathOut {
    states: Vec<f64>,
    wp: Vec<f64>,
    logw: f64,
    clock: f64,
}

/// Records linear interpolations at increasing target times.
struct Recorder<'a> {
    times: &'a [f64],
    next: usize,
}

impl Recorder<'_> {
    /// Interpolation weights for targets falling in `(t0, t1]`.
    fn hits(&mut self, t0: f64, t1: f64, mut f: impl FnMut(f64)) {
        while self.next < self.times.len() && self.times[self.next] <= t1 {
            let s = if t1 > t0 { (self.times[self.next] - t0) / (t1 - t0) } else { 1.0 };
            f(s.clamp(0.0, 1.0));
            self.next += 1;
        }
    }
}

fn lerp_into(out: &mut Vec<f64>, a: &[f64], b: &[f64], s: f64) {
    out.extend(a.iter().zip(b).map(|(x, y)| x + s * (y - x)));
}

fn collect(results: Vec<Result<PathOut>>) -> Result<Vec<PathOut>> {
    results.into_iter().collect()
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("eval times must be increasing".into()));
    }
    Ok(())
}

/// Euler–Maruyama paths of `sde`, sampled at `cfg` evaluation times.
///
/// Path `p` draws its increments from stream `p` of a generator seeded with
/// `cfg.seed`, so results do not depend on scheduling.
pub fn simulate(sde: &Sde, cfg: &McConfig) -> Result<PathBundle> {
    let source = Arc::new(Source::new(sde, cfg)?);
    let times = cfg.times();
    check_times(&times)?;
    let horizon = source.steps as f64 * source.dt;
    if let Some(t) = times.iter().find(|&&t| t > horizon + 1e-12) {
        return Err(Error::InvalidConfig(format!("eval time {} beyond horizon {}", t, horizon)));
    }
    let n = source.x0.len();
    let m = source.m;
    let outs: Vec<Result<PathOut>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rec = Recorder { times: &times, next: 0 };
            let mut states = Vec::with_capacity(times.len() * n);
            let mut wp = Vec::with_capacity(times.len() * m);
            let mut w = vec![0.0; m];
            let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
            let dt = source.dt;
            let terminal = source.replay(p, |k, x, dw| {
                if let Some((px, pw)) = prev.take() {
                    let t0 = (k - 1) as f64 * dt;
                    rec.hits(t0, k as f64 * dt, |s| {
                        lerp_into(&mut states, &px, x, s);
                        lerp_into(&mut wp, &pw, &w, s);
                    });
                }
                let before = w.clone();
                for (a, d) in dw.iter().enumerate() {
                    w[a] += d;
                }
                prev = Some((x.to_vec(), before));
                Ok(())
            })?;
            if let Some((px, pw)) = prev {
                let k = source.steps;
                rec.hits((k - 1) as f64 * dt, k as f64 * dt + 1e-12, |s| {
                    lerp_into(&mut states, &px, &terminal, s.min(1.0));
                    lerp_into(&mut wp, &pw, &w, s.min(1.0));
                });
            }
            Ok(PathOut {
                states,
                wp,
                logw: 0.0,
                clock: horizon,
            })
        })
        .collect();
    assemble(cfg.clone(), &source, times, collect(outs)?)
}

fn assemble(cfg: McConfig, source: &Arc<Source>, times: Vec<f64>, outs: Vec<PathOut>) -> Result<PathBundle> {
    let mut states = Vec::new();
    let mut w_prime = Vec::new();
    let mut logw = Vec::new();
    let mut clock = Vec::new();
    for o in outs {
        if !o.logw.is_finite() {
            return Err(Error::InvalidConfig("non-finite log-weight".into()));
        }
        states.extend(o.states);
        w_prime.extend(o.wp);
        logw.push(o.logw);
        clock.push(o.clock);
    }
    Ok(PathBundle {
        cfg,
        vars: source.vars.clone(),
        time_var: source.time_var,
        m: source.m,
        times,
        states,
        w_prime,
        logw,
        clock,
        source: Arc::clone(source),
    })
}

/// Samples `Φ(X)` and `W′` at evaluation times on the transformed clock.
struct Emitter<'a> {
    rec: Recorder<'a>,
    phi: &'a [Compiled],
    states: Vec<f64>,
    wp: Vec<f64>,
}

impl Emitter<'_> {
    fn emit(&mut self, x: (&[f64], &[f64]), w: (&[f64], &[f64]), t0: f64, t1: f64) {
        let (phi, states, wp) = (self.phi, &mut self.states, &mut self.wp);
        self.rec.hits(t0, t1, |s| {
            let mut xi = Vec::with_capacity(x.0.len());
            lerp_into(&mut xi, x.0, x.1, s);
            states.extend(phi.iter().map(|f| f.eval(&xi)));
            lerp_into(wp, w.0, w.1, s);
        });
    }
}

struct CompiledTransform {
    phi: Vec<Compiled>,
    b: Vec<Vec<Compiled>>,
    eta: Compiled,
    h: Vec<Compiled>,
}

impl CompiledTransform {
    fn new(t: &FiniteTransform, source: &Source) -> Result<Self> {
        let c = |e| Compiled::new(e, &source.vars, &source.params);
        Ok(CompiledTransform {
            phi: t.phi.iter().map(c).collect::<Result<_>>()?,
            b: t.b.iter().map(|r| r.iter().map(c).collect()).collect::<Result<_>>()?,
            eta: c(&t.eta)?,
            h: t.h.iter().map(c).collect::<Result<_>>()?,
        })
    }
}

/// Largest transformed time that every path is guaranteed to reach.
///
/// A constant `η` gives `ηT` exactly; otherwise a pilot run over at most
/// 1000 paths gives `0.9·η_min·T`, along with the path attaining `η_min`.
pub fn safe_horizon(bundle: &PathBundle, t: &FiniteTransform) -> Result<(f64, usize)> {
    let src = &bundle.source;
    let ct = CompiledTransform::new(t, src)?;
    let horizon = src.steps as f64 * src.dt;
    if let Some(c) = ct.eta.as_constant() {
        if !(c > 0.0) {
            return Err(Error::InvalidTransform(format!("η = {} is not positive", c)));
        }
        return Ok((c * horizon, 0));
    }
    let pilot = bundle.n_paths().min(1000);
    let mins: Vec<Result<f64>> = (0..pilot)
        .into_par_iter()
        .map(|p| {
            let mut mn = f64::INFINITY;
            src.replay(p, |_, x, _| {
                mn = mn.min(ct.eta.eval(x));
                Ok(())
            })?;
            Ok(mn)
        })
        .collect();
    let mins: Vec<f64> = mins.into_iter().collect::<Result<_>>()?;
    let (arg, mn) = mins
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    if !(mn > 0.0) {
        return Err(Error::InvalidTransform(format!(
            "η reaches {} on pilot path {}",
            mn, arg
        )));
    }
    Ok((0.9 * mn * horizon, arg))
}

/// Applies `P_T` path by path: Girsanov weight `Σ h·ΔW − ½Σ|h|²dt`, clock
/// `t′ = Σ η dt`, `ΔW′ = √η B (ΔW − h dt)` and state `Φ(X)` sampled at the
/// bundle's evaluation times on the new clock.
pub fn transform_paths(bundle: &PathBundle, t: &FiniteTransform) -> Result<PathBundle> {
    let src = Arc::clone(&bundle.source);
    if t.phi.len() != src.x0.len() || t.h.len() != src.m {
        return Err(Error::Shape("transformation does not match the model".into()));
    }
    let ct = CompiledTransform::new(t, &src)?;
    let times = bundle.times.clone();
    let (safe, arg) = safe_horizon(bundle, t)?;
    if let Some(&last) = times.last() {
        if last > safe + 1e-12 {
            return Err(Error::ClockTooShort {
                path: arg,
                requested: last,
                available: safe,
            });
        }
    }
    let n = src.x0.len();
    let m = src.m;
    let dt = src.dt;
    let outs: Vec<Result<PathOut>> = (0..bundle.n_paths())
        .into_par_iter()
        .map(|p| {
            let mut out = Emitter {
                rec: Recorder { times: &times, next: 0 },
                phi: &ct.phi,
                states: Vec::with_capacity(times.len() * n),
                wp: Vec::with_capacity(times.len() * m),
            };
            let mut w = vec![0.0; m];
            let mut logw = 0.0;
            let mut clock = 0.0;
            let mut hv = vec![0.0; m];
            let mut inc = vec![0.0; m];
            let mut prev: Option<(Vec<f64>, Vec<f64>, f64)> = None;
            let terminal = src.replay(p, |k, x, dw| {
                if let Some((px, pw, t0)) = prev.take() {
                    out.emit((&px, x), (&pw, &w), t0, clock);
                }
                let eta = ct.eta.eval(x);
                if !(eta > 0.0) {
                    return Err(Error::InvalidTransform(format!(
                        "η = {} at step {} of path {}",
                        eta, k, p
                    )));
                }
                for a in 0..m {
                    hv[a] = ct.h[a].eval(x);
                }
                let mut norm = 0.0;
                for a in 0..m {
                    logw += hv[a] * dw[a];
                    norm += hv[a] * hv[a];
                    inc[a] = dw[a] - hv[a] * dt;
                }
                logw -= 0.5 * norm * dt;
                let before = w.clone();
                let se = eta.sqrt();
                for a in 0..m {
                    let mut r = 0.0;
                    for b in 0..m {
                        r += ct.b[a][b].eval(x) * inc[b];
                    }
                    w[a] += se * r;
                }
                let t0 = clock;
                clock += eta * dt;
                prev = Some((x.to_vec(), before, t0));
                Ok(())
            })?;
            if let Some((px, pw, t0)) = prev {
                out.emit((&px, &terminal), (&pw, &w), t0, clock * (1.0 + 1e-12));
            }
            if out.rec.next < times.len() {
                return Err(Error::ClockTooShort {
                    path: p,
                    requested: times[out.rec.next],
                    available: clock,
                });
            }
            Ok(PathOut {
                states: out.states,
                wp: out.wp,
                logw,
                clock,
            })
        })
        .collect();
    assemble(bundle.cfg.clone(), &src, times, collect(outs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
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

    fn cfg(n: usize) -> McConfig {
        let mut c = McConfig {
            n_paths: n,
            dt: 0.01,
            seed: 3,
            eval_times: vec![0.5, 1.0],
            ..McConfig::default()
        };
        c.x0.insert("x".into(), 0.0);
        c
    }

    #[test]
    fn terminal_state_is_sum_of_increments() {
        let b = simulate(&bm(), &cfg(10)).unwrap();
        for p in 0..10 {
            assert_eq!(b.state(p, 1)[0], b.w(p, 1)[0]);
            assert!((b.state(p, 1)[1] - 1.0).abs() < 1e-12);
            assert!((b.state(p, 0)[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_transform_keeps_paths() {
        let s = bm();
        let b = simulate(&s, &cfg(20)).unwrap();
        let id = FiniteTransform::identity(&s.vars, 1);
        let t = transform_paths(&b, &id).unwrap();
        for p in 0..20 {
            for e in 0..2 {
                for c in 0..2 {
                    assert!((t.state(p, e)[c] - b.state(p, e)[c]).abs() < 1e-12);
                }
            }
            assert_eq!(t.logw[p], 0.0);
        }
    }

    #[test]
    fn time_change_beyond_clock_is_refused() {
        let s = bm();
        let b = simulate(&s, &cfg(5)).unwrap();
        let tc = FiniteTransform::time_change(&s.vars, 1, Expr::ratio(1, 2));
        assert!(matches!(
            transform_paths(&b, &tc),
            Err(Error::ClockTooShort { .. })
        ));
    }

    #[test]
    fn domain_exit_reports_lowest_path() {
        let s = bm().with_domain("x", Interval { lo: -0.05, hi: 0.05 }).unwrap();
        let e = simulate(&s, &cfg(50)).unwrap_err();
        assert!(matches!(e, Error::DomainExit { path: 0, .. }), "{:?}", e);
    }
}
