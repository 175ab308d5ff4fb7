use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use stochsym_core::ansatz::{closure_check, polynomial_basis, solve, AnsatzBasis, Generator, Mode};
use stochsym_core::bridge::{pde_to_sde, round_trip_check, sde_to_pde};
use stochsym_core::catalog;
use stochsym_core::determining::{doob_residual, pde_residual, sde_residual, ResidualReport};
use stochsym_core::doob::{classify, density_recipe, SymmetryClass};
use stochsym_core::io::{parse_basis, report, ModelFile, SymmetryDecl};
use stochsym_core::montecarlo::{
    doob_pathwise_check, simulate, transform_paths, weak_compare, McConfig, PathBundle,
};
use stochsym_core::{Error, Expr, Point, Result};

#[derive(Parser)]
#[command(name = "stochsym", version, about = "Symmetries of SDEs driven by Brownian motion")]
struct Cli {
    /// Worker threads for parallel work.
    #[arg(long, global = true, env = "STOCHSYM_THREADS")]
    threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckMode {
    General,
    Doob,
    Pde,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    General,
    Doob,
}

#[derive(Subcommand)]
enum Cmd {
    /// Residuals of the determining equations.
    Check {
        /// Catalog name or model file.
        model: String,
        #[arg(long = "symmetry")]
        symmetries: Vec<String>,
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value = "general")]
        mode: CheckMode,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long, default_value_t = 1)]
        probe_seed: u64,
    },
    /// Doob, almost-Doob or non-Doob.
    Classify {
        model: String,
        #[arg(long)]
        symmetry: String,
    },
    /// Kolmogorov-equation counterpart of a Doob symmetry, or back.
    Bridge {
        model: String,
        /// A symmetry name, or with `--reverse` a `[pde.NAME]` entry.
        #[arg(long)]
        symmetry: String,
        #[arg(long)]
        reverse: bool,
    },
    /// Solve the determining system over a finite ansatz.
    Solve {
        model: String,
        #[arg(long, value_enum, default_value = "doob")]
        mode: SolveMode,
        /// TOML file with `basis = [...]` and optional `[override]`.
        #[arg(long)]
        basis: Option<PathBuf>,
        /// Total-degree polynomial basis when neither file nor model gives one.
        #[arg(long, default_value_t = 2)]
        degree: u32,
    },
    /// Lie bracket of two symmetries.
    Bracket {
        model: String,
        #[arg(long = "symmetry", num_args = 1, required = true)]
        symmetries: Vec<String>,
    },
    /// Monte Carlo check of a finite transformation.
    Mc {
        model: String,
        #[arg(long)]
        transform: String,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Directory for CSV path dumps.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// The built-in models.
    Catalog {
        #[arg(long)]
        verify_all: bool,
        /// Write each model as a TOML file into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

fn load_model(arg: &str) -> Result<ModelFile> {
    match catalog::load(arg) {
        Ok(e) => Ok(e.model),
        Err(Error::UnknownModel(_)) if Path::new(arg).exists() => {
            let text = std::fs::read_to_string(arg).map_err(|e| Error::Io(e.to_string()))?;
            ModelFile::parse(&text)
        }
        Err(e) => Err(e),
    }
}

fn potential(model: &ModelFile, d: &SymmetryDecl) -> Result<Expr> {
    if let Some(k) = &d.k {
        return Ok(k.clone());
    }
    match classify(&model.sde, &d.v)?.class {
        SymmetryClass::Doob(k) => Ok(k),
        other => Err(Error::DoobResidualNonzero(format!(
            "symmetry is {}, not Doob",
            other.name()
        ))),
    }
}

struct Outcome {
    kind: &'static str,
    body: Value,
    pass: bool,
}

fn residual_json(r: &ResidualReport, probes: Option<(usize, u64, f64)>) -> Value {
    let mut v = r.to_json();
    if let Some((n, seed, worst)) = probes {
        v["probe"] = json!({"points": n, "seed": seed, "worst": worst, "tolerance": 1e-9});
    }
    v
}

fn check(
    model: &ModelFile,
    names: &[String],
    all: bool,
    mode: CheckMode,
    probes: usize,
    seed: u64,
) -> Result<Outcome> {
    let sde = &model.sde;
    let chosen: Vec<String> = match (all, mode) {
        (true, CheckMode::Pde) => model.pdes.keys().cloned().collect(),
        (true, _) => model.symmetries.keys().cloned().collect(),
        (false, _) if names.is_empty() => {
            return Err(Error::InvalidConfig("give --symmetry NAME or --all".into()))
        }
        _ => names.to_vec(),
    };
    let mut pass = true;
    let mut rows = Vec::new();
    for n in &chosen {
        let mut r = match mode {
            CheckMode::General => sde_residual(sde, &model.symmetry(n)?.v)?,
            CheckMode::Doob => {
                let d = model.symmetry(n)?;
                doob_residual(sde, &d.v, &potential(model, d)?)?
            }
            CheckMode::Pde => {
                let xi = model
                    .pdes
                    .get(n)
                    .ok_or_else(|| Error::ModelFile(format!("no pde `{}`", n)))?;
                pde_residual(sde, xi)?
            }
        };
        let p = r.probe(sde, probes, seed);
        let ok = r.all_zero() && p.worst < p.tolerance;
        pass &= ok;
        rows.push(json!({
            "name": n,
            "pass": ok,
            "residual": residual_json(&r, Some((p.points, p.seed, p.worst))),
        }));
    }
    Ok(Outcome {
        kind: "check",
        body: json!({"model": sde.name, "results": rows}),
        pass,
    })
}

fn classify_cmd(model: &ModelFile, name: &str) -> Result<Outcome> {
    let d = model.symmetry(name)?;
    let c = classify(&model.sde, &d.v)?;
    let matches = d.class.as_deref().map(|e| e == c.class.name());
    Ok(Outcome {
        kind: "classify",
        body: json!({
            "model": model.sde.name,
            "symmetry": name,
            "is_symmetry": c.is_symmetry,
            "class": c.class.to_json(),
            "expected": d.class,
            "matches_expected": matches,
        }),
        pass: c.is_symmetry && matches != Some(false),
    })
}

fn bridge_cmd(model: &ModelFile, name: &str, reverse: bool) -> Result<Outcome> {
    let sde = &model.sde;
    if reverse {
        let xi = model
            .pdes
            .get(name)
            .ok_or_else(|| Error::ModelFile(format!("no pde `{}`", name)))?;
        let (v, k) = pde_to_sde(sde, xi)?;
        let g = Generator::new(v, Some(k));
        return Ok(Outcome {
            kind: "bridge_reverse",
            body: json!({"model": sde.name, "pde": name, "symmetry": g.to_json()}),
            pass: true,
        });
    }
    let d = model.symmetry(name)?;
    let k = potential(model, d)?;
    let xi = sde_to_pde(sde, &d.v, &k)?;
    let rt = round_trip_check(sde, &d.v, &k)?;
    let matched = model
        .pdes
        .iter()
        .find_map(|(n, p)| xi.ratio_to(p).map(|c| json!({"name": n, "scalar": c.to_string()})));
    Ok(Outcome {
        kind: "bridge",
        body: json!({
            "model": sde.name,
            "symmetry": name,
            "k": k.to_string(),
            "xi": {
                "m": xi.m_coef.to_string(),
                "phi": xi.phi.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                "k": xi.k.to_string(),
                "field": xi.describe(sde),
            },
            "matches": matched,
            "round_trip": rt,
        }),
        pass: rt,
    })
}

fn solve_cmd(model: &ModelFile, mode: SolveMode, basis: Option<&Path>, degree: u32) -> Result<Outcome> {
    let sde = &model.sde;
    let basis = match basis {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(e.to_string()))?;
            parse_basis(&text, sde)?
        }
        None => model
            .ansatz
            .clone()
            .unwrap_or_else(|| AnsatzBasis::uniform(polynomial_basis(&sde.vars, degree))),
    };
    let mode = match mode {
        SolveMode::General => Mode::General,
        SolveMode::Doob => Mode::Doob,
    };
    let mut space = solve(sde, &basis, mode)?;
    space.closure = Some(closure_check(&space));
    Ok(Outcome {
        kind: "solve",
        body: json!({"model": sde.name, "space": space.to_json()}),
        pass: true,
    })
}

fn bracket_cmd(model: &ModelFile, names: &[String]) -> Result<Outcome> {
    if names.len() != 2 {
        return Err(Error::InvalidConfig("bracket takes exactly two --symmetry".into()));
    }
    let sde = &model.sde;
    let a = model.symmetry(&names[0])?;
    let b = model.symmetry(&names[1])?;
    let g = Generator::new(a.v.clone(), a.k.clone()).bracket(&Generator::new(b.v.clone(), b.k.clone()), &sde.vars);
    let is_sym = sde_residual(sde, &g.v)?.all_zero();
    Ok(Outcome {
        kind: "bracket",
        body: json!({
            "model": sde.name,
            "pair": names,
            "bracket": g.to_json(),
            "is_symmetry": is_sym,
        }),
        pass: is_sym,
    })
}

fn write_csv(dir: &Path, name: &str, b: &PathBundle) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
    let f = std::fs::File::create(dir.join(name)).map_err(|e| Error::Io(e.to_string()))?;
    b.write_csv(std::io::BufWriter::new(f))
        .map_err(|e| Error::Io(e.to_string()))
}

fn mc_cmd(model: &ModelFile, name: &str, over: McConfig, csv: Option<&Path>) -> Result<Outcome> {
    let sde = &model.sde;
    let d = model.transform(name)?;
    let cfg = over;
    cfg.validate()?;
    let base = simulate(sde, &cfg)?;
    let transformed = transform_paths(&base, &d.t)?;
    // The transformed law is compared with a fresh run of E_T(μ, σ) started
    // at Φ(x0).
    let target = d.t.et_apply(sde)?;
    let mut point: Point = cfg
        .params
        .iter()
        .map(|(k, v)| (stochsym_core::sym(k), *v))
        .collect();
    for (i, v) in sde.vars.iter().enumerate() {
        let x = cfg.x0.get(v.name()).copied().unwrap_or(if Some(i) == sde.time_var { 0.0 } else { f64::NAN });
        point.insert(v.clone(), x);
    }
    let mut direct_cfg = McConfig {
        seed: cfg.seed.wrapping_add(1),
        ..cfg.clone()
    };
    for (v, phi) in sde.vars.iter().zip(&d.t.phi) {
        if Some(v) != sde.time_symbol() {
            direct_cfg.x0.insert(v.name().to_string(), phi.eval_numeric(&point)?);
        }
    }
    let direct = simulate(&target, &direct_cfg)?;
    let cmp = weak_compare(&transformed, &direct, cfg.z_max, cfg.p_min)?;
    let mut pass = cmp.pass;
    let pathwise = match &d.potential {
        Some(p) => {
            let recipe = density_recipe(sde, &d.t.h, Some(p))?;
            if recipe.doob_potential.is_none() {
                pass = false;
                json!({"error": "declared potential fails the Doob conditions"})
            } else {
                serde_json::to_value(doob_pathwise_check(&base, &recipe)?).expect("serializable")
            }
        }
        None => Value::Null,
    };
    if let Some(dir) = csv {
        write_csv(dir, "base.csv", &base)?;
        write_csv(dir, "transformed.csv", &transformed)?;
        write_csv(dir, "direct.csv", &direct)?;
    }
    Ok(Outcome {
        kind: "mc",
        body: json!({
            "model": sde.name,
            "transform": name,
            "config": serde_json::to_value(&cfg).expect("serializable"),
            "weak_compare": serde_json::to_value(&cmp).expect("serializable"),
            "doob_pathwise": pathwise,
        }),
        pass,
    })
}

fn catalog_cmd(verify: bool, export: Option<&Path>) -> Result<Outcome> {
    let entries = catalog::entries()?;
    if let Some(dir) = export {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
        for e in &entries {
            std::fs::write(dir.join(format!("{}.toml", e.name())), e.model.print())
                .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    if !verify {
        let list: Vec<Value> = entries
            .iter()
            .map(|e| {
                json!({
                    "name": e.name(),
                    "symmetries": e.model.symmetries.keys().collect::<Vec<_>>(),
                    "pdes": e.model.pdes.keys().collect::<Vec<_>>(),
                    "transforms": e.model.transforms.keys().collect::<Vec<_>>(),
                })
            })
            .collect();
        return Ok(Outcome {
            kind: "catalog",
            body: json!({"models": list}),
            pass: true,
        });
    }
    let mut pass = true;
    let mut out = Vec::new();
    for e in &entries {
        let r = catalog::verify(e)?;
        pass &= r.pass();
        out.push(r.to_json(e.sde()));
    }
    Ok(Outcome {
        kind: "catalog_verify",
        body: json!({"models": out, "pass": pass}),
        pass,
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    catalog::self_test()?;
    match cli.cmd {
        Cmd::Check {
            model,
            symmetries,
            all,
            mode,
            probes,
            probe_seed,
        } => check(&load_model(&model)?, &symmetries, all, mode, probes, probe_seed),
        Cmd::Classify { model, symmetry } => classify_cmd(&load_model(&model)?, &symmetry),
        Cmd::Bridge {
            model,
            symmetry,
            reverse,
        } => bridge_cmd(&load_model(&model)?, &symmetry, reverse),
        Cmd::Solve {
            model,
            mode,
            basis,
            degree,
        } => solve_cmd(&load_model(&model)?, mode, basis.as_deref(), degree),
        Cmd::Bracket { model, symmetries } => bracket_cmd(&load_model(&model)?, &symmetries),
        Cmd::Mc {
            model,
            transform,
            paths,
            dt,
            seed,
            horizon,
            csv,
        } => {
            let m = load_model(&model)?;
            let mut cfg = m.mc.clone().unwrap_or_default();
            if let Some(p) = paths {
                cfg.n_paths = p;
            }
            if let Some(d) = dt {
                cfg.dt = d;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            mc_cmd(&m, &transform, cfg, csv.as_deref())
        }
        Cmd::Catalog { verify_all, export } => catalog_cmd(verify_all, export.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {}", e);
            return ExitCode::from(2);
        }
    }
    let out = cli.out.clone();
    match run(cli) {
        Ok(o) => {
            let mut doc = report(o.kind, o.body);
            doc["pass"] = json!(o.pass);
            let text = serde_json::to_string_pretty(&doc).expect("reports serialize");
            match out {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, text + "\n") {
                        eprintln!("error: {}: {}", p.display(), e);
                        return ExitCode::from(2);
                    }
                }
                None => {
                    // A closed pipe is not an error for a report writer.
                    let _ = writeln!(std::io::stdout().lock(), "{}", text);
                }
            }
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}
