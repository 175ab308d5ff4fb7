use criterion::{criterion_group, criterion_main, Criterion};

use stochsym_bench::model;
use stochsym_core::ansatz::{closure_check, solve, Mode};
use stochsym_core::catalog;
use stochsym_core::determining::sde_residual;
use stochsym_core::doob::classify;

fn residuals(c: &mut Criterion) {
    let e = model("bm2d");
    c.bench_function("sde_residual/bm2d all", |b| {
        b.iter(|| {
            for d in e.model.symmetries.values() {
                sde_residual(e.sde(), &d.v).unwrap();
            }
        })
    });
    let ou = model("ou");
    let v2 = ou.model.symmetry("V2").unwrap().v.clone();
    c.bench_function("classify/ou V2", |b| b.iter(|| classify(ou.sde(), &v2).unwrap()));
}

fn ansatz(c: &mut Criterion) {
    for name in ["bm1d", "ou", "cir"] {
        let e = model(name);
        let basis = e.model.ansatz.clone().unwrap();
        c.bench_function(&format!("solve/{} doob", name), |b| {
            b.iter(|| solve(e.sde(), &basis, Mode::Doob).unwrap())
        });
    }
    let e = model("bm1d");
    let space = solve(e.sde(), e.model.ansatz.as_ref().unwrap(), Mode::Doob).unwrap();
    c.bench_function("closure/bm1d doob", |b| b.iter(|| closure_check(&space)));
}

fn catalog_verify(c: &mut Criterion) {
    let mut g = c.benchmark_group("catalog");
    g.sample_size(10);
    g.bench_function("verify_all", |b| b.iter(|| catalog::verify_all().unwrap()));
    g.finish();
}

criterion_group!(benches, residuals, ansatz, catalog_verify);
criterion_main!(benches);
