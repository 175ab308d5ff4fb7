use proptest::prelude::*;

use stochsym_core::ansatz::Generator;
use stochsym_core::bridge::{pde_to_sde, sde_to_pde};
use stochsym_core::catalog;
use stochsym_core::determining::{sde_residual, sigma_t_grad};
use stochsym_core::doob::{classify, recover_k, KRecovery, SymmetryClass};
use stochsym_core::io::parse_expr;
use stochsym_core::montecarlo::stats::{kish, pairwise_sum, snis};
use stochsym_core::transform::InfTransform;
use stochsym_core::{sym, Expr, Symbol};

fn xz() -> Vec<Symbol> {
    vec![sym("x"), sym("z")]
}

/// A small polynomial in `x`, `z` with an optional factor of the parameter `a`
/// and an optional `exp(a*z)`.
fn poly() -> impl Strategy<Value = Expr> {
    prop::collection::vec((-4i64..=4, 1i64..=3, 0i64..=2, 0i64..=2, any::<bool>(), any::<bool>()), 0..4)
        .prop_map(|terms| {
            let x = Expr::var(&sym("x"));
            let z = Expr::var(&sym("z"));
            let a = Expr::param(&sym("a"));
            let e = parse_expr("exp(a*z)", &xz(), &[sym("a")]).unwrap();
            terms
                .into_iter()
                .map(|(n, d, px, pz, pa, pe)| {
                    let mut t = &(&Expr::ratio(n, d) * &x.pow_int(px).unwrap()) * &z.pow_int(pz).unwrap();
                    if pa {
                        t = &t * &a;
                    }
                    if pe {
                        t = &t * &e;
                    }
                    t
                })
                .sum()
        })
}

fn field() -> impl Strategy<Value = InfTransform> {
    (poly(), poly(), poly(), poly()).prop_map(|(y0, y1, tau, h)| {
        InfTransform::new(vec![y0, y1], vec![vec![Expr::zero()]], tau, vec![h]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn derivation_rules(a in poly(), b in poly()) {
        for v in xz() {
            prop_assert_eq!((&a * &b).diff(&v), &(&a.diff(&v) * &b) + &(&a * &b.diff(&v)));
            prop_assert_eq!((&a + &b).diff(&v), &a.diff(&v) + &b.diff(&v));
        }
        let x = sym("x");
        let z = sym("z");
        prop_assert_eq!(a.diff(&x).diff(&z), a.diff(&z).diff(&x));
    }

    #[test]
    fn print_parse_round_trip(a in poly()) {
        let back = parse_expr(&a.to_string(), &xz(), &[sym("a")]).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn bracket_antisymmetry_and_jacobi(p in field(), q in field(), r in field()) {
        let vars = xz();
        let gp = Generator::new(p, None);
        let gq = Generator::new(q, None);
        let gr = Generator::new(r, None);
        let pq = gp.bracket(&gq, &vars).v;
        let qp = gq.bracket(&gp, &vars).v;
        prop_assert!(pq.add(&qp).is_zero());
        let j = gp.bracket(&gq, &vars).bracket(&gr, &vars).v
            .add(&gq.bracket(&gr, &vars).bracket(&gp, &vars).v)
            .add(&gr.bracket(&gp, &vars).bracket(&gq, &vars).v);
        prop_assert!(j.is_zero());
    }

    #[test]
    fn recover_k_is_sound(k in poly()) {
        let e = catalog::load("ou").unwrap();
        let h = sigma_t_grad(e.sde(), &k);
        match recover_k(e.sde(), &h).unwrap() {
            KRecovery::Family { k: k2, .. } => prop_assert_eq!(sigma_t_grad(e.sde(), &k2), h),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn gradients_are_closed_in_the_plane(f in poly(), g in poly()) {
        let e = catalog::load("bm2d").unwrap();
        let lift = |p: &Expr| {
            let text = p.to_string().replace('z', "y").replace('a', "2");
            parse_expr(&text, &e.sde().vars, &[])
        };
        let k = lift(&(&f * &g)).unwrap();
        let h = sigma_t_grad(e.sde(), &k);
        if let Ok(KRecovery::Family { k: k2, .. }) = recover_k(e.sde(), &h) {
            prop_assert_eq!(sigma_t_grad(e.sde(), &k2), h);
        } else {
            prop_assert!(false);
        }
    }

    #[test]
    fn doob_combinations_stay_doob(cs in prop::collection::vec(-3i64..=3, 5)) {
        let e = catalog::load("bm1d").unwrap();
        let mut v = InfTransform::zero(2, 1);
        let mut k = Expr::zero();
        for (c, n) in cs.iter().zip(["V1", "V2", "V3", "V4", "V5"]) {
            let d = e.model.symmetry(n).unwrap();
            let s = Expr::int(*c);
            v = v.add(&d.v.scale(&s));
            k += &(d.k.as_ref().unwrap() * &s);
        }
        prop_assert!(sde_residual(e.sde(), &v).unwrap().all_zero());
        let c = classify(e.sde(), &v).unwrap();
        prop_assert!(matches!(c.class, SymmetryClass::Doob(_)));
        let xi = sde_to_pde(e.sde(), &v, &k).unwrap();
        let (v2, k2) = pde_to_sde(e.sde(), &xi).unwrap();
        prop_assert_eq!(v2, v);
        prop_assert_eq!(k2, k);
    }

    #[test]
    fn snis_ignores_weight_shift(vals in prop::collection::vec(-5.0f64..5.0, 2..50), s in -20.0f64..20.0) {
        let lw: Vec<f64> = (0..vals.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let shifted: Vec<f64> = lw.iter().map(|l| l + s).collect();
        let (m1, v1) = snis(&vals, &lw);
        let (m2, v2) = snis(&vals, &shifted);
        prop_assert!((m1 - m2).abs() < 1e-9 * (1.0 + m1.abs()));
        prop_assert!((v1 - v2).abs() < 1e-9 * (1.0 + v1.abs()));
        let n = kish(&lw);
        prop_assert!(n > 0.0 && n <= vals.len() as f64 + 1e-9);
    }

    #[test]
    fn pairwise_sum_matches_exact_integers(xs in prop::collection::vec(-1000i32..1000, 0..500)) {
        let f: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        prop_assert_eq!(pairwise_sum(&f), xs.iter().map(|&x| x as i64).sum::<i64>() as f64);
    }
}
