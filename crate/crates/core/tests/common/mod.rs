//! Brute-force row reduction for 1D Brownian motion with a total-degree
//! ≤ 2 polynomial ansatz, written directly against the determining
//! equations with exact rationals and no use of the library's algebra.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::{One, Zero};

type Poly = BTreeMap<(i32, i32), Rational64>;

const BASIS: [(i32, i32); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn add(p: &mut Poly, q: &Poly, s: Rational64) {
    for (m, c) in q {
        let e = p.entry(*m).or_insert_with(Rational64::zero);
        *e += *c * s;
    }
}

fn mono(m: (i32, i32)) -> Poly {
    BTreeMap::from([(m, Rational64::one())])
}

fn dx(p: &Poly) -> Poly {
    p.iter()
        .filter(|((a, _), _)| *a > 0)
        .map(|((a, b), c)| ((a - 1, *b), *c * Rational64::from(*a as i64)))
        .collect()
}

fn dz(p: &Poly) -> Poly {
    p.iter()
        .filter(|((_, b), _)| *b > 0)
        .map(|((a, b), c)| ((*a, b - 1), *c * Rational64::from(*b as i64)))
        .collect()
}

/// `½∂xx + ∂z`.
fn gen(p: &Poly) -> Poly {
    let mut out = dz(p);
    add(&mut out, &dx(&dx(p)), r(1, 2));
    out
}

/// Equations contributed by one unknown: `(unknown, basis monomial)` →
/// five polynomial residual blocks.
///
/// Doob mode unknowns are `Yx, Yz, τ, k`; general mode replaces `k` by `H`.
fn column(kind: usize, doob: bool, m: (i32, i32)) -> [Poly; 5] {
    let f = mono(m);
    let mut e: [Poly; 5] = Default::default();
    match kind {
        // Yx: diff[x] −∂xYx, drift[x] −L(Yx)
        0 => {
            add(&mut e[0], &dx(&f), r(-1, 1));
            add(&mut e[2], &gen(&f), r(-1, 1));
        }
        // Yz: diff[z] −∂xYz, drift[z] −L(Yz)
        1 => {
            add(&mut e[1], &dx(&f), r(-1, 1));
            add(&mut e[3], &gen(&f), r(-1, 1));
        }
        // τ: diff[x] +½τ, drift[z] +τ
        2 => {
            add(&mut e[0], &f, r(1, 2));
            add(&mut e[3], &f, r(1, 1));
        }
        // k: drift[x] −∂xk, L(k)
        3 if doob => {
            add(&mut e[2], &dx(&f), r(-1, 1));
            add(&mut e[4], &gen(&f), r(1, 1));
        }
        // H: drift[x] −H
        3 => add(&mut e[2], &f, r(-1, 1)),
        _ => unreachable!(),
    }
    e
}

fn rank(mut rows: Vec<Vec<Rational64>>) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let piv = rows[rank][c];
        for i in 0..rows.len() {
            if i != rank && !rows[i][c].is_zero() {
                let f = rows[i][c] / piv;
                for j in 0..ncols {
                    let v = rows[rank][j];
                    rows[i][j] -= f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Kernel dimension of the bm1d degree-2 ansatz system.
pub fn bm1d_quadratic_nullity(doob: bool) -> usize {
    let cols: Vec<[Poly; 5]> = (0..4)
        .flat_map(|k| BASIS.iter().map(move |&m| column(k, doob, m)))
        .collect();
    let mut keys = std::collections::BTreeSet::new();
    for c in &cols {
        for (b, p) in c.iter().enumerate() {
            for (m, v) in p {
                if !v.is_zero() {
                    keys.insert((b, *m));
                }
            }
        }
    }
    let rows: Vec<Vec<Rational64>> = keys
        .iter()
        .map(|(b, m)| {
            cols.iter()
                .map(|c| c[*b].get(m).copied().unwrap_or_else(Rational64::zero))
                .collect()
        })
        .collect();
    cols.len() - rank(rows)
}
