//! Small dense matrices of expressions.

use super::Expr;
use crate::error::{Error, Result};

pub type Mat = Vec<Vec<Expr>>;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![Expr::zero(); c]; r]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Expr::one();
    }
    m
}

pub fn cols(m: &Mat) -> usize {
    m.first().map(|r| r.len()).unwrap_or(0)
}

pub fn transpose(m: &Mat) -> Mat {
    let (r, c) = (m.len(), cols(m));
    (0..c).map(|j| (0..r).map(|i| m[i][j].clone()).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (r, k, c) = (a.len(), b.len(), cols(b));
    (0..r)
        .map(|i| {
            (0..c)
                .map(|j| (0..k).map(|l| &a[i][l] * &b[l][j]).sum())
                .collect()
        })
        .collect()
}

pub fn matvec(a: &Mat, v: &[Expr]) -> Vec<Expr> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn scale(a: &Mat, s: &Expr) -> Mat {
    a.iter()
        .map(|r| r.iter().map(|x| x * s).collect())
        .collect()
}

pub fn map(a: &Mat, f: impl Fn(&Expr) -> Expr) -> Mat {
    a.iter().map(|r| r.iter().map(&f).collect()).collect()
}

pub fn try_map(a: &Mat, f: impl Fn(&Expr) -> Result<Expr>) -> Result<Mat> {
    a.iter()
        .map(|r| r.iter().map(&f).collect::<Result<Vec<_>>>())
        .collect()
}

pub fn is_zero(a: &Mat) -> bool {
    a.iter().all(|r| r.iter().all(|x| x.is_zero()))
}

pub fn is_antisymmetric(a: &Mat) -> bool {
    is_zero(&add(a, &transpose(a)))
}

fn minor(a: &Mat, i: usize, j: usize) -> Mat {
    a.iter()
        .enumerate()
        .filter(|(r, _)| *r != i)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(c, _)| *c != j)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

/// Determinant by cofactor expansion along the first row.
pub fn det(a: &Mat) -> Expr {
    match a.len() {
        0 => Expr::one(),
        1 => a[0][0].clone(),
        2 => &(&a[0][0] * &a[1][1]) - &(&a[0][1] * &a[1][0]),
        n => (0..n)
            .map(|j| {
                let t = &a[0][j] * &det(&minor(a, 0, j));
                if j % 2 == 0 {
                    t
                } else {
                    -t
                }
            })
            .sum(),
    }
}

pub fn adjugate(a: &Mat) -> Mat {
    let n = a.len();
    if n == 1 {
        return vec![vec![Expr::one()]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = det(&minor(a, j, i));
                    if (i + j) % 2 == 0 {
                        c
                    } else {
                        -c
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact inverse when the determinant is invertible in the class.
pub fn inverse(a: &Mat) -> Result<Mat> {
    if a.len() != cols(a) {
        return Err(Error::Shape("inverse of a non-square matrix".into()));
    }
    let d = det(a);
    let di = d.inverse()?;
    Ok(scale(&adjugate(a), &di))
}
