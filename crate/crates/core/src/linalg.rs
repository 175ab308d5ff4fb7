//! Exact sparse elimination over the parameter field.

use std::collections::BTreeMap;

use crate::expr::Coeff;

pub type SparseRow = BTreeMap<usize, Coeff>;

/// A reduced row echelon form kept up to date as rows arrive.
///
/// Pivots are the smallest nonzero column of each row, so the column order
/// decides which unknowns end up free.
#[derive(Debug, Clone, Default)]
pub struct Rref {
    ncols: usize,
    rows: Vec<SparseRow>,
    pivot_row: BTreeMap<usize, usize>,
}

fn axpy(row: &mut SparseRow, s: &Coeff, other: &SparseRow) {
    for (c, v) in other {
        let d = s * v;
        let e = row.entry(*c).or_insert_with(Coeff::zero);
        *e = &*e - &d;
        if e.is_zero() {
            row.remove(c);
        }
    }
}

impl Rref {
    pub fn new(ncols: usize) -> Self {
        Rref {
            ncols,
            rows: Vec::new(),
            pivot_row: BTreeMap::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivot_row.keys().copied()
    }

    pub fn is_pivot(&self, c: usize) -> bool {
        self.pivot_row.contains_key(&c)
    }

    /// Reduces `row` against the current pivots.
    pub fn reduce(&self, mut row: SparseRow) -> SparseRow {
        row.retain(|_, v| !v.is_zero());
        let hits: Vec<usize> = row
            .keys()
            .copied()
            .filter(|c| self.pivot_row.contains_key(c))
            .collect();
        for c in hits {
            if let Some(s) = row.get(&c).cloned() {
                axpy(&mut row, &s, &self.rows[self.pivot_row[&c]]);
            }
        }
        row
    }

    /// Adds a row; returns whether the rank grew.
    pub fn insert(&mut self, row: SparseRow) -> bool {
        debug_assert!(row.keys().all(|&c| c < self.ncols));
        let mut row = self.reduce(row);
        let Some((&p, lead)) = row.iter().next() else {
            return false;
        };
        let inv = lead.recip().expect("nonzero pivot");
        for v in row.values_mut() {
            *v = &*v * &inv;
        }
        for r in self.rows.iter_mut() {
            if let Some(s) = r.get(&p).cloned() {
                axpy(r, &s, &row);
            }
        }
        row.retain(|_, v| !v.is_zero());
        self.pivot_row.insert(p, self.rows.len());
        self.rows.push(row);
        true
    }

    /// Columns without a pivot, in increasing order.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ncols).filter(|c| !self.is_pivot(*c)).collect()
    }

    /// One kernel vector per free column, with a 1 in that column.
    pub fn nullspace(&self) -> Vec<SparseRow> {
        self.free_columns()
            .into_iter()
            .map(|f| {
                let mut v = SparseRow::new();
                v.insert(f, Coeff::one());
                for (&p, &r) in &self.pivot_row {
                    if let Some(x) = self.rows[r].get(&f) {
                        v.insert(p, -x);
                    }
                }
                v
            })
            .collect()
    }

    /// The row with pivot `c`, if any.
    pub fn pivot(&self, c: usize) -> Option<&SparseRow> {
        self.pivot_row.get(&c).map(|&r| &self.rows[r])
    }
}

/// Coefficients `x` with `Σ x_j columns[j] = target`, if the target lies in
/// the span. Free coordinates are set to zero.
pub fn solve_combination<K: Ord + Clone>(
    columns: &[BTreeMap<K, Coeff>],
    target: &BTreeMap<K, Coeff>,
) -> Option<Vec<Coeff>> {
    let n = columns.len();
    let mut rows: BTreeMap<K, SparseRow> = BTreeMap::new();
    for (j, col) in columns.iter().enumerate() {
        for (k, v) in col {
            if !v.is_zero() {
                rows.entry(k.clone()).or_default().insert(j, v.clone());
            }
        }
    }
    for (k, v) in target {
        if !v.is_zero() {
            rows.entry(k.clone()).or_default().insert(n, v.clone());
        }
    }
    let mut r = Rref::new(n + 1);
    for (_, row) in rows {
        r.insert(row);
    }
    if r.is_pivot(n) {
        return None;
    }
    let mut x = vec![Coeff::zero(); n];
    for (j, xj) in x.iter_mut().enumerate() {
        if let Some(row) = r.pivot(j) {
            if let Some(v) = row.get(&n) {
                *xj = v.clone();
            }
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::sym;

    fn row(v: &[(usize, i64)]) -> SparseRow {
        v.iter().map(|&(c, x)| (c, Coeff::int(x))).collect()
    }

    #[test]
    fn kernel_of_small_system() {
        let mut r = Rref::new(3);
        assert!(r.insert(row(&[(0, 1), (1, 2), (2, 3)])));
        assert!(r.insert(row(&[(0, 2), (1, 4), (2, 7)])));
        assert!(!r.insert(row(&[(0, 3), (1, 6), (2, 10)])));
        assert_eq!(r.rank(), 2);
        let ns = r.nullspace();
        assert_eq!(ns, vec![row(&[(0, -2), (1, 1)])]);
    }

    #[test]
    fn parametric_solve() {
        let a = Coeff::param(&sym("a"));
        let cols: Vec<BTreeMap<u8, Coeff>> = vec![
            [(0u8, a.clone()), (1, Coeff::one())].into_iter().collect(),
            [(1u8, Coeff::one())].into_iter().collect(),
        ];
        let target: BTreeMap<u8, Coeff> = [(0u8, Coeff::one()), (1, Coeff::int(2))]
            .into_iter()
            .collect();
        let x = solve_combination(&cols, &target).unwrap();
        let inv = a.recip().unwrap();
        assert_eq!(x[0], inv);
        assert_eq!(x[1], &Coeff::int(2) - &inv);
        let bad: BTreeMap<u8, Coeff> = [(2u8, Coeff::one())].into_iter().collect();
        assert!(solve_combination(&cols, &bad).is_none());
    }
}
