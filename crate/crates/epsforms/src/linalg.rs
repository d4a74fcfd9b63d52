//! Dense exact linear algebra over the rationals: reduced row echelon form,
//! row-space reduction, and right nullspaces. Pivot selection is always the
//! first nonzero column left to right, so callers control pivot meaning by
//! ordering columns (the basis pipeline orders them by ascending exponent).

use num_traits::{One, Zero};

use crate::arith::Rat;

/// Dense rational matrix, row major.
#[derive(Clone, Debug)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// subtract factor * row b from row a, from column `from` on
    fn row_axpy(&mut self, a: usize, b: usize, factor: &Rat, from: usize) {
        if factor.is_zero() {
            return;
        }
        for j in from..self.cols {
            let v = self.at(b, j).clone();
            if !v.is_zero() {
                let x = self.at_mut(a, j);
                *x -= factor * v;
            }
        }
    }

    fn scale_row(&mut self, i: usize, c: &Rat) {
        for j in 0..self.cols {
            let x = self.at_mut(i, j);
            if !x.is_zero() {
                *x *= c;
            }
        }
    }

    /// In-place reduced row echelon form. Returns the pivot columns in row
    /// order; zero rows sink to the bottom.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for j in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.at(i, j).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = Rat::one() / self.at(r, j).clone();
            self.scale_row(r, &inv);
            for i in 0..self.rows {
                if i != r && !self.at(i, j).is_zero() {
                    let f = self.at(i, j).clone();
                    self.row_axpy(i, r, &f, j);
                }
            }
            pivots.push(j);
            r += 1;
        }
        pivots
    }

    /// Rank via a working copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    /// Basis of the right nullspace, one vector per free column, ascending.
    pub fn nullspace(&self) -> Vec<Vec<Rat>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let is_pivot = {
            let mut v = vec![false; self.cols];
            for &j in &pivots {
                v[j] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for f in 0..self.cols {
            if is_pivot[f] {
                continue;
            }
            let mut v = vec![Rat::zero(); self.cols];
            v[f] = Rat::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -m.at(i, f).clone();
            }
            basis.push(v);
        }
        basis
    }
}

/// Incrementally maintained reduced row basis of a growing set of vectors.
/// Inserting a vector reduces it against the basis; vectors that fall in the
/// span are dropped. Keeps the whole structure in reduced echelon form.
pub struct RowSpan {
    cols: usize,
    /// rows sorted by pivot column, each with leading coefficient 1
    rows: Vec<(usize, Vec<Rat>)>,
}

impl RowSpan {
    pub fn new(cols: usize) -> Self {
        RowSpan { cols, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the basis; returns the pivot column if `v` was
    /// independent and inserted, `None` if it lies in the span.
    pub fn insert(&mut self, mut v: Vec<Rat>) -> Option<usize> {
        assert_eq!(v.len(), self.cols);
        for (p, row) in &self.rows {
            if !v[*p].is_zero() {
                let f = v[*p].clone();
                for (x, r) in v.iter_mut().zip(row.iter()) {
                    if !r.is_zero() {
                        *x -= &f * r;
                    }
                }
            }
        }
        let pivot = v.iter().position(|x| !x.is_zero())?;
        let inv = Rat::one() / v[pivot].clone();
        for x in v.iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        // clear this column from existing rows to stay fully reduced
        for (_, row) in self.rows.iter_mut() {
            if !row[pivot].is_zero() {
                let f = row[pivot].clone();
                for (x, r) in row.iter_mut().zip(v.iter()) {
                    if !r.is_zero() {
                        *x -= &f * r;
                    }
                }
            }
        }
        let pos = self.rows.partition_point(|(p, _)| *p < pivot);
        self.rows.insert(pos, (pivot, v));
        Some(pivot)
    }

    /// Rows in pivot order.
    pub fn into_rows(self) -> Vec<(usize, Vec<Rat>)> {
        self.rows
    }

    pub fn rows(&self) -> &[(usize, Vec<Rat>)] {
        &self.rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn m(rows: &[&[i64]]) -> Mat {
        Mat::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
    }

    #[test]
    fn rref_simple() {
        let mut a = m(&[&[2, 4, 6], &[1, 2, 4], &[0, 0, 2]]);
        let piv = a.rref();
        assert_eq!(piv, vec![0, 2]);
        assert_eq!(*a.at(0, 0), rat(1));
        assert_eq!(*a.at(0, 1), rat(2));
        assert_eq!(*a.at(0, 2), rat(0));
        assert_eq!(*a.at(1, 2), rat(1));
        assert_eq!(a.rank(), 2);
    }

    #[test]
    fn nullspace_dimensions() {
        let a = m(&[&[1, 2, 3, 4], &[0, 1, 1, 1]]);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for i in 0..a.rows() {
                let dot: Rat = (0..a.cols()).map(|j| a.at(i, j) * &v[j]).sum();
                assert_eq!(dot, rat(0));
            }
        }
    }

    #[test]
    fn row_span_insert_and_reject() {
        let mut s = RowSpan::new(4);
        assert_eq!(s.insert(vec![rat(0), rat(2), rat(4), rat(0)]), Some(1));
        assert_eq!(s.insert(vec![rat(0), rat(1), rat(2), rat(0)]), None);
        assert_eq!(s.insert(vec![rat(3), rat(3), rat(6), rat(1)]), Some(0));
        assert_eq!(s.dim(), 2);
        // fully reduced: second insert cleared column 1 of the first row
        let rows = s.rows();
        assert_eq!(rows[0].0, 0);
        assert_eq!(rows[0].1, vec![rat(1), rat(0), rat(0), rat(1) / rat(3)]);
        assert_eq!(rows[1].1, vec![rat(0), rat(1), rat(2), rat(0)]);
    }
}
