//! Dense exact linear algebra over GF(p^n) and over GF(p^n)[t]: rank, left
//! kernel, determinants and the maximal-minor families used by the witness
//! polynomial machinery.
//!
//! Elimination pivots on the first nonzero entry scanning top to bottom, so
//! ranks and kernel bases are reproducible.

use thiserror::Error;

use crate::field::{FieldCtx, FieldElement};
use crate::poly::Poly;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("determinant requires a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("major cofactors require rows <= cols, got {rows}x{cols}")]
    TooManyRows { rows: usize, cols: usize },
}

/// Row-major matrix over the field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
}

impl FieldMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<FieldElement>) -> FieldMatrix {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        FieldMatrix { rows, cols, entries }
    }

    pub fn zeros(ctx: &FieldCtx, rows: usize, cols: usize) -> FieldMatrix {
        FieldMatrix::new(rows, cols, vec![ctx.zero(); rows * cols])
    }

    pub fn identity(ctx: &FieldCtx, n: usize) -> FieldMatrix {
        let mut m = FieldMatrix::zeros(ctx, n, n);
        for i in 0..n {
            m.set(i, i, ctx.one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.get(r, c));
            }
        }
        FieldMatrix::new(self.cols, self.rows, entries)
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &FieldMatrix) -> FieldMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = FieldMatrix::zeros(ctx, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = ctx.add(out.get(r, c), ctx.mul(a, other.get(k, c)));
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    /// Row rank by Gaussian elimination.
    pub fn rank(&self, ctx: &FieldCtx) -> usize {
        self.rref(ctx).1.len()
    }

    /// Reduced row echelon form plus the pivot column of each pivot row.
    fn rref(&self, ctx: &FieldCtx) -> (FieldMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(pr) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            if pr != row {
                for c in 0..m.cols {
                    let (a, b) = (m.get(row, c), m.get(pr, c));
                    m.set(row, c, b);
                    m.set(pr, c, a);
                }
            }
            let inv = ctx.inv(m.get(row, col)).expect("pivot is nonzero");
            for c in 0..m.cols {
                m.set(row, c, ctx.mul(m.get(row, c), inv));
            }
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let factor = m.get(r, col);
                if factor.is_zero() {
                    continue;
                }
                for c in 0..m.cols {
                    let v = ctx.sub(m.get(r, c), ctx.mul(factor, m.get(row, c)));
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    /// Basis of the left kernel {c : c M = 0}, as row vectors of length
    /// `rows()`. Each basis vector is scaled so its first nonzero coordinate
    /// is 1. The basis is empty exactly when the rows are independent.
    pub fn left_kernel(&self, ctx: &FieldCtx) -> Vec<Vec<FieldElement>> {
        let (rref, pivots) = self.transpose().rref(ctx);
        let n = self.rows;
        let mut basis = Vec::new();
        let mut pivot_of_col = vec![None; n];
        for (prow, &pcol) in pivots.iter().enumerate() {
            pivot_of_col[pcol] = Some(prow);
        }
        for free in 0..n {
            if pivot_of_col[free].is_some() {
                continue;
            }
            let mut v = vec![ctx.zero(); n];
            v[free] = ctx.one();
            for col in 0..free {
                if let Some(prow) = pivot_of_col[col] {
                    v[col] = ctx.neg(rref.get(prow, free));
                }
            }
            let first = v.iter().copied().find(|e| !e.is_zero()).expect("nonzero");
            let scale = ctx.inv(first).expect("nonzero");
            for e in v.iter_mut() {
                *e = ctx.mul(*e, scale);
            }
            basis.push(v);
        }
        basis
    }

    /// Exact determinant by elimination with swap tracking.
    pub fn det(&self, ctx: &FieldCtx) -> Result<FieldElement, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut m = self.clone();
        let n = m.rows;
        let mut det = ctx.one();
        for col in 0..n {
            let Some(pr) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
                return Ok(ctx.zero());
            };
            if pr != col {
                for c in 0..n {
                    let (a, b) = (m.get(col, c), m.get(pr, c));
                    m.set(col, c, b);
                    m.set(pr, c, a);
                }
                det = ctx.neg(det);
            }
            let pivot = m.get(col, col);
            det = ctx.mul(det, pivot);
            let inv = ctx.inv(pivot).expect("pivot is nonzero");
            for r in col + 1..n {
                let factor = ctx.mul(m.get(r, col), inv);
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = ctx.sub(m.get(r, c), ctx.mul(factor, m.get(col, c)));
                    m.set(r, c, v);
                }
            }
        }
        Ok(det)
    }
}

/// Row-major matrix over the polynomial ring GF(p^n)[t].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Poly>) -> PolyMatrix {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        PolyMatrix { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Poly {
        &self.entries[r * self.cols + c]
    }

    pub fn eval(&self, ctx: &FieldCtx, t: FieldElement) -> FieldMatrix {
        FieldMatrix::new(
            self.rows,
            self.cols,
            self.entries.iter().map(|p| p.eval(ctx, t)).collect(),
        )
    }

    fn submatrix_cols(&self, cols: &[usize]) -> PolyMatrix {
        let mut entries = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            for &c in cols {
                entries.push(self.get(r, c).clone());
            }
        }
        PolyMatrix::new(self.rows, cols.len(), entries)
    }

    /// Determinant by cofactor expansion along the first row; exact
    /// polynomial arithmetic, intended for desk-scale matrices.
    pub fn det(&self, ctx: &FieldCtx) -> Result<Poly, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.det_inner(ctx, &(0..self.rows).collect::<Vec<_>>(), &(0..self.cols).collect::<Vec<_>>()))
    }

    fn det_inner(&self, ctx: &FieldCtx, rows: &[usize], cols: &[usize]) -> Poly {
        if rows.is_empty() {
            return Poly::one(ctx);
        }
        if rows.len() == 1 {
            return self.get(rows[0], cols[0]).clone();
        }
        let mut acc = Poly::zero();
        let rest_rows = &rows[1..];
        for (k, &c) in cols.iter().enumerate() {
            let entry = self.get(rows[0], c);
            if entry.is_zero() {
                continue;
            }
            let rest_cols: Vec<usize> = cols
                .iter()
                .copied()
                .filter(|&cc| cc != c)
                .collect();
            let minor = self.det_inner(ctx, rest_rows, &rest_cols);
            let term = entry.mul(ctx, &minor);
            acc = if k % 2 == 0 {
                acc.add(ctx, &term)
            } else {
                acc.sub(ctx, &term)
            };
        }
        acc
    }

    /// The cofactor family delta_0 ... delta_{cols-rows}: delta_i is the
    /// determinant of the square submatrix on columns 1..rows-1 together with
    /// column rows+i (1-indexed). A square matrix yields the single entry
    /// [det].
    pub fn major_cofactors(&self, ctx: &FieldCtx) -> Result<Vec<Poly>, LinalgError> {
        if self.rows > self.cols {
            return Err(LinalgError::TooManyRows {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut out = Vec::with_capacity(self.cols - n + 1);
        for i in 0..=self.cols - n {
            let mut cols: Vec<usize> = (0..n - 1).collect();
            cols.push(n - 1 + i);
            out.push(self.submatrix_cols(&cols).det(ctx)?);
        }
        Ok(out)
    }

    /// Determinants of all rows x rows column selections, in lexicographic
    /// column-subset order.
    pub fn maximal_minors(&self, ctx: &FieldCtx) -> Result<Vec<Poly>, LinalgError> {
        if self.rows > self.cols {
            return Err(LinalgError::TooManyRows {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut out = Vec::new();
        let mut subset: Vec<usize> = (0..self.rows).collect();
        loop {
            out.push(self.submatrix_cols(&subset).det(ctx)?);
            // Advance to the next lexicographic subset.
            let k = self.rows;
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if subset[i] != i + self.cols - k {
                    break;
                }
            }
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldCtx;
    use crate::poly::Poly;

    fn gf(p: u64, n: u32) -> FieldCtx {
        FieldCtx::new(p, n).unwrap()
    }

    fn fmat(ctx: &FieldCtx, rows: usize, cols: usize, encs: &[u64]) -> FieldMatrix {
        FieldMatrix::new(
            rows,
            cols,
            encs.iter().map(|&e| ctx.element(e).unwrap()).collect(),
        )
    }

    fn pconst(ctx: &FieldCtx, e: u64) -> Poly {
        Poly::constant(ctx.element(e).unwrap())
    }

    #[test]
    fn rank_basics() {
        let f = gf(5, 1);
        assert_eq!(FieldMatrix::identity(&f, 4).rank(&f), 4);
        assert_eq!(FieldMatrix::zeros(&f, 3, 5).rank(&f), 0);
    }

    #[test]
    fn left_kernel_basics() {
        let f = gf(5, 1);
        assert!(FieldMatrix::identity(&f, 3).left_kernel(&f).is_empty());
        let z = FieldMatrix::zeros(&f, 1, 1);
        assert_eq!(z.left_kernel(&f), vec![vec![f.one()]]);
        // rank + kernel dimension = rows, and every basis vector annihilates.
        let m = fmat(&f, 3, 2, &[1, 2, 2, 4, 0, 0]);
        let basis = m.left_kernel(&f);
        assert_eq!(m.rank(&f) + basis.len(), 3);
        for v in &basis {
            let vm = FieldMatrix::new(1, 3, v.clone()).mul(&f, &m);
            assert!(vm.entries.iter().all(|e| e.is_zero()));
        }
    }

    #[test]
    fn kernel_of_matrix_with_no_columns() {
        let f = gf(2, 2);
        let m = FieldMatrix::new(2, 0, vec![]);
        let basis = m.left_kernel(&f);
        assert_eq!(basis.len(), 2);
    }

    #[test]
    fn det_basics() {
        let f = gf(5, 1);
        assert_eq!(FieldMatrix::identity(&f, 3).det(&f).unwrap(), f.one());
        assert!(fmat(&f, 2, 3, &[1, 0, 0, 0, 1, 0]).det(&f).is_err());
        // Swap parity matters in odd characteristic.
        let swapped = fmat(&f, 2, 2, &[0, 1, 1, 0]);
        assert_eq!(swapped.det(&f).unwrap(), f.neg(f.one()));
    }

    #[test]
    fn det_multiplicative_on_samples() {
        for (p, n) in [(2, 2), (5, 1)] {
            let f = gf(p, n);
            let q = f.order();
            let mut state = 0xfeed_2025u64;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) % q
            };
            for _ in 0..40 {
                let a = fmat(&f, 3, 3, &(0..9).map(|_| next()).collect::<Vec<_>>());
                let b = fmat(&f, 3, 3, &(0..9).map(|_| next()).collect::<Vec<_>>());
                let lhs = a.mul(&f, &b).det(&f).unwrap();
                let rhs = f.mul(a.det(&f).unwrap(), b.det(&f).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn poly_det_two_by_two() {
        let f = gf(5, 1);
        let t = Poly::x(&f);
        let one = Poly::one(&f);
        let m = PolyMatrix::new(2, 2, vec![t.clone(), one.clone(), one, t.clone()]);
        // t^2 - 1
        let expect = t.mul(&f, &t).sub(&f, &Poly::one(&f));
        assert_eq!(m.det(&f).unwrap(), expect);
    }

    #[test]
    fn major_cofactors_examples() {
        let f = gf(5, 1);
        let t = Poly::x(&f);
        // [[1,0,0],[0,1,t]]
        let m = PolyMatrix::new(
            2,
            3,
            vec![
                pconst(&f, 1),
                Poly::zero(),
                Poly::zero(),
                Poly::zero(),
                pconst(&f, 1),
                t.clone(),
            ],
        );
        let deltas = m.major_cofactors(&f).unwrap();
        assert_eq!(deltas, vec![pconst(&f, 1), t.clone()]);

        // Square matrix: the single cofactor is det.
        let sq = PolyMatrix::new(2, 2, vec![t.clone(), Poly::zero(), Poly::zero(), t.clone()]);
        assert_eq!(
            sq.major_cofactors(&f).unwrap(),
            vec![sq.det(&f).unwrap()]
        );

        let bad = PolyMatrix::new(3, 2, vec![Poly::zero(); 6]);
        assert!(bad.major_cofactors(&f).is_err());
    }

    #[test]
    fn maximal_minors_count_and_order() {
        let f = gf(2, 2);
        let one = Poly::one(&f);
        let m = PolyMatrix::new(
            2,
            4,
            vec![
                one.clone(),
                Poly::zero(),
                Poly::zero(),
                Poly::x(&f),
                Poly::zero(),
                one.clone(),
                Poly::x(&f),
                Poly::zero(),
            ],
        );
        let minors = m.maximal_minors(&f).unwrap();
        // C(4,2) = 6 minors in lexicographic subset order.
        assert_eq!(minors.len(), 6);
        assert_eq!(minors[0], one); // cols {0,1}
        let x2 = Poly::x(&f).mul(&f, &Poly::x(&f));
        assert_eq!(minors[5], x2.neg(&f)); // cols {2,3}: -x^2
    }

    #[test]
    fn rank_drop_implies_cofactors_vanish() {
        // On degree-1 random 4x6 instances: rank(M(t0)) < 4 forces every
        // delta_i(t0) = 0. The converse is not asserted.
        let f = gf(2, 2);
        let q = f.order();
        let mut state = 0x5eed_0001u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) % q
        };
        for _ in 0..30 {
            let entries: Vec<Poly> = (0..24)
                .map(|_| {
                    Poly::from_coeffs(
                        &f,
                        vec![
                            f.element(next()).unwrap(),
                            f.element(next()).unwrap(),
                        ],
                    )
                })
                .collect();
            let m = PolyMatrix::new(4, 6, entries);
            let deltas = m.major_cofactors(&f).unwrap();
            for t0 in f.elements() {
                if m.eval(&f, t0).rank(&f) < 4 {
                    for d in &deltas {
                        assert!(d.eval(&f, t0).is_zero());
                    }
                }
            }
        }
    }
}
