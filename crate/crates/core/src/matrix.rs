//! Dense matrices of symbolic expressions with exact determinant, adjugate,
//! and inverse. Dimensions stay small (≤ 8), so Laplace expansion with
//! memoization over column subsets is fast and division-free.

use std::sync::Arc;

use crate::error::Error;
use crate::expr::{Context, Expr};

#[derive(Clone, Debug, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl ExprMatrix {
    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<ExprMatrix, Error> {
        let n_rows = rows.len();
        let n_cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    found: r.len(),
                });
            }
            data.extend(r);
        }
        Ok(ExprMatrix {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn filled(ctx: &Arc<Context>, rows: usize, cols: usize, f: impl Fn(usize, usize) -> Expr) -> ExprMatrix {
        let _ = ctx;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ExprMatrix { rows, cols, data }
    }

    pub fn zeros(ctx: &Arc<Context>, rows: usize, cols: usize) -> ExprMatrix {
        ExprMatrix::filled(ctx, rows, cols, |_, _| Expr::zero(ctx))
    }

    pub fn identity(ctx: &Arc<Context>, n: usize) -> ExprMatrix {
        ExprMatrix::filled(ctx, n, n, |i, j| {
            if i == j {
                Expr::one(ctx)
            } else {
                Expr::zero(ctx)
            }
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn row(&self, i: usize) -> Vec<Expr> {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Expr> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> ExprMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        ExprMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> ExprMatrix {
        ExprMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &ExprMatrix) -> ExprMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ExprMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ExprMatrix) -> ExprMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ExprMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: &Expr) -> ExprMatrix {
        self.map(|e| e * s)
    }

    pub fn mul(&self, other: &ExprMatrix) -> ExprMatrix {
        assert_eq!(self.cols, other.rows);
        let ctx = self.data[0].context().clone();
        ExprMatrix::filled(&ctx, self.rows, other.cols, |i, j| {
            let mut acc = Expr::zero(&ctx);
            for k in 0..self.cols {
                acc = &acc + &(self.get(i, k) * other.get(k, j));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[Expr]) -> Vec<Expr> {
        assert_eq!(self.cols, v.len());
        let ctx = self.data[0].context().clone();
        (0..self.rows)
            .map(|i| {
                let mut acc = Expr::zero(&ctx);
                for k in 0..self.cols {
                    acc = &acc + &(self.get(i, k) * &v[k]);
                }
                acc
            })
            .collect()
    }

    /// Determinant by Laplace expansion with memoization over column masks.
    pub fn det(&self) -> Result<Expr, Error> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let ctx = self.data[0].context().clone();
        if n == 0 {
            return Ok(Expr::one(&ctx));
        }
        let full: u32 = (1 << n) - 1;
        Ok(self.det_minor(&ctx, 0, full))
    }

    /// Determinant of the submatrix formed by rows `row..row+|mask|` and the
    /// columns in `mask`, memoized per call chain.
    fn det_minor(&self, ctx: &Arc<Context>, row: usize, mask: u32) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.det_minor_memo(ctx, row, mask, &mut memo)
    }

    fn det_minor_memo(
        &self,
        ctx: &Arc<Context>,
        row: usize,
        mask: u32,
        memo: &mut std::collections::HashMap<(usize, u32), Expr>,
    ) -> Expr {
        if mask == 0 {
            return Expr::one(ctx);
        }
        if let Some(e) = memo.get(&(row, mask)) {
            return e.clone();
        }
        let mut acc = Expr::zero(ctx);
        let mut sign = 1i64;
        for j in 0..self.cols {
            if mask & (1 << j) == 0 {
                continue;
            }
            let sub = self.det_minor_memo(ctx, row + 1, mask & !(1 << j), memo);
            let term = &(self.get(row, j) * &sub) * &Expr::integer(ctx, sign);
            acc = &acc + &term;
            sign = -sign;
        }
        memo.insert((row, mask), acc.clone());
        acc
    }

    /// Adjugate: `adj(A)[j][i] = (-1)^{i+j} * minor_{ij}(A)`, so that
    /// `adj(A) * A = det(A) * I` exactly.
    pub fn adjugate(&self) -> Result<ExprMatrix, Error> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let ctx = self.data[0].context().clone();
        if n == 0 {
            return Ok(ExprMatrix::identity(&ctx, 0));
        }
        let mut out = ExprMatrix::zeros(&ctx, n, n);
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor_without(&ctx, i, j);
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                out.set(j, i, &minor * &Expr::integer(&ctx, sign));
            }
        }
        Ok(out)
    }

    /// Determinant of the matrix with row `i` and column `j` removed.
    fn minor_without(&self, ctx: &Arc<Context>, i: usize, j: usize) -> Expr {
        let n = self.rows;
        if n == 1 {
            return Expr::one(ctx);
        }
        let rows: Vec<usize> = (0..n).filter(|&r| r != i).collect();
        let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
        let sub = ExprMatrix::filled(ctx, n - 1, n - 1, |a, b| self.get(rows[a], cols[b]).clone());
        sub.det().expect("minor determinant")
    }

    /// Exact inverse via adjugate/determinant division. Entries divide
    /// exactly where the quotient is polynomial, otherwise they carry the
    /// opaque inverse of the determinant.
    pub fn inverse(&self) -> Result<ExprMatrix, Error> {
        let det = self.det()?;
        if det.is_provably_zero()? {
            return Err(Error::SingularMatrix);
        }
        let adj = self.adjugate()?;
        let mut out = adj.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, &adj.get(i, j).clone() / &det);
            }
        }
        Ok(out)
    }

    /// Componentwise structural equality of normal forms.
    pub fn equivalent(&self, other: &ExprMatrix) -> Result<bool, Error> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Ok(false);
        }
        for (a, b) in self.data.iter().zip(&other.data) {
            if !a.equivalent(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn ctx() -> Arc<Context> {
        Context::new(&["x1", "x2", "x3", "x4"], &[]).unwrap()
    }

    fn from_strs(ctx: &Arc<Context>, rows: &[&[&str]]) -> ExprMatrix {
        ExprMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|s| parse(s, ctx).unwrap()).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn det_of_heisenberg_frame() {
        let c = ctx();
        // columns are the frame fields; this is the matrix with e2 = x1 d2 + d3
        let f = from_strs(
            &c,
            &[
                &["1", "0", "0", "0"],
                &["0", "x1", "1", "0"],
                &["0", "1", "0", "0"],
                &["0", "0", "0", "1"],
            ],
        );
        let det = f.det().unwrap();
        let minus_one = Expr::integer(&c, -1);
        assert!(det.equivalent(&minus_one).unwrap());
    }

    #[test]
    fn adjugate_times_matrix_is_det_identity() {
        let c = ctx();
        let m = from_strs(
            &c,
            &[
                &["x1", "1", "0"],
                &["2", "x2", "1"],
                &["0", "1", "x1 + x2"],
            ],
        );
        let det = m.det().unwrap();
        let prod = m.adjugate().unwrap().mul(&m);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j {
                    det.clone()
                } else {
                    Expr::zero(&c)
                };
                assert!(prod.get(i, j).equivalent(&expected).unwrap(), "({i},{j})");
            }
        }
    }

    #[test]
    fn inverse_of_constant_matrix_matches_numeric_inverse() {
        let c = ctx();
        let m = from_strs(&c, &[&["2", "1"], &["1", "1"]]);
        let inv = m.inverse().unwrap();
        // numeric oracle: hand-solved inverse of [[2,1],[1,1]] is [[1,-1],[-1,2]]
        let expected = from_strs(&c, &[&["1", "-1"], &["-1", "2"]]);
        assert!(inv.equivalent(&expected).unwrap());
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let c = ctx();
        let m = from_strs(&c, &[&["1", "2"], &["2", "4"]]);
        assert!(matches!(m.inverse(), Err(Error::SingularMatrix)));
    }

    #[test]
    fn inverse_with_symbolic_entries_roundtrips() {
        let c = ctx();
        let m = from_strs(&c, &[&["1", "x1"], &["0", "1"]]);
        let inv = m.inverse().unwrap();
        let prod = inv.mul(&m);
        assert!(prod.equivalent(&ExprMatrix::identity(&c, 2)).unwrap());
    }
}
