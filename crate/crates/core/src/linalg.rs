//! Direct solver for symmetric positive-definite block-tridiagonal systems,
//! optionally with the two corner blocks of a cyclic (periodic) coupling.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// `K` with diagonal blocks `diag[i]`, super-diagonal blocks `upper[i] = K[i][i+1]`
/// (sub-diagonal blocks are their transposes), and for cyclic systems the
/// corner `K[n-1][0] = corner`.
#[derive(Clone, Debug)]
pub struct BlockTridiagonal {
    pub diag: Vec<DMatrix<f64>>,
    pub upper: Vec<DMatrix<f64>>,
    pub corner: Option<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    /// `K x` for a stacked block vector, columns being independent right-hand sides.
    pub fn apply(&self, x: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let n = self.blocks();
        let mut out: Vec<DMatrix<f64>> = (0..n).map(|i| &self.diag[i] * &x[i]).collect();
        for i in 0..self.upper.len() {
            out[i] += &self.upper[i] * &x[i + 1];
            out[i + 1] += self.upper[i].transpose() * &x[i];
        }
        if let Some(c) = &self.corner {
            out[n - 1] += c * &x[0];
            out[0] += c.transpose() * &x[n - 1];
        }
        out
    }

    /// Solves `K x = r`.
    pub fn solve(&self, r: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.blocks();
        if r.len() != n {
            return Err(Error::InvalidArgument("right-hand side has the wrong number of blocks".into()));
        }
        match &self.corner {
            None => {
                let f = Factor::new(&self.diag, &self.upper)?;
                Ok(f.solve(r))
            }
            Some(corner) => self.solve_cyclic(corner, r),
        }
    }

    /// Bordering: eliminate the last block through its Schur complement.
    fn solve_cyclic(&self, corner: &DMatrix<f64>, r: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.blocks();
        let d = self.diag[0].nrows();
        let f = Factor::new(&self.diag[..n - 1], &self.upper[..n - 2])?;
        // coupling column between the leading system and the last block
        let mut col: Vec<DMatrix<f64>> = vec![DMatrix::zeros(d, d); n - 1];
        col[0] += corner.transpose();
        col[n - 2] += &self.upper[n - 2];
        let tc = f.solve(&col);
        let tr = f.solve(&r[..n - 1]);
        let mut schur = self.diag[n - 1].clone();
        let mut rhs = r[n - 1].clone();
        for i in 0..n - 1 {
            schur -= col[i].transpose() * &tc[i];
            rhs -= col[i].transpose() * &tr[i];
        }
        let chol = Cholesky::new(schur)
            .ok_or_else(|| Error::SolverFailure("cyclic Schur complement is not positive definite".into()))?;
        let last = chol.solve(&rhs);
        let mut x: Vec<DMatrix<f64>> = tr.into_iter().zip(&tc).map(|(a, b)| a - b * &last).collect();
        x.push(last);
        Ok(x)
    }
}

/// Block LDL^T factorization of a non-cyclic system.
struct Factor<'a> {
    upper: &'a [DMatrix<f64>],
    pivots: Vec<Cholesky<f64, Dyn>>,
}

impl<'a> Factor<'a> {
    fn new(diag: &[DMatrix<f64>], upper: &'a [DMatrix<f64>]) -> Result<Self> {
        let mut pivots: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(diag.len());
        for (i, di) in diag.iter().enumerate() {
            let mut p = di.clone();
            if i > 0 {
                let b = &upper[i - 1];
                p -= b.transpose() * pivots[i - 1].solve(b);
            }
            let p = 0.5 * (&p + p.transpose());
            let chol = Cholesky::new(p).ok_or_else(|| {
                Error::SolverFailure(format!("pivot block {i} is not positive definite"))
            })?;
            pivots.push(chol);
        }
        Ok(Factor { upper, pivots })
    }

    fn solve(&self, r: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let n = self.pivots.len();
        let mut y: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut yi = r[i].clone();
            if i > 0 {
                yi -= self.upper[i - 1].transpose() * self.pivots[i - 1].solve(&y[i - 1]);
            }
            y.push(yi);
        }
        let mut x: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); n];
        for i in (0..n).rev() {
            let mut rhs = y[i].clone();
            if i + 1 < n {
                rhs -= &self.upper[i] * &x[i + 1];
            }
            x[i] = self.pivots[i].solve(&rhs);
        }
        x
    }
}
