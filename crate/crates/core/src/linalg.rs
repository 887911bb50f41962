//! Dense least squares through the normal equations.

use nalgebra::{DMatrix, DVector};

use crate::field_model::Complex;

/// Condition number above which a ridge term is added.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, thiserror::Error)]
pub enum LeastSquaresError {
    #[error("{samples} samples cannot determine {unknowns} unknowns")]
    Underdetermined { samples: usize, unknowns: usize },
    #[error("normal equations are singular even after regularization")]
    Singular,
}

/// Solution of a least-squares problem with conditioning information.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub solution: DVector<Complex>,
    /// Eigenvalue ratio of the normal matrix before regularization.
    pub condition: f64,
    /// Ridge added to the diagonal (0 when none was needed).
    pub ridge: f64,
}

/// Accumulates `AᴴA` and `Aᴴb` row by row.
#[derive(Clone, Debug)]
pub struct NormalEquations {
    ata: DMatrix<Complex>,
    atb: DVector<Complex>,
    rows: usize,
}

impl NormalEquations {
    pub fn new(unknowns: usize) -> Self {
        Self {
            ata: DMatrix::zeros(unknowns, unknowns),
            atb: DVector::zeros(unknowns),
            rows: 0,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.atb.len()
    }

    pub fn add_row(&mut self, row: &[Complex], rhs: Complex) {
        let n = self.unknowns();
        debug_assert_eq!(row.len(), n);
        for i in 0..n {
            let ci = row[i].conj();
            if ci == Complex::new(0.0, 0.0) {
                continue;
            }
            self.atb[i] += ci * rhs;
            for j in 0..n {
                self.ata[(i, j)] += ci * row[j];
            }
        }
        self.rows += 1;
    }

    /// Adds rows in bulk from a row-major design matrix.
    pub fn add_block(&mut self, design: &DMatrix<Complex>, rhs: &DVector<Complex>) {
        self.ata += design.adjoint() * design;
        self.atb += design.adjoint() * rhs;
        self.rows += design.nrows();
    }

    pub fn solve(self) -> Result<LeastSquares, LeastSquaresError> {
        let n = self.unknowns();
        if self.rows < n {
            return Err(LeastSquaresError::Underdetermined { samples: self.rows, unknowns: n });
        }
        if n == 0 {
            return Ok(LeastSquares { solution: DVector::zeros(0), condition: 1.0, ridge: 0.0 });
        }
        let eig = self.ata.clone().symmetric_eigenvalues();
        let max = eig.iter().cloned().fold(0.0f64, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if max <= 0.0 {
            // all-zero design: the minimum-norm solution is zero
            return Ok(LeastSquares { solution: DVector::zeros(n), condition: f64::INFINITY, ridge: 0.0 });
        }
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        let mut ata = self.ata;
        let mut ridge = 0.0;
        if condition > CONDITION_LIMIT {
            let trace: f64 = (0..n).map(|i| ata[(i, i)].re).sum();
            ridge = 1e-10 * trace / n as f64;
            for i in 0..n {
                ata[(i, i)] += Complex::new(ridge, 0.0);
            }
        }
        let chol = ata.cholesky().ok_or(LeastSquaresError::Singular)?;
        Ok(LeastSquares { solution: chol.solve(&self.atb), condition, ridge })
    }
}
