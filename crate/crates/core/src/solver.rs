//! Diagonally preconditioned conjugate gradients.

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, SparseSymmetricMatrix};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// A symmetric positive definite system with its Jacobi preconditioner, built once
/// and reused across right-hand sides.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    matrix: SparseSymmetricMatrix,
    inv_diag: Vec<f64>,
    rel_tol: f64,
    max_iter: usize,
    /// 1ᵀA1, present when the constant-mode correction is enabled.
    constant_energy: Option<f64>,
}

impl SpdSolver {
    pub fn new(matrix: SparseSymmetricMatrix, rel_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::param(format!("solver tolerance must lie in (0, 1), got {rel_tol}")));
        }
        let diag = matrix.diagonal();
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::param(format!("matrix diagonal entry {i} is not positive")));
        }
        let n = matrix.n();
        Ok(Self {
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
            matrix,
            rel_tol,
            max_iter: 10 * n.max(1),
            constant_energy: None,
        })
    }

    /// After each solve, applies a Galerkin correction along the constant vector so
    /// that the residual sums to zero. Discrete mass balances then hold to rounding
    /// rather than to the solver tolerance.
    pub fn with_constant_correction(mut self) -> Self {
        let energy = self.matrix.total();
        if energy > 0.0 {
            self.constant_energy = Some(energy);
        }
        self
    }

    pub fn matrix(&self) -> &SparseSymmetricMatrix {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; b.len()];
        self.solve_into(b, &mut x)?;
        Ok(x)
    }

    /// Solves in place, using the incoming `x` as the initial guess. Returns the
    /// number of iterations taken.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) -> Result<usize> {
        let iterations = self.pcg(b, x)?;
        if let Some(energy) = self.constant_energy {
            let ax = self.matrix.matvec(x);
            let residual_sum: f64 = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).sum();
            let alpha = residual_sum / energy;
            x.iter_mut().for_each(|v| *v += alpha);
        }
        Ok(iterations)
    }

    fn pcg(&self, b: &[f64], x: &mut [f64]) -> Result<usize> {
        let n = self.matrix.n();
        if b.len() != n || x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: if b.len() != n { b.len() } else { x.len() },
            });
        }
        let b_norm = norm2(b);
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(0);
        }
        let target = self.rel_tol * b_norm;
        let mut r = self.matrix.matvec(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut res = norm2(&r);
        if res <= target {
            return Ok(0);
        }
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for iter in 1..=self.max_iter {
            self.matrix.matvec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Solver {
                    iterations: iter,
                    residual: res / b_norm,
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            res = norm2(&r);
            if res <= target {
                return Ok(iter);
            }
            for i in 0..n {
                z[i] = r[i] * self.inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Solver {
            iterations: self.max_iter,
            residual: res / b_norm,
        })
    }
}

/// One-shot SPD solve with relative residual tolerance `rel_tol`.
pub fn solve_spd(a: &SparseSymmetricMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    SpdSolver::new(a.clone(), rel_tol)?.solve(b)
}
