//! Dense complex linear algebra on top of faer's partial-pivoting LU.
//!
//! Public types stay in nalgebra; matrices are viewed in place (both
//! libraries are column-major) and only results are copied back.

use faer::linalg::solvers::{DenseSolveCore, PartialPivLu, Solve};
use faer::{Mat, MatRef};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Systems whose 1-norm condition estimate exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

pub type CMatrix = DMatrix<Complex64>;

fn view(m: &CMatrix) -> MatRef<'_, Complex64> {
    MatRef::from_column_major_slice(m.as_slice(), m.nrows(), m.ncols())
}

fn to_nalgebra(m: &Mat<Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a: f64, &b| a.max(b))
}

/// LU factorization of a square complex matrix with a condition guard.
pub struct Lu {
    lu: PartialPivLu<Complex64>,
    n: usize,
    condition: f64,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square matrix");
        let n = a.nrows();
        let lu = view(a).partial_piv_lu();
        let mut out = Self {
            lu,
            n,
            condition: f64::INFINITY,
        };
        out.condition = out.estimate_condition(norm1(a));
        if !out.condition.is_finite() || out.condition > MAX_CONDITION {
            return Err(Error::Singular {
                condition: out.condition,
            });
        }
        Ok(out)
    }

    /// 1-norm condition estimate `||A||_1 ||A^-1||_1` (Hager/Higham).
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(rhs.nrows(), self.n);
        to_nalgebra(&self.lu.solve(view(rhs)))
    }

    pub fn inverse(&self) -> CMatrix {
        to_nalgebra(&self.lu.inverse())
    }

    fn estimate_condition(&self, a_norm: f64) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut x = Mat::<Complex64>::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
        let mut estimate = 0.0;
        for _ in 0..5 {
            let y = self.lu.solve(&x);
            let y_norm: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
            if !y_norm.is_finite() {
                return f64::INFINITY;
            }
            if y_norm <= estimate {
                break;
            }
            estimate = y_norm;
            let sign = Mat::<Complex64>::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                let r = v.norm();
                if r == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    v / r
                }
            });
            let mut z = sign;
            self.lu.solve_adjoint_in_place(z.as_mut());
            let (j, zmax) = (0..n)
                .map(|i| (i, z[(i, 0)].norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let zx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zmax <= zx {
                break;
            }
            x = Mat::from_fn(n, 1, |i, _| {
                if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
        }
        estimate * a_norm
    }
}

/// Solves `A X = B`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    Ok(Lu::factor(a)?.solve(b))
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    Ok(Lu::factor(a)?.inverse())
}

/// `A * B` via faer's blocked kernels.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows());
    to_nalgebra(&(view(a) * view(b)))
}
