//! Small dense helpers over `nalgebra` shared by the model modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted for a matrix to count as positive definite.
pub const SPD_TOLERANCE: f64 = 1e-10;

/// Eigenvalue range `(min, max)` of a symmetric matrix.
pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

pub fn check_square(m: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn check_len(v: &DVector<f64>, n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {}, expected {n}",
            v.len()
        )));
    }
    Ok(())
}

pub fn check_finite_matrix(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub fn check_finite_vector(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Largest absolute asymmetry `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Validates symmetry and the eigenvalue floor, returning `(min, max)` eigenvalues.
pub fn require_spd(m: &DMatrix<f64>, context: &str) -> Result<(f64, f64)> {
    check_finite_matrix(m, context)?;
    let scale = m.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    if asymmetry(m) > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite {
            context: format!("{context} is not symmetric"),
            min_eigenvalue: f64::NAN,
        });
    }
    let (min, max) = eigen_range(m);
    if !(min > SPD_TOLERANCE) {
        return Err(Error::NotPositiveDefinite {
            context: context.to_string(),
            min_eigenvalue: min,
        });
    }
    Ok((min, max))
}

/// Cholesky factorization of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub fn new(m: &DMatrix<f64>, context: &str) -> Result<Self> {
        match Cholesky::new(m.clone()) {
            Some(chol) => Ok(Self { chol }),
            None => Err(Error::NotPositiveDefinite {
                context: context.to_string(),
                min_eigenvalue: eigen_range(m).0,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// `x' M y`
pub fn quad_form(x: &DVector<f64>, m: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    (m * y).dot(x)
}

/// `x' M x` over raw slices; hot-loop variant.
#[inline]
pub fn quad_form_slice(x: &[f64], m: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        let mut s = 0.0;
        for j in 0..n {
            s += row[j] * x[j];
        }
        acc += x[i] * s;
    }
    acc
}

/// Row-major copy of a matrix.
pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}
