//! Walk and phase unitaries for small dense real symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `exp(-i t A)` through the eigendecomposition of a real symmetric `A`.
#[derive(Debug, Clone)]
pub struct SymmetricWalk {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl SymmetricWalk {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let k = a.nrows();
        if a.ncols() != k {
            return Err(crate::error::invalid("walk matrix must be square"));
        }
        for i in 0..k {
            for j in 0..i {
                let (x, y) = (a[(i, j)], a[(j, i)]);
                if (x - y).abs() > 1e-12 * x.abs().max(y.abs()).max(1.0) {
                    return Err(Error::NotSymmetric(i, j));
                }
            }
        }
        let eig = SymmetricEigen::new(a);
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `psi <- exp(-i t A) psi`.
    pub fn apply(&self, t: f64, psi: &mut [Complex64]) {
        let k = self.dim();
        let v = &self.vectors;
        let mut c = vec![Complex64::new(0.0, 0.0); k];
        for (m, cm) in c.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, p) in psi.iter().enumerate() {
                acc += p * v[(i, m)];
            }
            *cm = acc * Complex64::from_polar(1.0, -t * self.values[m]);
        }
        for (i, p) in psi.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, cm) in c.iter().enumerate() {
                acc += cm * v[(i, m)];
            }
            *p = acc;
        }
    }
}

/// `psi <- exp(-i gamma Q) psi` for diagonal `Q`.
pub fn apply_phase(gamma: f64, qualities: &[f64], psi: &mut [Complex64]) {
    for (p, &q) in psi.iter_mut().zip(qualities) {
        *p *= Complex64::from_polar(1.0, -gamma * q);
    }
}

pub fn probabilities(psi: &[Complex64]) -> Vec<f64> {
    psi.iter().map(|p| p.norm_sqr()).collect()
}

pub fn norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt()
}
