//! Density matrices and observables.

use crate::linalg::{
    self, cr, eigenvalues_hermitian, hermitian_eigen, hermiticity_deviation, hermitize, kron,
    kron_power, CMat, CVec,
};
use crate::{Error, Result, TOL_STRUCTURAL};
use num_complex::Complex64;

/// A validated quantum state: Hermitian, positive semidefinite, unit trace.
///
/// Construction clips eigenvalues in `[-TOL_STRUCTURAL, 0)` to zero and
/// renormalizes, so states surviving long channel compositions stay usable
/// by the distance computations downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidDimension { dim: mat.nrows() });
        }
        let deviation = hermiticity_deviation(&mat);
        if deviation > TOL_STRUCTURAL {
            return Err(Error::NotHermitian { deviation });
        }
        let mat = hermitize(&mat);
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > TOL_STRUCTURAL || trace.im.abs() > TOL_STRUCTURAL {
            return Err(Error::NotUnitTrace { trace: trace.re });
        }
        let dim = mat.nrows();
        let (values, vectors) = hermitian_eigen(&mat);
        let min = values[0];
        if min < -TOL_STRUCTURAL {
            return Err(Error::NotPositive { eigenvalue: min });
        }
        let mat = if min < 0.0 {
            // Clip the negative tail and renormalize.
            let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let diag = CMat::from_diagonal(&CVec::from_iterator(
                dim,
                clipped.iter().map(|&v| cr(v / total)),
            ));
            &vectors * diag * vectors.adjoint()
        } else {
            mat
        };
        Ok(Self { dim, mat })
    }

    /// Rank-1 projector onto `vec` (normalized first).
    pub fn from_pure(vec: &CVec) -> Result<Self> {
        let norm = vec.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidDimension { dim: vec.len() });
        }
        let v = vec.scale(1.0 / norm);
        let mat = CMat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj());
        Self::new(mat)
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut mat = CMat::zeros(dim, dim);
        mat[(index, index)] = cr(1.0);
        Self { dim, mat }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            dim,
            mat: linalg::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            dim: self.dim * other.dim,
            mat: kron(&self.mat, &other.mat),
        }
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_hermitian(&self.mat)
    }
}

fn qubit_pure(amp0: Complex64, amp1: Complex64) -> DensityMatrix {
    DensityMatrix::from_pure(&CVec::from_vec(vec![amp0, amp1])).expect("valid qubit amplitudes")
}

/// `|0..0><0..0|` on `n` qubits.
pub fn zero_state(n: usize) -> DensityMatrix {
    DensityMatrix::basis_state(1 << n, 0)
}

/// `|1..1><1..1|` on `n` qubits.
pub fn one_state(n: usize) -> DensityMatrix {
    DensityMatrix::basis_state(1 << n, (1 << n) - 1)
}

/// `|+>^{⊗n}`.
pub fn plus_state(n: usize) -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = qubit_pure(cr(s), cr(s));
    DensityMatrix::new(kron_power(q.matrix(), n)).expect("tensor power of a state")
}

/// `|−>^{⊗n}`.
pub fn minus_state(n: usize) -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = qubit_pure(cr(s), cr(-s));
    DensityMatrix::new(kron_power(q.matrix(), n)).expect("tensor power of a state")
}

/// `|+i>^{⊗n}` (eigenstate of Y).
pub fn plus_i_state(n: usize) -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = qubit_pure(cr(s), Complex64::new(0.0, s));
    DensityMatrix::new(kron_power(q.matrix(), n)).expect("tensor power of a state")
}

/// A Hermitian observable. `normalized` records that the spectrum was
/// verified to lie in `[-1/2, 1/2]`, the convention under which all spread
/// formulas here are stated.
#[derive(Debug, Clone)]
pub struct Observable {
    dim: usize,
    mat: CMat,
    normalized: bool,
}

impl Observable {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidDimension { dim: mat.nrows() });
        }
        let deviation = hermiticity_deviation(&mat);
        if deviation > TOL_STRUCTURAL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            dim: mat.nrows(),
            mat: hermitize(&mat),
            normalized: false,
        })
    }

    /// Like [`Observable::new`] but additionally checks the spectrum fits in
    /// `[-1/2, 1/2]`.
    pub fn normalized(mat: CMat) -> Result<Self> {
        let mut obs = Self::new(mat)?;
        let values = eigenvalues_hermitian(&obs.mat);
        let (min, max) = (values[0], values[values.len() - 1]);
        if min < -0.5 - TOL_STRUCTURAL || max > 0.5 + TOL_STRUCTURAL {
            return Err(Error::NotNormalized { min, max });
        }
        obs.normalized = true;
        Ok(obs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Eigenvalues (ascending) and matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, CMat) {
        hermitian_eigen(&self.mat)
    }
}

/// `Tr(A ρ)`. The imaginary residue of the trace is discarded after a
/// magnitude check.
pub fn expectation(a: &Observable, rho: &DensityMatrix) -> Result<f64> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: rho.dim(),
        });
    }
    let t = (a.matrix() * rho.matrix()).trace();
    debug_assert!(t.im.abs() < 1e-10, "expectation has imaginary residue {}", t.im);
    Ok(t.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    #[test]
    fn basis_state_is_valid() {
        let rho = DensityMatrix::new(from_rows(&[vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(0.0)]]))
            .unwrap();
        assert_eq!(rho.dim(), 2);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dephased_plus_state_is_valid() {
        // Z_{0.1}(|+><+|) computed by hand: (1-eps) rho + eps Z rho Z.
        let rho = DensityMatrix::new(from_rows(&[
            vec![cr(0.5), cr(0.4)],
            vec![cr(0.4), cr(0.5)],
        ]))
        .unwrap();
        let eig = rho.eigenvalues();
        assert!((eig[0] - 0.1).abs() < 1e-12 && (eig[1] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn non_positive_matrix_rejected() {
        // Eigenvalues {1.1, -0.1}.
        let err = DensityMatrix::new(from_rows(&[
            vec![cr(0.5), cr(0.6)],
            vec![cr(0.6), cr(0.5)],
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::NotPositive { .. }));
    }

    #[test]
    fn non_hermitian_rejected() {
        let err = DensityMatrix::new(from_rows(&[
            vec![cr(0.5), cr(0.5)],
            vec![cr(0.0), cr(0.5)],
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn wrong_trace_rejected() {
        let err = DensityMatrix::new(from_rows(&[
            vec![cr(0.7), cr(0.0)],
            vec![cr(0.0), cr(0.7)],
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::NotUnitTrace { .. }));
    }

    #[test]
    fn tiny_negative_eigenvalue_clipped_and_renormalized() {
        let e = 2e-10;
        let mat = from_rows(&[vec![cr(1.0 + e), cr(0.0)], vec![cr(0.0), cr(-e)]]);
        let rho = DensityMatrix::new(mat).unwrap();
        let eig = rho.eigenvalues();
        assert!(eig[0] >= 0.0);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let z_half = Observable::normalized(from_rows(&[
            vec![cr(0.5), cr(0.0)],
            vec![cr(0.0), cr(-0.5)],
        ]))
        .unwrap();
        assert!((expectation(&z_half, &zero_state(1)).unwrap() - 0.5).abs() < 1e-12);

        // X/2 on the dephased plus state: (1 - 2 eps) / 2 with eps = 0.1.
        let x_half = Observable::normalized(from_rows(&[
            vec![cr(0.0), cr(0.5)],
            vec![cr(0.5), cr(0.0)],
        ]))
        .unwrap();
        let rho = DensityMatrix::new(from_rows(&[
            vec![cr(0.5), cr(0.4)],
            vec![cr(0.4), cr(0.5)],
        ]))
        .unwrap();
        assert!((expectation(&x_half, &rho).unwrap() - 0.4).abs() < 1e-12);

        // I/2 has expectation 1/2 on any state.
        let half_id = Observable::normalized(linalg::identity(2).scale(0.5)).unwrap();
        assert!((expectation(&half_id, &rho).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn observable_normalization_check() {
        let err = Observable::normalized(from_rows(&[
            vec![cr(1.0), cr(0.0)],
            vec![cr(0.0), cr(-1.0)],
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }
}
