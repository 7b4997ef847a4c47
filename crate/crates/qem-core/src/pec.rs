//! Probabilistic error cancellation: invert a noise channel as a signed
//! mixture of implementable operations and pay for the signs with sampling
//! overhead `gamma`.

use crate::bounds::ProtocolShape;
use crate::channel::QuantumChannel;
use crate::linalg::CMat;
use crate::pauli::{all_strings, PauliString};
use crate::protocol::{EstimatorTable, MitigationProtocolSpec, Povm};
use crate::state::Observable;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Transfer matrix in the Pauli basis: entry `(i, j)` is
/// `Tr(P_i ch(P_j)) / 2^n` over the lexicographic string order. Channel
/// composition becomes matrix multiplication in this representation.
pub fn pauli_transfer_matrix(ch: &QuantumChannel) -> Result<DMatrix<f64>> {
    let dim = ch.dim_in();
    if !dim.is_power_of_two() || ch.dim_out() != dim {
        return Err(Error::DimensionNotPowerOfTwo { dim });
    }
    let n = dim.trailing_zeros() as usize;
    let strings = all_strings(n);
    let mats: Vec<CMat> = strings.iter().map(PauliString::matrix).collect();
    let size = strings.len();
    let mut out = DMatrix::<f64>::zeros(size, size);
    for (j, pj) in mats.iter().enumerate() {
        let image = ch.apply_matrix(pj);
        for (i, pi) in mats.iter().enumerate() {
            let t = (pi * &image).trace();
            debug_assert!(t.im.abs() < 1e-9);
            out[(i, j)] = t.re / dim as f64;
        }
    }
    Ok(out)
}

/// A signed decomposition `ch^{-1} = Σ c_j B_j` over a basis of channels,
/// with sampling overhead `gamma = Σ |c_j|`.
#[derive(Debug, Clone)]
pub struct QuasiProbDecomposition {
    pub basis_labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub gamma: f64,
    basis: Vec<QuantumChannel>,
}

impl QuasiProbDecomposition {
    pub fn basis(&self) -> &[QuantumChannel] {
        &self.basis
    }
}

/// Conjugations by I, X, Y, Z: the default single-qubit basis. Its transfer
/// matrices are diagonal, so any Pauli-diagonal noise inverse is in the span.
pub fn pauli_conjugation_basis() -> Vec<(String, QuantumChannel)> {
    ["I", "X", "Y", "Z"]
        .iter()
        .map(|name| {
            let ps = PauliString::parse(name).expect("Pauli name");
            (name.to_string(), QuantumChannel::pauli_conjugation(&ps))
        })
        .collect()
}

/// Solve `Σ c_j PTM(B_j) = PTM(ch)^{-1}` in the least-squares sense and
/// reject residuals above tolerance.
pub fn quasiprob_decompose(
    target: &QuantumChannel,
    basis: &[(String, QuantumChannel)],
) -> Result<QuasiProbDecomposition> {
    let t = pauli_transfer_matrix(target)?;
    let size = t.nrows();
    let svd_t = t.clone().svd(false, false);
    let min_singular = svd_t
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let inverse = t
        .try_inverse()
        .filter(|_| min_singular > 1e-9)
        .ok_or(Error::NotInvertibleChannel { min_singular })?;

    let mut system = DMatrix::<f64>::zeros(size * size, basis.len());
    for (j, (_, b)) in basis.iter().enumerate() {
        let ptm = pauli_transfer_matrix(b)?;
        for (row, value) in ptm.iter().enumerate() {
            system[(row, j)] = *value;
        }
    }
    let rhs = DVector::<f64>::from_iterator(size * size, inverse.iter().copied());
    let svd = system.clone().svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-12)
        .map_err(|_| Error::SingularBasis { residual: f64::NAN })?;
    let residual = (&system * &coeffs - &rhs).amax();
    if residual > 1e-9 {
        return Err(Error::SingularBasis { residual });
    }
    let coefficients: Vec<f64> = coeffs.iter().copied().collect();
    let gamma: f64 = coefficients.iter().map(|c| c.abs()).sum();
    Ok(QuasiProbDecomposition {
        basis_labels: basis.iter().map(|(l, _)| l.clone()).collect(),
        coefficients,
        gamma,
        basis: basis.iter().map(|(_, b)| b.clone()).collect(),
    })
}

/// Assemble the PEC protocol for noise `ch`, observable `a` and a
/// decomposition of `ch^{-1}`.
///
/// Each round applies basis operation `B_j` with probability `|c_j| / gamma`
/// to the noisy state and measures `a` in a fixed eigenbasis; the estimator
/// multiplies the observed eigenvalue by `gamma sgn(c_j)`. The expected
/// value is exactly `Tr(a ψ)` (unbiased), and the estimator spread is
/// `gamma` for observables with ±1/2 extremal eigenvalues.
pub fn pec_spec(
    ch: &QuantumChannel,
    decomp: &QuasiProbDecomposition,
    a: &Observable,
) -> Result<MitigationProtocolSpec> {
    if !a.is_normalized() {
        let values = crate::linalg::eigenvalues_hermitian(a.matrix());
        return Err(Error::NotNormalized {
            min: values[0],
            max: values[values.len() - 1],
        });
    }
    let dim = ch.dim_in();
    if a.dim() != dim || ch.dim_out() != dim {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: dim,
        });
    }
    if !dim.is_power_of_two() {
        return Err(Error::DimensionNotPowerOfTwo { dim });
    }
    let qubits = dim.trailing_zeros() as usize;

    let (eigenvalues, eigenvectors) = a.eigen();
    let projectors: Vec<CMat> = (0..dim)
        .map(|i| {
            let v = eigenvectors.column(i);
            CMat::from_fn(dim, dim, |r, c| v[r] * v[c].conj())
        })
        .collect();

    // Outcome (j, i): register value j, eigenvector index i after B_j.
    // The POVM element folds the sampling probability and the Heisenberg
    // image of the projector into one operator on the noisy state.
    let mut elements = Vec::new();
    let mut values = Vec::new();
    for (j, &c) in decomp.coefficients.iter().enumerate() {
        if c.abs() < 1e-15 {
            continue;
        }
        let prob = c.abs() / decomp.gamma;
        for (i, proj) in projectors.iter().enumerate() {
            elements.push(decomp.basis()[j].adjoint_apply(proj).scale(prob));
            values.push(decomp.gamma * c.signum() * eigenvalues[i]);
        }
    }
    let povm = Povm::new(elements)?;
    let n_outcomes = povm.len();
    let estimator = EstimatorTable::new(vec![n_outcomes], values)?;
    let shape = ProtocolShape::uniform(1, 1, qubits, 0.0, ch.clone())?;
    MitigationProtocolSpec::new(
        "pec",
        shape,
        vec![povm],
        estimator,
        Some("unbiased given exact channel knowledge".to_string()),
    )
}
