//! Virtual distillation: suppress noise bias by measuring functionals of
//! the `Q`-th power of the noisy state with controlled cyclic-permutation
//! circuits, assuming the dominant eigenvalue of the noisy state is known.

use crate::bounds::ProtocolShape;
use crate::channel::QuantumChannel;
use crate::linalg::{cr, eigenvalues_hermitian, hermitize, identity, kron, kron_power, max_abs_entry, CMat};
use crate::pauli::pauli_decompose;
use crate::protocol::{EstimatorTable, MitigationProtocolSpec, Povm};
use crate::random;
use crate::state::{DensityMatrix, Observable};
use crate::{Error, Result, DENSE_DIM_CAP, TOL_STRUCTURAL};

/// Spectral description of a noisy state: dominant weight `lambda` on the
/// ideal output plus known weights on the remaining orthonormal basis.
/// `lambda` itself is assumed known ahead of time (pre-knowledge); columns
/// of `basis` are the eigenstates, column 0 the ideal output.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    lambda: f64,
    lambda_rest: Vec<f64>,
    basis: CMat,
}

impl SpectralModel {
    pub fn new(lambda: f64, lambda_rest: Vec<f64>, basis: CMat) -> Result<Self> {
        if lambda <= 0.5 {
            return Err(Error::DominantEigenvalueTooSmall { lambda });
        }
        let total: f64 = lambda + lambda_rest.iter().sum::<f64>();
        if (total - 1.0).abs() > TOL_STRUCTURAL {
            return Err(Error::NotUnitTrace { trace: total });
        }
        if lambda_rest.iter().any(|&v| v < -TOL_STRUCTURAL) {
            return Err(Error::NotPositive {
                eigenvalue: lambda_rest.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        let dim = basis.nrows();
        if basis.ncols() != dim || dim != lambda_rest.len() + 1 {
            return Err(Error::DimensionMismatch {
                left: basis.ncols(),
                right: lambda_rest.len() + 1,
            });
        }
        let deviation = max_abs_entry(&(basis.adjoint() * &basis - identity(dim)));
        if deviation > TOL_STRUCTURAL {
            return Err(Error::CrossCheckFailed {
                what: "eigenbasis orthonormality",
                deviation,
            });
        }
        Ok(Self {
            lambda,
            lambda_rest,
            basis,
        })
    }

    /// Computational-basis model on a single qubit.
    pub fn qubit(lambda: f64) -> Result<Self> {
        Self::new(lambda, vec![1.0 - lambda], identity(2))
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dominant(&self) -> f64 {
        self.lambda
    }

    pub fn rest(&self) -> &[f64] {
        &self.lambda_rest
    }

    pub fn eigenstate(&self, k: usize) -> DensityMatrix {
        let v = self.basis.column(k).into_owned();
        DensityMatrix::from_pure(&v).expect("basis column is a unit vector")
    }

    pub fn ideal_state(&self) -> DensityMatrix {
        self.eigenstate(0)
    }

    pub fn noisy_state(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut m = self.ideal_state().matrix().scale(self.lambda);
        for (k, &w) in self.lambda_rest.iter().enumerate() {
            m += self.eigenstate(k + 1).matrix().scale(w);
        }
        DensityMatrix::new(CMat::from_fn(dim, dim, |i, j| m[(i, j)]))
            .expect("spectral mixture is a state")
    }

    /// A concrete noise channel consistent with the spectral picture: keep
    /// the input with probability `lambda`, otherwise replace it by the
    /// appropriate residual eigenstate. Its action on the ideal output is
    /// exactly the modelled noisy state, which is all the bounds consume.
    pub fn channel(&self) -> QuantumChannel {
        let dim = self.dim();
        let mut kraus = vec![identity(dim).scale(self.lambda.sqrt())];
        for (k, &w) in self.lambda_rest.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let target = self.basis.column(k + 1);
            for m in 0..dim {
                let mut op = CMat::zeros(dim, dim);
                for r in 0..dim {
                    op[(r, m)] = target[r] * cr(w.sqrt());
                }
                kraus.push(op);
            }
        }
        QuantumChannel::new(kraus).expect("replacement channel is CPTP")
    }

    /// Worst-case estimator bias of `Q`-copy distillation:
    /// `Σ_{k>=2} (λ_k / λ)^Q / 2`.
    pub fn bias_bound(&self, copies: usize) -> f64 {
        self.lambda_rest
            .iter()
            .map(|&w| (w / self.lambda).powi(copies as i32))
            .sum::<f64>()
            / 2.0
    }
}

/// Cyclic left shift of `registers` registers of dimension `dim` each:
/// output slot `j` receives input slot `j + 1` (wrapping).
pub(crate) fn cyclic_shift(dim: usize, registers: usize) -> CMat {
    let total = dim.pow(registers as u32);
    let mut out = CMat::zeros(total, total);
    for x in 0..total {
        // Digits of x, most significant first.
        let mut digits = vec![0usize; registers];
        let mut rem = x;
        for slot in (0..registers).rev() {
            digits[slot] = rem % dim;
            rem /= dim;
        }
        digits.rotate_left(1);
        let mut y = 0usize;
        for &d in &digits {
            y = y * dim + d;
        }
        out[(y, x)] = cr(1.0);
    }
    out
}

fn involution_check(w: &CMat) -> Result<()> {
    let dim = w.nrows();
    let dev_h = crate::linalg::hermiticity_deviation(w);
    if dev_h > TOL_STRUCTURAL {
        return Err(Error::NotHermitian { deviation: dev_h });
    }
    let deviation = max_abs_entry(&(w * w - identity(dim)));
    if deviation > TOL_STRUCTURAL {
        return Err(Error::NotInvolution { deviation });
    }
    Ok(())
}

/// Probability of ancilla outcome 0 in the `Q`-copy distillation circuit
/// for a Hermitian involution `w`: `p0 = (1 + Tr[w ρ^Q]) / 2`.
///
/// Computed from the closed form and cross-checked against a simulation of
/// the full controlled-permutation circuit on `1 + Q` registers; the two
/// must agree to 1e-9.
pub fn vd_outcome_probability(rho_noisy: &DensityMatrix, w: &CMat, copies: usize) -> Result<f64> {
    if copies < 2 {
        return Err(Error::InvalidDimension { dim: copies });
    }
    let dim = rho_noisy.dim();
    if w.nrows() != dim || w.ncols() != dim {
        return Err(Error::DimensionMismatch {
            left: w.nrows(),
            right: dim,
        });
    }
    involution_check(w)?;

    // Closed form.
    let mut power = rho_noisy.matrix().clone();
    for _ in 1..copies {
        power = &power * rho_noisy.matrix();
    }
    let trace = (w * &power).trace();
    debug_assert!(trace.im.abs() < 1e-10);
    let closed = 0.5 * (1.0 + trace.re);

    // Full circuit: |+> ancilla controls (cycle ∘ w-on-register-1), then a
    // Hadamard and a computational-basis ancilla measurement.
    let joint = dim
        .checked_pow(copies as u32)
        .filter(|&d| 2 * d <= DENSE_DIM_CAP)
        .ok_or(Error::ProductTooLarge {
            dim: usize::MAX,
            cap: DENSE_DIM_CAP,
        })?;
    let v = cyclic_shift(dim, copies) * kron(w, &identity(joint / dim));
    let mut cu = CMat::zeros(2 * joint, 2 * joint);
    for i in 0..joint {
        cu[(i, i)] = cr(1.0);
        for j in 0..joint {
            cu[(joint + i, joint + j)] = v[(i, j)];
        }
    }
    let plus = crate::state::plus_state(1);
    let init = kron(plus.matrix(), &kron_power(rho_noisy.matrix(), copies));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = crate::linalg::from_rows(&[vec![cr(s), cr(s)], vec![cr(s), cr(-s)]]);
    let h_full = kron(&h, &identity(joint));
    let final_state = &h_full * (&cu * init * cu.adjoint()) * h_full.adjoint();
    let mut simulated = 0.0;
    for i in 0..joint {
        simulated += final_state[(i, i)].re;
    }

    let deviation = (closed - simulated).abs();
    if deviation > 1e-9 {
        return Err(Error::CrossCheckFailed {
            what: "distillation outcome probability",
            deviation,
        });
    }
    Ok(closed)
}

/// A virtual-distillation protocol plus its reported performance numbers.
#[derive(Debug, Clone)]
pub struct VdProtocol {
    pub spec: MitigationProtocolSpec,
    /// Worst-case bias `Σ_{k>=2} (λ_k/λ)^Q / 2`.
    pub bias_bound: f64,
    /// Spread of the estimator for the given observable: `2 λ^{-Q} Σ|c_i|`.
    pub spread_for_observable: f64,
    /// Best value of `2 λ^{-Q} Σ|c_i|` found by random search over
    /// normalized observables (plus the single-Pauli witness). A lower
    /// estimate of the protocol's worst-case spread, not a claimed maximum.
    pub best_found_spread: f64,
}

/// Build the `(Q, 1)` distillation protocol for observable `a` under the
/// given spectral model.
///
/// A Pauli term `P_i` of `a` is selected with probability `|c_i| / Σ|c_j|`,
/// the controlled-cycle circuit is run for `P_i`, and the ancilla bit `b`
/// maps to the estimator value `± γ sgn(c_i) λ^{-Q}`.
pub fn vd_spec(
    model: &SpectralModel,
    copies: usize,
    a: &Observable,
    search_samples: usize,
    seed: u64,
) -> Result<VdProtocol> {
    if copies < 2 {
        return Err(Error::InvalidDimension { dim: copies });
    }
    if !a.is_normalized() {
        let values = eigenvalues_hermitian(a.matrix());
        return Err(Error::NotNormalized {
            min: values[0],
            max: values[values.len() - 1],
        });
    }
    let dim = model.dim();
    if a.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: dim,
        });
    }
    if !dim.is_power_of_two() {
        return Err(Error::DimensionNotPowerOfTwo { dim });
    }
    let qubits = dim.trailing_zeros() as usize;
    let joint = dim
        .checked_pow(copies as u32)
        .filter(|&d| d <= DENSE_DIM_CAP)
        .ok_or(Error::ProductTooLarge {
            dim: usize::MAX,
            cap: DENSE_DIM_CAP,
        })?;

    let coeffs = pauli_decompose(a)?;
    let gamma: f64 = coeffs.values().map(|c| c.abs()).sum();
    let scale = model.dominant().powi(-(copies as i32));
    let shift = cyclic_shift(dim, copies);
    let pad = identity(joint / dim);

    let mut elements = Vec::with_capacity(2 * coeffs.len());
    let mut values = Vec::with_capacity(2 * coeffs.len());
    for (ps, &c) in &coeffs {
        let prob = c.abs() / gamma;
        let v = &shift * kron(&ps.matrix(), &pad);
        let sym = hermitize(&v);
        for sign in [1.0, -1.0] {
            elements.push((identity(joint) + sym.scale(sign)).scale(0.5 * prob));
            values.push(sign * gamma * c.signum() * scale);
        }
    }
    let povm = Povm::new(elements)?;
    let estimator = EstimatorTable::new(vec![povm.len()], values)?;
    let bias_bound = model.bias_bound(copies);
    let shape = ProtocolShape::uniform(copies, 1, qubits, bias_bound.min(0.5), model.channel())?;
    let spec = MitigationProtocolSpec::new(
        "vd",
        shape,
        vec![povm],
        estimator,
        Some("bias decays geometrically in the copy count".to_string()),
    )?;

    // Search for observables with larger sampling overhead; the analytic
    // single-Pauli witness gives gamma = 1/2, i.e. spread λ^{-Q}.
    let mut best = scale;
    for t in 0..search_samples {
        let mut rng = random::substream(seed, t as u64);
        let h = random::random_hermitian(dim, &mut rng);
        let eig = eigenvalues_hermitian(&h);
        let (lo, hi) = (eig[0], eig[dim - 1]);
        if hi - lo < 1e-9 {
            continue;
        }
        // Rescale the spectrum to exactly [-1/2, 1/2].
        let centered = (h - identity(dim).scale((hi + lo) / 2.0)).scale(1.0 / (hi - lo));
        let candidate = Observable::normalized(centered)?;
        let g: f64 = pauli_decompose(&candidate)?.values().map(|c| c.abs()).sum();
        best = best.max(2.0 * scale * g);
    }
    let spread_for_observable = 2.0 * scale * gamma;
    Ok(VdProtocol {
        spec,
        bias_bound,
        spread_for_observable,
        best_found_spread: best.max(spread_for_observable),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use crate::state::expectation;

    #[test]
    fn cyclic_shift_traces_products() {
        // Tr[C (A ⊗ B)] = Tr[A B] for two registers.
        let mut rng = random::substream(8, 0);
        let a = random::random_hermitian(2, &mut rng);
        let b = random::random_hermitian(2, &mut rng);
        let c2 = cyclic_shift(2, 2);
        let lhs = (c2 * kron(&a, &b)).trace();
        let rhs = (&a * &b).trace();
        assert!((lhs - rhs).norm() < 1e-10);

        // Four registers give Tr[ABAB].
        let c4 = cyclic_shift(2, 4);
        let lhs = (c4 * kron(&kron(&a, &b), &kron(&a, &b))).trace();
        let rhs = (&a * &b * &a * &b).trace();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn outcome_probability_examples() {
        // ρ = 0.8|0><0| + 0.2|1><1|, W = Z, Q = 2: Tr(Z ρ^2) = 0.6.
        let model = SpectralModel::qubit(0.8).unwrap();
        let rho = model.noisy_state();
        let z = PauliString::parse("Z").unwrap().matrix();
        let p0 = vd_outcome_probability(&rho, &z, 2).unwrap();
        assert!((p0 - 0.8).abs() < 1e-12);

        // Pure states are fixed points of powering.
        let psi = random::haar_random_state(2, 3);
        let x = PauliString::parse("X").unwrap().matrix();
        let p0 = vd_outcome_probability(&psi, &x, 3).unwrap();
        let direct = 0.5 * (1.0 + (x * psi.matrix()).trace().re);
        assert!((p0 - direct).abs() < 1e-9);

        // Maximally mixed state with traceless W: p0 = 1/2.
        let mixed = DensityMatrix::maximally_mixed(2);
        let z = PauliString::parse("Z").unwrap().matrix();
        for copies in [2, 3, 4] {
            let p0 = vd_outcome_probability(&mixed, &z, copies).unwrap();
            assert!((p0 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn non_involution_rejected() {
        let model = SpectralModel::qubit(0.8).unwrap();
        let w = identity(2).scale(0.5);
        assert!(matches!(
            vd_outcome_probability(&model.noisy_state(), &w, 2),
            Err(Error::NotInvolution { .. })
        ));
    }

    #[test]
    fn small_dominant_eigenvalue_rejected() {
        assert!(matches!(
            SpectralModel::qubit(0.5),
            Err(Error::DominantEigenvalueTooSmall { .. })
        ));
    }

    #[test]
    fn bias_bound_matches_formula_and_decays_geometrically() {
        let model = SpectralModel::qubit(0.8).unwrap();
        assert!((model.bias_bound(2) - 0.03125).abs() < 1e-12);
        for copies in 2..7 {
            let ratio = model.bias_bound(copies + 1) / model.bias_bound(copies);
            assert!((ratio - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn estimator_bias_stays_inside_envelope() {
        let model = SpectralModel::qubit(0.8).unwrap();
        let a = PauliString::parse("Z").unwrap().normalized_observable();
        for copies in [2usize, 3] {
            let vd = vd_spec(&model, copies, &a, 0, 0).unwrap();
            let mean = vd.spec.exact_estimator_mean(&model.ideal_state()).unwrap();
            let truth = expectation(&a, &model.ideal_state()).unwrap();
            // Exact bias for this model: (λ2/λ)^Q Tr(A |1><1|) = -(1/4)^Q/2.
            let predicted = -(0.25f64).powi(copies as i32) / 2.0;
            assert!((mean - truth - predicted).abs() < 1e-9);
            assert!((mean - truth).abs() <= vd.bias_bound + 1e-9);
        }
    }

    #[test]
    fn spread_formula_for_single_pauli() {
        let model = SpectralModel::qubit(0.8).unwrap();
        let a = PauliString::parse("Z").unwrap().normalized_observable();
        let vd = vd_spec(&model, 2, &a, 0, 0).unwrap();
        // 2 λ^{-2} Σ|c| with Σ|c| = 1/2.
        assert!((vd.spread_for_observable - 1.5625).abs() < 1e-9);
        assert!((vd.spec.declared_spread() - 1.5625).abs() < 1e-9);
        assert!(vd.best_found_spread >= vd.spread_for_observable - 1e-12);
    }

    #[test]
    fn channel_reproduces_noisy_state_on_ideal_input() {
        let model = SpectralModel::qubit(0.75).unwrap();
        let out = model.channel().apply(&model.ideal_state()).unwrap();
        assert!(max_abs_entry(&(out.matrix() - model.noisy_state().matrix())) < 1e-12);
    }
}
