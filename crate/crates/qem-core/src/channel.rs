//! CPTP channels in Kraus form, standard noise models, and layered noisy
//! circuits with their effective noise channels.

use crate::linalg::{
    cr, hermitian_eigen, identity, kron, kron_power, max_abs_entry, CMat, CVec,
};
use crate::pauli::PauliString;
use crate::random;
use crate::state::DensityMatrix;
use crate::{Error, Result, DENSE_DIM_CAP, TOL_PRUNE, TOL_STRUCTURAL};
use num_complex::Complex64;

/// A completely positive trace-preserving map, stored as Kraus operators.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMat>,
}

impl QuantumChannel {
    /// Validates `Σ K†K = I` within [`TOL_STRUCTURAL`].
    pub fn new(kraus: Vec<CMat>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidDimension { dim: 0 });
        }
        let dim_out = kraus[0].nrows();
        let dim_in = kraus[0].ncols();
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(Error::DimensionMismatch {
                    left: k.nrows(),
                    right: dim_out,
                });
            }
        }
        let mut closure = CMat::zeros(dim_in, dim_in);
        for k in &kraus {
            closure += k.adjoint() * k;
        }
        let deviation = max_abs_entry(&(closure - identity(dim_in)));
        if deviation > TOL_STRUCTURAL {
            return Err(Error::CrossCheckFailed {
                what: "CPTP closure",
                deviation,
            });
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn identity_channel(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![identity(dim)],
        }
    }

    pub fn from_unitary(u: &CMat) -> Result<Self> {
        let dim = u.nrows();
        let deviation = max_abs_entry(&(u.adjoint() * u - identity(dim)));
        if deviation > TOL_STRUCTURAL {
            return Err(Error::CrossCheckFailed {
                what: "unitarity",
                deviation,
            });
        }
        Ok(Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![u.clone()],
        })
    }

    /// Qubit dephasing `Z_eps(ρ) = (1-eps) ρ + eps Z ρ Z`.
    pub fn dephasing(eps: f64) -> Result<Self> {
        check_rate(eps)?;
        let z = PauliString::parse("Z").expect("Z parses").matrix();
        Self::new(vec![
            identity(2).scale((1.0 - eps).sqrt()),
            z.scale(eps.sqrt()),
        ])
    }

    /// Qubit depolarizing `D_eps(ρ) = (1-eps) ρ + eps I/2` in Pauli-Kraus form.
    pub fn depolarizing_qubit(eps: f64) -> Result<Self> {
        check_rate(eps)?;
        let p = eps / 4.0;
        let mut ops = vec![identity(2).scale((1.0 - 3.0 * p).sqrt())];
        for name in ["X", "Y", "Z"] {
            ops.push(PauliString::parse(name).unwrap().matrix().scale(p.sqrt()));
        }
        Self::new(ops)
    }

    /// d-dimensional depolarizing `(1-eps) ρ + eps I/d`.
    pub fn depolarizing(dim: usize, eps: f64) -> Result<Self> {
        check_rate(eps)?;
        if dim < 2 {
            return Err(Error::InvalidDimension { dim });
        }
        let mut ops = vec![identity(dim).scale((1.0 - eps).sqrt())];
        let w = (eps / dim as f64).sqrt();
        for i in 0..dim {
            for j in 0..dim {
                let mut e = CMat::zeros(dim, dim);
                e[(i, j)] = cr(w);
                ops.push(e);
            }
        }
        Self::new(ops)
    }

    /// Independent qubit depolarizing noise on each of `n` qubits: the n-fold
    /// tensor power of [`QuantumChannel::depolarizing_qubit`].
    pub fn local_depolarizing_layer(n: usize, eps: f64) -> Result<Self> {
        check_rate(eps)?;
        if n == 0 {
            return Err(Error::InvalidDimension { dim: 0 });
        }
        let single = Self::depolarizing_qubit(eps)?;
        let mut out = Self::identity_channel(1);
        for _ in 0..n {
            out = out.tensor(&single);
        }
        Ok(out)
    }

    /// Conjugation by a Pauli string.
    pub fn pauli_conjugation(p: &PauliString) -> Self {
        Self {
            dim_in: p.dim(),
            dim_out: p.dim(),
            kraus: vec![p.matrix()],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn apply_matrix(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dim_in != rho.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim_in,
                right: rho.dim(),
            });
        }
        DensityMatrix::new(self.apply_matrix(rho.matrix()))
    }

    /// Heisenberg-picture action `Σ K† M K` (maps POVM elements backwards
    /// through the channel).
    pub fn adjoint_apply(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * m * k;
        }
        out
    }

    /// `self ∘ inner`: apply `inner` first. Kraus sets are multiplied
    /// pairwise, near-zero products pruned, and the set compressed back to at
    /// most `dim_in * dim_out` operators via the Choi spectrum.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.dim_in != inner.dim_out {
            return Err(Error::DimensionMismatch {
                left: self.dim_in,
                right: inner.dim_out,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * inner.kraus.len());
        for a in &self.kraus {
            for b in &inner.kraus {
                let prod = a * b;
                if prod.norm() >= TOL_PRUNE {
                    kraus.push(prod);
                }
            }
        }
        let mut out = Self {
            dim_in: inner.dim_in,
            dim_out: self.dim_out,
            kraus,
        };
        if out.kraus.len() > out.dim_in * out.dim_out {
            out = out.compressed();
        }
        Ok(out)
    }

    /// Tensor product of two channels.
    pub fn tensor(&self, other: &Self) -> Self {
        let kraus: Vec<CMat> = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| kron(a, b)))
            .collect();
        let out = Self {
            dim_in: self.dim_in * other.dim_in,
            dim_out: self.dim_out * other.dim_out,
            kraus,
        };
        if out.kraus.len() > out.dim_in * out.dim_out {
            out.compressed()
        } else {
            out
        }
    }

    /// Minimal Kraus set recovered from the eigendecomposition of
    /// `Σ vec(K) vec(K)†`. Eigenvectors whose Kraus operator would have
    /// Frobenius norm below [`TOL_PRUNE`] are dropped.
    fn compressed(&self) -> Self {
        let d = self.dim_out * self.dim_in;
        let mut gram = CMat::zeros(d, d);
        for k in &self.kraus {
            let v = CVec::from_iterator(d, k.iter().copied());
            gram += &v * v.adjoint();
        }
        let (values, vectors) = hermitian_eigen(&gram);
        let mut kraus = Vec::new();
        for (idx, &value) in values.iter().enumerate() {
            if value > TOL_PRUNE * TOL_PRUNE {
                let col = vectors.column(idx).scale(value.sqrt());
                let data: Vec<Complex64> = col.iter().copied().collect();
                kraus.push(CMat::from_column_slice(self.dim_out, self.dim_in, &data));
            }
        }
        Self {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus,
        }
    }
}

fn check_rate(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidRate {
            rate: eps,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Named noise models for configuration surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Dephasing,
    DepolarizingQubit,
    DepolarizingD,
    LocalDepolarizingLayer,
}

/// Build a standard channel by name. `param` is the dimension `d` for
/// [`NoiseKind::DepolarizingD`] and the qubit count `n` for
/// [`NoiseKind::LocalDepolarizingLayer`]; other kinds ignore it.
pub fn standard_channel(kind: NoiseKind, eps: f64, param: Option<usize>) -> Result<QuantumChannel> {
    match kind {
        NoiseKind::Dephasing => QuantumChannel::dephasing(eps),
        NoiseKind::DepolarizingQubit => QuantumChannel::depolarizing_qubit(eps),
        NoiseKind::DepolarizingD => QuantumChannel::depolarizing(param.unwrap_or(2), eps),
        NoiseKind::LocalDepolarizingLayer => {
            QuantumChannel::local_depolarizing_layer(param.unwrap_or(1), eps)
        }
    }
}

/// Apply qubit depolarizing noise to one qubit of an n-qubit state matrix.
/// Qubit 0 is the most significant factor.
pub(crate) fn depolarize_qubit_in_place(m: &CMat, n: usize, qubit: usize, eps: f64) -> CMat {
    let left = 1usize << qubit;
    let right = 1usize << (n - qubit - 1);
    let single = QuantumChannel::depolarizing_qubit(eps).expect("valid rate");
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for k in single.kraus() {
        let lifted = kron(&kron(&identity(left), k), &identity(right));
        out += &lifted * m * lifted.adjoint();
    }
    out
}

/// An n-qubit circuit of `L` unitary layers, with per-experiment, per-layer
/// qubit depolarizing rates applied after each layer.
#[derive(Debug, Clone)]
pub struct LayeredCircuitConfig {
    qubits: usize,
    layers: Vec<CMat>,
    /// `noise_strengths[k][l]` is the rate after layer `l` in experiment `k`.
    noise_strengths: Vec<Vec<f64>>,
}

impl LayeredCircuitConfig {
    pub fn new(qubits: usize, layers: Vec<CMat>, noise_strengths: Vec<Vec<f64>>) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidDimension { dim: 0 });
        }
        let dim = 1usize << qubits;
        for u in &layers {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    left: u.nrows(),
                    right: dim,
                });
            }
            let deviation = max_abs_entry(&(u.adjoint() * u - identity(dim)));
            if deviation > TOL_STRUCTURAL {
                return Err(Error::CrossCheckFailed {
                    what: "unitarity",
                    deviation,
                });
            }
        }
        for row in &noise_strengths {
            if row.len() != layers.len() {
                return Err(Error::DimensionMismatch {
                    left: row.len(),
                    right: layers.len(),
                });
            }
            for &eps in row {
                check_rate(eps)?;
            }
        }
        Ok(Self {
            qubits,
            layers,
            noise_strengths,
        })
    }

    /// Uniform noise rate per experiment and Haar-random layers.
    pub fn random(qubits: usize, n_layers: usize, rates: &[f64], seed: u64) -> Result<Self> {
        let mut rng = random::substream(seed, 0);
        let layers = (0..n_layers)
            .map(|_| random::haar_unitary(1 << qubits, &mut rng))
            .collect();
        let noise = rates.iter().map(|&e| vec![e; n_layers]).collect();
        Self::new(qubits, layers, noise)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn experiments(&self) -> usize {
        self.noise_strengths.len()
    }

    pub fn layer(&self, l: usize) -> &CMat {
        &self.layers[l]
    }

    pub fn rates(&self, experiment: usize) -> &[f64] {
        &self.noise_strengths[experiment]
    }

    /// Ideal output `U_L … U_1 ψ U_1† … U_L†`.
    pub fn ideal_output(&self, input: &DensityMatrix) -> Result<DensityMatrix> {
        if input.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: input.dim(),
                right: self.dim(),
            });
        }
        let mut m = input.matrix().clone();
        for u in &self.layers {
            m = u * m * u.adjoint();
        }
        DensityMatrix::new(m)
    }

    /// Direct layer-by-layer noisy simulation for one experiment.
    pub fn simulate_noisy(&self, experiment: usize, input: &DensityMatrix) -> Result<DensityMatrix> {
        if input.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: input.dim(),
                right: self.dim(),
            });
        }
        let mut m = input.matrix().clone();
        for (l, u) in self.layers.iter().enumerate() {
            m = u * m * u.adjoint();
            let eps = self.noise_strengths[experiment][l];
            for q in 0..self.qubits {
                m = depolarize_qubit_in_place(&m, self.qubits, q, eps);
            }
        }
        DensityMatrix::new(m)
    }

    /// The map sending the ideal circuit output to the noisy one:
    /// `N_L ∘ U_L ∘ … ∘ N_1 ∘ U_1 ∘ U_1† ∘ … ∘ U_L†`.
    pub fn effective_noise_channel(&self, experiment: usize) -> Result<QuantumChannel> {
        let dim = self.dim();
        if dim > DENSE_DIM_CAP {
            return Err(Error::ProductTooLarge {
                dim,
                cap: DENSE_DIM_CAP,
            });
        }
        let mut ideal = identity(dim);
        for u in &self.layers {
            ideal = u * ideal;
        }
        let mut ch = QuantumChannel::from_unitary(&ideal.adjoint())?;
        for (l, u) in self.layers.iter().enumerate() {
            ch = QuantumChannel::from_unitary(u)?.compose(&ch)?;
            let eps = self.noise_strengths[experiment][l];
            let noise = QuantumChannel::local_depolarizing_layer(self.qubits, eps)?;
            ch = noise.compose(&ch)?;
        }
        Ok(ch)
    }
}

/// `Q`-fold tensor product of a state with itself, guarded by the dense cap.
pub fn tensor_power_state(rho: &DensityMatrix, count: usize) -> Result<DensityMatrix> {
    let dim = rho
        .dim()
        .checked_pow(count as u32)
        .ok_or(Error::ProductTooLarge {
            dim: usize::MAX,
            cap: DENSE_DIM_CAP,
        })?;
    if dim > DENSE_DIM_CAP {
        return Err(Error::ProductTooLarge {
            dim,
            cap: DENSE_DIM_CAP,
        });
    }
    DensityMatrix::new(kron_power(rho.matrix(), count))
}
