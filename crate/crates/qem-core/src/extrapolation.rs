//! Richardson noise extrapolation: run the circuit at boosted noise
//! strengths and combine the measured expectations with signed weights that
//! cancel the low-order noise dependence.

use crate::bounds::ProtocolShape;
use crate::channel::QuantumChannel;
use crate::linalg::CMat;
use crate::pauli::all_strings;
use crate::protocol::{EstimatorTable, MitigationProtocolSpec, Povm};
use crate::state::{expectation, DensityMatrix, Observable};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Solved extrapolation weights: `Σ γ_r = 1` and `Σ γ_r c_r^t = 0` for
/// `t = 1..R`, which cancels every noise power below `R + 1`.
#[derive(Debug, Clone)]
pub struct ExtrapolationConfig {
    pub boost_factors: Vec<f64>,
    pub weights: Vec<f64>,
    /// `Σ |γ_r|`: the exact estimator spread for ±1/2 observables.
    pub spread: f64,
}

impl ExtrapolationConfig {
    pub fn order(&self) -> usize {
        self.boost_factors.len() - 1
    }
}

/// Solve the Vandermonde system for the weights of the given boost factors.
/// Requires `c_0 = 1` and distinct factors `>= 1`.
pub fn richardson_coefficients(boost_factors: &[f64]) -> Result<ExtrapolationConfig> {
    let count = boost_factors.len();
    if count < 2 {
        return Err(Error::InvalidDimension { dim: count });
    }
    for (i, &a) in boost_factors.iter().enumerate() {
        for &b in &boost_factors[i + 1..] {
            if (a - b).abs() < 1e-12 {
                return Err(Error::DuplicateNodes { value: a });
            }
        }
    }
    if (boost_factors[0] - 1.0).abs() > 1e-12 {
        return Err(Error::BoostOutOfRange {
            boost: boost_factors[0],
            strength: boost_factors[0],
        });
    }
    for &c in boost_factors {
        if c < 1.0 - 1e-12 {
            return Err(Error::BoostOutOfRange {
                boost: c,
                strength: c,
            });
        }
    }
    let system = DMatrix::<f64>::from_fn(count, count, |t, r| boost_factors[r].powi(t as i32));
    let mut rhs = DVector::<f64>::zeros(count);
    rhs[0] = 1.0;
    let weights = system
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::DuplicateNodes {
            value: boost_factors[0],
        })?;
    let residual = (&system * &weights - &rhs).amax();
    debug_assert!(residual < 1e-10, "Vandermonde residual {residual}");
    let weights: Vec<f64> = weights.iter().copied().collect();
    let spread = weights.iter().map(|w| w.abs()).sum();
    Ok(ExtrapolationConfig {
        boost_factors: boost_factors.to_vec(),
        weights,
        spread,
    })
}

/// A one-parameter noise family `ξ -> channel`.
pub trait NoiseFamily {
    fn channel(&self, strength: f64) -> Result<QuantumChannel>;
}

impl<F> NoiseFamily for F
where
    F: Fn(f64) -> Result<QuantumChannel>,
{
    fn channel(&self, strength: f64) -> Result<QuantumChannel> {
        self(strength)
    }
}

/// `layers` consecutive applications of qubit dephasing at the same rate.
/// The expectation of any equatorial observable scales as `(1-2ξ)^layers`,
/// making the family a clean nonlinearity witness for extrapolation-order
/// tests.
pub struct DephasingPowerFamily {
    pub layers: usize,
}

impl NoiseFamily for DephasingPowerFamily {
    fn channel(&self, strength: f64) -> Result<QuantumChannel> {
        let single = QuantumChannel::dephasing(strength)?;
        let mut out = QuantumChannel::identity_channel(2);
        for _ in 0..self.layers {
            out = single.compose(&out)?;
        }
        Ok(out)
    }
}

/// Assemble the `(1, R+1)` extrapolation protocol: experiment `k` runs the
/// family at strength `c_{k-1} ξ̃` and measures `a` in its eigenbasis; the
/// estimator is the γ-weighted sum of the observed eigenvalues.
///
/// The declared maximum bias on the returned shape is measured over a grid
/// of Pauli-observable / eigenstate witnesses. For single-qubit families
/// whose transfer matrix is diagonal in the Pauli basis this grid contains
/// the extremal witness, so the declared value is the true maximum bias.
pub fn extrapolation_spec(
    family: &dyn NoiseFamily,
    base_strength: f64,
    cfg: &ExtrapolationConfig,
    a: &Observable,
) -> Result<MitigationProtocolSpec> {
    if !a.is_normalized() {
        let values = crate::linalg::eigenvalues_hermitian(a.matrix());
        return Err(Error::NotNormalized {
            min: values[0],
            max: values[values.len() - 1],
        });
    }
    let dim = a.dim();
    if !dim.is_power_of_two() {
        return Err(Error::DimensionNotPowerOfTwo { dim });
    }
    let qubits = dim.trailing_zeros() as usize;

    let channels: Vec<QuantumChannel> = cfg
        .boost_factors
        .iter()
        .map(|&c| {
            family
                .channel(c * base_strength)
                .map_err(|_| Error::BoostOutOfRange {
                    boost: c,
                    strength: c * base_strength,
                })
        })
        .collect::<Result<_>>()?;
    for ch in &channels {
        if ch.dim_in() != dim || ch.dim_out() != dim {
            return Err(Error::DimensionMismatch {
                left: ch.dim_in(),
                right: dim,
            });
        }
    }

    let (eigenvalues, eigenvectors) = a.eigen();
    let projectors: Vec<CMat> = (0..dim)
        .map(|i| {
            let v = eigenvectors.column(i);
            CMat::from_fn(dim, dim, |r, c| v[r] * v[c].conj())
        })
        .collect();
    let povm = Povm::new(projectors)?;
    let experiments = channels.len();

    // Estimator over eigenvector-index tuples: Σ_k γ_{k-1} a_{i_k}.
    let mut values = Vec::with_capacity(dim.pow(experiments as u32));
    let mut outcomes = vec![0usize; experiments];
    'table: loop {
        let value: f64 = outcomes
            .iter()
            .enumerate()
            .map(|(k, &i)| cfg.weights[k] * eigenvalues[i])
            .sum();
        values.push(value);
        let mut pos = experiments;
        loop {
            if pos == 0 {
                break 'table;
            }
            pos -= 1;
            outcomes[pos] += 1;
            if outcomes[pos] < dim {
                break;
            }
            outcomes[pos] = 0;
        }
    }

    let declared_bias = witness_bias_bound(&channels, &cfg.weights, qubits)?;
    let grid = channels.iter().map(|ch| vec![ch.clone()]).collect();
    let shape = ProtocolShape::new(1, experiments, qubits, declared_bias.min(0.5), grid)?;
    let estimator = EstimatorTable::new(vec![dim; experiments], values)?;
    MitigationProtocolSpec::new(
        "extrapolation",
        shape,
        vec![povm; experiments],
        estimator,
        Some(format!(
            "residual bias of order base_strength^{}",
            experiments
        )),
    )
}

/// Exact estimator bias for a specific observable and state: the γ-weighted
/// noisy expectations minus the ideal one. Cheap because the outcome
/// distribution never needs to be built.
pub fn exact_bias(
    family: &dyn NoiseFamily,
    base_strength: f64,
    cfg: &ExtrapolationConfig,
    a: &Observable,
    psi: &DensityMatrix,
) -> Result<f64> {
    let mut combined = 0.0;
    for (&c, &w) in cfg.boost_factors.iter().zip(&cfg.weights) {
        let noisy = family.channel(c * base_strength)?.apply(psi)?;
        combined += w * expectation(a, &noisy)?;
    }
    Ok(combined - expectation(a, psi)?)
}

/// Max |bias| over Pauli observables `P/2` paired with eigenstates of `P`,
/// plus the computational witnesses.
fn witness_bias_bound(
    channels: &[QuantumChannel],
    weights: &[f64],
    qubits: usize,
) -> Result<f64> {
    let dim = 1usize << qubits;
    let mut worst: f64 = 0.0;
    let mut consider = |a: &Observable, psi: &DensityMatrix| -> Result<()> {
        let mut combined = 0.0;
        for (ch, &w) in channels.iter().zip(weights) {
            combined += w * expectation(a, &ch.apply(psi)?)?;
        }
        let bias = (combined - expectation(a, psi)?).abs();
        if bias > worst {
            worst = bias;
        }
        Ok(())
    };
    for ps in all_strings(qubits) {
        if ps.is_identity() {
            continue;
        }
        let a = ps.normalized_observable();
        let (_, vectors) = a.eigen();
        // Extremal eigenvectors on both ends of the spectrum.
        for col in [0, dim - 1] {
            let v = vectors.column(col).into_owned();
            consider(&a, &DensityMatrix::from_pure(&v)?)?;
        }
    }
    Ok(worst)
}
