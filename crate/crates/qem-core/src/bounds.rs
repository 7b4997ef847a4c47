//! Lower bounds on the maximum estimator spread of mitigation protocols.
//!
//! The central quantity is the ratio
//!
//! ```text
//!   ( D_tr(ψ, φ) - 2 b_max ) / D( noisy products of ψ , noisy products of φ )
//! ```
//!
//! evaluated for a witness pair of ideal outputs `(ψ, φ)`. Any witness pair
//! yields a valid lower bound on the spread of every protocol with the given
//! shape, because the protocol's measurement channel cannot increase the
//! distinguishability of the noisy product states while its estimator must
//! still separate `Tr(Aψ)` from `Tr(Aφ)`. The denominator can be the exact
//! trace distance of the joint products or one of the fidelity /
//! sub-fidelity relaxations, which only weaken (never invalidate) the bound.

use crate::channel::{depolarize_qubit_in_place, LayeredCircuitConfig, QuantumChannel};
use crate::distance::{fidelity, relative_entropy_to_mixed, sub_fidelity, trace_distance};
use crate::linalg::{kron_power, CMat};
use crate::random;
use crate::state::{minus_state, one_state, plus_state, zero_state, DensityMatrix};
use crate::{Error, Result, DENSE_DIM_CAP, TOL_STRUCTURAL};
use serde::{Deserialize, Serialize};

/// The shape of a mitigation protocol: `K` experiments per round, each
/// jointly measuring `Q` noisy copies, with the effective noise channel for
/// copy `q` of experiment `k` stored in `channel_grid[k][q]`.
#[derive(Debug, Clone)]
pub struct ProtocolShape {
    inputs_per_experiment: usize,
    experiments: usize,
    qubits: usize,
    max_bias: f64,
    channel_grid: Vec<Vec<QuantumChannel>>,
}

impl ProtocolShape {
    pub fn new(
        inputs_per_experiment: usize,
        experiments: usize,
        qubits: usize,
        max_bias: f64,
        channel_grid: Vec<Vec<QuantumChannel>>,
    ) -> Result<Self> {
        if inputs_per_experiment == 0 || experiments == 0 || qubits == 0 {
            return Err(Error::InvalidDimension { dim: 0 });
        }
        // A bias of 1/2 is achievable by always outputting 0; larger values
        // make every bound vacuous and are rejected.
        if !(0.0..=0.5 + TOL_STRUCTURAL).contains(&max_bias) {
            return Err(Error::InvalidRate {
                rate: max_bias,
                range: "[0, 1/2]",
            });
        }
        let dim = 1usize << qubits;
        if channel_grid.len() != experiments {
            return Err(Error::DimensionMismatch {
                left: channel_grid.len(),
                right: experiments,
            });
        }
        for row in &channel_grid {
            if row.len() != inputs_per_experiment {
                return Err(Error::DimensionMismatch {
                    left: row.len(),
                    right: inputs_per_experiment,
                });
            }
            for ch in row {
                if ch.dim_in() != dim || ch.dim_out() != dim {
                    return Err(Error::DimensionMismatch {
                        left: ch.dim_in(),
                        right: dim,
                    });
                }
            }
        }
        Ok(Self {
            inputs_per_experiment,
            experiments,
            qubits,
            max_bias,
            channel_grid,
        })
    }

    /// Shape with the same channel for every copy and experiment.
    pub fn uniform(
        inputs_per_experiment: usize,
        experiments: usize,
        qubits: usize,
        max_bias: f64,
        channel: QuantumChannel,
    ) -> Result<Self> {
        let grid = vec![vec![channel; inputs_per_experiment]; experiments];
        Self::new(inputs_per_experiment, experiments, qubits, max_bias, grid)
    }

    pub fn inputs_per_experiment(&self) -> usize {
        self.inputs_per_experiment
    }

    pub fn experiments(&self) -> usize {
        self.experiments
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn max_bias(&self) -> f64 {
        self.max_bias
    }

    pub fn set_max_bias(&mut self, max_bias: f64) -> Result<()> {
        if !(0.0..=0.5 + TOL_STRUCTURAL).contains(&max_bias) {
            return Err(Error::InvalidRate {
                rate: max_bias,
                range: "[0, 1/2]",
            });
        }
        self.max_bias = max_bias;
        Ok(())
    }

    pub fn channel(&self, experiment: usize, input: usize) -> &QuantumChannel {
        &self.channel_grid[experiment][input]
    }

    pub fn single_copy_dim(&self) -> usize {
        1 << self.qubits
    }

    /// Joint dimension of all `Q K` noisy copies, or an error when the dense
    /// cap would be exceeded.
    pub fn joint_dim(&self) -> Result<usize> {
        let per_copy = self.single_copy_dim();
        let copies = self.inputs_per_experiment * self.experiments;
        let mut dim = 1usize;
        for _ in 0..copies {
            dim = dim.checked_mul(per_copy).ok_or(Error::ProductTooLarge {
                dim: usize::MAX,
                cap: DENSE_DIM_CAP,
            })?;
            if dim > DENSE_DIM_CAP {
                return Err(Error::ProductTooLarge {
                    dim,
                    cap: DENSE_DIM_CAP,
                });
            }
        }
        Ok(dim)
    }

    /// `⊗_q E_q^{(k)}(ρ)` for one experiment.
    pub fn experiment_product(&self, experiment: usize, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let mut out: Option<DensityMatrix> = None;
        for ch in &self.channel_grid[experiment] {
            let noisy = ch.apply(rho)?;
            out = Some(match out {
                None => noisy,
                Some(acc) => acc.tensor(&noisy),
            });
        }
        Ok(out.expect("at least one input per experiment"))
    }

    /// `⊗_k ⊗_q E_q^{(k)}(ρ)` over all experiments.
    pub fn full_product(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.joint_dim()?;
        let mut out: Option<DensityMatrix> = None;
        for k in 0..self.experiments {
            let part = self.experiment_product(k, rho)?;
            out = Some(match out {
                None => part,
                Some(acc) => acc.tensor(&part),
            });
        }
        Ok(out.expect("at least one experiment"))
    }
}

/// Which denominator produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relaxation {
    /// Exact evaluation, valid only for single-experiment protocols where
    /// joint measurements make the restricted distinguishability equal the
    /// trace distance.
    #[serde(rename = "exact_K1")]
    ExactSingleExperiment,
    /// Trace distance of the full tensor products; an upper bound on the
    /// measurement-restricted distinguishability for any `K`.
    #[serde(rename = "trace_product")]
    TraceProduct,
    /// `sqrt(1 - Π F)` over single-copy fidelities; never forms the product.
    #[serde(rename = "fidelity")]
    Fidelity,
    /// `sqrt(1 - Π E)` over single-copy sub-fidelities; measurable without
    /// channel tomography.
    #[serde(rename = "sub_fidelity")]
    SubFidelity,
    /// Closed form for layered circuits under local depolarizing noise.
    #[serde(rename = "theorem2_analytic")]
    LayeredAnalytic,
}

impl Relaxation {
    pub fn name(&self) -> &'static str {
        match self {
            Relaxation::ExactSingleExperiment => "exact_K1",
            Relaxation::TraceProduct => "trace_product",
            Relaxation::Fidelity => "fidelity",
            Relaxation::SubFidelity => "sub_fidelity",
            Relaxation::LayeredAnalytic => "theorem2_analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    Finite,
    /// Denominator vanished while the numerator stayed positive.
    Infinite,
    /// Numerator non-positive: the declared bias already explains the
    /// distinguishability gap and the bound carries no information.
    Vacuous,
}

/// Summary of the shape a bound was computed for (serialization surface).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShapeSummary {
    #[serde(rename = "Q")]
    pub inputs_per_experiment: usize,
    #[serde(rename = "K")]
    pub experiments: usize,
    pub n: usize,
    pub b_max: f64,
}

/// An evaluated spread lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub numerator: f64,
    pub denominator: f64,
    pub relaxation: Relaxation,
    pub flag: BoundFlag,
    /// `numerator / denominator` when finite; 0 when vacuous. Serializes as
    /// `null` when flagged infinite.
    pub bound_value: f64,
    pub pair_description: String,
    pub shape: ShapeSummary,
}

impl BoundReport {
    fn evaluate(
        numerator: f64,
        denominator: f64,
        relaxation: Relaxation,
        pair_description: String,
        shape: ShapeSummary,
    ) -> Self {
        let (flag, bound_value) = if numerator <= 0.0 {
            (BoundFlag::Vacuous, 0.0)
        } else if denominator <= 1e-15 {
            (BoundFlag::Infinite, f64::INFINITY)
        } else {
            (BoundFlag::Finite, numerator / denominator)
        };
        Self {
            numerator,
            denominator,
            relaxation,
            flag,
            bound_value,
            pair_description,
            shape,
        }
    }

    /// The bound as a plain float: 0 when vacuous, infinity when infinite.
    pub fn value(&self) -> f64 {
        self.bound_value
    }
}

fn summary_of(shape: &ProtocolShape) -> ShapeSummary {
    ShapeSummary {
        inputs_per_experiment: shape.inputs_per_experiment,
        experiments: shape.experiments,
        n: shape.qubits,
        b_max: shape.max_bias,
    }
}

/// Spread lower bound from one witness pair of ideal outputs.
pub fn spread_bound_from_pair(
    shape: &ProtocolShape,
    psi: &DensityMatrix,
    phi: &DensityMatrix,
    relaxation: Relaxation,
) -> Result<BoundReport> {
    let dim = shape.single_copy_dim();
    if psi.dim() != dim || phi.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: dim,
        });
    }
    let numerator = trace_distance(psi, phi)? - 2.0 * shape.max_bias;
    let denominator = match relaxation {
        Relaxation::ExactSingleExperiment | Relaxation::TraceProduct => {
            if relaxation == Relaxation::ExactSingleExperiment && shape.experiments != 1 {
                return Err(Error::ExactRequiresSingleExperiment {
                    experiments: shape.experiments,
                });
            }
            let noisy_psi = shape.full_product(psi)?;
            let noisy_phi = shape.full_product(phi)?;
            trace_distance(&noisy_psi, &noisy_phi)?
        }
        Relaxation::Fidelity | Relaxation::SubFidelity => {
            let mut product = 1.0;
            for k in 0..shape.experiments {
                for q in 0..shape.inputs_per_experiment {
                    let ch = shape.channel(k, q);
                    let a = ch.apply(psi)?;
                    let b = ch.apply(phi)?;
                    product *= match relaxation {
                        Relaxation::Fidelity => fidelity(&a, &b)?,
                        _ => sub_fidelity(&a, &b)?,
                    };
                }
            }
            (1.0 - product).max(0.0).sqrt()
        }
        Relaxation::LayeredAnalytic => {
            return Err(Error::UnsupportedRelaxation {
                name: "theorem2_analytic",
            })
        }
    };
    Ok(BoundReport::evaluate(
        numerator,
        denominator,
        relaxation,
        "custom".to_string(),
        summary_of(shape),
    ))
}

/// Accuracy target for sample planning: additive error `delta` with failure
/// probability `fail_prob`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AccuracySpec {
    pub delta: f64,
    pub fail_prob: f64,
}

impl AccuracySpec {
    pub fn new(delta: f64, fail_prob: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::InvalidRate {
                rate: delta,
                range: "(0, inf)",
            });
        }
        if !(0.0..1.0).contains(&fail_prob) || fail_prob == 0.0 {
            return Err(Error::InvalidRate {
                rate: fail_prob,
                range: "(0, 1)",
            });
        }
        Ok(Self { delta, fail_prob })
    }

    /// Hoeffding round count for a given estimator spread:
    /// `ceil( 2 spread^2 ln(2/fail) / delta^2 )`.
    pub fn rounds_for_spread(&self, spread: f64) -> u64 {
        (2.0 * spread * spread * (2.0 / self.fail_prob).ln() / (self.delta * self.delta)).ceil()
            as u64
    }
}

/// Minimum round count implied by a spread bound: any protocol of this shape
/// needs at least this many rounds for the stated accuracy.
pub fn sample_count_bound(report: &BoundReport, acc: &AccuracySpec) -> Result<u64> {
    match report.flag {
        BoundFlag::Vacuous => Err(Error::VacuousBound {
            numerator: report.numerator,
        }),
        BoundFlag::Infinite => Err(Error::NonFiniteBound),
        BoundFlag::Finite => Ok(acc.rounds_for_spread(report.bound_value)),
    }
}

/// Closed-form spread bound for n-qubit, L-layer circuits under local
/// depolarizing noise with per-experiment rates `eps`:
///
/// ```text
///   (1 - 2 b_max) / ( sqrt(2 ln 2) sqrt(n Q) K ) * (1 / (1 - eps_min))^{L/2}
/// ```
pub fn layered_bound(
    qubits: usize,
    inputs_per_experiment: usize,
    experiments: usize,
    max_bias: f64,
    eps: &[f64],
    layers: usize,
) -> Result<f64> {
    Ok(layered_bound_report(
        qubits,
        inputs_per_experiment,
        experiments,
        max_bias,
        eps,
        layers,
    )?
    .bound_value)
}

/// Same as [`layered_bound`] but returning the full report.
pub fn layered_bound_report(
    qubits: usize,
    inputs_per_experiment: usize,
    experiments: usize,
    max_bias: f64,
    eps: &[f64],
    layers: usize,
) -> Result<BoundReport> {
    if qubits == 0 || inputs_per_experiment == 0 || experiments == 0 {
        return Err(Error::InvalidDimension { dim: 0 });
    }
    if eps.len() != experiments {
        return Err(Error::DimensionMismatch {
            left: eps.len(),
            right: experiments,
        });
    }
    for &e in eps {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidRate {
                rate: e,
                range: "(0, 1)",
            });
        }
    }
    if !(0.0..=0.5 + TOL_STRUCTURAL).contains(&max_bias) {
        return Err(Error::InvalidRate {
            rate: max_bias,
            range: "[0, 1/2]",
        });
    }
    let eps_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let numerator = 1.0 - 2.0 * max_bias;
    let nq = (qubits * inputs_per_experiment) as f64;
    let denominator = (2.0 * std::f64::consts::LN_2).sqrt()
        * nq.sqrt()
        * experiments as f64
        * (1.0 - eps_min).powf(layers as f64 / 2.0);
    Ok(BoundReport::evaluate(
        numerator,
        denominator,
        Relaxation::LayeredAnalytic,
        "analytic".to_string(),
        ShapeSummary {
            inputs_per_experiment,
            experiments,
            n: qubits,
            b_max: max_bias,
        },
    ))
}

/// How witness pairs are chosen by [`optimize_bound_over_pairs`].
#[derive(Debug, Clone, Copy)]
pub enum PairSearch {
    /// Fixed analytic pairs: computational and Hadamard tensor-power pairs,
    /// plus all basis pairs while the dimension stays small.
    Presets,
    /// Haar-random pure pairs from deterministic per-candidate substreams.
    Random { samples: usize, seed: u64 },
}

/// Named preset witness pairs on `n` qubits.
pub fn preset_pairs(qubits: usize) -> Vec<(DensityMatrix, DensityMatrix, String)> {
    let dim = 1usize << qubits;
    let mut out = vec![
        (
            plus_state(qubits),
            minus_state(qubits),
            "plus/minus".to_string(),
        ),
        (zero_state(qubits), one_state(qubits), "zero/one".to_string()),
    ];
    if dim <= 8 {
        for i in 0..dim {
            for j in (i + 1)..dim {
                out.push((
                    DensityMatrix::basis_state(dim, i),
                    DensityMatrix::basis_state(dim, j),
                    format!("basis {i}/{j}"),
                ));
            }
        }
        let h1 = {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            crate::linalg::from_rows(&[
                vec![crate::linalg::cr(s), crate::linalg::cr(s)],
                vec![crate::linalg::cr(s), crate::linalg::cr(-s)],
            ])
        };
        let hn = kron_power(&h1, qubits);
        let hadamard_state = |i: usize| {
            let col = hn.column(i).into_owned();
            DensityMatrix::from_pure(&col).expect("Hadamard column is a unit vector")
        };
        for i in 0..dim {
            for j in (i + 1)..dim {
                out.push((
                    hadamard_state(i),
                    hadamard_state(j),
                    format!("hadamard {i}/{j}"),
                ));
            }
        }
    }
    out
}

/// Evaluate the pair bound over a candidate set and return the maximizer.
///
/// Every output is a certified lower bound; it is never claimed to be the
/// global maximum over all state pairs. Ties keep the earliest candidate, so
/// the result is independent of evaluation order.
pub fn optimize_bound_over_pairs(
    shape: &ProtocolShape,
    relaxation: Relaxation,
    search: PairSearch,
) -> Result<BoundReport> {
    let candidates: Vec<(DensityMatrix, DensityMatrix, String)> = match search {
        PairSearch::Presets => preset_pairs(shape.qubits()),
        PairSearch::Random { samples, seed } => {
            if samples == 0 {
                return Err(Error::EmptyGrid);
            }
            let dim = shape.single_copy_dim();
            (0..samples)
                .map(|t| {
                    let psi = random::haar_state(dim, &mut random::substream(seed, 2 * t as u64));
                    let phi =
                        random::haar_state(dim, &mut random::substream(seed, 2 * t as u64 + 1));
                    (psi, phi, format!("haar seed={seed} idx={t}"))
                })
                .collect()
        }
    };
    let mut best: Option<BoundReport> = None;
    for (psi, phi, label) in candidates {
        let mut report = spread_bound_from_pair(shape, &psi, &phi, relaxation)?;
        report.pair_description = label;
        best = Some(match best {
            None => report,
            Some(current) => {
                if report.value() > current.value() {
                    report
                } else {
                    current
                }
            }
        });
    }
    best.ok_or(Error::EmptyGrid)
}

/// Both sides of the per-experiment entropy decay envelope for a layered
/// circuit: the relative entropy of the simulated noisy `Q`-copy output to
/// the maximally mixed state, and the analytic ceiling
/// `Q n Π_l (1 - eps_l)` (equal to `(1-eps)^L Q n` for uniform rates).
pub fn entropy_decay_envelope(
    cfg: &LayeredCircuitConfig,
    experiment: usize,
    copies: usize,
    psi_in: &DensityMatrix,
) -> Result<(f64, f64)> {
    if psi_in.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            left: psi_in.dim(),
            right: cfg.dim(),
        });
    }
    let purity = psi_in.purity();
    if (purity - 1.0).abs() > 1e-9 {
        return Err(Error::NotPure { purity });
    }
    if copies == 0 {
        return Err(Error::InvalidDimension { dim: 0 });
    }
    let total_qubits = cfg.qubits() * copies;
    let dim = 1usize
        .checked_shl(total_qubits as u32)
        .filter(|&d| d <= DENSE_DIM_CAP)
        .ok_or(Error::ProductTooLarge {
            dim: usize::MAX,
            cap: DENSE_DIM_CAP,
        })?;
    let _ = dim;

    let mut state: CMat = kron_power(psi_in.matrix(), copies);
    let mut rhs = (total_qubits) as f64;
    for l in 0..cfg.n_layers() {
        let u_joint = kron_power(cfg.layer(l), copies);
        state = &u_joint * state * u_joint.adjoint();
        let eps = cfg.rates(experiment)[l];
        for q in 0..total_qubits {
            state = depolarize_qubit_in_place(&state, total_qubits, q, eps);
        }
        rhs *= 1.0 - eps;
    }
    let lhs = relative_entropy_to_mixed(&DensityMatrix::new(state)?);
    Ok((lhs, rhs))
}

/// Every numerically testable link of the layered-circuit bound chain, for
/// one witness input pair. Monotone non-decreasing through the fields:
/// product-state distance, triangle split into per-experiment distances to
/// the maximally mixed state, their Pinsker relaxation, and the analytic
/// ceiling appearing in the closed-form bound.
#[derive(Debug, Clone, Serialize)]
pub struct LayeredChain {
    pub product_distance: f64,
    pub sum_trace_to_mixed: f64,
    pub pinsker_sum: f64,
    pub analytic: f64,
}

/// Evaluate the chain for `Q` copies per experiment and the given inputs.
pub fn layered_chain(
    cfg: &LayeredCircuitConfig,
    copies: usize,
    psi_in: &DensityMatrix,
    phi_in: &DensityMatrix,
) -> Result<LayeredChain> {
    let experiments = cfg.experiments();
    let per_exp_dim = (cfg.dim() as u128).pow(copies as u32);
    let joint_dim = per_exp_dim.pow(experiments as u32);
    if joint_dim > DENSE_DIM_CAP as u128 {
        return Err(Error::ProductTooLarge {
            dim: DENSE_DIM_CAP + 1,
            cap: DENSE_DIM_CAP,
        });
    }

    let mixed_exp = DensityMatrix::maximally_mixed(per_exp_dim as usize);
    let mut product_psi: Option<DensityMatrix> = None;
    let mut product_phi: Option<DensityMatrix> = None;
    let mut sum_trace = 0.0;
    let mut pinsker = 0.0;
    let half_ln2 = (std::f64::consts::LN_2 / 2.0).sqrt();
    for k in 0..experiments {
        let out_psi = cfg.simulate_noisy(k, psi_in)?;
        let out_phi = cfg.simulate_noisy(k, phi_in)?;
        let copies_psi = DensityMatrix::new(kron_power(out_psi.matrix(), copies))?;
        let copies_phi = DensityMatrix::new(kron_power(out_phi.matrix(), copies))?;
        sum_trace += trace_distance(&copies_psi, &mixed_exp)?;
        sum_trace += trace_distance(&copies_phi, &mixed_exp)?;
        pinsker += half_ln2 * relative_entropy_to_mixed(&copies_psi).sqrt();
        pinsker += half_ln2 * relative_entropy_to_mixed(&copies_phi).sqrt();
        product_psi = Some(match product_psi {
            None => copies_psi,
            Some(acc) => acc.tensor(&copies_psi),
        });
        product_phi = Some(match product_phi {
            None => copies_phi,
            Some(acc) => acc.tensor(&copies_phi),
        });
    }
    let product_distance =
        trace_distance(&product_psi.unwrap(), &product_phi.unwrap())?;

    let eps_min = (0..experiments)
        .map(|k| {
            cfg.rates(k)
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    let layers = cfg.n_layers() as f64;
    let analytic = (2.0 * std::f64::consts::LN_2).sqrt()
        * ((cfg.qubits() * copies) as f64).sqrt()
        * experiments as f64
        * (1.0 - eps_min).powf(layers / 2.0);

    Ok(LayeredChain {
        product_distance,
        sum_trace_to_mixed: sum_trace,
        pinsker_sum: pinsker,
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{minus_state, one_state, plus_state, zero_state};

    fn dephasing_shape(eps: f64, b: f64) -> ProtocolShape {
        ProtocolShape::uniform(1, 1, 1, b, QuantumChannel::dephasing(eps).unwrap()).unwrap()
    }

    #[test]
    fn dephasing_pair_bound_matches_closed_form() {
        // Witness (|+>, |->): numerator 1, denominator 1 - 2 eps.
        let shape = dephasing_shape(0.1, 0.0);
        let report = spread_bound_from_pair(
            &shape,
            &plus_state(1),
            &minus_state(1),
            Relaxation::ExactSingleExperiment,
        )
        .unwrap();
        assert!((report.value() - 1.25).abs() < 1e-9);
        assert!(matches!(report.flag, BoundFlag::Finite));
    }

    #[test]
    fn depolarizing_pair_bound() {
        let shape =
            ProtocolShape::uniform(1, 1, 1, 0.0, QuantumChannel::depolarizing_qubit(0.1).unwrap())
                .unwrap();
        let report = spread_bound_from_pair(
            &shape,
            &plus_state(1),
            &minus_state(1),
            Relaxation::ExactSingleExperiment,
        )
        .unwrap();
        assert!((report.value() - 1.0 / 0.9).abs() < 1e-9);
    }

    #[test]
    fn noiseless_bound_is_one_for_every_relaxation() {
        let shape =
            ProtocolShape::uniform(1, 1, 1, 0.0, QuantumChannel::identity_channel(2)).unwrap();
        for relaxation in [
            Relaxation::ExactSingleExperiment,
            Relaxation::TraceProduct,
            Relaxation::Fidelity,
            Relaxation::SubFidelity,
        ] {
            let report =
                spread_bound_from_pair(&shape, &zero_state(1), &one_state(1), relaxation).unwrap();
            assert!(
                (report.value() - 1.0).abs() < 1e-9,
                "{}: {}",
                relaxation.name(),
                report.value()
            );
        }
    }

    #[test]
    fn exact_relaxation_requires_single_experiment() {
        let shape =
            ProtocolShape::uniform(1, 2, 1, 0.0, QuantumChannel::dephasing(0.1).unwrap()).unwrap();
        let err = spread_bound_from_pair(
            &shape,
            &plus_state(1),
            &minus_state(1),
            Relaxation::ExactSingleExperiment,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ExactRequiresSingleExperiment { .. }));
    }

    #[test]
    fn relaxation_ordering() {
        // Denominators only grow along trace <= fidelity <= sub-fidelity,
        // so bounds are ordered the other way.
        let mut rng = random::substream(600, 0);
        for trial in 0..20u64 {
            let eps = 0.05 + 0.02 * (trial % 5) as f64;
            let shape = ProtocolShape::uniform(
                2,
                1,
                1,
                0.0,
                QuantumChannel::depolarizing_qubit(eps).unwrap(),
            )
            .unwrap();
            let psi = random::haar_state(2, &mut rng);
            let phi = random::haar_state(2, &mut rng);
            let exact =
                spread_bound_from_pair(&shape, &psi, &phi, Relaxation::TraceProduct).unwrap();
            let fid = spread_bound_from_pair(&shape, &psi, &phi, Relaxation::Fidelity).unwrap();
            let sub = spread_bound_from_pair(&shape, &psi, &phi, Relaxation::SubFidelity).unwrap();
            assert!(exact.value() >= fid.value() - 1e-9);
            assert!(fid.value() >= sub.value() - 1e-9);
        }
    }

    #[test]
    fn bound_monotone_in_declared_bias() {
        let mut last = f64::INFINITY;
        for b in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let shape = dephasing_shape(0.1, b);
            let report = spread_bound_from_pair(
                &shape,
                &plus_state(1),
                &minus_state(1),
                Relaxation::TraceProduct,
            )
            .unwrap();
            assert!(report.value() <= last + 1e-12);
            last = report.value();
        }
    }

    #[test]
    fn vacuous_flag_when_bias_dominates() {
        let shape = dephasing_shape(0.1, 0.5);
        let report = spread_bound_from_pair(
            &shape,
            &plus_state(1),
            &minus_state(1),
            Relaxation::TraceProduct,
        )
        .unwrap();
        assert!(matches!(report.flag, BoundFlag::Vacuous));
        assert_eq!(report.value(), 0.0);
        let acc = AccuracySpec::new(0.1, 0.1).unwrap();
        assert!(matches!(
            sample_count_bound(&report, &acc),
            Err(Error::VacuousBound { .. })
        ));
    }

    #[test]
    fn sample_count_examples() {
        let acc = AccuracySpec::new(0.05, 0.05).unwrap();
        let shape = dephasing_shape(0.1, 0.0);
        let report = spread_bound_from_pair(
            &shape,
            &plus_state(1),
            &minus_state(1),
            Relaxation::ExactSingleExperiment,
        )
        .unwrap();
        assert_eq!(sample_count_bound(&report, &acc).unwrap(), 4612);

        // Shape check of the formula: bound 1, delta 1, fail 2/e^2 gives
        // a log term of exactly 2, so M = 4.
        let acc2 = AccuracySpec::new(1.0, 2.0 / std::f64::consts::E.powi(2)).unwrap();
        assert_eq!(acc2.rounds_for_spread(1.0), 4);
    }

    #[test]
    fn layered_bound_examples() {
        let b = layered_bound(1, 1, 1, 0.0, &[0.1], 10).unwrap();
        assert!((b - 1.438_333_926_549_17).abs() < 1e-9);
        let b0 = layered_bound(1, 1, 1, 0.0, &[0.1], 0).unwrap();
        assert!((b0 - 0.849_321_800_288_019).abs() < 1e-9);
        let vac = layered_bound_report(1, 1, 1, 0.5, &[0.1], 4).unwrap();
        assert_eq!(vac.value(), 0.0);
        assert!(matches!(
            layered_bound(1, 1, 1, 0.0, &[1.0], 2),
            Err(Error::InvalidRate { .. })
        ));
    }

    #[test]
    fn preset_search_finds_dephasing_optimum() {
        for eps in [0.05, 0.1, 0.2] {
            let shape = dephasing_shape(eps, 0.0);
            let report = optimize_bound_over_pairs(
                &shape,
                Relaxation::ExactSingleExperiment,
                PairSearch::Presets,
            )
            .unwrap();
            assert!((report.value() - 1.0 / (1.0 - 2.0 * eps)).abs() < 1e-9);
            assert_eq!(report.pair_description, "plus/minus");
        }
    }

    #[test]
    fn random_search_never_beats_dephasing_presets() {
        let shape = dephasing_shape(0.1, 0.0);
        let preset = optimize_bound_over_pairs(
            &shape,
            Relaxation::ExactSingleExperiment,
            PairSearch::Presets,
        )
        .unwrap();
        let random = optimize_bound_over_pairs(
            &shape,
            Relaxation::ExactSingleExperiment,
            PairSearch::Random {
                samples: 200,
                seed: 7,
            },
        )
        .unwrap();
        assert!(random.value() > 0.0);
        assert!(random.value() <= preset.value() + 1e-9);
    }

    #[test]
    fn identity_presets_give_one() {
        let shape =
            ProtocolShape::uniform(1, 1, 2, 0.0, QuantumChannel::identity_channel(4)).unwrap();
        let report =
            optimize_bound_over_pairs(&shape, Relaxation::TraceProduct, PairSearch::Presets)
                .unwrap();
        assert!((report.value() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn product_too_large_guard() {
        let shape = ProtocolShape::uniform(
            8,
            2,
            1,
            0.0,
            QuantumChannel::dephasing(0.1).unwrap(),
        )
        .unwrap();
        // 2^(1*8*2) = 65536 > 2^14.
        assert!(matches!(
            spread_bound_from_pair(
                &shape,
                &plus_state(1),
                &minus_state(1),
                Relaxation::TraceProduct
            ),
            Err(Error::ProductTooLarge { .. })
        ));
        // The factorized relaxations never form the product.
        let report = spread_bound_from_pair(
            &shape,
            &plus_state(1),
            &minus_state(1),
            Relaxation::Fidelity,
        )
        .unwrap();
        assert!(report.value().is_finite());
    }

    #[test]
    fn entropy_envelope_examples() {
        use crate::linalg::identity;
        // L = 0: pure qubit against I/2 gives exactly 1 bit on both sides.
        let cfg = LayeredCircuitConfig::new(1, vec![], vec![vec![]]).unwrap();
        let (lhs, rhs) = entropy_decay_envelope(&cfg, 0, 1, &zero_state(1)).unwrap();
        assert!((lhs - 1.0).abs() < 1e-9 && (rhs - 1.0).abs() < 1e-9);

        // L = 1, identity layer, eps = 0.1: lhs = 1 - H2(0.05), rhs = 0.9.
        let cfg = LayeredCircuitConfig::new(1, vec![identity(2)], vec![vec![0.1]]).unwrap();
        let (lhs, rhs) = entropy_decay_envelope(&cfg, 0, 1, &zero_state(1)).unwrap();
        assert!((lhs - 0.713_603_042_884_044).abs() < 1e-9);
        assert!((rhs - 0.9).abs() < 1e-12);
        assert!(lhs <= rhs + 1e-9);

        // Random circuits keep lhs below rhs.
        for seed in 0..6u64 {
            let layers = 1 + (seed as usize % 5);
            let cfg = LayeredCircuitConfig::random(2, layers, &[0.2], 100 + seed).unwrap();
            let psi = random::haar_random_state(4, seed);
            let (lhs, rhs) = entropy_decay_envelope(&cfg, 0, 1, &psi).unwrap();
            assert!(lhs <= rhs + 1e-9, "seed {seed}: lhs={lhs} rhs={rhs}");
        }
    }

    #[test]
    fn mixed_input_rejected_by_envelope() {
        let cfg = LayeredCircuitConfig::new(1, vec![], vec![vec![]]).unwrap();
        let err =
            entropy_decay_envelope(&cfg, 0, 1, &DensityMatrix::maximally_mixed(2)).unwrap_err();
        assert!(matches!(err, Error::NotPure { .. }));
    }
}
