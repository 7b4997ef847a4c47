//! Generic mitigation protocols: POVMs per experiment, a finite estimator
//! table over outcome tuples, and the seeded Monte Carlo executor.
//!
//! One round draws an outcome from each experiment's Born distribution on
//! its noisy product state and feeds the outcome tuple to the estimator.
//! The mean over rounds estimates the ideal expectation value up to the
//! protocol's bias.

use crate::bounds::{AccuracySpec, ProtocolShape};
use crate::linalg::{eigenvalues_hermitian, hermiticity_deviation, identity, max_abs_entry, CMat};
use crate::random::substream;
use crate::state::DensityMatrix;
use crate::{Error, Result, TOL_STRUCTURAL};
use rand::Rng;
use serde::Serialize;

/// Positive operator-valued measure: PSD elements summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMat>,
}

impl Povm {
    pub fn new(elements: Vec<CMat>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidDimension { dim: 0 });
        }
        let dim = elements[0].nrows();
        let mut sum = CMat::zeros(dim, dim);
        for e in &elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    left: e.nrows(),
                    right: dim,
                });
            }
            let dev = hermiticity_deviation(e);
            if dev > TOL_STRUCTURAL {
                return Err(Error::NotHermitian { deviation: dev });
            }
            let min = eigenvalues_hermitian(e)[0];
            if min < -TOL_STRUCTURAL {
                return Err(Error::NotPositive { eigenvalue: min });
            }
            sum += e;
        }
        let deviation = max_abs_entry(&(sum - identity(dim)));
        if deviation > TOL_STRUCTURAL {
            return Err(Error::PovmIncomplete { deviation });
        }
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &CMat {
        &self.elements[i]
    }

    /// Born probabilities on a state; tiny negative values from roundoff are
    /// clipped and the vector renormalized.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: rho.dim(),
                right: self.dim,
            });
        }
        let mut probs: Vec<f64> = self
            .elements
            .iter()
            .map(|e| (e * rho.matrix()).trace().re.max(0.0))
            .collect();
        let total: f64 = probs.iter().sum();
        debug_assert!((total - 1.0).abs() < 1e-6, "Born probabilities sum to {total}");
        for p in &mut probs {
            *p /= total;
        }
        Ok(probs)
    }
}

/// Estimator values over the outcome product space, stored row-major in
/// mixed radix (experiment 0 most significant).
#[derive(Debug, Clone)]
pub struct EstimatorTable {
    outcome_counts: Vec<usize>,
    values: Vec<f64>,
}

impl EstimatorTable {
    pub fn new(outcome_counts: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = outcome_counts.iter().product();
        if values.len() != expected {
            return Err(Error::EstimatorTableSize {
                got: values.len(),
                expected,
            });
        }
        Ok(Self {
            outcome_counts,
            values,
        })
    }

    pub fn outcome_counts(&self) -> &[usize] {
        &self.outcome_counts
    }

    fn index(&self, outcomes: &[usize]) -> usize {
        let mut idx = 0usize;
        for (k, &o) in outcomes.iter().enumerate() {
            idx = idx * self.outcome_counts[k] + o;
        }
        idx
    }

    pub fn value(&self, outcomes: &[usize]) -> f64 {
        self.values[self.index(outcomes)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `e_max - e_min`, the quantity Hoeffding planning runs on.
    pub fn spread(&self) -> f64 {
        self.max() - self.min()
    }
}

/// A fully specified protocol: shape, one POVM per experiment (acting on the
/// experiment's `Q`-copy space) and the estimator table.
#[derive(Debug, Clone)]
pub struct MitigationProtocolSpec {
    pub label: String,
    pub shape: ProtocolShape,
    pub povms: Vec<Povm>,
    pub estimator: EstimatorTable,
    /// Human-readable description of the declared bias behaviour, if any.
    pub bias_note: Option<String>,
}

impl MitigationProtocolSpec {
    pub fn new(
        label: impl Into<String>,
        shape: ProtocolShape,
        povms: Vec<Povm>,
        estimator: EstimatorTable,
        bias_note: Option<String>,
    ) -> Result<Self> {
        if povms.len() != shape.experiments() {
            return Err(Error::DimensionMismatch {
                left: povms.len(),
                right: shape.experiments(),
            });
        }
        let exp_dim = shape
            .single_copy_dim()
            .checked_pow(shape.inputs_per_experiment() as u32)
            .ok_or(Error::ProductTooLarge {
                dim: usize::MAX,
                cap: crate::DENSE_DIM_CAP,
            })?;
        for p in &povms {
            if p.dim() != exp_dim {
                return Err(Error::DimensionMismatch {
                    left: p.dim(),
                    right: exp_dim,
                });
            }
        }
        let counts: Vec<usize> = povms.iter().map(Povm::len).collect();
        if counts != estimator.outcome_counts() {
            return Err(Error::EstimatorTableSize {
                got: estimator.values.len(),
                expected: counts.iter().product(),
            });
        }
        let spread = estimator.spread();
        if !spread.is_finite() {
            return Err(Error::InvalidSpread { spread });
        }
        Ok(Self {
            label: label.into(),
            shape,
            povms,
            estimator,
            bias_note,
        })
    }

    pub fn declared_spread(&self) -> f64 {
        self.estimator.spread()
    }

    /// The per-experiment outcome distributions for ideal output `psi`.
    fn outcome_distributions(&self, psi: &DensityMatrix) -> Result<Vec<Vec<f64>>> {
        (0..self.shape.experiments())
            .map(|k| {
                let noisy = self.shape.experiment_product(k, psi)?;
                self.povms[k].probabilities(&noisy)
            })
            .collect()
    }

    /// Exact expectation of the estimator: `Σ_i p_i e(i)` brute-forced over
    /// the full outcome product space. This is the oracle unbiasedness and
    /// bias measurements are checked against.
    pub fn exact_estimator_mean(&self, psi: &DensityMatrix) -> Result<f64> {
        let dists = self.outcome_distributions(psi)?;
        let counts = self.estimator.outcome_counts().to_vec();
        let mut outcomes = vec![0usize; counts.len()];
        let mut mean = 0.0;
        loop {
            let mut prob = 1.0;
            for (k, &o) in outcomes.iter().enumerate() {
                prob *= dists[k][o];
            }
            mean += prob * self.estimator.value(&outcomes);
            // Mixed-radix increment.
            let mut pos = counts.len();
            loop {
                if pos == 0 {
                    return Ok(mean);
                }
                pos -= 1;
                outcomes[pos] += 1;
                if outcomes[pos] < counts[pos] {
                    break;
                }
                outcomes[pos] = 0;
            }
        }
    }
}

/// Outcome statistics of a finished Monte Carlo run.
#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub rounds: u64,
    pub mean: f64,
    pub std_error: f64,
    pub observed_min: f64,
    pub observed_max: f64,
}

impl RunStats {
    pub fn observed_spread(&self) -> f64 {
        self.observed_max - self.observed_min
    }
}

/// Run `rounds` rounds of the protocol on ideal output `psi`.
///
/// Outcomes are drawn from the exact Born distributions; round `m` draws
/// from the substream keyed by `(seed, m)`, so the result is reproducible
/// and independent of any execution order.
pub fn run_mitigation(
    spec: &MitigationProtocolSpec,
    psi: &DensityMatrix,
    rounds: u64,
    seed: u64,
) -> Result<RunStats> {
    if rounds == 0 {
        return Err(Error::InvalidShots);
    }
    let dists = spec.outcome_distributions(psi)?;
    let cdfs: Vec<Vec<f64>> = dists
        .iter()
        .map(|d| {
            let mut acc = 0.0;
            d.iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut outcomes = vec![0usize; spec.shape.experiments()];
    for round in 0..rounds {
        let mut rng = substream(seed, round);
        for (k, cdf) in cdfs.iter().enumerate() {
            let u: f64 = rng.random();
            outcomes[k] = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        }
        let value = spec.estimator.value(&outcomes);
        sum += value;
        sum_sq += value * value;
        min = min.min(value);
        max = max.max(value);
    }
    let n = rounds as f64;
    let mean = sum / n;
    let variance = ((sum_sq / n) - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(RunStats {
        rounds,
        mean,
        std_error: (variance / n).sqrt(),
        observed_min: min,
        observed_max: max,
    })
}

/// Hoeffding round count for estimator values spanning `spread`:
/// `ceil( 2 spread^2 ln(2/fail) / delta^2 )`.
pub fn hoeffding_samples(spread: f64, acc: &AccuracySpec) -> Result<u64> {
    if spread <= 0.0 {
        return Err(Error::InvalidSpread { spread });
    }
    Ok(acc.rounds_for_spread(spread))
}
