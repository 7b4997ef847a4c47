//! Shot-based estimation of `Tr(ρσ)` and `Tr(ρσρσ)` with constant-depth
//! destructive measurements, assembling the sub-fidelity without any
//! tomographic knowledge of the noise.
//!
//! `Tr(ρσ) = Tr(S ρ⊗σ)` for the register SWAP `S = S_2^{⊗n}`, so measuring
//! every qubit pair in the Bell basis (eigenvalues ±1) and multiplying the
//! eigenvalues estimates the overlap. `Tr(ρσρσ) = Tr(C ρ⊗σ⊗ρ⊗σ)` for the
//! four-register cycle `C = C_2^{⊗n}`; the per-site eigenvalues are the
//! fourth roots of unity and only the real part of their product carries
//! signal. Ancilla-based SWAP/CYCLE test probabilities are also provided,
//! each cross-checked against full circuit simulation.

use crate::linalg::{c, cr, identity, kron, CMat};
use crate::random::substream;
use crate::state::DensityMatrix;
use crate::vd::cyclic_shift;
use crate::{Error, Result, DENSE_DIM_CAP};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMethod {
    SwapTest,
    DestructiveSwap,
    CycleTest,
    DestructiveCycle,
    Exact,
}

/// A shot-based (or exact) overlap estimate with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapEstimate {
    pub value: f64,
    pub shots: u64,
    pub std_error: f64,
    pub method: OverlapMethod,
}

impl OverlapEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            shots: 0,
            std_error: 0.0,
            method: OverlapMethod::Exact,
        }
    }
}

fn check_pair(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<usize> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let dim = rho.dim();
    if !dim.is_power_of_two() {
        return Err(Error::DimensionNotPowerOfTwo { dim });
    }
    Ok(dim.trailing_zeros() as usize)
}

fn bit_of(x: usize, pos: usize, total: usize) -> usize {
    (x >> (total - 1 - pos)) & 1
}

fn with_bit(x: usize, pos: usize, total: usize, bit: usize) -> usize {
    let mask = 1usize << (total - 1 - pos);
    if bit == 1 {
        x | mask
    } else {
        x & !mask
    }
}

/// Permutation swapping qubit positions `a` and `b` of `total` qubits.
fn qubit_swap_matrix(total: usize, a: usize, b: usize) -> CMat {
    let dim = 1usize << total;
    let mut out = CMat::zeros(dim, dim);
    for x in 0..dim {
        let (ba, bb) = (bit_of(x, a, total), bit_of(x, b, total));
        let y = with_bit(with_bit(x, a, total, bb), b, total, ba);
        out[(y, x)] = cr(1.0);
    }
    out
}

/// Permutation cycling the four register bits of one site: the bit at
/// register `r` moves to register `r - 1` (the same left shift as the
/// four-register CYCLE restricted to this site).
fn site_cycle_matrix(qubits_per_register: usize, site: usize) -> CMat {
    let n = qubits_per_register;
    let total = 4 * n;
    let dim = 1usize << total;
    let mut out = CMat::zeros(dim, dim);
    let pos = [site, n + site, 2 * n + site, 3 * n + site];
    for x in 0..dim {
        let mut y = x;
        for j in 0..4 {
            y = with_bit(y, pos[j], total, bit_of(x, pos[(j + 1) % 4], total));
        }
        out[(y, x)] = cr(1.0);
    }
    out
}

/// Ancilla-controlled test: `p0 = (1 + Re Tr[U ρ_sys]) / 2` by simulating
/// `H · CU · (|+><+| ⊗ ρ_sys) · CU† · H` and reading the ancilla.
fn hadamard_test_p0(u: &CMat, system: &CMat) -> f64 {
    let joint = u.nrows();
    let mut cu = CMat::zeros(2 * joint, 2 * joint);
    for i in 0..joint {
        cu[(i, i)] = cr(1.0);
        for j in 0..joint {
            cu[(joint + i, joint + j)] = u[(i, j)];
        }
    }
    let plus = crate::state::plus_state(1);
    let init = kron(plus.matrix(), system);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = crate::linalg::from_rows(&[vec![cr(s), cr(s)], vec![cr(s), cr(-s)]]);
    let h_full = kron(&h, &identity(joint));
    let final_state = &h_full * (&cu * init * cu.adjoint()) * h_full.adjoint();
    (0..joint).map(|i| final_state[(i, i)].re).sum()
}

/// SWAP-test success probability `p0 = (1 + Tr(ρσ)) / 2`, cross-checked
/// against the ancilla-controlled-SWAP circuit.
pub fn swap_test_probability(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let n = check_pair(rho, sigma)?;
    let joint = rho.dim() * sigma.dim();
    if 2 * joint > DENSE_DIM_CAP {
        return Err(Error::ProductTooLarge {
            dim: 2 * joint,
            cap: DENSE_DIM_CAP,
        });
    }
    let overlap = (rho.matrix() * sigma.matrix()).trace().re;
    let closed = 0.5 * (1.0 + overlap);

    // Register swap: |a>|b> -> |b>|a>, i.e. swap qubit i with n + i.
    let mut swap = identity(joint);
    for i in 0..n {
        swap = qubit_swap_matrix(2 * n, i, n + i) * swap;
    }
    let simulated = hadamard_test_p0(&swap, &kron(rho.matrix(), sigma.matrix()));
    let deviation = (closed - simulated).abs();
    if deviation > 1e-9 {
        return Err(Error::CrossCheckFailed {
            what: "swap test probability",
            deviation,
        });
    }
    Ok(closed)
}

/// CYCLE-test success probability `p0 = (1 + Tr(ρσρσ)) / 2`, cross-checked
/// against the controlled-CYCLE circuit on four registers.
pub fn cycle_test_probability(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let dim = rho.dim();
    let joint = dim
        .checked_pow(4)
        .filter(|&d| 2 * d <= DENSE_DIM_CAP)
        .ok_or(Error::ProductTooLarge {
            dim: usize::MAX,
            cap: DENSE_DIM_CAP,
        })?;
    let _ = joint;
    let prod = rho.matrix() * sigma.matrix();
    let trace = (&prod * &prod).trace().re;
    // Tr(ρσρσ) = Tr[(σ^{1/2} ρ σ^{1/2})^2] >= 0; anything below tolerance
    // means the inputs are corrupted.
    if trace < -1e-12 {
        return Err(Error::CrossCheckFailed {
            what: "cycle trace positivity",
            deviation: -trace,
        });
    }
    let closed = 0.5 * (1.0 + trace);

    let cycle = cyclic_shift(dim, 4);
    let system = kron(
        &kron(rho.matrix(), sigma.matrix()),
        &kron(rho.matrix(), sigma.matrix()),
    );
    let simulated = hadamard_test_p0(&cycle, &system);
    let deviation = (closed - simulated).abs();
    if deviation > 1e-9 {
        return Err(Error::CrossCheckFailed {
            what: "cycle test probability",
            deviation,
        });
    }
    Ok(closed)
}

/// Joint Born distribution over per-site eigenvalue tuples for commuting
/// per-site projector families. `projectors[s]` holds the projectors for
/// site `s`; returns one `(eigenvalue product, probability)` per tuple.
fn eigen_tuple_distribution(
    projectors: &[Vec<(Complex64, CMat)>],
    state: &CMat,
) -> Vec<(Complex64, f64)> {
    // Expand all sites but the first with matrix products, then close each
    // branch with a trace against the first site's projectors.
    let mut branches: Vec<(Complex64, CMat)> = vec![(cr(1.0), state.clone())];
    for site in (1..projectors.len()).rev() {
        let mut next = Vec::with_capacity(branches.len() * projectors[site].len());
        for (value, partial) in &branches {
            for (eig, proj) in &projectors[site] {
                next.push((value * eig, proj * partial));
            }
        }
        branches = next;
    }
    let mut out = Vec::new();
    for (value, partial) in &branches {
        for (eig, proj) in &projectors[0] {
            let mut trace = c(0.0, 0.0);
            for i in 0..proj.nrows() {
                for j in 0..proj.ncols() {
                    trace += proj[(i, j)] * partial[(j, i)];
                }
            }
            debug_assert!(trace.im.abs() < 1e-9);
            out.push((value * eig, trace.re.max(0.0)));
        }
    }
    let total: f64 = out.iter().map(|(_, p)| p).sum();
    debug_assert!((total - 1.0).abs() < 1e-6, "tuple probabilities sum to {total}");
    for (_, p) in &mut out {
        *p /= total;
    }
    out
}

fn sample_indices(cdf: &[f64], shots: u64, mut rng: impl Rng) -> Vec<usize> {
    (0..shots)
        .map(|_| {
            let u: f64 = rng.random();
            cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
        })
        .collect()
}

fn cdf_of(dist: &[(Complex64, f64)]) -> Vec<f64> {
    let mut acc = 0.0;
    dist.iter()
        .map(|(_, p)| {
            acc += p;
            acc
        })
        .collect()
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, shots: u64) -> (f64, f64) {
    let n = shots as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Estimate `Tr(ρσ)` with per-qubit-pair Bell measurements: each shot is the
/// product of the per-pair SWAP eigenvalues (±1). Depth is constant in `n`.
pub fn destructive_swap_estimate(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<OverlapEstimate> {
    let n = check_pair(rho, sigma)?;
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let joint_dim = rho.dim() * sigma.dim();
    if joint_dim > DENSE_DIM_CAP {
        return Err(Error::ProductTooLarge {
            dim: joint_dim,
            cap: DENSE_DIM_CAP,
        });
    }
    let projectors: Vec<Vec<(Complex64, CMat)>> = (0..n)
        .map(|site| {
            let swap = qubit_swap_matrix(2 * n, site, n + site);
            let id = identity(joint_dim);
            vec![
                (cr(1.0), (&id + &swap).scale(0.5)),
                (cr(-1.0), (&id - &swap).scale(0.5)),
            ]
        })
        .collect();
    let state = kron(rho.matrix(), sigma.matrix());
    let dist = eigen_tuple_distribution(&projectors, &state);
    let cdf = cdf_of(&dist);
    let indices = sample_indices(&cdf, shots, substream(seed, 0));
    let values = indices.iter().map(|&i| dist[i].0.re);
    let (mean, std_error) = mean_and_se(values, shots);
    Ok(OverlapEstimate {
        value: mean,
        shots,
        std_error,
        method: OverlapMethod::DestructiveSwap,
    })
}

/// A destructive CYCLE estimate of `Tr(ρσρσ)`: shot values are products of
/// per-site eigenvalues in {1, i, -1, -i}; the real part carries the
/// estimate and the imaginary part must average to zero.
#[derive(Debug, Clone, Serialize)]
pub struct CycleEstimate {
    pub estimate: OverlapEstimate,
    pub imag_mean: f64,
    pub imag_std_error: f64,
}

/// Estimate `Tr(ρσρσ)` by measuring each four-qubit site group of
/// `ρ⊗σ⊗ρ⊗σ` in the eigenbasis of the per-site cycle operator.
pub fn destructive_cycle_estimate(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<CycleEstimate> {
    let n = check_pair(rho, sigma)?;
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let joint_dim = rho
        .dim()
        .checked_pow(4)
        .filter(|&d| d <= DENSE_DIM_CAP)
        .ok_or(Error::ProductTooLarge {
            dim: usize::MAX,
            cap: DENSE_DIM_CAP,
        })?;

    // Spectral projectors of the order-4 site cycle: P_k = (1/4) Σ_j
    // (i^k)^{-j} C^j with eigenvalue i^k.
    let projectors: Vec<Vec<(Complex64, CMat)>> = (0..n)
        .map(|site| {
            let cycle = site_cycle_matrix(n, site);
            let mut powers = vec![identity(joint_dim)];
            for j in 1..4 {
                powers.push(&cycle * &powers[j - 1]);
            }
            (0..4)
                .map(|k| {
                    let omega = c(0.0, 1.0).powu(k as u32);
                    let mut proj = CMat::zeros(joint_dim, joint_dim);
                    for (j, power) in powers.iter().enumerate() {
                        proj += power * (omega.conj().powu(j as u32) / cr(4.0));
                    }
                    (omega, proj)
                })
                .collect()
        })
        .collect();

    let state = kron(
        &kron(rho.matrix(), sigma.matrix()),
        &kron(rho.matrix(), sigma.matrix()),
    );
    let dist = eigen_tuple_distribution(&projectors, &state);
    let cdf = cdf_of(&dist);
    let indices = sample_indices(&cdf, shots, substream(seed, 0));
    let (re_mean, re_se) = mean_and_se(indices.iter().map(|&i| dist[i].0.re), shots);
    let (im_mean, im_se) = mean_and_se(indices.iter().map(|&i| dist[i].0.im), shots);
    Ok(CycleEstimate {
        estimate: OverlapEstimate {
            value: re_mean,
            shots,
            std_error: re_se,
            method: OverlapMethod::DestructiveCycle,
        },
        imag_mean: im_mean,
        imag_std_error: im_se,
    })
}

/// Shot budget for the two sub-fidelity components.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubfidShots {
    pub overlap: u64,
    pub cycle: u64,
}

impl SubfidShots {
    /// The default allocation: the same number of shots for each component.
    pub fn equal_split(per_quantity: u64) -> Self {
        Self {
            overlap: per_quantity,
            cycle: per_quantity,
        }
    }
}

/// A measured sub-fidelity with first-order error propagation.
#[derive(Debug, Clone, Serialize)]
pub struct SubfidelityEstimate {
    /// `t̂ + sqrt(2 max(0, t̂² - û))`.
    pub value: f64,
    /// The measured `Tr(ρσ)` alone: a certified weaker lower bound on the
    /// sub-fidelity since the dropped square root is non-negative.
    pub first_term_only: f64,
    pub overlap: f64,
    pub cycle: f64,
    pub ci: f64,
    /// Set when the radicand was too close to zero for the delta method;
    /// the interval is then computed at a floored radicand and is
    /// conservative.
    pub radicand_clamped: bool,
    pub shots: SubfidShots,
}

/// Measure both components with destructive circuits and assemble the
/// sub-fidelity. `ci` is the first-order (delta-method) propagation of the
/// two standard errors through the formula.
pub fn estimate_subfidelity_split(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    shots: SubfidShots,
    seed: u64,
) -> Result<SubfidelityEstimate> {
    if shots.overlap == 0 || shots.cycle == 0 {
        return Err(Error::InvalidShots);
    }
    let swap = destructive_swap_estimate(rho, sigma, shots.overlap, seed ^ 0x5157)?;
    let cycle = destructive_cycle_estimate(rho, sigma, shots.cycle, seed ^ 0xC1C1)?;
    let t = swap.value;
    let u = cycle.estimate.value;
    let radicand = 2.0 * (t * t - u);
    let clamp_floor = 1e-6;
    let radicand_clamped = radicand < clamp_floor;
    let value = t + radicand.max(0.0).sqrt();
    let s_tilde = radicand.max(clamp_floor);
    let d_dt = 1.0 + 2.0 * t / s_tilde.sqrt();
    let d_du = 1.0 / s_tilde.sqrt();
    let ci = ((d_dt * swap.std_error).powi(2) + (d_du * cycle.estimate.std_error).powi(2)).sqrt();
    Ok(SubfidelityEstimate {
        value,
        first_term_only: t,
        overlap: t,
        cycle: u,
        ci,
        radicand_clamped,
        shots,
    })
}

/// [`estimate_subfidelity_split`] with the default equal shot allocation.
pub fn estimate_subfidelity(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    shots_per_quantity: u64,
    seed: u64,
) -> Result<SubfidelityEstimate> {
    estimate_subfidelity_split(rho, sigma, SubfidShots::equal_split(shots_per_quantity), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::sub_fidelity;
    use crate::random;
    use crate::state::{one_state, zero_state};

    #[test]
    fn swap_test_examples() {
        let zero = zero_state(1);
        let one = one_state(1);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((swap_test_probability(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!((swap_test_probability(&zero, &one).unwrap() - 0.5).abs() < 1e-12);
        assert!((swap_test_probability(&mixed, &mixed).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn cycle_test_examples() {
        let psi = random::haar_random_state(2, 1);
        assert!((cycle_test_probability(&psi, &psi).unwrap() - 1.0).abs() < 1e-9);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((cycle_test_probability(&mixed, &mixed).unwrap() - 0.5625).abs() < 1e-12);
        let zero = zero_state(1);
        let one = one_state(1);
        assert!((cycle_test_probability(&zero, &one).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn swap_and_cycle_tests_work_on_two_qubits() {
        let mut rng = random::substream(21, 0);
        let rho = random::random_mixed_state(4, &mut rng);
        let sigma = random::random_mixed_state(4, &mut rng);
        let p_swap = swap_test_probability(&rho, &sigma).unwrap();
        let overlap = (rho.matrix() * sigma.matrix()).trace().re;
        assert!((p_swap - 0.5 * (1.0 + overlap)).abs() < 1e-12);
        let p_cycle = cycle_test_probability(&rho, &sigma).unwrap();
        assert!(p_cycle >= 0.5 - 1e-12);
    }

    #[test]
    fn destructive_swap_converges() {
        let psi = random::haar_random_state(2, 5);
        let est = destructive_swap_estimate(&psi, &psi, 100_000, 9).unwrap();
        assert!((est.value - 1.0).abs() <= 3.0 * est.std_error.max(1e-6));

        let est = destructive_swap_estimate(&zero_state(1), &one_state(1), 100_000, 9).unwrap();
        assert!(est.value.abs() <= 3.0 * est.std_error.max(1e-3));
    }

    #[test]
    fn zero_shots_rejected() {
        let psi = zero_state(1);
        assert!(matches!(
            destructive_swap_estimate(&psi, &psi, 0, 1),
            Err(Error::InvalidShots)
        ));
        assert!(matches!(
            destructive_cycle_estimate(&psi, &psi, 0, 1),
            Err(Error::InvalidShots)
        ));
    }

    #[test]
    fn destructive_estimates_match_exact_on_mixed_pairs() {
        let mut rng = random::substream(33, 0);
        for trial in 0..6u64 {
            let n = if trial % 3 == 2 { 2 } else { 1 };
            let rho = random::random_mixed_state(1 << n, &mut rng);
            let sigma = random::random_mixed_state(1 << n, &mut rng);
            let exact_t = (rho.matrix() * sigma.matrix()).trace().re;
            let est = destructive_swap_estimate(&rho, &sigma, 100_000, 50 + trial).unwrap();
            assert!(
                (est.value - exact_t).abs() <= 4.0 * est.std_error,
                "trial {trial}: overlap {} vs {exact_t} (se {})",
                est.value,
                est.std_error
            );

            let prod = rho.matrix() * sigma.matrix();
            let exact_u = (&prod * &prod).trace().re;
            let cyc = destructive_cycle_estimate(&rho, &sigma, 100_000, 80 + trial).unwrap();
            assert!(
                (cyc.estimate.value - exact_u).abs() <= 4.0 * cyc.estimate.std_error,
                "trial {trial}: cycle {} vs {exact_u} (se {})",
                cyc.estimate.value,
                cyc.estimate.std_error
            );
            // Tr(ρσρσ) is real: the imaginary mean must be noise.
            assert!(cyc.imag_mean.abs() <= 3.0 * cyc.imag_std_error.max(1e-6));
        }
    }

    #[test]
    fn subfidelity_pipeline_tracks_exact_value() {
        let mut rng = random::substream(44, 0);
        for trial in 0..5u64 {
            let rho = random::random_mixed_state(2, &mut rng);
            let sigma = random::random_mixed_state(2, &mut rng);
            let exact = sub_fidelity(&rho, &sigma).unwrap();
            let est = estimate_subfidelity(&rho, &sigma, 100_000, 900 + trial).unwrap();
            assert!(
                (est.value - exact).abs() <= 4.0 * est.ci.max(1e-6),
                "trial {trial}: estimate {} vs exact {exact} (ci {})",
                est.value,
                est.ci
            );
            assert!(est.first_term_only <= est.value + 1e-12);
        }
    }

    #[test]
    fn identical_pure_states_estimate_to_one() {
        let psi = random::haar_random_state(2, 77);
        let est = estimate_subfidelity(&psi, &psi, 100_000, 3).unwrap();
        assert!((est.value - 1.0).abs() <= 3.0 * est.ci.max(1e-6));
    }

    #[test]
    fn orthogonal_pure_states_estimate_to_zero() {
        let est = estimate_subfidelity(&zero_state(1), &one_state(1), 100_000, 4).unwrap();
        assert!(est.value.abs() <= 3.0 * est.ci.max(1e-3));
    }
}
