//! Scalar distinguishability and entropy measures between states: trace
//! distance, fidelity, sub-fidelity and relative entropy (bits).

use crate::linalg::{eigenvalues_hermitian, hermitian_eigen, psd_sqrt};
use crate::state::DensityMatrix;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMeasure {
    TraceDistance,
    Fidelity,
    SubFidelity,
    RelativeEntropy,
}

/// A measure value tagged with which measure produced it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DistanceValue {
    pub value: f64,
    pub measure: DistanceMeasure,
}

fn check_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    Ok(())
}

/// `D_tr(ρ, σ) = ||ρ - σ||_1 / 2`: half the sum of absolute eigenvalues of
/// the Hermitian difference.
///
/// The arguments are put in a canonical order before subtracting, so the
/// result is exactly symmetric in its inputs.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let swap = entrywise_greater(rho, sigma);
    let (a, b) = if swap { (sigma, rho) } else { (rho, sigma) };
    let diff = a.matrix() - b.matrix();
    let sum: f64 = eigenvalues_hermitian(&diff).iter().map(|v| v.abs()).sum();
    Ok((0.5 * sum).min(1.0))
}

fn entrywise_greater(rho: &DensityMatrix, sigma: &DensityMatrix) -> bool {
    for (a, b) in rho.matrix().iter().zip(sigma.matrix().iter()) {
        match a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)) {
            std::cmp::Ordering::Greater => return true,
            std::cmp::Ordering::Less => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Squared fidelity `F(ρ, σ) = (Tr sqrt(σ^{1/2} ρ σ^{1/2}))^2`, computed by
/// Hermitian eigendecomposition. Eigenvalue noise below zero is clipped
/// before the square roots.
///
/// When either argument is pure the kernel is rank one and the square roots
/// would amplify eigenvalue noise, so the exact reduction `F = Tr(ρσ)` is
/// used instead.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    if rho.purity() >= 1.0 - 1e-12 || sigma.purity() >= 1.0 - 1e-12 {
        let overlap = (rho.matrix() * sigma.matrix()).trace().re;
        return Ok(overlap.clamp(0.0, 1.0));
    }
    let s_sqrt = psd_sqrt(sigma.matrix());
    let inner = &s_sqrt * rho.matrix() * &s_sqrt;
    let root_trace: f64 = eigenvalues_hermitian(&inner)
        .iter()
        .map(|&v| {
            debug_assert!(v > -1e-10, "fidelity kernel eigenvalue {v}");
            v.max(0.0).sqrt()
        })
        .sum();
    Ok((root_trace * root_trace).min(1.0 + 1e-12))
}

/// Sub-fidelity `E(ρ, σ) = Tr(ρσ) + sqrt(2 [ (Tr ρσ)^2 - Tr(ρσρσ) ])`,
/// a lower bound on the fidelity that is measurable with constant-depth
/// circuits. A radicand below `-1e-12` signals corrupted inputs and errors.
///
/// Radicands within 1e-12 of zero are clamped to zero on both sides: for
/// pure pairs the radicand vanishes identically and the square root would
/// otherwise turn 1e-16-scale trace noise into 1e-8-scale output error.
/// Clamping can only decrease the value, so `E <= F` is preserved.
pub fn sub_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let prod = rho.matrix() * sigma.matrix();
    let t = prod.trace().re;
    let u = (&prod * &prod).trace().re;
    let radicand = 2.0 * (t * t - u);
    if radicand < -1e-12 {
        return Err(Error::NegativeRadicand { radicand });
    }
    let radicand = if radicand < 1e-12 { 0.0 } else { radicand };
    Ok(t + radicand.sqrt())
}

/// Relative entropy `S(ρ||σ) = Tr(ρ log ρ) - Tr(ρ log σ)` in bits.
///
/// Eigenvalues of `ρ` below 1e-15 contribute nothing. If `ρ` has mass on a
/// direction where `σ`'s eigenvalue is below 1e-12 the support condition is
/// violated and the infinity flag `f64::INFINITY` is returned.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let (r_values, r_vectors) = hermitian_eigen(rho.matrix());
    let (s_values, s_vectors) = hermitian_eigen(sigma.matrix());

    let mut entropy = 0.0;
    for (i, &r) in r_values.iter().enumerate() {
        if r > 1e-15 {
            entropy += r * r.log2();
        } else {
            continue;
        }
        let ri = r_vectors.column(i);
        for (j, &s) in s_values.iter().enumerate() {
            let overlap = ri.dotc(&s_vectors.column(j)).norm_sqr();
            if s <= 1e-12 {
                if r * overlap > 1e-12 {
                    return Ok(f64::INFINITY);
                }
                continue;
            }
            entropy -= r * overlap * s.log2();
        }
    }
    Ok(entropy)
}

/// Relative entropy of a state to the maximally mixed state of its dimension.
pub fn relative_entropy_to_mixed(rho: &DensityMatrix) -> f64 {
    let dim = rho.dim() as f64;
    let vn: f64 = rho
        .eigenvalues()
        .iter()
        .filter(|&&v| v > 1e-15)
        .map(|&v| -v * v.log2())
        .sum();
    dim.log2() - vn
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::QuantumChannel;
    use crate::random;
    use crate::state::{minus_state, one_state, plus_state, zero_state};

    #[test]
    fn trace_distance_basic_values() {
        let zero = zero_state(1);
        let one = one_state(1);
        assert_eq!(trace_distance(&zero, &zero).unwrap(), 0.0);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);

        // Dephased |+> vs dephased |->: difference 0.8 (|+><+| - |-><-|),
        // eigenvalues ±0.8.
        let ch = QuantumChannel::dephasing(0.1).unwrap();
        let a = ch.apply(&plus_state(1)).unwrap();
        let b = ch.apply(&minus_state(1)).unwrap();
        assert!((trace_distance(&a, &b).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn fidelity_basic_values() {
        let zero = zero_state(1);
        let one = one_state(1);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap() < 1e-12);
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sub_fidelity_of_maximally_mixed_pair_is_one() {
        // Tr ρσ = 1/2, Tr(ρσρσ) = 1/8, E = 1/2 + sqrt(1/4) = 1.
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((sub_fidelity(&mixed, &mixed).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sub_fidelity_equals_fidelity_for_pure_pairs() {
        for seed in 0..50u64 {
            let a = random::haar_random_state(2, seed);
            let b = random::haar_random_state(2, seed + 1000);
            let e = sub_fidelity(&a, &b).unwrap();
            let f = fidelity(&a, &b).unwrap();
            assert!((e - f).abs() < 1e-9, "pure pair seed {seed}: E={e} F={f}");
        }
    }

    #[test]
    fn sub_fidelity_lower_bounds_fidelity() {
        let mut rng = random::substream(400, 0);
        for _ in 0..60 {
            let a = random::random_mixed_state(4, &mut rng);
            let b = random::random_mixed_state(4, &mut rng);
            let e = sub_fidelity(&a, &b).unwrap();
            let f = fidelity(&a, &b).unwrap();
            assert!(e <= f + 1e-9);
            assert!((0.0..=1.0 + 1e-9).contains(&e));
        }
    }

    #[test]
    fn relative_entropy_basic_values() {
        let zero = zero_state(1);
        assert!(relative_entropy(&zero, &zero).unwrap().abs() < 1e-9);

        // Pure n-qubit state against I/2^n gives n bits.
        for n in 1..=3usize {
            let psi = random::haar_random_state(1 << n, n as u64);
            let mixed = DensityMatrix::maximally_mixed(1 << n);
            let s = relative_entropy(&psi, &mixed).unwrap();
            assert!((s - n as f64).abs() < 1e-9);
            assert!((relative_entropy_to_mixed(&psi) - n as f64).abs() < 1e-9);
        }

        // diag(0.95, 0.05) vs I/2: 1 - H2(0.05).
        let ch = QuantumChannel::depolarizing_qubit(0.1).unwrap();
        let rho = ch.apply(&zero_state(1)).unwrap();
        let s = relative_entropy(&rho, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!((s - 0.713_603_042_884_044).abs() < 1e-9);
    }

    #[test]
    fn relative_entropy_flags_support_violation() {
        let zero = zero_state(1);
        let one = one_state(1);
        let s = relative_entropy(&zero, &one).unwrap();
        assert!(s.is_infinite());
    }

    #[test]
    fn data_processing_inequality() {
        let mut rng = random::substream(41, 0);
        for trial in 0..100u64 {
            let rho = random::random_mixed_state(2, &mut rng);
            let sigma = random::random_mixed_state(2, &mut rng);
            let ch = match trial % 3 {
                0 => QuantumChannel::dephasing(0.2).unwrap(),
                1 => QuantumChannel::depolarizing_qubit(0.35).unwrap(),
                _ => QuantumChannel::dephasing(0.45).unwrap(),
            };
            let before = trace_distance(&rho, &sigma).unwrap();
            let after =
                trace_distance(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap()).unwrap();
            assert!(after <= before + 1e-9);
        }
    }

    #[test]
    fn fidelity_bound_on_trace_distance() {
        let mut rng = random::substream(42, 0);
        for _ in 0..100 {
            let rho = random::random_mixed_state(2, &mut rng);
            let sigma = random::random_mixed_state(2, &mut rng);
            let d = trace_distance(&rho, &sigma).unwrap();
            let f = fidelity(&rho, &sigma).unwrap();
            assert!(d <= (1.0 - f).max(0.0).sqrt() + 1e-9);
        }
    }

    #[test]
    fn quantum_pinsker_inequality() {
        let ln2 = std::f64::consts::LN_2;
        let mut rng = random::substream(43, 0);
        for _ in 0..100 {
            let rho = random::random_mixed_state(2, &mut rng);
            let sigma = random::random_mixed_state(2, &mut rng);
            let d = trace_distance(&rho, &sigma).unwrap();
            let s = relative_entropy(&rho, &sigma).unwrap();
            assert!(d <= (ln2 / 2.0 * s).sqrt() + 1e-9);
        }
    }

    #[test]
    fn entropy_decay_under_local_depolarizing() {
        // S(D_eps^{⊗n}(ρ) || I/2^n) <= (1 - eps) S(ρ || I/2^n).
        let mut rng = random::substream(44, 0);
        for n in 1..=3usize {
            let noise = |eps: f64| QuantumChannel::local_depolarizing_layer(n, eps).unwrap();
            for &eps in &[0.1, 0.3, 0.7] {
                let ch = noise(eps);
                for _ in 0..10 {
                    let rho = random::random_mixed_state(1 << n, &mut rng);
                    let before = relative_entropy_to_mixed(&rho);
                    let after = relative_entropy_to_mixed(&ch.apply(&rho).unwrap());
                    assert!(after <= (1.0 - eps) * before + 1e-9);
                }
            }
        }
    }

    #[test]
    fn symmetry() {
        let mut rng = random::substream(45, 0);
        for _ in 0..20 {
            let rho = random::random_mixed_state(2, &mut rng);
            let sigma = random::random_mixed_state(2, &mut rng);
            assert_eq!(
                trace_distance(&rho, &sigma).unwrap(),
                trace_distance(&sigma, &rho).unwrap()
            );
            let f_ab = fidelity(&rho, &sigma).unwrap();
            let f_ba = fidelity(&sigma, &rho).unwrap();
            assert!((f_ab - f_ba).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = zero_state(1);
        let b = zero_state(2);
        assert!(matches!(
            trace_distance(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
