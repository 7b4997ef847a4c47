//! Seeded randomness: Haar states and unitaries, Ginibre mixed states,
//! and deterministic substream derivation.
//!
//! Every randomized operation in the crate takes an explicit seed; parallel
//! or reordered execution cannot change results because independent work
//! items draw from substreams keyed by `(master seed, index)`.

use crate::linalg::{c, CMat, CVec};
use crate::state::DensityMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Deterministic substream for work item `index` under `master`.
pub fn substream(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(index)))
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Complex Ginibre matrix: independent standard complex Gaussian entries.
pub fn ginibre(dim: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(dim, dim, |_, _| c(standard_normal(rng), standard_normal(rng)))
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase fixing.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(dim, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // Fix the phases so the distribution is Haar rather than QR-convention
    // dependent.
    let mut out = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            out[(i, j)] *= phase;
        }
    }
    out
}

/// Haar-random pure state as a rank-1 projector.
pub fn haar_state(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    let v = CVec::from_fn(dim, |_, _| c(standard_normal(rng), standard_normal(rng)));
    DensityMatrix::from_pure(&v).expect("Gaussian vector normalizes")
}

/// Haar-random pure state from a bare seed; bit-identical for equal seeds.
pub fn haar_random_state(dim: usize, seed: u64) -> DensityMatrix {
    let mut rng = substream(seed, 0);
    haar_state(dim, &mut rng)
}

/// Full-rank mixed state from the Hilbert-Schmidt (Ginibre) ensemble.
pub fn random_mixed_state(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(dim, rng);
    let m = &g * g.adjoint();
    let trace = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / trace)).expect("Ginibre state is valid")
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(dim, rng);
    (&g + g.adjoint()).scale(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::trace_distance;
    use crate::linalg::{identity, max_abs_entry};

    #[test]
    fn haar_state_is_pure_and_deterministic() {
        let a = haar_random_state(2, 7);
        let b = haar_random_state(2, 7);
        assert_eq!(a.matrix(), b.matrix());
        assert!((a.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = substream(3, 0);
        for dim in [2usize, 4, 8] {
            let u = haar_unitary(dim, &mut rng);
            assert!(max_abs_entry(&(u.adjoint() * &u - identity(dim))) < 1e-10);
        }
    }

    #[test]
    fn haar_average_approaches_maximally_mixed() {
        // Monte Carlo check: the Haar average over dim 4 is I/4.
        let dim = 4;
        let samples = 10_000;
        let mut rng = substream(11, 0);
        let mut acc = CMat::zeros(dim, dim);
        for _ in 0..samples {
            acc += haar_state(dim, &mut rng).matrix();
        }
        let mean = DensityMatrix::new(acc.scale(1.0 / samples as f64)).unwrap();
        let d = trace_distance(&mean, &DensityMatrix::maximally_mixed(dim)).unwrap();
        assert!(d < 0.02, "mean state is {d} from I/4 in trace distance");
    }
}
