//! Pauli strings and decompositions of observables in the Pauli basis.

use crate::linalg::{c, cr, from_rows, kron, CMat};
use crate::state::Observable;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// Single-qubit Pauli. The declaration order gives the lexicographic string
/// order I < X < Y < Z used everywhere a deterministic ordering is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMat {
        match self {
            Pauli::I => from_rows(&[vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(1.0)]]),
            Pauli::X => from_rows(&[vec![cr(0.0), cr(1.0)], vec![cr(1.0), cr(0.0)]]),
            Pauli::Y => from_rows(&[vec![cr(0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), cr(0.0)]]),
            Pauli::Z => from_rows(&[vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(-1.0)]]),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_symbol(ch: char) -> Option<Self> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// An n-qubit Pauli string; factor 0 acts on the most significant qubit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn parse(s: &str) -> Result<Self> {
        let factors: Option<Vec<Pauli>> = s.chars().map(Pauli::from_symbol).collect();
        match factors {
            Some(f) if !f.is_empty() => Ok(PauliString(f)),
            _ => Err(Error::UnknownParameter { name: s.to_string() }),
        }
    }

    pub fn qubits(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.0.len()
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    pub fn matrix(&self) -> CMat {
        let mut out = crate::linalg::identity(1);
        for p in &self.0 {
            out = kron(&out, &p.matrix());
        }
        out
    }

    /// The observable `P / 2`, the rescaling with spectrum exactly ±1/2.
    pub fn normalized_observable(&self) -> Observable {
        Observable::normalized(self.matrix().scale(0.5)).expect("P/2 is normalized")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

/// All `4^n` strings in lexicographic order.
pub fn all_strings(n: usize) -> Vec<PauliString> {
    let mut out = Vec::with_capacity(1 << (2 * n));
    let mut current = vec![Pauli::I; n];
    loop {
        out.push(PauliString(current.clone()));
        // Increment base-4 counter with digit order I < X < Y < Z.
        let mut pos = n;
        while pos > 0 {
            pos -= 1;
            current[pos] = match current[pos] {
                Pauli::I => Pauli::X,
                Pauli::X => Pauli::Y,
                Pauli::Y => Pauli::Z,
                Pauli::Z => {
                    current[pos] = Pauli::I;
                    continue;
                }
            };
            break;
        }
        if current.iter().all(|p| *p == Pauli::I) {
            return out;
        }
    }
}

/// Expand a Hermitian observable in the Pauli basis: `A = Σ c_P P` with
/// `c_P = Tr(A P) / 2^n`. Coefficients below 1e-12 are omitted.
pub fn pauli_decompose(a: &Observable) -> Result<BTreeMap<PauliString, f64>> {
    let dim = a.dim();
    if !dim.is_power_of_two() {
        return Err(Error::DimensionNotPowerOfTwo { dim });
    }
    let n = dim.trailing_zeros() as usize;
    let mut out = BTreeMap::new();
    for ps in all_strings(n) {
        let coeff = (a.matrix() * ps.matrix()).trace() / cr(dim as f64);
        debug_assert!(coeff.im.abs() < 1e-10);
        if coeff.re.abs() >= 1e-12 {
            out.insert(ps, coeff.re);
        }
    }
    Ok(out)
}

/// Rebuild `Σ c_P P` from a decomposition.
pub fn pauli_reconstruct(n: usize, coeffs: &BTreeMap<PauliString, f64>) -> CMat {
    let mut out = CMat::zeros(1 << n, 1 << n);
    for (ps, &c) in coeffs {
        out += ps.matrix().scale(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_entry;
    use crate::random;

    #[test]
    fn string_order_is_lexicographic() {
        let strings = all_strings(2);
        assert_eq!(strings.len(), 16);
        assert_eq!(strings[0].to_string(), "II");
        assert_eq!(strings[1].to_string(), "IX");
        assert_eq!(strings[4].to_string(), "XI");
        assert_eq!(strings[15].to_string(), "ZZ");
        let mut sorted = strings.clone();
        sorted.sort();
        assert_eq!(strings, sorted);
    }

    #[test]
    fn decompose_z_half() {
        let obs = PauliString::parse("Z").unwrap().normalized_observable();
        let coeffs = pauli_decompose(&obs).unwrap();
        assert_eq!(coeffs.len(), 1);
        assert!((coeffs[&PauliString::parse("Z").unwrap()] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decompose_diagonal_combination() {
        // (X + Z) / (2 sqrt 2): coefficients 1/(2 sqrt 2) on X and Z.
        let x = Pauli::X.matrix();
        let z = Pauli::Z.matrix();
        let s = 1.0 / (2.0 * 2.0_f64.sqrt());
        let obs = Observable::normalized((x + z).scale(s)).unwrap();
        let coeffs = pauli_decompose(&obs).unwrap();
        assert_eq!(coeffs.len(), 2);
        assert!((coeffs[&PauliString::parse("X").unwrap()] - 0.35355339).abs() < 1e-7);
        assert!((coeffs[&PauliString::parse("Z").unwrap()] - 0.35355339).abs() < 1e-7);
    }

    #[test]
    fn decompose_identity_half() {
        let obs = Observable::normalized(crate::linalg::identity(2).scale(0.5)).unwrap();
        let coeffs = pauli_decompose(&obs).unwrap();
        assert_eq!(coeffs.len(), 1);
        assert!((coeffs[&PauliString::parse("I").unwrap()] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_round_trips_random_observables() {
        for n in 1..=3usize {
            for seed in 0..5u64 {
                let mut rng = random::substream(0xdec0, seed * 8 + n as u64);
                let h = random::random_hermitian(1 << n, &mut rng);
                let obs = Observable::new(h.clone()).unwrap();
                let coeffs = pauli_decompose(&obs).unwrap();
                let rec = pauli_reconstruct(n, &coeffs);
                assert!(max_abs_entry(&(rec - h)) < 1e-9);
            }
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        let obs = Observable::new(crate::linalg::identity(3)).unwrap();
        assert!(matches!(
            pauli_decompose(&obs),
            Err(Error::DimensionNotPowerOfTwo { dim: 3 })
        ));
    }
}
