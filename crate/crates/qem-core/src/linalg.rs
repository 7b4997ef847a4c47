//! Small helpers over `nalgebra` dense complex matrices.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Tensor power `m^{⊗ count}`; `count = 0` gives the 1x1 identity.
pub fn kron_power(m: &CMat, count: usize) -> CMat {
    let mut out = identity(1);
    for _ in 0..count {
        out = kron(&out, m);
    }
    out
}

/// Row-major construction from nested vectors.
pub fn from_rows(rows: &[Vec<Complex64>]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    CMat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry-wise deviation from `m = m†`.
pub fn hermiticity_deviation(m: &CMat) -> f64 {
    max_abs_entry(&(m - m.adjoint()))
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let se = SymmetricEigen::new(hermitize(m));
    let dim = m.nrows();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(dim, dim, |i, j| se.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn eigenvalues_hermitian(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Square root of a positive semidefinite matrix. Eigenvalues below zero
/// (numerical noise) are clipped to zero before the scalar square root.
pub fn psd_sqrt(m: &CMat) -> CMat {
    apply_spectral(m, |x| x.max(0.0).sqrt())
}

/// Apply a scalar function to the spectrum of a Hermitian matrix.
pub fn apply_spectral(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    let diag = CMat::from_diagonal(&CVec::from_iterator(
        values.len(),
        values.iter().map(|&v| cr(f(v))),
    ));
    &vectors * diag * vectors.adjoint()
}

pub fn real_trace(m: &CMat) -> f64 {
    m.trace().re
}

/// Interchange format used by the JSON interfaces: row-major entries as
/// `[re, im]` pairs.
pub fn matrix_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> crate::Result<CMat> {
    let n = rows.len();
    for row in rows {
        if row.len() != rows[0].len() {
            return Err(crate::Error::DimensionMismatch {
                left: row.len(),
                right: rows[0].len(),
            });
        }
    }
    let m = if n == 0 { 0 } else { rows[0].len() };
    Ok(CMat::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_eigen_sorts_ascending() {
        let m = from_rows(&[
            vec![cr(2.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), cr(-1.0)],
        ]);
        let (values, vectors) = hermitian_eigen(&m);
        assert!(values[0] <= values[1]);
        // reconstruct
        let diag = CMat::from_diagonal(&CVec::from_iterator(2, values.iter().map(|&v| cr(v))));
        let rec = &vectors * diag * vectors.adjoint();
        assert!(max_abs_entry(&(rec - m)) < 1e-10);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = from_rows(&[vec![cr(0.9), cr(0.3)], vec![cr(0.3), cr(0.4)]]);
        let s = psd_sqrt(&m);
        assert!(max_abs_entry(&(&s * &s - m)) < 1e-10);
    }

    #[test]
    fn row_round_trip() {
        let m = from_rows(&[vec![c(0.5, 0.1), cr(0.0)], vec![cr(0.25), c(-0.5, 2.0)]]);
        let back = matrix_from_rows(&matrix_to_rows(&m)).unwrap();
        assert_eq!(m, back);
    }
}
