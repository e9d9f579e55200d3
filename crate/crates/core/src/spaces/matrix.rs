//! Dense symmetric-matrix helpers on row-major payloads.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn from_row_major(m: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(m, m, data)
}

pub fn to_row_major(a: &DMatrix<f64>) -> Vec<f64> {
    let m = a.nrows();
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// `(A + A') / 2` from a row-major payload.
pub fn symmetrize(m: usize, data: &[f64]) -> DMatrix<f64> {
    let a = from_row_major(m, data);
    (&a + a.transpose()) * 0.5
}

/// Applies a scalar function to the spectrum of a symmetric matrix.
pub fn spectral_map(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let mapped = eig.eigenvalues.map(f);
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&mapped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Raises the spectrum to at least `floor`; returns the input untouched when
/// it already clears the floor.
pub fn floor_spectrum(a: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, bool) {
    let eig = SymmetricEigen::new(a.clone());
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return (a.clone(), false);
    }
    let mapped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&mapped) * v.transpose();
    ((&out + out.transpose()) * 0.5, true)
}

/// Log-Cholesky coordinates: strictly lower part of the Cholesky factor plus
/// the log of its diagonal. Returns `None` if `a` is not positive definite.
pub fn log_cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = a.clone().cholesky()?.l();
    let m = l.nrows();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..i {
            out[(i, j)] = l[(i, j)];
        }
        out[(i, i)] = l[(i, i)].ln();
    }
    Some(out)
}

/// Inverse of [`log_cholesky`]; entries above the diagonal are ignored.
pub fn from_log_cholesky(v: &DMatrix<f64>) -> DMatrix<f64> {
    let m = v.nrows();
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..i {
            l[(i, j)] = v[(i, j)];
        }
        l[(i, i)] = v[(i, i)].exp();
    }
    let s = &l * l.transpose();
    (&s + s.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_of_diagonal_matches_scalar_log() {
        let e = std::f64::consts::E;
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![e, e * e]));
        let l = spectral_map(&a, f64::ln);
        assert!((l[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((l[(1, 1)] - 2.0).abs() < 1e-14);
        assert!(l[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn log_cholesky_roundtrip() {
        let a = from_row_major(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let v = log_cholesky(&a).unwrap();
        let back = from_log_cholesky(&v);
        assert!((&back - &a).norm() < 1e-12);
    }

    #[test]
    fn floor_is_identity_on_well_conditioned_input() {
        let a = from_row_major(2, &[2.0, 0.1, 0.1, 1.0]);
        let (b, changed) = floor_spectrum(&a, 1e-10);
        assert!(!changed);
        assert_eq!(a, b);
    }
}
