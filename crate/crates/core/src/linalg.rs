//! Dense Hermitian eigensolves on kernel matrices.

use nalgebra::DMatrix;

use crate::budget;
use crate::error::Result;
use crate::grid::C64;

/// Eigenvalues (ascending) of the Hermitian part of `scale · A`, where `A` is the
/// `rows × rows` row-major matrix in `data`.
pub fn hermitian_eigenvalues(data: &[C64], rows: usize, scale: f64) -> Result<Vec<f64>> {
    budget::check_eigen("Hermitian eigensolve", rows)?;
    debug_assert_eq!(data.len(), rows * rows);
    let m = DMatrix::from_fn(rows, rows, |r, c| {
        (data[r * rows + c] + data[c * rows + r].conj()) * (0.5 * scale)
    });
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

/// Largest singular value of `scale · A`.
pub fn operator_norm(data: &[C64], rows: usize, scale: f64) -> Result<f64> {
    budget::check_eigen("singular value decomposition", rows)?;
    let m = DMatrix::from_fn(rows, rows, |r, c| data[r * rows + c] * scale);
    let sv = m.singular_values();
    Ok(sv.iter().copied().fold(0.0, f64::max))
}
