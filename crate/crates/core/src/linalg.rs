//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, Schur};

/// Eigenvalues of a real square matrix, sorted by descending real part and
/// then descending imaginary part. `None` if the Schur iteration stalls.
pub fn eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000)?;
    let mut ev: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Some(ev)
}

/// Unit vector spanning the numerical null space of `m` (right singular
/// vector of the smallest singular value).
pub fn null_vector(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    Some(vt.row(idx).transpose())
}

/// True when every off-diagonal entry is nonnegative.
pub fn is_metzler(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] >= 0.0))
}
