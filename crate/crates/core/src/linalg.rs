//! Dense linear-algebra helpers shared by the analysis and design code.
//!
//! Every symmetric eigen-computation goes through [`symmetrize`] first, so a
//! matrix that should be symmetric but drifted numerically is caught instead
//! of silently handed to the eigensolver.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};

/// Relative asymmetry tolerated before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Returns `(M + Mᵀ)/2`, failing if `M` is asymmetric beyond [`SYMMETRY_TOL`].
pub fn symmetrize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(CoreError::Dimension(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let skew = (m - m.transpose()).amax();
    if skew > SYMMETRY_TOL * scale {
        return Err(CoreError::Numerical(format!(
            "matrix asymmetric: |M - M^T|_max = {skew:.3e}, |M|_max = {scale:.3e}"
        )));
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let s = symmetrize(m)?;
    let mut vals: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(DVector::from_vec(vals))
}

pub fn lambda_max(m: &DMatrix<f64>) -> Result<f64> {
    let v = sym_eigenvalues(m)?;
    Ok(v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn lambda_min(m: &DMatrix<f64>) -> Result<f64> {
    let v = sym_eigenvalues(m)?;
    Ok(v.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Solves `M X = B` for symmetric positive definite `M` via Cholesky.
pub fn spd_solve(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetrize(m)?;
    let chol = s
        .cholesky()
        .ok_or_else(|| CoreError::Numerical("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// `Bᵀ M⁻¹ B` for SPD `M`, symmetrized.
pub fn spd_congruence_inverse(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sol = spd_solve(m, b)?;
    let out = b.transpose() * sol;
    Ok((&out + out.transpose()) * 0.5)
}

/// Symmetric PSD square root via eigendecomposition.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetrize(m)?;
    let eig = s.symmetric_eigen();
    let root = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

/// Inverse symmetric square root of an SPD matrix.
pub fn spd_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetrize(m)?;
    let eig = s.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&x| x <= 0.0) {
        return Err(CoreError::Numerical("matrix is not positive definite".into()));
    }
    let root = eig.eigenvalues.map(|x| 1.0 / x.sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

/// Moore–Penrose pseudoinverse via SVD, truncating singular values below
/// `1e-12 * sigma_max`.
pub fn pinv(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-12 * smax;
    svd.pseudo_inverse(tol)
        .map_err(|e| CoreError::Numerical(format!("pseudoinverse failed: {e}")))
}

/// Numerical rank with tolerance `rel_tol * sigma_max`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(values))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Reorders the columns of `m` according to `order`.
pub fn select_columns(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), order.len(), |i, j| m[(i, order[j])])
}

/// Condition number `sigma_max / sigma_min` of a square matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}
