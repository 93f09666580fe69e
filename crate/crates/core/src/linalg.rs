//! Dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{HbfError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

/// Relative singular-value threshold used for every numerical rank decision.
pub const RANK_TOL: f64 = 1e-9;

/// Relative eigenvalue level treated as rounding noise by `psd_factor`.
pub const EIG_NOISE: f64 = 64.0 * f64::EPSILON;

/// Eigenvalues below this floor are clamped before forming `G^{-1/2}`.
pub const EIG_FLOOR: f64 = 1e-12;

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Count of pivoted-QR diagonal magnitudes above `RANK_TOL * |r_00|`.
/// nalgebra's SVD loses accuracy on rank-deficient inputs, so no SVD is used.
pub fn numerical_rank_real(m: &RMat) -> usize {
    if m.is_empty() {
        return 0;
    }
    let r = m.clone().col_piv_qr().r();
    count_above(&(0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect::<Vec<_>>())
}

pub fn numerical_rank(m: &CMat) -> usize {
    if m.is_empty() {
        return 0;
    }
    let r = m.clone().col_piv_qr().r();
    count_above(&(0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].norm()).collect::<Vec<_>>())
}

fn count_above(diag: &[f64]) -> usize {
    let max = diag.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 || !max.is_finite() {
        return 0;
    }
    diag.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; column `i` of the returned matrix pairs with value `i`.
pub fn hermitian_eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let herm = hermitian_part(m);
    let eig = SymmetricEigen::new(herm);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Descending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigvals(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `(M + M^H) / 2`, removing rounding asymmetry before a Hermitian solver.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `G^{-1/2}` of a Hermitian positive semidefinite Gram matrix, eigenvalues
/// clamped below at [`EIG_FLOOR`].
pub fn inv_sqrt_hermitian(g: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigh(g);
    let d = CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&l| Complex64::new(1.0 / l.max(EIG_FLOOR).sqrt(), 0.0)),
    );
    let scaled = CMat::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * d[j]);
    &scaled * vecs.adjoint()
}

/// `log2 |det(M)|` for a square complex matrix via LU.
pub fn log2_abs_det(m: &CMat) -> Result<f64> {
    let det = m.clone().lu().determinant();
    let mag = det.norm();
    if !mag.is_finite() || mag <= 0.0 {
        return Err(HbfError::Numeric(format!("determinant {det} is not positive")));
    }
    Ok(mag.log2())
}

/// Moore–Penrose pseudo-inverse `(A^H A)^{-1} A^H` of a full-column-rank matrix.
pub fn left_pinv(a: &CMat) -> Result<CMat> {
    let gram = a.adjoint() * a;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| HbfError::Numeric("Gram matrix is singular".into()))?;
    Ok(inv * a.adjoint())
}

/// Ratio of extreme eigenvalues of a Hermitian PSD matrix (infinite when singular).
pub fn hermitian_condition(m: &CMat) -> f64 {
    let v = hermitian_eigvals(m);
    match (v.first(), v.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Thin orthonormal basis of the column space via Householder QR.
pub fn thin_q(a: &CMat) -> CMat {
    a.clone().qr().q()
}

/// Low-rank square-root factor `G` with `G^H G = M` for a Hermitian PSD `M`.
/// Only eigenvalues at rounding level (below `EIG_NOISE * lambda_max`) are dropped.
pub fn psd_factor(m: &CMat) -> CMat {
    let n = m.nrows();
    let (vals, vecs) = hermitian_eigh(m);
    let max = vals.first().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..n).filter(|&i| max > 0.0 && vals[i] > EIG_NOISE * max).collect();
    let mut g = CMat::zeros(keep.len(), n);
    for (row, &i) in keep.iter().enumerate() {
        let s = vals[i].sqrt();
        for c in 0..n {
            g[(row, c)] = vecs[(c, i)].conj() * s;
        }
    }
    g
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rank_of_binary_matrices() {
        let full = RMat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(numerical_rank_real(&full), 2);
        let dup = RMat::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(numerical_rank_real(&dup), 1);
        assert_eq!(numerical_rank_real(&RMat::zeros(3, 2)), 0);
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let (vals, vecs) = hermitian_eigh(&m);
        assert!(vals[0] >= vals[1]);
        let d = CMat::from_diagonal(&CVec::from_iterator(2, vals.iter().map(|&x| c(x, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn inverse_square_root() {
        let m = CMat::from_row_slice(2, 2, &[c(4.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)]);
        let s = inv_sqrt_hermitian(&m);
        let id = &s * &m * &s;
        assert!((id - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn psd_factor_reproduces_matrix() {
        let a = CMat::from_row_slice(2, 3, &[c(1.0, 0.5), c(0.0, 1.0), c(2.0, 0.0), c(0.3, 0.0), c(1.0, -1.0), c(0.0, 0.0)]);
        let m = a.adjoint() * &a;
        let g = psd_factor(&m);
        assert_eq!(g.nrows(), 2);
        assert!((g.adjoint() * &g - m).norm() < 1e-12);
    }

    #[test]
    fn log_det_of_diagonal() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(8.0, 0.0)]));
        assert!((log2_abs_det(&m).unwrap() - 4.0).abs() < 1e-14);
        assert!(log2_abs_det(&CMat::zeros(2, 2)).is_err());
    }
}
