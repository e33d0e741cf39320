//! Dense linear-algebra helpers layered over nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Eigenvalues slightly below zero (within this slack) are clamped to zero
/// when taking symmetric square roots.
pub const PSD_CLAMP: f64 = 1e-10;

/// Largest absolute entry of a matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()))
}

/// (min, max) eigenvalue of a symmetric matrix.
pub fn eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Symmetric PSD square root. Eigenvalues in [-PSD_CLAMP, 0] are clamped to
/// zero; anything lower is an error.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    sym_power(m, 0.5)
}

/// Symmetric inverse square root; requires strictly positive eigenvalues.
pub fn spd_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    sym_power(m, -0.5)
}

/// Inverse via Cholesky; the input must be SPD.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky failed".into()))?;
    Ok(chol.inverse())
}

fn sym_power(m: &DMatrix<f64>, pow: f64) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut d = DVector::zeros(n);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        let v = if v < 0.0 {
            if v < -PSD_CLAMP {
                return Err(Error::SqrtFailure(v));
            }
            0.0
        } else {
            v
        };
        if pow < 0.0 && v == 0.0 {
            return Err(Error::NotPositiveDefinite(
                "zero eigenvalue in inverse power".into(),
            ));
        }
        d[i] = v.powf(pow);
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&d) * q.transpose())
}

/// Modified Gram-Schmidt in the inner product <a, b> = a^T M b.
/// Columns must be linearly independent in that inner product.
pub fn orthonormalize_in(m: &DMatrix<f64>, cols: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = cols.clone();
    let r = out.ncols();
    for i in 0..r {
        for j in 0..i {
            let uj = out.column(j).into_owned();
            let proj = (m * out.column(i)).dot(&uj);
            let delta = &uj * proj;
            let mut ci = out.column_mut(i);
            ci -= delta;
        }
        let norm2 = (m * out.column(i)).dot(&out.column(i).into_owned());
        if norm2 <= 1e-24 {
            return Err(Error::ClassViolation(format!(
                "directions are rank deficient at column {i}"
            )));
        }
        let scale = 1.0 / norm2.sqrt();
        out.column_mut(i).scale_mut(scale);
    }
    Ok(out)
}

/// n x k matrix of i.i.d. standard normals, filled row-major so the stream
/// is reproducible for a given generator state.
pub fn standard_normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Leading r left singular vectors, each flipped so its largest-magnitude
/// entry is positive. Singular values at or below `tol` do not count towards
/// the returned effective rank; the matching columns are zero.
pub fn top_left_singular_vectors(
    m: &DMatrix<f64>,
    r: usize,
    tol: f64,
) -> Result<(DMatrix<f64>, usize)> {
    let svd = nalgebra::SVD::try_new(m.clone(), true, false, f64::EPSILON, 0)
        .ok_or(Error::SvdFailure)?;
    let u = svd.u.as_ref().ok_or(Error::SvdFailure)?;
    // nalgebra does not sort singular values; order them descending.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let mut out = DMatrix::zeros(m.nrows(), r);
    let mut rank = 0;
    for (k, &idx) in order.iter().take(r).enumerate() {
        if svd.singular_values[idx] > tol {
            let mut col = u.column(idx).into_owned();
            let mut imax = 0;
            for i in 0..col.len() {
                if col[i].abs() > col[imax].abs() {
                    imax = i;
                }
            }
            if col[imax] < 0.0 {
                col.neg_mut();
            }
            out.set_column(k, &col);
            rank += 1;
        }
    }
    Ok((out, rank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = spd_sqrt(&m).unwrap();
        assert!(max_abs(&(&s * &s - &m)) < 1e-12);
    }

    #[test]
    fn inv_sqrt_is_inverse_of_sqrt() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.3, 0.0, 0.3, 1.5]);
        let s = spd_sqrt(&m).unwrap();
        let si = spd_inv_sqrt(&m).unwrap();
        let id = DMatrix::identity(3, 3);
        assert!(max_abs(&(&s * &si - &id)) < 1e-12);
    }

    #[test]
    fn sqrt_rejects_clearly_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(spd_sqrt(&m), Err(Error::SqrtFailure(_))));
    }

    #[test]
    fn orthonormalize_identity_inner_product() {
        let cols = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let id = DMatrix::identity(3, 3);
        let q = orthonormalize_in(&id, &cols).unwrap();
        let gram = q.transpose() * &q;
        assert!(max_abs(&(gram - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn orthonormalize_is_a_projection() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let cols = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        let once = orthonormalize_in(&m, &cols).unwrap();
        let twice = orthonormalize_in(&m, &once).unwrap();
        assert!(max_abs(&(&twice - &once)) < 1e-12);
    }

    #[test]
    fn top_singular_vectors_sign_fixed() {
        let m = DMatrix::from_row_slice(3, 2, &[-2.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let (u, rank) = top_left_singular_vectors(&m, 2, 1e-12).unwrap();
        assert_eq!(rank, 2);
        assert!(u[(0, 0)] > 0.0);
        assert!(u[(1, 1)] > 0.0);
    }
}
