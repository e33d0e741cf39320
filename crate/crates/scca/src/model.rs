//! Gaussian sparse-CCA model construction, validation, and sampling.
//!
//! A model is a joint covariance over (X, Y) in which the cross block factors
//! as `sigma_x * U * diag(lambda) * V^T * sigma_y` with Sigma-orthonormal
//! direction matrices U and V. Construction validates the bounded-eigenvalue,
//! decreasing-correlation, and eigengap constraints of the model class.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::covariance::SplitSample;
use crate::error::{Error, Result};
use crate::linalg;

/// Zero-detection tolerance for support extraction and row sparsity.
pub const ZERO_TOL: f64 = 1e-12;

/// Which population covariance pair a rank-one experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CovCase {
    /// Identity covariances on both blocks.
    IdentityA,
    /// Shared banded inverse covariance, entries 1, 0.65, 0.4 on the
    /// diagonal and first two off-diagonals.
    BandedB,
}

/// Full generative description of a sparse-CCA model.
#[derive(Debug, Clone)]
pub struct CcaModel {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub sigma_x: DMatrix<f64>,
    pub sigma_y: DMatrix<f64>,
    /// Left canonical directions, p x r, with U^T sigma_x U = I.
    pub u: DMatrix<f64>,
    /// Right canonical directions, q x r, with V^T sigma_y V = I.
    pub v: DMatrix<f64>,
    /// Canonical correlations, strictly decreasing, each in (0, 1).
    pub lambda: Vec<f64>,
    /// Model-class constant bounding eigenvalues and correlation gaps.
    pub b_const: f64,
    sigma_xy: DMatrix<f64>,
}

/// True supports and signal strengths of the canonical directions.
#[derive(Debug, Clone)]
pub struct SupportTruth {
    pub d_u: Vec<usize>,
    pub d_v: Vec<usize>,
    pub s_x: usize,
    pub s_y: usize,
    pub sig_x: f64,
    pub sig_y: f64,
}

impl CcaModel {
    /// Cross-covariance block sigma_x U diag(lambda) V^T sigma_y.
    pub fn sigma_xy(&self) -> &DMatrix<f64> {
        &self.sigma_xy
    }

    /// The (p+q) x (p+q) joint covariance [[sigma_x, sigma_xy], [sigma_yx, sigma_y]].
    pub fn joint_covariance(&self) -> DMatrix<f64> {
        let n = self.p + self.q;
        let mut j = DMatrix::zeros(n, n);
        j.view_mut((0, 0), (self.p, self.p)).copy_from(&self.sigma_x);
        j.view_mut((0, self.p), (self.p, self.q))
            .copy_from(&self.sigma_xy);
        j.view_mut((self.p, 0), (self.q, self.p))
            .copy_from(&self.sigma_xy.transpose());
        j.view_mut((self.p, self.p), (self.q, self.q))
            .copy_from(&self.sigma_y);
        j
    }

    /// Nonzero rows of U and V with per-row peak signal strengths.
    pub fn support_truth(&self) -> SupportTruth {
        let (d_u, sig_x) = row_support(&self.u);
        let (d_v, sig_y) = row_support(&self.v);
        SupportTruth {
            s_x: d_u.len(),
            s_y: d_v.len(),
            d_u,
            d_v,
            sig_x,
            sig_y,
        }
    }

    /// The same model with the roles of X and Y exchanged.
    pub fn transposed(&self) -> CcaModel {
        CcaModel {
            p: self.q,
            q: self.p,
            r: self.r,
            sigma_x: self.sigma_y.clone(),
            sigma_y: self.sigma_x.clone(),
            u: self.v.clone(),
            v: self.u.clone(),
            lambda: self.lambda.clone(),
            b_const: self.b_const,
            sigma_xy: self.sigma_xy.transpose(),
        }
    }

    /// Draw n i.i.d. rows of (X, Y) via the Cholesky factor of the joint
    /// covariance. The split index is floor(n/2).
    pub fn sample(&self, n: usize, seed: u64) -> Result<SplitSample> {
        if n < 4 {
            return Err(Error::PreconditionViolated(format!(
                "sample size {n} < 4"
            )));
        }
        let joint = self.joint_covariance();
        let chol = joint.cholesky().ok_or(Error::CholeskyFailure)?;
        let l = chol.l();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = linalg::standard_normal_matrix(&mut rng, n, self.p + self.q);
        let data = z * l.transpose();
        let x = data.columns(0, self.p).into_owned();
        let y = data.columns(self.p, self.q).into_owned();
        SplitSample::new(x, y)
    }

    /// Draw n rows through the latent-factor representation
    /// X = Z W1^T + Z1 H1, Y = Z W2^T + Z2 H2, where W1 = sigma_x U L^{1/2},
    /// W2 = sigma_y V L^{1/2} and H1, H2 are the symmetric PSD square roots
    /// of the residual covariances. Same marginal law as `sample`.
    pub fn sample_hidden_variable(&self, n: usize, seed: u64) -> Result<SplitSample> {
        if n < 4 {
            return Err(Error::PreconditionViolated(format!(
                "sample size {n} < 4"
            )));
        }
        let (w1, w2) = self.factor_loadings();
        let h1 = linalg::spd_sqrt(&(&self.sigma_x - &w1 * w1.transpose()))?;
        let h2 = linalg::spd_sqrt(&(&self.sigma_y - &w2 * w2.transpose()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = linalg::standard_normal_matrix(&mut rng, n, self.r);
        let z1 = linalg::standard_normal_matrix(&mut rng, n, self.p);
        let z2 = linalg::standard_normal_matrix(&mut rng, n, self.q);
        let x = &z * w1.transpose() + &z1 * &h1;
        let y = &z * w2.transpose() + &z2 * &h2;
        SplitSample::new(x, y)
    }

    /// Factor loadings (W1, W2) of the latent representation.
    pub fn factor_loadings(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let sqrt_l = DMatrix::from_diagonal(&DVector::from_iterator(
            self.r,
            self.lambda.iter().map(|l| l.sqrt()),
        ));
        (&self.sigma_x * &self.u * &sqrt_l, &self.sigma_y * &self.v * &sqrt_l)
    }

    /// Largest of the four eigenvalue extremes of sigma_x, sigma_y and their
    /// inverses; the effective class constant used to scale CT thresholds.
    pub fn b_eff(&self) -> f64 {
        let (lx, hx) = linalg::eigen_extremes(&self.sigma_x);
        let (ly, hy) = linalg::eigen_extremes(&self.sigma_y);
        hx.max(hy).max(1.0 / lx).max(1.0 / ly)
    }
}

fn row_support(m: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let mut idx = Vec::new();
    let mut min_peak = f64::INFINITY;
    for i in 0..m.nrows() {
        let peak = (0..m.ncols()).map(|j| m[(i, j)].abs()).fold(0.0, f64::max);
        if peak > ZERO_TOL {
            idx.push(i);
            min_peak = min_peak.min(peak);
        }
    }
    if idx.is_empty() {
        min_peak = 0.0;
    }
    (idx, min_peak)
}

/// Construct and validate a model. The raw directions are renormalized with
/// modified Gram-Schmidt in the sigma_x / sigma_y inner products, so feeding
/// back a valid model's own U, V leaves them unchanged.
pub fn build_model(
    sigma_x: DMatrix<f64>,
    sigma_y: DMatrix<f64>,
    u_raw: DMatrix<f64>,
    v_raw: DMatrix<f64>,
    lambda: Vec<f64>,
    b_const: f64,
) -> Result<CcaModel> {
    let p = sigma_x.nrows();
    let q = sigma_y.nrows();
    let r = lambda.len();
    if sigma_x.ncols() != p || sigma_y.ncols() != q {
        return Err(Error::DimensionMismatch(
            "covariance blocks must be square".into(),
        ));
    }
    if u_raw.nrows() != p || v_raw.nrows() != q || u_raw.ncols() != r || v_raw.ncols() != r {
        return Err(Error::DimensionMismatch(format!(
            "directions must be {p}x{r} and {q}x{r}"
        )));
    }
    if r == 0 || r > p.min(q) {
        return Err(Error::ClassViolation(format!(
            "rank r={r} outside 1..=min(p,q)"
        )));
    }
    if b_const <= 1.0 {
        return Err(Error::ClassViolation(format!("b_const {b_const} <= 1")));
    }

    for i in 0..r {
        if !(lambda[i] > 0.0 && lambda[i] < 1.0) {
            return Err(Error::ClassViolation(format!(
                "lambda[{i}] = {} outside (0,1)",
                lambda[i]
            )));
        }
        if i > 0 && lambda[i - 1] - lambda[i] < 1.0 / b_const {
            return Err(Error::ClassViolation(format!(
                "eigengap lambda[{}] - lambda[{}] = {} below 1/B = {}",
                i - 1,
                i,
                lambda[i - 1] - lambda[i],
                1.0 / b_const
            )));
        }
    }
    if lambda[r - 1] <= 1.0 / b_const {
        return Err(Error::ClassViolation(format!(
            "lambda_r = {} not above 1/B = {}",
            lambda[r - 1],
            1.0 / b_const
        )));
    }

    for (name, s) in [("sigma_x", &sigma_x), ("sigma_y", &sigma_y)] {
        let (lo, hi) = linalg::eigen_extremes(s);
        if lo <= 1.0 / b_const || hi >= b_const {
            return Err(Error::ClassViolation(format!(
                "{name} eigenvalues [{lo}, {hi}] outside (1/B, B) = ({}, {b_const})",
                1.0 / b_const
            )));
        }
    }

    let u = linalg::orthonormalize_in(&sigma_x, &u_raw)?;
    let v = linalg::orthonormalize_in(&sigma_y, &v_raw)?;
    let diag_l = DMatrix::from_diagonal(&DVector::from_vec(lambda.clone()));
    let sigma_xy = &sigma_x * &u * diag_l * v.transpose() * &sigma_y;

    let model = CcaModel {
        p,
        q,
        r,
        sigma_x,
        sigma_y,
        u,
        v,
        lambda,
        b_const,
        sigma_xy,
    };

    if model.joint_covariance().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(
            "joint covariance failed Cholesky".into(),
        ));
    }
    Ok(model)
}

/// The banded matrix with unit diagonal, 0.65 on the first off-diagonal and
/// 0.4 on the second; the case-B inverse covariance. Note this matrix loses
/// positive definiteness for dim >= 20, which limits how far case B scales.
pub fn banded_precision(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        let d = i.abs_diff(j);
        match d {
            0 => 1.0,
            1 => 0.65,
            2 => 0.4,
            _ => 0.0,
        }
    })
}

/// Rank-one experimental model: moderate-signal left direction (flat 1/sqrt(s))
/// and small-signal right direction (one large entry, the rest s^{-2/3}),
/// renormalized in the chosen covariance geometry.
pub fn make_rank1_model(
    p: usize,
    q: usize,
    s: usize,
    rho: f64,
    cov_case: CovCase,
) -> Result<CcaModel> {
    if s < 2 || s > p.min(q) {
        return Err(Error::InvalidSparsity(format!(
            "s={s} outside 2..=min(p,q)={}",
            p.min(q)
        )));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidSparsity(format!("rho={rho} outside (0,1)")));
    }
    let sf = s as f64;
    let lead2 = 1.0 - (sf - 1.0) * sf.powf(-4.0 / 3.0);
    if lead2 <= 0.0 {
        return Err(Error::InvalidSparsity(format!(
            "1 - (s-1) s^(-4/3) = {lead2} <= 0"
        )));
    }

    let mut alpha_star = DVector::zeros(p);
    for k in 0..s {
        alpha_star[k] = 1.0 / sf.sqrt();
    }
    let mut beta_star = DVector::zeros(q);
    beta_star[0] = lead2.sqrt();
    for k in 1..s {
        beta_star[k] = sf.powf(-2.0 / 3.0);
    }

    let (sigma_x, sigma_y) = match cov_case {
        CovCase::IdentityA => (DMatrix::identity(p, p), DMatrix::identity(q, q)),
        CovCase::BandedB => {
            let sx = linalg::spd_inverse(&banded_precision(p)).map_err(|_| {
                Error::NotPositiveDefinite(format!(
                    "banded case-B precision is indefinite at dim {p}"
                ))
            })?;
            let sy = if q == p {
                sx.clone()
            } else {
                linalg::spd_inverse(&banded_precision(q)).map_err(|_| {
                    Error::NotPositiveDefinite(format!(
                        "banded case-B precision is indefinite at dim {q}"
                    ))
                })?
            };
            (sx, sy)
        }
    };

    // Slack keeps the strict class inequalities satisfiable at equality points.
    let (lx, hx) = linalg::eigen_extremes(&sigma_x);
    let (ly, hy) = linalg::eigen_extremes(&sigma_y);
    let b_const = (1.0 / rho)
        .max(hx)
        .max(hy)
        .max(1.0 / lx)
        .max(1.0 / ly)
        * (1.0 + 1e-6);

    build_model(
        sigma_x,
        sigma_y,
        DMatrix::from_column_slice(p, 1, alpha_star.as_slice()),
        DMatrix::from_column_slice(q, 1, beta_star.as_slice()),
        vec![rho],
        b_const,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn identity_rank1_cross_block() {
        let m = build_model(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            vec![0.5],
            4.0,
        )
        .unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!(max_abs(&(m.sigma_xy() - expected)) < 1e-12);
    }

    #[test]
    fn rank1_round_trips_through_build() {
        let m = make_rank1_model(30, 30, 5, 0.5, CovCase::IdentityA).unwrap();
        let again = build_model(
            m.sigma_x.clone(),
            m.sigma_y.clone(),
            m.u.clone(),
            m.v.clone(),
            m.lambda.clone(),
            m.b_const,
        )
        .unwrap();
        assert!(max_abs(&(&again.u - &m.u)) < 1e-12);
        assert!(max_abs(&(&again.v - &m.v)) < 1e-12);
    }

    #[test]
    fn eigengap_violation_reported() {
        let err = build_model(
            DMatrix::identity(4, 4),
            DMatrix::identity(4, 4),
            DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            vec![0.99, 0.98],
            10.0,
        )
        .unwrap_err();
        match err {
            Error::ClassViolation(msg) => assert!(msg.contains("eigengap"), "{msg}"),
            other => panic!("expected ClassViolation, got {other}"),
        }
    }

    #[test]
    fn scalar_joint_covariance() {
        let m = build_model(
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::from_column_slice(1, 1, &[1.0]),
            DMatrix::from_column_slice(1, 1, &[1.0]),
            vec![0.5],
            4.0,
        )
        .unwrap();
        let j = m.joint_covariance();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert!(max_abs(&(j - expected)) < 1e-12);
    }

    #[test]
    fn rank1_determinant_identity() {
        // det of [[I, rho a b^T],[rho b a^T, I]] with unit a, b is 1 - rho^2.
        let m = make_rank1_model(4, 3, 2, 0.5, CovCase::IdentityA).unwrap();
        let det = m.joint_covariance().determinant();
        assert!((det - 0.75).abs() < 1e-10, "det = {det}");
    }

    #[test]
    fn beta_star_unit_norm_at_s2() {
        let m = make_rank1_model(6, 6, 2, 0.5, CovCase::IdentityA).unwrap();
        let lead = (1.0 - 2.0_f64.powf(-4.0 / 3.0)).sqrt();
        assert!((m.v[(0, 0)] - lead).abs() < 1e-12);
        assert!((m.v[(1, 0)] - 2.0_f64.powf(-2.0 / 3.0)).abs() < 1e-12);
        let norm: f64 = m.v.column(0).norm();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn banded_entries_case_b() {
        let m = make_rank1_model(10, 10, 3, 0.5, CovCase::BandedB).unwrap();
        let prec = linalg::spd_inverse(&m.sigma_x).unwrap();
        assert!((prec[(2, 3)] - 0.65).abs() < 1e-8);
        assert!((prec[(2, 4)] - 0.4).abs() < 1e-8);
        assert!((prec[(2, 2)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn banded_case_b_rejected_at_large_dim() {
        // The banded precision loses positive definiteness around dim 20.
        let err = make_rank1_model(50, 50, 5, 0.5, CovCase::BandedB).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite(_)));
    }

    #[test]
    fn sample_shapes_and_determinism() {
        let m = make_rank1_model(3, 2, 2, 0.5, CovCase::IdentityA).unwrap();
        let s1 = m.sample(10, 7).unwrap();
        assert_eq!(s1.x.shape(), (10, 3));
        assert_eq!(s1.y.shape(), (10, 2));
        let s2 = m.sample(10, 7).unwrap();
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.y, s2.y);
    }

    #[test]
    fn hidden_variable_algebra() {
        let m = make_rank1_model(8, 6, 3, 0.6, CovCase::IdentityA).unwrap();
        let (w1, w2) = m.factor_loadings();
        assert!(max_abs(&(&w1 * w2.transpose() - m.sigma_xy())) < 1e-10);
        let h1 = linalg::spd_sqrt(&(&m.sigma_x - &w1 * w1.transpose())).unwrap();
        let back = &w1 * w1.transpose() + &h1 * &h1;
        assert!(max_abs(&(back - &m.sigma_x)) < 1e-10);
    }

    #[test]
    fn support_truth_of_rank1() {
        let m = make_rank1_model(10, 10, 4, 0.5, CovCase::IdentityA).unwrap();
        let t = m.support_truth();
        assert_eq!(t.d_u, vec![0, 1, 2, 3]);
        assert_eq!(t.d_v, vec![0, 1, 2, 3]);
        assert_eq!((t.s_x, t.s_y), (4, 4));
        assert!((t.sig_x - 0.5).abs() < 1e-12);
        assert!(t.sig_y > 0.0);
    }

    #[test]
    fn whitened_cross_covariance_recovers_lambda() {
        let m = make_rank1_model(11, 9, 3, 0.45, CovCase::BandedB).unwrap();
        let wx = linalg::spd_inv_sqrt(&m.sigma_x).unwrap();
        let wy = linalg::spd_inv_sqrt(&m.sigma_y).unwrap();
        let white = wx * m.sigma_xy() * wy;
        let sv = white.svd(false, false).singular_values;
        let top = sv.iter().cloned().fold(0.0, f64::max);
        assert!((top - 0.45).abs() < 1e-8);
    }
}
