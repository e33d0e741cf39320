//! Support recovery: the clean-then-threshold decoder, the coordinate
//! thresholding pipeline, threshold policies, and direction-error measures.

use nalgebra::DMatrix;

use crate::covariance::{empirical_cross_cov, SplitSample, XiType};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::CcaModel;

/// Which block's support an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    ForU,
    ForV,
}

/// Recovered index set together with the cleaned score matrix it was
/// thresholded from. `indices` is exactly the set of rows whose max
/// absolute score strictly exceeds `cut_used`.
#[derive(Debug, Clone)]
pub struct SupportEstimate {
    pub indices: Vec<usize>,
    pub score_matrix: DMatrix<f64>,
    pub cut_used: f64,
    pub side: Side,
}

/// Soft threshold: shrinks x towards zero by t, killing |x| <= t.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn soft_threshold_matrix(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    m.map(|v| soft_threshold(v, t))
}

/// Clean-then-threshold decoder. Multiplies a precision estimate from one
/// sample half, a held-out cross-covariance from the other half, and a
/// preliminary direction estimate, then keeps the rows whose max absolute
/// score strictly exceeds the cut.
///
/// For the V side: `precision` is q x q, `cross_cov` is the q x p matrix
/// Y2^T X2 / m, and `u_hat` is p x r; the score matrix is q x r.
pub fn recover_supp(
    u_hat: &DMatrix<f64>,
    precision: &DMatrix<f64>,
    cross_cov: &DMatrix<f64>,
    cut: f64,
    side: Side,
) -> Result<SupportEstimate> {
    if precision.ncols() != cross_cov.nrows() || cross_cov.ncols() != u_hat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "precision {}x{}, cross_cov {}x{}, u_hat {}x{}",
            precision.nrows(),
            precision.ncols(),
            cross_cov.nrows(),
            cross_cov.ncols(),
            u_hat.nrows(),
            u_hat.ncols()
        )));
    }
    let score = precision * cross_cov * u_hat;
    let indices = support_of(&score, cut);
    Ok(SupportEstimate {
        indices,
        score_matrix: score,
        cut_used: cut,
        side,
    })
}

fn support_of(score: &DMatrix<f64>, cut: f64) -> Vec<usize> {
    (0..score.nrows())
        .filter(|&i| (0..score.ncols()).any(|j| score[(i, j)].abs() > cut))
        .collect()
}

/// Row-wise maximum absolute scores.
pub fn row_max_abs(score: &DMatrix<f64>) -> Vec<f64> {
    (0..score.nrows())
        .map(|i| (0..score.ncols()).map(|j| score[(i, j)].abs()).fold(0.0, f64::max))
        .collect()
}

/// Theorem-calibrated cut: c_pr * xi_n * sqrt(log(p+q) * s_prec / n), with
/// xi_n = c_pr sqrt(s_prec) for type A, c_pr max(sqrt(r log q / n), 1) for
/// type B, and 1 for type C.
pub fn theorem1_cut(
    n: usize,
    p: usize,
    q: usize,
    s_prec: usize,
    r: usize,
    xi_type: XiType,
    c_pr: f64,
    _b_const: f64,
) -> f64 {
    let nf = n as f64;
    let xi = match xi_type {
        XiType::A => c_pr * (s_prec as f64).sqrt(),
        XiType::B => c_pr * ((r as f64) * (q as f64).ln() / nf).sqrt().max(1.0),
        XiType::C => 1.0,
    };
    c_pr * xi * (((p + q) as f64).ln() * s_prec as f64 / nf).sqrt()
}

/// Simulation-style cut: c_mult * sqrt(log(p+q) * s_prec / n).
pub fn simulation_cut(n: usize, p: usize, q: usize, s_prec: usize, c_mult: f64) -> f64 {
    c_mult * (((p + q) as f64).ln() * s_prec as f64 / n as f64).sqrt()
}

/// Raise a base cut to the s-th largest row score, capping the support size
/// at s when the base cut is below it. With the strict threshold comparison,
/// ties at the s-th largest drop the tied rows.
pub fn sparsity_aware_cut(base_cut: f64, score_matrix: &DMatrix<f64>, s: usize) -> Result<f64> {
    let rows = score_matrix.nrows();
    if s < 1 || s > rows {
        return Err(Error::InvalidS(format!("s={s} outside 1..={rows}")));
    }
    let mut maxes = row_max_abs(score_matrix);
    maxes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(base_cut.max(maxes[s - 1]))
}

/// Threshold selection rule for the clean-then-threshold decoder.
#[derive(Debug, Clone)]
pub enum ThresholdPolicy {
    /// Theorem-calibrated cut with a user constant standing in for the
    /// unknowable theoretical constants.
    TheoremOne { c_pr: f64, xi_type: XiType },
    /// The simulation-study cut with a per-case multiplier.
    SimulationCut { c_mult: f64 },
    /// Fixed threshold.
    Manual { value: f64 },
    /// Any base policy, then raised to the s-th largest row score.
    SparsityAware { base: Box<ThresholdPolicy>, s: usize },
}

impl ThresholdPolicy {
    /// Resolve the cut value. `score_matrix` is consulted only by
    /// `SparsityAware`.
    pub fn resolve(
        &self,
        n: usize,
        p: usize,
        q: usize,
        s_prec: usize,
        r: usize,
        b_const: f64,
        score_matrix: Option<&DMatrix<f64>>,
    ) -> Result<f64> {
        let cut = match self {
            ThresholdPolicy::TheoremOne { c_pr, xi_type } => {
                theorem1_cut(n, p, q, s_prec, r, *xi_type, *c_pr, b_const)
            }
            ThresholdPolicy::SimulationCut { c_mult } => simulation_cut(n, p, q, s_prec, *c_mult),
            ThresholdPolicy::Manual { value } => *value,
            ThresholdPolicy::SparsityAware { base, s } => {
                let base_cut = base.resolve(n, p, q, s_prec, r, b_const, score_matrix)?;
                let scores = score_matrix.ok_or_else(|| {
                    Error::InvalidS("SparsityAware needs a score matrix".into())
                })?;
                sparsity_aware_cut(base_cut, scores, *s)?
            }
        };
        if cut < 0.0 {
            return Err(Error::PreconditionViolated(format!("negative cut {cut}")));
        }
        Ok(cut)
    }
}

/// Which of the three threshold regimes fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtCase {
    CaseI,
    CaseII,
    CaseIII,
}

/// Entrywise soft-threshold level for the coordinate thresholding pipeline.
/// The level applied to the peeled matrix is `theta / sqrt(N)` with N the
/// first-half sample size.
#[derive(Debug, Clone)]
pub struct CtThreshold {
    pub k: f64,
    pub c1: f64,
    pub b_eff: f64,
    pub case: CtCase,
    pub theta: f64,
}

impl CtThreshold {
    /// Fixed theta, bypassing the case rules.
    pub fn manual(theta: f64) -> CtThreshold {
        CtThreshold {
            k: 0.0,
            c1: 0.0,
            b_eff: 1.0,
            case: CtCase::CaseIII,
            theta,
        }
    }
}

/// The three-case threshold level. With t = (s_x + s_y)^2 and d = p + q:
/// theta = sqrt(C1 log d) when t < 2^(1/4) d^(3/4); sqrt(K log(d / t)) when
/// 2^(1/4) d^(3/4) <= t <= d / e; and 0 otherwise. K and C1 are the resolved
/// constants (callers scale them by B_eff^4 as needed).
pub fn ct_threshold(p: usize, q: usize, s_x: usize, s_y: usize, k: f64, c1: f64) -> CtThreshold {
    let d = (p + q) as f64;
    let t = ((s_x + s_y) as f64).powi(2);
    let boundary_low = 2.0_f64.powf(0.25) * d.powf(0.75);
    let boundary_high = d / std::f64::consts::E;
    let (case, theta) = if t < boundary_low {
        (CtCase::CaseI, (c1 * d.ln()).sqrt())
    } else if t <= boundary_high {
        (CtCase::CaseII, (k * (d / t).ln()).sqrt())
    } else {
        (CtCase::CaseIII, 0.0)
    };
    CtThreshold {
        k,
        c1,
        b_eff: 1.0,
        case,
        theta,
    }
}

/// `ct_threshold` with K and C1 scaled by b_eff^4 from the given multipliers
/// (defaults 1288 and 50).
pub fn ct_threshold_scaled(
    p: usize,
    q: usize,
    s_x: usize,
    s_y: usize,
    b_eff: f64,
    k_mult: f64,
    c1_mult: f64,
) -> CtThreshold {
    let b4 = b_eff.powi(4);
    let mut t = ct_threshold(p, q, s_x, s_y, k_mult * b4, c1_mult * b4);
    t.b_eff = b_eff;
    t
}

/// A direction estimate plus how many columns carried signal. Columns past
/// `effective_rank` are zero padding; downstream cleaning then degrades to
/// fewer effective directions instead of aborting.
#[derive(Debug, Clone)]
pub struct DirectionEstimate {
    pub matrix: DMatrix<f64>,
    pub effective_rank: usize,
}

impl DirectionEstimate {
    pub fn rank_deficient(&self) -> bool {
        self.effective_rank < self.matrix.ncols()
    }
}

/// Known-covariance matrices a CT run needs; precomputed once per model so
/// replication sweeps do not repeat the eigendecompositions.
#[derive(Debug, Clone)]
pub struct ModelMatrices {
    pub sigma_x_inv: DMatrix<f64>,
    pub sigma_y_inv: DMatrix<f64>,
    pub sigma_x_sqrt: DMatrix<f64>,
    pub sigma_y_sqrt: DMatrix<f64>,
    pub sigma_x_inv_sqrt: DMatrix<f64>,
}

impl ModelMatrices {
    pub fn from_model(model: &CcaModel) -> Result<ModelMatrices> {
        Ok(ModelMatrices {
            sigma_x_inv: linalg::spd_inverse(&model.sigma_x)?,
            sigma_y_inv: linalg::spd_inverse(&model.sigma_y)?,
            sigma_x_sqrt: linalg::spd_sqrt(&model.sigma_x)?,
            sigma_y_sqrt: linalg::spd_sqrt(&model.sigma_y)?,
            sigma_x_inv_sqrt: linalg::spd_inv_sqrt(&model.sigma_x)?,
        })
    }
}

/// Coordinate thresholding estimate of the left canonical directions from
/// first-half data: peel the empirical cross-covariance between the known
/// inverse covariances, soft-threshold entrywise at theta / sqrt(N), sandwich
/// back between the matrix square roots, take the top-r left singular
/// vectors, and premultiply by the inverse square root. Columns are defined
/// up to sign; each is flipped so its largest-magnitude entry is positive.
pub fn ct_estimate_directions(
    x_first: &DMatrix<f64>,
    y_first: &DMatrix<f64>,
    model: &CcaModel,
    r: usize,
    ct: &CtThreshold,
) -> Result<DirectionEstimate> {
    let mats = ModelMatrices::from_model(model)?;
    ct_estimate_directions_with(x_first, y_first, &mats, r, ct.theta)
}

/// Same as `ct_estimate_directions` but with precomputed matrices.
pub fn ct_estimate_directions_with(
    x_first: &DMatrix<f64>,
    y_first: &DMatrix<f64>,
    mats: &ModelMatrices,
    r: usize,
    theta: f64,
) -> Result<DirectionEstimate> {
    let n_first = x_first.nrows();
    if n_first < 2 {
        return Err(Error::PreconditionViolated(
            "first half must have at least 2 rows".into(),
        ));
    }
    let peeled = &mats.sigma_x_inv * empirical_cross_cov(x_first, y_first)? * &mats.sigma_y_inv;
    let shrunk = soft_threshold_matrix(&peeled, theta / (n_first as f64).sqrt());
    let sandwiched = &mats.sigma_x_sqrt * shrunk * &mats.sigma_y_sqrt;
    let (u_pre, effective_rank) =
        linalg::top_left_singular_vectors(&sandwiched, r, 1e-12 * linalg::max_abs(&sandwiched).max(1.0))?;
    Ok(DirectionEstimate {
        matrix: &mats.sigma_x_inv_sqrt * u_pre,
        effective_rank,
    })
}

/// The CT baseline with no thresholding: a plain whitened SVD.
pub fn whitened_svd_directions(
    x_half: &DMatrix<f64>,
    y_half: &DMatrix<f64>,
    model: &CcaModel,
    r: usize,
) -> Result<DirectionEstimate> {
    ct_estimate_directions(x_half, y_half, model, r, &CtThreshold::manual(0.0))
}

/// Full CT support recovery: estimate directions on the first half, then run
/// the clean-then-threshold decoder against the second-half cross-covariance
/// with the exact precision. `Side::ForU` swaps the roles of X and Y
/// throughout.
pub fn ct_recover_support(
    sample: &SplitSample,
    model: &CcaModel,
    r: usize,
    ct: &CtThreshold,
    cut_policy: &ThresholdPolicy,
    side: Side,
) -> Result<SupportEstimate> {
    let (sample, model) = match side {
        Side::ForV => (sample.clone(), model.clone()),
        Side::ForU => (sample.swapped(), model.transposed()),
    };
    let ((x1, y1), (x2, y2)) = sample.halves();
    let dirs = ct_estimate_directions(&x1, &y1, &model, r, ct)?;
    let precision = linalg::spd_inverse(&model.sigma_y)?;
    let cross = empirical_cross_cov(&y2, &x2)?;
    let s_prec = crate::covariance::row_sparsity(&precision);
    let score = &precision * &cross * &dirs.matrix;
    let cut = cut_policy.resolve(
        sample.n(),
        model.p,
        model.q,
        s_prec,
        r,
        model.b_const,
        Some(&score),
    )?;
    let mut est = recover_supp(&dirs.matrix, &precision, &cross, cut, side)?;
    est.side = side;
    Ok(est)
}

/// Sign-flip-invariant weighted l2 error: the worst column's squared
/// sigma_x-norm distance after the better of the two signs.
pub fn condition1_error(
    u_hat: &DMatrix<f64>,
    u_true: &DMatrix<f64>,
    sigma_x: &DMatrix<f64>,
) -> Result<f64> {
    if u_hat.shape() != u_true.shape() || sigma_x.nrows() != u_hat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "u_hat {:?}, u_true {:?}, sigma_x {:?}",
            u_hat.shape(),
            u_true.shape(),
            sigma_x.shape()
        )));
    }
    let mut worst = 0.0_f64;
    for j in 0..u_hat.ncols() {
        let mut best = f64::INFINITY;
        for sign in [1.0, -1.0] {
            let d = u_hat.column(j) * sign - u_true.column(j);
            best = best.min((sigma_x * &d).dot(&d));
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Conservative sparse baseline: alternating soft-threshold power iterations
/// on the peeled cross-covariance of the full sample, initialized at the
/// whitened SVD. Supports are the nonzero coordinates of the final iterates,
/// which mimics how penalized CCA estimators select variables.
pub fn sparse_power_supports(
    sample: &SplitSample,
    model: &CcaModel,
    penalty_u: f64,
    penalty_v: f64,
    iters: usize,
) -> Result<(Vec<usize>, Vec<usize>, DMatrix<f64>, DMatrix<f64>)> {
    let mats = ModelMatrices::from_model(model)?;
    let peeled = &mats.sigma_x_inv * empirical_cross_cov(&sample.x, &sample.y)? * &mats.sigma_y_inv;
    let sandwiched = &mats.sigma_x_sqrt * &peeled * &mats.sigma_y_sqrt;
    let (u_pre, rank) = linalg::top_left_singular_vectors(&sandwiched, 1, 1e-12)?;
    let mut u = if rank > 0 {
        &mats.sigma_x_inv_sqrt * u_pre
    } else {
        DMatrix::zeros(model.p, 1)
    };
    let mut v = DMatrix::zeros(model.q, 1);
    for _ in 0..iters {
        v = soft_threshold_matrix(&(peeled.transpose() * &u), penalty_v);
        let nv = v.norm();
        if nv < 1e-12 {
            u.fill(0.0);
            break;
        }
        v /= nv;
        u = soft_threshold_matrix(&(&peeled * &v), penalty_u);
        let nu = u.norm();
        if nu < 1e-12 {
            v.fill(0.0);
            break;
        }
        u /= nu;
    }
    let d_u = support_of(&u, 0.0);
    let d_v = support_of(&v, 0.0);
    Ok((d_u, d_v, u, v))
}
