//! Computable information-theoretic quantities: regime classification,
//! impossibility thresholds, spiked-model KL divergences, and the Fano
//! lower bound.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Hardness regime of a (n, p, q, s_x, s_y) configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Regime {
    /// Polynomial-time recovery with standard estimators.
    Easy,
    /// Polynomial-time recovery via coordinate thresholding (known
    /// covariances, p + q comparable to n).
    Difficult,
    /// Conjectured computationally hard; statistically possible.
    Hard,
    /// Information-theoretically impossible.
    Impossible,
}

/// Regime classification with the raw boundary values, so callers can apply
/// their own constant slack. Comparisons here use constant 1.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub easy_boundary: f64,
    pub difficult_boundary: f64,
    pub hard_boundary: f64,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub s_x: usize,
    pub s_y: usize,
}

/// Classify by comparing max(s_x, s_y) against sqrt(n / log(p+q)), sqrt(n),
/// and n / log(p+q), in that order.
pub fn classify_regime(n: usize, p: usize, q: usize, s_x: usize, s_y: usize) -> Result<RegimeReport> {
    if n < 2 || p + q < 3 {
        return Err(Error::PreconditionViolated(format!(
            "need n >= 2 and p + q >= 3, got n={n}, p+q={}",
            p + q
        )));
    }
    let nf = n as f64;
    let logd = ((p + q) as f64).ln();
    let easy_boundary = (nf / logd).sqrt();
    let difficult_boundary = nf.sqrt();
    let hard_boundary = nf / logd;
    let s = s_x.max(s_y) as f64;
    let regime = if s <= easy_boundary {
        Regime::Easy
    } else if s <= difficult_boundary {
        Regime::Difficult
    } else if s <= hard_boundary {
        Regime::Hard
    } else {
        Regime::Impossible
    };
    Ok(RegimeReport {
        regime,
        easy_boundary,
        difficult_boundary,
        hard_boundary,
        n,
        p,
        q,
        s_x,
        s_y,
    })
}

fn check_sparsity_preconditions(p: usize, s: usize) -> Result<()> {
    if s <= 1 {
        return Err(Error::PreconditionViolated(format!("need s > 1, got {s}")));
    }
    if p <= s + 16 {
        return Err(Error::PreconditionViolated(format!(
            "need p - s > 16, got p={p}, s={s}"
        )));
    }
    Ok(())
}

/// True when the sparsity is so large that minimax support recovery error
/// exceeds 1/2: s > 16 n / ((B^2 - 1) log(p - s)).
pub fn impossible_sparsity_predicate(n: usize, p: usize, s: usize, b_const: f64) -> Result<bool> {
    check_sparsity_preconditions(p, s)?;
    let bound = 16.0 * n as f64 / ((b_const * b_const - 1.0) * ((p - s) as f64).ln());
    Ok(s as f64 > bound)
}

/// Signal strengths at or below this level make recovery impossible:
/// sqrt((B^2 - 1) log(p - s) / (8 n)).
pub fn min_signal_threshold(n: usize, p: usize, s: usize, b_const: f64) -> Result<f64> {
    check_sparsity_preconditions(p, s)?;
    if n < 1 {
        return Err(Error::PreconditionViolated("need n >= 1".into()));
    }
    Ok(((b_const * b_const - 1.0) * ((p - s) as f64).ln() / (8.0 * n as f64)).sqrt())
}

/// Two rank-one spiked alternatives sharing the right direction and the
/// correlation level.
#[derive(Debug, Clone)]
pub struct SpikedPair {
    pub alpha1: DVector<f64>,
    pub alpha2: DVector<f64>,
    pub beta: DVector<f64>,
    pub rho: f64,
}

impl SpikedPair {
    pub fn new(
        alpha1: DVector<f64>,
        alpha2: DVector<f64>,
        beta: DVector<f64>,
        rho: f64,
    ) -> Result<Self> {
        for v in [&alpha1, &alpha2, &beta] {
            let dev = (v.norm() - 1.0).abs();
            if dev > 1e-10 {
                return Err(Error::NotUnitNorm(dev));
            }
        }
        if alpha1.len() != alpha2.len() {
            return Err(Error::DimensionMismatch(
                "alpha vectors differ in length".into(),
            ));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::PreconditionViolated(format!(
                "rho={rho} outside (0,1)"
            )));
        }
        Ok(SpikedPair {
            alpha1,
            alpha2,
            beta,
            rho,
        })
    }
}

/// The spiked joint covariance [[I_p, rho a b^T], [rho b a^T, I_q]].
pub fn spiked_covariance(alpha: &DVector<f64>, beta: &DVector<f64>, rho: f64) -> DMatrix<f64> {
    let p = alpha.len();
    let q = beta.len();
    let mut m = DMatrix::identity(p + q, p + q);
    for i in 0..p {
        for j in 0..q {
            let v = rho * alpha[i] * beta[j];
            m[(i, p + j)] = v;
            m[(p + j, i)] = v;
        }
    }
    m
}

/// Per-observation divergence between two spiked alternatives:
/// rho^2 ||alpha1 - alpha2||^2 / (1 - rho^2). This matches the dense-matrix
/// expression log det(S2)/det(S1) - (p+q) + tr(S2^{-1} S1); multiply by n
/// for product measures. Note the convention carries no 1/2 prefactor.
pub fn kl_rank1(pair: &SpikedPair) -> f64 {
    let diff = &pair.alpha1 - &pair.alpha2;
    pair.rho * pair.rho * diff.norm_squared() / (1.0 - pair.rho * pair.rho)
}

/// Fano lower bound on minimax recovery error over a packing family:
/// max(0, 1 - (n * rho^2 * sup_dist^2 / (1 - rho^2) + log 2) / log(|E| - 1)).
pub fn fano_lower_bound(
    n: usize,
    rho: f64,
    sup_pair_dist_sq: f64,
    family_size: usize,
) -> Result<f64> {
    if family_size < 3 {
        return Err(Error::FamilyTooSmall(family_size));
    }
    let kl = n as f64 * rho * rho * sup_pair_dist_sq / (1.0 - rho * rho);
    let bound = 1.0 - (kl + std::f64::consts::LN_2) / ((family_size - 1) as f64).ln();
    Ok(bound.max(0.0))
}
