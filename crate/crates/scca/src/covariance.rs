//! Empirical covariance machinery, deterministic sample splitting, and
//! precision-matrix providers with the type A/B/C error taxonomy.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{banded_precision, CcaModel, ZERO_TOL};

/// Mean-zero data matrices with a fixed two-way row split at floor(n/2).
#[derive(Debug, Clone)]
pub struct SplitSample {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub split_at: usize,
}

impl SplitSample {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows, Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        let n = x.nrows();
        let split_at = n / 2;
        if split_at < 1 || n - split_at < 1 {
            return Err(Error::DimensionMismatch(format!(
                "cannot split {n} rows into two nonempty halves"
            )));
        }
        Ok(SplitSample { x, y, split_at })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// First-half and second-half (X, Y) blocks; disjoint and exhaustive.
    pub fn halves(&self) -> ((DMatrix<f64>, DMatrix<f64>), (DMatrix<f64>, DMatrix<f64>)) {
        let n = self.n();
        let m = self.split_at;
        (
            (
                self.x.rows(0, m).into_owned(),
                self.y.rows(0, m).into_owned(),
            ),
            (
                self.x.rows(m, n - m).into_owned(),
                self.y.rows(m, n - m).into_owned(),
            ),
        )
    }

    /// The sample with the roles of X and Y exchanged.
    pub fn swapped(&self) -> SplitSample {
        SplitSample {
            x: self.y.clone(),
            y: self.x.clone(),
            split_at: self.split_at,
        }
    }
}

/// X^T Y / m over m paired rows; no centering (the model is mean zero).
pub fn empirical_cross_cov(x_part: &DMatrix<f64>, y_part: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = x_part.nrows();
    if m == 0 || y_part.nrows() != m {
        return Err(Error::DimensionMismatch(format!(
            "parts have {} and {} rows",
            m,
            y_part.nrows()
        )));
    }
    Ok(x_part.transpose() * y_part / m as f64)
}

/// Which block's inverse covariance a provider produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    ForX,
    ForY,
}

/// How the inverse covariance is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionKind {
    /// Exact inverse of the model truth.
    KnownExact,
    /// Inverse of the empirical covariance of a sample half (n >> dim only).
    SampleInverse,
    /// The literal case-B banded matrix.
    BandedTruth,
}

/// Error-rate class of a precision estimator, which scales the recovery
/// threshold. Type A decays slowest, type C is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiType {
    A,
    B,
    C,
}

/// Role-typed source of an inverse covariance matrix.
#[derive(Debug, Clone, Copy)]
pub struct PrecisionProvider {
    pub target: Target,
    pub kind: PrecisionKind,
}

impl PrecisionProvider {
    pub fn new(target: Target, kind: PrecisionKind) -> Self {
        PrecisionProvider { target, kind }
    }

    /// Exact providers are type C; the sample inverse is type B. No type-A
    /// estimator ships; the tag exists for threshold calibration of external
    /// regularized estimators.
    pub fn xi_type(&self) -> XiType {
        match self.kind {
            PrecisionKind::KnownExact | PrecisionKind::BandedTruth => XiType::C,
            PrecisionKind::SampleInverse => XiType::B,
        }
    }
}

/// Produce the inverse covariance for a provider.
///
/// KnownExact and BandedTruth need the model truth; SampleInverse needs a
/// sample half with more rows than columns.
pub fn precision_of(
    provider: &PrecisionProvider,
    sample_half: Option<&DMatrix<f64>>,
    model_truth: Option<&CcaModel>,
) -> Result<DMatrix<f64>> {
    match provider.kind {
        PrecisionKind::KnownExact => {
            let model = model_truth.ok_or(Error::MissingTruth)?;
            let sigma = match provider.target {
                Target::ForX => &model.sigma_x,
                Target::ForY => &model.sigma_y,
            };
            linalg::spd_inverse(sigma)
        }
        PrecisionKind::BandedTruth => {
            let model = model_truth.ok_or(Error::MissingTruth)?;
            let dim = match provider.target {
                Target::ForX => model.p,
                Target::ForY => model.q,
            };
            Ok(banded_precision(dim))
        }
        PrecisionKind::SampleInverse => {
            let part = sample_half.ok_or_else(|| {
                Error::DimensionMismatch("SampleInverse requires a sample half".into())
            })?;
            let (m, d) = (part.nrows(), part.ncols());
            if m < d + 1 {
                return Err(Error::PreconditionViolated(format!(
                    "SampleInverse needs rows >= dim + 1, got {m} rows for dim {d}"
                )));
            }
            let cov = empirical_cross_cov(part, part)?;
            cov.cholesky()
                .map(|c| c.inverse())
                .ok_or(Error::SingularCovariance)
        }
    }
}

/// Maximum number of entries with magnitude above 1e-12 in any column.
pub fn row_sparsity(matrix: &DMatrix<f64>) -> usize {
    (0..matrix.ncols())
        .map(|j| {
            matrix
                .column(j)
                .iter()
                .filter(|v| v.abs() > ZERO_TOL)
                .count()
        })
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::model::{make_rank1_model, CovCase};
    use nalgebra::DMatrix;

    #[test]
    fn single_row_outer_product() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let c = empirical_cross_cov(&x, &x).unwrap();
        assert!(max_abs(&(c - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))) < 1e-15);
    }

    #[test]
    fn cross_cov_is_bilinear() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.3, 0.2, 1.1]);
        let y = DMatrix::from_row_slice(3, 2, &[0.4, -1.0, 2.0, 0.8, -0.7, 0.1]);
        let c1 = empirical_cross_cov(&(&x * 3.0), &y).unwrap();
        let c2 = empirical_cross_cov(&x, &y).unwrap() * 3.0;
        assert!(max_abs(&(c1 - c2)) < 1e-12);
    }

    #[test]
    fn halves_partition_rows() {
        let m = make_rank1_model(3, 3, 2, 0.5, CovCase::IdentityA).unwrap();
        for n in [10usize, 11] {
            let s = m.sample(n, 1).unwrap();
            let ((x1, _), (x2, _)) = s.halves();
            assert_eq!(x1.nrows(), n / 2);
            assert_eq!(x2.nrows(), n - n / 2);
            let mut rebuilt = DMatrix::zeros(n, 3);
            rebuilt.rows_mut(0, n / 2).copy_from(&x1);
            rebuilt.rows_mut(n / 2, n - n / 2).copy_from(&x2);
            assert_eq!(rebuilt, s.x);
        }
    }

    #[test]
    fn known_exact_inverts_truth() {
        let m = make_rank1_model(6, 6, 2, 0.5, CovCase::BandedB).unwrap();
        let prov = PrecisionProvider::new(Target::ForY, PrecisionKind::KnownExact);
        let prec = precision_of(&prov, None, Some(&m)).unwrap();
        let id = DMatrix::identity(6, 6);
        assert!(max_abs(&(prec * &m.sigma_y - id)) < 1e-8);
        assert_eq!(prov.xi_type(), XiType::C);
    }

    #[test]
    fn banded_truth_row() {
        let m = make_rank1_model(5, 5, 2, 0.5, CovCase::BandedB).unwrap();
        let prov = PrecisionProvider::new(Target::ForX, PrecisionKind::BandedTruth);
        let prec = precision_of(&prov, None, Some(&m)).unwrap();
        let row0: Vec<f64> = (0..5).map(|j| prec[(0, j)]).collect();
        assert_eq!(row0, vec![1.0, 0.65, 0.4, 0.0, 0.0]);
    }

    #[test]
    fn sample_inverse_consistent_at_large_n() {
        let m = make_rank1_model(3, 3, 2, 0.5, CovCase::IdentityA).unwrap();
        let s = m.sample(100_000, 42).unwrap();
        let ((x1, _), _) = s.halves();
        let prov = PrecisionProvider::new(Target::ForX, PrecisionKind::SampleInverse);
        let prec = precision_of(&prov, Some(&x1), None).unwrap();
        assert_eq!(prov.xi_type(), XiType::B);
        assert!(max_abs(&(prec - DMatrix::identity(3, 3))) < 0.05);
    }

    #[test]
    fn sample_inverse_requires_enough_rows() {
        let part = DMatrix::zeros(3, 5);
        let prov = PrecisionProvider::new(Target::ForX, PrecisionKind::SampleInverse);
        assert!(matches!(
            precision_of(&prov, Some(&part), None),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn row_sparsity_basics() {
        assert_eq!(row_sparsity(&DMatrix::identity(5, 5)), 1);
        assert_eq!(row_sparsity(&banded_precision(5)), 5);
        assert_eq!(row_sparsity(&banded_precision(8)), 5);
        assert_eq!(row_sparsity(&DMatrix::zeros(4, 4)), 0);
    }

    #[test]
    fn self_cov_symmetric_psd() {
        let m = make_rank1_model(4, 4, 2, 0.5, CovCase::IdentityA).unwrap();
        let s = m.sample(50, 3).unwrap();
        let c = empirical_cross_cov(&s.x, &s.x).unwrap();
        assert!(max_abs(&(&c - c.transpose())) < 1e-10);
        let (lo, _) = crate::linalg::eigen_extremes(&c);
        assert!(lo > -1e-10);
    }
}
