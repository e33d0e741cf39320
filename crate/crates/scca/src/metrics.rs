//! Support-recovery error metrics.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Type I, type II, and symmetric Hamming errors of an estimated support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryErrors {
    pub type_one: f64,
    pub type_two: f64,
    pub hamming: f64,
    pub exact: bool,
}

fn check_truth(d_true: &BTreeSet<usize>) -> Result<()> {
    if d_true.is_empty() {
        return Err(Error::DegenerateTruth("true support is empty".into()));
    }
    Ok(())
}

/// Proportion of null coordinates that appear in the estimate:
/// |d_hat \ d_true| / (ambient_dim - |d_true|).
pub fn type_one_error(
    d_hat: &BTreeSet<usize>,
    d_true: &BTreeSet<usize>,
    ambient_dim: usize,
) -> Result<f64> {
    check_truth(d_true)?;
    if d_true.len() >= ambient_dim {
        return Err(Error::DegenerateTruth(
            "true support fills the ambient space".into(),
        ));
    }
    let false_pos = d_hat.difference(d_true).count();
    Ok(false_pos as f64 / (ambient_dim - d_true.len()) as f64)
}

/// Proportion of true coordinates missing from the estimate:
/// |d_true \ d_hat| / |d_true|.
pub fn type_two_error(d_hat: &BTreeSet<usize>, d_true: &BTreeSet<usize>) -> Result<f64> {
    check_truth(d_true)?;
    let missed = d_true.difference(d_hat).count();
    Ok(missed as f64 / d_true.len() as f64)
}

/// Symmetric Hamming error 1 - |intersection| / sqrt(|d_true| |d_hat|).
/// An empty estimate scores 1, the limit of the formula along shrinking
/// disjoint supports.
pub fn hamming_error(d_hat: &BTreeSet<usize>, d_true: &BTreeSet<usize>) -> Result<f64> {
    check_truth(d_true)?;
    if d_hat.is_empty() {
        return Ok(1.0);
    }
    let inter = d_hat.intersection(d_true).count() as f64;
    Ok(1.0 - inter / ((d_true.len() as f64) * (d_hat.len() as f64)).sqrt())
}

/// All three errors plus the exact-recovery flag.
pub fn recovery_errors(
    d_hat: &BTreeSet<usize>,
    d_true: &BTreeSet<usize>,
    ambient_dim: usize,
) -> Result<RecoveryErrors> {
    let type_one = type_one_error(d_hat, d_true, ambient_dim)?;
    let type_two = type_two_error(d_hat, d_true)?;
    let hamming = hamming_error(d_hat, d_true)?;
    Ok(RecoveryErrors {
        type_one,
        type_two,
        hamming,
        exact: type_one == 0.0 && type_two == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn type_one_cases() {
        let truth = set(&[1, 2, 3]);
        assert_eq!(type_one_error(&truth, &truth, 10).unwrap(), 0.0);
        let full: BTreeSet<usize> = (0..10).collect();
        assert_eq!(type_one_error(&full, &truth, 10).unwrap(), 1.0);
        let hat = set(&[2, 3, 4, 5]);
        assert!((type_one_error(&hat, &truth, 10).unwrap() - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn type_two_cases() {
        let truth = set(&[1, 2, 3, 4]);
        assert_eq!(type_two_error(&set(&[1, 2, 3, 4, 9]), &truth).unwrap(), 0.0);
        assert_eq!(type_two_error(&set(&[]), &truth).unwrap(), 1.0);
        assert_eq!(type_two_error(&set(&[1, 2]), &truth).unwrap(), 0.5);
    }

    #[test]
    fn hamming_cases() {
        let truth = set(&[1, 2, 3, 4]);
        assert_eq!(hamming_error(&truth, &truth).unwrap(), 0.0);
        assert_eq!(hamming_error(&set(&[7, 8]), &truth).unwrap(), 1.0);
        let h = hamming_error(&set(&[1, 2]), &truth).unwrap();
        assert!((h - (1.0 - 2.0 / 8.0_f64.sqrt())).abs() < 1e-15);
        assert!((h - 0.2929).abs() < 1e-4);
        assert_eq!(hamming_error(&set(&[]), &truth).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_truth_rejected() {
        assert!(type_one_error(&set(&[1]), &set(&[]), 5).is_err());
        assert!(type_one_error(&set(&[1]), &(0..5).collect(), 5).is_err());
        assert!(type_two_error(&set(&[1]), &set(&[])).is_err());
        assert!(hamming_error(&set(&[1]), &set(&[])).is_err());
    }

    #[test]
    fn exact_iff_both_errors_zero() {
        let truth = set(&[0, 3]);
        let e = recovery_errors(&truth, &truth, 6).unwrap();
        assert!(e.exact && e.hamming == 0.0);
        let e2 = recovery_errors(&set(&[0, 3, 5]), &truth, 6).unwrap();
        assert!(!e2.exact && e2.hamming > 0.0);
    }
}
