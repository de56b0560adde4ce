use super::MetricError;

/// Unbiased pass@k: `1 - C(n - c, k) / C(n, k)` for `n` samples of which
/// `c` pass the verifier.
pub fn pass_at_k(n_samples: usize, n_correct: usize, k: usize) -> Result<f64, MetricError> {
    if n_correct > n_samples {
        return Err(MetricError::Domain(format!("n_correct ({n_correct}) > n_samples ({n_samples})")));
    }
    if k == 0 || k > n_samples {
        return Err(MetricError::KOutOfRange { k, n: n_samples });
    }
    let n_wrong = n_samples - n_correct;
    if n_wrong < k {
        return Ok(1.0);
    }
    // C(n-c, k) / C(n, k) = prod_{i<k} (n-c-i) / (n-i)
    let miss = (0..k).fold(1.0f64, |acc, i| acc * (n_wrong - i) as f64 / (n_samples - i) as f64);
    Ok(1.0 - miss)
}

/// Mean pass@k over problems given `(n_samples, n_correct)` per problem.
pub fn mean_pass_at_k(results: &[(usize, usize)], k: usize) -> Result<f64, MetricError> {
    if results.is_empty() {
        return Err(MetricError::Domain("no problems".into()));
    }
    let mut sum = 0.0;
    for &(n, c) in results {
        sum += pass_at_k(n, c, k)?;
    }
    Ok(sum / results.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_cases() {
        assert_eq!(pass_at_k(10, 0, 3).unwrap(), 0.0);
        assert_eq!(pass_at_k(10, 10, 3).unwrap(), 1.0);
    }

    #[test]
    fn five_samples_two_correct() {
        assert!((pass_at_k(5, 2, 1).unwrap() - 0.4).abs() < 1e-15);
        // 1 - C(3,2)/C(5,2) = 1 - 3/10
        assert!((pass_at_k(5, 2, 2).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(pass_at_k(5, 6, 1).is_err());
        assert!(pass_at_k(5, 2, 0).is_err());
        assert!(pass_at_k(5, 2, 6).is_err());
        assert!(mean_pass_at_k(&[], 1).is_err());
    }

    #[test]
    fn mean_over_problems() {
        let v = mean_pass_at_k(&[(5, 2), (4, 4)], 1).unwrap();
        assert!((v - 0.7).abs() < 1e-15);
    }
}
