use serde::{Deserialize, Serialize};

use super::MetricError;

/// One point of an accuracy-vs-suite-size curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub value: f64,
}

impl CurvePoint {
    pub fn new(k: usize, value: f64) -> Self {
        CurvePoint { k, value }
    }
}

/// Normalised trapezoidal area under `curve` between `k_min` and `n_max`:
///
/// `1/(N - k_min) * sum_i (Acc(k_i) + Acc(k_{i+1}))/2 * (k_{i+1} - k_i)`
///
/// over the points with `k_min <= k <= N`. The curve must have strictly
/// increasing `k` and contain points at both `k_min` and `N`.
pub fn auc_at_n(curve: &[CurvePoint], k_min: usize, n_max: usize) -> Result<f64, MetricError> {
    if n_max <= k_min {
        return Err(MetricError::InvalidCurve(format!("N ({n_max}) must exceed k_min ({k_min})")));
    }
    if let Some(w) = curve.windows(2).find(|w| w[1].k <= w[0].k) {
        return Err(MetricError::InvalidCurve(format!(
            "k must be strictly increasing (saw {} then {})",
            w[0].k, w[1].k
        )));
    }
    let window: Vec<&CurvePoint> = curve.iter().filter(|p| p.k >= k_min && p.k <= n_max).collect();
    match (window.first(), window.last()) {
        (Some(first), Some(last)) if first.k == k_min && last.k == n_max => {}
        _ => {
            return Err(MetricError::InvalidCurve(format!(
                "curve needs points at k_min = {k_min} and N = {n_max}"
            )))
        }
    }
    let area: f64 = window
        .windows(2)
        .map(|w| (w[0].value + w[1].value) / 2.0 * (w[1].k - w[0].k) as f64)
        .sum();
    Ok(area / (n_max - k_min) as f64)
}
