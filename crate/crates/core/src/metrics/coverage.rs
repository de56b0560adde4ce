//! Detection rate, verifier accuracy and error-pattern diversity over a
//! kill matrix, for the full suite and for uniformly drawn k-subsuites.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MetricError;
use crate::hashing::derive_seed;
use crate::killmatrix::KillMatrix;
use crate::par::map_range;

/// Largest suite for which `dr_at_k` uses exact rational arithmetic.
pub const DR_EXACT_MAX_N: usize = 512;
/// Largest suite `vacc_at_k_exact` will enumerate.
pub const VACC_EXACT_MAX_N: usize = 20;
/// Trials per independently seeded Monte Carlo chunk.
const MC_CHUNK: usize = 1024;

fn require_solutions(matrix: &KillMatrix) -> Result<(), MetricError> {
    if matrix.m_solutions() == 0 {
        Err(MetricError::NoSolutions(matrix.problem_id.clone()))
    } else {
        Ok(())
    }
}

fn require_k(k: usize, n: usize) -> Result<(), MetricError> {
    if k == 0 || k > n {
        Err(MetricError::KOutOfRange { k, n })
    } else {
        Ok(())
    }
}

/// Mask of the valid column bits for each word of a row.
fn full_row(matrix: &KillMatrix) -> Vec<u64> {
    let m = matrix.m_solutions();
    (0..matrix.words_per_row())
        .map(|w| {
            let bits = (m - w * 64).min(64);
            if bits == 64 {
                u64::MAX
            } else {
                (1u64 << bits) - 1
            }
        })
        .collect()
}

/// Fraction of solutions exposed by at least one test.
pub fn detection_rate(matrix: &KillMatrix) -> Result<f64, MetricError> {
    require_solutions(matrix)?;
    let detected = (0..matrix.m_solutions())
        .filter(|&j| matrix.detect_count(j) > 0)
        .count();
    Ok(detected as f64 / matrix.m_solutions() as f64)
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// Expected detection rate of a uniformly random k-subsuite:
/// mean over solutions of `1 - C(n - d_j, k) / C(n, k)`, where `d_j` counts
/// the tests exposing solution j.
pub fn dr_at_k(matrix: &KillMatrix, k: usize) -> Result<f64, MetricError> {
    require_solutions(matrix)?;
    let n = matrix.n_tests();
    require_k(k, n)?;
    let m = matrix.m_solutions();
    let counts: Vec<usize> = (0..m).map(|j| matrix.detect_count(j)).collect();
    if n <= DR_EXACT_MAX_N {
        let total = binomial(n, k);
        let mut hits = BigUint::zero();
        for &d in &counts {
            hits += &total - binomial(n - d, k);
        }
        let ratio = BigRational::new(hits.into(), (total * BigUint::from(m)).into());
        return ratio.to_f64().ok_or(MetricError::Numeric("dr_at_k ratio"));
    }
    // C(n-d, k) / C(n, k) = prod_{i<k} (n-d-i)/(n-i); every factor is in [0, 1].
    let sum: f64 = counts
        .iter()
        .map(|&d| {
            if n - d < k {
                return 1.0;
            }
            let miss = (0..k).fold(1.0f64, |acc, i| acc * (n - d - i) as f64 / (n - i) as f64);
            1.0 - miss
        })
        .sum();
    Ok(sum / m as f64)
}

/// 1 when every solution is exposed by some test, else 0.
pub fn vacc(matrix: &KillMatrix) -> Result<f64, MetricError> {
    require_solutions(matrix)?;
    let all = (0..matrix.m_solutions()).all(|j| matrix.detect_count(j) > 0);
    Ok(if all { 1.0 } else { 0.0 })
}

fn covers(matrix: &KillMatrix, rows: impl Iterator<Item = usize>, full: &[u64], acc: &mut [u64]) -> bool {
    acc.iter_mut().for_each(|w| *w = 0);
    for i in rows {
        for (a, r) in acc.iter_mut().zip(matrix.row_words(i)) {
            *a |= r;
        }
        if acc == full {
            return true;
        }
    }
    acc == full
}

/// Exact probability that a uniform k-subsuite exposes every solution,
/// by enumerating all C(n, k) subsets. Limited to n <= 20.
pub fn vacc_at_k_exact(matrix: &KillMatrix, k: usize) -> Result<f64, MetricError> {
    require_solutions(matrix)?;
    let n = matrix.n_tests();
    require_k(k, n)?;
    if n > VACC_EXACT_MAX_N {
        return Err(MetricError::TooLargeForExact { n, max: VACC_EXACT_MAX_N });
    }
    let full = full_row(matrix);
    let mut acc = vec![0u64; full.len()];
    let mut good: u64 = 0;
    let mut total: u64 = 0;
    // Gosper's hack: iterate all n-bit masks with exactly k bits set.
    let limit: u64 = 1 << n;
    let mut mask: u64 = (1 << k) - 1;
    while mask < limit {
        total += 1;
        let rows = (0..n).filter(|i| mask >> i & 1 == 1);
        if covers(matrix, rows, &full, &mut acc) {
            good += 1;
        }
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    Ok(good as f64 / total as f64)
}

/// Monte Carlo estimate of `vacc_at_k_exact`. Trials are split into fixed
/// chunks with seeds derived from `(seed, chunk)`, so the estimate does not
/// depend on thread count.
pub fn vacc_at_k(matrix: &KillMatrix, k: usize, trials: usize, seed: u64) -> Result<f64, MetricError> {
    require_solutions(matrix)?;
    let n = matrix.n_tests();
    require_k(k, n)?;
    if trials == 0 {
        return Err(MetricError::Domain("trials must be at least 1".into()));
    }
    let full = full_row(matrix);
    let chunks = trials.div_ceil(MC_CHUNK);
    let hits: usize = map_range(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "vacc_at_k", c as u64));
        let mut acc = vec![0u64; full.len()];
        let this_chunk = MC_CHUNK.min(trials - c * MC_CHUNK);
        (0..this_chunk)
            .filter(|_| {
                let subset = rand::seq::index::sample(&mut rng, n, k);
                covers(matrix, subset.into_iter(), &full, &mut acc)
            })
            .count()
    })
    .into_iter()
    .sum();
    Ok(hits as f64 / trials as f64)
}

/// Number of distinct non-zero rows (error patterns).
pub fn depc(matrix: &KillMatrix) -> usize {
    let mut seen: HashSet<&[u64]> = HashSet::new();
    for i in 0..matrix.n_tests() {
        let row = matrix.row_words(i);
        if row.iter().any(|w| *w != 0) {
            seen.insert(row);
        }
    }
    seen.len()
}

/// `depc / n`, and 0 for an empty suite.
pub fn diversity_ratio(matrix: &KillMatrix) -> f64 {
    match matrix.n_tests() {
        0 => 0.0,
        n => depc(matrix) as f64 / n as f64,
    }
}
