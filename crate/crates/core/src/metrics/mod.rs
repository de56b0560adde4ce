//! Verifier-quality metrics over kill matrices.
//!
//! Per-problem reports are built by [`evaluate`] and combined by
//! [`aggregate`]: detection rate is macro-averaged (mean over solutions,
//! then over problems), verifier accuracy is the mean of per-problem
//! indicators, DEPC is summed and the diversity ratio is total DEPC over
//! total tests.

mod auc;
mod coverage;
mod mix;
mod pass_at_k;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use auc::{auc_at_n, CurvePoint};
pub use coverage::{
    depc, detection_rate, diversity_ratio, dr_at_k, vacc, vacc_at_k, vacc_at_k_exact, DR_EXACT_MAX_N,
    VACC_EXACT_MAX_N,
};
pub use mix::{mix_grid, mix_report, MixGrid, MixSource};
pub use pass_at_k::{mean_pass_at_k, pass_at_k};

use crate::hashing::derive_seed;
use crate::killmatrix::{KillMatrix, KillMatrixError};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric undefined for problem `{0}`: no incorrect solutions")]
    NoSolutions(String),
    #[error("k = {k} outside [1, {n}]")]
    KOutOfRange { k: usize, n: usize },
    #[error("n = {n} exceeds the exact-enumeration limit of {max}")]
    TooLargeForExact { n: usize, max: usize },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric conversion failed: {0}")]
    Numeric(&'static str),
    #[error(transparent)]
    Matrix(#[from] KillMatrixError),
}

pub const DEFAULT_K_LIST: [usize; 8] = [1, 2, 5, 10, 20, 30, 40, 50];
pub const AGGREGATE_SCOPE: &str = "all";

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub k_list: Vec<usize>,
    pub k_min: usize,
    /// Upper end `N` of the AUC window.
    pub n_max: usize,
    pub seed: u64,
    pub mc_trials: usize,
    /// Keep compile-error columns in metric denominators.
    pub include_ce: bool,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            k_list: DEFAULT_K_LIST.to_vec(),
            k_min: 1,
            n_max: 50,
            seed: 0,
            mc_trials: 2000,
            include_ce: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: usize,
    pub dr_at_k: f64,
    pub vacc_at_k: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curves {
    pub dr: Vec<CurvePoint>,
    pub vacc: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Problem id, or [`AGGREGATE_SCOPE`] for the cross-problem summary.
    pub scope: String,
    pub n_tests: usize,
    pub m_solutions: usize,
    pub excluded_ce: usize,
    pub dr_full: Option<f64>,
    pub vacc_full: Option<f64>,
    pub depc: usize,
    pub diversity_ratio: f64,
    pub curves: Vec<CurveRow>,
    pub auc_at_n: Option<f64>,
    pub protocol: Protocol,
}

/// DR@k and VAcc@k at each k. DR@k is always exact; VAcc@k is enumerated
/// exactly for suites of at most [`VACC_EXACT_MAX_N`] tests and estimated by
/// Monte Carlo otherwise, with the seed for each k derived from
/// `(seed, problem_id, k)`.
pub fn compute_curves(matrix: &KillMatrix, k_list: &[usize], trials: usize, seed: u64) -> Result<Curves, MetricError> {
    let mut ks = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut curves = Curves::default();
    for k in ks {
        let dr = dr_at_k(matrix, k)?;
        let acc = if matrix.n_tests() <= VACC_EXACT_MAX_N {
            vacc_at_k_exact(matrix, k)?
        } else {
            vacc_at_k(matrix, k, trials, derive_seed(seed, &matrix.problem_id, k as u64))?
        };
        curves.dr.push(CurvePoint::new(k, dr));
        curves.vacc.push(CurvePoint::new(k, acc));
    }
    Ok(curves)
}

/// Full report for one problem. Suite sizes in `k_list` larger than the
/// suite are skipped; AUC@N is `None` unless the curve reaches both
/// `k_min` and `N`. A problem with no incorrect solutions reports `None`
/// for DR and VAcc.
pub fn evaluate(matrix: &KillMatrix, protocol: &Protocol) -> Result<MetricReport, MetricError> {
    let effective = if protocol.include_ce {
        matrix.clone()
    } else {
        matrix.without_ce()
    };
    let excluded_ce = matrix.m_solutions() - effective.m_solutions();
    let n = effective.n_tests();
    let defined = effective.m_solutions() > 0;
    let ks: Vec<usize> = protocol.k_list.iter().copied().filter(|&k| k >= 1 && k <= n).collect();
    let curves = if defined {
        compute_curves(&effective, &ks, protocol.mc_trials, protocol.seed)?
    } else {
        Curves::default()
    };
    let auc = auc_at_n(&curves.vacc, protocol.k_min, protocol.n_max).ok();
    Ok(MetricReport {
        scope: matrix.problem_id.clone(),
        n_tests: n,
        m_solutions: effective.m_solutions(),
        excluded_ce,
        dr_full: if defined { Some(detection_rate(&effective)?) } else { None },
        vacc_full: if defined { Some(vacc(&effective)?) } else { None },
        depc: depc(&effective),
        diversity_ratio: diversity_ratio(&effective),
        curves: curves
            .dr
            .iter()
            .zip(&curves.vacc)
            .map(|(d, v)| CurveRow {
                k: d.k,
                dr_at_k: d.value,
                vacc_at_k: v.value,
            })
            .collect(),
        auc_at_n: auc,
        protocol: protocol.clone(),
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Cross-problem summary of per-problem reports.
pub fn aggregate(reports: &[MetricReport], protocol: &Protocol) -> MetricReport {
    let n_tests: usize = reports.iter().map(|r| r.n_tests).sum();
    let depc: usize = reports.iter().map(|r| r.depc).sum();
    let mut by_k: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in reports.iter().flat_map(|r| &r.curves) {
        let e = by_k.entry(row.k).or_default();
        e.0.push(row.dr_at_k);
        e.1.push(row.vacc_at_k);
    }
    let curves = by_k
        .into_iter()
        .map(|(k, (dr, acc))| CurveRow {
            k,
            dr_at_k: mean(dr.into_iter()).unwrap_or(0.0),
            vacc_at_k: mean(acc.into_iter()).unwrap_or(0.0),
        })
        .collect();
    MetricReport {
        scope: AGGREGATE_SCOPE.to_string(),
        n_tests,
        m_solutions: reports.iter().map(|r| r.m_solutions).sum(),
        excluded_ce: reports.iter().map(|r| r.excluded_ce).sum(),
        dr_full: mean(reports.iter().filter_map(|r| r.dr_full)),
        vacc_full: mean(reports.iter().filter_map(|r| r.vacc_full)),
        depc,
        diversity_ratio: if n_tests == 0 { 0.0 } else { depc as f64 / n_tests as f64 },
        curves,
        auc_at_n: mean(reports.iter().filter_map(|r| r.auc_at_n)),
        protocol: protocol.clone(),
    }
}

/// One row per (scope, metric, k); `k` is empty for whole-suite metrics.
pub fn reports_to_csv(reports: &[MetricReport]) -> String {
    let mut out = String::from("scope,metric,k,value\n");
    for r in reports {
        let s = &r.scope;
        let _ = writeln!(out, "{s},n_tests,,{}", r.n_tests);
        let _ = writeln!(out, "{s},m_solutions,,{}", r.m_solutions);
        if let Some(v) = r.dr_full {
            let _ = writeln!(out, "{s},dr,,{v}");
        }
        if let Some(v) = r.vacc_full {
            let _ = writeln!(out, "{s},vacc,,{v}");
        }
        let _ = writeln!(out, "{s},depc,,{}", r.depc);
        let _ = writeln!(out, "{s},diversity_ratio,,{}", r.diversity_ratio);
        if let Some(v) = r.auc_at_n {
            let _ = writeln!(out, "{s},auc_at_n,,{v}");
        }
        for c in &r.curves {
            let _ = writeln!(out, "{s},dr_at_k,{},{}", c.k, c.dr_at_k);
        }
        for c in &r.curves {
            let _ = writeln!(out, "{s},vacc_at_k,{},{}", c.k, c.vacc_at_k);
        }
    }
    out
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}%", v * 100.0))
}

pub fn reports_to_markdown(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| scope | tests | wrong | DR | VAcc | DEPC | DivRatio | AUC@N |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
    for r in reports {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            r.scope,
            r.n_tests,
            r.m_solutions,
            pct(r.dr_full),
            pct(r.vacc_full),
            r.depc,
            pct(Some(r.diversity_ratio)),
            r.auc_at_n.map_or_else(|| "n/a".into(), |v| format!("{v:.4}")),
        );
    }
    out
}
