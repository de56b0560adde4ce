//! Correlated-detection saturation model.
//!
//! With `n` tests each detecting a fault with probability `p` and common
//! pairwise correlation `rho`, the suite behaves like
//! `n_eff = n / (1 + (n - 1) rho)` independent tests, giving the approximate
//! detection bound `1 - (1 - p)^n_eff` and the plateau `1 - (1 - p)^(1/rho)`.
//!
//! The simulator realises the exchangeable model as a beta mixture: each
//! trial draws `q ~ Beta(alpha, beta)` and then conditionally independent
//! Bernoulli(q) detections, which has mean `p` and pairwise correlation
//! `rho`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::derive_seed;
use crate::par::map_range;

#[derive(Debug, Error, PartialEq)]
pub enum SaturationError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("limit is 1, independence regime (rho = 0)")]
    IndependenceLimit,
    #[error("no fit: {0}")]
    NoFit(String),
    #[error("curve parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn domain(msg: impl Into<String>) -> SaturationError {
    SaturationError::Domain(msg.into())
}

fn check_rho(rho: f64) -> Result<(), SaturationError> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(domain(format!("rho = {rho} outside [0, 1]")))
    }
}

fn check_p_closed(p: f64) -> Result<(), SaturationError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("p = {p} outside [0, 1]")))
    }
}

/// Effective number of independent tests.
pub fn n_eff(n: u64, rho: f64) -> Result<f64, SaturationError> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    check_rho(rho)?;
    let n = n as f64;
    Ok(n / (1.0 + (n - 1.0) * rho))
}

/// `1 - (1 - p)^n_eff`. Accepts `p` in `[0, 1]` and `rho` in `[0, 1]`.
pub fn dr_bound(n: u64, p: f64, rho: f64) -> Result<f64, SaturationError> {
    check_p_closed(p)?;
    let ne = n_eff(n, rho)?;
    // -expm1(ne * ln(1-p)) keeps precision when p is small.
    Ok(-(ne * (-p).ln_1p()).exp_m1())
}

/// Plateau of the bound as `n` grows. Strictly below 1.
pub fn asymptotic_limit(p: f64, rho: f64) -> Result<f64, SaturationError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("p = {p} outside (0, 1)")));
    }
    check_rho(rho)?;
    if rho == 0.0 {
        return Err(SaturationError::IndependenceLimit);
    }
    Ok(-((-p).ln_1p() / rho).exp_m1())
}

/// Validated model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationParams {
    pub p_bar: f64,
    pub rho_eff: f64,
    pub n: u64,
}

impl SaturationParams {
    /// `p_bar` in `(0, 1)`, `rho_eff` in `[0, 1]`, `n >= 1`.
    pub fn new(p_bar: f64, rho_eff: f64, n: u64) -> Result<Self, SaturationError> {
        if !(p_bar > 0.0 && p_bar < 1.0) {
            return Err(domain(format!("p_bar = {p_bar} outside (0, 1)")));
        }
        check_rho(rho_eff)?;
        if n == 0 {
            return Err(domain("n must be at least 1"));
        }
        Ok(SaturationParams { p_bar, rho_eff, n })
    }

    pub fn n_eff(&self) -> f64 {
        n_eff(self.n, self.rho_eff).expect("validated")
    }

    pub fn dr_upper_bound(&self) -> f64 {
        dr_bound(self.n, self.p_bar, self.rho_eff).expect("validated")
    }

    pub fn asymptotic_limit(&self) -> Result<f64, SaturationError> {
        asymptotic_limit(self.p_bar, self.rho_eff)
    }
}

pub fn dr_upper_bound(params: &SaturationParams) -> f64 {
    params.dr_upper_bound()
}

/// Beta parameters whose mixture has mean `p` and pairwise correlation `rho`.
pub fn beta_params_from(p: f64, rho: f64) -> Result<(f64, f64), SaturationError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("p = {p} outside (0, 1)")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(domain(format!("rho = {rho} outside (0, 1)")));
    }
    let total = 1.0 / rho - 1.0;
    Ok((p * total, (1.0 - p) * total))
}

/// Probability that none of `n` mixture draws detects:
/// `B(alpha, beta + n) / B(alpha, beta)`, as a running product.
pub fn no_detection_probability(alpha: f64, beta: f64, n: u64) -> f64 {
    (0..n).fold(1.0, |acc, i| {
        let i = i as f64;
        acc * (beta + i) / (alpha + beta + i)
    })
}

/// The detection-probability law used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `q` fixed at `p` (rho = 0, or p at 0 or 1).
    Independent { p: f64 },
    BetaMixture { alpha: f64, beta: f64 },
    /// rho = 1: `q` is 1 with probability `p`, else 0.
    AllOrNothing { p: f64 },
}

impl Generator {
    pub fn new(p: f64, rho: f64) -> Result<Generator, SaturationError> {
        check_p_closed(p)?;
        check_rho(rho)?;
        Ok(if rho == 0.0 || p == 0.0 || p == 1.0 {
            Generator::Independent { p }
        } else if rho == 1.0 {
            Generator::AllOrNothing { p }
        } else {
            let (alpha, beta) = beta_params_from(p, rho)?;
            Generator::BetaMixture { alpha, beta }
        })
    }

    fn sampler(&self) -> QSampler {
        match *self {
            Generator::Independent { p } => QSampler::Fixed(p),
            Generator::BetaMixture { alpha, beta } => {
                QSampler::Beta(Beta::new(alpha, beta).expect("positive beta parameters"))
            }
            Generator::AllOrNothing { p } => QSampler::Coin(p),
        }
    }

    /// Exact probability of at least one detection in `n` draws.
    pub fn detection_probability(&self, n: u64) -> f64 {
        match *self {
            Generator::Independent { p } => 1.0 - (1.0 - p).powf(n as f64),
            Generator::BetaMixture { alpha, beta } => 1.0 - no_detection_probability(alpha, beta, n),
            Generator::AllOrNothing { p } => {
                if n == 0 {
                    0.0
                } else {
                    p
                }
            }
        }
    }
}

enum QSampler {
    Fixed(f64),
    Beta(Beta<f64>),
    Coin(f64),
}

impl QSampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            QSampler::Fixed(p) => *p,
            QSampler::Beta(b) => b.sample(rng),
            QSampler::Coin(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Draws one exchangeable sequence of `n` detection indicators.
pub fn sample_detections<R: Rng>(generator: &Generator, n: usize, rng: &mut R) -> Vec<bool> {
    let q = generator.sampler().draw(rng);
    (0..n).map(|_| rng.random::<f64>() < q).collect()
}

/// Simulated DR curve: `points[i] = (n, fraction of trials detecting within
/// the first n draws)` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCurve {
    pub points: Vec<(u64, f64)>,
    pub trials: usize,
    pub seed: u64,
    pub p_bar: f64,
    pub rho: f64,
    pub generator: Generator,
}

const SIM_CHUNK: usize = 4096;

/// Seeded, parallel across fixed-size trial chunks; the result does not
/// depend on scheduling.
pub fn simulate_exchangeable(
    n_max: u64,
    p: f64,
    rho: f64,
    trials: usize,
    seed: u64,
) -> Result<SimCurve, SaturationError> {
    if trials == 0 {
        return Err(domain("trials must be at least 1"));
    }
    if n_max == 0 {
        return Err(domain("n_max must be at least 1"));
    }
    let generator = Generator::new(p, rho)?;
    let n_max_usize = usize::try_from(n_max).map_err(|_| domain("n_max too large"))?;
    let chunks = trials.div_ceil(SIM_CHUNK);
    let partial: Vec<Vec<u64>> = map_range(chunks, |c| {
        let sampler = generator.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "simulate_exchangeable", c as u64));
        let here = SIM_CHUNK.min(trials - c * SIM_CHUNK);
        // first_hit[i]: trials whose first detection is draw i
        let mut first_hit = vec![0u64; n_max_usize];
        for _ in 0..here {
            let q = sampler.draw(&mut rng);
            if q <= 0.0 {
                continue;
            }
            for slot in first_hit.iter_mut() {
                if rng.random::<f64>() < q {
                    *slot += 1;
                    break;
                }
            }
        }
        first_hit
    });
    let mut cumulative = 0u64;
    let mut points = Vec::with_capacity(n_max_usize);
    for i in 0..n_max_usize {
        cumulative += partial.iter().map(|v| v[i]).sum::<u64>();
        points.push((i as u64 + 1, cumulative as f64 / trials as f64));
    }
    Ok(SimCurve {
        points,
        trials,
        seed,
        p_bar: p,
        rho,
        generator,
    })
}

impl SimCurve {
    /// CSV with columns `n,dr,bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,dr,bound\n");
        for &(n, dr) in &self.points {
            let bound = dr_bound(n, self.p_bar, self.rho).expect("validated at simulation");
            let _ = writeln!(out, "{n},{dr},{bound}");
        }
        out
    }
}

/// Reads `n` and `dr` columns from a CSV with a header row; other columns
/// are ignored.
pub fn read_curve_csv(text: &str) -> Result<Vec<(u64, f64)>, SaturationError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(SaturationError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter().position(|c| *c == name).ok_or(SaturationError::Parse {
            line: 1,
            message: format!("missing `{name}` column"),
        })
    };
    let (n_col, dr_col) = (find("n")?, find("dr")?);
    let mut out = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |message: String| SaturationError::Parse { line: idx + 1, message };
        let get = |c: usize| fields.get(c).copied().ok_or_else(|| bad(format!("missing column {c}")));
        let n = get(n_col)?.parse::<u64>().map_err(|e| bad(e.to_string()))?;
        let dr = get(dr_col)?.parse::<f64>().map_err(|e| bad(e.to_string()))?;
        out.push((n, dr));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationFit {
    pub p_hat: f64,
    pub rho_hat: f64,
    pub rmse: f64,
}

const GRID: usize = 64;
const LOG_GRID_POINTS: usize = 32;
const P_MIN: f64 = 1e-9;
const RHO_MIN: f64 = 1e-9;

/// Keeps the points nearest to a log-spaced grid over the curve's n range.
fn log_spaced(curve: &[(u64, f64)]) -> Vec<(u64, f64)> {
    if curve.len() <= LOG_GRID_POINTS {
        return curve.to_vec();
    }
    let (lo, hi) = ((curve[0].0.max(1)) as f64, curve[curve.len() - 1].0 as f64);
    let mut picked: Vec<usize> = (0..LOG_GRID_POINTS)
        .map(|i| {
            let target = (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (LOG_GRID_POINTS - 1) as f64).exp();
            let pos = curve.partition_point(|&(n, _)| (n as f64) < target);
            match pos {
                0 => 0,
                p if p >= curve.len() => curve.len() - 1,
                p if (curve[p].0 as f64 - target) < (target - curve[p - 1].0 as f64) => p,
                p => p - 1,
            }
        })
        .collect();
    picked.dedup();
    picked.into_iter().map(|i| curve[i]).collect()
}

fn rmse(points: &[(u64, f64)], p: f64, rho: f64) -> f64 {
    let sse: f64 = points
        .iter()
        .map(|&(n, dr)| {
            let pred = dr_bound(n.max(1), p, rho).unwrap_or(f64::NAN);
            (pred - dr).powi(2)
        })
        .sum();
    (sse / points.len() as f64).sqrt()
}

fn clamp_params(x: [f64; 2]) -> [f64; 2] {
    [x[0].clamp(P_MIN, 1.0 - P_MIN), x[1].clamp(RHO_MIN, 1.0)]
}

/// Nelder-Mead over the clamped box, starting from `start`.
fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: f64) -> [f64; 2] {
    let eval = |x: [f64; 2]| {
        let x = clamp_params(x);
        (x, f(x))
    };
    let mut simplex = [
        eval(start),
        eval([start[0] + step, start[1]]),
        eval([start[0], start[1] + step]),
    ];
    for _ in 0..2000 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| (x[0] - simplex[0].0[0]).abs().max((x[1] - simplex[0].0[1]).abs()))
            .fold(0.0, f64::max);
        if diameter < 1e-10 {
            break;
        }
        let centroid = [
            (simplex[0].0[0] + simplex[1].0[0]) / 2.0,
            (simplex[0].0[1] + simplex[1].0[1]) / 2.0,
        ];
        let along = |t: f64| {
            eval([
                centroid[0] + t * (simplex[2].0[0] - centroid[0]),
                centroid[1] + t * (simplex[2].0[1] - centroid[1]),
            ])
        };
        let reflected = along(-1.0);
        if reflected.1 < simplex[0].1 {
            let expanded = along(-2.0);
            simplex[2] = if expanded.1 < reflected.1 { expanded } else { reflected };
        } else if reflected.1 < simplex[1].1 {
            simplex[2] = reflected;
        } else {
            let contracted = if reflected.1 < simplex[2].1 { along(-0.5) } else { along(0.5) };
            if contracted.1 < simplex[2].1.min(reflected.1) {
                simplex[2] = contracted;
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    *v = eval([(v.0[0] + best[0]) / 2.0, (v.0[1] + best[1]) / 2.0]);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0].0
}

/// Least-squares fit of the bound's functional form to an empirical curve:
/// 64x64 grid over `(p, rho)`, then Nelder-Mead from the best cell.
pub fn fit_saturation(curve: &[(u64, f64)]) -> Result<SaturationFit, SaturationError> {
    if curve.len() < 3 {
        return Err(domain("at least 3 points required"));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) || curve[0].0 == 0 {
        return Err(domain("n must be positive and strictly increasing"));
    }
    if let Some(&(n, dr)) = curve.iter().find(|(_, dr)| !(0.0..1.0).contains(dr)) {
        return Err(domain(format!("dr({n}) = {dr} outside [0, 1)")));
    }
    if curve.iter().all(|&(_, dr)| dr == 0.0) {
        return Err(SaturationError::NoFit("curve is identically zero".into()));
    }
    let points = log_spaced(curve);
    let objective = |x: [f64; 2]| rmse(&points, x[0], x[1]);
    let mut best = ([0.5, 0.5], f64::INFINITY);
    for i in 0..GRID {
        for j in 0..GRID {
            let x = [(i as f64 + 0.5) / GRID as f64, (j as f64 + 1.0) / GRID as f64];
            let v = objective(x);
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    let x = nelder_mead(objective, best.0, 1.0 / GRID as f64);
    Ok(SaturationFit {
        p_hat: x[0],
        rho_hat: x[1],
        rmse: rmse(curve, x[0], x[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_eff_values() {
        assert_eq!(n_eff(1, 0.7).unwrap(), 1.0);
        assert_eq!(n_eff(37, 0.0).unwrap(), 37.0);
        assert!((n_eff(100, 0.1).unwrap() - 100.0 / 10.9).abs() < 1e-12);
        assert!(n_eff(0, 0.1).is_err());
        assert!(n_eff(5, 1.5).is_err());
    }

    #[test]
    fn bound_values() {
        for n in [1, 2, 10, 1000] {
            assert!((dr_bound(n, 0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        }
        assert!((dr_bound(3, 0.5, 0.0).unwrap() - 0.875).abs() < 1e-15);
        let p = SaturationParams::new(0.2, 0.3, 1_000_000).unwrap();
        let limit = 1.0 - 0.8f64.powf(1.0 / 0.3);
        assert!((p.dr_upper_bound() - limit).abs() < 1e-3);
        assert!(SaturationParams::new(0.0, 0.3, 1).is_err());
    }

    #[test]
    fn limit_values() {
        assert_eq!(asymptotic_limit(0.5, 0.5).unwrap(), 0.75);
        assert_eq!(asymptotic_limit(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(asymptotic_limit(0.5, 0.0), Err(SaturationError::IndependenceLimit));
    }

    #[test]
    fn beta_parameters() {
        let (a, b) = beta_params_from(0.5, 0.5).unwrap();
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        assert!((1.0 / (a + b + 1.0) - 0.5).abs() < 1e-15);
        let (a, b) = beta_params_from(0.2, 0.25).unwrap();
        assert!((a - 0.6).abs() < 1e-12 && (b - 2.4).abs() < 1e-12);
        let (a, b) = beta_params_from(0.3, 0.999_999).unwrap();
        assert!(a + b < 1e-5);
        assert!(beta_params_from(0.3, 1.0).is_err());
    }

    #[test]
    fn simulation_boundaries() {
        let zero = simulate_exchangeable(20, 0.0, 0.4, 500, 1).unwrap();
        assert!(zero.points.iter().all(|&(_, dr)| dr == 0.0));
        let one = simulate_exchangeable(5, 1.0, 0.4, 500, 1).unwrap();
        assert!(one.points.iter().all(|&(_, dr)| dr == 1.0));
        let perfect = simulate_exchangeable(30, 0.5, 1.0, 20_000, 2).unwrap();
        let first = perfect.points[0].1;
        assert!(perfect.points.iter().all(|&(_, dr)| dr == first));
        assert!((first - 0.5).abs() < 0.02);
    }

    #[test]
    fn simulation_is_deterministic_and_monotone() {
        let a = simulate_exchangeable(50, 0.2, 0.3, 9000, 11).unwrap();
        let b = simulate_exchangeable(50, 0.2, 0.3, 9000, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.points.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_ne!(a, simulate_exchangeable(50, 0.2, 0.3, 9000, 12).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let c = simulate_exchangeable(10, 0.5, 1.0, 100, 3).unwrap();
        let text = c.to_csv();
        assert!(text.lines().skip(1).all(|l| l.ends_with(",0.5")));
        assert_eq!(read_curve_csv(&text).unwrap(), c.points);
        assert!(read_curve_csv("x,y\n1,2\n").is_err());
        assert!(matches!(read_curve_csv("n,dr\n1,zz\n"), Err(SaturationError::Parse { line: 2, .. })));
    }

    #[test]
    fn fit_recovers_bound_curve() {
        let curve: Vec<(u64, f64)> = (1..=100).map(|n| (n, dr_bound(n, 0.3, 0.2).unwrap())).collect();
        let fit = fit_saturation(&curve).unwrap();
        assert!((fit.p_hat - 0.3).abs() < 0.01, "{fit:?}");
        assert!((fit.rho_hat - 0.2).abs() < 0.01, "{fit:?}");
        assert!(fit.rmse < 1e-6, "{fit:?}");
    }

    #[test]
    fn fit_independent_curve_has_small_rho() {
        let curve: Vec<(u64, f64)> = (1..=60).map(|n| (n, 1.0 - 0.95f64.powi(n as i32))).collect();
        let fit = fit_saturation(&curve).unwrap();
        assert!(fit.rho_hat <= 0.02, "{fit:?}");
        assert!((fit.p_hat - 0.05).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(matches!(
            fit_saturation(&[(1, 0.0), (2, 0.0), (3, 0.0)]),
            Err(SaturationError::NoFit(_))
        ));
        assert!(fit_saturation(&[(1, 0.1), (2, 0.2)]).is_err());
        assert!(fit_saturation(&[(2, 0.1), (1, 0.2), (3, 0.3)]).is_err());
        assert!(fit_saturation(&[(1, 0.1), (2, 0.2), (3, 1.0)]).is_err());
    }
}
