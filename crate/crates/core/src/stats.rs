//! Survival functions, tail-exponent estimation and stationarity checks for
//! sampled intensity series.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::point_process::SampledSeries;

/// Minimum number of grid points in a log-log fit.
pub const MIN_FIT_POINTS: usize = 10;

pub const DEFAULT_POINTS_PER_DECADE: usize = 20;

/// Upper 1% point of the Anderson–Darling statistic for a fully specified
/// continuous null distribution.
pub const AD_CRITICAL_1PCT: f64 = 3.857;

/// Log-spaced thresholds `10^(j/per_decade)` inside `[lo, hi]`, aligned so
/// that powers of ten are grid points.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || per_decade == 0 {
        return Vec::new();
    }
    let pd = per_decade as f64;
    let first = (lo.log10() * pd - 1e-9).ceil() as i64;
    let last = (hi.log10() * pd + 1e-9).floor() as i64;
    (first..=last).map(|j| 10f64.powf(j as f64 / pd)).collect()
}

/// Fraction of `sorted` (ascending) that is `>= level`.
pub fn survival_fraction(sorted: &[f64], level: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let below = sorted.partition_point(|&x| x < level);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical `E(Λ) = P[λ ≥ Λ]` on a threshold grid. Thresholds above every
/// sample are dropped, so all stored probabilities are positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub n_samples: usize,
}

impl SurvivalCurve {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

pub fn empirical_survival(samples: &[f64], grid: &[f64]) -> Result<SurvivalCurve> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain(
            "survival grid must be strictly increasing".into(),
        ));
    }
    Ok(survival_of_sorted(&sorted_copy(samples), grid))
}

fn survival_of_sorted(sorted: &[f64], grid: &[f64]) -> SurvivalCurve {
    let mut curve = SurvivalCurve {
        thresholds: Vec::with_capacity(grid.len()),
        probabilities: Vec::with_capacity(grid.len()),
        n_samples: sorted.len(),
    };
    for &level in grid {
        let p = survival_fraction(sorted, level);
        if p == 0.0 {
            break;
        }
        curve.thresholds.push(level);
        curve.probabilities.push(p);
    }
    curve
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub fit_min: f64,
    pub fit_max: f64,
    pub n_points: usize,
}

/// Ordinary least squares of `ln E(Λ)` on `ln Λ` over the grid points in
/// `[fit_min, fit_max]`.
pub fn fit_tail_exponent(curve: &SurvivalCurve, fit_min: f64, fit_max: f64) -> Result<TailFit> {
    if !(fit_min > 0.0 && fit_max > fit_min && fit_max.is_finite()) {
        return Err(Error::DegenerateRange {
            min: fit_min,
            max: fit_max,
        });
    }
    let lo = fit_min * (1.0 - 1e-12);
    let hi = fit_max * (1.0 + 1e-12);
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .thresholds
        .iter()
        .zip(&curve.probabilities)
        .filter(|(&t, &p)| t >= lo && t <= hi && p > 0.0)
        .map(|(t, p)| (t.ln(), p.ln()))
        .unzip();
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            found: n,
            needed: MIN_FIT_POINTS,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(TailFit {
        slope,
        stderr,
        intercept,
        fit_min,
        fit_max,
        n_points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HillEstimate {
    /// `−α̂`, comparable with [`TailFit::slope`].
    pub exponent: f64,
    /// Asymptotic standard error `α̂/√k`.
    pub stderr: f64,
    pub k: usize,
    /// The (k+1)-th largest sample.
    pub threshold: f64,
}

/// Hill estimator over the top `k` order statistics.
pub fn hill_estimator(samples: &[f64], k: usize) -> Result<HillEstimate> {
    let n = samples.len();
    if k < 10 || k >= n {
        return Err(Error::InsufficientSamples(format!(
            "need 10 <= k < n, got k = {k} with n = {n}"
        )));
    }
    let mut desc = samples.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let threshold = desc[k];
    if !(threshold > 0.0) {
        return Err(Error::InsufficientSamples(format!(
            "order statistic {threshold} is not positive"
        )));
    }
    let sum: f64 = desc[..k].iter().map(|&x| (x / threshold).ln()).sum();
    if !(sum > 0.0) {
        return Err(Error::InsufficientSamples(
            "no positive excesses above the threshold".into(),
        ));
    }
    let alpha = k as f64 / sum;
    Ok(HillEstimate {
        exponent: -alpha,
        stderr: alpha / (k as f64).sqrt(),
        k,
        threshold,
    })
}

/// Anderson–Darling statistic of `samples` against Exponential(`rate`).
pub fn anderson_darling_exponential(samples: &[f64], rate: f64) -> f64 {
    let n = samples.len();
    let mut u: Vec<f64> = samples.iter().map(|&x| -(-rate * x).exp_m1()).collect();
    u.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let lo = u[i].max(f64::MIN_POSITIVE).ln();
        let hi = (1.0 - u[n - 1 - i]).max(f64::MIN_POSITIVE).ln();
        acc += (2.0 * i as f64 + 1.0) * (lo + hi);
    }
    -nf - acc / nf
}

/// Mid-ranks, ties share the average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankCorrelation {
    /// Spearman's ρ; zero when either side is constant.
    pub rho: f64,
    /// Two-sided p-value for ρ = 0.
    pub p_value: f64,
}

/// Largest sample size for the exact permutation p-value.
const EXACT_PERMUTATION_MAX: usize = 10;

/// Spearman rank correlation of `y` against its index `0..n`. The p-value is
/// exact (full permutation distribution) for n ≤ 10 and uses the Student-t
/// approximation above that.
pub fn trend_rank_correlation(y: &[f64]) -> RankCorrelation {
    let n = y.len();
    let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let ry = ranks(y);
    let Some(rho) = (n >= 3).then(|| pearson(&x, &ry)).flatten() else {
        return RankCorrelation {
            rho: 0.0,
            p_value: 1.0,
        };
    };
    let p_value = if n <= EXACT_PERMUTATION_MAX {
        exact_permutation_p(&ry)
    } else {
        let df = (n - 2) as f64;
        let r = rho.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * (1.0 - dist.cdf(t.abs()))).min(1.0)
    };
    RankCorrelation { rho, p_value }
}

/// Fraction of permutations of `ry` whose covariance with the index is at
/// least as extreme as the observed one.
fn exact_permutation_p(ry: &[f64]) -> f64 {
    let n = ry.len();
    let mean_x = (n as f64 - 1.0) / 2.0;
    let stat = |v: &[f64]| -> f64 {
        v.iter()
            .enumerate()
            .map(|(i, r)| (i as f64 - mean_x) * r)
            .sum()
    };
    let observed = stat(ry).abs() - 1e-9;
    let mut perm = ry.to_vec();
    let mut counts = vec![0usize; n];
    let (mut extreme, mut total) = (0u64, 0u64);
    let mut tally = |v: &[f64]| {
        total += 1;
        if stat(v).abs() >= observed {
            extreme += 1;
        }
    };
    // Heap's algorithm
    tally(&perm);
    let mut i = 0;
    while i < n {
        if counts[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counts[i], i);
            }
            tally(&perm);
            counts[i] += 1;
            i = 0;
        } else {
            counts[i] = 0;
            i += 1;
        }
    }
    extreme as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityConfig {
    pub n_windows: usize,
    /// Spacing between retained samples inside a window.
    pub subsample_gap: f64,
    /// Largest acceptable sup-distance between window survival curves.
    pub threshold: f64,
    /// Curves are compared on `Λ ≥ min_level` only.
    pub min_level: f64,
    /// Level whose exceedance probability is tested for a monotone trend.
    pub trend_level: f64,
    pub points_per_decade: usize,
    /// Trend significance level.
    pub alpha: f64,
}

impl StationarityConfig {
    /// Defaults for a process with baseline `baseline` and Zumbach decay `omega`.
    pub fn for_process(baseline: f64, omega: f64, n_windows: usize) -> Self {
        Self {
            n_windows,
            subsample_gap: 10.0 / omega,
            threshold: 0.1,
            min_level: 10.0 * baseline,
            trend_level: 100.0,
            points_per_decade: DEFAULT_POINTS_PER_DECADE,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub window_boundaries: Vec<f64>,
    pub curves: Vec<SurvivalCurve>,
    pub max_pairwise_distance: f64,
    /// `E(trend_level)` per window.
    pub trend_values: Vec<f64>,
    pub trend: RankCorrelation,
    pub pass: bool,
}

/// Splits `series` into equal windows and compares their survival curves.
pub fn stationarity_diagnostic(
    series: &SampledSeries,
    cfg: &StationarityConfig,
) -> Result<StationarityReport> {
    if cfg.n_windows < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 windows, got {}",
            cfg.n_windows
        )));
    }
    if !(cfg.subsample_gap > 0.0) {
        return Err(Error::Domain(format!(
            "subsample gap must be > 0, got {}",
            cfg.subsample_gap
        )));
    }
    let span = series.len() as f64 * series.dt;
    let needed = cfg.n_windows as f64 * 10.0 * cfg.subsample_gap;
    if span < needed {
        return Err(Error::InsufficientSpan { span, needed });
    }
    let per_window = series.len() / cfg.n_windows;
    let step = ((cfg.subsample_gap / series.dt).round() as usize).max(1);
    let windows: Vec<Vec<f64>> = (0..cfg.n_windows)
        .map(|w| {
            let slice = &series.values[w * per_window..(w + 1) * per_window];
            sorted_copy(&slice.iter().step_by(step).copied().collect::<Vec<_>>())
        })
        .collect();
    let window_boundaries = (0..=cfg.n_windows)
        .map(|w| series.time(w * per_window))
        .collect();

    let top = windows
        .iter()
        .filter_map(|w| w.last().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = log_grid(cfg.min_level, top, cfg.points_per_decade);
    let mut max_pairwise_distance = 0.0f64;
    for &level in &grid {
        let (lo, hi) = windows
            .iter()
            .map(|w| survival_fraction(w, level))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p), hi.max(p))
            });
        max_pairwise_distance = max_pairwise_distance.max(hi - lo);
    }
    let curves = windows
        .iter()
        .map(|w| survival_of_sorted(w, &grid))
        .collect();
    let trend_values: Vec<f64> = windows
        .iter()
        .map(|w| survival_fraction(w, cfg.trend_level))
        .collect();
    let trend = trend_rank_correlation(&trend_values);
    let pass = max_pairwise_distance <= cfg.threshold && trend.p_value > cfg.alpha;
    Ok(StationarityReport {
        window_boundaries,
        curves,
        max_pairwise_distance,
        trend_values,
        trend,
        pass,
    })
}

/// Cumulative mean at every sample.
pub fn running_mean(series: &SampledSeries) -> Result<SampledSeries> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut acc = 0.0;
    let values = series
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            acc += v;
            acc / (i + 1) as f64
        })
        .collect();
    Ok(SampledSeries {
        t0: series.t0,
        dt: series.dt,
        values,
    })
}

/// Largest relative change of a running mean across consecutive blocks of
/// `block` samples, considering only samples at times `>= from`.
pub fn max_block_jump(running: &SampledSeries, block: usize, from: f64) -> f64 {
    let start = running.after(from);
    start
        .values
        .iter()
        .step_by(block.max(1))
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[0].abs())
        .fold(0.0, f64::max)
}
