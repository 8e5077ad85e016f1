//! Monte Carlo harnesses: bandwidth bias study, test calibration under
//! white noise, and total-memory validation on the preset settings.
//!
//! Each trial derives its own seed from the base seed, so results do not
//! depend on how many threads run them. Rows come back in parameter order.

use std::f64::consts::PI;

use longmem::gse::sqrt_bandwidth;
use longmem::inference::{total_memory_test, wald_test, Alternative};
use longmem::simulate::{multivariate_fd, trial_seed, MultiFdSpec, Preset};
use longmem::{estimate, periodogram, GseConfig, MemoryVector, TimeSeries};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub const THREADS_ENV: &str = "LONGMEM_THREADS";

/// Thread pool sized by `LONGMEM_THREADS`: unset uses every core, `0` runs
/// trials sequentially, `k` caps the pool at `k` threads.
pub fn trial_pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Err(_) => 0,
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(0) => 1,
            Ok(k) => k,
            Err(_) => {
                return Err(CliError::validation(
                    "invalid_input",
                    format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'"),
                ))
            }
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::validation("io", e.to_string()))
}

/// Runs `f(0..n)` on the trial pool and returns results in trial order.
pub fn run_trials<T, F>(n: usize, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> CliResult<T> + Sync + Send,
{
    let pool = trial_pool()?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

fn check_trials(n: usize) -> CliResult<()> {
    if n == 0 {
        return Err(CliError::validation("invalid_input", "trial count must be at least 1"));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; `NaN` for fewer than two values.
fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub window: usize,
    pub bandwidth: usize,
    /// Largest frequency used, `2π m / N`.
    pub cutoff: f64,
    /// Mean over trials of the normalized total memory (`d̂` when `p = 1`).
    pub d_hat: f64,
    pub d_hat_sd: f64,
}

/// Fits the first `N` samples with `m = ⌊√N⌋` for every window `N`, over
/// `trials` series drawn by `draw(trial_seed)`.
pub fn bias_study<F>(windows: &[usize], trials: usize, seed: u64, draw: F) -> CliResult<Vec<BiasRow>>
where
    F: Fn(u64) -> longmem::Result<TimeSeries> + Sync + Send,
{
    check_trials(trials)?;
    if windows.is_empty() {
        return Err(CliError::validation("invalid_input", "window list is empty"));
    }
    let mut windows = windows.to_vec();
    windows.sort_unstable();
    windows.dedup();
    let longest = *windows.last().unwrap();

    let per_trial = run_trials(trials, |t| {
        let x = draw(trial_seed(seed, t))?;
        if x.len() < longest {
            return Err(CliError::validation(
                "invalid_input",
                format!("window {longest} exceeds the series length {}", x.len()),
            ));
        }
        windows
            .iter()
            .map(|&n| {
                let pg = periodogram(&x.head(n)?)?;
                Ok(estimate(&pg, &GseConfig::sqrt_rule(n))?.normalized_total_memory())
            })
            .collect::<CliResult<Vec<f64>>>()
    })?;

    Ok(windows
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let vals: Vec<f64> = per_trial.iter().map(|r| r[k]).collect();
            let m = sqrt_bandwidth(n);
            BiasRow {
                window: n,
                bandwidth: m,
                cutoff: 2.0 * PI * m as f64 / n as f64,
                d_hat: mean(&vals),
                d_hat_sd: sample_variance(&vals).sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct CalibrateSpec {
    pub dim: usize,
    pub length: usize,
    pub bandwidths: Vec<usize>,
    pub trials: usize,
    pub alpha: f64,
    pub alternative: Alternative,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub bandwidth: usize,
    /// `None` when the row is degenerate (`m < p`) or every fit failed.
    pub wald_type1: Option<f64>,
    pub tm_type1: Option<f64>,
    /// Trials whose fit succeeded.
    pub fitted: usize,
    pub degenerate: bool,
}

/// Empirical rejection rates of the Wald test of `d = 0` and of the total
/// memory test of `Σd = 0` on Gaussian white noise.
pub fn calibrate(spec: &CalibrateSpec) -> CliResult<Vec<CalibrationRow>> {
    check_trials(spec.trials)?;
    if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
        return Err(CliError::validation("invalid_input", format!("alpha = {} outside (0, 1]", spec.alpha)));
    }
    if spec.bandwidths.is_empty() {
        return Err(CliError::validation("invalid_input", "bandwidth list is empty"));
    }
    let mut bandwidths = spec.bandwidths.clone();
    bandwidths.sort_unstable();
    bandwidths.dedup();
    let n_freq = (spec.length.saturating_sub(1)) / 2;
    if let Some(&m) = bandwidths.iter().find(|&&m| m == 0 || m > n_freq) {
        return Err(CliError::validation(
            "invalid_input",
            format!("bandwidth {m} outside 1..={n_freq} for length {}", spec.length),
        ));
    }

    let zeros = MemoryVector::zeros(spec.dim);
    let per_trial = run_trials(spec.trials, |t| {
        let x = multivariate_fd(&MultiFdSpec::new(zeros.clone(), spec.length, trial_seed(spec.seed, t)))?;
        let pg = periodogram(&x)?;
        Ok(bandwidths
            .iter()
            .map(|&m| {
                if m < spec.dim {
                    return None;
                }
                let fit = estimate(&pg, &GseConfig::new(m)).ok()?;
                let wald = wald_test(&fit, &zeros, spec.alpha).ok()?;
                let tm = total_memory_test(&fit, 0.0, spec.alternative, spec.alpha).ok()?;
                Some((wald.reject, tm.reject))
            })
            .collect::<Vec<_>>())
    })?;

    Ok(bandwidths
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let outcomes: Vec<(bool, bool)> = per_trial.iter().filter_map(|r| r[k]).collect();
            let fitted = outcomes.len();
            let rate = |pick: fn(&(bool, bool)) -> bool| {
                (fitted > 0).then(|| outcomes.iter().filter(|o| pick(o)).count() as f64 / fitted as f64)
            };
            CalibrationRow {
                bandwidth: m,
                wald_type1: rate(|o| o.0),
                tm_type1: rate(|o| o.1),
                fitted,
                degenerate: m < spec.dim,
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct ValidateSpec {
    pub preset: Preset,
    pub dim: usize,
    pub length: usize,
    /// `None` selects `⌊√T⌋`.
    pub bandwidth: Option<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub preset: Preset,
    pub dim: usize,
    pub length: usize,
    pub bandwidth: usize,
    pub trials: usize,
    /// The memory vector every trial was simulated with.
    pub true_d: MemoryVector,
    pub true_normalized: f64,
    pub mean: f64,
    pub variance: f64,
    /// `p / (4 m p²)`, the asymptotic variance of the normalized total.
    pub reference_variance: f64,
    pub total_variance: f64,
    /// `p / (4 m)`, the asymptotic variance of the un-normalized total.
    pub total_reference_variance: f64,
    pub converged: usize,
}

/// Sample mean and variance of the normalized total memory across trials
/// of the preset's multivariate fractional noise. The preset's memory
/// vector is drawn once from the base seed and shared by every trial.
pub fn validate_tm(spec: &ValidateSpec) -> CliResult<ValidationSummary> {
    check_trials(spec.trials)?;
    let d = spec.preset.memory(spec.dim, spec.seed)?;
    let m = spec.bandwidth.unwrap_or_else(|| sqrt_bandwidth(spec.length));
    let fits = run_trials(spec.trials, |t| {
        let x = multivariate_fd(&MultiFdSpec::new(d.clone(), spec.length, trial_seed(spec.seed, t)))?;
        let fit = estimate(&periodogram(&x)?, &GseConfig::new(m))?;
        Ok((fit.normalized_total_memory(), fit.converged))
    })?;
    let normalized: Vec<f64> = fits.iter().map(|f| f.0).collect();
    let p = spec.dim as f64;
    let variance = sample_variance(&normalized);
    Ok(ValidationSummary {
        preset: spec.preset,
        dim: spec.dim,
        length: spec.length,
        bandwidth: m,
        trials: spec.trials,
        true_normalized: mean(d.as_slice()),
        true_d: d,
        mean: mean(&normalized),
        variance,
        reference_variance: 1.0 / (4.0 * m as f64 * p),
        total_variance: variance * p * p,
        total_reference_variance: p / (4.0 * m as f64),
        converged: fits.iter().filter(|f| f.1).count(),
    })
}
