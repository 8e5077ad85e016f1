//! Time-domain summaries: sample autocovariances, the autocovariance-trace
//! partial sums used to eyeball long memory, the closed-form fractional
//! noise autocorrelation, and predictability curves `R²(h)`.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::simulate::frac_diff_coeffs;
use crate::spectral::{demean, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct AutocovSequence {
    /// `γ̂(k)` for `k = 0..=max_lag`.
    pub matrices: Vec<DMatrix<f64>>,
}

impl AutocovSequence {
    pub fn max_lag(&self) -> usize {
        self.matrices.len() - 1
    }

    /// `γ̂_{ii}(k) / γ̂_{ii}(0)` for one coordinate.
    pub fn autocorrelation(&self, coord: usize) -> Vec<f64> {
        let c0 = self.matrices[0][(coord, coord)];
        self.matrices.iter().map(|g| g[(coord, coord)] / c0).collect()
    }
}

/// Biased sample autocovariance `γ̂(k) = T⁻¹ Σ_{t=1}^{T-k} (x_t - x̄)(x_{t+k} - x̄)ᵀ`.
pub fn autocovariance(x: &TimeSeries, max_lag: usize) -> Result<AutocovSequence> {
    let t_len = x.len();
    if max_lag >= t_len {
        return Err(Error::InvalidInput(format!(
            "max lag {max_lag} must be below the series length {t_len}"
        )));
    }
    let xc = demean(x).into_inner();
    let matrices = (0..=max_lag)
        .map(|k| {
            let head = xc.rows(0, t_len - k);
            let tail = xc.rows(k, t_len - k);
            head.transpose() * tail / t_len as f64
        })
        .collect();
    Ok(AutocovSequence { matrices })
}

/// Cumulative sums `S_K = Σ_{k≤K} Tr|γ̂(k)|` (element-wise absolute value).
pub fn acov_trace_partial_sums(acv: &AutocovSequence) -> Vec<f64> {
    acv.matrices
        .iter()
        .scan(0.0, |acc, g| {
            *acc += g.diagonal().iter().map(|v| v.abs()).sum::<f64>();
            Some(*acc)
        })
        .collect()
}

/// Autocorrelation of fractional noise,
/// `ρ(k) = Γ(1-d)Γ(k+d) / (Γ(d)Γ(k+1-d))`, via `ρ(k) = ρ(k-1)(k-1+d)/(k-d)`.
pub fn fd_theoretical_acf(d: f64, max_lag: usize) -> Result<Vec<f64>> {
    if !(d.abs() < 0.5) {
        return Err(Error::InvalidInput(format!("memory parameter d = {d} outside (-1/2, 1/2)")));
    }
    let mut rho = Vec::with_capacity(max_lag + 1);
    rho.push(1.0);
    for k in 1..=max_lag {
        let k = k as f64;
        let prev = *rho.last().unwrap();
        rho.push(prev * (k - 1.0 + d) / (k - d));
    }
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WoldModel {
    /// AR(1), Wold weights `φ^j`.
    Ar1 { phi: f64 },
    /// Fractional noise, Wold weights `ψ_j(d)`.
    FracDiff { d: f64 },
}

/// Share of variance predictable `h` steps ahead from the infinite past,
/// `R²(h) = Σ_{j≥h} a_j² / Σ_{j≥0} a_j²`.
///
/// The denominator is evaluated in closed form (`1/(1-φ²)` and
/// `Γ(1-2d)/Γ(1-d)²`), so only the finite head `Σ_{j<h} a_j²` is summed.
pub fn r_squared_horizon(model: WoldModel, horizons: &[usize]) -> Result<Vec<f64>> {
    let max_h = horizons.iter().copied().max().unwrap_or(0);
    let (weights, total) = match model {
        WoldModel::Ar1 { phi } => {
            if !(phi.abs() < 1.0) {
                return Err(Error::InvalidInput(format!("AR coefficient {phi} must satisfy |φ| < 1")));
            }
            let w: Vec<f64> = (0..max_h).map(|j| phi.powi(j as i32)).collect();
            (w, 1.0 / (1.0 - phi * phi))
        }
        WoldModel::FracDiff { d } => {
            if !(d.abs() < 0.5) {
                return Err(Error::InvalidInput(format!("memory parameter d = {d} outside (-1/2, 1/2)")));
            }
            let total = (ln_gamma(1.0 - 2.0 * d) - 2.0 * ln_gamma(1.0 - d)).exp();
            (frac_diff_coeffs(d, max_h), total)
        }
    };
    let mut head = Vec::with_capacity(max_h + 1);
    head.push(0.0);
    for w in &weights {
        head.push(head.last().unwrap() + w * w);
    }
    Ok(horizons.iter().map(|&h| (1.0 - head[h] / total).max(0.0)).collect())
}
