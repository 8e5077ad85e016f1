//! Gaussian semiparametric (local Whittle) estimation of the memory vector.
//!
//! For a bandwidth `m` the profiled objective is
//!
//! ```text
//! R(d) = log det Ĝ(d) - 2 Σ_i d_i · (1/m) Σ_{j≤m} log λ_j
//! Ĝ(d)_{hk} = (1/m) Σ_{j≤m} Re[ I_{hk}(λ_j) exp(c⁺_j d_h + c⁻_j d_k) ]
//! c±_j = log λ_j ± i(π - λ_j)/2
//! ```
//!
//! and the estimate is its minimizer over a slightly shrunk box inside
//! `(-1/2, 1/2)^p`.

use std::f64::consts::PI;
use std::ops::Index;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optim;
use crate::spectral::{check_bandwidth, Periodogram};

/// Memory parameter `d`, each coordinate in the open interval `(-1/2, 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryVector(Vec<f64>);

impl MemoryVector {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidInput("memory vector is empty".into()));
        }
        if let Some((i, v)) = d.iter().enumerate().find(|(_, v)| !(v.abs() < 0.5)) {
            return Err(Error::InvalidInput(format!(
                "memory parameter d[{i}] = {v} outside (-1/2, 1/2)"
            )));
        }
        Ok(Self(d))
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub fn constant(p: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for MemoryVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Diagonal of the local transfer approximation `Λ(d) = diag(λ^{-d} e^{i(π-λ)/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaDiag {
    pub entries: Vec<Complex64>,
}

pub fn lambda_diag(lambda: f64, d: &MemoryVector) -> Result<LambdaDiag> {
    if !(lambda > 0.0 && lambda <= PI) {
        return Err(Error::InvalidInput(format!("frequency {lambda} outside (0, π]")));
    }
    let phase = (PI - lambda) / 2.0;
    let entries = d
        .as_slice()
        .iter()
        .map(|&di| Complex64::from_polar(lambda.powf(-di), phase))
        .collect();
    Ok(LambdaDiag { entries })
}

#[derive(Debug, Clone)]
pub struct GseConfig {
    pub bandwidth: usize,
    pub box_margin: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Starting point; `None` starts from `d = 0`.
    pub init: Option<MemoryVector>,
}

impl GseConfig {
    pub fn new(bandwidth: usize) -> Self {
        Self { bandwidth, box_margin: 1e-3, grad_tol: 1e-8, max_iters: 500, init: None }
    }

    /// Bandwidth `⌊√T⌋` for a series of length `T`.
    pub fn sqrt_rule(len: usize) -> Self {
        Self::new(sqrt_bandwidth(len))
    }

    fn validate(&self, pg: &Periodogram) -> Result<()> {
        check_bandwidth(pg, self.bandwidth)?;
        if !(self.box_margin > 0.0 && self.box_margin < 0.25) {
            return Err(Error::InvalidInput(format!(
                "box margin {} outside (0, 1/4)",
                self.box_margin
            )));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidInput("gradient tolerance must be positive".into()));
        }
        if let Some(init) = &self.init {
            if init.len() != pg.dim() {
                return Err(Error::InvalidInput(format!(
                    "initial point has dimension {} but the series has {}",
                    init.len(),
                    pg.dim()
                )));
            }
        }
        Ok(())
    }
}

pub fn sqrt_bandwidth(len: usize) -> usize {
    let mut m = (len as f64).sqrt() as usize;
    while (m + 1) * (m + 1) <= len {
        m += 1;
    }
    while m * m > len {
        m -= 1;
    }
    m
}

#[derive(Debug, Clone)]
pub struct GseFit {
    pub d_hat: MemoryVector,
    /// `Ĝ(d̂)`, symmetric.
    pub g_hat: DMatrix<f64>,
    pub objective: f64,
    /// Norm of the projected gradient at `d̂`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub bandwidth: usize,
    pub converged: bool,
    /// Coordinates sitting on the shrunk box boundary.
    pub active_bounds: Vec<usize>,
}

impl GseFit {
    pub fn total_memory(&self) -> f64 {
        self.d_hat.as_slice().iter().sum()
    }

    pub fn normalized_total_memory(&self) -> f64 {
        self.total_memory() / self.d_hat.len() as f64
    }
}

/// Per-frequency constants shared by the objective and its gradient.
struct Band {
    log_freq: Vec<f64>,
    half_phase: Vec<f64>,
    mean_log_freq: f64,
}

impl Band {
    fn new(pg: &Periodogram, m: usize) -> Self {
        let freqs = &pg.freqs()[..m];
        let log_freq: Vec<f64> = freqs.iter().map(|l| l.ln()).collect();
        let half_phase = freqs.iter().map(|l| (PI - l) / 2.0).collect();
        let mean_log_freq = log_freq.iter().sum::<f64>() / m as f64;
        Self { log_freq, half_phase, mean_log_freq }
    }

    /// `exp(c⁺_j d)`.
    fn weight(&self, j: usize, d: f64) -> Complex64 {
        Complex64::new(self.log_freq[j], self.half_phase[j]).scale(d).exp()
    }

    fn c_plus(&self, j: usize) -> Complex64 {
        Complex64::new(self.log_freq[j], self.half_phase[j])
    }
}

fn check_inputs(pg: &Periodogram, d: &MemoryVector, m: usize) -> Result<()> {
    check_bandwidth(pg, m)?;
    if d.len() != pg.dim() {
        return Err(Error::InvalidInput(format!(
            "memory vector has dimension {} but the periodogram has {}",
            d.len(),
            pg.dim()
        )));
    }
    Ok(())
}

/// Rotated factors `z_j = diag(exp(c⁺_j d)) y_j` split into real and
/// imaginary parts, one column per frequency.
fn rotated_factors(y: &[DVector<Complex64>], band: &Band, d: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = d.len();
    let m = band.log_freq.len();
    let mut re = DMatrix::zeros(p, m);
    let mut im = DMatrix::zeros(p, m);
    for j in 0..m {
        for h in 0..p {
            let z = y[j][h] * band.weight(j, d[h]);
            re[(h, j)] = z.re;
            im[(h, j)] = z.im;
        }
    }
    (re, im)
}

fn g_hat_unchecked(pg: &Periodogram, band: &Band, d: &[f64]) -> DMatrix<f64> {
    let m = band.log_freq.len();
    let p = d.len();
    let mut g = match pg.factors() {
        Some(y) => {
            let (re, im) = rotated_factors(y, band, d);
            &re * re.transpose() + &im * im.transpose()
        }
        None => {
            let mut g = DMatrix::zeros(p, p);
            for j in 0..m {
                let w: Vec<Complex64> = d.iter().map(|&dh| band.weight(j, dh)).collect();
                for h in 0..p {
                    for k in 0..p {
                        g[(h, k)] += (pg.entry(j, h, k) * w[h] * w[k].conj()).re;
                    }
                }
            }
            g
        }
    };
    g /= m as f64;
    // Exact symmetry; the two triangles differ only by rounding.
    let gt = g.transpose();
    (g + gt) * 0.5
}

/// `Ĝ(d)`, the profiled local spectral level.
pub fn g_hat(pg: &Periodogram, d: &MemoryVector, m: usize) -> Result<DMatrix<f64>> {
    check_inputs(pg, d, m)?;
    Ok(g_hat_unchecked(pg, &Band::new(pg, m), d.as_slice()))
}

fn factorize(g: DMatrix<f64>, m: usize) -> Result<Cholesky<f64, Dyn>> {
    let p = g.nrows();
    let scale = g.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
    let degenerate = Error::DegenerateCovariance { bandwidth: m, dim: p };
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(degenerate);
    }
    let chol = Cholesky::new(g).ok_or_else(|| degenerate.clone())?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b * b));
    if min_pivot <= 1e-13 * scale {
        return Err(degenerate);
    }
    Ok(chol)
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

fn value_and_grad(pg: &Periodogram, band: &Band, d: &[f64], want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
    let m = band.log_freq.len();
    let p = d.len();
    let sum_d: f64 = d.iter().sum();
    let chol = factorize(g_hat_unchecked(pg, band, d), m)?;
    let value = log_det(&chol) - 2.0 * sum_d * band.mean_log_freq;
    if !want_grad {
        return Ok((value, None));
    }
    let inv = chol.inverse();
    let mut grad = vec![-2.0 * band.mean_log_freq; p];
    let scale = 2.0 / m as f64;
    match pg.factors() {
        Some(y) => {
            // r_{jℓ} = z_ℓ (Ĝ⁻¹ z̄)_ℓ, gradient_ℓ += (2/m) Re[c⁺_j r_{jℓ}].
            let (re, im) = rotated_factors(y, band, d);
            let u = &inv * &re;
            let v = &inv * &im;
            for j in 0..m {
                let (lf, th) = (band.log_freq[j], band.half_phase[j]);
                for l in 0..p {
                    let (a, b) = (re[(l, j)], im[(l, j)]);
                    let r_re = a * u[(l, j)] + b * v[(l, j)];
                    let r_im = b * u[(l, j)] - a * v[(l, j)];
                    grad[l] += scale * (lf * r_re - th * r_im);
                }
            }
        }
        None => {
            for j in 0..m {
                let w: Vec<Complex64> = d.iter().map(|&dh| band.weight(j, dh)).collect();
                let cp = band.c_plus(j);
                for l in 0..p {
                    let r: Complex64 = (0..p)
                        .map(|k| pg.entry(j, l, k) * w[l] * w[k].conj() * inv[(k, l)])
                        .sum();
                    grad[l] += scale * (cp * r).re;
                }
            }
        }
    }
    Ok((value, Some(grad)))
}

/// Profiled local Whittle objective `R(d)`.
pub fn objective(pg: &Periodogram, d: &MemoryVector, m: usize) -> Result<f64> {
    check_inputs(pg, d, m)?;
    Ok(value_and_grad(pg, &Band::new(pg, m), d.as_slice(), false)?.0)
}

/// Analytic gradient of [`objective`].
pub fn gradient(pg: &Periodogram, d: &MemoryVector, m: usize) -> Result<Vec<f64>> {
    check_inputs(pg, d, m)?;
    let (_, g) = value_and_grad(pg, &Band::new(pg, m), d.as_slice(), true)?;
    Ok(g.expect("gradient requested"))
}

/// `∂Ĝ(d)/∂d_ℓ`, assembled entry by entry.
///
/// Only row and column `ℓ` are nonzero: off-diagonal entries in row `ℓ`
/// carry `c⁺_j`, those in column `ℓ` carry `c⁻_j`, and the diagonal entry
/// carries `2 log λ_j`.
pub fn g_hat_derivative(pg: &Periodogram, d: &MemoryVector, m: usize, ell: usize) -> Result<DMatrix<f64>> {
    check_inputs(pg, d, m)?;
    let p = d.len();
    if ell >= p {
        return Err(Error::InvalidInput(format!("coordinate {ell} out of range for dimension {p}")));
    }
    let band = Band::new(pg, m);
    let ds = d.as_slice();
    let mut out = DMatrix::zeros(p, p);
    for j in 0..m {
        let cp = band.c_plus(j);
        let cm = cp.conj();
        let lf = band.log_freq[j];
        for k in 0..p {
            if k == ell {
                let v = 2.0 * pg.entry(j, ell, ell).re * lf * (2.0 * ds[ell] * lf).exp();
                out[(ell, ell)] += v;
            } else {
                out[(ell, k)] += (pg.entry(j, ell, k) * cp * (cp * ds[ell]).exp() * (cm * ds[k]).exp()).re;
                out[(k, ell)] += (pg.entry(j, k, ell) * cm * (cp * ds[k]).exp() * (cm * ds[ell]).exp()).re;
            }
        }
    }
    Ok(out / m as f64)
}

/// Minimizes `R(d)` over `[-1/2 + ε, 1/2 - ε]^p`.
pub fn estimate(pg: &Periodogram, cfg: &GseConfig) -> Result<GseFit> {
    cfg.validate(pg)?;
    let p = pg.dim();
    let m = cfg.bandwidth;
    if m < p {
        return Err(Error::BandwidthBelowDimension { bandwidth: m, dim: p });
    }
    let band = Band::new(pg, m);
    let hi = 0.5 - cfg.box_margin;
    let lower = vec![-hi; p];
    let upper = vec![hi; p];
    let init = cfg.init.clone().unwrap_or_else(|| MemoryVector::zeros(p));
    let opts = optim::Options { grad_tol: cfg.grad_tol, max_iters: cfg.max_iters, memory: 10 };
    let out = optim::minimize(
        |d| {
            let (v, g) = value_and_grad(pg, &band, d, true)?;
            Ok((v, g.expect("gradient requested")))
        },
        init.as_slice(),
        &lower,
        &upper,
        opts,
    )?;
    let g_hat = g_hat_unchecked(pg, &band, &out.x);
    let active_bounds = out
        .x
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= hi)
        .map(|(i, _)| i)
        .collect();
    Ok(GseFit {
        d_hat: MemoryVector(out.x),
        g_hat,
        objective: out.value,
        grad_norm: out.grad_norm,
        iterations: out.iterations,
        bandwidth: m,
        converged: out.converged,
        active_bounds,
    })
}

/// Objective values at each grid point, restricted to `coords`.
///
/// Points where `Ĝ` is degenerate yield `NaN`. Output order follows `grid`.
pub fn objective_grid(
    pg: &Periodogram,
    m: usize,
    coords: &[usize],
    grid: &[MemoryVector],
) -> Result<Vec<(MemoryVector, f64)>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("objective grid is empty".into()));
    }
    if coords.is_empty() || coords.len() > 2 {
        return Err(Error::InvalidInput("grid must name one or two coordinates".into()));
    }
    let sub = pg.select(coords)?;
    check_bandwidth(&sub, m)?;
    if let Some(bad) = grid.iter().find(|g| g.len() != coords.len()) {
        return Err(Error::InvalidInput(format!(
            "grid point of dimension {} does not match {} coordinates",
            bad.len(),
            coords.len()
        )));
    }
    let band = Band::new(&sub, m);
    Ok(grid
        .par_iter()
        .map(|d| {
            let v = value_and_grad(&sub, &band, d.as_slice(), false).map_or(f64::NAN, |(v, _)| v);
            (d.clone(), v)
        })
        .collect())
}

/// Log-periodogram regression slope of `log I_{cc}(λ_j)` on `-2 log λ_j`.
pub fn gph_estimate(pg: &Periodogram, coord: usize, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidInput("log-periodogram regression needs m >= 2".into()));
    }
    let pts = crate::spectral::log_periodogram_points(pg, coord, m)?;
    Ok(ols_slope(&pts))
}

pub(crate) fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fourier_freqs;
    use approx::assert_relative_eq;

    fn power_law(t_len: usize, delta: f64) -> Periodogram {
        let freqs = fourier_freqs(t_len);
        let ord: Vec<f64> = freqs.iter().map(|l| l.powf(-2.0 * delta)).collect();
        Periodogram::from_scalar(freqs, &ord).unwrap()
    }

    fn grid_argmin(pg: &Periodogram, m: usize, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n)
            .map(|i| lo + i as f64 * step)
            .map(|d| (d, objective(pg, &MemoryVector::new(vec![d]).unwrap(), m).unwrap()))
            .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
            .0
    }

    #[test]
    fn lambda_diag_examples() {
        let l = 0.7;
        let z = lambda_diag(l, &MemoryVector::zeros(3)).unwrap();
        for e in &z.entries {
            assert_relative_eq!(e.norm(), 1.0, epsilon = 1e-15);
            assert_relative_eq!(e.arg(), (PI - l) / 2.0, epsilon = 1e-15);
        }
        let d = MemoryVector::new(vec![0.1, -0.3]).unwrap();
        let at_pi = lambda_diag(PI, &d).unwrap();
        for (e, di) in at_pi.entries.iter().zip(d.as_slice()) {
            assert_relative_eq!(e.re, PI.powf(-di), epsilon = 1e-15);
            assert!(e.im.abs() < 1e-15);
        }
        let q = lambda_diag(PI / 2.0, &MemoryVector::new(vec![0.25]).unwrap()).unwrap();
        assert_relative_eq!(q.entries[0].norm(), 0.8932, epsilon = 1e-4);
        assert!(lambda_diag(0.0, &d).is_err());
    }

    #[test]
    fn g_hat_scalar_at_zero_is_mean_ordinate() {
        let freqs = fourier_freqs(101);
        let ord: Vec<f64> = (0..freqs.len()).map(|j| 1.0 + (j as f64).sin().abs()).collect();
        let pg = Periodogram::from_scalar(freqs, &ord).unwrap();
        let g = g_hat(&pg, &MemoryVector::zeros(1), 10).unwrap();
        assert_relative_eq!(g[(0, 0)], ord[..10].iter().sum::<f64>() / 10.0, epsilon = 1e-14);
    }

    #[test]
    fn g_hat_of_zero_periodogram_is_zero() {
        let freqs = fourier_freqs(40);
        let pg = Periodogram::from_scalar(freqs, &[0.0; 19]).unwrap();
        assert_eq!(g_hat(&pg, &MemoryVector::new(vec![0.2]).unwrap(), 5).unwrap()[(0, 0)], 0.0);
        assert!(matches!(
            objective(&pg, &MemoryVector::zeros(1), 5),
            Err(Error::DegenerateCovariance { .. })
        ));
    }

    #[test]
    fn g_hat_fixed_vector_matches_direct_sum() {
        let freqs = fourier_freqs(64);
        let m = 8;
        let y = DVector::from_vec(vec![Complex64::new(0.3, -1.1), Complex64::new(-0.7, 0.4)]);
        let mats: Vec<_> = freqs.iter().map(|_| &y * y.adjoint()).collect();
        let pg = Periodogram::from_matrices(freqs.clone(), mats).unwrap();
        let g = g_hat(&pg, &MemoryVector::zeros(2), m).unwrap();
        // Scalar loop over j with D = e^{i(π-λ)/2}·I.
        let mut want = [[0.0; 2]; 2];
        for lam in &freqs[..m] {
            let dj = Complex64::from_polar(1.0, (PI - lam) / 2.0);
            for h in 0..2 {
                for k in 0..2 {
                    want[h][k] += (y[h] / dj * (y[k] / dj).conj()).re / m as f64;
                }
            }
        }
        for h in 0..2 {
            for k in 0..2 {
                assert_relative_eq!(g[(h, k)], want[h][k], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn flat_objective_minimized_at_zero() {
        let freqs = fourier_freqs(512);
        let pg = Periodogram::from_scalar(freqs.clone(), &vec![2.0; freqs.len()]).unwrap();
        assert!(grid_argmin(&pg, 22, -0.4, 0.4, 0.01).abs() < 1e-12);
        let at0 = objective(&pg, &MemoryVector::zeros(1), 22).unwrap();
        assert_relative_eq!(at0, 2.0f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn power_law_objective_minimized_at_delta() {
        for delta in [-0.35, 0.0, 0.15, 0.3] {
            let pg = power_law(1024, delta);
            let best = grid_argmin(&pg, 32, -0.49, 0.49, 1e-3);
            assert!((best - delta).abs() <= 1e-3 + 1e-12, "{delta} -> {best}");
            let g = gradient(&pg, &MemoryVector::new(vec![delta]).unwrap(), 32).unwrap();
            assert!(g[0].abs() < 1e-8);
        }
    }

    #[test]
    fn estimate_exact_minimizers() {
        let pg = power_law(4096, 0.25);
        let fit = estimate(&pg, &GseConfig::new(64)).unwrap();
        assert!(fit.converged);
        assert!((fit.d_hat[0] - 0.25).abs() < 1e-4);

        let freqs = fourier_freqs(4096);
        let flat = Periodogram::from_scalar(freqs.clone(), &vec![0.3; freqs.len()]).unwrap();
        let fit = estimate(&flat, &GseConfig::new(64)).unwrap();
        assert!(fit.d_hat[0].abs() < 1e-6);
        assert!(fit.active_bounds.is_empty());
    }

    #[test]
    fn estimate_respects_box() {
        let pg = power_law(4096, 0.7);
        let fit = estimate(&pg, &GseConfig::new(64)).unwrap();
        assert_relative_eq!(fit.d_hat[0], 0.499, epsilon = 1e-12);
        assert_eq!(fit.active_bounds, vec![0]);
        assert!(fit.converged);
    }

    #[test]
    fn estimate_rejects_bandwidth_below_dimension() {
        let freqs = fourier_freqs(64);
        let mats: Vec<_> = freqs.iter().map(|_| DMatrix::<Complex64>::identity(3, 3)).collect();
        let pg = Periodogram::from_matrices(freqs, mats).unwrap();
        assert!(matches!(
            estimate(&pg, &GseConfig::new(2)),
            Err(Error::BandwidthBelowDimension { bandwidth: 2, dim: 3 })
        ));
    }

    #[test]
    fn gph_exact_and_constant() {
        let freqs = fourier_freqs(2048);
        let ord: Vec<f64> = freqs.iter().map(|l| 3.7 * l.powf(-0.5)).collect();
        let pg = Periodogram::from_scalar(freqs.clone(), &ord).unwrap();
        assert_relative_eq!(gph_estimate(&pg, 0, 40).unwrap(), 0.25, epsilon = 1e-10);
        let pg = Periodogram::from_scalar(freqs.clone(), &vec![5.0; freqs.len()]).unwrap();
        assert!(gph_estimate(&pg, 0, 40).unwrap().abs() < 1e-12);
        assert!(gph_estimate(&pg, 0, 1).is_err());
    }

    #[test]
    fn objective_grid_matches_objective() {
        let pg = power_law(1024, 0.2);
        let grid: Vec<_> = (-4..=4).map(|i| MemoryVector::new(vec![i as f64 * 0.1]).unwrap()).collect();
        let out = objective_grid(&pg, 20, &[0], &grid).unwrap();
        for (d, v) in &out {
            assert_eq!(*v, objective(&pg, d, 20).unwrap());
        }
        assert!(objective_grid(&pg, 20, &[0], &[]).is_err());
    }

    #[test]
    fn objective_grid_records_nan_for_degenerate_points() {
        let freqs = fourier_freqs(64);
        let pg = Periodogram::from_scalar(freqs, &vec![0.0; 31]).unwrap();
        let out = objective_grid(&pg, 4, &[0], &[MemoryVector::zeros(1)]).unwrap();
        assert!(out[0].1.is_nan());
    }
}
