//! Discrete Fourier transform and periodogram of multivariate series.
//!
//! Frequencies are the positive Fourier frequencies `λ_j = 2πj/T` for
//! `j = 1..=⌊(T-1)/2⌋`; index 0 of every returned vector corresponds to `j = 1`.
//! The transform uses the `1/√(2πT)` normalization with time running over
//! `t = 1..=T`, so a unit-variance white noise has `E[I(λ_j)] = 1/(2π)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// A `T × p` real series, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: DMatrix<f64>,
}

impl TimeSeries {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::TooShort { needed: 2, got: values.nrows() });
        }
        if values.ncols() == 0 {
            return Err(Error::InvalidInput("series has no columns".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (t, i) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite entry at row {}, column {}",
                t + 1,
                i + 1
            )));
        }
        Ok(Self { values })
    }

    /// Scalar series from a slice.
    pub fn from_column(column: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(column.len(), 1, column))
    }

    /// Builds a series from per-coordinate columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let len = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidInput("columns have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(len, columns.len(), |t, i| columns[i][t]))
    }

    /// Builds a series from rows (time steps).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("rows have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), p, |t, i| rows[t][i]))
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let t = self.len();
        &self.values.as_slice()[i * t..(i + 1) * t]
    }

    /// The first `n` observations.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::InvalidInput(format!(
                "requested {n} observations from a series of length {}",
                self.len()
            )));
        }
        Self::new(self.values.rows(0, n).into_owned())
    }

    /// The sub-series made of the listed coordinates, in the listed order.
    pub fn select(&self, coords: &[usize]) -> Result<Self> {
        if let Some(&bad) = coords.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::InvalidInput(format!(
                "coordinate {bad} out of range for dimension {}",
                self.dim()
            )));
        }
        Self::new(self.values.select_columns(coords))
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.values * c)
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }
}

/// DFT ordinates at the positive Fourier frequencies.
#[derive(Debug, Clone)]
pub struct FourierCoefficients {
    pub freqs: Vec<f64>,
    pub coeffs: Vec<DVector<Complex64>>,
}

#[derive(Debug, Clone)]
enum Storage {
    /// `I(λ_j) = y_j y_j*`, kept as the rank-one factor.
    Factored(Vec<DVector<Complex64>>),
    Dense(Vec<DMatrix<Complex64>>),
}

/// Periodogram matrices `I(λ_j)` at the positive Fourier frequencies.
///
/// Periodograms computed from data keep only the DFT vectors `y_j`; the
/// `p × p` matrices are materialized on demand.
#[derive(Debug, Clone)]
pub struct Periodogram {
    freqs: Vec<f64>,
    dim: usize,
    storage: Storage,
}

impl Periodogram {
    pub fn from_coefficients(fc: FourierCoefficients) -> Result<Self> {
        if fc.freqs.len() != fc.coeffs.len() {
            return Err(Error::InvalidInput("frequency and coefficient counts differ".into()));
        }
        check_freqs(&fc.freqs)?;
        let dim = fc.coeffs.first().map_or(0, |y| y.len());
        if fc.coeffs.iter().any(|y| y.len() != dim) {
            return Err(Error::InvalidInput("coefficient vectors have unequal length".into()));
        }
        Ok(Self { freqs: fc.freqs, dim, storage: Storage::Factored(fc.coeffs) })
    }

    /// Periodogram from explicit Hermitian matrices (used for synthetic
    /// spectra and tests).
    pub fn from_matrices(freqs: Vec<f64>, matrices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if freqs.len() != matrices.len() {
            return Err(Error::InvalidInput("frequency and matrix counts differ".into()));
        }
        check_freqs(&freqs)?;
        let dim = matrices.first().map_or(0, |m| m.nrows());
        for (j, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidInput(format!("matrix {j} is not {dim}×{dim}")));
            }
            let scale = m.norm().max(f64::MIN_POSITIVE);
            if (m - m.adjoint()).norm() > 1e-10 * scale {
                return Err(Error::InvalidInput(format!("matrix {j} is not Hermitian")));
            }
            if m.diagonal().iter().any(|v| v.re < 0.0) {
                return Err(Error::InvalidInput(format!("matrix {j} has a negative diagonal")));
            }
        }
        Ok(Self { freqs, dim, storage: Storage::Dense(matrices) })
    }

    /// Scalar periodogram with the given ordinates.
    pub fn from_scalar(freqs: Vec<f64>, ordinates: &[f64]) -> Result<Self> {
        if let Some(j) = ordinates.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!("ordinate {j} is negative or non-finite")));
        }
        let coeffs = ordinates
            .iter()
            .map(|v| DVector::from_element(1, Complex64::new(v.sqrt(), 0.0)))
            .collect();
        Self::from_coefficients(FourierCoefficients { freqs, coeffs })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Rank-one factors `y_j`, when the periodogram was computed from data.
    pub fn factors(&self) -> Option<&[DVector<Complex64>]> {
        match &self.storage {
            Storage::Factored(y) => Some(y),
            Storage::Dense(_) => None,
        }
    }

    pub fn matrix(&self, j: usize) -> DMatrix<Complex64> {
        match &self.storage {
            Storage::Factored(y) => &y[j] * y[j].adjoint(),
            Storage::Dense(m) => m[j].clone(),
        }
    }

    /// Entry `(h, k)` of `I(λ_j)`.
    pub fn entry(&self, j: usize, h: usize, k: usize) -> Complex64 {
        match &self.storage {
            Storage::Factored(y) => y[j][h] * y[j][k].conj(),
            Storage::Dense(m) => m[j][(h, k)],
        }
    }

    /// Real diagonal ordinate `I_{ii}(λ_j)`.
    pub fn diag(&self, j: usize, coord: usize) -> f64 {
        match &self.storage {
            Storage::Factored(y) => y[j][coord].norm_sqr(),
            Storage::Dense(m) => m[j][(coord, coord)].re,
        }
    }

    /// Restriction to the listed coordinates.
    pub fn select(&self, coords: &[usize]) -> Result<Self> {
        if let Some(&bad) = coords.iter().find(|&&c| c >= self.dim) {
            return Err(Error::InvalidInput(format!(
                "coordinate {bad} out of range for dimension {}",
                self.dim
            )));
        }
        let storage = match &self.storage {
            Storage::Factored(y) => Storage::Factored(
                y.iter().map(|v| DVector::from_fn(coords.len(), |i, _| v[coords[i]])).collect(),
            ),
            Storage::Dense(m) => Storage::Dense(
                m.iter().map(|a| a.select_rows(coords).select_columns(coords)).collect(),
            ),
        };
        Ok(Self { freqs: self.freqs.clone(), dim: coords.len(), storage })
    }
}

fn check_freqs(freqs: &[f64]) -> Result<()> {
    if freqs.iter().any(|&f| !(f > 0.0 && f <= PI)) {
        return Err(Error::InvalidInput("frequencies must lie in (0, π]".into()));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("frequencies must be strictly increasing".into()));
    }
    Ok(())
}

/// Positive Fourier frequencies `2πj/T`, `j = 1..=⌊(T-1)/2⌋`.
pub fn fourier_freqs(len: usize) -> Vec<f64> {
    let n = len.saturating_sub(1) / 2;
    (1..=n).map(|j| 2.0 * PI * j as f64 / len as f64).collect()
}

/// Subtracts the column means.
pub fn demean(x: &TimeSeries) -> TimeSeries {
    let mut values = x.values.clone();
    for mut col in values.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    TimeSeries { values }
}

/// `y_j = (2πT)^{-1/2} Σ_{t=1}^T x_t e^{-iλ_j t}`. Does not demean.
pub fn dft(x: &TimeSeries) -> Result<FourierCoefficients> {
    let t_len = x.len();
    if t_len < 3 {
        return Err(Error::TooShort { needed: 3, got: t_len });
    }
    let freqs = fourier_freqs(t_len);
    let n = freqs.len();
    let p = x.dim();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(t_len);
    let norm = 1.0 / (2.0 * PI * t_len as f64).sqrt();
    // The FFT sums over t-1 = 0..T-1; the extra e^{-iλ_j} restores t = 1..T.
    let phase: Vec<Complex64> =
        freqs.iter().map(|&f| Complex64::from_polar(norm, -f)).collect();

    let mut coeffs = vec![DVector::<Complex64>::zeros(p); n];
    let mut buf = vec![Complex64::new(0.0, 0.0); t_len];
    for i in 0..p {
        for (b, &v) in buf.iter_mut().zip(x.column(i)) {
            *b = Complex64::new(v, 0.0);
        }
        fft.process(&mut buf);
        for (j, y) in coeffs.iter_mut().enumerate() {
            y[i] = buf[j + 1] * phase[j];
        }
    }
    Ok(FourierCoefficients { freqs, coeffs })
}

/// Demeans, transforms and forms `I(λ_j) = y_j y_j*`.
pub fn periodogram(x: &TimeSeries) -> Result<Periodogram> {
    Periodogram::from_coefficients(dft(&demean(x))?)
}

/// Points `(-2 log λ_j, log I_{cc}(λ_j))` for `j = 1..=m`.
pub fn log_periodogram_points(pg: &Periodogram, coord: usize, m: usize) -> Result<Vec<(f64, f64)>> {
    check_bandwidth(pg, m)?;
    check_coord(pg, coord)?;
    (0..m)
        .map(|j| {
            let v = pg.diag(j, coord);
            if v > 0.0 {
                Ok((-2.0 * pg.freqs[j].ln(), v.ln()))
            } else {
                Err(Error::ZeroOrdinate { j: j + 1 })
            }
        })
        .collect()
}

/// Flat moving average of the diagonal ordinates over `2·halfwidth + 1`
/// neighbours, truncated at both ends.
pub fn smoothed_periodogram(pg: &Periodogram, coord: usize, halfwidth: usize) -> Result<Vec<(f64, f64)>> {
    check_coord(pg, coord)?;
    let raw: Vec<f64> = (0..pg.len()).map(|j| pg.diag(j, coord)).collect();
    Ok(moving_average(&raw, halfwidth)
        .into_iter()
        .zip(&pg.freqs)
        .map(|(v, &f)| (f, v))
        .collect())
}

pub(crate) fn moving_average(values: &[f64], halfwidth: usize) -> Vec<f64> {
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|j| {
            let lo = j.saturating_sub(halfwidth);
            let hi = (j + halfwidth + 1).min(n);
            if halfwidth == 0 {
                values[j]
            } else {
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            }
        })
        .collect()
}

pub(crate) fn check_bandwidth(pg: &Periodogram, m: usize) -> Result<()> {
    if m == 0 || m > pg.len() {
        return Err(Error::InvalidInput(format!(
            "bandwidth {m} outside 1..={} available frequencies",
            pg.len()
        )));
    }
    Ok(())
}

fn check_coord(pg: &Periodogram, coord: usize) -> Result<()> {
    if coord >= pg.dim() {
        return Err(Error::InvalidInput(format!(
            "coordinate {coord} out of range for dimension {}",
            pg.dim()
        )));
    }
    Ok(())
}
