//! Seeded generators for long-memory processes and short-memory controls.
//!
//! Every generator is a pure function of its spec. Gaussian innovations come
//! from a ChaCha8 stream keyed by `(seed, stream)`; multivariate generators
//! use one stream per coordinate so coordinate `i` never depends on how many
//! other coordinates are requested.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::gse::MemoryVector;
use crate::spectral::TimeSeries;

/// Stream reserved for drawing preset memory vectors.
const PARAM_STREAM: u64 = u64::MAX;

/// Above this length, convolutions go through the FFT.
const DIRECT_CONV_MAX: usize = 256;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Per-trial seed for Monte Carlo harnesses.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ trial
}

/// `n` iid `N(0, σ²)` draws from stream `stream` of `seed`.
pub fn gaussian_innovations(seed: u64, stream: u64, n: usize, sigma: f64) -> Vec<f64> {
    let mut r = rng(seed, stream);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            sigma * z
        })
        .collect()
}

/// Coefficients of `(1 - B)^{-d}`: `ψ_0 = 1`, `ψ_k = ψ_{k-1} (k - 1 + d) / k`.
pub fn frac_diff_coeffs(d: f64, n: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n);
    if n == 0 {
        return psi;
    }
    psi.push(1.0);
    for k in 1..n {
        let prev = psi[k - 1];
        psi.push(prev * (k as f64 - 1.0 + d) / k as f64);
    }
    psi
}

/// Causal filter `(1 - B)^{-d}` applied to `x` with zero pre-sample values:
/// `out_t = Σ_{k=0}^{t} ψ_k x_{t-k}`.
pub fn fractional_filter(x: &[f64], d: f64) -> Vec<f64> {
    causal_convolution(x, &frac_diff_coeffs(d, x.len()))
}

fn causal_convolution(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n <= DIRECT_CONV_MAX {
        return (0..n).map(|t| (0..=t).map(|k| h[k] * x[t - k]).sum()).collect();
    }
    let size = (2 * n).next_power_of_two();
    let (fwd, inv) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(size), p.plan_fft_inverse(size))
    });
    // Both real inputs share one complex transform: x in the real part,
    // h in the imaginary part, separated afterwards by conjugate symmetry.
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (k, b) in buf.iter_mut().enumerate().take(n) {
        *b = Complex64::new(x[k], h[k]);
    }
    fwd.process(&mut buf);
    let spec: Vec<Complex64> = (0..size)
        .map(|k| {
            let a = buf[k];
            let b = buf[(size - k) % size].conj();
            let xk = (a + b) * 0.5;
            let hk = (a - b) * Complex64::new(0.0, -0.5);
            xk * hk
        })
        .collect();
    buf.copy_from_slice(&spec);
    inv.process(&mut buf);
    buf[..n].iter().map(|c| c.re / size as f64).collect()
}

thread_local! {
    static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
}

fn check_common(length: usize, sigma: f64) -> Result<()> {
    if length < 2 {
        return Err(Error::InvalidInput(format!("length {length} must be at least 2")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("innovation scale {sigma} must be positive")));
    }
    Ok(())
}

fn check_memory(d: f64) -> Result<()> {
    if d.abs() < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("memory parameter d = {d} outside (-1/2, 1/2)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FracDiffSpec {
    pub d: f64,
    pub length: usize,
    pub burn_in: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl FracDiffSpec {
    /// Unit innovations and a burn-in equal to the length.
    pub fn new(d: f64, length: usize, seed: u64) -> Self {
        Self { d, length, burn_in: length, sigma: 1.0, seed }
    }
}

/// Fractionally integrated Gaussian noise `(1 - B)^{-d} Z_t`, as a truncated
/// moving average over `burn_in + length` innovations.
pub fn fracdiff_noise(spec: &FracDiffSpec) -> Result<TimeSeries> {
    check_memory(spec.d)?;
    check_common(spec.length, spec.sigma)?;
    TimeSeries::from_column(&fd_column(spec.d, spec.length, spec.burn_in, spec.sigma, spec.seed, 0))
}

fn fd_column(d: f64, length: usize, burn_in: usize, sigma: f64, seed: u64, stream: u64) -> Vec<f64> {
    let z = gaussian_innovations(seed, stream, burn_in + length, sigma);
    if d == 0.0 {
        return z[burn_in..].to_vec();
    }
    fractional_filter(&z, d)[burn_in..].to_vec()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArfimaSpec {
    /// `φ_1..φ_p` in `φ(B) = 1 - φ_1 B - … - φ_p B^p`.
    pub ar: Vec<f64>,
    /// `θ_1..θ_q` in `θ(B) = 1 + θ_1 B + … + θ_q B^q`.
    pub ma: Vec<f64>,
    pub d: f64,
    pub length: usize,
    pub burn_in: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl ArfimaSpec {
    pub fn new(ar: Vec<f64>, d: f64, ma: Vec<f64>, length: usize, seed: u64) -> Self {
        Self { ar, ma, d, length, burn_in: length, sigma: 1.0, seed }
    }
}

/// Largest modulus among the inverse roots of `φ(z)`; the AR part is
/// stationary iff this is below one.
pub fn ar_inverse_root_modulus(ar: &[f64]) -> f64 {
    let p = ar.len();
    if p == 0 {
        return 0.0;
    }
    let companion = DMatrix::from_fn(p, p, |i, j| {
        if i == 0 {
            ar[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max)
}

fn check_ar(ar: &[f64]) -> Result<()> {
    if ar.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("AR coefficients must be finite".into()));
    }
    let rho = ar_inverse_root_modulus(ar);
    if rho >= 1.0 - 1e-10 {
        return Err(Error::NonStationary { modulus: 1.0 / rho });
    }
    Ok(())
}

/// `X_t = (1 - B)^{-d} φ(B)^{-1} θ(B) Z_t`.
pub fn arfima(spec: &ArfimaSpec) -> Result<TimeSeries> {
    check_memory(spec.d)?;
    check_common(spec.length, spec.sigma)?;
    check_ar(&spec.ar)?;
    if spec.ma.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("MA coefficients must be finite".into()));
    }
    let n = spec.burn_in + spec.length;
    let z = gaussian_innovations(spec.seed, 0, n, spec.sigma);
    let mut w = z.clone();
    for t in 0..n {
        for (k, th) in spec.ma.iter().enumerate() {
            if t > k {
                w[t] += th * z[t - k - 1];
            }
        }
    }
    let mut u = w;
    for t in 0..n {
        for (k, ph) in spec.ar.iter().enumerate() {
            if t > k {
                u[t] += ph * u[t - k - 1];
            }
        }
    }
    if spec.d != 0.0 {
        u = fractional_filter(&u, spec.d);
    }
    TimeSeries::from_column(&u[spec.burn_in..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaSpec {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma: f64,
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
}

pub fn arma_series(spec: &ArmaSpec) -> Result<TimeSeries> {
    arfima(&ArfimaSpec {
        ar: spec.ar.clone(),
        ma: spec.ma.clone(),
        d: 0.0,
        length: spec.length,
        burn_in: spec.burn_in,
        sigma: spec.sigma,
        seed: spec.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Zero,
    Constant,
    Subset,
    Range,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "constant" => Ok(Self::Constant),
            "subset" => Ok(Self::Subset),
            "range" => Ok(Self::Range),
            other => Err(Error::InvalidInput(format!(
                "unknown setting '{other}' (expected one of zero, constant, subset, range)"
            ))),
        }
    }
}

impl Preset {
    /// Memory vector for this preset; `Range` draws from `0.25·Beta(2, 2)`.
    pub fn memory(&self, p: usize, seed: u64) -> Result<MemoryVector> {
        if p == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let d = match self {
            Self::Zero => vec![0.0; p],
            Self::Constant => vec![0.25; p],
            Self::Subset => {
                let k = p.div_ceil(10);
                (0..p).map(|i| if i < k { 0.4 } else { 0.0 }).collect()
            }
            Self::Range => {
                let beta = Beta::new(2.0, 2.0).expect("valid beta parameters");
                let mut r = rng(seed, PARAM_STREAM);
                (0..p).map(|_| 0.25 * beta.sample(&mut r)).collect()
            }
        };
        MemoryVector::new(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiFdSpec {
    pub d: MemoryVector,
    pub length: usize,
    pub burn_in: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl MultiFdSpec {
    pub fn new(d: MemoryVector, length: usize, seed: u64) -> Self {
        Self { d, length, burn_in: length, sigma: 1.0, seed }
    }

    pub fn preset(preset: Preset, p: usize, length: usize, seed: u64) -> Result<Self> {
        Ok(Self::new(preset.memory(p, seed)?, length, seed))
    }
}

/// Coordinate-wise fractional integration of independent Gaussian noise.
pub fn multivariate_fd(spec: &MultiFdSpec) -> Result<TimeSeries> {
    check_common(spec.length, spec.sigma)?;
    let columns: Vec<Vec<f64>> = spec
        .d
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(i, &d)| fd_column(d, spec.length, spec.burn_in, spec.sigma, spec.seed, i as u64))
        .collect();
    TimeSeries::from_columns(&columns)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSpec {
    /// Column-stochastic: entry `(i, j)` is `P(X_{t+1} = i | X_t = j)`.
    pub transition: DMatrix<f64>,
    /// Output value `g(i)` for each state.
    pub output: Vec<f64>,
    pub length: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtdSpec {
    /// Mixture weights `λ_ℓ` over lags `ℓ = 1..L`.
    pub weights: Vec<f64>,
    /// Column-stochastic lag matrices `Q^{(ℓ)}` with positive diagonals.
    pub matrices: Vec<DMatrix<f64>>,
    pub output: Vec<f64>,
    pub length: usize,
    pub seed: u64,
}

fn check_stochastic(q: &DMatrix<f64>, name: &str) -> Result<()> {
    if q.nrows() != q.ncols() || q.nrows() == 0 {
        return Err(Error::NotStochastic(format!("{name} is not a non-empty square matrix")));
    }
    if q.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::NotStochastic(format!("{name} has negative or non-finite entries")));
    }
    for (j, col) in q.column_iter().enumerate() {
        let s: f64 = col.sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::NotStochastic(format!("{name} column {j} sums to {s}")));
        }
    }
    Ok(())
}

pub fn markov_series(spec: &MarkovSpec) -> Result<TimeSeries> {
    check_stochastic(&spec.transition, "transition matrix")?;
    mtd_core(&[1.0], std::slice::from_ref(&spec.transition), &spec.output, spec.length, spec.seed)
}

pub fn mtd_series(spec: &MtdSpec) -> Result<TimeSeries> {
    if spec.weights.is_empty() || spec.weights.len() != spec.matrices.len() {
        return Err(Error::InvalidInput("MTD needs one weight per lag matrix".into()));
    }
    if spec.weights.iter().any(|w| !(*w > 0.0)) || (spec.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("MTD weights must be positive and sum to one".into()));
    }
    for (l, q) in spec.matrices.iter().enumerate() {
        check_stochastic(q, &format!("lag matrix {}", l + 1))?;
        if q.diagonal().iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput(format!("lag matrix {} has a zero diagonal entry", l + 1)));
        }
    }
    mtd_core(&spec.weights, &spec.matrices, &spec.output, spec.length, spec.seed)
}

/// Stationary distribution of a column-stochastic matrix, or `Reducible`
/// when it is not unique.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    let mut a = p - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let sv = a.clone().singular_values();
    let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if smin <= 1e-10 * smax {
        return Err(Error::Reducible);
    }
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a.lu().solve(&rhs).ok_or(Error::Reducible)?;
    if pi.iter().any(|v| *v < -1e-10) {
        return Err(Error::Reducible);
    }
    let clipped: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    Ok(clipped.into_iter().map(|v| v / total).collect())
}

fn sample_index(probs: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Order-`L` mixture transition chain, started from the stationary law of
/// the lifted chain on `L`-tuples.
fn mtd_core(weights: &[f64], mats: &[DMatrix<f64>], output: &[f64], length: usize, seed: u64) -> Result<TimeSeries> {
    let n = mats[0].nrows();
    if mats.iter().any(|q| q.nrows() != n) {
        return Err(Error::InvalidInput("lag matrices have different sizes".into()));
    }
    if output.len() != n {
        return Err(Error::InvalidInput(format!(
            "output map has {} values for {n} states",
            output.len()
        )));
    }
    if length < 2 {
        return Err(Error::InvalidInput(format!("length {length} must be at least 2")));
    }
    let order = weights.len();
    let lifted_states = n.checked_pow(order as u32).filter(|&s| s <= 4096).ok_or_else(|| {
        Error::InvalidInput(format!("{n} states at order {order} is too large to start stationary"))
    })?;

    // Lifted state (x_{t-1}, …, x_{t-L}) encoded with x_{t-1} as the least
    // significant digit.
    let decode = |mut s: usize| -> Vec<usize> {
        (0..order)
            .map(|_| {
                let v = s % n;
                s /= n;
                v
            })
            .collect()
    };
    let next_prob = |hist: &[usize], i: usize| -> f64 {
        weights.iter().zip(mats).zip(hist).map(|((w, q), &h)| w * q[(i, h)]).sum()
    };
    let mut lifted = DMatrix::zeros(lifted_states, lifted_states);
    for s in 0..lifted_states {
        let hist = decode(s);
        for i in 0..n {
            // New tuple: (i, x_{t-1}, …, x_{t-L+1}).
            let mut t = i;
            let mut mult = n;
            for &h in hist.iter().take(order - 1) {
                t += h * mult;
                mult *= n;
            }
            lifted[(t, s)] += next_prob(&hist, i);
        }
    }
    let pi = stationary_distribution(&lifted)?;

    let mut r = rng(seed, 0);
    let start = decode(sample_index(pi.iter().copied(), r.random::<f64>()));
    // Oldest first.
    let mut states: Vec<usize> = start.iter().rev().copied().collect();
    states.truncate(length);
    while states.len() < length {
        let t = states.len();
        let hist: Vec<usize> = (1..=order).map(|l| states[t - l]).collect();
        let u: f64 = r.random();
        states.push(sample_index((0..n).map(|i| next_prob(&hist, i)), u));
    }
    TimeSeries::from_column(&states.iter().map(|&s| output[s]).collect::<Vec<_>>())
}

/// Nonlinear autoregressive maps whose growth is eventually contractive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearMap {
    /// `f(x) = a·tanh(x) + b·x`, `|b| < 1`.
    TanhAffine { a: f64, b: f64 },
    /// `f(x) = (b + a·exp(-γx²))·x`, `|b| < 1`, `γ > 0`.
    ExponentialAr { a: f64, b: f64, gamma: f64 },
}

impl NonlinearMap {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Self::TanhAffine { a, b } => a * x.tanh() + b * x,
            Self::ExponentialAr { a, b, gamma } => (b + a * (-gamma * x * x).exp()) * x,
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b, ok_gamma) = match *self {
            Self::TanhAffine { a, b } => (a, b, true),
            Self::ExponentialAr { a, b, gamma } => (a, b, gamma > 0.0 && gamma.is_finite()),
        };
        if !(a.is_finite() && b.abs() < 1.0 && ok_gamma) {
            return Err(Error::InvalidInput(format!(
                "nonlinear map {self:?} is not eventually contractive (need |b| < 1)"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearArSpec {
    pub map: NonlinearMap,
    pub sigma: f64,
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
}

/// `X_t = f(X_{t-1}) + σ Z_t` from `X_0 = 0`.
pub fn nonlinear_ar_series(spec: &NonlinearArSpec) -> Result<TimeSeries> {
    spec.map.validate()?;
    check_common(spec.length, spec.sigma)?;
    let z = gaussian_innovations(spec.seed, 0, spec.burn_in + spec.length, spec.sigma);
    let mut x = 0.0;
    let mut out = Vec::with_capacity(spec.length);
    for (t, e) in z.into_iter().enumerate() {
        x = spec.map.apply(x) + e;
        if t >= spec.burn_in {
            out.push(x);
        }
    }
    TimeSeries::from_column(&out)
}
