//! Asymptotic inference on the memory vector: the precision matrix `Ω`,
//! the total-memory z-test and the Wald χ² test.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use statrs::function::gamma;

use crate::error::{Error, Result};
use crate::gse::{GseFit, MemoryVector};

/// `Ω = 2[I + G∘G⁻¹ + (π²/4)(G∘G⁻¹ - I)]`, the asymptotic precision of
/// `√m (d̂ - d)`.
pub fn omega(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = g.nrows();
    if g.ncols() != p || p == 0 {
        return Err(Error::InvalidInput("G must be a non-empty square matrix".into()));
    }
    let chol = Cholesky::new(g.clone())
        .ok_or(Error::DegenerateCovariance { bandwidth: 0, dim: p })?;
    let hadamard = g.component_mul(&chol.inverse());
    let eye = DMatrix::<f64>::identity(p, p);
    let out = (&eye + &hadamard + (&hadamard - &eye) * (PI * PI / 4.0)) * 2.0;
    Ok((&out + out.transpose()) * 0.5)
}

/// Sum of the memory coordinates.
pub fn total_memory(d: &MemoryVector) -> f64 {
    d.as_slice().iter().sum()
}

/// Total memory divided by the dimension.
pub fn normalized_total_memory(d: &MemoryVector) -> f64 {
    total_memory(d) / d.len() as f64
}

/// `1ᵀ Ω(G)⁻¹ 1 / m`, the asymptotic variance of the total memory.
pub fn total_memory_variance(g: &DMatrix<f64>, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidInput("bandwidth must be positive".into()));
    }
    let om = omega(g)?;
    let p = om.nrows();
    let ones = DVector::from_element(p, 1.0);
    let x = om
        .lu()
        .solve(&ones)
        .ok_or(Error::DegenerateCovariance { bandwidth: m, dim: p })?;
    Ok(ones.dot(&x) / m as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    Greater,
    Less,
    TwoSided,
}

impl std::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greater" => Ok(Self::Greater),
            "less" => Ok(Self::Less),
            "two_sided" | "two-sided" => Ok(Self::TwoSided),
            other => Err(Error::InvalidInput(format!(
                "unknown alternative '{other}' (expected greater, less or two_sided)"
            ))),
        }
    }
}

impl Alternative {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Greater => "greater",
            Self::Less => "less",
            Self::TwoSided => "two_sided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullDistribution {
    /// Total memory is `N(null, variance)` under the null.
    Normal { variance: f64 },
    /// Upper tail of `χ²(df)`.
    ChiSquare { df: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub alternative: Alternative,
    pub null: NullDistribution,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, alpha: f64, alternative: Alternative, null: NullDistribution) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self { statistic, p_value, alpha, reject: p_value <= alpha, alternative, null }
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z.abs() < 3.0 {
        // Φ(z) = 1/2 + φ(z) Σ z^{2n+1} / (1·3·…·(2n+1)); all terms share a sign.
        let mut term = z;
        let mut sum = z;
        let mut n = 1.0;
        while term.abs() > 1e-17 * sum.abs() {
            term *= z * z / (2.0 * n + 1.0);
            sum += term;
            n += 1.0;
        }
        0.5 + normal_pdf(z) * sum
    } else if z > 0.0 {
        1.0 - upper_tail(z)
    } else {
        upper_tail(-z)
    }
}

pub fn normal_sf(z: f64) -> f64 {
    normal_cdf(-z)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `1 - Φ(z)` for `z ≥ 3` from the continued fraction
/// `φ(z) / (z + 1/(z + 2/(z + 3/(z + …))))`, evaluated with Lentz's method.
fn upper_tail(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = z + a * d;
        d = if d.abs() < TINY { TINY } else { d };
        c = z + a / c;
        c = if c.abs() < TINY { TINY } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    normal_pdf(z) / f
}

/// `P(χ²(df) > x)`.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma::gamma_ur(df as f64 / 2.0, x / 2.0)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 1]")))
    }
}

/// z-test of the total memory against `null_value`, with variance
/// `1ᵀ Ω(Ĝ(d̂))⁻¹ 1 / m`.
pub fn total_memory_test(fit: &GseFit, null_value: f64, alternative: Alternative, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let variance = total_memory_variance(&fit.g_hat, fit.bandwidth)?;
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::NonFinite(format!("total memory variance {variance}")));
    }
    let z = (fit.total_memory() - null_value) / variance.sqrt();
    let p = match alternative {
        Alternative::Greater => normal_sf(z),
        Alternative::Less => normal_cdf(z),
        Alternative::TwoSided => 2.0 * normal_sf(z.abs()),
    };
    Ok(TestResult::new(z, p, alpha, alternative, NullDistribution::Normal { variance }))
}

/// Wald test of `d = d0` with statistic `m (d̂ - d0)ᵀ Ω̂ (d̂ - d0)` on `p`
/// degrees of freedom.
pub fn wald_test(fit: &GseFit, d0: &MemoryVector, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let p = fit.d_hat.len();
    if d0.len() != p {
        return Err(Error::InvalidInput(format!(
            "null vector has dimension {} but the fit has {p}",
            d0.len()
        )));
    }
    let om = omega(&fit.g_hat)?;
    let diff = DVector::from_iterator(p, fit.d_hat.as_slice().iter().zip(d0.as_slice()).map(|(a, b)| a - b));
    let stat = (fit.bandwidth as f64 * diff.dot(&(&om * &diff))).max(0.0);
    Ok(TestResult::new(
        stat,
        chi_square_sf(stat, p),
        alpha,
        Alternative::Greater,
        NullDistribution::ChiSquare { df: p },
    ))
}
