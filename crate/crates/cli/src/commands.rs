use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use longmem::analysis::{acov_trace_partial_sums, autocovariance};
use longmem::gse::{gph_estimate, objective_grid, sqrt_bandwidth};
use longmem::inference::{total_memory_test, wald_test, Alternative, NullDistribution, TestResult};
use longmem::simulate::{
    arfima, arma_series, fracdiff_noise, markov_series, mtd_series, multivariate_fd, nonlinear_ar_series,
    ArfimaSpec, ArmaSpec, FracDiffSpec, MarkovSpec, MtdSpec, MultiFdSpec, NonlinearArSpec, NonlinearMap, Preset,
};
use longmem::spectral::{log_periodogram_points, smoothed_periodogram};
use longmem::{estimate, periodogram, GseConfig, GseFit, MemoryVector, TimeSeries};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::experiments::{self, CalibrateSpec, ValidateSpec};
use crate::io::{fmt_float, open_output, read_matrix, write_json, write_matrix, write_table};

#[derive(Debug, Parser)]
#[command(name = "longmem", version, about = "Long-memory estimation and testing for multivariate series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a series and write it as a T×p CSV with header x1..xp.
    Simulate {
        #[command(subcommand)]
        model: SimModel,
    },
    /// Fit the memory vector by Gaussian semiparametric estimation.
    Estimate(EstimateArgs),
    /// Test the total memory (and optionally the whole vector) against a null.
    Test(TestArgs),
    /// Log-periodogram plot data for one coordinate.
    Periodogram(PeriodogramArgs),
    /// Objective values over a grid of one or two memory parameters.
    Grid(GridArgs),
    /// Partial sums of the autocovariance trace.
    Acov(AcovArgs),
    /// Estimates on growing prefixes of simulated or supplied data.
    BiasStudy(BiasStudyArgs),
    /// Type-I error of the Wald and total-memory tests under white noise.
    Calibrate(CalibrateArgs),
    /// Mean and variance of the normalized total memory on a preset setting.
    ValidateTm(ValidateTmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `sqrt` for `⌊√T⌋`, or an explicit number of frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    Sqrt,
    Fixed(usize),
}

impl Bandwidth {
    pub fn resolve(self, len: usize) -> usize {
        match self {
            Self::Sqrt => sqrt_bandwidth(len),
            Self::Fixed(m) => m,
        }
    }
}

impl FromStr for Bandwidth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "sqrt" {
            return Ok(Self::Sqrt);
        }
        match s.parse::<usize>() {
            Ok(m) if m > 0 => Ok(Self::Fixed(m)),
            _ => Err(format!("expected 'sqrt' or a positive integer, got '{s}'")),
        }
    }
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when omitted or `-`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimCommon {
    #[arg(long)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Discarded warm-up samples; defaults to the length.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Subcommand)]
pub enum SimModel {
    /// Fractional noise (1-B)^{-d} ε.
    Fd {
        #[arg(long, allow_negative_numbers = true)]
        d: f64,
        #[command(flatten)]
        common: SimCommon,
    },
    /// ARFIMA(p, d, q); AR and MA coefficients as comma lists.
    Arfima {
        #[arg(long, allow_negative_numbers = true)]
        d: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ar: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ma: Vec<f64>,
        #[command(flatten)]
        common: SimCommon,
    },
    /// ARMA(p, q).
    Arma {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ar: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        ma: Vec<f64>,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Independent fractional noises, one per coordinate.
    Mfd {
        /// zero, constant, subset or range.
        #[arg(long, conflicts_with = "d")]
        preset: Option<String>,
        /// Explicit memory vector (comma list).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        d: Vec<f64>,
        #[arg(long)]
        p: Option<usize>,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Finite-state Markov chain mapped to reals.
    Markov {
        /// Column-stochastic transition matrix: entry (i, j) is
        /// P(next = i | current = j). Rows separated by ';'.
        #[arg(long)]
        transition: String,
        /// Real value of each state; defaults to 0, 1, 2, ...
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Mixture transition distribution chain of order L.
    Mtd {
        /// Mixture weights, one per lag.
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        /// One column-stochastic matrix per lag, rows separated by ';'.
        #[arg(long = "matrix", required = true)]
        matrices: Vec<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Nonlinear autoregression X_t = f(X_{t-1}) + σ ε_t.
    Nlar {
        #[arg(long, value_enum, default_value_t = MapKind::Tanh)]
        map: MapKind,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        /// Decay rate of the exponential map.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[command(flatten)]
        common: SimCommon,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    /// a·tanh(x) + b·x
    Tanh,
    /// (b + a·exp(-γx²))·x
    Expar,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV matrix, one time step per row; `-` reads standard input.
    #[arg(default_value = "-")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "sqrt")]
    pub bandwidth: Bandwidth,
    /// Also report per-coordinate log-periodogram regression estimates.
    #[arg(long)]
    pub gph: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "sqrt")]
    pub bandwidth: Bandwidth,
    /// Hypothesized total memory Σd.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub null: f64,
    /// greater, less or two-sided.
    #[arg(long, default_value = "greater")]
    pub alternative: Alternative,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Also run the Wald test of the whole vector.
    #[arg(long)]
    pub wald: bool,
    /// Null vector for the Wald test (comma list); zeros when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub wald_null: Vec<f64>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct PeriodogramArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Coordinate, counted from 1.
    #[arg(long, default_value_t = 1)]
    pub coord: usize,
    /// Number of frequencies; all of them when omitted.
    #[arg(long)]
    pub bandwidth: Option<Bandwidth>,
    /// Emit a moving average of the raw ordinates over 2h+1 frequencies instead.
    #[arg(long)]
    pub smooth: Option<usize>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// One or two coordinates, counted from 1.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub coords: Vec<usize>,
    #[arg(long, default_value_t = -0.45, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, default_value_t = 0.45, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, default_value = "sqrt")]
    pub bandwidth: Bandwidth,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct AcovArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest lag; defaults to min(100, T - 1).
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BiasModel {
    Fd,
    Arfima,
}

#[derive(Debug, Args)]
pub struct BiasStudyArgs {
    /// Analyse this CSV instead of simulating.
    #[arg(long, conflicts_with = "model")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<BiasModel>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub d: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ar: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ma: Vec<f64>,
    /// Simulated length; defaults to the largest window.
    #[arg(long)]
    pub length: Option<usize>,
    /// Prefix lengths N (comma list).
    #[arg(long, value_delimiter = ',', required = true)]
    pub windows: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub length: usize,
    /// Bandwidths m (comma list).
    #[arg(long = "m", value_delimiter = ',', required = true)]
    pub bandwidths: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Alternative of the total-memory test.
    #[arg(long, default_value = "greater")]
    pub alternative: Alternative,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct ValidateTmArgs {
    /// zero, constant, subset or range.
    #[arg(long)]
    pub setting: String,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub length: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "sqrt")]
    pub bandwidth: Bandwidth,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub out: Output,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { model } => cmd_simulate(model),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Test(a) => cmd_test(a),
        Command::Periodogram(a) => cmd_periodogram(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Acov(a) => cmd_acov(a),
        Command::BiasStudy(a) => cmd_bias_study(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::ValidateTm(a) => cmd_validate_tm(a),
    }
}

fn finish(mut out: Box<dyn Write>) -> CliResult<()> {
    out.flush()?;
    Ok(())
}

/// Parses `"a,b;c,d"` into a square matrix.
pub fn parse_square_matrix(s: &str) -> CliResult<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::validation("invalid_input", format!("matrix '{s}': {e}")))?;
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(CliError::validation("invalid_input", format!("matrix '{s}' is not square")));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

fn state_values(values: Vec<f64>, k: usize) -> Vec<f64> {
    if values.is_empty() {
        (0..k).map(|i| i as f64).collect()
    } else {
        values
    }
}

/// Builds the series described by a `simulate` subcommand.
pub fn simulate_model(model: &SimModel) -> CliResult<TimeSeries> {
    let burn = |c: &SimCommon| c.burn_in.unwrap_or(c.length);
    let x = match model {
        SimModel::Fd { d, common: c } => fracdiff_noise(&FracDiffSpec {
            d: *d,
            length: c.length,
            burn_in: burn(c),
            sigma: c.sigma,
            seed: c.seed,
        })?,
        SimModel::Arfima { d, ar, ma, common: c } => arfima(&ArfimaSpec {
            ar: ar.clone(),
            ma: ma.clone(),
            d: *d,
            length: c.length,
            burn_in: burn(c),
            sigma: c.sigma,
            seed: c.seed,
        })?,
        SimModel::Arma { ar, ma, common: c } => arma_series(&ArmaSpec {
            ar: ar.clone(),
            ma: ma.clone(),
            sigma: c.sigma,
            length: c.length,
            burn_in: burn(c),
            seed: c.seed,
        })?,
        SimModel::Mfd { preset, d, p, common: c } => {
            let d = match (preset, d.is_empty()) {
                (Some(name), _) => {
                    let p = p.ok_or_else(|| CliError::validation("invalid_input", "--preset requires --p"))?;
                    Preset::from_str(name)?.memory(p, c.seed)?
                }
                (None, false) => {
                    if p.is_some_and(|p| p != d.len()) {
                        return Err(CliError::validation("invalid_input", "--p disagrees with the length of --d"));
                    }
                    MemoryVector::new(d.clone())?
                }
                (None, true) => return Err(CliError::validation("invalid_input", "give either --preset or --d")),
            };
            multivariate_fd(&MultiFdSpec { d, length: c.length, burn_in: burn(c), sigma: c.sigma, seed: c.seed })?
        }
        SimModel::Markov { transition, values, length, seed, .. } => {
            let transition = parse_square_matrix(transition)?;
            let output = state_values(values.clone(), transition.nrows());
            markov_series(&MarkovSpec { transition, output, length: *length, seed: *seed })?
        }
        SimModel::Mtd { weights, matrices, values, length, seed, .. } => {
            let matrices = matrices.iter().map(|s| parse_square_matrix(s)).collect::<CliResult<Vec<_>>>()?;
            let output = state_values(values.clone(), matrices[0].nrows());
            mtd_series(&MtdSpec { weights: weights.clone(), matrices, output, length: *length, seed: *seed })?
        }
        SimModel::Nlar { map, a, b, gamma, common: c } => {
            let map = match map {
                MapKind::Tanh => NonlinearMap::TanhAffine { a: *a, b: *b },
                MapKind::Expar => NonlinearMap::ExponentialAr { a: *a, b: *b, gamma: *gamma },
            };
            nonlinear_ar_series(&NonlinearArSpec { map, sigma: c.sigma, length: c.length, burn_in: burn(c), seed: c.seed })?
        }
    };
    Ok(x)
}

fn cmd_simulate(model: SimModel) -> CliResult<()> {
    let x = simulate_model(&model)?;
    let path = match &model {
        SimModel::Fd { common, .. }
        | SimModel::Arfima { common, .. }
        | SimModel::Arma { common, .. }
        | SimModel::Mfd { common, .. }
        | SimModel::Nlar { common, .. } => &common.out.output,
        SimModel::Markov { out, .. } | SimModel::Mtd { out, .. } => &out.output,
    };
    let mut out = open_output(path.as_deref())?;
    write_matrix(x.values(), &mut out)?;
    finish(out)
}

/// Reads the input and fits it with the requested bandwidth.
pub fn fit_input(x: &TimeSeries, bandwidth: Bandwidth) -> CliResult<(longmem::Periodogram, GseFit)> {
    let pg = periodogram(x)?;
    let fit = estimate(&pg, &GseConfig::new(bandwidth.resolve(x.len())))?;
    Ok((pg, fit))
}

/// JSON fields shared by the `estimate` and `test` reports.
pub fn fit_json(fit: &GseFit, x: &TimeSeries) -> serde_json::Map<String, Value> {
    let v = json!({
        "schema": 1,
        "length": x.len(),
        "dim": x.dim(),
        "d_hat": fit.d_hat.as_slice(),
        "total_memory": fit.total_memory(),
        "normalized_total_memory": fit.normalized_total_memory(),
        "objective": fit.objective,
        "bandwidth": fit.bandwidth,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "grad_norm": fit.grad_norm,
        "active_bounds": fit.active_bounds,
    });
    match v {
        Value::Object(map) => map,
        _ => unreachable!(),
    }
}

fn cmd_estimate(a: EstimateArgs) -> CliResult<()> {
    let x = read_matrix(&a.input.input)?;
    let (pg, fit) = fit_input(&x, a.bandwidth)?;
    let gph = if a.gph {
        Some((0..x.dim()).map(|c| gph_estimate(&pg, c, fit.bandwidth)).collect::<longmem::Result<Vec<_>>>()?)
    } else {
        None
    };
    let mut out = open_output(a.out.output.as_deref())?;
    match a.format {
        Format::Json => {
            let mut map = fit_json(&fit, &x);
            if let Some(g) = &gph {
                map.insert("gph".into(), json!(g));
            }
            write_json(&Value::Object(map), &mut out)?;
        }
        Format::Csv => {
            let mut header = vec!["coord".to_string(), "d_hat".to_string()];
            if gph.is_some() {
                header.push("gph".into());
            }
            let rows = (0..x.dim()).map(|c| {
                let mut row = vec![(c + 1).to_string(), fmt_float(fit.d_hat[c])];
                if let Some(g) = &gph {
                    row.push(fmt_float(g[c]));
                }
                row
            });
            write_table(&header, rows, &mut out)?;
        }
    }
    finish(out)
}

fn test_json(r: &TestResult) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("statistic".into(), json!(r.statistic));
    map.insert("p_value".into(), json!(r.p_value));
    map.insert("reject".into(), json!(r.reject));
    map.insert("alpha".into(), json!(r.alpha));
    match r.null {
        NullDistribution::Normal { variance } => {
            map.insert("alternative".into(), json!(r.alternative.as_str()));
            map.insert("variance".into(), json!(variance));
        }
        NullDistribution::ChiSquare { df } => {
            map.insert("df".into(), json!(df));
        }
    }
    map
}

fn cmd_test(a: TestArgs) -> CliResult<()> {
    let x = read_matrix(&a.input.input)?;
    let (_, fit) = fit_input(&x, a.bandwidth)?;
    let tm = total_memory_test(&fit, a.null, a.alternative, a.alpha)?;
    let mut report = fit_json(&fit, &x);
    report.extend(test_json(&tm));
    report.insert("null".into(), json!(a.null));
    if a.wald {
        let d0 = if a.wald_null.is_empty() {
            MemoryVector::zeros(x.dim())
        } else {
            MemoryVector::new(a.wald_null)?
        };
        let w = wald_test(&fit, &d0, a.alpha)?;
        report.insert("wald".into(), Value::Object(test_json(&w)));
    }
    let mut out = open_output(a.out.output.as_deref())?;
    write_json(&Value::Object(report), &mut out)?;
    finish(out)
}

fn coord_index(c: usize, dim: usize) -> CliResult<usize> {
    if c == 0 || c > dim {
        return Err(CliError::validation(
            "invalid_input",
            format!("coordinate {c} outside 1..={dim}"),
        ));
    }
    Ok(c - 1)
}

fn cmd_periodogram(a: PeriodogramArgs) -> CliResult<()> {
    let x = read_matrix(&a.input.input)?;
    let coord = coord_index(a.coord, x.dim())?;
    let pg = periodogram(&x)?;
    let (header, pts) = match a.smooth {
        Some(h) => (["lambda", "smoothed_periodogram"], smoothed_periodogram(&pg, coord, h)?),
        None => {
            let m = a.bandwidth.map_or(pg.len(), |b| b.resolve(x.len()));
            (["neg2_log_lambda", "log_periodogram"], log_periodogram_points(&pg, coord, m)?)
        }
    };
    let mut out = open_output(a.out.output.as_deref())?;
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_table(&header, pts.iter().map(|(u, v)| vec![fmt_float(*u), fmt_float(*v)]), &mut out)?;
    finish(out)
}

/// Grid values `from, from + step, ..., to`, rounded to 12 decimals so
/// that accumulated floating error does not leak into the output.
pub fn grid_axis(from: f64, to: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && from <= to && from.is_finite() && to.is_finite()) {
        return Err(CliError::validation(
            "invalid_input",
            format!("grid needs from <= to and a positive step (got {from}, {to}, {step})"),
        ));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((from + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn cmd_grid(a: GridArgs) -> CliResult<()> {
    let x = read_matrix(&a.input.input)?;
    let coords = a.coords.iter().map(|&c| coord_index(c, x.dim())).collect::<CliResult<Vec<_>>>()?;
    let axis = grid_axis(a.from, a.to, a.step)?;
    let grid: Vec<MemoryVector> = match coords.len() {
        1 => axis.iter().map(|&d| MemoryVector::new(vec![d])).collect::<longmem::Result<_>>()?,
        2 => axis
            .iter()
            .flat_map(|&d1| axis.iter().map(move |&d2| MemoryVector::new(vec![d1, d2])))
            .collect::<longmem::Result<_>>()?,
        _ => return Err(CliError::validation("invalid_input", "--coords takes one or two coordinates")),
    };
    let pg = periodogram(&x)?;
    let values = objective_grid(&pg, a.bandwidth.resolve(x.len()), &coords, &grid)?;
    let header: Vec<String> = if coords.len() == 1 { vec!["d".into(), "R".into()] } else { vec!["d1".into(), "d2".into(), "R".into()] };
    let mut out = open_output(a.out.output.as_deref())?;
    let rows = values.iter().map(|(d, v)| {
        let mut row: Vec<String> = d.as_slice().iter().map(|v| fmt_float(*v)).collect();
        row.push(fmt_float(*v));
        row
    });
    write_table(&header, rows, &mut out)?;
    finish(out)
}

fn cmd_acov(a: AcovArgs) -> CliResult<()> {
    let x = read_matrix(&a.input.input)?;
    let max_lag = a.max_lag.unwrap_or_else(|| 100.min(x.len().saturating_sub(1)));
    let sums = acov_trace_partial_sums(&autocovariance(&x, max_lag)?);
    let mut out = open_output(a.out.output.as_deref())?;
    let header = vec!["lag".to_string(), "partial_sum".to_string()];
    write_table(&header, sums.iter().enumerate().map(|(k, s)| vec![k.to_string(), fmt_float(*s)]), &mut out)?;
    finish(out)
}

fn json_number(v: f64) -> Value {
    // NaN is not representable in JSON.
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn cmd_bias_study(a: BiasStudyArgs) -> CliResult<()> {
    let longest = a.windows.iter().copied().max().unwrap_or(0);
    let length = a.length.unwrap_or(longest);
    let rows = match (&a.input, a.model) {
        (Some(path), _) => {
            let x = read_matrix(path)?;
            experiments::bias_study(&a.windows, 1, a.seed, |_| Ok(x.clone()))?
        }
        (None, Some(BiasModel::Fd)) => experiments::bias_study(&a.windows, a.trials, a.seed, |s| {
            fracdiff_noise(&FracDiffSpec::new(a.d, length, s))
        })?,
        (None, Some(BiasModel::Arfima)) => experiments::bias_study(&a.windows, a.trials, a.seed, |s| {
            arfima(&ArfimaSpec::new(a.ar.clone(), a.d, a.ma.clone(), length, s))
        })?,
        (None, None) => return Err(CliError::validation("invalid_input", "give either --input or --model")),
    };
    let mut out = open_output(a.out.output.as_deref())?;
    match a.format {
        Format::Csv => {
            let header: Vec<String> =
                ["N", "m", "lambda_m", "d_hat", "d_hat_sd"].iter().map(|s| s.to_string()).collect();
            let body = rows.iter().map(|r| {
                vec![
                    r.window.to_string(),
                    r.bandwidth.to_string(),
                    fmt_float(r.cutoff),
                    fmt_float(r.d_hat),
                    fmt_float(r.d_hat_sd),
                ]
            });
            write_table(&header, body, &mut out)?;
        }
        Format::Json => {
            let body: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "N": r.window, "m": r.bandwidth, "lambda_m": r.cutoff,
                        "d_hat": r.d_hat, "d_hat_sd": json_number(r.d_hat_sd),
                    })
                })
                .collect();
            write_json(&json!({ "schema": 1, "trials": a.trials, "seed": a.seed, "rows": body }), &mut out)?;
        }
    }
    finish(out)
}

fn cmd_calibrate(a: CalibrateArgs) -> CliResult<()> {
    let rows = experiments::calibrate(&CalibrateSpec {
        dim: a.p,
        length: a.length,
        bandwidths: a.bandwidths,
        trials: a.trials,
        alpha: a.alpha,
        alternative: a.alternative,
        seed: a.seed,
    })?;
    let rate = |r: Option<f64>| r.map_or_else(String::new, fmt_float);
    let mut out = open_output(a.out.output.as_deref())?;
    match a.format {
        Format::Csv => {
            let header: Vec<String> =
                ["m", "wald_type1", "tm_type1", "fitted", "degenerate"].iter().map(|s| s.to_string()).collect();
            let body = rows.iter().map(|r| {
                vec![
                    r.bandwidth.to_string(),
                    rate(r.wald_type1),
                    rate(r.tm_type1),
                    r.fitted.to_string(),
                    r.degenerate.to_string(),
                ]
            });
            write_table(&header, body, &mut out)?;
        }
        Format::Json => {
            let body: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "m": r.bandwidth, "wald_type1": r.wald_type1, "tm_type1": r.tm_type1,
                        "fitted": r.fitted, "degenerate": r.degenerate,
                    })
                })
                .collect();
            let report = json!({
                "schema": 1, "p": a.p, "length": a.length, "trials": a.trials,
                "alpha": a.alpha, "alternative": a.alternative.as_str(), "seed": a.seed, "rows": body,
            });
            write_json(&report, &mut out)?;
        }
    }
    finish(out)
}

fn cmd_validate_tm(a: ValidateTmArgs) -> CliResult<()> {
    let preset = Preset::from_str(&a.setting)?;
    let s = experiments::validate_tm(&ValidateSpec {
        preset,
        dim: a.p,
        length: a.length,
        bandwidth: Some(a.bandwidth.resolve(a.length)),
        trials: a.trials,
        seed: a.seed,
    })?;
    let fields: Vec<(&str, Value)> = vec![
        ("setting", json!(a.setting)),
        ("p", json!(s.dim)),
        ("length", json!(s.length)),
        ("bandwidth", json!(s.bandwidth)),
        ("trials", json!(s.trials)),
        ("seed", json!(a.seed)),
        ("true_normalized", json!(s.true_normalized)),
        ("mean", json!(s.mean)),
        ("variance", json_number(s.variance)),
        ("reference_variance", json!(s.reference_variance)),
        ("total_variance", json_number(s.total_variance)),
        ("total_reference_variance", json!(s.total_reference_variance)),
        ("converged", json!(s.converged)),
    ];
    let mut out = open_output(a.out.output.as_deref())?;
    match a.format {
        Format::Json => {
            let mut map = serde_json::Map::new();
            map.insert("schema".into(), json!(1));
            for (k, v) in fields {
                map.insert(k.into(), v);
            }
            map.insert("true_d".into(), json!(s.true_d.as_slice()));
            write_json(&Value::Object(map), &mut out)?;
        }
        Format::Csv => {
            let header: Vec<String> = fields.iter().map(|(k, _)| k.to_string()).collect();
            let row = fields
                .iter()
                .map(|(_, v)| match v {
                    Value::String(s) => s.clone(),
                    Value::Null => String::new(),
                    other => other.to_string(),
                })
                .collect();
            write_table(&header, [row], &mut out)?;
        }
    }
    finish(out)
}
