//! Parameter estimation from periodic industry return files.
//!
//! Input files hold one header row naming the assets followed by rows of
//! `YYYYMM,v1,...,vn` in percent. Descriptive preamble lines before the header
//! are skipped and parsing stops at the first blank line after the data, so
//! multi-section downloads can be read as-is.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SpdFactor};
use crate::market::{self, MarketParams};

pub const MONTHLY: f64 = 1.0 / 12.0;

/// Simple returns at or below this are total losses or missing-value codes
/// such as `-99.99` percent.
const MISSING_THRESHOLD: f64 = -0.9999;

/// Synthetic paths restart from unit values after this many periods so that
/// long tables never overflow.
const SYNTHETIC_CHUNK: usize = 1000;

/// Aligned simple returns with and without dividends, `T x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTable {
    names: Vec<String>,
    dates: Vec<u64>,
    returns_ex_div: DMatrix<f64>,
    returns_with_div: DMatrix<f64>,
    period_length: f64,
}

impl ReturnTable {
    pub fn new(
        names: Vec<String>,
        dates: Vec<u64>,
        returns_ex_div: DMatrix<f64>,
        returns_with_div: DMatrix<f64>,
        period_length: f64,
    ) -> Result<Self> {
        let (t, n) = returns_ex_div.shape();
        if returns_with_div.shape() != (t, n) {
            return Err(Error::DimensionMismatch(format!(
                "return matrices are {t}x{n} and {}x{}",
                returns_with_div.nrows(),
                returns_with_div.ncols()
            )));
        }
        if names.len() != n || dates.len() != t {
            return Err(Error::DimensionMismatch(
                "names and dates must match the return matrix".into(),
            ));
        }
        if !(period_length > 0.0) || !period_length.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "period length {period_length} must be positive"
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(format!(
                "dates not strictly increasing at {}",
                w[1]
            )));
        }
        for m in [&returns_ex_div, &returns_with_div] {
            if m.iter().any(|r| !r.is_finite() || *r <= -1.0) {
                return Err(Error::InvalidConfig(
                    "returns must be finite and greater than -100%".into(),
                ));
            }
        }
        Ok(Self {
            names,
            dates,
            returns_ex_div,
            returns_with_div,
            period_length,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> &[u64] {
        &self.dates
    }

    pub fn returns_ex_div(&self) -> &DMatrix<f64> {
        &self.returns_ex_div
    }

    pub fn returns_with_div(&self) -> &DMatrix<f64> {
        &self.returns_with_div
    }

    pub fn period_length(&self) -> f64 {
        self.period_length
    }

    pub fn periods(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.names.len()
    }

    pub fn with_period_length(mut self, period_length: f64) -> Result<Self> {
        if !(period_length > 0.0) || !period_length.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "period length {period_length} must be positive"
            )));
        }
        self.period_length = period_length;
        Ok(self)
    }

    /// Renders one of the two return matrices in the input file format (percent).
    pub fn to_csv(&self, with_dividends: bool) -> String {
        let m = if with_dividends {
            &self.returns_with_div
        } else {
            &self.returns_ex_div
        };
        let mut out = String::new();
        out.push(',');
        out.push_str(&self.names.join(","));
        out.push('\n');
        for (i, date) in self.dates.iter().enumerate() {
            write!(out, "{date}").unwrap();
            for j in 0..m.ncols() {
                write!(out, ",{}", m[(i, j)] * 100.0).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// One parsed section of a return file.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSection {
    pub names: Vec<String>,
    pub dates: Vec<u64>,
    /// Row-major cell values exactly as printed.
    pub values: Vec<Vec<f64>>,
}

fn split_cells(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn is_date_cell(cell: &str) -> bool {
    !cell.is_empty() && cell.bytes().all(|b| b.is_ascii_digit())
}

/// Parses the first section of a return file.
pub fn parse_return_section(text: &str) -> Result<ReturnSection> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let names = loop {
        let Some((_, line)) = lines.next() else {
            return Err(Error::Parse {
                line: 1,
                message: "no header row of the form ',name1,name2,...'".into(),
            });
        };
        let cells = split_cells(line);
        if cells.len() >= 2 && cells[0].is_empty() && cells[1..].iter().all(|c| !c.is_empty()) {
            break cells[1..].iter().map(|c| c.to_string()).collect::<Vec<_>>();
        }
    };
    let n = names.len();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            if dates.is_empty() {
                continue;
            }
            break;
        }
        let cells = split_cells(line);
        if !is_date_cell(cells[0]) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected a numeric date label, found {:?}", cells[0]),
            });
        }
        if cells.len() != n + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} cells, found {}", n + 1, cells.len()),
            });
        }
        let date: u64 = cells[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("date label {:?} out of range", cells[0]),
        })?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("date {date} does not follow {prev}"),
                });
            }
        }
        let row = cells[1..]
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::NonNumericCell {
                        line: line_no,
                        column: j + 2,
                        cell: c.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        dates.push(date);
        values.push(row);
    }
    Ok(ReturnSection {
        names,
        dates,
        values,
    })
}

/// Options controlling how return files are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Inclusive lower date bound.
    pub from: Option<u64>,
    /// Inclusive upper date bound.
    pub to: Option<u64>,
    /// Years per row.
    pub period_length: f64,
    /// Cells are in percent.
    pub percent: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            from: None,
            to: None,
            period_length: MONTHLY,
            percent: true,
        }
    }
}

impl LoadOptions {
    fn keeps(&self, date: u64) -> bool {
        self.from.is_none_or(|f| date >= f) && self.to.is_none_or(|t| date <= t)
    }
}

fn section_returns(
    section: &ReturnSection,
    opts: &LoadOptions,
    what: &str,
) -> Result<(Vec<u64>, Vec<Vec<f64>>)> {
    let scale = if opts.percent { 0.01 } else { 1.0 };
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for (date, row) in section.dates.iter().zip(&section.values) {
        if !opts.keeps(*date) {
            continue;
        }
        let r: Vec<f64> = row.iter().map(|v| v * scale).collect();
        if let Some(j) = r.iter().position(|v| *v <= MISSING_THRESHOLD) {
            return Err(Error::InsufficientData(format!(
                "{what}: return {} for {} at {date} is a total loss or a missing-value code",
                row[j], section.names[j]
            )));
        }
        dates.push(*date);
        rows.push(r);
    }
    Ok((dates, rows))
}

/// Aligns the with-dividend and ex-dividend sections into a table.
pub fn returns_from_sections(
    with_div: &ReturnSection,
    ex_div: &ReturnSection,
    opts: &LoadOptions,
) -> Result<ReturnTable> {
    if with_div.names != ex_div.names {
        return Err(Error::DimensionMismatch(format!(
            "asset names differ: {:?} vs {:?}",
            with_div.names, ex_div.names
        )));
    }
    let (dates_w, rows_w) = section_returns(with_div, opts, "with-dividend file")?;
    let (dates_e, rows_e) = section_returns(ex_div, opts, "ex-dividend file")?;
    if dates_w != dates_e {
        let missing = |a: &[u64], b: &[u64]| a.iter().find(|d| b.binary_search(d).is_err()).copied();
        let msg = match (missing(&dates_e, &dates_w), missing(&dates_w, &dates_e)) {
            (Some(d), _) => format!("period {d} is in the ex-dividend file but not the with-dividend file"),
            (_, Some(d)) => format!("period {d} is in the with-dividend file but not the ex-dividend file"),
            _ => "files cover different periods".into(),
        };
        return Err(Error::DateMismatch(msg));
    }
    let t = dates_w.len();
    let n = with_div.names.len();
    let to_matrix = |rows: &[Vec<f64>]| DMatrix::from_fn(t, n, |i, j| rows[i][j]);
    ReturnTable::new(
        with_div.names.clone(),
        dates_w,
        to_matrix(&rows_e),
        to_matrix(&rows_w),
        opts.period_length,
    )
}

pub fn parse_returns(with_div: &str, ex_div: &str, opts: &LoadOptions) -> Result<ReturnTable> {
    returns_from_sections(
        &parse_return_section(with_div)?,
        &parse_return_section(ex_div)?,
        opts,
    )
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

pub fn load_returns_csv(
    path_with_div: &Path,
    path_ex_div: &Path,
    opts: &LoadOptions,
) -> Result<ReturnTable> {
    let w = with_path(path_with_div, parse_return_section(&read(path_with_div)?))?;
    let e = with_path(path_ex_div, parse_return_section(&read(path_ex_div)?))?;
    returns_from_sections(&w, &e, opts)
}

/// Initial asset values from a size file. Rows hold either `n` capitalizations
/// or `n` firm counts followed by `n` average firm sizes; the last row inside
/// the date window is used.
pub fn initial_values_from_sizes(text: &str, n: usize, opts: &LoadOptions) -> Result<Vec<f64>> {
    let section = parse_return_section(text)?;
    let row = section
        .dates
        .iter()
        .zip(&section.values)
        .filter(|(d, _)| opts.keeps(**d))
        .map(|(_, r)| r)
        .next_back()
        .ok_or_else(|| Error::InsufficientData("no size row inside the date window".into()))?;
    let x: Vec<f64> = if row.len() == n {
        row.clone()
    } else if row.len() == 2 * n {
        (0..n).map(|i| row[i] * row[n + i]).collect()
    } else {
        return Err(Error::DimensionMismatch(format!(
            "size file has {} columns, expected {n} or {}",
            row.len(),
            2 * n
        )));
    };
    if let Some((index, value)) = x.iter().copied().enumerate().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::InvalidInitialValue { index, value });
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceDenominator {
    /// `T − 1`
    #[default]
    Unbiased,
    /// `T`
    Population,
}

impl CovarianceDenominator {
    fn divisor(self, t: usize) -> f64 {
        match self {
            CovarianceDenominator::Unbiased => (t - 1) as f64,
            CovarianceDenominator::Population => t as f64,
        }
    }
}

impl std::str::FromStr for CovarianceDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbiased" | "t-1" => Ok(Self::Unbiased),
            "population" | "t" => Ok(Self::Population),
            other => Err(Error::InvalidConfig(format!(
                "unknown covariance denominator {other:?}"
            ))),
        }
    }
}

/// Annualized estimates with their standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub names: Vec<String>,
    pub sample_size: usize,
    pub first_period: u64,
    pub last_period: u64,
    pub period_length: f64,
    pub denominator: CovarianceDenominator,
    pub growth: Vec<f64>,
    pub growth_se: Vec<f64>,
    pub dividend: Vec<f64>,
    pub dividend_se: Vec<f64>,
    pub stdev: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Large-sample Gaussian standard errors, `sqrt((Σij² + ΣiiΣjj)/T)`.
    pub covariance_se: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
}

fn column_mean(m: &DMatrix<f64>, j: usize) -> f64 {
    m.column(j).sum() / m.nrows() as f64
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Estimates `(γ, δ, Σ, ξ)` from a return table:
/// `Σ` is the sample covariance of ex-dividend log changes, `ξ` its Cholesky
/// factor, `γ` the mean ex-dividend log change and `δ` the mean with-dividend
/// log change minus `γ`, all annualized by the period length.
pub fn estimate_with_report(
    table: &ReturnTable,
    denominator: CovarianceDenominator,
) -> Result<(MarketParams, EstimationReport)> {
    let t = table.periods();
    let n = table.n_assets();
    if t < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 periods, have {t}"
        )));
    }
    let h = table.period_length();
    let log_ex = table.returns_ex_div().map(f64::ln_1p);
    let log_with = table.returns_with_div().map(f64::ln_1p);

    let mean_ex = DVector::from_fn(n, |j, _| column_mean(&log_ex, j));
    let centered = DMatrix::from_fn(t, n, |i, j| log_ex[(i, j)] - mean_ex[j]);
    let per_period_cov = (centered.transpose() * &centered) / denominator.divisor(t);
    let mut cov = &per_period_cov / h;
    cov = (&cov + cov.transpose()) * 0.5;
    linalg::require_spd(&cov, "sample covariance of log changes")?;

    let growth = &mean_ex / h;
    let gap = &log_with - &log_ex;
    let mean_gap = DVector::from_fn(n, |j, _| column_mean(&gap, j));
    let dividend = &mean_gap / h;

    let sample_sd = |m: &DMatrix<f64>, j: usize, mean: f64| {
        let ss: f64 = m.column(j).iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (t - 1) as f64).sqrt()
    };
    let root_t = (t as f64).sqrt();
    let growth_se: Vec<f64> = (0..n)
        .map(|j| sample_sd(&log_ex, j, mean_ex[j]) / root_t / h)
        .collect();
    let dividend_se: Vec<f64> = (0..n)
        .map(|j| sample_sd(&gap, j, mean_gap[j]) / root_t / h)
        .collect();
    let stdev: Vec<f64> = (0..n).map(|j| cov[(j, j)].sqrt()).collect();
    let correlation = DMatrix::from_fn(n, n, |i, j| cov[(i, j)] / (stdev[i] * stdev[j]));
    let covariance_se = DMatrix::from_fn(n, n, |i, j| {
        ((cov[(i, j)].powi(2) + cov[(i, i)] * cov[(j, j)]) / t as f64).sqrt()
    });

    let params = MarketParams::from_covariance(growth.clone(), dividend.clone(), &cov)?
        .with_names(table.names().to_vec())?;
    let report = EstimationReport {
        names: table.names().to_vec(),
        sample_size: t,
        first_period: table.dates()[0],
        last_period: table.dates()[t - 1],
        period_length: h,
        denominator,
        growth: growth.iter().copied().collect(),
        growth_se,
        dividend: dividend.iter().copied().collect(),
        dividend_se,
        stdev,
        covariance: to_rows(&cov),
        covariance_se: to_rows(&covariance_se),
        correlation: to_rows(&correlation),
    };
    Ok((params, report))
}

pub fn estimate_parameters(table: &ReturnTable) -> Result<MarketParams> {
    estimate_with_report(table, CovarianceDenominator::default()).map(|(p, _)| p)
}

/// Lower-triangular `L` with positive diagonal and `LL' = Σ`.
pub fn cholesky_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::check_square(cov, cov.nrows(), "covariance")?;
    linalg::require_spd(cov, "covariance")?;
    Ok(SpdFactor::new(cov, "covariance")?.lower())
}

/// Return table generated from one simulated total-return path: with-dividend
/// returns are the simple returns of the path and ex-dividend returns strip
/// `δ·period_length` from each log change. Dates are labelled `1..=periods`.
pub fn synthetic_table(
    params: &MarketParams,
    periods: usize,
    period_length: f64,
    seed: u64,
) -> Result<ReturnTable> {
    let n = params.n();
    let x0 = vec![1.0; n];
    let strip = params.dividend() * period_length;
    let mut with_div = DMatrix::zeros(periods, n);
    let mut ex_div = DMatrix::zeros(periods, n);
    let mut start = 0;
    for chunk in 0.. {
        if start >= periods {
            break;
        }
        let len = SYNTHETIC_CHUNK.min(periods - start);
        let path = market::simulate_path(
            params,
            &x0,
            len,
            period_length,
            market::path_seed(seed, chunk),
        )?;
        for s in 0..len {
            let (a, b) = (path.values_at(s), path.values_at(s + 1));
            for j in 0..n {
                let dlog = (b[j] / a[j]).ln();
                with_div[(start + s, j)] = dlog.exp_m1();
                ex_div[(start + s, j)] = (dlog - strip[j]).exp_m1();
            }
        }
        start += len;
    }
    let names = params
        .names()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| (1..=n).map(|i| format!("asset{i}")).collect());
    ReturnTable::new(
        names,
        (1..=periods as u64).collect(),
        ex_div,
        with_div,
        period_length,
    )
}
