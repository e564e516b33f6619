//! Constant-coefficient market model: validated parameters and exact
//! log-Gaussian simulation of total-return asset values.

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SpdFactor};
use crate::parallel::{self, Execution};

/// A matrix in JSON, either row-major flat or as nested rows.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixRepr {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixRepr {
    pub fn to_matrix(&self, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>> {
        match self {
            MatrixRepr::Flat(v) => {
                if v.len() != rows * cols {
                    return Err(Error::DimensionMismatch(format!(
                        "{what} has {} entries, expected {rows}x{cols}",
                        v.len()
                    )));
                }
                Ok(DMatrix::from_row_slice(rows, cols, v))
            }
            MatrixRepr::Rows(r) => {
                if r.len() != rows || r.iter().any(|row| row.len() != cols) {
                    return Err(Error::DimensionMismatch(format!(
                        "{what} rows do not form a {rows}x{cols} matrix"
                    )));
                }
                Ok(DMatrix::from_fn(rows, cols, |i, j| r[i][j]))
            }
        }
    }
}

/// Unvalidated parameter document, as read from or written to JSON.
///
/// Rates are per-year log units; volatility is per square-root year.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawMarketParams {
    pub n: usize,
    pub k: usize,
    pub growth: Vec<f64>,
    pub dividend: Vec<f64>,
    pub volatility: MatrixRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<MatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    /// Eigenvalue bounds of the covariance; informational on output, ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue_max: Option<f64>,
}

/// Validated market parameters `(γ, δ, ξ)` with cached `Σ = ξξ'`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    growth: DVector<f64>,
    dividend: DVector<f64>,
    volatility: DMatrix<f64>,
    covariance: DMatrix<f64>,
    eig_min: f64,
    eig_max: f64,
    names: Option<Vec<String>>,
}

pub fn covariance_from_volatility(volatility: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::check_finite_matrix(volatility, "volatility")?;
    let cov = volatility * volatility.transpose();
    // Exact symmetry regardless of summation order.
    Ok(DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| {
        if i <= j {
            cov[(i, j)]
        } else {
            cov[(j, i)]
        }
    }))
}

pub fn validate_params(raw: &RawMarketParams) -> Result<MarketParams> {
    let (n, k) = (raw.n, raw.k);
    if n == 0 || k == 0 {
        return Err(Error::DimensionMismatch("n and k must be positive".into()));
    }
    if k > n {
        return Err(Error::DimensionMismatch(format!(
            "driver count k={k} exceeds asset count n={n}"
        )));
    }
    let growth = DVector::from_vec(raw.growth.clone());
    let dividend = DVector::from_vec(raw.dividend.clone());
    linalg::check_len(&growth, n, "growth")?;
    linalg::check_len(&dividend, n, "dividend")?;
    let volatility = raw.volatility.to_matrix(n, k, "volatility")?;
    if let Some(names) = &raw.names {
        if names.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} asset names for {n} assets",
                names.len()
            )));
        }
    }
    let mut params = MarketParams::new(growth, dividend, volatility)?;
    if let Some(cov) = &raw.covariance {
        let supplied = cov.to_matrix(n, n, "covariance")?;
        let scale = supplied.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
        let diff = (&supplied - &params.covariance).abs().max();
        if diff > 1e-12 * scale {
            return Err(Error::DimensionMismatch(format!(
                "supplied covariance differs from volatility*volatility' by {diff:e}"
            )));
        }
    }
    params.names = raw.names.clone();
    Ok(params)
}

impl MarketParams {
    pub fn new(
        growth: DVector<f64>,
        dividend: DVector<f64>,
        volatility: DMatrix<f64>,
    ) -> Result<Self> {
        let n = volatility.nrows();
        if volatility.ncols() > n || volatility.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "volatility is {}x{}, need 1 <= k <= n",
                n,
                volatility.ncols()
            )));
        }
        linalg::check_len(&growth, n, "growth")?;
        linalg::check_len(&dividend, n, "dividend")?;
        linalg::check_finite_vector(&growth, "growth")?;
        linalg::check_finite_vector(&dividend, "dividend")?;
        let covariance = covariance_from_volatility(&volatility)?;
        let (eig_min, eig_max) = linalg::require_spd(&covariance, "market covariance")?;
        Ok(Self {
            growth,
            dividend,
            volatility,
            covariance,
            eig_min,
            eig_max,
            names: None,
        })
    }

    /// Builds parameters from a covariance matrix, taking `ξ` as its Cholesky factor.
    pub fn from_covariance(
        growth: DVector<f64>,
        dividend: DVector<f64>,
        covariance: &DMatrix<f64>,
    ) -> Result<Self> {
        linalg::check_square(covariance, growth.len(), "covariance")?;
        linalg::require_spd(covariance, "market covariance")?;
        let l = SpdFactor::new(covariance, "market covariance")?.lower();
        Self::new(growth, dividend, l)
    }

    /// Skips the positive-definiteness check; degenerate markets are only
    /// useful for exercising the simulator and bookkeeping in tests.
    #[cfg(test)]
    pub(crate) fn unchecked(
        growth: DVector<f64>,
        dividend: DVector<f64>,
        volatility: DMatrix<f64>,
    ) -> Self {
        let covariance = covariance_from_volatility(&volatility).unwrap();
        let (eig_min, eig_max) = linalg::eigen_range(&covariance);
        Self {
            growth,
            dividend,
            volatility,
            covariance,
            eig_min,
            eig_max,
            names: None,
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n() {
            return Err(Error::DimensionMismatch("asset name count".into()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.volatility.nrows()
    }

    pub fn k(&self) -> usize {
        self.volatility.ncols()
    }

    pub fn growth(&self) -> &DVector<f64> {
        &self.growth
    }

    pub fn dividend(&self) -> &DVector<f64> {
        &self.dividend
    }

    pub fn volatility(&self) -> &DMatrix<f64> {
        &self.volatility
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Lower eigenvalue bound of `Σ` (nondegeneracy constant).
    pub fn eigen_min(&self) -> f64 {
        self.eig_min
    }

    /// Upper eigenvalue bound of `Σ` (bounded variance constant).
    pub fn eigen_max(&self) -> f64 {
        self.eig_max
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// `γ + δ`, the drift of the log total-return value.
    pub fn log_drift(&self) -> DVector<f64> {
        &self.growth + &self.dividend
    }

    pub fn to_raw(&self) -> RawMarketParams {
        RawMarketParams {
            n: self.n(),
            k: self.k(),
            growth: self.growth.iter().copied().collect(),
            dividend: self.dividend.iter().copied().collect(),
            volatility: MatrixRepr::Flat(linalg::row_major(&self.volatility)),
            covariance: Some(MatrixRepr::Flat(linalg::row_major(&self.covariance))),
            names: self.names.clone(),
            eigenvalue_min: Some(self.eig_min),
            eigenvalue_max: Some(self.eig_max),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("parameters serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawMarketParams =
            serde_json::from_str(s).map_err(|e| Error::Parse {
                line: e.line(),
                message: e.to_string(),
            })?;
        validate_params(&raw)
    }
}

/// Source of market parameters at a given time.
///
/// The model allows deterministic time-varying coefficients; everything in
/// this crate is exercised with the constant schedule implemented by
/// [`MarketParams`] itself.
pub trait ParameterSchedule: Sync {
    fn params_at(&self, t: f64) -> Cow<'_, MarketParams>;

    fn is_constant(&self) -> bool {
        false
    }
}

impl ParameterSchedule for MarketParams {
    fn params_at(&self, _t: f64) -> Cow<'_, MarketParams> {
        Cow::Borrowed(self)
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// One simulated trajectory of asset values on an evenly spaced grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetPath {
    n: usize,
    times: Vec<f64>,
    /// Row-major `(steps + 1) x n`.
    values: Vec<f64>,
    seed: u64,
}

impl AssetPath {
    pub fn n_assets(&self) -> usize {
        self.n
    }

    /// Number of steps `N`; there are `N + 1` observations.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values_at(&self, step: usize) -> &[f64] {
        &self.values[step * self.n..(step + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal(&self) -> &[f64] {
        self.values_at(self.steps())
    }
}

/// Per-path seed: a splitmix64 finalizer over the master seed and path index.
pub fn path_seed(master_seed: u64, path_index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(path_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_x0(x0: &[f64]) -> Result<()> {
    for (index, &value) in x0.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidInitialValue { index, value });
        }
    }
    Ok(())
}

/// Simulates one path with the given RNG seed.
pub fn simulate_path<S: ParameterSchedule + ?Sized>(
    schedule: &S,
    x0: &[f64],
    steps: usize,
    dt: f64,
    seed: u64,
) -> Result<AssetPath> {
    check_x0(x0)?;
    if steps == 0 {
        return Err(Error::InvalidConfig("step count must be at least 1".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("time step {dt} must be positive")));
    }
    let first = schedule.params_at(0.0);
    let n = first.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "x0 has {} entries for {n} assets",
            x0.len()
        )));
    }
    let sqrt_dt = dt.sqrt();
    let coefficients = |p: &MarketParams| -> (Vec<f64>, Vec<f64>) {
        let drift = p.log_drift().iter().map(|d| d * dt).collect();
        let vol = linalg::row_major(p.volatility())
            .into_iter()
            .map(|v| v * sqrt_dt)
            .collect();
        (drift, vol)
    };
    let (mut drift, mut vol) = coefficients(&first);
    let k = first.k();
    drop(first);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity((steps + 1) * n);
    let mut log_x: Vec<f64> = x0.iter().map(|x| x.ln()).collect();
    let mut z = vec![0.0; k];
    times.push(0.0);
    values.extend_from_slice(x0);
    for step in 0..steps {
        if !schedule.is_constant() {
            let p = schedule.params_at(step as f64 * dt);
            if p.n() != n || p.k() != k {
                return Err(Error::DimensionMismatch(
                    "parameter schedule changed dimensions".into(),
                ));
            }
            (drift, vol) = coefficients(&p);
        }
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for i in 0..n {
            let row = &vol[i * k..(i + 1) * k];
            let shock: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
            log_x[i] += drift[i] + shock;
            values.push(log_x[i].exp());
        }
        times.push((step + 1) as f64 * dt);
    }
    Ok(AssetPath {
        n,
        times,
        values,
        seed,
    })
}

/// Simulates `n_paths` independent paths. Path `i` uses
/// `path_seed(master_seed, i)`, so the output does not depend on scheduling.
pub fn simulate_paths<S: ParameterSchedule + ?Sized>(
    schedule: &S,
    x0: &[f64],
    steps: usize,
    dt: f64,
    n_paths: usize,
    master_seed: u64,
    execution: Execution,
) -> Result<Vec<AssetPath>> {
    check_x0(x0)?;
    parallel::map_indexed(n_paths, execution, |i| {
        simulate_path(schedule, x0, steps, dt, path_seed(master_seed, i as u64))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn raw(n: usize, k: usize, vol: Vec<f64>) -> RawMarketParams {
        RawMarketParams {
            n,
            k,
            growth: vec![0.0; n],
            dividend: vec![0.0; n],
            volatility: MatrixRepr::Flat(vol),
            covariance: None,
            names: None,
            eigenvalue_min: None,
            eigenvalue_max: None,
        }
    }

    #[test]
    fn single_asset_bounds() {
        let p = validate_params(&raw(1, 1, vec![0.2])).unwrap();
        assert!(close(p.covariance()[(0, 0)], 0.04, 1e-15));
        assert!(close(p.eigen_min(), 0.04, 1e-15));
        assert!(close(p.eigen_max(), 0.04, 1e-15));
    }

    #[test]
    fn identity_volatility() {
        let p = validate_params(&raw(2, 2, vec![1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(p.covariance(), &DMatrix::identity(2, 2));
        assert!(close(p.eigen_min(), 1.0, 1e-12) && close(p.eigen_max(), 1.0, 1e-12));
    }

    #[test]
    fn singular_covariance_rejected() {
        let xi = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let cov = covariance_from_volatility(&xi).unwrap();
        assert_eq!(cov, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let err = validate_params(&raw(2, 2, vec![1.0, 0.0, 1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            validate_params(&raw(2, 2, vec![1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            validate_params(&raw(1, 2, vec![1.0, 0.0])),
            Err(Error::DimensionMismatch(_))
        ));
        let mut r = raw(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        r.growth = vec![0.0];
        assert!(matches!(validate_params(&r), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn inconsistent_covariance_rejected() {
        let mut r = raw(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        r.covariance = Some(MatrixRepr::Rows(vec![vec![1.0, 0.1], vec![0.1, 1.0]]));
        assert!(validate_params(&r).is_err());
        r.covariance = Some(MatrixRepr::Rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]));
        assert!(validate_params(&r).is_ok());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = crate::presets::five_industries();
        let back = MarketParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn zero_volatility_is_deterministic_drift() {
        let p = MarketParams::unchecked(
            DVector::from_vec(vec![0.07]),
            DVector::from_vec(vec![0.03]),
            DMatrix::zeros(1, 1),
        );
        let path = simulate_path(&p, &[1.0], 10, 0.1, 7).unwrap();
        let expected = (0.1_f64).exp();
        assert!(close(path.terminal()[0], expected, 1e-14));
    }

    #[test]
    fn rejects_bad_initial_values() {
        let p = validate_params(&raw(1, 1, vec![0.2])).unwrap();
        assert!(matches!(
            simulate_path(&p, &[0.0], 5, 0.1, 1),
            Err(Error::InvalidInitialValue { index: 0, .. })
        ));
        assert!(matches!(
            simulate_paths(&p, &[-1.0], 5, 0.1, 2, 1, Execution::Sequential),
            Err(Error::InvalidInitialValue { .. })
        ));
    }

    #[test]
    fn deterministic_and_order_independent() {
        let p = crate::presets::five_industries();
        let x0 = [1.0; 5];
        let a = simulate_paths(&p, &x0, 50, 1.0 / 252.0, 8, 99, Execution::Parallel).unwrap();
        let b = simulate_paths(&p, &x0, 50, 1.0 / 252.0, 8, 99, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        let single = simulate_path(&p, &x0, 50, 1.0 / 252.0, path_seed(99, 5)).unwrap();
        assert_eq!(a[5], single);
        assert!(a.iter().all(|path| path.values().iter().all(|v| *v > 0.0)));
        let times = a[0].times();
        for w in times.windows(2) {
            assert!(close(w[1] - w[0], 1.0 / 252.0, 1e-15));
        }
    }

    #[test]
    fn log_increment_mean_within_three_standard_errors() {
        let p = MarketParams::new(
            DVector::from_vec(vec![0.05]),
            DVector::from_vec(vec![0.01]),
            DMatrix::from_element(1, 1, 0.2),
        )
        .unwrap();
        let steps = 100_000;
        let dt = 0.01;
        let path = simulate_path(&p, &[1.0], steps, dt, 2024).unwrap();
        let logs: Vec<f64> = path.values().iter().map(|v| v.ln()).collect();
        let incs: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = incs.iter().sum::<f64>() / steps as f64;
        let se = 0.2 * dt.sqrt() / (steps as f64).sqrt();
        assert!((mean - 0.06 * dt).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn sample_covariance_converges() {
        let p = crate::presets::five_industries();
        let dt = 1.0 / 252.0;
        let steps = 200_000;
        let path = simulate_path(&p, &[1.0; 5], steps, dt, 11).unwrap();
        let n = 5;
        let mut incs = vec![vec![0.0; n]; steps];
        for s in 0..steps {
            for i in 0..n {
                incs[s][i] = path.values_at(s + 1)[i].ln() - path.values_at(s)[i].ln();
            }
        }
        let mean: Vec<f64> = (0..n)
            .map(|i| incs.iter().map(|r| r[i]).sum::<f64>() / steps as f64)
            .collect();
        let sample = DMatrix::from_fn(n, n, |i, j| {
            incs.iter()
                .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                .sum::<f64>()
                / (steps as f64 - 1.0)
        });
        let target = p.covariance() * dt;
        let rel = (&sample - &target).norm() / target.norm();
        assert!(rel < 4.0 / (steps as f64).sqrt(), "relative error {rel}");
    }
}
