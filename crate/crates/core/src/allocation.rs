//! Closed-form optimal allocation for the outperform/track/penalize objective,
//! together with the growth optimal and minimum quadratic variation portfolios,
//! decompositions, the modified-market view and a Monte Carlo value function.
//!
//! The pointwise objective maximized over `{π : 1'π = 1}` is
//! `F(π) = −½π'Aπ + π'B − C` with
//!
//! * `A = (ζ0 + ζ1)Σ + ζ2 Q`
//! * `B = ζ0 α + ζ1 Σ η`
//! * `C = ζ0 (γ_ρ + δ_ρ) + ½ζ1 η'Ση`
//!
//! and its maximizer is `π* = A⁻¹[(1 − 1'A⁻¹B)/(1'A⁻¹1)·1 + B]`. Every solve
//! goes through a Cholesky factorization of `A`; no inverse is formed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::benchmarks::BenchmarkRule;
use crate::error::{Error, Result};
use crate::linalg::{self, SpdFactor};
use crate::market::{self, MarketParams};
use crate::parallel::{self, Execution};
use crate::portfolio::{self, WeightVector};

/// Default magnitude above which a weight is flagged in diagnostics.
pub const DEFAULT_WEIGHT_WARNING: f64 = 10.0;

/// Preference weights on outperformance (`ζ0`), tracking error (`ζ1`) and
/// the absolute quadratic penalty (`ζ2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zeta {
    pub outperformance: f64,
    pub tracking: f64,
    pub absolute: f64,
}

impl Zeta {
    pub fn new(outperformance: f64, tracking: f64, absolute: f64) -> Result<Self> {
        let z = Zeta {
            outperformance,
            tracking,
            absolute,
        };
        z.validate()?;
        Ok(z)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.outperformance, self.tracking, self.absolute];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPreferences(format!(
                "zeta must be finite and nonnegative, got {self}"
            )));
        }
        if all.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidPreferences(
                "all-zero preferences leave the objective empty".into(),
            ));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.outperformance, self.tracking, self.absolute]
    }

    pub fn scaled(&self, k: f64) -> Zeta {
        Zeta {
            outperformance: self.outperformance * k,
            tracking: self.tracking * k,
            absolute: self.absolute * k,
        }
    }

    pub fn total(&self) -> f64 {
        self.outperformance + self.tracking + self.absolute
    }
}

impl fmt::Display for Zeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.outperformance, self.tracking, self.absolute)
    }
}

impl FromStr for Zeta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidPreferences(format!(
                "expected three comma-separated values, got {s:?}"
            )));
        }
        let v = parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::InvalidPreferences(format!("bad number {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Zeta::new(v[0], v[1], v[2])
    }
}

/// Rule for the absolute penalty matrix `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum QRule {
    /// `Q = Σ`: penalize absolute portfolio variance.
    Covariance,
    /// `Q = I`: shrink toward equal weights.
    Identity,
    /// `Q = diag(Σ)`: shrink toward risk parity.
    Variances,
    Diagonal(Vec<f64>),
    Matrix(DMatrix<f64>),
}

impl QRule {
    /// Materializes `Q` and checks it is symmetric positive definite.
    pub fn resolve(&self, cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = cov.nrows();
        let q = match self {
            QRule::Covariance => cov.clone(),
            QRule::Identity => DMatrix::identity(n, n),
            QRule::Variances => DMatrix::from_diagonal(&cov.diagonal()),
            QRule::Diagonal(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "diagonal penalty has {} entries for {n} assets",
                        w.len()
                    )));
                }
                DMatrix::from_diagonal(&DVector::from_row_slice(w))
            }
            QRule::Matrix(m) => {
                linalg::check_square(m, n, "penalty matrix")?;
                m.clone()
            }
        };
        linalg::require_spd(&q, "penalty matrix Q")?;
        Ok(q)
    }
}

impl fmt::Display for QRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            QRule::Covariance => f.write_str("covariance"),
            QRule::Identity => f.write_str("identity"),
            QRule::Variances => f.write_str("variances"),
            QRule::Diagonal(w) => write!(f, "diagonal:{}", list(w)),
            QRule::Matrix(m) => write!(f, "matrix:{}", list(&linalg::row_major(m))),
        }
    }
}

impl FromStr for QRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let numbers = |list: &str| -> Result<Vec<f64>> {
            list.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad number {v:?} in Q rule")))
                })
                .collect()
        };
        match s.trim() {
            "covariance" | "sigma" => Ok(QRule::Covariance),
            "identity" => Ok(QRule::Identity),
            "variances" | "risk-parity" => Ok(QRule::Variances),
            other => {
                if let Some(list) = other.strip_prefix("diagonal:") {
                    Ok(QRule::Diagonal(numbers(list)?))
                } else if let Some(list) = other.strip_prefix("matrix:") {
                    let v = numbers(list)?;
                    let n = (v.len() as f64).sqrt().round() as usize;
                    if n * n != v.len() {
                        return Err(Error::InvalidConfig("Q matrix is not square".into()));
                    }
                    Ok(QRule::Matrix(DMatrix::from_row_slice(n, n, &v)))
                } else {
                    Err(Error::InvalidConfig(format!("unknown Q rule {other:?}")))
                }
            }
        }
    }
}

impl TryFrom<String> for QRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<QRule> for String {
    fn from(q: QRule) -> String {
        q.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preferences {
    pub zeta: Zeta,
    pub q_rule: QRule,
}

impl Preferences {
    pub fn new(zeta: Zeta, q_rule: QRule) -> Result<Self> {
        zeta.validate()?;
        Ok(Self { zeta, q_rule })
    }

    pub fn with_covariance_penalty(zeta: Zeta) -> Self {
        Self {
            zeta,
            q_rule: QRule::Covariance,
        }
    }
}

/// `A`, `B` and `C` at one `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

fn penalty_matrix(prefs: &Preferences, cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    prefs.q_rule.resolve(cov)
}

fn a_matrix(zeta: &Zeta, cov: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    cov * (zeta.outperformance + zeta.tracking) + q * zeta.absolute
}

fn b_vector(zeta: &Zeta, alpha: &DVector<f64>, cov: &DMatrix<f64>, eta: &DVector<f64>) -> DVector<f64> {
    alpha * zeta.outperformance + (cov * eta) * zeta.tracking
}

fn check_weights(w: &WeightVector, n: usize, what: &str) -> Result<()> {
    if w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {} weights for {n} assets",
            w.len()
        )));
    }
    Ok(())
}

pub fn build_abc(
    prefs: &Preferences,
    params: &MarketParams,
    eta: &WeightVector,
    rho: &WeightVector,
    _t: f64,
) -> Result<Coefficients> {
    prefs.zeta.validate()?;
    let n = params.n();
    check_weights(eta, n, "tracking portfolio")?;
    check_weights(rho, n, "performance benchmark")?;
    let cov = params.covariance();
    let q = penalty_matrix(prefs, cov)?;
    let a = a_matrix(&prefs.zeta, cov, &q);
    linalg::require_spd(&a, "A = (ζ0+ζ1)Σ + ζ2Q")?;
    let alpha = portfolio::rate_of_return(params);
    let b = b_vector(&prefs.zeta, &alpha, cov, eta.as_vector());
    let rho_stats = portfolio::portfolio_stats(rho, params)?;
    let e = eta.as_vector();
    let c = prefs.zeta.outperformance * (rho_stats.growth + rho_stats.dividend)
        + 0.5 * prefs.zeta.tracking * linalg::quad_form(e, cov, e);
    Ok(Coefficients { a, b, c })
}

/// Maximizer of `−½π'Aπ + π'B` over the budget constraint, given a factor of `A`.
fn constrained_maximizer(factor: &SpdFactor, b: &DVector<f64>) -> DVector<f64> {
    let n = factor.dim();
    let u = factor.solve(&linalg::ones(n));
    let v = factor.solve(b);
    let k = (1.0 - v.sum()) / u.sum();
    u * k + v
}

pub fn optimal_weights(
    prefs: &Preferences,
    params: &MarketParams,
    eta: &WeightVector,
    _t: f64,
) -> Result<WeightVector> {
    prefs.zeta.validate()?;
    let n = params.n();
    check_weights(eta, n, "tracking portfolio")?;
    if n == 1 {
        return Ok(WeightVector::equal(1));
    }
    let cov = params.covariance();
    let q = penalty_matrix(prefs, cov)?;
    let a = a_matrix(&prefs.zeta, cov, &q);
    let factor = SpdFactor::new(&a, "A = (ζ0+ζ1)Σ + ζ2Q")?;
    let b = b_vector(&prefs.zeta, &portfolio::rate_of_return(params), cov, eta.as_vector());
    WeightVector::new(constrained_maximizer(&factor, &b))
}

/// `Σ⁻¹1 / 1'Σ⁻¹1` for any SPD matrix.
fn min_quadratic_form_portfolio(m: &DMatrix<f64>, context: &str) -> Result<WeightVector> {
    let n = m.nrows();
    linalg::check_square(m, n, context)?;
    linalg::require_spd(m, context)?;
    let u = SpdFactor::new(m, context)?.solve(&linalg::ones(n));
    let s = u.sum();
    WeightVector::new(u / s)
}

/// Minimum quadratic variation portfolio.
pub fn mqp_weights(cov: &DMatrix<f64>) -> Result<WeightVector> {
    min_quadratic_form_portfolio(cov, "covariance")
}

/// Target of the absolute penalty, `Q⁻¹1 / 1'Q⁻¹1`.
pub fn shrinkage_weights(q: &DMatrix<f64>) -> Result<WeightVector> {
    min_quadratic_form_portfolio(q, "penalty matrix Q")
}

/// Growth optimal portfolio of a market with rate of return `α` and covariance `Σ`:
/// `(1 − 1'Σ⁻¹α)·MQP + Σ⁻¹α`.
pub fn gop_from_moments(alpha: &DVector<f64>, cov: &DMatrix<f64>) -> Result<WeightVector> {
    let n = cov.nrows();
    linalg::check_len(alpha, n, "rate of return")?;
    let mqp = mqp_weights(cov)?;
    let sa = SpdFactor::new(cov, "covariance")?.solve(alpha);
    let w = mqp.into_vector() * (1.0 - sa.sum()) + sa;
    WeightVector::new(w)
}

pub fn gop_weights(params: &MarketParams) -> Result<WeightVector> {
    gop_from_moments(&portfolio::rate_of_return(params), params.covariance())
}

/// Rate of return and covariance of the market in which `π*` is growth optimal.
pub fn modified_market(
    prefs: &Preferences,
    params: &MarketParams,
    eta: &WeightVector,
    _t: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    prefs.zeta.validate()?;
    check_weights(eta, params.n(), "tracking portfolio")?;
    let cov = params.covariance();
    let q = penalty_matrix(prefs, cov)?;
    let alpha_star = b_vector(&prefs.zeta, &portfolio::rate_of_return(params), cov, eta.as_vector());
    let cov_star = a_matrix(&prefs.zeta, cov, &q);
    linalg::require_spd(&cov_star, "modified covariance")?;
    Ok((alpha_star, cov_star))
}

/// `π*` as a fixed combination of reference portfolios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    /// Names of the reference portfolios, aligned with `coefficients`.
    pub components: Vec<&'static str>,
    pub coefficients: Vec<f64>,
}

impl Decomposition {
    pub fn reconstruct(
        &self,
        gop: &WeightVector,
        eta: &WeightVector,
        mqp: &WeightVector,
    ) -> DVector<f64> {
        let mut out = DVector::zeros(gop.len());
        for (name, c) in self.components.iter().zip(&self.coefficients) {
            let w = match *name {
                "gop" => gop,
                "eta" => eta,
                _ => mqp,
            };
            out += w.as_vector() * *c;
        }
        out
    }
}

/// Splits `π*` into GOP/tracking(/MQP) proportions.
///
/// * `ζ2 = 0` with `ζ0, ζ1 > 0`: `π* = c·GOP + (1−c)·η`, `c = ζ0/(ζ0+ζ1)`.
/// * `Q = Σ`: `π* = c_GOP·GOP + c_η·η + c_MQP·MQP` with `c = ζ/(ζ0+ζ1+ζ2)`.
pub fn decompose(prefs: &Preferences, _params: &MarketParams, _eta: &WeightVector) -> Result<Decomposition> {
    prefs.zeta.validate()?;
    let [z0, z1, z2] = prefs.zeta.as_array();
    if z2 == 0.0 && z0 > 0.0 && z1 > 0.0 {
        let c = z0 / (z0 + z1);
        return Ok(Decomposition {
            components: vec!["gop", "eta"],
            coefficients: vec![c, 1.0 - c],
        });
    }
    if prefs.q_rule == QRule::Covariance {
        let total = prefs.zeta.total();
        return Ok(Decomposition {
            components: vec!["gop", "eta", "mqp"],
            coefficients: vec![z0 / total, z1 / total, z2 / total],
        });
    }
    Err(Error::NotApplicable(
        "needs either no absolute penalty (ζ2 = 0, ζ0, ζ1 > 0) or Q = Σ".into(),
    ))
}

/// `F(t, x, π) = −½π'Aπ + π'B − C`, with benchmarks evaluated at `(t, x)`.
pub fn objective_f(
    t: f64,
    x: &[f64],
    pi: &WeightVector,
    prefs: &Preferences,
    params: &MarketParams,
    rho_rule: &BenchmarkRule,
    eta_rule: &BenchmarkRule,
) -> Result<f64> {
    let n = params.n();
    check_weights(pi, n, "portfolio")?;
    if x.len() != n {
        return Err(Error::DimensionMismatch("state vector length".into()));
    }
    let rho = rho_rule.evaluate(t, x)?;
    let eta = eta_rule.evaluate(t, x)?;
    let coef = build_abc(prefs, params, &eta, &rho, t)?;
    Ok(objective_from_coefficients(&coef, pi.as_vector()))
}

pub fn objective_from_coefficients(coef: &Coefficients, pi: &DVector<f64>) -> f64 {
    -0.5 * linalg::quad_form(pi, &coef.a, pi) + pi.dot(&coef.b) - coef.c
}

/// Everything about the objective that does not depend on the state `x`.
/// Built once per preference setting and reused across steps and paths.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    zeta: Zeta,
    factor: SpdFactor,
    cov: DMatrix<f64>,
    alpha: DVector<f64>,
    params: MarketParams,
    /// `A⁻¹1`
    a_inv_ones: DVector<f64>,
}

impl ObjectiveContext {
    pub fn new(prefs: &Preferences, params: &MarketParams) -> Result<Self> {
        prefs.zeta.validate()?;
        let cov = params.covariance().clone();
        let q = penalty_matrix(prefs, &cov)?;
        let a = a_matrix(&prefs.zeta, &cov, &q);
        linalg::require_spd(&a, "A = (ζ0+ζ1)Σ + ζ2Q")?;
        let factor = SpdFactor::new(&a, "A = (ζ0+ζ1)Σ + ζ2Q")?;
        let a_inv_ones = factor.solve(&linalg::ones(params.n()));
        Ok(Self {
            zeta: prefs.zeta,
            factor,
            alpha: portfolio::rate_of_return(params),
            cov,
            params: params.clone(),
            a_inv_ones,
        })
    }

    /// `G(t, x) = C + ½ d'A⁻¹(k·1 − B)` where `d = k·1 + B` and
    /// `k = (1 − 1'A⁻¹B)/(1'A⁻¹1)`.
    pub fn g_value(&self, eta: &WeightVector, rho: &WeightVector) -> Result<f64> {
        let n = self.params.n();
        check_weights(eta, n, "tracking portfolio")?;
        check_weights(rho, n, "performance benchmark")?;
        let e = eta.as_vector();
        let b = b_vector(&self.zeta, &self.alpha, &self.cov, e);
        let rho_stats = portfolio::portfolio_stats(rho, &self.params)?;
        let c = self.zeta.outperformance * (rho_stats.growth + rho_stats.dividend)
            + 0.5 * self.zeta.tracking * linalg::quad_form(e, &self.cov, e);
        let a_inv_b = self.factor.solve(&b);
        let k = (1.0 - a_inv_b.sum()) / self.a_inv_ones.sum();
        let d = linalg::ones(n) * k + &b;
        let right = self.factor.solve(&(linalg::ones(n) * k - &b));
        Ok(c + 0.5 * d.dot(&right))
    }
}

/// `G(t, x)` of the value-function representation.
pub fn g_function(
    t: f64,
    x: &[f64],
    prefs: &Preferences,
    params: &MarketParams,
    rho_rule: &BenchmarkRule,
    eta_rule: &BenchmarkRule,
) -> Result<f64> {
    let ctx = ObjectiveContext::new(prefs, params)?;
    ctx.g_value(&eta_rule.evaluate(t, x)?, &rho_rule.evaluate(t, x)?)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let m = samples.len();
        let mean = samples.iter().sum::<f64>() / m as f64;
        let std_error = if m > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean,
            std_error,
            n_paths: m,
        }
    }
}

/// Value function `h(t, x) = E[−∫_t^T G(s, X(s)) ds]` with `T = t + steps·dt`,
/// estimated by a left Riemann sum along simulated paths.
#[allow(clippy::too_many_arguments)]
pub fn value_function_mc(
    prefs: &Preferences,
    params: &MarketParams,
    rho_rule: &BenchmarkRule,
    eta_rule: &BenchmarkRule,
    t: f64,
    x: &[f64],
    steps: usize,
    dt: f64,
    n_paths: usize,
    seed: u64,
    execution: Execution,
) -> Result<McEstimate> {
    if x.len() != params.n() {
        return Err(Error::DimensionMismatch("state vector length".into()));
    }
    if n_paths == 0 {
        return Err(Error::InvalidConfig("need at least one path".into()));
    }
    let ctx = ObjectiveContext::new(prefs, params)?;
    if steps == 0 {
        return Ok(McEstimate {
            mean: 0.0,
            std_error: 0.0,
            n_paths,
        });
    }
    let n = params.n();
    if let (Some(rho), Some(eta)) = (rho_rule.state_independent(n), eta_rule.state_independent(n)) {
        // G is constant in x, so the integral is deterministic.
        let g = ctx.g_value(&eta, &rho)?;
        return Ok(McEstimate {
            mean: -g * steps as f64 * dt,
            std_error: 0.0,
            n_paths,
        });
    }
    let samples = parallel::map_indexed(n_paths, execution, |i| -> Result<f64> {
        let path = market::simulate_path(params, x, steps, dt, market::path_seed(seed, i as u64))?;
        let mut integral = 0.0;
        for step in 0..steps {
            let s = t + step as f64 * dt;
            let xs = path.values_at(step);
            let g = ctx.g_value(&eta_rule.evaluate(s, xs)?, &rho_rule.evaluate(s, xs)?)?;
            integral -= g * dt;
        }
        Ok(integral)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_samples(&samples))
}

/// `π*` as an affine function of the tracking weights, `π*(η) = offset + map·η`,
/// precomputed for fixed preferences and constant market parameters.
///
/// With `w = A⁻¹α`, `K = A⁻¹Σ`, `u = A⁻¹1`, `s = 1'u`:
/// `offset = ζ0 w + (1 − ζ0 1'w) u/s` and `map = ζ1 (K − u 1'K / s)`.
#[derive(Debug, Clone)]
pub struct OptimalAllocator {
    n: usize,
    offset: Vec<f64>,
    /// Row-major `n x n`; `None` when `ζ1 = 0` (tracking weights drop out).
    map: Option<Vec<f64>>,
}

impl OptimalAllocator {
    pub fn new(prefs: &Preferences, params: &MarketParams) -> Result<Self> {
        prefs.zeta.validate()?;
        let n = params.n();
        if n == 1 {
            return Ok(Self {
                n,
                offset: vec![1.0],
                map: None,
            });
        }
        let cov = params.covariance();
        let q = penalty_matrix(prefs, cov)?;
        let a = a_matrix(&prefs.zeta, cov, &q);
        let factor = SpdFactor::new(&a, "A = (ζ0+ζ1)Σ + ζ2Q")?;
        let z = prefs.zeta;
        let u = factor.solve(&linalg::ones(n));
        let s = u.sum();
        let w = factor.solve(&portfolio::rate_of_return(params));
        let offset = &w * z.outperformance + &u * ((1.0 - z.outperformance * w.sum()) / s);
        let map = if z.tracking > 0.0 {
            let k = factor.solve_matrix(cov);
            let col_sums = k.row_sum();
            let m = (k - &u * col_sums / s) * z.tracking;
            Some(linalg::row_major(&m))
        } else {
            None
        };
        Ok(Self {
            n,
            offset: offset.iter().copied().collect(),
            map,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Weights are constant when tracking weights do not enter.
    pub fn is_constant(&self) -> bool {
        self.map.is_none()
    }

    #[inline]
    pub fn weights_into(&self, eta: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.offset);
        if let Some(m) = &self.map {
            for i in 0..self.n {
                let row = &m[i * self.n..(i + 1) * self.n];
                let mut acc = 0.0;
                for j in 0..self.n {
                    acc += row[j] * eta[j];
                }
                out[i] += acc;
            }
        }
    }

    pub fn weights(&self, eta: &WeightVector) -> Result<WeightVector> {
        check_weights(eta, self.n, "tracking portfolio")?;
        let mut out = vec![0.0; self.n];
        self.weights_into(eta.as_slice(), &mut out);
        WeightVector::new(DVector::from_vec(out))
    }
}

/// Full report of the allocation at one `(t, x)`.
#[derive(Debug, Clone, Serialize)]
pub struct AllocationDiagnostics {
    pub zeta: Zeta,
    pub q_rule: QRule,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: f64,
    pub weights: WeightVector,
    pub gop: WeightVector,
    pub mqp: WeightVector,
    pub shrinkage: WeightVector,
    pub eta: WeightVector,
    pub rho: WeightVector,
    pub decomposition: Option<Decomposition>,
    /// `F(π*)`, the pointwise objective at the optimum.
    pub objective: f64,
    pub max_abs_weight: f64,
    pub warnings: Vec<String>,
}

pub fn diagnose(
    prefs: &Preferences,
    params: &MarketParams,
    rho: &WeightVector,
    eta: &WeightVector,
    t: f64,
    weight_warning: f64,
) -> Result<AllocationDiagnostics> {
    let coef = build_abc(prefs, params, eta, rho, t)?;
    let weights = optimal_weights(prefs, params, eta, t)?;
    let q = penalty_matrix(prefs, params.covariance())?;
    let decomposition = decompose(prefs, params, eta).ok();
    let max_abs_weight = weights.max_abs();
    let mut warnings = Vec::new();
    if max_abs_weight > weight_warning {
        warnings.push(format!(
            "largest absolute weight {max_abs_weight:.3} exceeds {weight_warning}"
        ));
    }
    let a = (0..coef.a.nrows())
        .map(|i| coef.a.row(i).iter().copied().collect())
        .collect();
    Ok(AllocationDiagnostics {
        zeta: prefs.zeta,
        q_rule: prefs.q_rule.clone(),
        a,
        b: coef.b.iter().copied().collect(),
        c: coef.c,
        objective: objective_from_coefficients(&coef, weights.as_vector()),
        gop: gop_weights(params)?,
        mqp: mqp_weights(params.covariance())?,
        shrinkage: shrinkage_weights(&q)?,
        eta: eta.clone(),
        rho: rho.clone(),
        weights,
        decomposition,
        max_abs_weight,
        warnings,
    })
}
