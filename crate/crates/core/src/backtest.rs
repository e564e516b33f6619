//! Monte Carlo backtesting: daily-rebalanced wealth paths for the optimal
//! portfolio and reference strategies, the discretized performance criterion,
//! return/risk metrics and preference-grid sweeps over common random numbers.
//!
//! Every simulated path is generated once from `path_seed(seed, i)` and reused
//! by every strategy and every grid cell. Aggregates are reduced in path order,
//! so reports are bitwise identical under sequential and parallel execution.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::allocation::{self, OptimalAllocator, Preferences, QRule, Zeta};
use crate::benchmarks::{BenchmarkRule, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::market::{self, MarketParams};
use crate::parallel::{self, Execution};
use crate::portfolio::WeightVector;

/// Tolerance on `steps * dt = horizon`.
pub const HORIZON_TOLERANCE: f64 = 1e-12;

/// Paths evaluated per parallel batch before their results are reduced.
const PATH_BATCH: usize = 128;

/// Scaling of the running penalties in the discretized criterion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionConvention {
    /// `ζ1·Δt·Σ TE` and `ζ2·Δt·Σ π'Qπ`.
    #[default]
    Printed,
    /// Both penalties carry a factor ½, matching the continuous objective.
    Halved,
}

impl CriterionConvention {
    pub fn penalty_factor(self) -> f64 {
        match self {
            CriterionConvention::Printed => 1.0,
            CriterionConvention::Halved => 0.5,
        }
    }
}

impl FromStr for CriterionConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "halved" => Ok(Self::Halved),
            other => Err(Error::InvalidConfig(format!("unknown criterion convention {other:?}"))),
        }
    }
}

/// How the annualized risk subtracts the mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskEstimator {
    /// `sqrt((1/Δt)(1/N)Σ(r_t − r̄)²)` with `r̄` the per-step mean.
    #[default]
    PerStepMean,
    /// `sqrt((1/Δt)(1/N)Σ(r_t − R)²)` with `R` the annualized return.
    AnnualizedMean,
}

impl FromStr for RiskEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-step-mean" => Ok(Self::PerStepMean),
            "annualized-mean" => Ok(Self::AnnualizedMean),
            other => Err(Error::InvalidConfig(format!("unknown risk estimator {other:?}"))),
        }
    }
}

/// A weighting rule evaluated at every rebalancing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    Optimal(Zeta),
    Gop,
    Mqp,
    Benchmark(BenchmarkSpec),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Optimal(z) => write!(
                f,
                "optimal:{}/{}/{}",
                z.outperformance, z.tracking, z.absolute
            ),
            Strategy::Gop => f.write_str("gop"),
            Strategy::Mqp => f.write_str("mqp"),
            Strategy::Benchmark(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "gop" => Ok(Strategy::Gop),
            "mqp" => Ok(Strategy::Mqp),
            _ => {
                if let Some(z) = s.strip_prefix("optimal:") {
                    Ok(Strategy::Optimal(z.replace('/', ",").parse()?))
                } else {
                    Ok(Strategy::Benchmark(s.parse()?))
                }
            }
        }
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Years.
    pub horizon: f64,
    /// Years per step.
    pub dt: f64,
    pub steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Initial asset values; equal values when absent.
    pub x0: Option<Vec<f64>>,
    pub q_rule: QRule,
    pub strategies: Vec<Strategy>,
    /// Preferences under which every strategy's criterion is evaluated.
    pub criterion_zeta: Zeta,
    pub criterion_convention: CriterionConvention,
    pub risk_estimator: RiskEstimator,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        let zeta = Zeta {
            outperformance: 0.5,
            tracking: 0.5,
            absolute: 0.5,
        };
        Self {
            horizon: 5.0,
            dt: 1.0 / 252.0,
            steps: 1260,
            n_paths: 1000,
            seed: 20170731,
            x0: None,
            q_rule: QRule::Covariance,
            strategies: vec![
                Strategy::Optimal(zeta),
                Strategy::Gop,
                Strategy::Mqp,
                Strategy::Benchmark(BenchmarkSpec::Market),
            ],
            criterion_zeta: zeta,
            criterion_convention: CriterionConvention::Printed,
            risk_estimator: RiskEstimator::PerStepMean,
            execution: Execution::default(),
        }
    }
}

impl SimConfig {
    /// Sets `steps` and `dt`, deriving the horizon from them.
    pub fn with_grid(mut self, steps: usize, dt: f64) -> Self {
        self.steps = steps;
        self.dt = dt;
        self.horizon = steps as f64 * dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if self.steps < 2 {
            return Err(Error::InvalidConfig("need at least 2 steps".into()));
        }
        if (self.steps as f64 * self.dt - self.horizon).abs() > HORIZON_TOLERANCE {
            return Err(Error::InvalidConfig(format!(
                "steps * dt = {} does not match horizon {}",
                self.steps as f64 * self.dt,
                self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("need at least one path".into()));
        }
        self.criterion_zeta.validate()?;
        for s in &self.strategies {
            if let Strategy::Optimal(z) = s {
                z.validate()?;
            }
        }
        Ok(())
    }

    pub fn initial_values(&self, n: usize) -> Result<Vec<f64>> {
        match &self.x0 {
            None => Ok(vec![1.0; n]),
            Some(x) if x.len() != n => Err(Error::DimensionMismatch(format!(
                "x0 has {} entries for {n} assets",
                x.len()
            ))),
            Some(x) => {
                if let Some((index, &value)) =
                    x.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite())
                {
                    return Err(Error::InvalidInitialValue { index, value });
                }
                Ok(x.clone())
            }
        }
    }
}

/// The three criterion terms and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionTerms {
    pub terminal_reward: f64,
    pub relative_penalty: f64,
    pub absolute_penalty: f64,
    pub criterion: f64,
}

impl CriterionTerms {
    fn new(terminal_reward: f64, relative_penalty: f64, absolute_penalty: f64) -> Self {
        Self {
            terminal_reward,
            relative_penalty,
            absolute_penalty,
            criterion: terminal_reward - relative_penalty - absolute_penalty,
        }
    }
}

/// Raw per-path outcome of one strategy. The criterion can be re-evaluated
/// under any preferences from the stored integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathMetrics {
    /// `Z(T)` with `Z(0) = 1`.
    pub terminal_wealth: f64,
    /// `log(Z_π(T)/Z_ρ(T))`.
    pub log_relative_wealth: f64,
    /// `Δt·Σ_t (π−η)'Σ(π−η)`.
    pub tracking_integral: f64,
    /// `Δt·Σ_t π'Qπ`.
    pub absolute_integral: f64,
    pub absolute_return: f64,
    pub active_return: f64,
    pub absolute_risk: f64,
    pub active_risk: f64,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

impl PathMetrics {
    pub fn sharpe(&self) -> Option<f64> {
        ratio(self.absolute_return, self.absolute_risk)
    }

    pub fn information_ratio(&self) -> Option<f64> {
        ratio(self.active_return, self.active_risk)
    }

    pub fn criterion(&self, zeta: &Zeta, convention: CriterionConvention) -> CriterionTerms {
        let k = convention.penalty_factor();
        CriterionTerms::new(
            zeta.outperformance * self.log_relative_wealth,
            k * zeta.tracking * self.tracking_integral,
            k * zeta.absolute * self.absolute_integral,
        )
    }
}

/// Cross-path mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    /// `None` when no path produced a defined value.
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub count: usize,
}

impl Summary {
    pub fn std_error(&self) -> Option<f64> {
        self.sd.map(|s| s / (self.count as f64).sqrt())
    }
}

/// Welford accumulator, fed in path order.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
    nonfinite: Option<f64>,
}

impl Accumulator {
    fn push(&mut self, v: f64) {
        if !v.is_finite() {
            self.nonfinite.get_or_insert(v);
            return;
        }
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    fn push_opt(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.push(v);
        }
    }

    fn finish(&self) -> Summary {
        if let Some(v) = self.nonfinite {
            return Summary {
                mean: Some(v),
                sd: None,
                count: self.count,
            };
        }
        Summary {
            mean: (self.count > 0).then_some(self.mean),
            sd: (self.count > 1).then(|| (self.m2 / (self.count - 1) as f64).sqrt()),
            count: self.count,
        }
    }
}

pub const METRIC_NAMES: [&str; 10] = [
    "terminal_reward",
    "relative_penalty",
    "absolute_penalty",
    "criterion",
    "absolute_return",
    "active_return",
    "absolute_risk",
    "active_risk",
    "sharpe",
    "information_ratio",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummaries {
    pub terminal_reward: Summary,
    pub relative_penalty: Summary,
    pub absolute_penalty: Summary,
    pub criterion: Summary,
    pub absolute_return: Summary,
    pub active_return: Summary,
    pub absolute_risk: Summary,
    pub active_risk: Summary,
    pub sharpe: Summary,
    pub information_ratio: Summary,
}

impl MetricSummaries {
    /// Summaries in `METRIC_NAMES` order.
    pub fn as_array(&self) -> [Summary; 10] {
        [
            self.terminal_reward,
            self.relative_penalty,
            self.absolute_penalty,
            self.criterion,
            self.absolute_return,
            self.active_return,
            self.absolute_risk,
            self.active_risk,
            self.sharpe,
            self.information_ratio,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct MetricAccumulator([Accumulator; 10]);

impl MetricAccumulator {
    fn push(&mut self, m: &PathMetrics, terms: &CriterionTerms) {
        let a = &mut self.0;
        a[0].push(terms.terminal_reward);
        a[1].push(terms.relative_penalty);
        a[2].push(terms.absolute_penalty);
        a[3].push(terms.criterion);
        a[4].push(m.absolute_return);
        a[5].push(m.active_return);
        a[6].push(m.absolute_risk);
        a[7].push(m.active_risk);
        a[8].push_opt(m.sharpe());
        a[9].push_opt(m.information_ratio());
    }

    fn finish(&self) -> MetricSummaries {
        let s = self.0.map(|a| a.finish());
        MetricSummaries {
            terminal_reward: s[0],
            relative_penalty: s[1],
            absolute_penalty: s[2],
            criterion: s[3],
            absolute_return: s[4],
            active_return: s[5],
            absolute_risk: s[6],
            active_risk: s[7],
            sharpe: s[8],
            information_ratio: s[9],
        }
    }
}

/// Annualized return and risk from per-step returns.
pub fn annualized_return_risk(per_step: &[f64], dt: f64, estimator: RiskEstimator) -> (f64, f64) {
    let n = per_step.len() as f64;
    let mean = per_step.iter().sum::<f64>() / n;
    let annual = mean / dt;
    let center = match estimator {
        RiskEstimator::PerStepMean => mean,
        RiskEstimator::AnnualizedMean => annual,
    };
    let ss: f64 = per_step.iter().map(|r| (r - center).powi(2)).sum();
    (annual, (ss / n / dt).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnRiskMetrics {
    pub absolute_return: f64,
    pub active_return: f64,
    pub absolute_risk: f64,
    pub active_risk: f64,
    /// `None` when the absolute risk is zero.
    pub sharpe: Option<f64>,
    /// `None` when the active risk is zero.
    pub information_ratio: Option<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_series(weights: &[WeightVector], returns: &[Vec<f64>], other: &[WeightVector]) -> Result<usize> {
    let steps = weights.len();
    if returns.len() != steps || other.len() != steps {
        return Err(Error::DimensionMismatch(format!(
            "series lengths {}, {} and {} differ",
            steps,
            returns.len(),
            other.len()
        )));
    }
    let n = weights.first().map_or(0, WeightVector::len);
    for ((w, r), o) in weights.iter().zip(returns).zip(other) {
        if w.len() != n || r.len() != n || o.len() != n {
            return Err(Error::DimensionMismatch("asset counts differ across steps".into()));
        }
    }
    Ok(steps)
}

/// Return and risk metrics of a weight series against a benchmark series.
/// `returns[t]` holds the per-asset simple returns over `[t, t+1]`.
pub fn return_risk_metrics(
    weights: &[WeightVector],
    returns: &[Vec<f64>],
    benchmark: &[WeightVector],
    dt: f64,
    estimator: RiskEstimator,
) -> Result<ReturnRiskMetrics> {
    let steps = check_series(weights, returns, benchmark)?;
    if steps < 2 {
        return Err(Error::InsufficientData("need at least 2 steps".into()));
    }
    let abs: Vec<f64> = weights.iter().zip(returns).map(|(w, r)| dot(w.as_slice(), r)).collect();
    let act: Vec<f64> = weights
        .iter()
        .zip(benchmark)
        .zip(returns)
        .map(|((w, b), r)| dot(w.as_slice(), r) - dot(b.as_slice(), r))
        .collect();
    let (absolute_return, absolute_risk) = annualized_return_risk(&abs, dt, estimator);
    let (active_return, active_risk) = annualized_return_risk(&act, dt, estimator);
    Ok(ReturnRiskMetrics {
        absolute_return,
        active_return,
        absolute_risk,
        active_risk,
        sharpe: ratio(absolute_return, absolute_risk),
        information_ratio: ratio(active_return, active_risk),
    })
}

/// Discretized criterion of a weight series: `ζ0·log(Z_π(T)/Z_ρ(T))`,
/// `ζ1·Δt·Σ(π−η)'Σ(π−η)` and `ζ2·Δt·Σπ'Qπ`, with penalties scaled by the convention.
#[allow(clippy::too_many_arguments)]
pub fn performance_criterion(
    weights: &[WeightVector],
    rho: &[WeightVector],
    eta: &[WeightVector],
    returns: &[Vec<f64>],
    cov: &DMatrix<f64>,
    q: &DMatrix<f64>,
    zeta: &Zeta,
    dt: f64,
    convention: CriterionConvention,
) -> Result<CriterionTerms> {
    check_series(weights, returns, rho)?;
    check_series(weights, returns, eta)?;
    let n = weights.first().map_or(0, WeightVector::len);
    linalg::check_square(cov, n, "covariance")?;
    linalg::check_square(q, n, "penalty matrix")?;
    let (mut log_pi, mut log_rho, mut te, mut ab) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..weights.len() {
        let (w, r) = (weights[t].as_vector(), &returns[t]);
        log_pi += dot(w.as_slice(), r).ln_1p();
        log_rho += dot(rho[t].as_slice(), r).ln_1p();
        let d = w - eta[t].as_vector();
        te += linalg::quad_form(&d, cov, &d);
        ab += linalg::quad_form(w, q, w);
    }
    let k = convention.penalty_factor();
    Ok(CriterionTerms::new(
        zeta.outperformance * (log_pi - log_rho),
        k * zeta.tracking * dt * te,
        k * zeta.absolute * dt * ab,
    ))
}

/// How a strategy's weights are produced at each step.
#[derive(Debug, Clone)]
enum WeightSource {
    Constant(Vec<f64>),
    Affine(OptimalAllocator),
    Rule(BenchmarkRule),
}

fn compile(strategy: &Strategy, params: &MarketParams, q_rule: &QRule) -> Result<WeightSource> {
    Ok(match strategy {
        Strategy::Optimal(z) => {
            let plan = OptimalAllocator::new(&Preferences::new(*z, q_rule.clone())?, params)?;
            if plan.is_constant() {
                let mut w = vec![0.0; params.n()];
                plan.weights_into(&vec![0.0; params.n()], &mut w);
                WeightSource::Constant(w)
            } else {
                WeightSource::Affine(plan)
            }
        }
        Strategy::Gop => WeightSource::Constant(allocation::gop_weights(params)?.as_slice().to_vec()),
        Strategy::Mqp => {
            WeightSource::Constant(allocation::mqp_weights(params.covariance())?.as_slice().to_vec())
        }
        Strategy::Benchmark(spec) => match spec.resolve(params.covariance())? {
            BenchmarkRule::Market => WeightSource::Rule(BenchmarkRule::Market),
            rule => match rule.state_independent(params.n()) {
                Some(w) => WeightSource::Constant(w.as_slice().to_vec()),
                None => WeightSource::Rule(rule),
            },
        },
    })
}

/// Shared per-path inputs, row-major `steps x n`.
struct PathData {
    values: market::AssetPath,
    returns: Vec<f64>,
    eta: Vec<f64>,
    rho_returns: Vec<f64>,
    rho_log_wealth: f64,
}

struct Engine<'a> {
    params: &'a MarketParams,
    n: usize,
    steps: usize,
    dt: f64,
    seed: u64,
    x0: Vec<f64>,
    cov: Vec<f64>,
    q: Vec<f64>,
    rho_rule: &'a BenchmarkRule,
    eta_rule: &'a BenchmarkRule,
    estimator: RiskEstimator,
}

/// Running sums over steps for one strategy on one path.
struct StepSums {
    wealth: f64,
    te: f64,
    ab: f64,
    abs_shift: f64,
    abs_s1: f64,
    abs_s2: f64,
    act_shift: f64,
    act_s1: f64,
    act_s2: f64,
}

impl<'a> Engine<'a> {
    fn new(
        params: &'a MarketParams,
        config: &SimConfig,
        rho_rule: &'a BenchmarkRule,
        eta_rule: &'a BenchmarkRule,
    ) -> Result<Self> {
        config.validate()?;
        let n = params.n();
        let x0 = config.initial_values(n)?;
        let q = config.q_rule.resolve(params.covariance())?;
        rho_rule.evaluate(0.0, &x0)?;
        eta_rule.evaluate(0.0, &x0)?;
        Ok(Self {
            params,
            n,
            steps: config.steps,
            dt: config.dt,
            seed: config.seed,
            x0,
            cov: linalg::row_major(params.covariance()),
            q: linalg::row_major(&q),
            rho_rule,
            eta_rule,
            estimator: config.risk_estimator,
        })
    }

    fn path_data(&self, index: usize) -> Result<PathData> {
        let (n, steps) = (self.n, self.steps);
        let values = market::simulate_path(
            self.params,
            &self.x0,
            steps,
            self.dt,
            market::path_seed(self.seed, index as u64),
        )?;
        let mut returns = vec![0.0; steps * n];
        let mut eta = vec![0.0; steps * n];
        let mut rho = vec![0.0; n];
        let mut rho_returns = vec![0.0; steps];
        let mut rho_wealth = 1.0_f64;
        for s in 0..steps {
            let (a, b) = (values.values_at(s), values.values_at(s + 1));
            let r = &mut returns[s * n..(s + 1) * n];
            for j in 0..n {
                r[j] = b[j] / a[j] - 1.0;
            }
            let t = s as f64 * self.dt;
            self.eta_rule.evaluate_into(t, a, &mut eta[s * n..(s + 1) * n])?;
            self.rho_rule.evaluate_into(t, a, &mut rho)?;
            rho_returns[s] = dot(&rho, r);
            rho_wealth = compound(rho_wealth, rho_returns[s]);
        }
        Ok(PathData {
            values,
            returns,
            eta,
            rho_returns,
            rho_log_wealth: log_wealth(rho_wealth),
        })
    }

    fn run_source(&self, source: &WeightSource, d: &PathData, pi: &mut [f64], diff: &mut [f64]) -> Result<PathMetrics> {
        let n = self.n;
        let mut sums = StepSums {
            wealth: 1.0,
            te: 0.0,
            ab: 0.0,
            abs_shift: 0.0,
            abs_s1: 0.0,
            abs_s2: 0.0,
            act_shift: 0.0,
            act_s1: 0.0,
            act_s2: 0.0,
        };
        if let WeightSource::Constant(w) = source {
            pi.copy_from_slice(w);
        }
        for s in 0..self.steps {
            let eta = &d.eta[s * n..(s + 1) * n];
            match source {
                WeightSource::Constant(_) => {}
                WeightSource::Affine(plan) => plan.weights_into(eta, pi),
                WeightSource::Rule(rule) => {
                    rule.evaluate_into(s as f64 * self.dt, d.values.values_at(s), pi)?
                }
            }
            let r = dot(pi, &d.returns[s * n..(s + 1) * n]);
            let a = r - d.rho_returns[s];
            for j in 0..n {
                diff[j] = pi[j] - eta[j];
            }
            sums.te += linalg::quad_form_slice(diff, &self.cov, n);
            sums.ab += linalg::quad_form_slice(pi, &self.q, n);
            sums.wealth = compound(sums.wealth, r);
            if s == 0 {
                sums.abs_shift = r;
                sums.act_shift = a;
            }
            let (x, y) = (r - sums.abs_shift, a - sums.act_shift);
            sums.abs_s1 += x;
            sums.abs_s2 += x * x;
            sums.act_s1 += y;
            sums.act_s2 += y * y;
        }
        let (absolute_return, absolute_risk) =
            shifted_return_risk(sums.abs_shift, sums.abs_s1, sums.abs_s2, self.steps, self.dt, self.estimator);
        let (active_return, active_risk) =
            shifted_return_risk(sums.act_shift, sums.act_s1, sums.act_s2, self.steps, self.dt, self.estimator);
        Ok(PathMetrics {
            terminal_wealth: sums.wealth,
            log_relative_wealth: log_wealth(sums.wealth) - d.rho_log_wealth,
            tracking_integral: sums.te * self.dt,
            absolute_integral: sums.ab * self.dt,
            absolute_return,
            active_return,
            absolute_risk,
            active_risk,
        })
    }

    fn run_path(&self, index: usize, sources: &[WeightSource]) -> Result<Vec<PathMetrics>> {
        let d = self.path_data(index)?;
        let mut pi = vec![0.0; self.n];
        let mut diff = vec![0.0; self.n];
        sources
            .iter()
            .map(|s| self.run_source(s, &d, &mut pi, &mut diff))
            .collect()
    }

    /// Evaluates all sources on every path, handing results to `sink` in path order.
    fn for_each_path<F>(&self, n_paths: usize, execution: Execution, sources: &[WeightSource], mut sink: F) -> Result<()>
    where
        F: FnMut(Vec<PathMetrics>),
    {
        let mut start = 0;
        while start < n_paths {
            let len = PATH_BATCH.min(n_paths - start);
            let batch = parallel::map_indexed(len, execution, |k| self.run_path(start + k, sources));
            for result in batch {
                sink(result?);
            }
            start += len;
        }
        Ok(())
    }
}

/// `Z(t+1) = Z(t)(1 + r)`; a wealth that reaches zero stays ruined.
#[inline]
fn compound(wealth: f64, r: f64) -> f64 {
    if wealth > 0.0 {
        (wealth * (1.0 + r)).max(0.0)
    } else {
        0.0
    }
}

fn log_wealth(wealth: f64) -> f64 {
    if wealth > 0.0 {
        wealth.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Annualized return and risk from sums of `r − shift` and `(r − shift)²`.
fn shifted_return_risk(shift: f64, s1: f64, s2: f64, steps: usize, dt: f64, estimator: RiskEstimator) -> (f64, f64) {
    let n = steps as f64;
    let mean = shift + s1 / n;
    let annual = mean / dt;
    let centered = (s2 - s1 * s1 / n).max(0.0);
    let ss = match estimator {
        RiskEstimator::PerStepMean => centered,
        RiskEstimator::AnnualizedMean => centered + n * (mean - annual).powi(2),
    };
    (annual, (ss / n / dt).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub summary: MetricSummaries,
    #[serde(skip)]
    pub paths: Vec<PathMetrics>,
}

impl StrategyReport {
    pub fn criterion_under(&self, zeta: &Zeta, convention: CriterionConvention) -> Vec<CriterionTerms> {
        self.paths.iter().map(|p| p.criterion(zeta, convention)).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub config: SimConfig,
    pub rho: String,
    pub eta: String,
    pub strategies: Vec<StrategyReport>,
}

#[derive(Serialize)]
struct PathRecord {
    #[serde(flatten)]
    metrics: PathMetrics,
    #[serde(flatten)]
    terms: CriterionTerms,
    sharpe: Option<f64>,
    information_ratio: Option<f64>,
}

impl MetricsReport {
    pub fn strategy(&self, s: &Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|r| &r.strategy == s)
    }

    /// Long-format table `zeta0,zeta1,zeta2,strategy,metric,mean,sd`, preceded
    /// by a `#` line echoing the configuration.
    pub fn to_csv(&self) -> String {
        let mut out = csv_preamble(&self.config);
        for r in &self.strategies {
            write_metric_rows(&mut out, &self.config.criterion_zeta, &r.strategy.to_string(), &r.summary);
        }
        out
    }

    /// JSON report; per-path records are included on request.
    pub fn to_json(&self, include_paths: bool) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if include_paths {
            let zeta = self.config.criterion_zeta;
            let conv = self.config.criterion_convention;
            for (slot, r) in v["strategies"].as_array_mut().unwrap().iter_mut().zip(&self.strategies) {
                let records: Vec<PathRecord> = r
                    .paths
                    .iter()
                    .map(|m| PathRecord {
                        metrics: *m,
                        terms: m.criterion(&zeta, conv),
                        sharpe: m.sharpe(),
                        information_ratio: m.information_ratio(),
                    })
                    .collect();
                slot["paths"] = serde_json::to_value(records).expect("records serialize");
            }
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

fn csv_preamble(config: &SimConfig) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# config: {}",
        serde_json::to_string(config).expect("config serializes")
    )
    .unwrap();
    out.push_str("zeta0,zeta1,zeta2,strategy,metric,mean,sd\n");
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => "null".into(),
    }
}

fn write_metric_rows(out: &mut String, zeta: &Zeta, label: &str, summary: &MetricSummaries) {
    for (name, s) in METRIC_NAMES.iter().zip(summary.as_array()) {
        writeln!(
            out,
            "{},{},{},{label},{name},{},{}",
            zeta.outperformance,
            zeta.tracking,
            zeta.absolute,
            fmt_opt(s.mean),
            fmt_opt(s.sd)
        )
        .unwrap();
    }
}

/// Simulates `config.n_paths` paths and evaluates every configured strategy.
pub fn run_backtest(
    params: &MarketParams,
    config: &SimConfig,
    rho_rule: &BenchmarkRule,
    eta_rule: &BenchmarkRule,
) -> Result<MetricsReport> {
    let engine = Engine::new(params, config, rho_rule, eta_rule)?;
    let sources = config
        .strategies
        .iter()
        .map(|s| compile(s, params, &config.q_rule))
        .collect::<Result<Vec<_>>>()?;
    let mut paths: Vec<Vec<PathMetrics>> = vec![Vec::with_capacity(config.n_paths); sources.len()];
    engine.for_each_path(config.n_paths, config.execution, &sources, |row| {
        for (k, m) in row.into_iter().enumerate() {
            paths[k].push(m);
        }
    })?;
    let strategies = config
        .strategies
        .iter()
        .zip(paths)
        .map(|(s, p)| {
            let mut acc = MetricAccumulator::default();
            for m in &p {
                acc.push(m, &m.criterion(&config.criterion_zeta, config.criterion_convention));
            }
            StrategyReport {
                strategy: s.clone(),
                summary: acc.finish(),
                paths: p,
            }
        })
        .collect();
    Ok(MetricsReport {
        config: config.clone(),
        rho: rho_rule.label(),
        eta: eta_rule.label(),
        strategies,
    })
}

/// `0.001` followed by `0.05, 0.10, ..., 1.0`.
pub fn standard_axis() -> Vec<f64> {
    std::iter::once(0.001)
        .chain((1..=20).map(|k| k as f64 / 20.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub outperformance: Vec<f64>,
    pub tracking: Vec<f64>,
    pub absolute: Vec<f64>,
}

impl SweepGrid {
    /// `ζ0 ∈ {0.1, 0.5, 5}` with `ζ1, ζ2` on `standard_axis()`.
    pub fn standard() -> Self {
        Self {
            outperformance: vec![0.1, 0.5, 5.0],
            tracking: standard_axis(),
            absolute: standard_axis(),
        }
    }

    pub fn cells(&self) -> Result<Vec<Zeta>> {
        if self.outperformance.is_empty() || self.tracking.is_empty() || self.absolute.is_empty() {
            return Err(Error::InvalidConfig("sweep grids must be nonempty".into()));
        }
        let mut out = Vec::new();
        for &a in &self.outperformance {
            for &b in &self.tracking {
                for &c in &self.absolute {
                    out.push(Zeta::new(a, b, c)?);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub zeta: Zeta,
    /// Cosine between this cell's initial active weights `π* − η` and those
    /// of the cell with the same `ζ0, ζ2` and the first `ζ1` on the grid.
    pub active_cosine: Option<f64>,
    pub optimal: MetricSummaries,
    /// Reference strategies, in configuration order, under this cell's criterion.
    pub references: Vec<MetricSummaries>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: SimConfig,
    pub grid: SweepGrid,
    pub rho: String,
    pub eta: String,
    pub references: Vec<Strategy>,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cell(&self, zeta: &Zeta) -> Option<&SweepCell> {
        self.cells.iter().find(|c| &c.zeta == zeta)
    }

    pub fn to_csv(&self) -> String {
        let mut out = csv_preamble(&self.config);
        for cell in &self.cells {
            write_metric_rows(&mut out, &cell.zeta, "optimal", &cell.optimal);
            for (s, m) in self.references.iter().zip(&cell.references) {
                write_metric_rows(&mut out, &cell.zeta, &s.to_string(), m);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes")
    }
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (dot(a, a).sqrt(), dot(b, b).sqrt());
    (na > 0.0 && nb > 0.0).then(|| dot(a, b) / (na * nb))
}

/// Evaluates `π*(ζ)` for every grid cell, plus the non-optimal strategies of
/// `config.strategies` as references, all on the same simulated paths.
pub fn zeta_sweep(
    params: &MarketParams,
    config: &SimConfig,
    grid: &SweepGrid,
    rho_rule: &BenchmarkRule,
    eta_rule: &BenchmarkRule,
) -> Result<SweepReport> {
    let engine = Engine::new(params, config, rho_rule, eta_rule)?;
    let cells = grid.cells()?;
    let references: Vec<Strategy> = config
        .strategies
        .iter()
        .filter(|s| !matches!(s, Strategy::Optimal(_)))
        .cloned()
        .collect();
    let mut sources = Vec::with_capacity(cells.len() + references.len());
    for z in &cells {
        sources.push(compile(&Strategy::Optimal(*z), params, &config.q_rule)?);
    }
    for s in &references {
        sources.push(compile(s, params, &config.q_rule)?);
    }

    let eta0 = eta_rule.evaluate(0.0, &engine.x0)?;
    let active: Vec<Vec<f64>> = cells
        .iter()
        .map(|z| {
            let plan = OptimalAllocator::new(&Preferences::new(*z, config.q_rule.clone())?, params)?;
            let w = plan.weights(&eta0)?;
            Ok(w.as_slice().iter().zip(eta0.as_slice()).map(|(p, e)| p - e).collect())
        })
        .collect::<Result<_>>()?;
    let base_tracking = grid.tracking[0];
    let cosines: Vec<Option<f64>> = cells
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let base = cells.iter().position(|c| {
                c.outperformance == z.outperformance && c.absolute == z.absolute && c.tracking == base_tracking
            })?;
            cosine(&active[i], &active[base])
        })
        .collect();

    let n_cells = cells.len();
    let conv = config.criterion_convention;
    let mut optimal = vec![MetricAccumulator::default(); n_cells];
    let mut refs = vec![vec![MetricAccumulator::default(); references.len()]; n_cells];
    engine.for_each_path(config.n_paths, config.execution, &sources, |row| {
        for (c, z) in cells.iter().enumerate() {
            optimal[c].push(&row[c], &row[c].criterion(z, conv));
            for (k, m) in row[n_cells..].iter().enumerate() {
                refs[c][k].push(m, &m.criterion(z, conv));
            }
        }
    })?;
    let cells = cells
        .iter()
        .enumerate()
        .map(|(c, z)| SweepCell {
            zeta: *z,
            active_cosine: cosines[c],
            optimal: optimal[c].finish(),
            references: refs[c].iter().map(MetricAccumulator::finish).collect(),
        })
        .collect();
    Ok(SweepReport {
        config: config.clone(),
        grid: grid.clone(),
        rho: rho_rule.label(),
        eta: eta_rule.label(),
        references,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::five_industries;
    use nalgebra::DVector;

    fn small_config(paths: usize, steps: usize) -> SimConfig {
        SimConfig {
            n_paths: paths,
            ..SimConfig::default().with_grid(steps, 1.0 / 252.0)
        }
    }

    fn x0() -> Vec<f64> {
        vec![3.0, 1.0, 2.0, 1.5, 2.5]
    }

    #[test]
    fn config_validation() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.steps, 1260);
        assert!((c.steps as f64 * c.dt - 5.0).abs() <= HORIZON_TOLERANCE);
        let bad = SimConfig {
            horizon: 4.0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            n_paths: 0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            x0: Some(vec![1.0, -1.0]),
            ..SimConfig::default()
        };
        assert!(bad.initial_values(2).is_err());
    }

    #[test]
    fn strategy_labels_round_trip() {
        for s in ["gop", "mqp", "market", "equal", "risk-parity", "optimal:0.5/1/0.001"] {
            let parsed: Strategy = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert!("nonsense".parse::<Strategy>().is_err());
    }

    #[test]
    fn standard_axis_has_twenty_one_values() {
        let a = standard_axis();
        assert_eq!(a.len(), 21);
        assert_eq!(a[0], 0.001);
        assert_eq!(a[1], 0.05);
        assert_eq!(a[20], 1.0);
        assert_eq!(SweepGrid::standard().cells().unwrap().len(), 3 * 21 * 21);
    }

    #[test]
    fn hand_evaluated_return_metrics() {
        let w = vec![WeightVector::equal(1); 2];
        let r = vec![vec![0.01], vec![0.03]];
        let m = return_risk_metrics(&w, &r, &w, 1.0 / 252.0, RiskEstimator::PerStepMean).unwrap();
        assert!((m.absolute_return - 5.04).abs() < 1e-12);
        assert!((m.absolute_risk - (252.0 * 0.0001_f64).sqrt()).abs() < 1e-12);
        assert_eq!(m.active_return, 0.0);
        assert_eq!(m.active_risk, 0.0);
        assert_eq!(m.information_ratio, None);

        let r = vec![vec![0.02], vec![0.02], vec![0.02]];
        let w = vec![WeightVector::equal(1); 3];
        let m = return_risk_metrics(&w, &r, &w, 1.0 / 252.0, RiskEstimator::PerStepMean).unwrap();
        assert_eq!(m.absolute_risk, 0.0);
        assert_eq!(m.sharpe, None);
    }

    #[test]
    fn annualized_mean_estimator_matches_printed_form() {
        let r = [0.01, 0.03, -0.02, 0.005];
        let dt = 1.0 / 252.0;
        let (ret, risk) = annualized_return_risk(&r, dt, RiskEstimator::AnnualizedMean);
        let direct: f64 = r.iter().map(|x| (x - ret).powi(2)).sum::<f64>() / 4.0 / dt;
        assert!((risk - direct.sqrt()).abs() < 1e-12);
        let n = r.len();
        let s1: f64 = r.iter().map(|x| x - r[0]).sum();
        let s2: f64 = r.iter().map(|x| (x - r[0]).powi(2)).sum();
        let (ret2, risk2) = shifted_return_risk(r[0], s1, s2, n, dt, RiskEstimator::AnnualizedMean);
        assert!((ret2 - ret).abs() < 1e-12 && (risk2 - risk).abs() < 1e-9);
    }

    #[test]
    fn single_step_relative_penalty() {
        let pi = vec![WeightVector::from_slice(&[1.0, 0.0]).unwrap()];
        let eta = vec![WeightVector::from_slice(&[0.0, 1.0]).unwrap()];
        let r = vec![vec![0.0, 0.0]];
        let id = DMatrix::identity(2, 2);
        let z = Zeta::new(0.0, 1.0, 0.0).unwrap();
        let t = performance_criterion(&pi, &eta, &eta, &r, &id, &id, &z, 1.0 / 252.0, CriterionConvention::Printed)
            .unwrap();
        assert!((t.relative_penalty - 2.0 / 252.0).abs() < 1e-15);
        let t = performance_criterion(&pi, &eta, &eta, &r, &id, &id, &z, 1.0 / 252.0, CriterionConvention::Halved)
            .unwrap();
        assert!((t.relative_penalty - 1.0 / 252.0).abs() < 1e-15);
    }

    #[test]
    fn market_tracking_itself_is_inactive() {
        let p = five_industries();
        let config = SimConfig {
            x0: Some(x0()),
            strategies: vec![Strategy::Benchmark(BenchmarkSpec::Market)],
            ..small_config(20, 60)
        };
        let r = run_backtest(&p, &config, &BenchmarkRule::Market, &BenchmarkRule::Market).unwrap();
        for m in &r.strategies[0].paths {
            assert_eq!(m.active_return, 0.0);
            assert_eq!(m.active_risk, 0.0);
            assert_eq!(m.log_relative_wealth, 0.0);
            assert_eq!(m.tracking_integral, 0.0);
            assert_eq!(m.information_ratio(), None);
        }
        assert_eq!(r.strategies[0].summary.information_ratio.mean, None);
    }

    #[test]
    fn deterministic_market_compounds_in_closed_form() {
        let p = MarketParams::unchecked(
            DVector::from_vec(vec![0.05, 0.08]),
            DVector::from_vec(vec![0.01, 0.0]),
            DMatrix::zeros(2, 2),
        );
        let growth = [0.06_f64, 0.08];
        let w = [0.3, 0.7];
        let dt = 1.0 / 252.0;
        let config = SimConfig {
            x0: Some(vec![1.0, 1.0]),
            strategies: vec![Strategy::Benchmark(BenchmarkSpec::Constant(w.to_vec()))],
            q_rule: QRule::Identity,
            ..small_config(2, 252)
        };
        let engine = Engine::new(&p, &config, &BenchmarkRule::EqualWeight, &BenchmarkRule::EqualWeight).unwrap();
        let source = WeightSource::Constant(w.to_vec());
        let rows = engine.run_path(0, &[source]).unwrap();
        let step: f64 = (0..2).map(|j| w[j] * ((growth[j] * dt).exp() - 1.0)).sum();
        let expect = (1.0 + step).powi(252);
        assert!((rows[0].terminal_wealth - expect).abs() < 1e-10);
        assert!(rows[0].absolute_risk < 1e-12);
    }

    #[test]
    fn engine_matches_direct_evaluation() {
        let p = five_industries();
        let zeta = Zeta::new(0.5, 0.3, 0.2).unwrap();
        let config = SimConfig {
            x0: Some(x0()),
            q_rule: QRule::Identity,
            strategies: vec![Strategy::Optimal(zeta), Strategy::Gop],
            criterion_zeta: zeta,
            ..small_config(3, 40)
        };
        let report = run_backtest(&p, &config, &BenchmarkRule::EqualWeight, &BenchmarkRule::Market).unwrap();
        let prefs = Preferences::new(zeta, QRule::Identity).unwrap();
        let q = DMatrix::identity(5, 5);
        for path_index in 0..3 {
            let path = market::simulate_path(&p, &x0(), 40, config.dt, market::path_seed(config.seed, path_index)).unwrap();
            let mut pis = Vec::new();
            let mut etas = Vec::new();
            let mut rhos = Vec::new();
            let mut rets = Vec::new();
            for s in 0..40 {
                let x = path.values_at(s);
                let eta = BenchmarkRule::Market.evaluate(0.0, x).unwrap();
                pis.push(allocation::optimal_weights(&prefs, &p, &eta, 0.0).unwrap());
                etas.push(eta);
                rhos.push(WeightVector::equal(5));
                let y = path.values_at(s + 1);
                rets.push((0..5).map(|j| y[j] / x[j] - 1.0).collect::<Vec<_>>());
            }
            let terms = performance_criterion(&pis, &rhos, &etas, &rets, p.covariance(), &q, &zeta, config.dt, config.criterion_convention).unwrap();
            let rr = return_risk_metrics(&pis, &rets, &rhos, config.dt, config.risk_estimator).unwrap();
            let m = report.strategies[0].paths[path_index as usize];
            let got = m.criterion(&zeta, config.criterion_convention);
            assert!((got.terminal_reward - terms.terminal_reward).abs() < 1e-12);
            assert!((got.relative_penalty - terms.relative_penalty).abs() < 1e-12);
            assert!((got.absolute_penalty - terms.absolute_penalty).abs() < 1e-12);
            assert!((m.absolute_return - rr.absolute_return).abs() < 1e-10);
            assert!((m.active_return - rr.active_return).abs() < 1e-10);
            assert!((m.absolute_risk - rr.absolute_risk).abs() < 1e-9);
            assert!((m.active_risk - rr.active_risk).abs() < 1e-9);
        }
    }

    #[test]
    fn criterion_is_additive() {
        let p = five_industries();
        let r = run_backtest(&p, &small_config(10, 30), &BenchmarkRule::Market, &BenchmarkRule::Market).unwrap();
        for s in &r.strategies {
            for m in &s.paths {
                let t = m.criterion(&r.config.criterion_zeta, r.config.criterion_convention);
                assert_eq!(t.criterion, t.terminal_reward - t.relative_penalty - t.absolute_penalty);
            }
        }
    }

    #[test]
    fn execution_mode_does_not_change_results() {
        let p = five_industries();
        let seq = SimConfig {
            execution: Execution::Sequential,
            ..small_config(300, 20)
        };
        let par = SimConfig {
            execution: Execution::Parallel,
            ..seq.clone()
        };
        let a = run_backtest(&p, &seq, &BenchmarkRule::Market, &BenchmarkRule::Market).unwrap();
        let b = run_backtest(&p, &par, &BenchmarkRule::Market, &BenchmarkRule::Market).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(true), b.to_json(true));
    }

    #[test]
    fn scaled_preferences_give_identical_weight_paths() {
        let p = five_industries();
        let grid = SweepGrid {
            outperformance: vec![0.5, 1.0],
            tracking: vec![0.5, 1.0],
            absolute: vec![0.5, 1.0],
        };
        let r = zeta_sweep(&p, &small_config(20, 30), &grid, &BenchmarkRule::Market, &BenchmarkRule::Market).unwrap();
        let a = r.cell(&Zeta::new(0.5, 0.5, 0.5).unwrap()).unwrap();
        let b = r.cell(&Zeta::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        let close = |x: Summary, y: Summary| (x.mean.unwrap() - y.mean.unwrap()).abs() < 1e-12;
        assert!(close(a.optimal.absolute_return, b.optimal.absolute_return));
        assert!(close(a.optimal.active_risk, b.optimal.active_risk));
        let ca = a.optimal.criterion.mean.unwrap();
        let cb = b.optimal.criterion.mean.unwrap();
        assert!((2.0 * ca - cb).abs() < 1e-12);
        for c in &r.cells {
            assert!(c.active_cosine.unwrap() > 1.0 - 1e-10);
        }
    }

    #[test]
    fn sweep_matches_backtest_on_the_same_paths() {
        let p = five_industries();
        let z = Zeta::new(0.5, 0.05, 0.1).unwrap();
        let config = SimConfig {
            criterion_zeta: z,
            strategies: vec![Strategy::Optimal(z), Strategy::Gop, Strategy::Benchmark(BenchmarkSpec::Market)],
            ..small_config(15, 25)
        };
        let grid = SweepGrid {
            outperformance: vec![0.5],
            tracking: vec![0.05],
            absolute: vec![0.1],
        };
        let s = zeta_sweep(&p, &config, &grid, &BenchmarkRule::Market, &BenchmarkRule::Market).unwrap();
        let b = run_backtest(&p, &config, &BenchmarkRule::Market, &BenchmarkRule::Market).unwrap();
        assert_eq!(s.cells[0].optimal, b.strategies[0].summary);
        assert_eq!(s.cells[0].references[0], b.strategies[1].summary);
        assert_eq!(s.cells[0].references[1], b.strategies[2].summary);
        let csv = s.to_csv();
        assert!(csv.lines().nth(1).unwrap() == "zeta0,zeta1,zeta2,strategy,metric,mean,sd");
        assert_eq!(csv.lines().count(), 2 + 3 * METRIC_NAMES.len());
    }

    #[test]
    fn gop_leads_on_return_and_risk() {
        let p = five_industries();
        let config = SimConfig {
            strategies: vec![Strategy::Gop, Strategy::Mqp, Strategy::Benchmark(BenchmarkSpec::Market)],
            ..small_config(100, 252)
        };
        let r = run_backtest(&p, &config, &BenchmarkRule::Market, &BenchmarkRule::Market).unwrap();
        let m = |i: usize| r.strategies[i].summary;
        for i in 1..3 {
            assert!(m(0).absolute_return.mean > m(i).absolute_return.mean);
            assert!(m(0).absolute_risk.mean > m(i).absolute_risk.mean);
        }
    }
}
