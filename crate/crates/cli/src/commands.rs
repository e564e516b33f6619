use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use optrack::allocation::{self, Preferences, QRule, Zeta, DEFAULT_WEIGHT_WARNING};
use optrack::backtest::{self, SimConfig, Strategy, SweepGrid};
use optrack::benchmarks::BenchmarkSpec;
use optrack::estimation::{self, CovarianceDenominator, LoadOptions};
use optrack::{presets, BenchmarkRule, Error, Execution, MarketParams};
use serde_json::Value;

use crate::config::{merge_with_file, write_file, RunManifest};
use crate::{AllocateOpts, EstimateOpts, SimulateOpts};

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("{what}: {v:?} is not a number"))
        })
        .collect()
}

fn parse_axis(s: Option<&str>, default: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    match s {
        None => Ok(default),
        Some("standard") => Ok(backtest::standard_axis()),
        Some(list) => parse_list(list, what),
    }
}

fn load_params(path: Option<&Path>) -> Result<MarketParams> {
    match path {
        None => Ok(presets::five_industries()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            MarketParams::from_json(&text).with_context(|| format!("invalid parameters in {}", p.display()))
        }
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map_or_else(|| PathBuf::from(name), |d| d.join(name))
}

pub fn estimate(flags: &EstimateOpts) -> Result<()> {
    let o: EstimateOpts = merge_with_file("estimate", flags, flags.config.as_deref())?;
    let with_div = o.with_div.as_deref().ok_or_else(|| anyhow!("--with-div is required"))?;
    let ex_div = o.ex_div.as_deref().ok_or_else(|| anyhow!("--ex-div is required"))?;
    let output = o.output.clone().ok_or_else(|| anyhow!("--output is required"))?;
    let opts = LoadOptions {
        from: o.from,
        to: o.to,
        period_length: o.period_length.unwrap_or(estimation::MONTHLY),
        percent: !o.decimal,
    };
    let denominator: CovarianceDenominator = o.denominator.as_deref().unwrap_or("unbiased").parse()?;
    let table = estimation::load_returns_csv(with_div, ex_div, &opts)?;
    let (params, report) = estimation::estimate_with_report(&table, denominator)?;

    let mut report_value = serde_json::to_value(&report)?;
    if let Some(sizes) = o.sizes.as_deref() {
        let text = fs::read_to_string(sizes).with_context(|| format!("reading {}", sizes.display()))?;
        let x0 = estimation::initial_values_from_sizes(&text, params.n(), &opts)
            .with_context(|| format!("in {}", sizes.display()))?;
        report_value["initial_values"] = serde_json::to_value(&x0)?;
    }

    let report_path = o.report.clone().unwrap_or_else(|| sibling(&output, "estimation_report.json"));
    let manifest_path = o.manifest.clone().unwrap_or_else(|| sibling(&output, "manifest.json"));
    write_file(&output, &params.to_json())?;
    write_file(&report_path, &serde_json::to_string_pretty(&report_value)?)?;

    let mut manifest = RunManifest::new("estimate", &o, None)?;
    manifest.input(with_div)?;
    manifest.input(ex_div)?;
    if let Some(s) = o.sizes.as_deref() {
        manifest.input(s)?;
    }
    manifest.output(&output)?;
    manifest.output(&report_path)?;
    manifest.write(&manifest_path)?;

    println!(
        "{} periods {}..{}",
        report.sample_size, report.first_period, report.last_period
    );
    println!("{:<10}{:>10}{:>10}{:>10}", "asset", "growth%", "div%", "stdev%");
    for (i, name) in report.names.iter().enumerate() {
        println!(
            "{:<10}{:>10.2}{:>10.2}{:>10.2}",
            name,
            100.0 * report.growth[i],
            100.0 * report.dividend[i],
            100.0 * report.stdev[i]
        );
    }
    Ok(())
}

fn with_hint(e: Error) -> anyhow::Error {
    match e {
        Error::NotPositiveDefinite { .. } => anyhow!(
            "{e}\nhint: the covariance or penalty matrix is singular or nearly so; remove \
             collinear assets, re-estimate over a longer sample, or add an absolute \
             penalty (zeta2 > 0) with a positive definite Q such as `identity`"
        ),
        Error::InvalidPreferences(_) => anyhow!("{e}\nhint: pass --zeta with at least one positive entry"),
        other => other.into(),
    }
}

fn state(x: Option<&str>, n: usize) -> Result<Vec<f64>> {
    match x {
        None => Ok(vec![1.0; n]),
        Some(s) => {
            let v = parse_list(s, "asset values")?;
            if v.len() != n {
                bail!("{} asset values given for {n} assets", v.len());
            }
            Ok(v)
        }
    }
}

pub fn allocate(flags: &AllocateOpts) -> Result<()> {
    let o: AllocateOpts = merge_with_file("allocate", flags, flags.config.as_deref())?;
    let params = load_params(o.params.as_deref())?;
    let zeta: Zeta = o
        .zeta
        .as_deref()
        .ok_or_else(|| anyhow!("--zeta is required"))?
        .parse()
        .map_err(with_hint)?;
    let q_rule: QRule = o.q.as_deref().unwrap_or("covariance").parse()?;
    let prefs = Preferences::new(zeta, q_rule).map_err(with_hint)?;
    let cov = params.covariance();
    let rho_rule = o.rho.as_deref().unwrap_or("market").parse::<BenchmarkSpec>()?.resolve(cov)?;
    let eta_rule = o.eta.as_deref().unwrap_or("market").parse::<BenchmarkSpec>()?.resolve(cov)?;
    let x = state(o.x.as_deref(), params.n())?;
    let t = o.t.unwrap_or(0.0);
    let rho = rho_rule.evaluate(t, &x)?;
    let eta = eta_rule.evaluate(t, &x)?;
    let diag = allocation::diagnose(
        &prefs,
        &params,
        &rho,
        &eta,
        t,
        o.weight_warning.unwrap_or(DEFAULT_WEIGHT_WARNING),
    )
    .map_err(with_hint)?;
    for w in &diag.warnings {
        eprintln!("warning: {w}");
    }
    let json = serde_json::to_string_pretty(&diag)?;
    match &o.output {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    if let Some(path) = &o.manifest {
        let mut manifest = RunManifest::new("allocate", &o, None)?;
        if let Some(p) = &o.params {
            manifest.input(p)?;
        }
        if let Some(out) = &o.output {
            manifest.output(out)?;
        }
        manifest.write(path)?;
    }
    Ok(())
}

fn initial_values(o: &SimulateOpts, n: usize) -> Result<Option<Vec<f64>>> {
    if let Some(s) = &o.x0 {
        return state(Some(s), n).map(Some);
    }
    if let Some(path) = &o.x0_from {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let v: Value = serde_json::from_str(&text)?;
        let x: Vec<f64> = serde_json::from_value(
            v.get("initial_values")
                .cloned()
                .ok_or_else(|| anyhow!("{} has no initial_values", path.display()))?,
        )?;
        return state(
            Some(&x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")),
            n,
        )
        .map(Some);
    }
    Ok(None)
}

fn sim_config(o: &SimulateOpts, params: &MarketParams) -> Result<SimConfig> {
    let defaults = SimConfig::default();
    let dt = o.dt.unwrap_or(defaults.dt);
    let steps = match (o.steps, o.horizon) {
        (Some(s), _) => s,
        (None, Some(h)) => (h / dt).round() as usize,
        (None, None) => defaults.steps,
    };
    let mut config = SimConfig {
        n_paths: o.paths.unwrap_or(defaults.n_paths),
        seed: o.seed.unwrap_or(defaults.seed),
        x0: initial_values(o, params.n())?,
        q_rule: o.q.as_deref().unwrap_or("covariance").parse()?,
        criterion_convention: o.convention.as_deref().unwrap_or("printed").parse()?,
        risk_estimator: o.risk_estimator.as_deref().unwrap_or("per-step-mean").parse()?,
        execution: if o.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        ..defaults.with_grid(steps, dt)
    };
    if let Some(h) = o.horizon {
        config.horizon = h;
    }
    if let Some(z) = &o.zeta {
        config.criterion_zeta = z.parse().map_err(with_hint)?;
    }
    config.validate()?;
    Ok(config)
}

fn parse_strategies(list: &str) -> Result<Vec<Strategy>> {
    let mut out = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        out.push(token.parse::<Strategy>()?);
    }
    if out.is_empty() {
        bail!("--strategies is empty");
    }
    Ok(out)
}

pub fn simulate(flags: &SimulateOpts, sweep: bool) -> Result<()> {
    let command = if sweep { "sweep" } else { "simulate" };
    let o: SimulateOpts = merge_with_file(command, flags, flags.config.as_deref())?;
    let params = load_params(o.params.as_deref())?;
    let mut config = sim_config(&o, &params)?;
    let cov = params.covariance();
    let rho_rule: BenchmarkRule = o.rho.as_deref().unwrap_or("market").parse::<BenchmarkSpec>()?.resolve(cov)?;
    let eta_rule: BenchmarkRule = o.eta.as_deref().unwrap_or("market").parse::<BenchmarkSpec>()?.resolve(cov)?;
    let out_dir = o.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let csv_path = out_dir.join("metrics.csv");
    let json_path = out_dir.join("metrics.json");

    let grid_mode = sweep || o.strategies.is_none();
    let (csv, json, summary) = if grid_mode {
        config.strategies = match &o.strategies {
            Some(list) => parse_strategies(list)?,
            None => vec![
                Strategy::Gop,
                Strategy::Mqp,
                Strategy::Benchmark(BenchmarkSpec::Market),
            ],
        };
        let grid = SweepGrid {
            outperformance: parse_axis(o.zeta0.as_deref(), vec![0.1, 0.5, 5.0], "zeta0")?,
            tracking: parse_axis(o.zeta1.as_deref(), backtest::standard_axis(), "zeta1")?,
            absolute: parse_axis(o.zeta2.as_deref(), backtest::standard_axis(), "zeta2")?,
        };
        let report = backtest::zeta_sweep(&params, &config, &grid, &rho_rule, &eta_rule)?;
        let summary = format!("{} cells x {} paths", report.cells.len(), config.n_paths);
        (report.to_csv(), report.to_json(), summary)
    } else {
        let mut strategies = parse_strategies(o.strategies.as_deref().unwrap_or_default())?;
        if o.zeta.is_some() && !strategies.iter().any(|s| matches!(s, Strategy::Optimal(_))) {
            strategies.insert(0, Strategy::Optimal(config.criterion_zeta));
        }
        config.strategies = strategies;
        let report = backtest::run_backtest(&params, &config, &rho_rule, &eta_rule)?;
        let summary = format!("{} strategies x {} paths", report.strategies.len(), config.n_paths);
        (report.to_csv(), report.to_json(o.include_paths), summary)
    };
    write_file(&csv_path, &csv)?;
    write_file(&json_path, &json)?;

    let mut manifest = RunManifest::new(command, &o, Some(config.seed))?;
    if let Some(p) = &o.params {
        manifest.input(p)?;
    }
    if let Some(p) = &o.x0_from {
        manifest.input(p)?;
    }
    manifest.output(&csv_path)?;
    manifest.output(&json_path)?;
    manifest.write(&out_dir.join("manifest.json"))?;
    println!("{summary}; wrote {}", out_dir.display());
    Ok(())
}
