//! Markovian benchmark rules `(t, x) -> weights` used as performance
//! benchmark and tracking portfolio.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::portfolio::WeightVector;

/// Capitalization weights `x_i / Σ_j x_j`; requires every value strictly positive.
pub fn market_weights(x: &[f64]) -> Result<WeightVector> {
    let mut out = vec![0.0; x.len()];
    market_weights_into(x, &mut out)?;
    WeightVector::new(DVector::from_vec(out))
}

pub(crate) fn market_weights_into(x: &[f64], out: &mut [f64]) -> Result<()> {
    let mut total = 0.0;
    for (index, &value) in x.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveValue { index, value });
        }
        total += value;
    }
    for (o, v) in out.iter_mut().zip(x) {
        *o = v / total;
    }
    Ok(())
}

/// Weights proportional to `1 / Σ_ii`.
pub fn risk_parity_weights(cov: &DMatrix<f64>) -> Result<WeightVector> {
    let n = cov.nrows();
    crate::linalg::check_square(cov, n, "covariance")?;
    let inv: Vec<f64> = (0..n)
        .map(|i| {
            let v = cov[(i, i)];
            if v > 0.0 {
                Ok(1.0 / v)
            } else {
                Err(Error::NotPositiveDefinite {
                    context: format!("variance of asset {i}"),
                    min_eigenvalue: v,
                })
            }
        })
        .collect::<Result<_>>()?;
    let total: f64 = inv.iter().sum();
    WeightVector::new(DVector::from_iterator(n, inv.into_iter().map(|v| v / total)))
}

pub type CustomFn = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
pub enum BenchmarkRule {
    Market,
    EqualWeight,
    RiskParity(WeightVector),
    Constant(WeightVector),
    /// User-supplied weight map. Output is re-validated on every call.
    Custom { name: String, map: Arc<CustomFn> },
}

impl fmt::Debug for BenchmarkRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkRule::Custom { name, .. } => write!(f, "Custom({name})"),
            other => write!(f, "{}", other.label()),
        }
    }
}

impl BenchmarkRule {
    pub fn risk_parity(cov: &DMatrix<f64>) -> Result<Self> {
        Ok(BenchmarkRule::RiskParity(risk_parity_weights(cov)?))
    }

    pub fn custom<F>(name: impl Into<String>, map: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        BenchmarkRule::Custom {
            name: name.into(),
            map: Arc::new(map),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BenchmarkRule::Market => "market".into(),
            BenchmarkRule::EqualWeight => "equal".into(),
            BenchmarkRule::RiskParity(_) => "risk-parity".into(),
            BenchmarkRule::Constant(w) => format!(
                "constant:{}",
                w.as_slice()
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            BenchmarkRule::Custom { name, .. } => name.clone(),
        }
    }

    /// Weights when the rule does not depend on `(t, x)`.
    pub fn state_independent(&self, n: usize) -> Option<WeightVector> {
        match self {
            BenchmarkRule::EqualWeight => Some(WeightVector::equal(n)),
            BenchmarkRule::RiskParity(w) | BenchmarkRule::Constant(w) => Some(w.clone()),
            _ => None,
        }
    }

    pub fn evaluate(&self, t: f64, x: &[f64]) -> Result<WeightVector> {
        let mut out = vec![0.0; x.len()];
        self.evaluate_into(t, x, &mut out)?;
        WeightVector::new(DVector::from_vec(out))
    }

    /// Writes the weights into `out`; allocation-free for the built-in rules.
    pub fn evaluate_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let n = x.len();
        if out.len() != n {
            return Err(Error::DimensionMismatch("output buffer length".into()));
        }
        let fixed = |w: &WeightVector, out: &mut [f64]| {
            if w.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "benchmark has {} weights for {n} assets",
                    w.len()
                )));
            }
            out.copy_from_slice(w.as_slice());
            Ok(())
        };
        match self {
            BenchmarkRule::Market => market_weights_into(x, out),
            BenchmarkRule::EqualWeight => {
                out.fill(1.0 / n as f64);
                Ok(())
            }
            BenchmarkRule::RiskParity(w) | BenchmarkRule::Constant(w) => fixed(w, out),
            BenchmarkRule::Custom { map, .. } => {
                let w = WeightVector::new(DVector::from_vec(map(t, x)))?;
                fixed(&w, out)
            }
        }
    }
}

/// Command-line form of a benchmark rule:
/// `market | equal | risk-parity | constant:<w1,...,wn>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BenchmarkSpec {
    Market,
    Equal,
    RiskParity,
    Constant(Vec<f64>),
}

impl BenchmarkSpec {
    pub fn resolve(&self, cov: &DMatrix<f64>) -> Result<BenchmarkRule> {
        Ok(match self {
            BenchmarkSpec::Market => BenchmarkRule::Market,
            BenchmarkSpec::Equal => BenchmarkRule::EqualWeight,
            BenchmarkSpec::RiskParity => BenchmarkRule::risk_parity(cov)?,
            BenchmarkSpec::Constant(w) => {
                if w.len() != cov.nrows() {
                    return Err(Error::DimensionMismatch(format!(
                        "constant benchmark has {} weights for {} assets",
                        w.len(),
                        cov.nrows()
                    )));
                }
                BenchmarkRule::Constant(WeightVector::from_slice(w)?)
            }
        })
    }
}

impl FromStr for BenchmarkSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "market" => Ok(BenchmarkSpec::Market),
            "equal" | "equal-weight" => Ok(BenchmarkSpec::Equal),
            "risk-parity" => Ok(BenchmarkSpec::RiskParity),
            other => {
                let Some(list) = other.strip_prefix("constant:") else {
                    return Err(Error::InvalidConfig(format!("unknown benchmark {other:?}")));
                };
                let w = list
                    .split(',')
                    .map(|v| {
                        v.trim().parse::<f64>().map_err(|_| {
                            Error::InvalidConfig(format!("bad constant weight {v:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(BenchmarkSpec::Constant(w))
            }
        }
    }
}

impl TryFrom<String> for BenchmarkSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BenchmarkSpec> for String {
    fn from(b: BenchmarkSpec) -> String {
        b.to_string()
    }
}

impl fmt::Display for BenchmarkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkSpec::Market => f.write_str("market"),
            BenchmarkSpec::Equal => f.write_str("equal"),
            BenchmarkSpec::RiskParity => f.write_str("risk-parity"),
            BenchmarkSpec::Constant(w) => {
                let parts: Vec<String> = w.iter().map(|v| v.to_string()).collect();
                write!(f, "constant:{}", parts.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{five_industries, FIVE_INDUSTRY_STDEV};
    use proptest::prelude::*;

    #[test]
    fn market_weight_examples() {
        assert_eq!(market_weights(&[2.0; 4]).unwrap().as_slice(), &[0.25; 4]);
        assert_eq!(market_weights(&[1.0, 3.0]).unwrap().as_slice(), &[0.25, 0.75]);
        assert!(matches!(
            market_weights(&[1.0, 0.0]),
            Err(Error::NonPositiveValue { index: 1, .. })
        ));
    }

    #[test]
    fn risk_parity_examples() {
        let w = risk_parity_weights(&DMatrix::identity(3, 3)).unwrap();
        assert!(w.as_slice().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let w = risk_parity_weights(&DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.04])))
            .unwrap();
        assert!((w.as_slice()[0] - 0.8).abs() < 1e-15 && (w.as_slice()[1] - 0.2).abs() < 1e-15);

        let w = risk_parity_weights(five_industries().covariance()).unwrap();
        let inv: Vec<f64> = FIVE_INDUSTRY_STDEV.iter().map(|s| 1.0 / (s * s)).collect();
        let total: f64 = inv.iter().sum();
        for (a, b) in w.as_slice().iter().zip(&inv) {
            assert!((a - b / total).abs() < 1e-14);
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("market".parse::<BenchmarkSpec>().unwrap(), BenchmarkSpec::Market);
        assert_eq!(
            "constant:0.5,0.5".parse::<BenchmarkSpec>().unwrap(),
            BenchmarkSpec::Constant(vec![0.5, 0.5])
        );
        assert!("bogus".parse::<BenchmarkSpec>().is_err());
        let spec = BenchmarkSpec::Constant(vec![0.25, 0.75]);
        assert_eq!(spec.to_string().parse::<BenchmarkSpec>().unwrap(), spec);
        let cov = DMatrix::identity(2, 2);
        assert!(BenchmarkSpec::Constant(vec![0.5, 0.6]).resolve(&cov).is_err());
        assert!(BenchmarkSpec::Constant(vec![1.0]).resolve(&cov).is_err());
    }

    #[test]
    fn custom_rule_output_is_revalidated() {
        let good = BenchmarkRule::custom("first", |_, x| {
            let mut w = vec![0.0; x.len()];
            w[0] = 1.0;
            w
        });
        assert_eq!(good.evaluate(0.0, &[1.0, 2.0]).unwrap().as_slice(), &[1.0, 0.0]);
        let bad = BenchmarkRule::custom("leaky", |_, x| vec![0.4; x.len()]);
        assert!(matches!(
            bad.evaluate(0.0, &[1.0, 2.0]),
            Err(Error::WeightsDoNotSumToOne { .. })
        ));
        let nan = BenchmarkRule::custom("nan", |_, x| vec![f64::NAN; x.len()]);
        assert!(nan.evaluate(0.0, &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn market_weights_scale_invariant_and_in_open_simplex(
            x in prop::collection::vec(0.01..100.0_f64, 2..10),
            c in 0.001..1000.0_f64,
        ) {
            let a = market_weights(&x).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            let b = market_weights(&scaled).unwrap();
            prop_assert!((a.as_vector() - b.as_vector()).amax() < 1e-14);
            prop_assert!(a.as_slice().iter().all(|w| *w > 0.0 && *w < 1.0));
        }

        #[test]
        fn built_in_rules_in_closed_simplex(
            x in prop::collection::vec(0.01..100.0_f64, 5),
        ) {
            let cov = five_industries().covariance().clone();
            for rule in [
                BenchmarkRule::Market,
                BenchmarkRule::EqualWeight,
                BenchmarkRule::risk_parity(&cov).unwrap(),
            ] {
                let w = rule.evaluate(0.3, &x).unwrap();
                prop_assert!(w.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
