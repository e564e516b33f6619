//! Portfolio arithmetic: growth, dividend and volatility of a weighting,
//! relative-return drift and tracking variance.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;
use crate::market::MarketParams;

/// Tolerance on `|1'w - 1|`. Weights off by more are rejected, never renormalized.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-10;

/// Proportions of wealth per asset; entries may be negative (short positions).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::DimensionMismatch("empty weight vector".into()));
        }
        linalg::check_finite_vector(&weights, "weights")?;
        let sum = weights.sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightsDoNotSumToOne {
                sum,
                tolerance: WEIGHT_SUM_TOLERANCE,
            });
        }
        Ok(Self(weights))
    }

    pub fn from_slice(weights: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(weights))
    }

    pub fn equal(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    /// All wealth in asset `i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut w = DVector::zeros(n);
        w[i] = 1.0;
        Self(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

impl Serialize for WeightVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

fn check_dims(pi: &WeightVector, cov: &DMatrix<f64>) -> Result<()> {
    linalg::check_square(cov, pi.len(), "covariance")
}

/// Half the gap between the weighted average of asset variances and the
/// portfolio variance: `½[π'diag(Σ) − π'Σπ]`.
pub fn excess_growth_rate(pi: &WeightVector, cov: &DMatrix<f64>) -> Result<f64> {
    check_dims(pi, cov)?;
    let w = pi.as_vector();
    let weighted_var: f64 = w.iter().zip(cov.diagonal().iter()).map(|(a, b)| a * b).sum();
    Ok(0.5 * (weighted_var - linalg::quad_form(w, cov, w)))
}

/// Growth rate, dividend rate and volatility vector of a portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioStats {
    pub growth: f64,
    pub dividend: f64,
    pub volatility: DVector<f64>,
}

pub fn portfolio_stats(pi: &WeightVector, params: &MarketParams) -> Result<PortfolioStats> {
    check_dims(pi, params.covariance())?;
    let w = pi.as_vector();
    Ok(PortfolioStats {
        growth: w.dot(params.growth()) + excess_growth_rate(pi, params.covariance())?,
        dividend: w.dot(params.dividend()),
        volatility: params.volatility().transpose() * w,
    })
}

/// Instantaneous rate of return per asset, `α = γ + δ + ½diag(Σ)`.
pub fn rate_of_return(params: &MarketParams) -> DVector<f64> {
    params.log_drift() + params.covariance().diagonal() * 0.5
}

/// Drift of `log(Z_π / Z_ρ)`, computed as `π'α − ½π'Σπ − (γ_ρ + δ_ρ)`.
///
/// In debug builds the expansion is cross-checked against the difference of
/// portfolio growth-plus-dividend rates.
pub fn relative_drift(
    _t: f64,
    rho: &WeightVector,
    pi: &WeightVector,
    params: &MarketParams,
) -> Result<f64> {
    check_dims(pi, params.covariance())?;
    check_dims(rho, params.covariance())?;
    let w = pi.as_vector();
    let alpha = rate_of_return(params);
    let rho_stats = portfolio_stats(rho, params)?;
    let drift = w.dot(&alpha) - 0.5 * linalg::quad_form(w, params.covariance(), w)
        - (rho_stats.growth + rho_stats.dividend);
    #[cfg(debug_assertions)]
    {
        let pi_stats = portfolio_stats(pi, params)?;
        let direct =
            (pi_stats.growth + pi_stats.dividend) - (rho_stats.growth + rho_stats.dividend);
        debug_assert!(
            (direct - drift).abs() <= 1e-12 * (1.0 + drift.abs()),
            "relative drift forms disagree: {direct} vs {drift}"
        );
    }
    Ok(drift)
}

/// Active risk (tracking variance) rate `(π−ρ)'Σ(π−ρ)`.
pub fn tracking_variance(pi: &WeightVector, rho: &WeightVector, cov: &DMatrix<f64>) -> Result<f64> {
    check_dims(pi, cov)?;
    check_dims(rho, cov)?;
    let diff = pi.as_vector() - rho.as_vector();
    Ok(linalg::quad_form(&diff, cov, &diff).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::five_industries;
    use proptest::prelude::*;

    fn w(v: &[f64]) -> WeightVector {
        WeightVector::from_slice(v).unwrap()
    }

    fn identity_market() -> MarketParams {
        MarketParams::new(
            DVector::zeros(2),
            DVector::zeros(2),
            DMatrix::identity(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn weight_vector_rejects_bad_sums() {
        assert!(matches!(
            WeightVector::from_slice(&[0.5, 0.6]),
            Err(Error::WeightsDoNotSumToOne { .. })
        ));
        assert!(WeightVector::from_slice(&[f64::NAN, 1.0]).is_err());
        assert!(WeightVector::from_slice(&[1.5, -0.5]).is_ok());
    }

    #[test]
    fn excess_growth_examples() {
        let one = DMatrix::from_element(1, 1, 0.04);
        assert_eq!(excess_growth_rate(&w(&[1.0]), &one).unwrap(), 0.0);
        let eye = DMatrix::identity(2, 2);
        assert!((excess_growth_rate(&w(&[0.5, 0.5]), &eye).unwrap() - 0.25).abs() < 1e-15);
        let cov = five_industries().covariance().clone();
        for i in 0..5 {
            assert!(excess_growth_rate(&WeightVector::unit(5, i), &cov).unwrap().abs() < 1e-15);
        }
        assert!(excess_growth_rate(&w(&[0.5, 0.5]), &cov).is_err());
    }

    #[test]
    fn stats_examples() {
        let p = five_industries();
        let s = portfolio_stats(&WeightVector::unit(5, 0), &p).unwrap();
        assert!((s.growth - 0.074).abs() < 1e-15);
        assert!((s.dividend - 0.021).abs() < 1e-15);
        assert!((&s.volatility - p.volatility().row(0).transpose()).amax() < 1e-15);

        let s = portfolio_stats(&w(&[0.5, 0.5]), &identity_market()).unwrap();
        assert!((s.growth - 0.25).abs() < 1e-15);
        assert_eq!(s.dividend, 0.0);
    }

    #[test]
    fn equal_weight_stats_against_direct_sums() {
        // Spelled-out sums over the table entries, independent of the matrix code.
        use crate::presets::*;
        let p = five_industries();
        let s = portfolio_stats(&WeightVector::equal(5), &p).unwrap();
        let mut avg_var = 0.0;
        let mut port_var = 0.0;
        for i in 0..5 {
            avg_var += 0.2 * FIVE_INDUSTRY_STDEV[i] * FIVE_INDUSTRY_STDEV[i];
            for j in 0..5 {
                port_var += 0.04
                    * FIVE_INDUSTRY_STDEV[i]
                    * FIVE_INDUSTRY_STDEV[j]
                    * FIVE_INDUSTRY_CORRELATION[i][j];
            }
        }
        let growth = FIVE_INDUSTRY_GROWTH.iter().sum::<f64>() / 5.0 + 0.5 * (avg_var - port_var);
        let dividend = FIVE_INDUSTRY_DIVIDEND.iter().sum::<f64>() / 5.0;
        assert!((s.growth - growth).abs() < 1e-14);
        assert!((s.dividend - dividend).abs() < 1e-15);
    }

    #[test]
    fn rate_of_return_examples() {
        let a = rate_of_return(&identity_market());
        assert_eq!(a.as_slice(), &[0.5, 0.5]);
        let a = rate_of_return(&five_industries());
        assert!((a[0] - 0.1022).abs() < 1e-12);
        let single = MarketParams::new(
            DVector::from_vec(vec![0.05]),
            DVector::from_vec(vec![0.01]),
            DMatrix::from_element(1, 1, 0.2),
        )
        .unwrap();
        assert!((rate_of_return(&single)[0] - 0.08).abs() < 1e-15);
    }

    #[test]
    fn relative_drift_examples() {
        let m = identity_market();
        let eq = w(&[0.5, 0.5]);
        assert!(relative_drift(0.0, &eq, &eq, &m).unwrap().abs() < 1e-15);
        let a = relative_drift(0.0, &eq, &w(&[1.0, 0.0]), &m).unwrap();
        assert!((a + 0.25).abs() < 1e-15);
    }

    #[test]
    fn tracking_variance_examples() {
        let eye = DMatrix::identity(2, 2);
        assert_eq!(tracking_variance(&w(&[1.0, 0.0]), &w(&[0.0, 1.0]), &eye).unwrap(), 2.0);
        let eq = WeightVector::equal(2);
        assert_eq!(tracking_variance(&eq, &eq, &eye).unwrap(), 0.0);
    }

    fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0..1.0_f64, n * n).prop_map(move |v| {
            let g = DMatrix::from_vec(n, n, v);
            &g * g.transpose() + DMatrix::identity(n, n) * 0.05
        })
    }

    fn weights(n: usize, long_only: bool) -> impl Strategy<Value = WeightVector> {
        let lo = if long_only { 0.01 } else { -2.0 };
        prop::collection::vec(lo..2.0_f64, n).prop_map(move |v| {
            let mut d = DVector::from_vec(v);
            if long_only {
                let s = d.sum();
                d /= s;
            } else {
                let shift = (1.0 - d.sum()) / n as f64;
                d.add_scalar_mut(shift);
            }
            WeightVector::new(d).unwrap()
        })
    }

    proptest! {
        #[test]
        fn long_only_excess_growth_nonnegative(
            (cov, pi) in (2usize..8).prop_flat_map(|n| (spd(n), weights(n, true)))
        ) {
            prop_assert!(excess_growth_rate(&pi, &cov).unwrap() >= -1e-12);
        }

        #[test]
        fn tracking_variance_symmetric_and_positive(
            (cov, a, b) in (2usize..8).prop_flat_map(|n| (spd(n), weights(n, false), weights(n, false)))
        ) {
            let ab = tracking_variance(&a, &b, &cov).unwrap();
            let ba = tracking_variance(&b, &a, &cov).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
            prop_assert_eq!(tracking_variance(&a, &a, &cov).unwrap(), 0.0);
            if (a.as_vector() - b.as_vector()).amax() > 1e-6 {
                prop_assert!(ab > 0.0);
            }
        }

        #[test]
        fn relative_drift_matches_stat_difference(
            (l, pi, rho) in (2usize..6).prop_flat_map(|n| (spd(n), weights(n, false), weights(n, false)))
        ) {
            let n = pi.len();
            let chol = crate::linalg::SpdFactor::new(&l, "cov").unwrap().lower();
            let params = MarketParams::new(
                DVector::from_fn(n, |i, _| 0.01 * i as f64),
                DVector::from_element(n, 0.02),
                chol,
            ).unwrap();
            let a = relative_drift(0.0, &rho, &pi, &params).unwrap();
            let sp = portfolio_stats(&pi, &params).unwrap();
            let sr = portfolio_stats(&rho, &params).unwrap();
            let direct = (sp.growth + sp.dividend) - (sr.growth + sr.dividend);
            prop_assert!((a - direct).abs() <= 1e-12 * (1.0 + a.abs()));
            prop_assert!(relative_drift(0.0, &pi, &pi, &params).unwrap().abs() < 1e-12);
        }
    }
}
