//! Reference parameter set: five US industry portfolios (Cnsmr, Manuf, HiTec,
//! Hlth, Other), monthly data 2005-01 through 2017-07, annualized.

use nalgebra::{DMatrix, DVector};

use crate::market::MarketParams;

pub const FIVE_INDUSTRY_NAMES: [&str; 5] = ["Cnsmr", "Manuf", "HiTec", "Hlth", "Other"];
pub const FIVE_INDUSTRY_GROWTH: [f64; 5] = [0.074, 0.059, 0.086, 0.083, 0.032];
pub const FIVE_INDUSTRY_DIVIDEND: [f64; 5] = [0.021, 0.023, 0.015, 0.019, 0.018];
pub const FIVE_INDUSTRY_STDEV: [f64; 5] = [0.12, 0.16, 0.16, 0.13, 0.19];
#[rustfmt::skip]
pub const FIVE_INDUSTRY_CORRELATION: [[f64; 5]; 5] = [
    [1.00, 0.76, 0.87, 0.73, 0.87],
    [0.76, 1.00, 0.81, 0.61, 0.76],
    [0.87, 0.81, 1.00, 0.68, 0.82],
    [0.73, 0.61, 0.68, 1.00, 0.69],
    [0.87, 0.76, 0.82, 0.69, 1.00],
];

pub fn five_industry_covariance() -> DMatrix<f64> {
    let sd = FIVE_INDUSTRY_STDEV;
    DMatrix::from_fn(5, 5, |i, j| sd[i] * sd[j] * FIVE_INDUSTRY_CORRELATION[i][j])
}

/// The rounded five-industry estimates with `ξ` the Cholesky factor of `Σ`.
pub fn five_industries() -> MarketParams {
    MarketParams::from_covariance(
        DVector::from_row_slice(&FIVE_INDUSTRY_GROWTH),
        DVector::from_row_slice(&FIVE_INDUSTRY_DIVIDEND),
        &five_industry_covariance(),
    )
    .and_then(|p| p.with_names(FIVE_INDUSTRY_NAMES.iter().map(|s| s.to_string()).collect()))
    .expect("five-industry covariance is positive definite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SpdFactor;

    #[test]
    fn accepted_and_round_trips_through_cholesky() {
        let p = five_industries();
        assert!(p.eigen_min() > 1e-3);
        let cov = five_industry_covariance();
        let l = SpdFactor::new(&cov, "cov").unwrap().lower();
        let rebuilt = crate::market::covariance_from_volatility(&l).unwrap();
        assert!((&rebuilt - &cov).abs().max() < 1e-12);
        assert!((p.covariance() - &cov).abs().max() < 1e-12);
    }
}
