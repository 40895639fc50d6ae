//! Inequality, productivity and macro indicators.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("metric input is empty")]
    Empty,
    #[error("value {value} at index {index} is negative or not finite")]
    InvalidValue { index: usize, value: f64 },
    #[error(
        "expected {expected_months} months of {expected_households} labor indicators, got {detail}"
    )]
    Shape {
        expected_months: usize,
        expected_households: usize,
        detail: String,
    },
}

/// Whether productivity reports mean or total wealth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductivityMode {
    #[default]
    PerCapita,
    Total,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub month: usize,
    pub gini: f64,
    pub equality: f64,
    pub productivity: f64,
    pub social_outcome: f64,
}

impl MetricSnapshot {
    pub fn from_wealth(
        month: usize,
        wealth: &[f64],
        mode: ProductivityMode,
    ) -> Result<Self, MetricsError> {
        let g = gini(wealth)?;
        let eq = equality_from_gini(g, wealth.len());
        let prod = match mode {
            ProductivityMode::PerCapita => productivity(wealth)?,
            ProductivityMode::Total => wealth.iter().sum(),
        };
        Ok(Self {
            month,
            gini: g,
            equality: eq,
            productivity: prod,
            social_outcome: social_outcome(eq, prod),
        })
    }
}

fn check_values(values: &[f64]) -> Result<(), MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(MetricsError::InvalidValue { index, value });
    }
    Ok(())
}

/// Gini index of nonnegative values; 0 when every value is zero.
///
/// Uses the sorted-rank form, which equals the mean absolute pairwise
/// difference divided by twice the mean.
pub fn gini(values: &[f64]) -> Result<f64, MetricsError> {
    check_values(values)?;
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok((weighted / (n * total)).clamp(0.0, 1.0))
}

fn equality_from_gini(g: f64, n: usize) -> f64 {
    let n = n as f64;
    (1.0 - g) * (n - 1.0) / n
}

/// `(1 - gini) * (N - 1) / N`.
pub fn equality(values: &[f64]) -> Result<f64, MetricsError> {
    Ok(equality_from_gini(gini(values)?, values.len()))
}

/// Mean wealth per household.
pub fn productivity(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn social_outcome(equality: f64, productivity: f64) -> f64 {
    equality * productivity
}

/// Year-over-year change of the annual mean price, using the last two full
/// years of a monthly price history. Returns 0 with less than two years.
pub fn annual_inflation(prices: &[f64]) -> f64 {
    if prices.len() < 24 {
        return 0.0;
    }
    let end = prices.len();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let current = mean(&prices[end - 12..end]);
    let previous = mean(&prices[end - 24..end - 12]);
    if previous <= 0.0 {
        return 0.0;
    }
    (current - previous) / previous
}

/// Share of household-months not worked over a year of labor indicators
/// (`labor[month][household]`).
pub fn annual_unemployment(labor: &[Vec<bool>]) -> Result<f64, MetricsError> {
    let households = labor.first().map(Vec::len).unwrap_or(0);
    if labor.len() != 12 || households == 0 || labor.iter().any(|m| m.len() != households) {
        return Err(MetricsError::Shape {
            expected_months: 12,
            expected_households: households,
            detail: format!(
                "{} months with lengths {:?}",
                labor.len(),
                labor.iter().map(Vec::len).collect::<Vec<_>>()
            ),
        });
    }
    let idle = labor.iter().flatten().filter(|&&worked| !worked).count();
    Ok(idle as f64 / (12 * households) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_fixtures() {
        assert_eq!(gini(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
        for x in [0.5, 3.0, 1e6] {
            assert!((gini(&[0.0, 0.0, 0.0, x]).unwrap() - 0.75).abs() < 1e-12);
        }
        assert_eq!(gini(&[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn gini_rejects_bad_input() {
        assert_eq!(gini(&[]), Err(MetricsError::Empty));
        assert!(matches!(
            gini(&[1.0, -2.0]),
            Err(MetricsError::InvalidValue { index: 1, .. })
        ));
        assert!(matches!(
            gini(&[f64::NAN]),
            Err(MetricsError::InvalidValue { .. })
        ));
    }

    #[test]
    fn equality_fixtures() {
        assert!((equality(&[1.0; 4]).unwrap() - 0.75).abs() < 1e-12);
        assert!((equality(&[0.0, 0.0, 0.0, 9.0]).unwrap() - 0.1875).abs() < 1e-12);
        assert!((equality(&[42.0; 50]).unwrap() - 0.98).abs() < 1e-12);
    }

    #[test]
    fn productivity_fixtures() {
        assert_eq!(productivity(&[10.0, 20.0, 30.0]).unwrap(), 20.0);
        assert_eq!(productivity(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(productivity(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn social_outcome_fixtures() {
        assert!((social_outcome(0.75, 20.0) - 15.0).abs() < 1e-12);
        assert_eq!(social_outcome(0.0, 123.0), 0.0);
        assert_eq!(social_outcome(0.98, 0.0), 0.0);
    }

    #[test]
    fn snapshot_total_mode() {
        let s =
            MetricSnapshot::from_wealth(3, &[10.0, 20.0, 30.0], ProductivityMode::Total).unwrap();
        assert_eq!(s.productivity, 60.0);
        let s = MetricSnapshot::from_wealth(3, &[10.0, 20.0, 30.0], ProductivityMode::PerCapita)
            .unwrap();
        assert_eq!(s.productivity, 20.0);
        assert!((s.social_outcome - s.equality * 20.0).abs() < 1e-12);
    }

    #[test]
    fn inflation_fixtures() {
        assert_eq!(annual_inflation(&[100.0; 24]), 0.0);
        let mut prices = vec![100.0; 12];
        prices.extend([108.0; 12]);
        assert!((annual_inflation(&prices) - 0.08).abs() < 1e-12);
        let mut prices = vec![100.0; 12];
        prices.extend([95.0; 12]);
        assert!((annual_inflation(&prices) + 0.05).abs() < 1e-12);
        assert_eq!(annual_inflation(&[100.0; 12]), 0.0);
    }

    #[test]
    fn inflation_uses_latest_two_years() {
        let mut prices = vec![1.0; 12];
        prices.extend([100.0; 12]);
        prices.extend([110.0; 12]);
        assert!((annual_inflation(&prices) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unemployment_fixtures() {
        assert_eq!(annual_unemployment(&vec![vec![true; 5]; 12]).unwrap(), 0.0);
        assert_eq!(annual_unemployment(&vec![vec![false; 5]; 12]).unwrap(), 1.0);
        let half: Vec<Vec<bool>> = (0..12).map(|m| vec![m % 2 == 0; 4]).collect();
        assert_eq!(annual_unemployment(&half).unwrap(), 0.5);
    }

    #[test]
    fn unemployment_shape_errors() {
        assert!(annual_unemployment(&vec![vec![true; 5]; 11]).is_err());
        let mut ragged = vec![vec![true; 5]; 12];
        ragged[3].pop();
        assert!(annual_unemployment(&ragged).is_err());
        assert!(annual_unemployment(&vec![vec![]; 12]).is_err());
    }
}
