//! Saez optimal income tax rates estimated from an income sample.
//!
//! Each bracket below the top gets the general nonlinear marginal rate
//! evaluated at the bracket midpoint, using the empirical CDF of positive
//! incomes and a density estimate. The top bracket gets the Pareto-tail
//! rate with the top threshold as the tail cutoff.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::{ScheduleError, TaxSchedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaezError {
    #[error("no incomes above the tail threshold {0}")]
    TailEmpty(f64),
    #[error("need at least two positive incomes, got {0}")]
    InsufficientData(usize),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityEstimator {
    /// Bracket histogram normalized to unit mass.
    #[default]
    Histogram,
    /// Gaussian kernel with `density_bandwidth` as the standard deviation.
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaezParams {
    /// Elasticity of taxable income, also used as the uncompensated
    /// elasticity for the top rate.
    pub elasticity: f64,
    pub density_bandwidth: f64,
    /// Income above which the Pareto tail is measured.
    pub tail_threshold: f64,
    pub density: DensityEstimator,
}

impl Default for SaezParams {
    fn default() -> Self {
        Self {
            elasticity: 0.25,
            density_bandwidth: 1000.0,
            tail_threshold: crate::schedule::BRACKET_THRESHOLDS[crate::schedule::NUM_BRACKETS - 1],
            density: DensityEstimator::Histogram,
        }
    }
}

impl SaezParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.elasticity.is_nan() || self.elasticity < 0.0 {
            return Err(format!("elasticity must be >= 0, got {}", self.elasticity));
        }
        if self.density_bandwidth.is_nan() || self.density_bandwidth <= 0.0 {
            return Err(format!(
                "density_bandwidth must be > 0, got {}",
                self.density_bandwidth
            ));
        }
        if self.tail_threshold.is_nan() || self.tail_threshold <= 0.0 {
            return Err(format!(
                "tail_threshold must be > 0, got {}",
                self.tail_threshold
            ));
        }
        Ok(())
    }
}

/// Tail thickness `mean / (mean - cutoff)` over incomes strictly above `cutoff`.
pub fn pareto_parameter(incomes: &[f64], cutoff: f64) -> Result<f64, SaezError> {
    let (sum, count) = incomes
        .iter()
        .filter(|&&z| z > cutoff)
        .fold((0.0, 0usize), |(s, c), &z| (s + z, c + 1));
    if count == 0 {
        return Err(SaezError::TailEmpty(cutoff));
    }
    let mean = sum / count as f64;
    Ok(mean / (mean - cutoff))
}

/// Optimal top marginal rate `1 / (1 + a * elasticity)`.
pub fn top_rate(pareto: f64, elasticity: f64) -> f64 {
    1.0 / (1.0 + pareto * elasticity)
}

/// General nonlinear marginal rate at income `z`, clamped to `[0, 1]`.
pub fn marginal_rate(cdf: f64, density: f64, elasticity: f64, z: f64) -> f64 {
    let rate = ((1.0 - cdf) + elasticity * z * density) / (1.0 + elasticity * density);
    rate.clamp(0.0, 1.0)
}

/// Share of `sorted` at or below `z`.
fn empirical_cdf(sorted: &[f64], z: f64) -> f64 {
    let at_or_below = sorted.partition_point(|&x| x <= z);
    at_or_below as f64 / sorted.len() as f64
}

fn histogram_density(sorted: &[f64], thresholds: &[f64], z: f64) -> f64 {
    let Some(k) = thresholds.iter().rposition(|&b| z >= b) else {
        return 0.0;
    };
    let lower = thresholds[k];
    let Some(&upper) = thresholds.get(k + 1) else {
        return 0.0;
    };
    let count = sorted.iter().filter(|&&x| x >= lower && x < upper).count();
    count as f64 / (sorted.len() as f64 * (upper - lower))
}

fn kernel_density(sorted: &[f64], bandwidth: f64, z: f64) -> f64 {
    let norm = 1.0 / (sorted.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    sorted
        .iter()
        .map(|&x| {
            let u = (z - x) / bandwidth;
            (-0.5 * u * u).exp()
        })
        .sum::<f64>()
        * norm
}

/// Rates for every bracket of `thresholds` from the positive entries of `incomes`.
///
/// `previous_top_rate` is used when nobody earns above the tail threshold.
/// If every positive income is identical the elasticity is treated as zero.
pub fn saez_schedule(
    incomes: &[f64],
    thresholds: &[f64],
    params: &SaezParams,
    previous_top_rate: f64,
) -> Result<TaxSchedule, SaezError> {
    let mut sorted: Vec<f64> = incomes.iter().copied().filter(|&z| z > 0.0).collect();
    if sorted.len() < 2 {
        return Err(SaezError::InsufficientData(sorted.len()));
    }
    sorted.sort_by(f64::total_cmp);
    let degenerate = sorted.first() == sorted.last();
    let e = if degenerate { 0.0 } else { params.elasticity };

    let b = thresholds.len();
    let mut rates = Vec::with_capacity(b);
    for k in 0..b.saturating_sub(1) {
        let mid = 0.5 * (thresholds[k] + thresholds[k + 1]);
        let cdf = empirical_cdf(&sorted, mid);
        let density = match params.density {
            DensityEstimator::Histogram => histogram_density(&sorted, thresholds, mid),
            DensityEstimator::Kernel => kernel_density(&sorted, params.density_bandwidth, mid),
        };
        rates.push(marginal_rate(cdf, density, e, mid));
    }
    let top = match pareto_parameter(&sorted, params.tail_threshold) {
        Ok(a) => top_rate(a, e),
        Err(SaezError::TailEmpty(_)) => previous_top_rate,
        Err(other) => return Err(other),
    };
    rates.push(top.clamp(0.0, 1.0));
    Ok(TaxSchedule::new(thresholds.to_vec(), rates)?)
}
