//! Bracketed income tax schedules.
//!
//! A schedule is a list of ascending bracket thresholds (the first one is
//! always zero) and one marginal rate per bracket. The top bracket is open
//! ended. Income inside a bracket is taxed only at that bracket's rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Monthly bracket thresholds used by every tax system in the simulation.
pub const BRACKET_THRESHOLDS: [f64; 7] =
    [0.00, 808.33, 3289.58, 7016.67, 13393.75, 17008.33, 42525.00];

/// Marginal rates of the US federal income tax mapped onto [`BRACKET_THRESHOLDS`].
pub const US_FEDERAL_RATES: [f64; 7] = [0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37];

/// Number of brackets in every schedule built by the simulator.
pub const NUM_BRACKETS: usize = BRACKET_THRESHOLDS.len();

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("schedule has {thresholds} thresholds but {rates} rates")]
    LengthMismatch { thresholds: usize, rates: usize },
    #[error("schedule must have at least one bracket")]
    Empty,
    #[error("first threshold must be 0, got {0}")]
    NonZeroStart(f64),
    #[error("thresholds must be strictly ascending (index {index})")]
    NotAscending { index: usize },
    #[error("rate {rate} at bracket {index} is outside [0, 1]")]
    RateOutOfRange { index: usize, rate: f64 },
    #[error("income must be finite and nonnegative, got {0}")]
    InvalidIncome(f64),
}

/// Bracket thresholds and marginal rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxSchedule {
    thresholds: Vec<f64>,
    rates: Vec<f64>,
}

impl TaxSchedule {
    pub fn new(thresholds: Vec<f64>, rates: Vec<f64>) -> Result<Self, ScheduleError> {
        let schedule = Self { thresholds, rates };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Schedule over the standard seven brackets with the given rates.
    pub fn with_rates(rates: [f64; NUM_BRACKETS]) -> Result<Self, ScheduleError> {
        Self::new(BRACKET_THRESHOLDS.to_vec(), rates.to_vec())
    }

    pub fn free_market() -> Self {
        Self::with_rates([0.0; NUM_BRACKETS]).expect("zero rates are valid")
    }

    pub fn us_federal() -> Self {
        Self::with_rates(US_FEDERAL_RATES).expect("federal rates are valid")
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.thresholds.len() != self.rates.len() {
            return Err(ScheduleError::LengthMismatch {
                thresholds: self.thresholds.len(),
                rates: self.rates.len(),
            });
        }
        if self.thresholds.is_empty() {
            return Err(ScheduleError::Empty);
        }
        if self.thresholds[0] != 0.0 {
            return Err(ScheduleError::NonZeroStart(self.thresholds[0]));
        }
        for (index, pair) in self.thresholds.windows(2).enumerate() {
            if pair[1].partial_cmp(&pair[0]) != Some(std::cmp::Ordering::Greater)
                || !pair[1].is_finite()
            {
                return Err(ScheduleError::NotAscending { index: index + 1 });
            }
        }
        for (index, &rate) in self.rates.iter().enumerate() {
            if !(0.0..=1.0).contains(&rate) {
                return Err(ScheduleError::RateOutOfRange { index, rate });
            }
        }
        Ok(())
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Upper edge of bracket `k`, `+inf` for the top bracket.
    pub fn upper(&self, k: usize) -> f64 {
        self.thresholds.get(k + 1).copied().unwrap_or(f64::INFINITY)
    }

    /// Tax owed on `income`.
    ///
    /// Each bracket contributes its rate times the part of the income that
    /// falls inside it, so the result is continuous and nondecreasing.
    pub fn tax(&self, income: f64) -> f64 {
        let mut tax = 0.0;
        for (k, (&lower, &rate)) in self.thresholds.iter().zip(&self.rates).enumerate() {
            if income <= lower {
                break;
            }
            let upper = self.upper(k);
            tax += rate * (income.min(upper) - lower);
        }
        tax
    }

    /// Marginal rate that applies to the next unit of income above `income`.
    pub fn marginal_rate_at(&self, income: f64) -> f64 {
        let k = self
            .thresholds
            .iter()
            .rposition(|&b| income >= b)
            .unwrap_or(0);
        self.rates[k]
    }
}

impl Default for TaxSchedule {
    fn default() -> Self {
        Self::us_federal()
    }
}

/// Validates the schedule and the income, then returns the tax owed.
pub fn compute_tax(schedule: &TaxSchedule, income: f64) -> Result<f64, ScheduleError> {
    schedule.validate()?;
    if !income.is_finite() || income < 0.0 {
        return Err(ScheduleError::InvalidIncome(income));
    }
    Ok(schedule.tax(income))
}
