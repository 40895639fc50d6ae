//! Households, the goods market, and the monthly market mechanisms:
//! production, taxation with even redistribution, bounded consumption,
//! wage and price adjustment, and the annual financial update.
//!
//! Every function here is a plain state transition over values passed in
//! by the caller. Randomness comes only from the `rng` argument, and the
//! order of draws is fixed (household-id order unless stated otherwise).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::household::MemoryPool;
use crate::schedule::TaxSchedule;

/// Labor hours supplied by one employed household per month.
pub const HOURS_PER_MONTH: f64 = 168.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PersonaError {
    #[error("persona field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("persona age must be positive")]
    ZeroAge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub age: u32,
    pub city: String,
    pub occupation: String,
}

impl Persona {
    pub fn validate(&self) -> Result<(), PersonaError> {
        if self.name.trim().is_empty() {
            return Err(PersonaError::EmptyField("name"));
        }
        if self.city.trim().is_empty() {
            return Err(PersonaError::EmptyField("city"));
        }
        if self.occupation.trim().is_empty() {
            return Err(PersonaError::EmptyField("occupation"));
        }
        if self.age == 0 {
            return Err(PersonaError::ZeroAge);
        }
        Ok(())
    }
}

/// One household agent.
#[derive(Debug, Clone)]
pub struct Household {
    pub id: usize,
    pub persona: Persona,
    /// Hourly wage.
    pub wage: f64,
    pub savings: f64,
    pub work_propensity: f64,
    pub consumption_propensity: f64,
    pub employed: bool,
    pub pretax_income: f64,
    pub tax_paid: f64,
    pub posttax_income: f64,
    pub consumption_spent: f64,
    pub reflection: String,
    pub memory: MemoryPool,
}

impl Household {
    pub fn new(id: usize, persona: Persona, wage: f64, savings: f64) -> Self {
        Self {
            id,
            persona,
            wage,
            savings,
            work_propensity: 0.0,
            consumption_propensity: 0.0,
            employed: false,
            pretax_income: 0.0,
            tax_paid: 0.0,
            posttax_income: 0.0,
            consumption_spent: 0.0,
            reflection: String::new(),
            memory: MemoryPool::default(),
        }
    }

    /// Income for a full month of work at the current wage.
    pub fn expected_income(&self) -> f64 {
        HOURS_PER_MONTH * self.wage
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub price: f64,
    pub inventory: f64,
    /// Annual interest rate paid on savings.
    pub interest_rate: f64,
    /// Units produced per labor hour.
    pub productivity: f64,
    pub last_demand: f64,
    pub last_supply: f64,
    pub mismatch: f64,
}

impl MarketState {
    pub fn new(price: f64, interest_rate: f64, productivity: f64) -> Self {
        Self {
            price,
            inventory: 0.0,
            interest_rate,
            productivity,
            last_demand: 0.0,
            last_supply: 0.0,
            mismatch: 0.0,
        }
    }
}

/// Wage/price adjustment bounds and Taylor-rule constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjustmentParams {
    /// Largest monthly relative wage change at full mismatch.
    pub wage_adjust_max: f64,
    /// Largest monthly relative price change at full mismatch.
    pub price_adjust_max: f64,
    pub natural_rate: f64,
    pub target_inflation: f64,
    pub inflation_coeff: f64,
    pub unemployment_coeff: f64,
    pub natural_unemployment: f64,
}

impl Default for AdjustmentParams {
    fn default() -> Self {
        Self {
            wage_adjust_max: 0.05,
            price_adjust_max: 0.10,
            natural_rate: 0.01,
            target_inflation: 0.02,
            inflation_coeff: 0.5,
            unemployment_coeff: 0.5,
            natural_unemployment: 0.04,
        }
    }
}

impl AdjustmentParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, value) in [
            ("wage_adjust_max", self.wage_adjust_max),
            ("price_adjust_max", self.price_adjust_max),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(format!("{name} must be in (0, 1], got {value}"));
            }
        }
        Ok(())
    }
}

/// Draws each household's employment for the month from its work propensity.
pub fn realize_labor<R: Rng + ?Sized>(households: &mut [Household], rng: &mut R) {
    for h in households.iter_mut() {
        let draw: f64 = rng.random();
        h.employed = draw < h.work_propensity;
    }
}

/// Runs production: employed households each supply a month of labor,
/// output goes to inventory, and wages become pre-tax incomes.
///
/// Returns total units produced.
pub fn produce(households: &mut [Household], market: &mut MarketState) -> f64 {
    let mut supply = 0.0;
    for h in households.iter_mut() {
        if h.employed {
            supply += HOURS_PER_MONTH * market.productivity;
            h.pretax_income = HOURS_PER_MONTH * h.wage;
        } else {
            h.pretax_income = 0.0;
        }
    }
    market.inventory += supply;
    market.last_supply = supply;
    supply
}

/// Result of taxing a vector of pre-tax incomes.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxOutcome {
    pub taxes: Vec<f64>,
    pub posttax: Vec<f64>,
    /// Equal lump sum returned to every household.
    pub redistribution: f64,
}

impl TaxOutcome {
    pub fn total_tax(&self) -> f64 {
        self.taxes.iter().sum()
    }
}

/// Taxes each income and hands the mean tax back to everyone.
pub fn redistribute(schedule: &TaxSchedule, pretax: &[f64]) -> TaxOutcome {
    let taxes: Vec<f64> = pretax.iter().map(|&z| schedule.tax(z.max(0.0))).collect();
    let redistribution = if pretax.is_empty() {
        0.0
    } else {
        taxes.iter().sum::<f64>() / pretax.len() as f64
    };
    let posttax = pretax
        .iter()
        .zip(&taxes)
        .map(|(&z, &t)| z - t + redistribution)
        .collect();
    TaxOutcome {
        taxes,
        posttax,
        redistribution,
    }
}

/// Taxes the households' pre-tax incomes and credits post-tax income to savings.
pub fn apply_taxation(schedule: &TaxSchedule, households: &mut [Household]) -> TaxOutcome {
    let pretax: Vec<f64> = households.iter().map(|h| h.pretax_income).collect();
    let outcome = redistribute(schedule, &pretax);
    for (h, (&tax, &post)) in households
        .iter_mut()
        .zip(outcome.taxes.iter().zip(&outcome.posttax))
    {
        h.tax_paid = tax;
        h.posttax_income = post;
        h.savings += post;
    }
    outcome
}

/// Units a household intends to buy: its spend share of wealth over the price.
pub fn plan_demand(consumption_propensity: f64, savings: f64, price: f64) -> f64 {
    debug_assert!(price > 0.0);
    (consumption_propensity * savings.max(0.0) / price).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionOutcome {
    /// Sum of intended demand, in units.
    pub intended: f64,
    /// Units actually bought.
    pub consumed: f64,
}

/// Households buy in a shuffled order, each taking at most what is left in
/// inventory and never spending more than its savings.
pub fn execute_consumption<R: Rng + ?Sized>(
    households: &mut [Household],
    market: &mut MarketState,
    rng: &mut R,
) -> ConsumptionOutcome {
    let price = market.price;
    let mut order: Vec<usize> = (0..households.len()).collect();
    order.shuffle(rng);

    let mut intended = 0.0;
    let mut consumed = 0.0;
    for idx in order {
        let h = &mut households[idx];
        let demand = plan_demand(h.consumption_propensity, h.savings, price);
        intended += demand;
        let affordable = h.savings.max(0.0) / price;
        let units = demand.min(affordable).min(market.inventory).max(0.0);
        let spent = (units * price).min(h.savings.max(0.0));
        h.savings -= spent;
        h.consumption_spent = spent;
        market.inventory = (market.inventory - units).max(0.0);
        consumed += units;
    }
    market.last_demand = intended;
    ConsumptionOutcome { intended, consumed }
}

/// Relative gap between demand and available supply, in `[-1, 1]`.
/// An empty market (both zero) has no mismatch.
pub fn compute_mismatch(demand: f64, supply: f64) -> f64 {
    let scale = demand.max(supply);
    if scale <= 0.0 {
        return 0.0;
    }
    ((demand - supply) / scale).clamp(-1.0, 1.0)
}

/// Moves every wage and the price in the direction of the mismatch by a
/// uniformly drawn fraction of at most `alpha * |mismatch|`.
///
/// Draw order: one draw per household in id order, then one for the price.
/// Draws are taken even when the mismatch is zero so that the stream
/// position does not depend on market state.
pub fn adjust_wages_and_price<R: Rng + ?Sized>(
    households: &mut [Household],
    market: &mut MarketState,
    mismatch: f64,
    params: &AdjustmentParams,
    rng: &mut R,
) {
    let sign = if mismatch > 0.0 {
        1.0
    } else if mismatch < 0.0 {
        -1.0
    } else {
        0.0
    };
    let magnitude = mismatch.abs();
    for h in households.iter_mut() {
        let u: f64 = rng.random();
        h.wage *= 1.0 + sign * u * params.wage_adjust_max * magnitude;
    }
    let u: f64 = rng.random();
    market.price *= 1.0 + sign * u * params.price_adjust_max * magnitude;
    market.mismatch = mismatch;
}

/// Pays one year of interest on every household's savings.
pub fn accrue_interest(households: &mut [Household], rate: f64) {
    for h in households.iter_mut() {
        h.savings *= 1.0 + rate;
    }
}

/// Taylor rule with a zero floor.
pub fn update_interest_rate(params: &AdjustmentParams, inflation: f64, unemployment: f64) -> f64 {
    let rate = params.natural_rate
        + params.target_inflation
        + params.inflation_coeff * (inflation - params.target_inflation)
        + params.unemployment_coeff * (params.natural_unemployment - unemployment);
    rate.max(0.0)
}
