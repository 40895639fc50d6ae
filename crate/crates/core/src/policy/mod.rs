//! Government tax policies.
//!
//! Every policy proposes rates over the fixed seven brackets in
//! [`BRACKET_THRESHOLDS`]; thresholds never change at runtime.

mod prompt;
mod saez;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::household::retry_suffix;
use crate::llm::{ChatRequest, Gateway, GatewayError};
use crate::schedule::{TaxSchedule, BRACKET_THRESHOLDS, NUM_BRACKETS};

pub use prompt::{build_tax_prompt, parse_rates, parse_tax_reply, render_rates, RatesReplyError};
pub use saez::{
    marginal_rate, pareto_parameter, saez_schedule, top_rate, DensityEstimator, SaezError,
    SaezParams,
};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("malformed observation: {0}")]
    Observation(String),
    #[error(transparent)]
    Saez(#[from] SaezError),
    #[error("no usable planner reply after {0} attempt(s)")]
    NoUsableReply(u32),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

impl PolicyError {
    pub fn is_fatal(&self) -> bool {
        matches!(self, PolicyError::Gateway(e) if e.is_fatal())
    }
}

/// What the government sees when it revises the schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicyObservation {
    pub month: usize,
    /// Last month's pre-tax incomes, zero for households that did not work.
    pub incomes: Vec<f64>,
    pub wealth: Vec<f64>,
    pub schedule_history: Vec<TaxSchedule>,
    pub productivity_history: Vec<f64>,
    pub equality_history: Vec<f64>,
}

impl PolicyObservation {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.incomes.len() != self.wealth.len() {
            return Err(PolicyError::Observation(format!(
                "{} incomes but {} wealth values",
                self.incomes.len(),
                self.wealth.len()
            )));
        }
        let (s, p, e) = (
            self.schedule_history.len(),
            self.productivity_history.len(),
            self.equality_history.len(),
        );
        if s != p || p != e {
            return Err(PolicyError::Observation(format!(
                "history lengths differ: {s} schedules, {p} productivity, {e} equality"
            )));
        }
        Ok(())
    }

    /// Schedule in force most recently, if any.
    pub fn current_schedule(&self) -> Option<&TaxSchedule> {
        self.schedule_history.last()
    }
}

pub trait TaxPolicy: Send {
    fn system(&self) -> TaxSystem;

    /// Rates for the next adjustment period. On `Err` the caller keeps the
    /// schedule currently in force.
    fn propose(&mut self, observation: &PolicyObservation) -> Result<TaxSchedule, PolicyError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaxSystem {
    Free,
    UsFederal,
    Saez,
    TaxAgent,
}

impl TaxSystem {
    pub const ALL: [TaxSystem; 4] = [
        TaxSystem::Free,
        TaxSystem::UsFederal,
        TaxSystem::Saez,
        TaxSystem::TaxAgent,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaxSystem::Free => "free",
            TaxSystem::UsFederal => "us_federal",
            TaxSystem::Saez => "saez",
            TaxSystem::TaxAgent => "tax_agent",
        }
    }

    /// Schedule in force before the first proposal.
    pub fn initial_schedule(&self) -> TaxSchedule {
        match self {
            TaxSystem::Free => TaxSchedule::free_market(),
            _ => TaxSchedule::us_federal(),
        }
    }
}

impl fmt::Display for TaxSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaxSystem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaxSystem::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| {
                format!("unknown tax system `{s}` (expected free, us_federal, saez or tax_agent)")
            })
    }
}

/// No taxes, no redistribution.
#[derive(Debug, Default)]
pub struct FreeMarket;

impl TaxPolicy for FreeMarket {
    fn system(&self) -> TaxSystem {
        TaxSystem::Free
    }

    fn propose(&mut self, _: &PolicyObservation) -> Result<TaxSchedule, PolicyError> {
        Ok(TaxSchedule::free_market())
    }
}

/// Fixed US federal marginal rates.
#[derive(Debug, Default)]
pub struct UsFederal;

impl TaxPolicy for UsFederal {
    fn system(&self) -> TaxSystem {
        TaxSystem::UsFederal
    }

    fn propose(&mut self, _: &PolicyObservation) -> Result<TaxSchedule, PolicyError> {
        Ok(TaxSchedule::us_federal())
    }
}

/// Re-estimates Saez optimal rates from last month's incomes at every
/// adjustment.
#[derive(Debug, Default)]
pub struct SaezOptimal {
    pub params: SaezParams,
}

impl SaezOptimal {
    pub fn new(params: SaezParams) -> Self {
        Self { params }
    }
}

impl TaxPolicy for SaezOptimal {
    fn system(&self) -> TaxSystem {
        TaxSystem::Saez
    }

    fn propose(&mut self, obs: &PolicyObservation) -> Result<TaxSchedule, PolicyError> {
        obs.validate()?;
        let previous_top = obs
            .current_schedule()
            .and_then(|s| s.rates().last().copied())
            .unwrap_or(crate::schedule::US_FEDERAL_RATES[NUM_BRACKETS - 1]);
        Ok(saez_schedule(
            &obs.incomes,
            &BRACKET_THRESHOLDS,
            &self.params,
            previous_top,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaxAgentConfig {
    /// Opaque identity of the planner model.
    pub model_id: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub max_tokens: u32,
}

impl Default for TaxAgentConfig {
    fn default() -> Self {
        Self {
            model_id: "qwen-turbo-2024-09-19".to_string(),
            temperature: 0.2,
            max_retries: 3,
            max_tokens: 256,
        }
    }
}

/// LLM-backed planner.
pub struct TaxAgent {
    gateway: Arc<Gateway>,
    config: TaxAgentConfig,
}

impl TaxAgent {
    pub fn new(gateway: Arc<Gateway>, config: TaxAgentConfig) -> Self {
        Self { gateway, config }
    }
}

impl TaxPolicy for TaxAgent {
    fn system(&self) -> TaxSystem {
        TaxSystem::TaxAgent
    }

    fn propose(&mut self, obs: &PolicyObservation) -> Result<TaxSchedule, PolicyError> {
        obs.validate()?;
        let prompt = build_tax_prompt(obs, &BRACKET_THRESHOLDS);
        let attempts = self.config.max_retries.max(1);
        for attempt in 1..=attempts {
            let request = ChatRequest::new(
                &self.config.model_id,
                format!("{prompt}{}", retry_suffix(attempt)),
                self.config.temperature,
            )
            .with_max_tokens(self.config.max_tokens);
            match self.gateway.complete(&request) {
                Ok(text) => match parse_tax_reply(&text) {
                    Ok(rates) => {
                        return Ok(
                            TaxSchedule::with_rates(rates).expect("parsed rates lie in [0, 1]")
                        )
                    }
                    Err(err) => log::debug!("planner reply unusable ({err}): {text:?}"),
                },
                Err(err) if err.is_fatal() => return Err(err.into()),
                Err(err) => log::debug!("planner request failed: {err}"),
            }
        }
        Err(PolicyError::NoUsableReply(attempts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs() -> PolicyObservation {
        PolicyObservation {
            month: 3,
            incomes: vec![0.0, 1000.0, 2000.0],
            wealth: vec![10.0, 20.0, 30.0],
            schedule_history: vec![TaxSchedule::us_federal()],
            productivity_history: vec![0.0],
            equality_history: vec![0.0],
        }
    }

    #[test]
    fn fixed_policies() {
        assert_eq!(FreeMarket.propose(&obs()).unwrap().rates(), &[0.0; 7]);
        assert_eq!(
            UsFederal.propose(&obs()).unwrap().rates(),
            &[0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37]
        );
    }

    #[test]
    fn tax_agent_uses_reply() {
        let gw = Arc::new(Gateway::scripted([
            "[0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45]",
        ]));
        let mut agent = TaxAgent::new(gw, TaxAgentConfig::default());
        let s = agent.propose(&obs()).unwrap();
        assert_eq!(s.rates(), &[0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45]);
        assert_eq!(s.thresholds(), &BRACKET_THRESHOLDS);
    }

    #[test]
    fn tax_agent_gives_up() {
        let gw = Arc::new(Gateway::scripted(["[0.1]", "nope"]));
        let mut agent = TaxAgent::new(gw, TaxAgentConfig::default());
        let err = agent.propose(&obs()).unwrap_err();
        assert!(matches!(err, PolicyError::NoUsableReply(3)));
        assert!(!err.is_fatal());
    }

    #[test]
    fn saez_keeps_top_rate_without_tail() {
        let mut policy = SaezOptimal::default();
        let s = policy.propose(&obs()).unwrap();
        assert_eq!(s.rates()[6], 0.37);
        assert_eq!(s.thresholds(), &BRACKET_THRESHOLDS);
    }

    #[test]
    fn observation_validation() {
        let mut o = obs();
        o.wealth.pop();
        assert!(matches!(o.validate(), Err(PolicyError::Observation(_))));
        let mut o = obs();
        o.equality_history.push(1.0);
        assert!(o.validate().is_err());
    }

    #[test]
    fn system_names_round_trip() {
        for t in TaxSystem::ALL {
            assert_eq!(t.as_str().parse::<TaxSystem>().unwrap(), t);
        }
        assert!("flat".parse::<TaxSystem>().is_err());
        assert_eq!(
            TaxSystem::Free.initial_schedule(),
            TaxSchedule::free_market()
        );
        assert_eq!(
            TaxSystem::Saez.initial_schedule(),
            TaxSchedule::us_federal()
        );
    }
}
