//! Household decision making and quarterly self-reflection.
//!
//! A [`DecisionBackend`] turns a household's view of the economy into a
//! pair of propensities (work, consume). Two backends ship: a deterministic
//! rule-based one that never touches the network, and an LLM-backed one
//! that renders the household prompt and parses a JSON reply.

mod persona;
mod prompt;

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::economy::Persona;
use crate::grid::round02;
use crate::llm::{ChatRequest, Gateway, GatewayError};
use crate::schedule::TaxSchedule;

pub use persona::{load_roster, parse_roster, RosterError, DEFAULT_ROSTER};
pub use prompt::{
    build_household_prompt, build_reflection_prompt, parse_household_reply, ReplyError,
};

/// Decision used when a household has nothing to fall back on.
pub const FALLBACK_DECISION: Decision = Decision {
    work: 0.6,
    consumption: 0.4,
};

/// Note returned by the rule-based backend's reflection step.
pub const RULE_BASED_NOTE: &str = "baseline reflection";

/// Calendar label for a simulated month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimDate {
    pub year: i32,
    pub month: u32,
}

impl SimDate {
    /// Date of 1-based simulation month `m` when month 1 is January of `start_year`.
    pub fn of_month(start_year: i32, m: usize) -> Self {
        let index = m.saturating_sub(1);
        Self {
            year: start_year + (index / 12) as i32,
            month: (index % 12) as u32 + 1,
        }
    }
}

impl fmt::Display for SimDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increased,
    Decreased,
    Unchanged,
}

impl Direction {
    pub fn between(previous: f64, current: f64) -> Self {
        if current > previous {
            Direction::Increased
        } else if current < previous {
            Direction::Decreased
        } else {
            Direction::Unchanged
        }
    }
}

/// What a household observes at the start of a month.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionContext {
    pub date: SimDate,
    pub persona: Persona,
    pub expected_income: f64,
    pub income_direction: Direction,
    pub last_consumption: f64,
    pub previous_schedule: TaxSchedule,
    pub current_schedule: TaxSchedule,
    pub price: f64,
    pub price_direction: Direction,
    pub savings: f64,
    pub interest_rate: f64,
    pub reflection: String,
}

/// Work and consumption propensities, both on the 0.02 grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub work: f64,
    pub consumption: f64,
}

impl Decision {
    /// Clamps both values to `[0, 1]` and rounds them half-up to the 0.02 grid.
    pub fn quantized(work: f64, consumption: f64) -> Self {
        Self {
            work: round02(work),
            consumption: round02(consumption),
        }
    }
}

/// One month of a household's history as kept for reflection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub date: SimDate,
    pub expected_income: f64,
    pub price: f64,
    pub interest_rate: f64,
    pub decision: Decision,
    pub employed: bool,
    pub pretax_income: f64,
    pub tax_paid: f64,
    pub consumption: f64,
    pub savings: f64,
}

pub const DEFAULT_MEMORY_CAPACITY: usize = 12;

/// Bounded, chronological history of a single household.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryPool {
    capacity: usize,
    entries: VecDeque<MemoryEntry>,
}

impl Default for MemoryPool {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_MEMORY_CAPACITY)
    }
}

impl MemoryPool {
    pub fn with_capacity(capacity: usize) -> Self {
        let capacity = capacity.max(DEFAULT_MEMORY_CAPACITY);
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, entry: MemoryEntry) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn iter(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Produces household decisions and reflections.
///
/// Implementations must return `Err` only for errors that should abort the
/// run (see [`GatewayError::is_fatal`]); anything else resolves to the
/// documented fallback inside the backend.
pub trait DecisionBackend: Send + Sync {
    fn decide(
        &self,
        context: &DecisionContext,
        previous: Option<Decision>,
    ) -> Result<Decision, GatewayError>;

    fn reflect(
        &self,
        persona: &Persona,
        memory: &MemoryPool,
        previous_note: &str,
    ) -> Result<String, GatewayError>;

    /// Whether `decide` may be called from several threads at once without
    /// changing results.
    fn parallel_safe(&self) -> bool {
        true
    }
}

/// Offline stand-in for the LLM.
///
/// Work propensity falls with the average tax rate on a month's expected
/// income; consumption propensity targets about three units of goods a
/// month out of after-tax wealth.
pub fn rule_based_decide(context: &DecisionContext) -> Decision {
    let income = context.expected_income.max(0.0);
    let avg_rate = context.current_schedule.tax(income) / income.max(1.0);
    let work = 0.2 + 0.8 * (1.0 - avg_rate);
    let wealth = context.savings + income * (1.0 - avg_rate);
    let consumption = (3.0 * context.price / wealth.max(context.price)).min(0.95);
    Decision::quantized(work, consumption)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBasedBackend;

impl DecisionBackend for RuleBasedBackend {
    fn decide(
        &self,
        context: &DecisionContext,
        _: Option<Decision>,
    ) -> Result<Decision, GatewayError> {
        Ok(rule_based_decide(context))
    }

    fn reflect(&self, _: &Persona, memory: &MemoryPool, _: &str) -> Result<String, GatewayError> {
        if memory.is_empty() {
            return Ok(String::new());
        }
        Ok(RULE_BASED_NOTE.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HouseholdLlmConfig {
    pub model_id: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub max_tokens: u32,
}

impl Default for HouseholdLlmConfig {
    fn default() -> Self {
        Self {
            model_id: "qwen-turbo-2024-09-19".to_string(),
            temperature: 0.7,
            max_retries: 3,
            max_tokens: 128,
        }
    }
}

/// Suffix added to re-asked prompts so each attempt has its own cache key.
pub(crate) fn retry_suffix(attempt: u32) -> String {
    if attempt <= 1 {
        String::new()
    } else {
        format!(" (Attempt {attempt}: reply with the requested format only.)")
    }
}

pub struct LlmBackend {
    gateway: Arc<Gateway>,
    config: HouseholdLlmConfig,
}

impl LlmBackend {
    pub fn new(gateway: Arc<Gateway>, config: HouseholdLlmConfig) -> Self {
        Self { gateway, config }
    }

    fn request(&self, prompt: String) -> ChatRequest {
        ChatRequest::new(&self.config.model_id, prompt, self.config.temperature)
            .with_max_tokens(self.config.max_tokens)
    }
}

impl DecisionBackend for LlmBackend {
    fn decide(
        &self,
        context: &DecisionContext,
        previous: Option<Decision>,
    ) -> Result<Decision, GatewayError> {
        let prompt = build_household_prompt(context);
        for attempt in 1..=self.config.max_retries.max(1) {
            let request = self.request(format!("{prompt}{}", retry_suffix(attempt)));
            match self.gateway.complete(&request) {
                Ok(text) => match parse_household_reply(&text) {
                    Ok(decision) => return Ok(decision),
                    Err(err) => log::debug!("{}: unusable reply ({err})", context.persona.name),
                },
                Err(err) if err.is_fatal() => return Err(err),
                Err(err) => log::debug!("{}: gateway error ({err})", context.persona.name),
            }
        }
        log::warn!(
            "{}: no usable decision after {} attempt(s); keeping previous",
            context.persona.name,
            self.config.max_retries.max(1)
        );
        Ok(previous.unwrap_or(FALLBACK_DECISION))
    }

    fn reflect(
        &self,
        persona: &Persona,
        memory: &MemoryPool,
        previous_note: &str,
    ) -> Result<String, GatewayError> {
        if memory.is_empty() {
            return Ok(String::new());
        }
        let request = self.request(build_reflection_prompt(persona, memory));
        match self.gateway.complete(&request) {
            Ok(text) if !text.trim().is_empty() => Ok(text.trim().to_string()),
            Ok(_) => Ok(previous_note.to_string()),
            Err(err) if err.is_fatal() => Err(err),
            Err(err) => {
                log::debug!("{}: reflection failed ({err})", persona.name);
                Ok(previous_note.to_string())
            }
        }
    }

    fn parallel_safe(&self) -> bool {
        self.gateway.mode() != crate::llm::GatewayMode::Scripted
    }
}
