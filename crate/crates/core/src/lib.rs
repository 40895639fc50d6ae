//! Agent-based macroeconomic simulator for comparing income tax systems.
//!
//! Households decide monthly how much to work and consume, a government
//! sets marginal rates over seven income brackets, and a market clears
//! labor, goods, taxes and interest. Decisions come either from a
//! deterministic rule or from a language model behind [`llm::Gateway`].

pub mod economy;
mod fmt;
pub mod grid;
pub mod household;
pub mod llm;
pub mod metrics;
pub mod policy;
pub mod schedule;
pub mod sim;

pub use economy::{AdjustmentParams, Household, MarketState, Persona};
pub use household::{Decision, DecisionBackend, DecisionContext, LlmBackend, RuleBasedBackend};
pub use llm::{Gateway, GatewayError, GatewayMode};
pub use metrics::{MetricSnapshot, ProductivityMode};
pub use policy::{PolicyObservation, TaxPolicy, TaxSystem};
pub use schedule::{compute_tax, TaxSchedule, BRACKET_THRESHOLDS};
pub use sim::{run, run_with_gateway, SimConfig, SimError, SimulationResult};
