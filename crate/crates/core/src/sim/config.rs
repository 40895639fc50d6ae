//! Run configuration, loaded from TOML with every field optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::economy::AdjustmentParams;
use crate::household::HouseholdLlmConfig;
use crate::llm::{GatewayMode, DEFAULT_ENDPOINT};
use crate::metrics::ProductivityMode;
use crate::policy::{SaezParams, TaxAgentConfig, TaxSystem};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HouseholdBackendKind {
    Llm,
    #[default]
    RuleBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub mode: GatewayMode,
    /// Exchange cache, required for `record` and `replay`.
    pub cache_path: Option<PathBuf>,
    pub endpoint: String,
    /// Environment variable holding the API key for `live` and `record`.
    pub api_key_env: String,
    /// Replies served in order when `mode = "scripted"`.
    pub scripted_replies: Vec<String>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            mode: GatewayMode::Scripted,
            cache_path: None,
            endpoint: DEFAULT_ENDPOINT.to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            scripted_replies: Vec::new(),
        }
    }
}

/// Initial wages and savings are lognormal around the given medians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConditions {
    pub wage_median: f64,
    pub wage_sigma: f64,
    pub savings_median: f64,
    pub savings_sigma: f64,
    pub price: f64,
    pub interest_rate: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self {
            wage_median: 25.0,
            wage_sigma: 0.8,
            savings_median: 50_000.0,
            savings_sigma: 0.6,
            price: 126.78,
            interest_rate: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_households: usize,
    pub months: usize,
    pub productivity: f64,
    pub seed: u64,
    pub tax_system: TaxSystem,
    pub household_backend: HouseholdBackendKind,
    pub adjust_period_months: usize,
    pub reflection_period_months: usize,
    pub adjustment: AdjustmentParams,
    pub saez: SaezParams,
    pub tax_agent: TaxAgentConfig,
    pub household_llm: HouseholdLlmConfig,
    pub gateway: GatewayConfig,
    pub initial: InitialConditions,
    pub productivity_mode: ProductivityMode,
    pub start_year: i32,
    /// CSV roster; the bundled 50-persona roster when unset.
    pub persona_roster: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Keep per-household monthly rows and write `households.csv`.
    pub household_rows: bool,
    /// Upper bound on threads used for concurrent LLM household calls.
    pub max_threads: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_households: 50,
            months: 120,
            productivity: 1.0,
            seed: 0,
            tax_system: TaxSystem::UsFederal,
            household_backend: HouseholdBackendKind::RuleBased,
            adjust_period_months: 3,
            reflection_period_months: 3,
            adjustment: AdjustmentParams::default(),
            saez: SaezParams::default(),
            tax_agent: TaxAgentConfig::default(),
            household_llm: HouseholdLlmConfig::default(),
            gateway: GatewayConfig::default(),
            initial: InitialConditions::default(),
            productivity_mode: ProductivityMode::PerCapita,
            start_year: 2001,
            persona_roster: None,
            output_dir: None,
            household_rows: false,
            max_threads: 8,
        }
    }
}

fn positive(name: &str, value: f64) -> Result<(), SimError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SimError::Config(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut config.gateway.cache_path,
            &mut config.persona_roster,
            &mut config.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_households == 0 {
            return Err(SimError::Config("n_households must be at least 1".into()));
        }
        if self.months == 0 {
            return Err(SimError::Config("months must be at least 1".into()));
        }
        if self.adjust_period_months == 0 || self.reflection_period_months == 0 {
            return Err(SimError::Config(
                "adjust_period_months and reflection_period_months must be at least 1".into(),
            ));
        }
        positive("productivity", self.productivity)?;
        positive("initial.price", self.initial.price)?;
        positive("initial.wage_median", self.initial.wage_median)?;
        positive("initial.savings_median", self.initial.savings_median)?;
        for (name, sigma) in [
            ("initial.wage_sigma", self.initial.wage_sigma),
            ("initial.savings_sigma", self.initial.savings_sigma),
        ] {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(SimError::Config(format!(
                    "{name} must be >= 0, got {sigma}"
                )));
            }
        }
        if self.initial.interest_rate.is_nan() || self.initial.interest_rate < 0.0 {
            return Err(SimError::Config(format!(
                "initial.interest_rate must be >= 0, got {}",
                self.initial.interest_rate
            )));
        }
        self.adjustment.validate().map_err(SimError::Config)?;
        self.saez.validate().map_err(SimError::Config)?;
        if self.uses_gateway()
            && matches!(self.gateway.mode, GatewayMode::Record | GatewayMode::Replay)
            && self.gateway.cache_path.is_none()
        {
            return Err(SimError::Config(format!(
                "gateway.cache_path is required in {:?} mode",
                self.gateway.mode
            )));
        }
        Ok(())
    }

    /// Whether any agent in this configuration talks to the gateway.
    pub fn uses_gateway(&self) -> bool {
        self.household_backend == HouseholdBackendKind::Llm
            || self.tax_system == TaxSystem::TaxAgent
    }
}
