//! Monthly simulation loop, configuration and outputs.

mod compare;
mod config;
mod output;

use std::path::PathBuf;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::Serialize;
use thiserror::Error;

use crate::economy::{
    accrue_interest, adjust_wages_and_price, apply_taxation, compute_mismatch, execute_consumption,
    produce, realize_labor, update_interest_rate, Household, MarketState,
};
use crate::household::{
    load_roster, parse_roster, Decision, DecisionBackend, DecisionContext, Direction, LlmBackend,
    MemoryEntry, RosterError, RuleBasedBackend, SimDate, DEFAULT_ROSTER,
};
use crate::llm::{Gateway, GatewayError, GatewayMode, HttpTransport};
use crate::metrics::{annual_inflation, annual_unemployment, MetricSnapshot, MetricsError};
use crate::policy::{
    FreeMarket, PolicyError, PolicyObservation, SaezError, SaezOptimal, TaxAgent, TaxPolicy,
    TaxSystem, UsFederal,
};
use crate::schedule::TaxSchedule;

pub use compare::{compare, sweep, Comparison, ComparisonRow};
pub use config::{GatewayConfig, HouseholdBackendKind, InitialConditions, SimConfig};
pub use output::{write_outputs, ANNUAL_HEADER, HOUSEHOLD_HEADER, MONTHLY_HEADER};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Roster(#[from] RosterError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("tax policy failed: {0}")]
    Policy(#[from] PolicyError),
    #[error("metric computation failed in month {month}: {source}")]
    Metrics {
        month: usize,
        #[source]
        source: MetricsError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configs cannot be compared: {0}")]
    Incomparable(String),
}

/// Phases of a month, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Propose,
    Decide,
    Produce,
    Tax,
    Consume,
    Adjust,
    Record,
    Reflect,
    Annual,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthRecord {
    pub month: usize,
    pub date: String,
    /// Price after this month's adjustment.
    pub price: f64,
    pub inventory: f64,
    /// Rate in force during the month; a year-end change shows next month.
    pub interest_rate: f64,
    pub schedule: TaxSchedule,
    pub supply: f64,
    pub demand: f64,
    pub consumed: f64,
    pub mismatch: f64,
    pub employed: usize,
    pub total_pretax_income: f64,
    pub total_tax: f64,
    pub redistribution: f64,
    pub total_wealth: f64,
    pub metrics: MetricSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnualRecord {
    pub year: usize,
    pub inflation: f64,
    pub unemployment: f64,
    /// Rate set at the end of this year.
    pub interest_rate: f64,
}

/// One household at the end of one month (before any year-end interest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HouseholdRow {
    pub month: usize,
    pub id: usize,
    pub wage: f64,
    pub work_propensity: f64,
    pub consumption_propensity: f64,
    pub employed: bool,
    pub pretax_income: f64,
    pub tax_paid: f64,
    pub posttax_income: f64,
    pub consumption_spent: f64,
    pub savings: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub tax_system: TaxSystem,
    pub seed: u64,
    pub n_households: usize,
    pub months: usize,
    pub final_gini: f64,
    pub final_equality: f64,
    pub final_productivity: f64,
    pub final_social_outcome: f64,
    /// Mean over completed years; 0 when the run is shorter than a year.
    pub mean_inflation: f64,
    pub mean_unemployment: f64,
    /// Adjustments where the policy failed and the schedule was kept.
    pub policy_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub months: Vec<MonthRecord>,
    pub years: Vec<AnnualRecord>,
    /// Empty unless `household_rows` is set.
    pub households: Vec<HouseholdRow>,
    pub summary: Summary,
    /// `(month, step)` in execution order.
    pub events: Vec<(usize, Step)>,
}

fn initial_households(
    config: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Household>, SimError> {
    let roster = match &config.persona_roster {
        Some(path) => load_roster(path)?,
        None => parse_roster(DEFAULT_ROSTER)?,
    };
    let init = &config.initial;
    let lognormal = |median: f64, sigma: f64| {
        LogNormal::new(median.ln(), sigma).map_err(|e| SimError::Config(e.to_string()))
    };
    let wage_dist = lognormal(init.wage_median, init.wage_sigma)?;
    let savings_dist = lognormal(init.savings_median, init.savings_sigma)?;
    let n = config.n_households;
    let wages: Vec<f64> = (0..n).map(|_| wage_dist.sample(rng)).collect();
    let savings: Vec<f64> = (0..n).map(|_| savings_dist.sample(rng)).collect();
    Ok((0..n)
        .map(|i| Household::new(i, roster[i % roster.len()].clone(), wages[i], savings[i]))
        .collect())
}

fn build_gateway(config: &SimConfig) -> Result<Option<Arc<Gateway>>, SimError> {
    if !config.uses_gateway() {
        return Ok(None);
    }
    let g = &config.gateway;
    let cache_path = || {
        g.cache_path
            .clone()
            .ok_or_else(|| SimError::Config("gateway.cache_path is not set".into()))
    };
    let transport = || -> Result<Arc<HttpTransport>, SimError> {
        HttpTransport::from_env(&g.endpoint, &g.api_key_env)
            .map(Arc::new)
            .map_err(|e| SimError::Config(e.to_string()))
    };
    let gateway = match g.mode {
        GatewayMode::Scripted => Gateway::scripted(g.scripted_replies.iter().cloned()),
        GatewayMode::Replay => Gateway::replay(cache_path()?)?,
        GatewayMode::Live => Gateway::live(transport()?),
        GatewayMode::Record => Gateway::record(transport()?, cache_path()?)?,
    };
    Ok(Some(Arc::new(gateway)))
}

fn build_policy(config: &SimConfig, gateway: Option<&Arc<Gateway>>) -> Box<dyn TaxPolicy> {
    match config.tax_system {
        TaxSystem::Free => Box::new(FreeMarket),
        TaxSystem::UsFederal => Box::new(UsFederal),
        TaxSystem::Saez => Box::new(SaezOptimal::new(config.saez.clone())),
        TaxSystem::TaxAgent => Box::new(TaxAgent::new(
            Arc::clone(gateway.expect("tax agent always has a gateway")),
            config.tax_agent.clone(),
        )),
    }
}

fn build_backend(config: &SimConfig, gateway: Option<&Arc<Gateway>>) -> Box<dyn DecisionBackend> {
    match config.household_backend {
        HouseholdBackendKind::RuleBased => Box::new(RuleBasedBackend),
        HouseholdBackendKind::Llm => Box::new(LlmBackend::new(
            Arc::clone(gateway.expect("llm households always have a gateway")),
            config.household_llm.clone(),
        )),
    }
}

/// Applies `f` to every index in `0..n`, returning results in index order.
/// Work is spread over up to `threads` scoped threads.
fn fan_out<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .step_by(chunk)
            .map(|start| {
                let f = &f;
                scope.spawn(move || (start..(start + chunk).min(n)).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("household worker panicked"))
            .collect()
    })
}

/// Runs one simulation, building the gateway described by `config.gateway`
/// when any agent needs one.
pub fn run(config: &SimConfig) -> Result<SimulationResult, SimError> {
    config.validate()?;
    let gateway = build_gateway(config)?;
    simulate(config, gateway)
}

/// Runs one simulation with every model call going through `gateway`,
/// ignoring `config.gateway`.
pub fn run_with_gateway(
    config: &SimConfig,
    gateway: Arc<Gateway>,
) -> Result<SimulationResult, SimError> {
    config.validate()?;
    simulate(config, config.uses_gateway().then_some(gateway))
}

fn simulate(
    config: &SimConfig,
    gateway: Option<Arc<Gateway>>,
) -> Result<SimulationResult, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut households = initial_households(config, &mut rng)?;
    let mut policy = build_policy(config, gateway.as_ref());
    let backend = build_backend(config, gateway.as_ref());
    let threads =
        if config.household_backend == HouseholdBackendKind::Llm && backend.parallel_safe() {
            config.max_threads
        } else {
            1
        };

    let n = config.n_households;
    let mut market = MarketState::new(
        config.initial.price,
        config.initial.interest_rate,
        config.productivity,
    );
    let mut schedule = config.tax_system.initial_schedule();
    let mut previous_schedule = schedule.clone();

    let mut schedule_history = vec![schedule.clone()];
    let mut productivity_history = vec![0.0];
    let mut equality_history = vec![0.0];
    let mut last_incomes = vec![0.0; n];
    let mut previous_expected: Vec<f64> =
        households.iter().map(Household::expected_income).collect();
    let mut previous_price = market.price;
    let mut decisions: Vec<Option<Decision>> = vec![None; n];

    let mut months = Vec::with_capacity(config.months);
    let mut years = Vec::new();
    let mut rows = Vec::new();
    let mut events = Vec::new();
    let mut prices = Vec::with_capacity(config.months);
    let mut labor: Vec<Vec<bool>> = Vec::with_capacity(config.months);
    let mut policy_fallbacks = 0;

    for m in 1..=config.months {
        let date = SimDate::of_month(config.start_year, m);

        // (1) policy
        if (m - 1) % config.adjust_period_months == 0 {
            let observation = PolicyObservation {
                month: m - 1,
                incomes: last_incomes.clone(),
                wealth: households.iter().map(|h| h.savings).collect(),
                schedule_history: schedule_history.clone(),
                productivity_history: productivity_history.clone(),
                equality_history: equality_history.clone(),
            };
            match policy.propose(&observation) {
                Ok(next) => schedule = next,
                Err(PolicyError::Gateway(err)) if err.is_fatal() => return Err(err.into()),
                Err(err) => {
                    // Saez has nothing to estimate from before anyone has earned.
                    if matches!(err, PolicyError::Saez(SaezError::InsufficientData(_))) {
                        log::debug!("month {m}: {err}; keeping schedule");
                    } else {
                        log::warn!(
                            "month {m}: {} policy failed, keeping schedule: {err}",
                            config.tax_system
                        );
                    }
                    policy_fallbacks += 1;
                }
            }
            events.push((m, Step::Propose));
        }

        // (2) decisions
        let contexts: Vec<DecisionContext> = households
            .iter()
            .map(|h| DecisionContext {
                date,
                persona: h.persona.clone(),
                expected_income: h.expected_income(),
                income_direction: Direction::between(previous_expected[h.id], h.expected_income()),
                last_consumption: h.consumption_spent,
                previous_schedule: previous_schedule.clone(),
                current_schedule: schedule.clone(),
                price: market.price,
                price_direction: Direction::between(previous_price, market.price),
                savings: h.savings,
                interest_rate: market.interest_rate,
                reflection: h.reflection.clone(),
            })
            .collect();
        let decided = fan_out(n, threads, |i| backend.decide(&contexts[i], decisions[i]));
        for (h, result) in households.iter_mut().zip(decided) {
            let d = result?;
            h.work_propensity = d.work;
            h.consumption_propensity = d.consumption;
            decisions[h.id] = Some(d);
            previous_expected[h.id] = h.expected_income();
        }
        previous_price = market.price;
        events.push((m, Step::Decide));

        // (3) labor and production
        realize_labor(&mut households, &mut rng);
        let supply = produce(&mut households, &mut market);
        events.push((m, Step::Produce));

        // (4) taxation
        let taxes = apply_taxation(&schedule, &mut households);
        events.push((m, Step::Tax));

        // (5) consumption
        let available = market.inventory;
        let consumption = execute_consumption(&mut households, &mut market, &mut rng);
        events.push((m, Step::Consume));

        // (6) wage and price adjustment
        let mismatch = compute_mismatch(consumption.intended, available);
        adjust_wages_and_price(
            &mut households,
            &mut market,
            mismatch,
            &config.adjustment,
            &mut rng,
        );
        events.push((m, Step::Adjust));

        // (7) record
        let wealth: Vec<f64> = households.iter().map(|h| h.savings).collect();
        let metrics = MetricSnapshot::from_wealth(m, &wealth, config.productivity_mode)
            .map_err(|source| SimError::Metrics { month: m, source })?;
        months.push(MonthRecord {
            month: m,
            date: date.to_string(),
            price: market.price,
            inventory: market.inventory,
            interest_rate: market.interest_rate,
            schedule: schedule.clone(),
            supply,
            demand: consumption.intended,
            consumed: consumption.consumed,
            mismatch,
            employed: households.iter().filter(|h| h.employed).count(),
            total_pretax_income: households.iter().map(|h| h.pretax_income).sum(),
            total_tax: taxes.total_tax(),
            redistribution: taxes.redistribution,
            total_wealth: wealth.iter().sum(),
            metrics: metrics.clone(),
        });
        for (h, ctx) in households.iter_mut().zip(&contexts) {
            h.memory.push(MemoryEntry {
                date,
                expected_income: ctx.expected_income,
                price: ctx.price,
                interest_rate: ctx.interest_rate,
                decision: decisions[h.id].expect("decided this month"),
                employed: h.employed,
                pretax_income: h.pretax_income,
                tax_paid: h.tax_paid,
                consumption: h.consumption_spent,
                savings: h.savings,
            });
            if config.household_rows {
                rows.push(HouseholdRow {
                    month: m,
                    id: h.id,
                    wage: h.wage,
                    work_propensity: h.work_propensity,
                    consumption_propensity: h.consumption_propensity,
                    employed: h.employed,
                    pretax_income: h.pretax_income,
                    tax_paid: h.tax_paid,
                    posttax_income: h.posttax_income,
                    consumption_spent: h.consumption_spent,
                    savings: h.savings,
                });
            }
        }
        schedule_history.push(schedule.clone());
        productivity_history.push(metrics.productivity);
        equality_history.push(metrics.equality);
        last_incomes = households.iter().map(|h| h.pretax_income).collect();
        prices.push(market.price);
        labor.push(households.iter().map(|h| h.employed).collect());
        previous_schedule = schedule.clone();
        events.push((m, Step::Record));

        // (8) reflection
        if m % config.reflection_period_months == 0 {
            let notes = fan_out(n, threads, |i| {
                let h = &households[i];
                backend.reflect(&h.persona, &h.memory, &h.reflection)
            });
            for (h, note) in households.iter_mut().zip(notes) {
                h.reflection = note?;
            }
            events.push((m, Step::Reflect));
        }

        // (9) year end
        if m % 12 == 0 {
            let inflation = annual_inflation(&prices);
            let unemployment = annual_unemployment(&labor[labor.len() - 12..])
                .map_err(|source| SimError::Metrics { month: m, source })?;
            market.interest_rate =
                update_interest_rate(&config.adjustment, inflation, unemployment);
            accrue_interest(&mut households, market.interest_rate);
            years.push(AnnualRecord {
                year: m / 12,
                inflation,
                unemployment,
                interest_rate: market.interest_rate,
            });
            events.push((m, Step::Annual));
        }
    }

    let last = &months.last().expect("at least one month").metrics;
    let mean = |values: Vec<f64>| {
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };
    let summary = Summary {
        tax_system: config.tax_system,
        seed: config.seed,
        n_households: n,
        months: config.months,
        final_gini: last.gini,
        final_equality: last.equality,
        final_productivity: last.productivity,
        final_social_outcome: last.social_outcome,
        mean_inflation: mean(years.iter().map(|y| y.inflation).collect()),
        mean_unemployment: mean(years.iter().map(|y| y.unemployment).collect()),
        policy_fallbacks,
    };
    Ok(SimulationResult {
        months,
        years,
        households: rows,
        summary,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(system: TaxSystem) -> SimConfig {
        SimConfig {
            n_households: 8,
            months: 24,
            seed: 3,
            tax_system: system,
            household_rows: true,
            ..SimConfig::default()
        }
    }

    #[test]
    fn month_count_and_rates() {
        let r = run(&small(TaxSystem::UsFederal)).unwrap();
        assert_eq!(r.months.len(), 24);
        assert_eq!(r.years.len(), 2);
        assert_eq!(r.households.len(), 24 * 8);
        for rec in &r.months {
            assert_eq!(rec.schedule, TaxSchedule::us_federal());
        }
        assert_eq!(r.months[0].date, "2001.01");
        assert_eq!(r.months[23].date, "2002.12");
    }

    #[test]
    fn free_market_collects_nothing() {
        let r = run(&small(TaxSystem::Free)).unwrap();
        assert!(r
            .months
            .iter()
            .all(|m| m.total_tax == 0.0 && m.redistribution == 0.0));
    }

    #[test]
    fn step_order() {
        let r = run(&small(TaxSystem::Saez)).unwrap();
        let month1: Vec<Step> = r.events.iter().filter(|e| e.0 == 1).map(|e| e.1).collect();
        assert_eq!(
            month1,
            [
                Step::Propose,
                Step::Decide,
                Step::Produce,
                Step::Tax,
                Step::Consume,
                Step::Adjust,
                Step::Record
            ]
        );
        let month12: Vec<Step> = r.events.iter().filter(|e| e.0 == 12).map(|e| e.1).collect();
        assert_eq!(
            month12,
            [
                Step::Decide,
                Step::Produce,
                Step::Tax,
                Step::Consume,
                Step::Adjust,
                Step::Record,
                Step::Reflect,
                Step::Annual
            ]
        );
        let proposals = r.events.iter().filter(|e| e.1 == Step::Propose).count();
        assert_eq!(proposals, 8);
    }

    #[test]
    fn fan_out_keeps_order() {
        let out = fan_out(37, 4, |i| i * 2);
        assert_eq!(out, (0..37).map(|i| i * 2).collect::<Vec<_>>());
        assert_eq!(fan_out(0, 4, |i| i), Vec::<usize>::new());
    }

    #[test]
    fn tax_agent_with_scripted_planner() {
        let mut c = small(TaxSystem::TaxAgent);
        c.gateway.scripted_replies = vec!["[0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]".into()];
        let r = run(&c).unwrap();
        assert_eq!(r.months[0].schedule.rates(), &[0.5; 7]);
        assert_eq!(r.months[23].schedule.rates(), &[0.5; 7]);
        // Every later adjustment finds the script exhausted and keeps the schedule.
        assert_eq!(r.summary.policy_fallbacks, 7);
    }

    #[test]
    fn replay_without_cache_file_is_fatal() {
        let mut c = small(TaxSystem::TaxAgent);
        c.gateway.mode = GatewayMode::Replay;
        c.gateway.cache_path = Some("/nonexistent/cache.jsonl".into());
        assert!(run(&c).is_err());
    }
}
