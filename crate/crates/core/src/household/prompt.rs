//! Household prompt rendering and reply parsing.

use serde_json::Value;
use thiserror::Error;

use super::{Decision, DecisionContext, Direction, MemoryPool};
use crate::economy::Persona;
use crate::fmt::{fixed2, list};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplyError {
    #[error("reply contains no JSON object")]
    NoObject,
    #[error("reply JSON is malformed: {0}")]
    Malformed(String),
    #[error("reply is missing numeric key `{0}`")]
    MissingKey(&'static str),
}

fn income_phrase(direction: Direction) -> &'static str {
    match direction {
        Direction::Decreased => {
            "decreased compared to last month due to deflation of the labor market"
        }
        Direction::Increased => {
            "increased compared to last month due to inflation of the labor market"
        }
        Direction::Unchanged => "remained the same as last month",
    }
}

fn price_phrase(direction: Direction) -> &'static str {
    match direction {
        Direction::Decreased => "Deflation has led to a price decrease in the consumption market",
        Direction::Increased => "Inflation has led to a price increase in the consumption market",
        Direction::Unchanged => "Prices in the consumption market have remained stable",
    }
}

fn percent(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}

/// Renders the monthly decision prompt for one household.
pub fn build_household_prompt(ctx: &DecisionContext) -> String {
    let p = &ctx.persona;
    let previous = &ctx.previous_schedule;
    let current = &ctx.current_schedule;
    let brackets = if previous.thresholds() == current.thresholds() {
        "the brackets are not changed".to_string()
    } else {
        format!(
            "the brackets are changed to: {}",
            list(current.thresholds(), fixed2)
        )
    };
    let mut prompt = format!(
        "You're {name}, a {age}-year-old individual living in {city}. \
A tax planner adjusts your tax rates periodically. Now it's {date}. \
Last month, you worked as a(an) {occupation}. \
If you continue working this month, your expected income will be ${income}, which {income_phrase}. \
Besides, your consumption was ${consumption}. \
Part of your income last month was witheld as income tax. \
Last month, the tax brackets are: {old_brackets} and their corresponding rates are: {old_rates}. \
Income earned within each bracket is taxed only at that bracket's rate. \
This month, according to the tax planner, {brackets}. \
But the planner updated corresponding rates: {new_rates}. \
Income earned within each bracket is taxed at that bracket's rate. \
Pay attention to the tax rates because they may be different from the previous ones and you need to make your decision based on the current rates \
{price_phrase}, with the average price of essential goods now at ${price}. \
Your current savings account balance is ${savings}. \
Interest rates, as set by your bank, stand at {interest}. \
Considering aspects like your living costs, future aspirations, broader economic trends, and the tax you need to pay, how is your willingness to work this month? \
How would you plan your expenditures on essential goods? \
Provide your decisions in a JSON format. \
The format should have two keys: 'work' (a value between 0 and 1 with intervals of 0.02, indicating the willingness or propensity to work) \
and 'consumption' (a value between 0 and 1 with intervals of 0.02, indicating the proportion of all your savings and income you intend to spend on essential goods). \
Keep in mind, only provide your decisions in a JSON format with two keys and two values. \
Do not contain any other content in your response. \
Keep the thinking process to yourself. I only need two key-value pairs.",
        name = p.name,
        age = p.age,
        city = p.city,
        date = ctx.date,
        occupation = p.occupation,
        income = fixed2(ctx.expected_income),
        income_phrase = income_phrase(ctx.income_direction),
        consumption = fixed2(ctx.last_consumption),
        old_brackets = list(previous.thresholds(), fixed2),
        old_rates = list(previous.rates(), fixed2),
        brackets = brackets,
        new_rates = list(current.rates(), percent),
        price_phrase = price_phrase(ctx.price_direction),
        price = fixed2(ctx.price),
        savings = fixed2(ctx.savings),
        interest = percent(ctx.interest_rate),
    );
    if !ctx.reflection.trim().is_empty() {
        prompt.push_str(" Your reflection on your past decisions: ");
        prompt.push_str(ctx.reflection.trim());
    }
    prompt
}

/// Renders the quarterly reflection prompt over a household's memory.
pub fn build_reflection_prompt(persona: &Persona, memory: &MemoryPool) -> String {
    let history: Vec<String> = memory
        .iter()
        .map(|e| {
            format!(
                "{}: expected income ${}, {}, income ${} with tax ${}, consumption ${}, savings ${}, price ${}, interest {}, work propensity {}, consumption propensity {}",
                e.date,
                fixed2(e.expected_income),
                if e.employed { "worked" } else { "did not work" },
                fixed2(e.pretax_income),
                fixed2(e.tax_paid),
                fixed2(e.consumption),
                fixed2(e.savings),
                fixed2(e.price),
                percent(e.interest_rate),
                fixed2(e.decision.work),
                fixed2(e.decision.consumption),
            )
        })
        .collect();
    format!(
        "You're {}, a {}-year-old individual living in {}, working as a(an) {}. \
Here is your economic history and your decisions over the past months: {}. \
Review these decisions against how your income, taxes, prices and savings developed. \
In no more than three sentences, state what you will keep doing and what you will change \
about your willingness to work and your spending on essential goods in the coming months.",
        persona.name,
        persona.age,
        persona.city,
        persona.occupation,
        history.join("; ")
    )
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .filter(|x: &f64| x.is_finite())
}

/// Extracts `{"work": x, "consumption": y}` from a reply, tolerating
/// surrounding chatter, code fences and single-quoted keys. Values are
/// clamped and quantized to the 0.02 grid.
pub fn parse_household_reply(text: &str) -> Result<Decision, ReplyError> {
    let start = text.find('{').ok_or(ReplyError::NoObject)?;
    let end = text[start..].find('}').ok_or(ReplyError::NoObject)? + start;
    let raw = &text[start..=end];
    let value: Value = serde_json::from_str(raw)
        .or_else(|_| serde_json::from_str(&raw.replace('\'', "\"")))
        .map_err(|e| ReplyError::Malformed(e.to_string()))?;
    let work = value
        .get("work")
        .and_then(number)
        .ok_or(ReplyError::MissingKey("work"))?;
    let consumption = value
        .get("consumption")
        .and_then(number)
        .ok_or(ReplyError::MissingKey("consumption"))?;
    Ok(Decision::quantized(work, consumption))
}
