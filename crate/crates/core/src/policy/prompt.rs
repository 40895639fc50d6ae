//! Tax planner prompt rendering and reply parsing.

use thiserror::Error;

use super::PolicyObservation;
use crate::fmt::{fixed2, list, short2};
use crate::grid::round01;
use crate::schedule::NUM_BRACKETS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatesReplyError {
    #[error("reply contains no list of {0} numbers")]
    NoList(usize),
}

fn count_word(n: usize) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS
        .get(n)
        .map(|w| w.to_string())
        .unwrap_or_else(|| n.to_string())
}

/// `[a, b, c]` with rates in their shortest two-decimal form.
pub fn render_rates(rates: &[f64]) -> String {
    list(rates, short2)
}

fn render_metric_history(values: &[f64]) -> String {
    let items: Vec<String> = if values.is_empty() {
        vec![" (0.0)".to_string()]
    } else {
        values
            .iter()
            .map(|&v| format!(" ({})", short2(v)))
            .collect()
    };
    format!("[{}]", items.join(", "))
}

/// Renders the planner prompt for one adjustment period.
pub fn build_tax_prompt(obs: &PolicyObservation, thresholds: &[f64]) -> String {
    let n = thresholds.len();
    let schedules: Vec<String> = obs
        .schedule_history
        .iter()
        .map(|s| render_rates(s.rates()))
        .collect();
    format!(
        "You are a tax planner in charge of adjusting the tax rates of each income brackets. \
You will decide the tax rate in next period applied cumulatively to the income of agents in the {count} {brackets} income brackets. \
Last month, the incomes and wealth of individuals living in your society were ${incomes} and ${wealth}. \
The tax rates you set in the past months were [([{schedules}])]. \
The average per-capita productivity in the last months were {productivity}: \
the past months' equality performances were {equality}(the higher, the more equal). \
Adjust the tax rates to build a society that you consider best for society. \
You have the total freedom to adjust the rates! \
Provide your decision in a JSON format. \
The decision should be a list with {count} values (each value between 0 and 1 with intervals of 0.01). \
Please only provide me a list with {count} values between 0 and 1! \
Do not provide anything else! Keep the thinking process to yourself.",
        count = count_word(n),
        brackets = list(thresholds, fixed2),
        incomes = list(&obs.incomes, short2),
        wealth = list(&obs.wealth, short2),
        schedules = schedules.join(", "),
        productivity = render_metric_history(&obs.productivity_history),
        equality = render_metric_history(&obs.equality_history),
    )
}

fn parse_list(body: &str, arity: usize) -> Option<Vec<f64>> {
    let values: Vec<f64> = body
        .split(',')
        .map(|t| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()?;
    (values.len() == arity).then_some(values)
}

/// First innermost `[...]` list of exactly `arity` numbers in `text`, with
/// each value clamped to `[0, 1]` and rounded half-up to the 0.01 grid.
pub fn parse_rates(text: &str, arity: usize) -> Result<Vec<f64>, RatesReplyError> {
    let mut open = None;
    for (i, c) in text.char_indices() {
        match c {
            '[' => open = Some(i),
            ']' => {
                if let Some(start) = open.take() {
                    if let Some(values) = parse_list(&text[start + 1..i], arity) {
                        return Ok(values.into_iter().map(round01).collect());
                    }
                }
            }
            _ => {}
        }
    }
    Err(RatesReplyError::NoList(arity))
}

/// Parses a planner reply into seven rates.
pub fn parse_tax_reply(text: &str) -> Result<[f64; NUM_BRACKETS], RatesReplyError> {
    let rates = parse_rates(text, NUM_BRACKETS)?;
    Ok(rates.try_into().expect("arity checked"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{TaxSchedule, BRACKET_THRESHOLDS};

    #[test]
    fn parses_plain_and_chatty_replies() {
        assert_eq!(
            parse_tax_reply("[0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45]").unwrap(),
            [0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45]
        );
        assert_eq!(
            parse_tax_reply("sure! [0.10,0.12,0.22,0.24,0.32,0.35,0.37] hope this helps").unwrap(),
            [0.10, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37]
        );
        assert_eq!(
            parse_tax_reply("[[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]]").unwrap(),
            [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
        );
    }

    #[test]
    fn skips_lists_of_wrong_arity() {
        assert_eq!(
            parse_tax_reply("[0.1, 0.2]"),
            Err(RatesReplyError::NoList(7))
        );
        assert_eq!(
            parse_tax_reply("brackets [1, 2] then [0, 0, 0, 0, 0, 0, 0.5]").unwrap(),
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]
        );
    }

    #[test]
    fn clamps_and_rounds() {
        assert_eq!(
            parse_tax_reply("[-0.2, 1.7, 0.125, 0.333, 0.005, 0.994, 0.5]").unwrap(),
            [0.0, 1.0, 0.13, 0.33, 0.01, 0.99, 0.5]
        );
    }

    fn observation() -> PolicyObservation {
        PolicyObservation {
            month: 6,
            incomes: vec![529.42, 820.63, 0.0, 4744.9],
            wealth: vec![29273.73, 35603.8, 44164.11, 46877.73],
            schedule_history: vec![
                TaxSchedule::us_federal(),
                TaxSchedule::with_rates([0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45]).unwrap(),
            ],
            productivity_history: vec![0.0, 11.26],
            equality_history: vec![0.0, 0.66],
        }
    }

    #[test]
    fn golden_prompt() {
        let p = build_tax_prompt(&observation(), &BRACKET_THRESHOLDS);
        let expected = "You are a tax planner in charge of adjusting the tax rates of each income brackets. You will decide the tax rate in next period applied cumulatively to the income of agents in the seven [0.00, 808.33, 3289.58, 7016.67, 13393.75, 17008.33, 42525.00] income brackets. Last month, the incomes and wealth of individuals living in your society were $[529.42, 820.63, 0.0, 4744.9] and $[29273.73, 35603.8, 44164.11, 46877.73]. The tax rates you set in the past months were [([[0.1, 0.12, 0.22, 0.24, 0.32, 0.35, 0.37], [0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.45]])]. The average per-capita productivity in the last months were [ (0.0),  (11.26)]: the past months' equality performances were [ (0.0),  (0.66)](the higher, the more equal). Adjust the tax rates to build a society that you consider best for society. You have the total freedom to adjust the rates! Provide your decision in a JSON format. The decision should be a list with seven values (each value between 0 and 1 with intervals of 0.01). Please only provide me a list with seven values between 0 and 1! Do not provide anything else! Keep the thinking process to yourself.";
        assert_eq!(p, expected);
    }

    #[test]
    fn empty_histories() {
        let mut obs = observation();
        obs.productivity_history.clear();
        obs.equality_history.clear();
        let p = build_tax_prompt(&obs, &BRACKET_THRESHOLDS);
        assert!(p.contains("productivity in the last months were [ (0.0)]:"));
        assert!(p.contains("equality performances were [ (0.0)](the higher"));
    }
}
