#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use taxsim_core::llm::{ChatRequest, Transport, TransportError};
use taxsim_core::TaxSchedule;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
}

/// Schedule whose thresholds sit on whole cents, at most `max_cents` apart
/// from zero, with uniform rates.
pub fn cent_schedule<R: Rng>(
    rng: &mut R,
    brackets: usize,
    max_cents: u64,
) -> (Vec<u64>, TaxSchedule) {
    let mut cents = vec![0u64];
    while cents.len() < brackets {
        let c = rng.random_range(1..=max_cents);
        if !cents.contains(&c) {
            cents.push(c);
        }
    }
    cents.sort_unstable();
    let thresholds = cents.iter().map(|&c| c as f64 / 100.0).collect();
    let rates = (0..brackets).map(|_| rng.random_range(0.0..=1.0)).collect();
    (cents.clone(), TaxSchedule::new(thresholds, rates).unwrap())
}

/// Tax by walking the income one cent at a time, each cent taxed at the
/// rate of the bracket it starts in; the last partial cent is prorated.
pub fn per_cent_tax(cents: &[u64], rates: &[f64], income: f64) -> f64 {
    let scaled = income * 100.0;
    let whole = scaled.floor() as u64;
    let mut k = 0;
    let mut tax = 0.0;
    for c in 0..=whole {
        while k + 1 < cents.len() && c >= cents[k + 1] {
            k += 1;
        }
        let width = (scaled - c as f64).min(1.0);
        if width <= 0.0 {
            break;
        }
        tax += rates[k] * width;
    }
    tax / 100.0
}

/// Mean absolute difference over all ordered pairs, over twice the mean.
pub fn gini_pairwise(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for a in x {
        for b in x {
            total += (a - b).abs();
        }
    }
    total / (2.0 * n * n * mean)
}

/// Offline stand-in for a chat model: replies are a pure function of the
/// request's cache key, and roughly one reply in eight is unusable.
pub struct FakeModel;

impl Transport for FakeModel {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let key = request.cache_key();
        let bytes = hex::decode(&key).unwrap();
        let prompt = &request.prompt;
        if bytes[0].is_multiple_of(8) && !prompt.contains("In no more than three sentences") {
            return Ok("Let me think about the economy first.".to_string());
        }
        if prompt.starts_with("You are a tax planner") {
            let rates: Vec<String> = bytes[1..8]
                .iter()
                .map(|b| format!("{:.2}", f64::from(b % 50) / 100.0))
                .collect();
            return Ok(format!("[{}]", rates.join(", ")));
        }
        if prompt.contains("In no more than three sentences") {
            const NOTES: [&str; 3] = [
                "I will keep working full time and spend a little less on goods.",
                "Prices keep falling, so I can afford to buy more while saving the rest.",
                "Taxes took a larger share, so I will work a bit less and keep spending steady.",
            ];
            return Ok(NOTES[bytes[1] as usize % NOTES.len()].to_string());
        }
        let work = f64::from(bytes[1] % 51) / 50.0;
        let consumption = f64::from(bytes[2] % 26) / 50.0;
        Ok(format!(
            "{{\"work\": {work}, \"consumption\": {consumption}}}"
        ))
    }
}

/// Replies that no parser should accept, for either agent.
pub const MALFORMED_REPLIES: [&str; 24] = [
    "",
    "   ",
    "I think 1.5 work",
    "work: 0.5, consumption: 0.3",
    "{work: }",
    "{\"work\": 0.5}",
    "{\"consumption\": 0.2}",
    "{\"work\": \"lots\", \"consumption\": 0.1}",
    "{\"work\": null, \"consumption\": null}",
    "{\"work\": 0.5, \"consumption\": 0.2",
    "\"work\": 0.5, \"consumption\": 0.2}",
    "{\"labor\": 0.4, \"spend\": 0.3}",
    "[0.1, 0.2, 0.3]",
    "[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]",
    "[]",
    "[a, b, c, d, e, f, g]",
    "Sure! Here are the rates: 0.1 0.2 0.3 0.4 0.5 0.6 0.7",
    "{\"rates\": 0.3}",
    "```json\n```",
    "As an economist I would not change anything.",
    "[0.1, 0.2, NaN, 0.4, 0.5, 0.6, 0.7]",
    "{\"work\": [0.5], \"consumption\": {\"x\": 1}}",
    "]0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7[",
    "null",
];

/// Replies with the right shape but values outside `[0, 1]` or off-grid;
/// these are clamped and rounded rather than rejected.
pub const OUT_OF_RANGE_REPLIES: [(&str, [f64; 2]); 4] = [
    ("{\"work\": 1.7, \"consumption\": -0.3}", [1.0, 0.0]),
    ("{\"work\": 0.83, \"consumption\": 0.41}", [0.84, 0.42]),
    ("ok {'work': '2', 'consumption': '0.5'} done", [1.0, 0.5]),
    ("{\"work\": -1e9, \"consumption\": 1e9}", [0.0, 1.0]),
];
