mod common;

use common::{MALFORMED_REPLIES, OUT_OF_RANGE_REPLIES};
use taxsim_core::household::{parse_household_reply, FALLBACK_DECISION};
use taxsim_core::policy::parse_tax_reply;
use taxsim_core::sim::{HouseholdBackendKind, SimConfig};
use taxsim_core::{run, TaxSchedule, TaxSystem};

#[test]
fn corpus_is_rejected_by_both_parsers() {
    assert!(MALFORMED_REPLIES.len() >= 20);
    for reply in MALFORMED_REPLIES {
        assert!(
            parse_household_reply(reply).is_err(),
            "household accepted {reply:?}"
        );
        assert!(
            parse_tax_reply(reply).is_err(),
            "planner accepted {reply:?}"
        );
    }
}

#[test]
fn out_of_range_values_are_clamped() {
    for (reply, [work, consumption]) in OUT_OF_RANGE_REPLIES {
        let d = parse_household_reply(reply).unwrap();
        assert_eq!((d.work, d.consumption), (work, consumption), "{reply:?}");
    }
}

fn malformed_run(system: TaxSystem) -> SimConfig {
    let replies: Vec<String> = MALFORMED_REPLIES
        .iter()
        .cycle()
        .take(MALFORMED_REPLIES.len() * 20)
        .map(|s| s.to_string())
        .collect();
    SimConfig {
        n_households: 5,
        months: 24,
        seed: 2,
        tax_system: system,
        household_backend: HouseholdBackendKind::Llm,
        household_rows: true,
        gateway: taxsim_core::sim::GatewayConfig {
            scripted_replies: replies,
            ..Default::default()
        },
        ..SimConfig::default()
    }
}

#[test]
fn malformed_replies_fall_back_everywhere() {
    let config = malformed_run(TaxSystem::TaxAgent);
    let result = run(&config).unwrap();
    assert_eq!(result.months.len(), 24);
    for row in &result.households {
        assert_eq!(row.work_propensity, FALLBACK_DECISION.work);
        assert_eq!(row.consumption_propensity, FALLBACK_DECISION.consumption);
    }
    for m in &result.months {
        assert_eq!(m.schedule, TaxSchedule::us_federal());
    }
    assert_eq!(result.summary.policy_fallbacks, 8);
}

#[test]
fn later_valid_reply_replaces_fallback() {
    let mut config = malformed_run(TaxSystem::UsFederal);
    config.n_households = 1;
    config.months = 2;
    config.gateway.scripted_replies = vec![
        "nonsense".into(),
        "[0.5]".into(),
        "{\"work\": 2}".into(),
        "{\"work\": 0.3, \"consumption\": 0.7}".into(),
    ];
    let result = run(&config).unwrap();
    let rows = &result.households;
    assert_eq!(
        (rows[0].work_propensity, rows[0].consumption_propensity),
        (0.6, 0.4)
    );
    assert_eq!(
        (rows[1].work_propensity, rows[1].consumption_propensity),
        (0.3, 0.7)
    );
}
