//! CSV and JSON artifacts of a run. Every number is written with six decimals.

use std::fs;
use std::path::Path;

use super::{SimError, SimulationResult, Summary};

pub const MONTHLY_HEADER: [&str; 15] = [
    "month",
    "price",
    "inventory",
    "interest_rate",
    "rate_1",
    "rate_2",
    "rate_3",
    "rate_4",
    "rate_5",
    "rate_6",
    "rate_7",
    "gini",
    "equality",
    "productivity",
    "social_outcome",
];

pub const ANNUAL_HEADER: [&str; 3] = ["year", "inflation", "unemployment"];

pub const HOUSEHOLD_HEADER: [&str; 11] = [
    "month",
    "id",
    "wage",
    "work_propensity",
    "consumption_propensity",
    "employed",
    "pretax_income",
    "tax_paid",
    "posttax_income",
    "consumption_spent",
    "savings",
];

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| SimError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    let csv_err = |e: csv::Error| SimError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub(crate) fn summary_json(s: &Summary) -> String {
    let fields = [
        ("tax_system", format!("\"{}\"", s.tax_system)),
        ("seed", s.seed.to_string()),
        ("n_households", s.n_households.to_string()),
        ("months", s.months.to_string()),
        ("final_gini", num(s.final_gini)),
        ("final_equality", num(s.final_equality)),
        ("final_productivity", num(s.final_productivity)),
        ("final_social_outcome", num(s.final_social_outcome)),
        ("mean_inflation", num(s.mean_inflation)),
        ("mean_unemployment", num(s.mean_unemployment)),
        ("policy_fallbacks", s.policy_fallbacks.to_string()),
    ];
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("  \"{k}\": {v}"))
        .collect();
    format!("{{\n{}\n}}\n", body.join(",\n"))
}

/// Writes `monthly.csv`, `annual.csv`, `summary.json` and, when rows were
/// kept, `households.csv` into `dir`, creating it if needed.
pub fn write_outputs(result: &SimulationResult, dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    write_csv(
        &dir.join("monthly.csv"),
        &MONTHLY_HEADER,
        result.months.iter().map(|m| {
            let mut row = vec![
                m.month.to_string(),
                num(m.price),
                num(m.inventory),
                num(m.interest_rate),
            ];
            row.extend(m.schedule.rates().iter().map(|&r| num(r)));
            row.extend([
                num(m.metrics.gini),
                num(m.metrics.equality),
                num(m.metrics.productivity),
                num(m.metrics.social_outcome),
            ]);
            row
        }),
    )?;

    write_csv(
        &dir.join("annual.csv"),
        &ANNUAL_HEADER,
        result
            .years
            .iter()
            .map(|y| vec![y.year.to_string(), num(y.inflation), num(y.unemployment)]),
    )?;

    if !result.households.is_empty() {
        write_csv(
            &dir.join("households.csv"),
            &HOUSEHOLD_HEADER,
            result.households.iter().map(|h| {
                vec![
                    h.month.to_string(),
                    h.id.to_string(),
                    num(h.wage),
                    num(h.work_propensity),
                    num(h.consumption_propensity),
                    u8::from(h.employed).to_string(),
                    num(h.pretax_income),
                    num(h.tax_paid),
                    num(h.posttax_income),
                    num(h.consumption_spent),
                    num(h.savings),
                ]
            }),
        )?;
    }

    let path = dir.join("summary.json");
    fs::write(&path, summary_json(&result.summary)).map_err(io_err(&path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::TaxSystem;
    use crate::sim::{run, SimConfig};

    #[test]
    fn files_and_headers() {
        let config = SimConfig {
            n_households: 4,
            months: 13,
            household_rows: true,
            ..SimConfig::default()
        };
        let result = run(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&result, dir.path()).unwrap();

        let monthly = fs::read_to_string(dir.path().join("monthly.csv")).unwrap();
        let mut lines = monthly.lines();
        assert_eq!(lines.next().unwrap(), MONTHLY_HEADER.join(","));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 15);
        assert_eq!(first[0], "1");
        assert_eq!(
            &first[4..11],
            ["0.100000", "0.120000", "0.220000", "0.240000", "0.320000", "0.350000", "0.370000"]
        );
        assert_eq!(monthly.lines().count(), 14);

        let annual = fs::read_to_string(dir.path().join("annual.csv")).unwrap();
        assert_eq!(annual.lines().count(), 2);
        let households = fs::read_to_string(dir.path().join("households.csv")).unwrap();
        assert_eq!(households.lines().count(), 1 + 13 * 4);

        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["tax_system"], TaxSystem::UsFederal.as_str());
        assert_eq!(summary["months"], 13);
    }
}
