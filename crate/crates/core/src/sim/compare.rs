//! Side-by-side runs of several tax systems on shared seeds.

use std::fs;
use std::path::Path;

use super::{run, SimConfig, SimError, SimulationResult};
use crate::policy::TaxSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub system: TaxSystem,
    pub seed: u64,
    pub final_gini: f64,
    pub final_equality: f64,
    pub final_productivity: f64,
    pub final_social_outcome: f64,
    pub mean_inflation: f64,
    pub mean_unemployment: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Full results in the same order as `rows`.
    pub results: Vec<SimulationResult>,
}

impl Comparison {
    /// Systems in first-seen order with the mean final social outcome of each.
    pub fn mean_social_outcome(&self) -> Vec<(TaxSystem, f64)> {
        let mut systems: Vec<TaxSystem> = Vec::new();
        for r in &self.rows {
            if !systems.contains(&r.system) {
                systems.push(r.system);
            }
        }
        systems
            .into_iter()
            .map(|s| {
                let v: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.system == s)
                    .map(|r| r.final_social_outcome)
                    .collect();
                (s, v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect()
    }

    pub fn row(&self, system: TaxSystem, seed: u64) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.system == system && r.seed == seed)
    }

    /// Writes `comparison.csv` (final values per run) and `series.csv`
    /// (monthly metrics of every run, long format).
    pub fn write(&self, dir: &Path) -> Result<(), SimError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source: std::io::Error| SimError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut table = String::from(
            "system,seed,final_gini,final_equality,final_productivity,final_social_outcome,mean_inflation,mean_unemployment\n",
        );
        for r in &self.rows {
            table.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.system,
                r.seed,
                r.final_gini,
                r.final_equality,
                r.final_productivity,
                r.final_social_outcome,
                r.mean_inflation,
                r.mean_unemployment
            ));
        }
        let path = dir.join("comparison.csv");
        fs::write(&path, table).map_err(io(&path))?;

        let mut series =
            String::from("system,seed,month,gini,equality,productivity,social_outcome\n");
        for (row, result) in self.rows.iter().zip(&self.results) {
            for m in &result.months {
                series.push_str(&format!(
                    "{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
                    row.system,
                    row.seed,
                    m.month,
                    m.metrics.gini,
                    m.metrics.equality,
                    m.metrics.productivity,
                    m.metrics.social_outcome
                ));
            }
        }
        let path = dir.join("series.csv");
        fs::write(&path, series).map_err(io(&path))
    }
}

/// Runs every config. All must share household count, horizon and seed.
pub fn compare(configs: &[SimConfig]) -> Result<Comparison, SimError> {
    let Some(first) = configs.first() else {
        return Err(SimError::Incomparable("no configurations given".into()));
    };
    for c in &configs[1..] {
        if (c.n_households, c.months, c.seed) != (first.n_households, first.months, first.seed) {
            return Err(SimError::Incomparable(format!(
                "{} runs N={}, P={}, seed={} but {} runs N={}, P={}, seed={}",
                first.tax_system,
                first.n_households,
                first.months,
                first.seed,
                c.tax_system,
                c.n_households,
                c.months,
                c.seed
            )));
        }
    }
    let mut out = Comparison::default();
    for c in configs {
        let result = run(c)?;
        let s = &result.summary;
        out.rows.push(ComparisonRow {
            system: c.tax_system,
            seed: c.seed,
            final_gini: s.final_gini,
            final_equality: s.final_equality,
            final_productivity: s.final_productivity,
            final_social_outcome: s.final_social_outcome,
            mean_inflation: s.mean_inflation,
            mean_unemployment: s.mean_unemployment,
        });
        out.results.push(result);
    }
    Ok(out)
}

/// `compare` over each seed in turn, with `base` varied only in system and seed.
pub fn sweep(
    base: &SimConfig,
    systems: &[TaxSystem],
    seeds: &[u64],
) -> Result<Comparison, SimError> {
    if systems.is_empty() || seeds.is_empty() {
        return Err(SimError::Incomparable(
            "need at least one system and one seed".into(),
        ));
    }
    let mut all = Comparison::default();
    for &seed in seeds {
        let configs: Vec<SimConfig> = systems
            .iter()
            .map(|&tax_system| SimConfig {
                seed,
                tax_system,
                ..base.clone()
            })
            .collect();
        let part = compare(&configs)?;
        all.rows.extend(part.rows);
        all.results.extend(part.results);
    }
    Ok(all)
}
