//! Raw coincidence-count tables, their CSV format, conversion to
//! probabilities, point evaluation of F and bootstrap uncertainty.
//!
//! CSV format: header `setting,ppp,ppm,pmp,pmm,mpp,mpm,mmp,mmm`, one row
//! per three-digit setting string (x y z), `#` comments, UTF-8. A
//! reference dataset recorded on the triangular network ships with the
//! crate.

use std::collections::BTreeMap;
use std::io::BufRead;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inequality::{f_score, InequalityReport, CLASSICAL_BOUND};
use crate::stats;
use crate::table::{setting_label, ProbabilityTable};
use crate::tol;

pub const CSV_HEADER: &str = "setting,ppp,ppm,pmp,pmm,mpp,mpm,mmp,mmm";

const BUNDLED_COUNTS_CSV: &str = include_str!("../fixtures/experiment_counts.csv");

/// The twelve input combinations of the three-party game.
pub fn game_settings() -> Vec<[u8; 3]> {
    let mut v = Vec::with_capacity(12);
    for x in 0..2u8 {
        for y in 0..3u8 {
            for z in 0..2u8 {
                v.push([x, y, z]);
            }
        }
    }
    v
}

/// Nonnegative integer coincidence counts per setting, outcomes ordered
/// +++, ++-, +-+, +--, -++, -+-, --+, ---.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsTable {
    rows: BTreeMap<[u8; 3], [u64; 8]>,
}

impl Default for CountsTable {
    fn default() -> Self {
        Self::new()
    }
}

impl CountsTable {
    pub fn new() -> Self {
        Self {
            rows: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, setting: [u8; 3], counts: [u64; 8]) -> Result<()> {
        if setting[0] > 1 || setting[1] > 2 || setting[2] > 1 {
            return Err(Error::Domain(format!(
                "setting {} outside the 2×3×2 input alphabet",
                setting_label(&setting)
            )));
        }
        if self.rows.insert(setting, counts).is_some() {
            return Err(Error::Domain(format!(
                "duplicate setting {}",
                setting_label(&setting)
            )));
        }
        Ok(())
    }

    pub fn row(&self, setting: [u8; 3]) -> Option<&[u64; 8]> {
        self.rows.get(&setting)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[u8; 3], &[u64; 8])> {
        self.rows.iter()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_total(&self, setting: [u8; 3]) -> u64 {
        self.rows
            .get(&setting)
            .map(|r| r.iter().sum())
            .unwrap_or(0)
    }

    pub fn total_events(&self) -> u64 {
        self.rows.values().map(|r| r.iter().sum::<u64>()).sum()
    }

    /// Parses the CSV format; errors carry 1-based line numbers.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut table = CountsTable::new();
        let mut saw_header = false;
        let mut saw_data = false;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                if trimmed != CSV_HEADER {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected header `{CSV_HEADER}`"),
                    });
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 9 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 9 fields, got {}", fields.len()),
                });
            }
            let setting = parse_setting(fields[0]).map_err(|msg| Error::Parse {
                line: line_no,
                msg,
            })?;
            let mut counts = [0u64; 8];
            for (k, field) in fields[1..].iter().enumerate() {
                counts[k] = field.parse::<u64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("count `{field}` is not a nonnegative integer"),
                })?;
            }
            table.insert(setting, counts).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            saw_data = true;
        }
        if !saw_data {
            return Err(Error::Parse {
                line: 0,
                msg: "no data rows found".into(),
            });
        }
        Ok(table)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (setting, counts) in &self.rows {
            out.push_str(&setting_label(setting));
            for c in counts {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn parse_setting(text: &str) -> std::result::Result<[u8; 3], String> {
    let bytes = text.as_bytes();
    if bytes.len() != 3 || !bytes.iter().all(|b| b.is_ascii_digit()) {
        return Err(format!("setting `{text}` is not a three-digit string"));
    }
    Ok([bytes[0] - b'0', bytes[1] - b'0', bytes[2] - b'0'])
}

/// Reads a counts table from any byte stream in the CSV format.
pub fn load_counts<R: BufRead>(reader: R) -> Result<CountsTable> {
    CountsTable::from_reader(reader)
}

/// The reference dataset recorded on the triangular network.
pub fn bundled_experiment_counts() -> CountsTable {
    CountsTable::from_csv_str(BUNDLED_COUNTS_CSV).expect("bundled dataset parses")
}

/// Raw CSV text of the reference dataset.
pub fn bundled_experiment_counts_csv() -> &'static str {
    BUNDLED_COUNTS_CSV
}

/// Normalizes each row by its total. Row weights carry the totals so that
/// downstream pooling reproduces count pooling.
pub fn counts_to_probabilities(counts: &CountsTable) -> Result<ProbabilityTable> {
    let mut table = ProbabilityTable::new(3);
    for (setting, row) in counts.rows() {
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Err(Error::Normalization(format!(
                "setting {} has zero total count",
                setting_label(setting)
            )));
        }
        let probs: Vec<f64> = row.iter().map(|&c| c as f64 / total as f64).collect();
        table.insert_row(setting.to_vec(), probs, total as f64)?;
    }
    Ok(table)
}

/// Point estimate of F from counts. Requires all twelve game settings.
pub fn evaluate_counts(counts: &CountsTable) -> Result<InequalityReport> {
    for setting in game_settings() {
        if counts.row(setting).is_none() {
            return Err(Error::MissingSetting(setting_label(&setting)));
        }
    }
    f_score(&counts_to_probabilities(counts)?)
}

/// How bootstrap resamples are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResampleModel {
    /// Per-setting multinomial with the observed row totals held fixed.
    MultinomialFixedTotals,
    /// Row totals drawn Poisson at the observed value, then multinomial.
    PoissonTotals,
}

/// Bootstrap summary for an F estimate.
#[derive(Debug, Clone, Serialize)]
pub struct StatReport {
    pub f_value: f64,
    pub sigma: f64,
    /// (F − 2)/σ.
    pub sigma_violation: f64,
    pub n_events: u64,
    pub resamples: usize,
    pub seed: u64,
    pub model: ResampleModel,
    /// Resamples dropped because F was undefined on them.
    pub excluded_resamples: usize,
    /// Set when more than 1% of resamples were dropped.
    pub unstable: bool,
}

/// Bootstrap standard deviation of F with the default per-row multinomial
/// model. Deterministic for a fixed seed and resample count.
pub fn bootstrap_sigma(counts: &CountsTable, resamples: usize, seed: u64) -> Result<StatReport> {
    bootstrap_sigma_with(counts, resamples, seed, ResampleModel::MultinomialFixedTotals)
}

pub fn bootstrap_sigma_with(
    counts: &CountsTable,
    resamples: usize,
    seed: u64,
    model: ResampleModel,
) -> Result<StatReport> {
    if resamples < 100 {
        return Err(Error::Domain(format!(
            "need at least 100 resamples, got {resamples}"
        )));
    }
    let point = evaluate_counts(counts)?;
    let rows: Vec<([u8; 3], [u64; 8])> = counts.rows().map(|(s, c)| (*s, *c)).collect();

    // Each resample owns an independent deterministic RNG stream, so the
    // parallel fold is schedule-independent.
    let f_values: Vec<Option<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stats::substream(seed, i);
            let mut resampled = CountsTable::new();
            for (setting, row) in &rows {
                let total: u64 = row.iter().sum();
                let n = match model {
                    ResampleModel::MultinomialFixedTotals => total,
                    ResampleModel::PoissonTotals => {
                        use rand_distr::{Distribution, Poisson};
                        Poisson::new(total as f64)
                            .map(|d| d.sample(&mut rng) as u64)
                            .unwrap_or(total)
                    }
                };
                let probs: Vec<f64> = row.iter().map(|&c| c as f64).collect();
                let draw = stats::multinomial(&mut rng, n, &probs);
                let mut fixed = [0u64; 8];
                fixed.copy_from_slice(&draw);
                resampled.insert(*setting, fixed).expect("fresh table");
            }
            evaluate_counts(&resampled).ok().map(|r| r.f_value)
        })
        .collect();

    let kept: Vec<f64> = f_values.iter().filter_map(|v| *v).collect();
    let excluded = resamples - kept.len();
    if kept.len() < 2 {
        return Err(Error::Domain(
            "bootstrap failed: fewer than two valid resamples".into(),
        ));
    }
    let sigma = stats::std_dev(&kept);
    Ok(StatReport {
        f_value: point.f_value,
        sigma,
        sigma_violation: (point.f_value - CLASSICAL_BOUND) / sigma,
        n_events: counts.total_events(),
        resamples,
        seed,
        model,
        excluded_resamples: excluded,
        unstable: excluded as f64 > tol::BOOTSTRAP_EXCLUSION_WARN * resamples as f64,
    })
}

/// Samples a counts table from a three-party probability table,
/// `trials_per_setting` multinomial trials per row.
pub fn sample_from_table(
    table: &ProbabilityTable,
    trials_per_setting: u64,
    seed: u64,
) -> Result<CountsTable> {
    if table.n_parties() != 3 {
        return Err(Error::DimensionMismatch(
            "counts sampling expects a 3-party table".into(),
        ));
    }
    let mut rng = stats::substream(seed, 0);
    let mut counts = CountsTable::new();
    for (setting, row) in table.rows() {
        let draw = stats::multinomial(&mut rng, trials_per_setting, &row.probs);
        let mut fixed = [0u64; 8];
        fixed.copy_from_slice(&draw);
        counts.insert([setting[0], setting[1], setting[2]], fixed)?;
    }
    Ok(counts)
}
