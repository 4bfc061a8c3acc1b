//! Outcome probability tables indexed by measurement-setting tuples.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tol;

/// Sign (+1.0 or −1.0) of one party's outcome inside an outcome index.
///
/// Party 0 occupies the most significant bit; a 0 bit encodes '+'.
pub fn outcome_sign(outcome_index: usize, party: usize, n_parties: usize) -> f64 {
    if (outcome_index >> (n_parties - 1 - party)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Outcome string such as "++-" for an outcome index.
pub fn outcome_label(outcome_index: usize, n_parties: usize) -> String {
    (0..n_parties)
        .map(|p| {
            if outcome_sign(outcome_index, p, n_parties) > 0.0 {
                '+'
            } else {
                '-'
            }
        })
        .collect()
}

/// Setting tuple rendered as a digit string, e.g. `[0, 2, 1]` → "021".
pub fn setting_label(setting: &[u8]) -> String {
    setting.iter().map(|d| (b'0' + d) as char).collect()
}

/// One per-setting outcome distribution plus a statistical weight.
///
/// The weight is the number of trials behind the row when the table came
/// from counts, and 1 for exact tables; weighted pooling of compatible
/// rows then reproduces count pooling.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub probs: Vec<f64>,
    pub weight: f64,
}

/// Map from setting tuples to outcome distributions over {+1, −1}^N.
#[derive(Debug, Clone)]
pub struct ProbabilityTable {
    n_parties: usize,
    rows: BTreeMap<Vec<u8>, TableRow>,
}

impl ProbabilityTable {
    pub fn new(n_parties: usize) -> Self {
        Self {
            n_parties,
            rows: BTreeMap::new(),
        }
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn n_outcomes(&self) -> usize {
        1 << self.n_parties
    }

    pub fn insert_row(&mut self, setting: Vec<u8>, probs: Vec<f64>, weight: f64) -> Result<()> {
        if probs.len() != self.n_outcomes() {
            return Err(Error::DimensionMismatch(format!(
                "setting {}: expected {} outcome probabilities, got {}",
                setting_label(&setting),
                self.n_outcomes(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(-1e-12..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::Normalization(format!(
                "setting {}: probability outside [0, 1]",
                setting_label(&setting)
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol::PROB_SUM {
            return Err(Error::Normalization(format!(
                "setting {}: probabilities sum to {sum}, not 1",
                setting_label(&setting)
            )));
        }
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::Domain(format!(
                "setting {}: weight must be positive",
                setting_label(&setting)
            )));
        }
        self.rows.insert(setting, TableRow { probs, weight });
        Ok(())
    }

    pub fn row(&self, setting: &[u8]) -> Option<&TableRow> {
        self.rows.get(setting)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Vec<u8>, &TableRow)> {
        self.rows.iter()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Probability that `party` outputs +1 in one row.
    fn marginal_plus(&self, row: &TableRow, party: usize) -> f64 {
        row.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| outcome_sign(*i, party, self.n_parties) > 0.0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Largest deviation of any party's single-party marginal across rows
    /// that share that party's input. Zero for non-signaling tables.
    pub fn non_signaling_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for party in 0..self.n_parties {
            let mut by_input: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
            for (setting, row) in &self.rows {
                by_input
                    .entry(setting[party])
                    .or_default()
                    .push(self.marginal_plus(row, party));
            }
            for marginals in by_input.values() {
                let lo = marginals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = marginals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(hi - lo);
            }
        }
        worst
    }

    pub fn is_non_signaling(&self, tolerance: f64) -> bool {
        self.non_signaling_deviation() <= tolerance
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_ordering_matches_binary_counting() {
        // +++, ++-, +-+, +--, -++, -+-, --+, ---.
        assert_eq!(outcome_label(0, 3), "+++");
        assert_eq!(outcome_label(1, 3), "++-");
        assert_eq!(outcome_label(5, 3), "-+-");
        assert_eq!(outcome_label(7, 3), "---");
        assert_eq!(outcome_sign(5, 0, 3), -1.0);
        assert_eq!(outcome_sign(5, 1, 3), 1.0);
        assert_eq!(outcome_sign(5, 2, 3), -1.0);
    }

    #[test]
    fn insert_rejects_bad_rows() {
        let mut t = ProbabilityTable::new(2);
        assert!(t.insert_row(vec![0, 0], vec![0.5; 3], 1.0).is_err());
        assert!(t.insert_row(vec![0, 0], vec![0.5, 0.6, 0.0, 0.0], 1.0).is_err());
        assert!(t
            .insert_row(vec![0, 0], vec![1.2, -0.2, 0.0, 0.0], 1.0)
            .is_err());
        assert!(t
            .insert_row(vec![0, 0], vec![0.25, 0.25, 0.25, 0.25], 1.0)
            .is_ok());
    }

    #[test]
    fn signaling_table_detected() {
        let mut t = ProbabilityTable::new(2);
        // Party 0's marginal depends on party 1's input: signaling.
        t.insert_row(vec![0, 0], vec![1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        t.insert_row(vec![0, 1], vec![0.0, 0.0, 1.0, 0.0], 1.0).unwrap();
        assert!(t.non_signaling_deviation() > 0.9);
        assert!(!t.is_non_signaling(1e-9));
    }
}
