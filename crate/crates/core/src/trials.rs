//! Event-level simulation of the experimental trial pipeline: a
//! four-photon GHZ resource with white noise, trigger projection onto
//! |+⟩, per-trial random setting choice (Bob's ternary choice comes from
//! two bits with one pattern discarded), independent detector
//! efficiencies and four-fold post-selection.
//!
//! Pulses are processed in fixed-size batches, each with its own
//! deterministic RNG stream, so results are identical whether batches run
//! sequentially or in parallel.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::counts::CountsTable;
use crate::error::{Error, Result};
use crate::observable::{DichotomicObservable, MeasurementLayout};
use crate::quantum::{
    apply_left, apply_right_adjoint, fidelity_with_pure, ghz_state, mix_white_noise,
    setting_distribution, QuantumState,
};
use crate::stats;
use crate::table::setting_label;

const BATCH: u64 = 1 << 16;

/// Per-party setting distributions. The deployed protocol is uniform:
/// one random bit each for Alice and Charlie, two bits with rejection
/// for Bob.
#[derive(Debug, Clone, Serialize)]
pub struct SettingProbabilities {
    pub alice: [f64; 2],
    pub bob: [f64; 3],
    pub charlie: [f64; 2],
}

impl Default for SettingProbabilities {
    fn default() -> Self {
        Self {
            alice: [0.5; 2],
            bob: [1.0 / 3.0; 3],
            charlie: [0.5; 2],
        }
    }
}

impl SettingProbabilities {
    fn validate(&self) -> Result<()> {
        for (name, probs) in [
            ("alice", &self.alice[..]),
            ("bob", &self.bob[..]),
            ("charlie", &self.charlie[..]),
        ] {
            if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Config(format!(
                    "{name}: setting probabilities must lie in [0, 1]"
                )));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "{name}: setting probabilities sum to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    fn bob_is_uniform(&self) -> bool {
        self.bob.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-12)
    }
}

/// Independent detection efficiencies of the four detectors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetectorEfficiencies {
    pub trigger: f64,
    pub alice: f64,
    pub bob: f64,
    pub charlie: f64,
}

impl Default for DetectorEfficiencies {
    fn default() -> Self {
        Self {
            trigger: 1.0,
            alice: 1.0,
            bob: 1.0,
            charlie: 1.0,
        }
    }
}

impl DetectorEfficiencies {
    pub fn uniform(eta: f64) -> Self {
        Self {
            trigger: eta,
            alice: eta,
            bob: eta,
            charlie: eta,
        }
    }

    pub fn product(&self) -> f64 {
        self.trigger * self.alice * self.bob * self.charlie
    }

    fn validate(&self) -> Result<()> {
        for (name, eta) in [
            ("trigger", self.trigger),
            ("alice", self.alice),
            ("bob", self.bob),
            ("charlie", self.charlie),
        ] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::Config(format!(
                    "{name}: efficiency {eta} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Full configuration of one simulated run.
#[derive(Debug, Clone, Serialize)]
pub struct TrialConfig {
    pub n_pulses: u64,
    /// White-noise visibility p of the four-photon resource.
    pub visibility: f64,
    pub efficiency: DetectorEfficiencies,
    pub setting_probabilities: SettingProbabilities,
    pub seed: u64,
}

impl TrialConfig {
    pub fn new(n_pulses: u64, visibility: f64, seed: u64) -> Self {
        Self {
            n_pulses,
            visibility,
            efficiency: DetectorEfficiencies::default(),
            setting_probabilities: SettingProbabilities::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::Config(format!(
                "visibility {} outside [0, 1]",
                self.visibility
            )));
        }
        self.efficiency.validate()?;
        self.setting_probabilities.validate()
    }
}

/// Everything recorded about one pulse. `None` encodes a missing click.
#[derive(Debug, Clone, Copy)]
pub struct TrialRecord {
    pub pulse_index: u64,
    pub settings: [u8; 3],
    pub trigger_outcome: Option<i8>,
    pub outcomes: [Option<i8>; 3],
    pub accepted: bool,
}

/// Counters kept while drawing settings.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct DrawDiagnostics {
    pub bob_two_bit_draws: u64,
    pub bob_rejections: u64,
}

fn weighted_choice<R: Rng>(rng: &mut R, probs: &[f64]) -> u8 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k as u8;
        }
    }
    (probs.len() - 1) as u8
}

/// Draws one setting tuple. Alice and Charlie take one uniform bit each;
/// Bob draws two bits and rejects the fourth pattern, re-drawing until a
/// valid pattern appears (rejections are counted in the diagnostics).
pub fn draw_settings<R: Rng>(
    rng: &mut R,
    probs: &SettingProbabilities,
    diag: &mut DrawDiagnostics,
) -> (u8, u8, u8) {
    let x = weighted_choice(rng, &probs.alice);
    let y = if probs.bob_is_uniform() {
        loop {
            diag.bob_two_bit_draws += 1;
            let bits = rng.gen_range(0..4u8);
            if bits == 3 {
                diag.bob_rejections += 1;
                continue;
            }
            break bits;
        }
    } else {
        weighted_choice(rng, &probs.bob)
    };
    let z = weighted_choice(rng, &probs.charlie);
    (x, y, z)
}

/// Summary of one simulated run, reportable as flat key=value text.
#[derive(Debug, Clone, Serialize)]
pub struct TrialDiagnostics {
    pub n_pulses: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub trigger_clicks: u64,
    pub trigger_plus: u64,
    pub trigger_plus_fraction: f64,
    pub bob_two_bit_draws: u64,
    pub bob_rejections: u64,
    pub bob_rejection_rate: f64,
    pub setting_draws: BTreeMap<String, u64>,
    pub accepted_per_setting: BTreeMap<String, u64>,
    /// No pulse survived post-selection.
    pub empty_result: bool,
}

impl TrialDiagnostics {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("n_pulses={}\n", self.n_pulses));
        out.push_str(&format!("accepted={}\n", self.accepted));
        out.push_str(&format!("acceptance_rate={:.6}\n", self.acceptance_rate));
        out.push_str(&format!("trigger_clicks={}\n", self.trigger_clicks));
        out.push_str(&format!("trigger_plus={}\n", self.trigger_plus));
        out.push_str(&format!(
            "trigger_plus_fraction={:.6}\n",
            self.trigger_plus_fraction
        ));
        out.push_str(&format!("bob_two_bit_draws={}\n", self.bob_two_bit_draws));
        out.push_str(&format!("bob_rejections={}\n", self.bob_rejections));
        out.push_str(&format!(
            "bob_rejection_rate={:.6}\n",
            self.bob_rejection_rate
        ));
        out.push_str(&format!("empty_result={}\n", self.empty_result));
        for (s, n) in &self.setting_draws {
            out.push_str(&format!("setting_draws.{s}={n}\n"));
        }
        for (s, n) in &self.accepted_per_setting {
            out.push_str(&format!("accepted.{s}={n}\n"));
        }
        out
    }
}

struct PulseSimulator {
    cfg: TrialConfig,
    /// Outcome distributions over (trigger, a, b, c), indexed by setting.
    dists: Vec<[f64; 16]>,
}

fn setting_index(x: u8, y: u8, z: u8) -> usize {
    ((x as usize * 3) + y as usize) * 2 + z as usize
}

impl PulseSimulator {
    fn new(cfg: &TrialConfig, layout: &MeasurementLayout) -> Result<Self> {
        cfg.validate()?;
        if layout.n_parties() != 3
            || layout.n_settings(0) != 2
            || layout.n_settings(1) != 3
            || layout.n_settings(2) != 2
        {
            return Err(Error::Config(
                "trial layout must have 2, 3 and 2 settings for the three parties".into(),
            ));
        }
        // Four-party resource with the trigger as party 0, measured in X.
        let resource = if cfg.visibility >= 1.0 {
            ghz_state(4)?
        } else {
            mix_white_noise(&ghz_state(4)?, cfg.visibility)?
        };
        let mut parties: Vec<Vec<DichotomicObservable>> =
            vec![vec![DichotomicObservable::pauli_x()]];
        for party in 0..3 {
            let obs = (0..layout.n_settings(party))
                .map(|s| layout.observable(party, s).cloned())
                .collect::<Result<Vec<_>>>()?;
            parties.push(obs);
        }
        let four_layout = MeasurementLayout::new(parties)?;
        let mut dists = Vec::with_capacity(12);
        for x in 0..2u8 {
            for y in 0..3u8 {
                for z in 0..2u8 {
                    let probs =
                        setting_distribution(&resource, &four_layout, &[0, x, y, z])?;
                    let mut fixed = [0.0f64; 16];
                    fixed.copy_from_slice(&probs);
                    dists.push(fixed);
                }
            }
        }
        Ok(Self {
            cfg: cfg.clone(),
            dists,
        })
    }

    fn simulate(
        &self,
        rng: &mut ChaCha8Rng,
        pulse_index: u64,
        diag: &mut DrawDiagnostics,
    ) -> TrialRecord {
        let (x, y, z) = draw_settings(rng, &self.cfg.setting_probabilities, diag);
        let dist = &self.dists[setting_index(x, y, z)];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut outcome = 15usize;
        for (i, &p) in dist.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = i;
                break;
            }
        }
        // Bit 3 is the trigger, bits 2..0 are Alice, Bob, Charlie; a zero
        // bit encodes +1.
        let sign = |bit: usize| if (outcome >> bit) & 1 == 0 { 1i8 } else { -1i8 };
        let eff = &self.cfg.efficiency;
        let clicks = [
            rng.gen_bool(eff.trigger),
            rng.gen_bool(eff.alice),
            rng.gen_bool(eff.bob),
            rng.gen_bool(eff.charlie),
        ];
        let trigger_outcome = clicks[0].then(|| sign(3));
        let outcomes = [
            clicks[1].then(|| sign(2)),
            clicks[2].then(|| sign(1)),
            clicks[3].then(|| sign(0)),
        ];
        let accepted =
            trigger_outcome == Some(1) && outcomes.iter().all(|o| o.is_some());
        TrialRecord {
            pulse_index,
            settings: [x, y, z],
            trigger_outcome,
            outcomes,
            accepted,
        }
    }
}

#[derive(Clone)]
struct BatchTally {
    counts: [[u64; 8]; 12],
    setting_draws: [u64; 12],
    accepted_per_setting: [u64; 12],
    accepted: u64,
    trigger_clicks: u64,
    trigger_plus: u64,
    draw: DrawDiagnostics,
}

impl BatchTally {
    fn zero() -> Self {
        Self {
            counts: [[0; 8]; 12],
            setting_draws: [0; 12],
            accepted_per_setting: [0; 12],
            accepted: 0,
            trigger_clicks: 0,
            trigger_plus: 0,
            draw: DrawDiagnostics::default(),
        }
    }

    fn absorb(mut self, other: BatchTally) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
        for (a, b) in self
            .setting_draws
            .iter_mut()
            .zip(other.setting_draws.iter())
        {
            *a += b;
        }
        for (a, b) in self
            .accepted_per_setting
            .iter_mut()
            .zip(other.accepted_per_setting.iter())
        {
            *a += b;
        }
        self.accepted += other.accepted;
        self.trigger_clicks += other.trigger_clicks;
        self.trigger_plus += other.trigger_plus;
        self.draw.bob_two_bit_draws += other.draw.bob_two_bit_draws;
        self.draw.bob_rejections += other.draw.bob_rejections;
        self
    }

    fn record(&mut self, rec: &TrialRecord) {
        let idx = setting_index(rec.settings[0], rec.settings[1], rec.settings[2]);
        self.setting_draws[idx] += 1;
        if let Some(t) = rec.trigger_outcome {
            self.trigger_clicks += 1;
            if t == 1 {
                self.trigger_plus += 1;
            }
        }
        if rec.accepted {
            self.accepted += 1;
            self.accepted_per_setting[idx] += 1;
            let outcome_idx = rec
                .outcomes
                .iter()
                .fold(0usize, |acc, o| (acc << 1) | (o == &Some(-1)) as usize);
            self.counts[idx][outcome_idx] += 1;
        }
    }
}

fn run_batch(sim: &PulseSimulator, batch: u64) -> BatchTally {
    let mut rng = stats::substream(sim.cfg.seed, batch);
    let mut tally = BatchTally::zero();
    let start = batch * BATCH;
    let end = (start + BATCH).min(sim.cfg.n_pulses);
    for pulse in start..end {
        let mut diag = tally.draw;
        let rec = sim.simulate(&mut rng, pulse, &mut diag);
        tally.draw = diag;
        tally.record(&rec);
    }
    tally
}

/// Runs the full pipeline and accumulates accepted trials into a counts
/// table. Deterministic for a fixed seed regardless of thread count.
pub fn run_trials(
    config: &TrialConfig,
    layout: &MeasurementLayout,
) -> Result<(CountsTable, TrialDiagnostics)> {
    let sim = PulseSimulator::new(config, layout)?;
    let n_batches = config.n_pulses.div_ceil(BATCH);
    let tally = (0..n_batches)
        .into_par_iter()
        .map(|b| run_batch(&sim, b))
        .reduce(BatchTally::zero, BatchTally::absorb);

    let mut counts = CountsTable::new();
    let mut setting_draws = BTreeMap::new();
    let mut accepted_per_setting = BTreeMap::new();
    for x in 0..2u8 {
        for y in 0..3u8 {
            for z in 0..2u8 {
                let idx = setting_index(x, y, z);
                counts.insert([x, y, z], tally.counts[idx])?;
                let label = setting_label(&[x, y, z]);
                setting_draws.insert(label.clone(), tally.setting_draws[idx]);
                accepted_per_setting.insert(label, tally.accepted_per_setting[idx]);
            }
        }
    }
    let diagnostics = TrialDiagnostics {
        n_pulses: config.n_pulses,
        accepted: tally.accepted,
        acceptance_rate: tally.accepted as f64 / config.n_pulses.max(1) as f64,
        trigger_clicks: tally.trigger_clicks,
        trigger_plus: tally.trigger_plus,
        trigger_plus_fraction: tally.trigger_plus as f64 / tally.trigger_clicks.max(1) as f64,
        bob_two_bit_draws: tally.draw.bob_two_bit_draws,
        bob_rejections: tally.draw.bob_rejections,
        bob_rejection_rate: tally.draw.bob_rejections as f64
            / tally.draw.bob_two_bit_draws.max(1) as f64,
        setting_draws,
        accepted_per_setting,
        empty_result: tally.accepted == 0,
    };
    Ok((counts, diagnostics))
}

/// Sequential pulse-by-pulse view of the same simulation; follows the
/// exact batch RNG schedule of `run_trials`.
pub struct TrialStream {
    sim: PulseSimulator,
    rng: ChaCha8Rng,
    pulse: u64,
    diag: DrawDiagnostics,
}

impl TrialStream {
    pub fn new(config: &TrialConfig, layout: &MeasurementLayout) -> Result<Self> {
        let sim = PulseSimulator::new(config, layout)?;
        let rng = stats::substream(config.seed, 0);
        Ok(Self {
            sim,
            rng,
            pulse: 0,
            diag: DrawDiagnostics::default(),
        })
    }

    pub fn draw_diagnostics(&self) -> DrawDiagnostics {
        self.diag
    }
}

impl Iterator for TrialStream {
    type Item = TrialRecord;

    fn next(&mut self) -> Option<TrialRecord> {
        if self.pulse >= self.sim.cfg.n_pulses {
            return None;
        }
        if self.pulse > 0 && self.pulse.is_multiple_of(BATCH) {
            self.rng = stats::substream(self.sim.cfg.seed, self.pulse / BATCH);
        }
        let rec = self.sim.simulate(&mut self.rng, self.pulse, &mut self.diag);
        self.pulse += 1;
        Some(rec)
    }
}

/// The three-party state left when the trigger is projected onto
/// (|0⟩ ± |1⟩)/√2 and renormalized.
pub fn conditioned_state(visibility: f64, trigger_plus: bool) -> Result<QuantumState> {
    let resource = mix_white_noise(&ghz_state(4)?, visibility)?;
    let mut rho = resource.density_matrix();
    let half = Complex64::new(0.5, 0.0);
    let s = if trigger_plus { half } else { -half };
    let projector = nalgebra::Matrix2::new(half, s, s, half);
    apply_left(&projector, 0, 4, &mut rho);
    apply_right_adjoint(&projector, 0, 4, &mut rho);
    // Partial trace over the trigger (party 0, the most significant bit).
    let mut reduced = DMatrix::from_element(8, 8, Complex64::new(0.0, 0.0));
    for t in 0..2usize {
        for i in 0..8usize {
            for j in 0..8usize {
                reduced[(i, j)] += rho[(t * 8 + i, t * 8 + j)];
            }
        }
    }
    let norm = reduced.trace().re;
    if norm <= 0.0 {
        return Err(Error::Conditioning(
            "trigger projection has zero probability".into(),
        ));
    }
    reduced /= Complex64::new(norm, 0.0);
    let reduced = (&reduced + reduced.adjoint()) * half;
    QuantumState::from_density(reduced)
}

/// Fidelity between the trigger-conditioned ideal three-photon state and
/// the three-party GHZ state; equals 1 up to numerical precision.
pub fn conditioned_state_check() -> Result<f64> {
    let conditioned = conditioned_state(1.0, true)?;
    fidelity_with_pure(&conditioned, &ghz_state(3)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::evaluate_counts;
    use crate::inequality::QUANTUM_MAX;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn game_layout() -> MeasurementLayout {
        MeasurementLayout::ghz_game(3).unwrap()
    }

    #[test]
    fn setting_draw_frequencies() {
        let probs = SettingProbabilities::default();
        let mut rng = stats::substream(123, 0);
        let mut diag = DrawDiagnostics::default();
        let n = 300_000u64;
        let mut bob_counts = [0u64; 3];
        let mut alice_counts = [0u64; 2];
        for _ in 0..n {
            let (x, y, _z) = draw_settings(&mut rng, &probs, &mut diag);
            alice_counts[x as usize] += 1;
            bob_counts[y as usize] += 1;
        }
        let sigma3 = 3.0 * (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in bob_counts {
            assert!(
                (c as f64 - n as f64 / 3.0).abs() < sigma3,
                "bob counts {bob_counts:?}"
            );
        }
        let sigma2 = 3.0 * (n as f64 * 0.25).sqrt();
        for c in alice_counts {
            assert!((c as f64 - n as f64 / 2.0).abs() < sigma2);
        }
        // Two-bit rejection rate 1/4.
        let rate = diag.bob_rejections as f64 / diag.bob_two_bit_draws as f64;
        let sigma = 3.0 * (0.25 * 0.75 / diag.bob_two_bit_draws as f64).sqrt();
        assert!((rate - 0.25).abs() < sigma, "rate={rate}");
    }

    #[test]
    fn setting_draws_deterministic() {
        let probs = SettingProbabilities::default();
        let seq = |seed: u64| {
            let mut rng = stats::substream(seed, 0);
            let mut diag = DrawDiagnostics::default();
            (0..64)
                .map(|_| draw_settings(&mut rng, &probs, &mut diag))
                .collect::<Vec<_>>()
        };
        assert_eq!(seq(5), seq(5));
        assert_ne!(seq(5), seq(6));
    }

    #[test]
    fn record_invariant_holds() {
        let mut cfg = TrialConfig::new(20_000, 0.9, 77);
        cfg.efficiency = DetectorEfficiencies::uniform(0.7);
        let stream = TrialStream::new(&cfg, &game_layout()).unwrap();
        let mut n_accepted = 0u64;
        for rec in stream {
            let expected = rec.trigger_outcome == Some(1)
                && rec.outcomes.iter().all(|o| o.is_some());
            assert_eq!(rec.accepted, expected);
            assert!(rec.settings[0] < 2 && rec.settings[1] < 3 && rec.settings[2] < 2);
            n_accepted += rec.accepted as u64;
        }
        assert!(n_accepted > 0);
    }

    #[test]
    fn trigger_plus_rate_is_half() {
        let cfg = TrialConfig::new(200_000, 1.0, 3);
        let (_, diag) = run_trials(&cfg, &game_layout()).unwrap();
        let n = diag.trigger_clicks as f64;
        let sigma = 3.0 * (0.25 / n).sqrt();
        assert!(
            (diag.trigger_plus_fraction - 0.5).abs() < sigma,
            "fraction {}",
            diag.trigger_plus_fraction
        );
    }

    #[test]
    fn acceptance_rate_matches_efficiency_product() {
        let mut cfg = TrialConfig::new(200_000, 1.0, 9);
        cfg.efficiency = DetectorEfficiencies::uniform(0.8);
        let (_, diag) = run_trials(&cfg, &game_layout()).unwrap();
        let expected = 0.5 * cfg.efficiency.product();
        let sigma = 3.0 * (expected * (1.0 - expected) / cfg.n_pulses as f64).sqrt();
        assert!(
            (diag.acceptance_rate - expected).abs() < sigma,
            "rate {} expected {expected}",
            diag.acceptance_rate
        );
    }

    #[test]
    fn run_is_deterministic_and_matches_stream() {
        let cfg = TrialConfig::new(80_000, 0.95, 21);
        let (counts_a, diag_a) = run_trials(&cfg, &game_layout()).unwrap();
        let (counts_b, diag_b) = run_trials(&cfg, &game_layout()).unwrap();
        assert_eq!(counts_a, counts_b);
        assert_eq!(diag_a.accepted, diag_b.accepted);

        // Stream path reproduces the same accepted totals.
        let stream = TrialStream::new(&cfg, &game_layout()).unwrap();
        let accepted = stream.filter(|r| r.accepted).count() as u64;
        assert_eq!(accepted, diag_a.accepted);
    }

    #[test]
    fn ideal_run_violates_bound() {
        let cfg = TrialConfig::new(400_000, 1.0, 11);
        let (counts, diag) = run_trials(&cfg, &game_layout()).unwrap();
        assert!(!diag.empty_result);
        let report = evaluate_counts(&counts).unwrap();
        assert_abs_diff_eq!(report.f_value, QUANTUM_MAX, epsilon = 0.08);
        assert!(report.f_value > 2.0);
    }

    #[test]
    fn below_threshold_run_shows_no_violation() {
        let cfg = TrialConfig::new(300_000, 0.85, 13);
        let (counts, _) = run_trials(&cfg, &game_layout()).unwrap();
        let report = evaluate_counts(&counts).unwrap();
        let closed_form = QUANTUM_MAX * 0.85 + 8.0 * (0.85 - 1.0);
        assert!(report.f_value < 2.0);
        assert_abs_diff_eq!(report.f_value, closed_form, epsilon = 0.08);
    }

    #[test]
    fn zero_efficiency_flags_empty_result() {
        let mut cfg = TrialConfig::new(1000, 1.0, 1);
        cfg.efficiency = DetectorEfficiencies::uniform(0.0);
        let (counts, diag) = run_trials(&cfg, &game_layout()).unwrap();
        assert!(diag.empty_result);
        assert_eq!(counts.total_events(), 0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = TrialConfig::new(10, 1.2, 0);
        assert!(run_trials(&cfg, &game_layout()).is_err());
        cfg.visibility = 0.5;
        cfg.efficiency.bob = -0.1;
        assert!(run_trials(&cfg, &game_layout()).is_err());
        cfg.efficiency.bob = 1.0;
        cfg.setting_probabilities.bob = [0.5, 0.5, 0.5];
        assert!(run_trials(&cfg, &game_layout()).is_err());
    }

    #[test]
    fn conditioned_state_is_ghz() {
        assert_abs_diff_eq!(conditioned_state_check().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn minus_branch_gives_phase_flipped_ghz() {
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut v = DVector::from_element(8, Complex64::new(0.0, 0.0));
        v[0] = amp;
        v[7] = -amp;
        let flipped = QuantumState::from_amplitudes(v).unwrap();
        let conditioned = conditioned_state(1.0, false).unwrap();
        assert_abs_diff_eq!(
            fidelity_with_pure(&conditioned, &flipped).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn noisy_conditioned_fidelity_closed_form() {
        for p in [0.0, 0.4, 0.9313, 1.0] {
            let conditioned = conditioned_state(p, true).unwrap();
            let f = fidelity_with_pure(&conditioned, &ghz_state(3).unwrap()).unwrap();
            assert_abs_diff_eq!(f, p + (1.0 - p) / 8.0, epsilon = 1e-10);
        }
    }
}
