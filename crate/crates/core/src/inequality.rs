//! The combined Bell/Same game score F and its noise thresholds.
//!
//! The score couples a CHSH game between the first two parties,
//! conditioned on the remaining parties' collective +1 outcome under
//! input 1, with an unconditioned consistency game rewarding identical
//! outputs along a chain of parties:
//!
//!   F = I_Bell + (4·I_Same − 4(N−1)) / (1 + ⟨C̃₁⟩)
//!
//! Bipartite-nonclassical networks with shared randomness obey F ≤ 2; the
//! GHZ strategy reaches 2√2.
//!
//! Correlators that leave some inputs free (the Same-game terms and the
//! collective marginal ⟨C̃₁⟩) are pooled over every compatible setting in
//! the table, weighted by the per-row statistical weight. For exact
//! tables the weights are uniform; for counts-derived tables they equal
//! the per-setting trial totals, which minimizes the variance of the
//! pooled estimate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observable::MeasurementLayout;
use crate::quantum::{ghz_state, mix_white_noise, outcome_probabilities_for};
use crate::table::{outcome_sign, setting_label, ProbabilityTable};
use crate::tol;

pub const CLASSICAL_BOUND: f64 = 2.0;
pub const QUANTUM_MAX: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Evaluated game scores for one probability table.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub n_parties: usize,
    pub i_bell: f64,
    pub i_same: f64,
    pub c1_mean: f64,
    pub f_value: f64,
    pub classical_bound: f64,
    pub quantum_max: f64,
    /// ⟨A₀B₀⟩, ⟨A₀B₁⟩, ⟨A₁B₀⟩, ⟨A₁B₁⟩, each conditioned on C̃₁ = +1.
    pub bell_terms: Vec<f64>,
    /// ⟨A₀B₂⟩, ⟨B₂C₀⟩ and the chain correlators for N > 3.
    pub same_terms: Vec<f64>,
}

impl InequalityReport {
    pub fn violates_classical_bound(&self) -> bool {
        self.f_value > self.classical_bound
    }
}

/// Noise and fidelity thresholds for an F > 2 violation with N parties.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdResult {
    pub n_parties: usize,
    pub visibility_threshold: f64,
    pub fidelity_threshold: f64,
}

fn charlie_product_sign(outcome_index: usize, n: usize) -> f64 {
    (2..n).map(|p| outcome_sign(outcome_index, p, n)).product()
}

fn bell_setting(x: u8, y: u8, n: usize) -> Vec<u8> {
    let mut s = vec![1u8; n];
    s[0] = x;
    s[1] = y;
    s
}

/// ⟨A_x B_y⟩ conditioned on every remaining party having input 1 and their
/// outcome product being +1.
pub fn conditional_ab_correlator(table: &ProbabilityTable, x: u8, y: u8) -> Result<f64> {
    let n = table.n_parties();
    let setting = bell_setting(x, y, n);
    let row = table.row(&setting).ok_or_else(|| {
        Error::MissingSetting(setting_label(&setting))
    })?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &p) in row.probs.iter().enumerate() {
        if charlie_product_sign(i, n) > 0.0 {
            num += p * outcome_sign(i, 0, n) * outcome_sign(i, 1, n);
            den += p;
        }
    }
    if den <= 0.0 {
        return Err(Error::Conditioning(format!(
            "collective outcome is never +1 under setting {}",
            setting_label(&setting)
        )));
    }
    Ok(num / den)
}

/// Weighted pool of Σ p·sign_a·sign_b over every row matching the two
/// party-input constraints.
fn pooled_pair_correlator(
    table: &ProbabilityTable,
    party_a: usize,
    input_a: u8,
    party_b: usize,
    input_b: u8,
) -> Result<f64> {
    let n = table.n_parties();
    let mut num = 0.0;
    let mut weight = 0.0;
    for (setting, row) in table.rows() {
        if setting[party_a] != input_a || setting[party_b] != input_b {
            continue;
        }
        let corr: f64 = row
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| p * outcome_sign(i, party_a, n) * outcome_sign(i, party_b, n))
            .sum();
        num += row.weight * corr;
        weight += row.weight;
    }
    if weight <= 0.0 {
        return Err(Error::MissingSetting(format!(
            "no row with party {party_a} input {input_a} and party {party_b} input {input_b}"
        )));
    }
    Ok(num / weight)
}

/// Mean of the collective outcome of parties 2..N under input 1, pooled
/// over all available first-two-party inputs.
pub fn c1_mean(table: &ProbabilityTable) -> Result<f64> {
    let n = table.n_parties();
    let mut num = 0.0;
    let mut weight = 0.0;
    for (setting, row) in table.rows() {
        if setting[2..].iter().any(|&s| s != 1) {
            continue;
        }
        let val: f64 = row
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| p * charlie_product_sign(i, n))
            .sum();
        num += row.weight * val;
        weight += row.weight;
    }
    if weight <= 0.0 {
        return Err(Error::MissingSetting(
            "no row with all conditioning parties at input 1".into(),
        ));
    }
    Ok(num / weight)
}

fn bell_terms(table: &ProbabilityTable) -> Result<Vec<f64>> {
    Ok(vec![
        conditional_ab_correlator(table, 0, 0)?,
        conditional_ab_correlator(table, 0, 1)?,
        conditional_ab_correlator(table, 1, 0)?,
        conditional_ab_correlator(table, 1, 1)?,
    ])
}

/// CHSH combination of the conditioned correlators.
pub fn i_bell(table: &ProbabilityTable) -> Result<f64> {
    let t = bell_terms(table)?;
    Ok(t[0] + t[1] + t[2] - t[3])
}

fn same_terms(table: &ProbabilityTable) -> Result<Vec<f64>> {
    let n = table.n_parties();
    let mut terms = vec![
        pooled_pair_correlator(table, 0, 0, 1, 2)?,
        pooled_pair_correlator(table, 1, 2, 2, 0)?,
    ];
    for k in 0..n.saturating_sub(3) {
        terms.push(pooled_pair_correlator(table, 2 + k, 0, 3 + k, 0)?);
    }
    Ok(terms)
}

/// Consistency-game score; perfect play reaches N − 1.
pub fn i_same(table: &ProbabilityTable) -> Result<f64> {
    Ok(same_terms(table)?.iter().sum())
}

/// Product of the conditioning parties' outputs: +1 iff an even number
/// of them output −1.
pub fn collective_charlie(outputs: &[i8]) -> Result<i8> {
    if outputs.is_empty() {
        return Err(Error::Domain(
            "collective outcome needs at least one output".into(),
        ));
    }
    let mut prod = 1i8;
    for &o in outputs {
        match o {
            1 => {}
            -1 => prod = -prod,
            other => {
                return Err(Error::Domain(format!(
                    "outputs must be ±1, got {other}"
                )))
            }
        }
    }
    Ok(prod)
}

fn evaluate(table: &ProbabilityTable) -> Result<InequalityReport> {
    let n = table.n_parties();
    let bell = bell_terms(table)?;
    let i_bell = bell[0] + bell[1] + bell[2] - bell[3];
    let same = same_terms(table)?;
    let i_same: f64 = same.iter().sum();
    let c1 = c1_mean(table)?;
    let denom = 1.0 + c1;
    if denom < tol::C1_DENOMINATOR_EPS {
        return Err(Error::SingularDenominator(denom));
    }
    let f_value = i_bell + (4.0 * i_same - 4.0 * (n as f64 - 1.0)) / denom;
    Ok(InequalityReport {
        n_parties: n,
        i_bell,
        i_same,
        c1_mean: c1,
        f_value,
        classical_bound: CLASSICAL_BOUND,
        quantum_max: QUANTUM_MAX,
        bell_terms: bell,
        same_terms: same,
    })
}

/// F for the three-party game.
pub fn f_score(table: &ProbabilityTable) -> Result<InequalityReport> {
    if table.n_parties() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "f_score expects a 3-party table, got {} parties",
            table.n_parties()
        )));
    }
    evaluate(table)
}

/// F for the N-party game; reduces to `f_score` at N = 3.
pub fn n_party_f(table: &ProbabilityTable, n_parties: usize) -> Result<InequalityReport> {
    if n_parties < 3 {
        return Err(Error::PartyCountOutOfRange {
            n: n_parties,
            min: 3,
            max: usize::MAX,
        });
    }
    if table.n_parties() != n_parties {
        return Err(Error::DimensionMismatch(format!(
            "table has {} parties, expected {n_parties}",
            table.n_parties()
        )));
    }
    evaluate(table)
}

/// Input tuples the N-party game actually needs: the four conditioned
/// CHSH settings plus one all-zeros consistency setting.
pub fn required_settings(n_parties: usize) -> Vec<Vec<u8>> {
    let mut settings = vec![
        bell_setting(0, 0, n_parties),
        bell_setting(0, 1, n_parties),
        bell_setting(1, 0, n_parties),
        bell_setting(1, 1, n_parties),
    ];
    let mut same = vec![0u8; n_parties];
    same[1] = 2;
    settings.push(same);
    settings
}

/// White-noise visibility above which F exceeds 2, closed form
/// (2N−1)/(2N−2+√2).
pub fn visibility_threshold(n_parties: usize) -> Result<f64> {
    if n_parties < 3 {
        return Err(Error::Domain(format!(
            "threshold defined for n ≥ 3, got {n_parties}"
        )));
    }
    let n = n_parties as f64;
    Ok((2.0 * n - 1.0) / (2.0 * n - 2.0 + std::f64::consts::SQRT_2))
}

/// GHZ fidelity above which F exceeds 2, closed form
/// (2N−1 + (√2−1)/2^N)/(2N−2+√2).
pub fn fidelity_threshold(n_parties: usize) -> Result<f64> {
    if n_parties < 3 {
        return Err(Error::Domain(format!(
            "threshold defined for n ≥ 3, got {n_parties}"
        )));
    }
    let n = n_parties as f64;
    let pow = 2.0f64.powi(n_parties.min(1074) as i32);
    Ok((2.0 * n - 1.0 + (std::f64::consts::SQRT_2 - 1.0) / pow)
        / (2.0 * n - 2.0 + std::f64::consts::SQRT_2))
}

pub fn thresholds(n_parties: usize) -> Result<ThresholdResult> {
    Ok(ThresholdResult {
        n_parties,
        visibility_threshold: visibility_threshold(n_parties)?,
        fidelity_threshold: fidelity_threshold(n_parties)?,
    })
}

/// F for an N-party GHZ state mixed with white noise at visibility p,
/// evaluated through the full Born-rule simulation path.
pub fn simulated_noisy_f(n_parties: usize, p: f64) -> Result<f64> {
    let layout = MeasurementLayout::ghz_game(n_parties)?;
    let state = mix_white_noise(&ghz_state(n_parties)?, p)?;
    let table = outcome_probabilities_for(&state, &layout, &required_settings(n_parties))?;
    Ok(n_party_f(&table, n_parties)?.f_value)
}

/// Root of F(p) = 2 found by bisection over simulated noisy states; an
/// independent cross-check of `visibility_threshold`.
pub fn visibility_threshold_numeric(n_parties: usize, p_tolerance: f64) -> Result<f64> {
    if n_parties < 3 {
        return Err(Error::Domain(format!(
            "threshold defined for n ≥ 3, got {n_parties}"
        )));
    }
    let mut lo = 0.5;
    let mut hi = 1.0;
    if simulated_noisy_f(n_parties, lo)? >= CLASSICAL_BOUND {
        return Err(Error::Domain(
            "F already exceeds the bound at p = 0.5; no bracket".into(),
        ));
    }
    while hi - lo > p_tolerance {
        let mid = 0.5 * (lo + hi);
        if simulated_noisy_f(n_parties, mid)? < CLASSICAL_BOUND {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{outcome_probabilities, QuantumState};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn ideal_table(n: usize) -> ProbabilityTable {
        let layout = MeasurementLayout::ghz_game(n).unwrap();
        outcome_probabilities(&ghz_state(n).unwrap(), &layout).unwrap()
    }

    fn noisy_table(n: usize, p: f64) -> ProbabilityTable {
        let layout = MeasurementLayout::ghz_game(n).unwrap();
        let state = mix_white_noise(&ghz_state(n).unwrap(), p).unwrap();
        outcome_probabilities(&state, &layout).unwrap()
    }

    #[test]
    fn conditional_correlator_ideal_value() {
        let table = ideal_table(3);
        assert_abs_diff_eq!(
            conditional_ab_correlator(&table, 0, 0).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn conditional_correlator_uniform_table_is_zero() {
        let mut table = ProbabilityTable::new(3);
        for s in MeasurementLayout::ghz_game(3).unwrap().all_settings() {
            table.insert_row(s, vec![0.125; 8], 1.0).unwrap();
        }
        assert_abs_diff_eq!(
            conditional_ab_correlator(&table, 0, 0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn conditioning_error_when_charlie_never_plus() {
        // Deterministic table: Charlie outputs −1 under input 1.
        let mut table = ProbabilityTable::new(3);
        for s in MeasurementLayout::ghz_game(3).unwrap().all_settings() {
            let mut probs = vec![0.0; 8];
            // Everyone outputs +1 except Charlie under input 1.
            let idx = if s[2] == 1 { 0b001 } else { 0b000 };
            probs[idx] = 1.0;
            table.insert_row(s, probs, 1.0).unwrap();
        }
        assert!(matches!(
            conditional_ab_correlator(&table, 0, 0),
            Err(Error::Conditioning(_))
        ));
        // The full score then hits the singular 1 + <C1> = 0 denominator
        // even before conditioning is consulted.
        assert!(f_score(&table).is_err());
    }

    #[test]
    fn ideal_chsh_reaches_tsirelson() {
        assert_abs_diff_eq!(i_bell(&ideal_table(3)).unwrap(), QUANTUM_MAX, epsilon = 1e-12);
    }

    #[test]
    fn noisy_chsh_scales_linearly() {
        for p in [0.2, 0.6, 0.95] {
            assert_abs_diff_eq!(
                i_bell(&noisy_table(3, p)).unwrap(),
                QUANTUM_MAX * p,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn product_state_respects_classical_chsh() {
        let amp = Complex64::new(0.125f64.sqrt(), 0.0);
        let plus3 = QuantumState::from_amplitudes(DVector::from_element(8, amp)).unwrap();
        let layout = MeasurementLayout::ghz_game(3).unwrap();
        let table = outcome_probabilities(&plus3, &layout).unwrap();
        let val = i_bell(&table).unwrap();
        assert!(val <= 2.0 + 1e-9, "got {val}");
        assert_abs_diff_eq!(val, std::f64::consts::SQRT_2, epsilon = 1e-10);
    }

    #[test]
    fn same_game_scores() {
        assert_abs_diff_eq!(i_same(&ideal_table(3)).unwrap(), 2.0, epsilon = 1e-12);
        for p in [0.3, 0.9] {
            assert_abs_diff_eq!(i_same(&noisy_table(3, p)).unwrap(), 2.0 * p, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(i_same(&noisy_table(3, 0.0)).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn f_score_examples() {
        let report = f_score(&ideal_table(3)).unwrap();
        assert_abs_diff_eq!(report.f_value, QUANTUM_MAX, epsilon = 1e-12);
        assert!(report.violates_classical_bound());

        let report = f_score(&noisy_table(3, 0.95)).unwrap();
        let closed_form = QUANTUM_MAX * 0.95 + 8.0 * (0.95 - 1.0);
        assert_abs_diff_eq!(report.f_value, closed_form, epsilon = 1e-10);
        assert_abs_diff_eq!(report.f_value, 2.2870, epsilon = 1e-4);

        let report = f_score(&noisy_table(3, 0.0)).unwrap();
        assert_abs_diff_eq!(report.f_value, -8.0, epsilon = 1e-10);
    }

    #[test]
    fn collective_charlie_parity() {
        assert_eq!(collective_charlie(&[1, 1]).unwrap(), 1);
        assert_eq!(collective_charlie(&[-1, -1]).unwrap(), 1);
        assert_eq!(collective_charlie(&[-1, 1, 1]).unwrap(), -1);
        assert!(collective_charlie(&[]).is_err());
        assert!(collective_charlie(&[0]).is_err());
    }

    #[test]
    fn four_party_ideal_score() {
        let table = ideal_table(4);
        let report = n_party_f(&table, 4).unwrap();
        assert_abs_diff_eq!(report.i_bell, QUANTUM_MAX, epsilon = 1e-10);
        assert_abs_diff_eq!(report.i_same, 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.c1_mean, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.f_value, QUANTUM_MAX, epsilon = 1e-10);
    }

    #[test]
    fn n_party_white_noise_closed_form() {
        for n in [3usize, 4, 5] {
            for p in [0.5, 0.9, 0.97] {
                let report = n_party_f(&noisy_table(n, p), n).unwrap();
                let expected = QUANTUM_MAX * p + 4.0 * (n as f64 - 1.0) * (p - 1.0);
                assert_abs_diff_eq!(report.f_value, expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn three_party_reduction_is_definitional() {
        for table in [ideal_table(3), noisy_table(3, 0.8)] {
            let a = f_score(&table).unwrap();
            let b = n_party_f(&table, 3).unwrap();
            assert_eq!(a.f_value, b.f_value);
            assert_eq!(a.i_bell, b.i_bell);
        }
    }

    #[test]
    fn charlie_relabeling_leaves_f_unchanged() {
        // Swap the two conditioning parties of a four-party table.
        let table = noisy_table(4, 0.93);
        let mut swapped = ProbabilityTable::new(4);
        for (setting, row) in table.rows() {
            let mut s = setting.clone();
            s.swap(2, 3);
            let mut probs = vec![0.0; 16];
            for (i, &p) in row.probs.iter().enumerate() {
                // Swap outcome bits of parties 2 and 3.
                let b2 = (i >> 1) & 1;
                let b3 = i & 1;
                let j = (i & !0b11) | (b3 << 1) | b2;
                probs[j] = p;
            }
            swapped.insert_row(s, probs, row.weight).unwrap();
        }
        let a = n_party_f(&table, 4).unwrap();
        let b = n_party_f(&swapped, 4).unwrap();
        assert_abs_diff_eq!(a.f_value, b.f_value, epsilon = 1e-12);
    }

    #[test]
    fn threshold_closed_forms() {
        let p3 = visibility_threshold(3).unwrap();
        assert_abs_diff_eq!(p3, 5.0 / (4.0 + std::f64::consts::SQRT_2), epsilon = 1e-15);
        let p4 = visibility_threshold(4).unwrap();
        assert_abs_diff_eq!(p4, 7.0 / (6.0 + std::f64::consts::SQRT_2), epsilon = 1e-15);
        assert!(visibility_threshold(2).is_err());
        assert!(fidelity_threshold(2).is_err());

        // f* = p* + (1 − p*)/2^N, algebraic identity.
        for n in 3..=10 {
            let p = visibility_threshold(n).unwrap();
            let f = fidelity_threshold(n).unwrap();
            assert_abs_diff_eq!(f, p + (1.0 - p) / (1u64 << n) as f64, epsilon = 1e-12);
            assert!(p < f && f < 1.0 && p > 0.0);
        }

        // Strictly increasing in N, approaching 1.
        for n in 3..=9 {
            assert!(visibility_threshold(n + 1).unwrap() > visibility_threshold(n).unwrap());
            assert!(fidelity_threshold(n + 1).unwrap() > fidelity_threshold(n).unwrap());
        }
        assert!(visibility_threshold(1000).unwrap() > 0.999);
    }

    #[test]
    fn f_equals_bound_at_threshold_visibility() {
        for n in [3usize, 4] {
            let p_star = visibility_threshold(n).unwrap();
            let f = simulated_noisy_f(n, p_star).unwrap();
            assert_abs_diff_eq!(f, CLASSICAL_BOUND, epsilon = 1e-6);
        }
    }

    #[test]
    fn tsirelson_bound_on_non_signaling_quantum_tables() {
        for p in [1.0, 0.7, 0.2] {
            let table = noisy_table(3, p);
            assert!(table.is_non_signaling(1e-9));
            let report = f_score(&table).unwrap();
            assert!(report.i_bell.abs() <= QUANTUM_MAX + 1e-9);
            assert!(report.i_same.abs() <= 2.0 + 1e-9);
            assert!(report.c1_mean.abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn two_path_oracle_table_vs_direct_traces() {
        // Independent route: build the full 8×8 operators and take traces
        // against the density matrix, then assemble F from those numbers.
        use crate::pauli::{tensor_product, Pauli};
        let layout = MeasurementLayout::ghz_game(3).unwrap();
        let state = mix_white_noise(&ghz_state(3).unwrap(), 0.91).unwrap();
        let rho = state.density_matrix();
        let id = Pauli::Identity.matrix();
        let proj_plus = |m: nalgebra::Matrix2<Complex64>| {
            (Pauli::Identity.matrix() + m) * Complex64::new(0.5, 0.0)
        };
        let obs = |party: usize, s: usize| *layout.observable(party, s).unwrap().matrix();
        let tr = |m: &nalgebra::DMatrix<Complex64>| (&rho * m).trace().re;

        let c1_plus = proj_plus(obs(2, 1));
        let mut bell = [0.0f64; 4];
        for (k, (x, y)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
            let num = tr(&tensor_product(&[obs(0, *x), obs(1, *y), c1_plus]));
            let den = tr(&tensor_product(&[id, id, c1_plus]));
            bell[k] = num / den;
        }
        let i_bell_direct = bell[0] + bell[1] + bell[2] - bell[3];
        let a0b2 = tr(&tensor_product(&[obs(0, 0), obs(1, 2), id]));
        let b2c0 = tr(&tensor_product(&[id, obs(1, 2), obs(2, 0)]));
        let c1 = tr(&tensor_product(&[id, id, obs(2, 1)]));
        let f_direct = i_bell_direct + (4.0 * (a0b2 + b2c0) - 8.0) / (1.0 + c1);

        let table = outcome_probabilities(&state, &layout).unwrap();
        let report = f_score(&table).unwrap();
        assert_abs_diff_eq!(report.f_value, f_direct, epsilon = 1e-9);
        assert_abs_diff_eq!(report.i_bell, i_bell_direct, epsilon = 1e-9);
    }
}
