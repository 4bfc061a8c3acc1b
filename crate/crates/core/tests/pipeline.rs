//! Cross-module statistical invariants: simulator → counts → inequality.

use ghznet_core::counts::{bootstrap_sigma, sample_from_table, CountsTable};
use ghznet_core::inequality::QUANTUM_MAX;
use ghznet_core::observable::MeasurementLayout;
use ghznet_core::quantum::{ghz_state, mix_white_noise, outcome_probabilities};
use ghznet_core::table::setting_label;
use ghznet_core::tomography::{reconstruct, sample_dataset};
use ghznet_core::trials::{run_trials, TrialConfig};

#[test]
fn sampled_counts_converge_to_table_score() {
    // 10⁶ trials per setting pin F to the exact table value within three
    // bootstrap standard deviations.
    let layout = MeasurementLayout::ghz_game(3).unwrap();
    let state = mix_white_noise(&ghz_state(3).unwrap(), 0.9).unwrap();
    let table = outcome_probabilities(&state, &layout).unwrap();
    let exact = ghznet_core::inequality::f_score(&table).unwrap().f_value;

    let counts = sample_from_table(&table, 1_000_000, 31).unwrap();
    let boot = bootstrap_sigma(&counts, 500, 17).unwrap();
    assert!(
        (boot.f_value - exact).abs() < 3.0 * boot.sigma,
        "F = {} ± {}, exact {exact}",
        boot.f_value,
        boot.sigma
    );
}

#[test]
fn million_event_run_matches_closed_form() {
    // About 10⁶ accepted trials at p = 0.95.
    let p = 0.95;
    let cfg = TrialConfig::new(2_000_000, p, 2025);
    let layout = MeasurementLayout::ghz_game(3).unwrap();
    let (counts, diag) = run_trials(&cfg, &layout).unwrap();
    assert!(diag.accepted > 900_000);

    let boot = bootstrap_sigma(&counts, 500, 3).unwrap();
    let closed_form = QUANTUM_MAX * p + 8.0 * (p - 1.0);
    assert!(
        (boot.f_value - closed_form).abs() < 3.0 * boot.sigma,
        "F = {} ± {}, closed form {closed_form}",
        boot.f_value,
        boot.sigma
    );
}

#[test]
fn counts_totals_match_accepted_draws() {
    let cfg = TrialConfig::new(100_000, 0.9, 4);
    let layout = MeasurementLayout::ghz_game(3).unwrap();
    let (counts, diag) = run_trials(&cfg, &layout).unwrap();
    let mut accepted_total = 0;
    for (setting, _) in counts.rows() {
        let label = setting_label(setting);
        assert_eq!(
            counts.row_total(*setting),
            diag.accepted_per_setting[&label],
            "setting {label}"
        );
        accepted_total += counts.row_total(*setting);
    }
    assert_eq!(accepted_total, diag.accepted);
    assert_eq!(counts.total_events(), diag.accepted);
}

#[test]
fn bootstrap_reports_excluded_resamples() {
    // A Bell row whose Charlie=+1 mass is a single count: a large share
    // of resamples lose it entirely, making F undefined on them.
    let mut counts = CountsTable::new();
    for setting in ghznet_core::counts::game_settings() {
        let row = if setting == [0, 0, 1] {
            [1u64, 500, 0, 500, 0, 500, 0, 500]
        } else {
            [500, 500, 500, 500, 500, 500, 500, 500]
        };
        counts.insert(setting, row).unwrap();
    }
    let report = bootstrap_sigma(&counts, 400, 12).unwrap();
    assert!(report.excluded_resamples > 0, "expected some exclusions");
    assert!(report.unstable, "exclusion rate should trip the warning");
    assert_eq!(
        report.excluded_resamples as f64 > 0.01 * report.resamples as f64,
        report.unstable
    );
}

#[test]
fn tomography_sigma_shrinks_with_shots() {
    let state = mix_white_noise(&ghz_state(3).unwrap(), 0.93).unwrap();
    let target = ghz_state(3).unwrap();
    let small = sample_dataset(&state, 1_000, 5).unwrap();
    let large = sample_dataset(&state, 16_000, 5).unwrap();
    let sigma_small = reconstruct(&small, &target, 80, 5).unwrap().fidelity_sigma;
    let sigma_large = reconstruct(&large, &target, 80, 5).unwrap().fidelity_sigma;
    // 16× the shots should shrink sigma by roughly 4×.
    let ratio = sigma_small / sigma_large;
    assert!((2.0..8.0).contains(&ratio), "ratio = {ratio}");
}
