//! End-to-end runs through the public API on the shipped configurations.

use std::path::{Path, PathBuf};

use regrate_core::harness::export::{export_table, import_table, Format};
use regrate_core::{
    fit_rate, make_noisy, run_sweep, solve, Experiment, ExperimentConfig, MetricName, NormKind,
    TikhonovProblem,
};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn experiment(name: &str) -> Experiment {
    let text = std::fs::read_to_string(config_path(name)).unwrap();
    Experiment::build(&ExperimentConfig::from_json(&text).unwrap()).unwrap()
}

#[test]
fn shipped_configs_build() {
    for name in [
        "rates_bregman.json",
        "rates_weak_norm.json",
        "sparsity.json",
        "distance_2d.json",
        "approx_2d.json",
    ] {
        let exp = experiment(name);
        let v = exp.forward.apply(&exp.truth).unwrap();
        let gap = (&v - &exp.exact_data).norm(NormKind::Data);
        assert!(gap < 1e-14, "{name}: exact data off by {gap}");
    }
}

#[test]
fn noisy_data_sits_at_distance_delta() {
    let exp = experiment("rates_bregman.json");
    // Forming v^δ − v cancels digits of v, hence the absolute floor.
    let scale = exp.exact_data.norm(NormKind::Data);
    for delta in [0.3, 1e-3, 1e-7] {
        let v = make_noisy(&exp.exact_data, delta, 11).unwrap();
        let d = (&v - &exp.exact_data).norm(NormKind::Data);
        assert!((d - delta).abs() <= 1e-12 * delta + 1e-14 * scale, "{d} vs {delta}");
    }
}

#[test]
fn sweep_is_reproducible_and_survives_export() {
    let exp = experiment("sparsity.json");
    let a = run_sweep(&exp).unwrap();
    let b = run_sweep(&exp).unwrap();
    assert_eq!(a.table, b.table);

    let dir = tempfile::tempdir().unwrap();
    for format in [Format::Csv, Format::Json] {
        let path = dir.path().join(format!("t.{}", format.extension()));
        export_table(&a.table, &path, format).unwrap();
        assert_eq!(import_table(&path, format).unwrap(), a.table);
    }
}

#[test]
fn residual_tracks_delta_on_the_reaction_diffusion_sweep() {
    let exp = experiment("rates_bregman.json");
    let out = run_sweep(&exp).unwrap();
    let fit = fit_rate(&out.table, MetricName::Residual).unwrap();
    assert!((fit.slope - 1.0).abs() < 0.05, "{fit:?}");
    let bregman = fit_rate(&out.table, MetricName::Bregman).unwrap();
    assert!(bregman.slope > 0.9, "{bregman:?}");
}

#[test]
fn solver_decreases_the_objective_from_the_initial_guess() {
    let exp = experiment("rates_bregman.json");
    let data = make_noisy(&exp.exact_data, 1e-2, 5).unwrap();
    let prob = TikhonovProblem::new(
        exp.forward.clone(),
        exp.penalty.clone(),
        data,
        1e-4,
        exp.config.p,
    )
    .unwrap();
    let rep = solve(&prob, &exp.init, &exp.config.solver).unwrap();
    assert!(rep.monotone);
    assert!(rep.objective <= rep.initial_objective);
    assert!(rep.objective <= prob.objective(&exp.truth).unwrap() + 1e-12);
}
