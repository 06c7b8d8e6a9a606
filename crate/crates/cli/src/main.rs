use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use regrate_core::harness::distance::{approx_pipeline, distance_tables, level_set_sample};
use regrate_core::harness::export::{
    export_fits, export_table, write_json, Format, NamedFit, RunManifest,
};
use regrate_core::harness::{
    fit_rate, run_sweep, Experiment, ExperimentConfig, MetricName, PenaltyConfig, RuleConfig,
    SweepOutcome,
};
use serde_json::json;

/// Tikhonov regularization rate experiments.
#[derive(Parser, Debug)]
#[command(name = "regrate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// δ-sweep with the configured metric and rate fits.
    Rates(RunArgs),
    /// δ-sweep for a sparsity penalty, with support recovery per cell.
    Sparsity(RunArgs),
    /// Distance-function tables on a level-set sample.
    DistanceFn(RunArgs),
    /// Runs the oracle and acceptance checks; exit code 1 on any failure.
    Validate {
        /// Only run these criteria (by number).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rates(args) => run(&args, "rates", rates),
        Command::Sparsity(args) => run(&args, "sparsity", sparsity),
        Command::DistanceFn(args) => run(&args, "distance-fn", distance_fn),
        Command::Validate { only } => return validate(&only),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

type Pipeline = fn(&Experiment, &Path, &mut RunManifest) -> Result<()>;

fn run(args: &RunArgs, command: &str, pipeline: Pipeline) -> Result<()> {
    let start = Instant::now();
    let config = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let exp = Experiment::build(&config)?;
    let mut manifest = RunManifest::new(command, &config, exp.truth.as_slice().to_vec());
    pipeline(&exp, &args.out, &mut manifest)?;
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let path = args.out.join("manifest.json");
    manifest.files.push("manifest.json".into());
    manifest.write(&path)?;
    for f in &manifest.files {
        println!("{}", args.out.join(f).display());
    }
    Ok(())
}

fn write_sweep(out: &SweepOutcome, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    for format in [Format::Csv, Format::Json] {
        let name = format!("sweep.{}", format.extension());
        export_table(&out.table, &dir.join(&name), format)?;
        manifest.files.push(name);
    }
    Ok(())
}

/// Exponents the fitted slopes are compared against, where the theory gives one.
fn theory(config: &ExperimentConfig, metric: MetricName) -> Option<f64> {
    let RuleConfig::Holder { epsilon, .. } = config.alpha_rule else {
        return None;
    };
    let rate = (config.p - epsilon) / config.p;
    match metric {
        MetricName::Residual => Some(rate),
        MetricName::Bregman => config.example_exponent().map(|k| k * rate),
        _ => None,
    }
}

fn fits(
    exp: &Experiment,
    out: &SweepOutcome,
    dir: &Path,
    manifest: &mut RunManifest,
) -> Result<Vec<NamedFit>> {
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for metric in [
        MetricName::Bregman,
        MetricName::WeakNorm,
        MetricName::StrongNorm,
        MetricName::Residual,
    ] {
        match fit_rate(&out.table, metric) {
            Ok(fit) => fits.push(NamedFit {
                metric,
                fit,
                theory: theory(&exp.config, metric),
            }),
            Err(e) => skipped.push(json!({"metric": metric, "reason": e.to_string()})),
        }
    }
    for format in [Format::Csv, Format::Json] {
        let name = format!("fits.{}", format.extension());
        export_fits(&fits, &dir.join(&name), format)?;
        manifest.files.push(name);
    }
    manifest.summary["unfitted"] = json!(skipped);
    Ok(fits)
}

fn sweep_summary(out: &SweepOutcome) -> serde_json::Value {
    let n = out.diagnostics.len().max(1) as f64;
    let share = |f: &dyn Fn(&regrate_core::harness::CellDiagnostics) -> bool| {
        out.diagnostics.iter().filter(|d| f(d)).count() as f64 / n
    };
    json!({
        "cells": out.table.rows.len(),
        "flagged": out.table.flagged_count(),
        "residual_at_least_delta_share": share(&|d| d.residual_at_least_delta),
        "alpha_condition_share": share(&|d| d.alpha_condition_holds),
        "monotone_share": share(&|d| d.monotone),
    })
}

fn rates(exp: &Experiment, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let out = run_sweep(exp)?;
    write_sweep(&out, dir, manifest)?;
    manifest.summary = sweep_summary(&out);
    let fits = fits(exp, &out, dir, manifest)?;
    manifest.summary["fits"] = json!(fits);
    Ok(())
}

fn sparsity(exp: &Experiment, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    if !matches!(exp.config.penalty, PenaltyConfig::Sparsity { .. }) {
        bail!("the sparsity command needs a \"sparsity\" penalty");
    }
    let out = run_sweep(exp)?;
    write_sweep(&out, dir, manifest)?;
    manifest.summary = sweep_summary(&out);
    let support = |u: &[f64]| -> Vec<usize> {
        u.iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(j, _)| j)
            .collect()
    };
    let truth = support(exp.truth.as_slice());
    let cells: Vec<_> = out
        .table
        .rows
        .iter()
        .zip(&out.solutions)
        .map(|(r, u)| {
            let s = support(u.as_slice());
            json!({
                "delta": r.delta,
                "replication": r.replication,
                "support": s,
                "exact": s == truth,
            })
        })
        .collect();
    manifest.summary["truth_support"] = json!(truth);
    manifest.summary["supports"] = json!(cells);
    let fits = fits(exp, &out, dir, manifest)?;
    manifest.summary["fits"] = json!(fits);
    Ok(())
}

fn distance_fn(exp: &Experiment, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let run = distance_tables(exp)?;
    let path = dir.join("distance.csv");
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    run.holder.write_csv(&mut w)?;
    // Second table without its header row.
    let mut rest = Vec::new();
    run.vi.write_csv(&mut rest)?;
    let body = rest.splitn(2, |b| *b == b'\n').nth(1).unwrap_or_default();
    std::io::Write::write_all(&mut w, body)?;
    std::io::Write::flush(&mut w)?;
    manifest.files.push("distance.csv".into());
    manifest.summary = json!({
        "sample_len": run.sample_len,
        "attempts": run.attempts,
        "holder_constant": run.scan.c_est,
        "holder_properties": run.holder_properties,
        "vi_properties": run.vi_properties,
    });
    if matches!(exp.config.alpha_rule, RuleConfig::Approx { .. }) {
        let sample = level_set_sample(exp)?;
        let cells = approx_pipeline(exp, &sample)?;
        write_json(&cells, &dir.join("approx.json"))?;
        manifest.files.push("approx.json".into());
        manifest.summary["approx_bound_holds"] = json!(cells.iter().all(|c| c.lemma.holds));
    }
    Ok(())
}

fn validate(only: &[u8]) -> ExitCode {
    let outcomes = regrate_verify::run_selected(only);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
