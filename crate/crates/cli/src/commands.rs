use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bedkit::experiments::{
    consistency_experiment, fit_corpus, optimal_outputs, smoothness_study, ConsistencyConfig,
    SmoothnessConfig, SmoothnessError,
};
use bedkit::expr::parse_expression_lines;
use bedkit::fitting::{Dataset, FitBudget};
use bedkit::grammar::{default_grammar, generate_corpus, CorpusConfig, Grammar};
use bedkit::metrics::{distance_matrix, with_workers, BedConfig, Metric, MetricError, MetricId};
use bedkit::sampling::{derive_stream, lhs, DomainBox};
use bedkit::Expr;
use clap::Parser;
use serde_json::json;

use crate::args::*;
use crate::failure::{Failure, ResultExt, MISMATCH, SYNTHESIS, USAGE};
use crate::manifest::{manifest_path, set_flag, sha256_hex, Manifest, Recorder};

/// Parses `args` (without the program name) and runs the subcommand.
pub fn run(args: Vec<String>) -> Result<(), Failure> {
    let cli = match Cli::try_parse_from(std::iter::once("bedkit".to_string()).chain(args.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match cli.command {
        Command::Generate(a) => generate(&args, a),
        Command::SynthDataset(a) => synth_dataset(&args, a),
        Command::Distmat(a) => distmat(&args, a),
        Command::Consistency(a) => consistency(&args, a),
        Command::Smoothness(a) => smoothness(&args, a),
        Command::Rerun(a) => rerun(a),
    }
}

fn metric_failure(e: MetricError) -> Failure {
    let code = match e {
        MetricError::Dimensions { .. } | MetricError::OutputCount { .. } => MISMATCH,
        _ => USAGE,
    };
    Failure::new(code, e)
}

fn read_corpus(rec: &mut Recorder, path: &Path) -> Result<Vec<Expr>, Failure> {
    let text = rec.read_input(path)?;
    let corpus = parse_expression_lines(&text)
        .map_err(|(line, e)| Failure::new(USAGE, format!("{}:{line}: {e}", path.display())))?;
    if corpus.is_empty() {
        return Err(Failure::new(USAGE, format!("{} holds no expressions", path.display())));
    }
    Ok(corpus)
}

fn read_dataset(rec: &mut Recorder, path: &Path) -> Result<Dataset, Failure> {
    let text = rec.read_input(path)?;
    Dataset::from_csv(&text).with_code(USAGE, || format!("dataset {}", path.display()))
}

fn parse_interval(text: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::new(USAGE, format!("expected an interval lo,hi with lo < hi, got {text:?}"));
    let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Builds the sampling box from `--var-domain` entries. The dimension count
/// is `--dims` if given, else the larger of `needed` and the highest
/// overridden variable.
fn variable_box(args: &BedArgs, needed: usize) -> Result<DomainBox, Failure> {
    let mut base = (1.0, 5.0);
    let mut overrides = BTreeMap::new();
    for entry in &args.var_domain {
        match entry.split_once(':') {
            Some((name, interval)) => {
                let k = name
                    .strip_prefix('x')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| Failure::new(USAGE, format!("bad variable name {name:?} in --var-domain")))?;
                overrides.insert(k, parse_interval(interval)?);
            }
            None => base = parse_interval(entry)?,
        }
    }
    let highest = overrides.keys().next_back().copied().unwrap_or(0);
    let dims = args.dims.unwrap_or(needed.max(highest)).max(1);
    if needed > dims {
        return Err(Failure::new(
            MISMATCH,
            format!("expressions use {needed} variables but --dims is {dims}"),
        ));
    }
    if highest > dims {
        return Err(Failure::new(USAGE, format!("--var-domain names x{highest} beyond {dims} dimensions")));
    }
    let intervals = (1..=dims).map(|k| overrides.get(&k).copied().unwrap_or(base)).collect();
    DomainBox::new(intervals).code(USAGE)
}

fn bed_config(args: &BedArgs, needed: usize, seed: u64) -> Result<BedConfig, Failure> {
    let cfg = BedConfig {
        var_box: variable_box(args, needed)?,
        const_interval: parse_interval(&args.const_domain)?,
        num_var_samples: args.num_var_samples,
        num_const_samples: args.num_const_samples,
        penalty: args.penalty,
        master_seed: seed,
        ..BedConfig::with_dims(1)
    };
    cfg.validate().map_err(metric_failure)?;
    Ok(cfg)
}

fn fit_budget(args: &FitArgs, penalty: f64) -> Result<FitBudget, Failure> {
    if args.restarts == 0 || args.evals_per_start == 0 {
        return Err(Failure::new(USAGE, "--restarts and --evals-per-start must be at least 1"));
    }
    Ok(FitBudget {
        restarts: args.restarts,
        evals_per_start: args.evals_per_start,
        penalty,
        ..FitBudget::default()
    })
}

fn needed_dims(corpus: &[Expr]) -> usize {
    corpus.iter().map(Expr::required_dimensions).max().unwrap_or(1)
}

fn check_dataset_dims(corpus: &[Expr], data: &Dataset) -> Result<(), Failure> {
    for e in corpus {
        if e.required_dimensions() > data.dims() {
            return Err(Failure::new(
                MISMATCH,
                format!(
                    "expression {e} needs {} variables but the dataset has {}",
                    e.required_dimensions(),
                    data.dims()
                ),
            ));
        }
    }
    Ok(())
}

fn generate(argv: &[String], a: GenerateArgs) -> Result<(), Failure> {
    let seed = a.seed.resolve();
    let mut rec = Recorder::new(argv, seed);
    if a.count == 0 {
        return Err(Failure::new(USAGE, "--count must be at least 1"));
    }
    let grammar = match &a.grammar {
        Some(path) => {
            let text = rec.read_input(path)?;
            Grammar::parse(&text).with_code(USAGE, || format!("grammar {}", path.display()))?
        }
        None => default_grammar(),
    };
    let cfg = CorpusConfig {
        count: a.count,
        max_variables: a.max_vars,
        max_depth: a.max_depth,
        seed,
        deduplicate: a.dedup,
    };
    let corpus = generate_corpus(&grammar, &cfg).code(USAGE)?;
    let mut text = String::new();
    for e in &corpus {
        text.push_str(&e.to_canonical_string());
        text.push('\n');
    }
    let mean_nodes = corpus.iter().map(Expr::node_count).sum::<usize>() as f64 / corpus.len() as f64;
    println!("generated {} expressions, mean node count {mean_nodes:.3}", corpus.len());
    rec.metadata = json!({
        "count": a.count,
        "max_variables": a.max_vars,
        "max_depth": a.max_depth,
        "deduplicate": a.dedup,
        "grammar": a.grammar.as_ref().map_or("default".to_string(), |p| p.display().to_string()),
    });
    rec.finish(&a.output, text.as_bytes())
}

fn synth_dataset(argv: &[String], a: SynthArgs) -> Result<(), Failure> {
    let seed = a.seed.resolve();
    let rec = Recorder::new(argv, seed);
    let truth: Expr = a
        .truth
        .parse()
        .with_code(USAGE, || format!("truth expression {:?}", a.truth))?;
    if truth.constant_count() > 0 {
        return Err(Failure::new(SYNTHESIS, format!("truth expression {truth} has constant placeholders")));
    }
    if a.rows == 0 {
        return Err(Failure::new(USAGE, "--rows must be at least 1"));
    }
    let needed = truth.required_dimensions();
    let intervals: Vec<(f64, f64)> = if a.domain.is_empty() {
        vec![(1.0, 5.0); needed]
    } else {
        a.domain.chunks(2).map(|c| (c[0], c[1])).collect()
    };
    if needed > intervals.len() {
        return Err(Failure::new(
            MISMATCH,
            format!("truth uses {needed} variables but {} domains were given", intervals.len()),
        ));
    }
    let domain = DomainBox::new(intervals).code(USAGE)?;
    let design = lhs(a.rows, &domain, &mut derive_stream(seed, "dataset"));
    let rows: Vec<Vec<f64>> = design.rows().map(<[f64]>::to_vec).collect();
    let mut targets = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let y = truth
            .evaluate(row, &[])
            .map_err(|e| Failure::new(SYNTHESIS, format!("truth fails on row {} {row:?}: {e}", i + 1)))?;
        targets.push(y);
    }
    let data = Dataset::new(rows, targets).code(SYNTHESIS)?;
    println!("synthesized {} rows over {} variables", data.len(), data.dims());
    let mut rec = rec;
    rec.metadata = json!({ "truth": truth.to_canonical_string(), "domain": domain });
    rec.finish(&a.output, data.to_csv().as_bytes())
}

fn distmat(argv: &[String], a: DistmatArgs) -> Result<(), Failure> {
    let seed = a.seed.resolve();
    let mut rec = Recorder::new(argv, seed);
    let corpus = read_corpus(&mut rec, &a.exprs)?;
    let data = match (&a.dataset, a.metric) {
        (None, MetricId::Optimal) => {
            return Err(Failure::new(MISMATCH, "the optimal metric needs --dataset"));
        }
        (Some(_), m) if m != MetricId::Optimal => {
            return Err(Failure::new(MISMATCH, format!("--dataset only applies to the optimal metric, not {m}")));
        }
        (Some(path), _) => Some(read_dataset(&mut rec, path)?),
        (None, _) => None,
    };

    let (matrix, config) = match a.metric {
        MetricId::Bed => {
            let cfg = bed_config(&a.bed, needed_dims(&corpus), seed)?;
            let dm = with_workers(a.workers, || distance_matrix(&corpus, &Metric::Bed(&cfg)))
                .map_err(metric_failure)?
                .map_err(metric_failure)?;
            (dm, serde_json::to_value(&cfg).expect("config serializes"))
        }
        MetricId::Optimal => {
            let data = data.expect("checked above");
            check_dataset_dims(&corpus, &data)?;
            let budget = fit_budget(&a.fit, a.bed.penalty)?;
            let dm = with_workers(a.workers, || {
                let fits = fit_corpus(&corpus, &data, &budget, seed);
                let outputs = optimal_outputs(&corpus, &data, &fits, budget.penalty);
                distance_matrix(&corpus, &Metric::Optimal { outputs: &outputs, penalty: budget.penalty })
            })
            .map_err(metric_failure)?
            .map_err(metric_failure)?;
            (dm, serde_json::to_value(&budget).expect("budget serializes"))
        }
        MetricId::Edit | MetricId::TreeEdit => {
            let metric = if a.metric == MetricId::Edit { Metric::Edit } else { Metric::TreeEdit };
            let dm = with_workers(a.workers, || distance_matrix(&corpus, &metric))
                .map_err(metric_failure)?
                .map_err(metric_failure)?;
            (dm, serde_json::Value::Null)
        }
    };
    let mut csv = Vec::new();
    matrix.write_csv(&corpus, &mut csv).expect("writing to memory");
    println!("{} matrix of {} expressions", a.metric, corpus.len());
    rec.metadata = json!({
        "metric-id": a.metric,
        "fingerprint": matrix.fingerprint,
        "config": config,
    });
    rec.finish(&a.output, &csv)
}

fn parse_grid(text: &str) -> Result<Vec<(usize, usize)>, Failure> {
    let bad = || Failure::new(USAGE, format!("grid must look like 4,8,16x2,4, got {text:?}"));
    let (vs, cs) = text.split_once('x').ok_or_else(bad)?;
    let list = |s: &str| -> Result<Vec<usize>, Failure> {
        s.split(',')
            .map(|v| v.trim().parse::<usize>().ok().filter(|n| *n >= 1).ok_or_else(bad))
            .collect()
    };
    let (vs, cs) = (list(vs)?, list(cs)?);
    Ok(vs.iter().flat_map(|&v| cs.iter().map(move |&c| (v, c))).collect())
}

fn consistency(argv: &[String], a: ConsistencyArgs) -> Result<(), Failure> {
    let seed = a.seed.resolve();
    let mut rec = Recorder::new(argv, seed);
    let corpus = read_corpus(&mut rec, &a.exprs)?;
    let grid = parse_grid(&a.grid)?;
    let cfg = ConsistencyConfig {
        grid,
        repeats: a.repeats,
        master_seed: seed,
        bed: bed_config(&a.bed, needed_dims(&corpus), seed)?,
        shuffles: a.shuffles,
    };
    let report = with_workers(a.workers, || consistency_experiment(&corpus, &cfg))
        .map_err(metric_failure)?
        .map_err(metric_failure)?;
    let mut cells = serde_json::Map::new();
    for c in &report.cells {
        println!(
            "vs={} cs={}: mean rho {:.4}, shuffled {:.4}",
            c.num_var_samples, c.num_const_samples, c.mean_rho, c.baseline_rho
        );
        cells.insert(
            format!("{},{}", c.num_var_samples, c.num_const_samples),
            serde_json::to_value(c).expect("cell serializes"),
        );
    }
    let out = json!({
        "corpus_fingerprint": report.corpus_fingerprint,
        "corpus_size": report.corpus_size,
        "repeats": report.repeats,
        "shuffles": cfg.shuffles,
        "cells": cells,
    });
    let mut text = serde_json::to_string_pretty(&out).expect("report serializes");
    text.push('\n');
    rec.metadata = json!({ "metric-id": MetricId::Bed, "config": cfg });
    rec.finish(&a.output, text.as_bytes())
}

fn smoothness(argv: &[String], a: SmoothnessArgs) -> Result<(), Failure> {
    let seed = a.seed.resolve();
    let mut rec = Recorder::new(argv, seed);
    let corpus = read_corpus(&mut rec, &a.exprs)?;
    let data = read_dataset(&mut rec, &a.dataset)?;
    check_dataset_dims(&corpus, &data)?;
    let bed = bed_config(&a.bed, data.dims(), seed)?;
    let aggregations = a
        .aggr1
        .iter()
        .flat_map(|&x| a.aggr2.iter().map(move |&y| (x, y)))
        .collect();
    let mut metrics = a.metrics.clone();
    let mut seen = Vec::new();
    metrics.retain(|m| if seen.contains(m) { false } else { seen.push(*m); true });
    let cfg = SmoothnessConfig {
        metrics,
        neighbors: a.neighbors,
        repeats: a.repeats,
        aggregations,
        fit: fit_budget(&a.fit, a.bed.penalty)?,
        bed,
        master_seed: seed,
    };
    let report = with_workers(a.workers, || smoothness_study(&corpus, &data, &cfg))
        .map_err(metric_failure)?
        .map_err(|e| match e {
            SmoothnessError::Metric(m) => metric_failure(m),
            SmoothnessError::Dimensions { .. } => Failure::new(MISMATCH, e),
            SmoothnessError::Config(_) => Failure::new(USAGE, e),
        })?;
    println!("{} of {} expressions have failed fits and are not focal", report.excluded, corpus.len());
    for c in &report.curves {
        println!(
            "{} {}/{}: c[{}] = {}",
            c.metric,
            c.aggr1,
            c.aggr2,
            cfg.neighbors,
            c.mean.last().copied().unwrap_or(f64::NAN)
        );
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv).expect("writing to memory");
    rec.metadata = json!({
        "metric-id": cfg.metrics,
        "excluded": report.excluded,
        "config": cfg,
    });
    rec.finish(&a.output, &csv)
}

fn rerun(a: RerunArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.manifest)
        .with_code(USAGE, || format!("cannot read manifest {}", a.manifest.display()))?;
    let manifest: Manifest =
        serde_json::from_str(&text).with_code(USAGE, || format!("manifest {}", a.manifest.display()))?;
    if manifest.subcommand == "rerun" || manifest.args.first() != Some(&manifest.subcommand) {
        return Err(Failure::new(USAGE, "manifest does not record a replayable subcommand"));
    }
    // resolve the override before moving to the recorded directory
    let output = match &a.output {
        Some(p) => Some(std::path::absolute(p).with_code(USAGE, || format!("bad output path {}", p.display()))?),
        None => None,
    };
    for (path, digest) in &manifest.inputs {
        let full = manifest.working_directory.join(path);
        let bytes = fs::read(&full).with_code(MISMATCH, || format!("input {} is missing", full.display()))?;
        if sha256_hex(&bytes) != *digest {
            return Err(Failure::new(MISMATCH, format!("input {} changed since the recorded run", full.display())));
        }
    }
    let mut args = set_flag(&manifest.args, &["--seed"], &manifest.seed.to_string());
    if let Some(out) = &output {
        args = set_flag(&args, &["--output", "-o"], &out.display().to_string());
    }
    if let Some(w) = a.workers {
        // generate and synth-dataset run single-threaded and take no worker flag
        if matches!(manifest.subcommand.as_str(), "distmat" | "consistency" | "smoothness") {
            args = set_flag(&args, &["--workers"], &w.to_string());
        }
    }
    std::env::set_current_dir(&manifest.working_directory).with_code(USAGE, || {
        format!("cannot enter {}", manifest.working_directory.display())
    })?;
    run(args)?;
    if let Some(out) = output {
        println!("manifest: {}", manifest_path(&out).display());
    }
    Ok(())
}
