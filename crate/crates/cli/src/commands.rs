//! The five subcommands: ingest, train, evaluate, compare-samplers,
//! grid-search.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};

use augcast::data::{load_series_with, write_generic_csv, IngestOptions, SeriesFormat};
use augcast::forecast::{
    compare_samplers, evaluate_forecast, human_table, plot_csv, reference, seasonality_benchmark,
    to_records, EvalProtocol, ForecastReport, SeasonalityConfig, TrialQl,
};
use augcast::model::PreprocessManifest;
use augcast::rng::child_seed;
use augcast::train::{fit, grid_search, GridRow};
use augcast::{Checkpoint, Real, SeriesSet};

use crate::config::{parse_timestamp, EvalSection, RunConfig};
use crate::manifest::{file_checksum, RunManifest};

pub struct IngestArgs {
    pub source: PathBuf,
    pub format: String,
    pub out: PathBuf,
    pub traffic_start: Option<String>,
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<()> {
    let t0 = Instant::now();
    let format: SeriesFormat = args
        .format
        .parse()
        .map_err(|e| anyhow!("{e}"))?;
    let mut opts = IngestOptions::default();
    if let Some(ts) = &args.traffic_start {
        opts.traffic_start =
            parse_timestamp(ts).ok_or_else(|| anyhow!("bad --traffic-start '{ts}'"))?;
    }
    let series: SeriesSet = load_series_with(&args.source, format, opts)?;
    std::fs::create_dir_all(&args.out)?;
    let dataset_path = args.out.join("dataset.csv");
    write_generic_csv(&series, &dataset_path)?;
    let checksum = file_checksum(&dataset_path)?;

    let mut manifest = RunManifest::new(
        "ingest",
        format!(
            "source = \"{}\"\nformat = \"{}\"\n",
            args.source.display(),
            args.format
        ),
    );
    manifest.dataset_checksum = Some(checksum.clone());
    manifest.timings_ms.insert("ingest".into(), t0.elapsed().as_millis() as u64);
    manifest.outputs = vec!["dataset.csv".into()];
    manifest.save(&args.out)?;
    println!(
        "ingested {} instances x {} steps -> {} ({checksum})",
        series.k(),
        series.min_len(),
        dataset_path.display()
    );
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> Result<(SeriesSet, String)> {
    if cfg.data.dataset.as_os_str().is_empty() {
        bail!("missing required key data.dataset");
    }
    let mut series: SeriesSet = augcast::data::load_series(&cfg.data.dataset, SeriesFormat::GenericCsv)?;
    let checksum = file_checksum(&cfg.data.dataset)?;
    if cfg.data.limit_instances > 0 && cfg.data.limit_instances < series.k() {
        series.instances.truncate(cfg.data.limit_instances);
    }
    Ok((series, checksum))
}

fn protocol_from(cfg: &RunConfig, eval: &EvalSection, label: &str) -> Result<EvalProtocol> {
    Ok(EvalProtocol {
        dataset: label.to_string(),
        train_weeks: eval.train_weeks,
        forecast_start: parse_timestamp(&eval.forecast_start)
            .ok_or_else(|| anyhow!("bad eval.forecast_start '{}'", eval.forecast_start))?,
        eval_horizon: eval.horizon,
        samples: eval.samples,
        quantiles: eval.quantiles.clone(),
        trials: eval.trials,
        rolling_day: eval.rolling_day,
        history_cap: eval.history_cap,
        seed: cfg.train.seed,
    })
}

fn dataset_label(cfg: &RunConfig) -> String {
    cfg.data
        .dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn slice_for_protocol(
    series: &SeriesSet,
    proto: &EvalProtocol,
) -> Result<(SeriesSet, SeriesSet)> {
    let step = series.instances[0].step_seconds as i64;
    let train_start =
        proto.forecast_start - chrono::Duration::seconds(step * 168 * proto.train_weeks as i64);
    let test_end =
        proto.forecast_start + chrono::Duration::seconds(step * proto.eval_horizon as i64);
    let history = series.slice_time(train_start, proto.forecast_start)?;
    let test = series.slice_time(proto.forecast_start, test_end)?;
    Ok((history, test))
}

fn write_report_files(dir: &Path, reports: &[ForecastReport]) -> Result<Vec<String>> {
    let mut outputs = Vec::new();
    let records = to_records(reports);
    let mut jsonl = BufWriter::new(File::create(dir.join("records.jsonl"))?);
    for r in &records {
        writeln!(jsonl, "{}", serde_json::to_string(r)?)?;
    }
    jsonl.flush()?;
    outputs.push("records.jsonl".into());
    std::fs::write(dir.join("plot.csv"), plot_csv(reports))?;
    outputs.push("plot.csv".into());
    let table = human_table(reports);
    std::fs::write(dir.join("table.txt"), &table)?;
    outputs.push("table.txt".into());
    print!("{table}");
    Ok(outputs)
}

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("train", cfg.to_toml()?);
    let t0 = Instant::now();
    let (series, checksum) = load_dataset(cfg)?;
    manifest.dataset_checksum = Some(checksum.clone());
    manifest.seed = Some(cfg.train.seed);
    manifest
        .timings_ms
        .insert("load".into(), t0.elapsed().as_millis() as u64);

    let label = dataset_label(cfg);
    let train_cfg = cfg.train_config()?;
    let model_cfg = cfg.model_config(series.k());

    // With an eval protocol configured, train on exactly the weeks before
    // the forecast start; otherwise use the full series.
    let (history, test) = match &cfg.eval {
        Some(eval) => {
            let proto = protocol_from(cfg, eval, &label)?;
            let (h, t) = slice_for_protocol(&series, &proto)?;
            (h, Some((t, proto)))
        }
        None => (series.clone(), None),
    };

    let t1 = Instant::now();
    let result = fit(&model_cfg, &train_cfg, &history)?;
    manifest
        .timings_ms
        .insert("train".into(), t1.elapsed().as_millis() as u64);
    for e in &result.log.epochs {
        println!(
            "epoch {:>3}  train nll {:>9.4}  val nll {:>9.4}  windows {:>5}  distinct {:>7}  {} ms",
            e.epoch, e.train_nll, e.val_nll, e.windows, e.distinct_windows, e.wall_ms
        );
    }
    println!(
        "best epoch {} (val nll {:.4})",
        result.best_epoch, result.best_val
    );

    let mut log_file = BufWriter::new(File::create(out.join("trainlog.jsonl"))?);
    for e in &result.log.epochs {
        writeln!(log_file, "{}", serde_json::to_string(e)?)?;
    }
    log_file.flush()?;

    let preprocess = PreprocessManifest {
        scaler: cfg.data.scaler,
        scale_width: cfg.data.scale_width,
        resample: "mean".into(),
        dataset_checksum: Some(checksum),
    };
    let checkpoint = Checkpoint::from_params(&result.params, &model_cfg, cfg.train.seed, preprocess);
    checkpoint.save(&out.join("checkpoint.json"))?;
    std::fs::write(out.join("resolved_config.toml"), cfg.to_toml()?)?;
    manifest.outputs = vec![
        "checkpoint.json".into(),
        "trainlog.jsonl".into(),
        "resolved_config.toml".into(),
    ];

    if let Some((test, proto)) = test {
        let t2 = Instant::now();
        let ql = evaluate_forecast(
            &result.params,
            &model_cfg,
            &history,
            &test,
            &proto,
            train_cfg.scaler,
            train_cfg.scale_width,
            child_seed(cfg.train.seed, "final-eval", 0),
        )?;
        manifest
            .timings_ms
            .insert("evaluate".into(), t2.elapsed().as_millis() as u64);
        let report = ForecastReport {
            dataset: label,
            range_label: format!("{}w", proto.train_weeks),
            mode: train_cfg.sampler,
            quantiles: proto.quantiles.clone(),
            trials: vec![TrialQl {
                trial: 0,
                seed: cfg.train.seed,
                ql,
            }],
        };
        manifest.outputs.extend(write_report_files(out, &[report])?);
    }
    manifest.save(out)?;
    Ok(())
}

pub fn cmd_evaluate(checkpoint_path: &Path, cfg: &RunConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("evaluate", cfg.to_toml()?);
    let checkpoint: Checkpoint = Checkpoint::load(checkpoint_path)?;
    let (series, checksum) = load_dataset(cfg)?;

    // Refuse on preprocessing mismatches, listing every differing field.
    let mut diffs = Vec::new();
    if checkpoint.preprocess.scaler != cfg.data.scaler {
        diffs.push(format!(
            "scaler: checkpoint {:?}, config {:?}",
            checkpoint.preprocess.scaler, cfg.data.scaler
        ));
    }
    if checkpoint.preprocess.scale_width != cfg.data.scale_width {
        diffs.push(format!(
            "scale_width: checkpoint {}, config {}",
            checkpoint.preprocess.scale_width, cfg.data.scale_width
        ));
    }
    if let Some(ck_sum) = &checkpoint.preprocess.dataset_checksum {
        if *ck_sum != checksum {
            diffs.push(format!(
                "dataset_checksum: checkpoint {ck_sum}, config dataset {checksum}"
            ));
        }
    }
    if checkpoint.config.num_instances != series.k() {
        diffs.push(format!(
            "instances: checkpoint {}, dataset {}",
            checkpoint.config.num_instances,
            series.k()
        ));
    }
    if !diffs.is_empty() {
        bail!(
            "checkpoint/manifest mismatch, refusing to evaluate:\n  {}",
            diffs.join("\n  ")
        );
    }

    let eval = cfg
        .eval
        .as_ref()
        .ok_or_else(|| anyhow!("missing required key eval.forecast_start"))?;
    let label = dataset_label(cfg);
    let proto = protocol_from(cfg, eval, &label)?;
    let (history, test) = slice_for_protocol(&series, &proto)?;
    let params = checkpoint.to_params()?;
    let t0 = Instant::now();
    let ql = evaluate_forecast(
        &params,
        &checkpoint.config,
        &history,
        &test,
        &proto,
        cfg.data.scaler,
        cfg.data.scale_width,
        child_seed(checkpoint.seed, "final-eval", 0),
    )?;
    manifest
        .timings_ms
        .insert("evaluate".into(), t0.elapsed().as_millis() as u64);
    let report = ForecastReport {
        dataset: label,
        range_label: format!("{}w", proto.train_weeks),
        mode: cfg.train_config()?.sampler,
        quantiles: proto.quantiles.clone(),
        trials: vec![TrialQl {
            trial: 0,
            seed: checkpoint.seed,
            ql,
        }],
    };
    manifest.outputs = write_report_files(out, &[report])?;
    manifest.dataset_checksum = Some(checksum);
    manifest.seed = Some(checkpoint.seed);
    manifest.save(out)?;
    Ok(())
}

pub fn cmd_compare_samplers(cfg: &RunConfig, out: &Path, synthetic: Option<&str>) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("compare-samplers", cfg.to_toml()?);
    manifest.seed = Some(cfg.train.seed);
    let t0 = Instant::now();

    if let Some(spec) = synthetic {
        // e.g. --synthetic period=336
        let mut season = SeasonalityConfig {
            window_len: cfg.data.context_length + cfg.data.horizon,
            seed: cfg.train.seed,
            ..SeasonalityConfig::default()
        };
        if let Some(eval) = &cfg.eval {
            season.trials = eval.trials;
            season.samples = eval.samples;
        }
        for part in spec.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| anyhow!("bad --synthetic item '{part}' (expected key=value)"))?;
            match key {
                "period" => season.period = value.parse()?,
                "trials" => season.trials = value.parse()?,
                "instances" => season.instances = value.parse()?,
                "noise" => season.noise_sd = value.parse()?,
                "epochs" => season.max_epochs = value.parse()?,
                other => bail!("unknown --synthetic key '{other}'"),
            }
        }
        let outcomes = seasonality_benchmark::<Real>(&season)?;
        let mut all_reports = Vec::new();
        for outcome in &outcomes {
            println!("condition {} (period {})", outcome.label, outcome.period);
            all_reports.extend(outcome.reports.iter().cloned());
        }
        manifest.outputs = write_report_files(out, &all_reports)?;
        manifest
            .timings_ms
            .insert("benchmark".into(), t0.elapsed().as_millis() as u64);
        manifest.save(out)?;
        return Ok(());
    }

    let (series, checksum) = load_dataset(cfg)?;
    manifest.dataset_checksum = Some(checksum);
    let eval = cfg
        .eval
        .as_ref()
        .ok_or_else(|| anyhow!("missing required key eval.forecast_start"))?;
    let label = dataset_label(cfg);
    let proto = protocol_from(cfg, eval, &label)?;
    let model_cfg = cfg.model_config(series.k());
    let train_cfg = cfg.train_config()?;
    let reports = compare_samplers(&series, &model_cfg, &train_cfg, &proto)?;
    manifest.outputs = write_report_files(out, &reports)?;
    // indicative published numbers, when this dataset/range is covered
    for r in &reports {
        if let Some(entry) =
            reference::ablation_reference(&r.dataset, proto.train_weeks, &r.mode.to_string())
        {
            println!(
                "reference ({} {}w {}): QL_0.5 {:.4}, QL_0.9 {:.4} [indicative]",
                entry.dataset, entry.weeks, entry.mode, entry.rho50, entry.rho90
            );
        }
    }
    manifest
        .timings_ms
        .insert("benchmark".into(), t0.elapsed().as_millis() as u64);
    manifest.save(out)?;
    Ok(())
}

pub fn cmd_grid_search(cfg: &RunConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("grid-search", cfg.to_toml()?);
    manifest.seed = Some(cfg.train.seed);
    let (series, checksum) = load_dataset(cfg)?;
    manifest.dataset_checksum = Some(checksum.clone());

    let eval = cfg.eval.as_ref();
    let label = dataset_label(cfg);
    // Grid candidates train on the protocol slice when one is configured.
    let history = match eval {
        Some(e) => {
            let proto = protocol_from(cfg, e, &label)?;
            slice_for_protocol(&series, &proto)?.0
        }
        None => series.clone(),
    };

    let leaderboard_path = out.join("leaderboard.jsonl");
    let mut completed: Vec<GridRow> = Vec::new();
    if leaderboard_path.exists() {
        for line in std::fs::read_to_string(&leaderboard_path)?.lines() {
            if line.trim().is_empty() {
                continue;
            }
            completed.push(serde_json::from_str(line).context("parsing existing leaderboard")?);
        }
        if !completed.is_empty() {
            println!("resuming: {} candidates already done", completed.len());
        }
    }
    let done: std::collections::HashSet<usize> = completed.iter().map(|r| r.index).collect();

    let model_cfg = cfg.model_config(history.k());
    let train_cfg = cfg.train_config()?;
    let grid = cfg.grid_spec();
    let mut append = BufWriter::new(
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&leaderboard_path)?,
    );
    let t0 = Instant::now();
    let outcome = grid_search(
        &model_cfg,
        &grid,
        &train_cfg,
        &history,
        &|i| done.contains(&i),
        &mut |row| {
            println!(
                "candidate {:>3}: d_k={} ff={} E={} -> val nll {:.4}",
                row.index, row.d_k, row.ff_dim, row.embed_dim, row.val_nll
            );
            if let Ok(text) = serde_json::to_string(row) {
                let _ = writeln!(append, "{text}");
                let _ = append.flush();
            }
        },
    )?;
    manifest
        .timings_ms
        .insert("grid".into(), t0.elapsed().as_millis() as u64);

    let mut merged = completed;
    merged.extend(outcome.leaderboard.iter().cloned());
    merged.sort_by(|a, b| a.val_nll.total_cmp(&b.val_nll));
    std::fs::write(
        out.join("leaderboard.json"),
        serde_json::to_string_pretty(&merged)?,
    )?;
    println!("leaderboard ({} rows):", merged.len());
    for row in merged.iter().take(5) {
        println!(
            "  #{:<3} d_k={} ff={} E={} val nll {:.4}",
            row.index, row.d_k, row.ff_dim, row.embed_dim, row.val_nll
        );
    }

    // Persist the best checkpoint when this run produced the global best.
    if let Some((best_cfg, best_fit)) = outcome.best {
        let global_best = merged.first().map(|r| r.val_nll).unwrap_or(f64::INFINITY);
        if best_fit.best_val <= global_best {
            let preprocess = PreprocessManifest {
                scaler: cfg.data.scaler,
                scale_width: cfg.data.scale_width,
                resample: "mean".into(),
                dataset_checksum: Some(checksum),
            };
            let ck =
                Checkpoint::from_params(&best_fit.params, &best_cfg, train_cfg.seed, preprocess);
            ck.save(&out.join("best_checkpoint.json"))?;
        }
    }
    manifest.outputs = vec!["leaderboard.jsonl".into(), "leaderboard.json".into()];
    manifest.save(out)?;
    Ok(())
}
