//! Command-line entry point: reproducible, manifest-driven runs.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};

use commands::IngestArgs;
use config::RunConfig;

const USAGE: &str = "\
augcast — probabilistic time-series forecasting with randomly sampled training windows

USAGE:
    augcast <COMMAND> [OPTIONS]

COMMANDS:
    ingest             normalize a raw dataset (electricity | traffic | generic_csv)
    train              train a model from a config file
    evaluate           score an existing checkpoint
    compare-samplers   vanilla / fixed / augmented ablation
    grid-search        hyperparameter search with a persisted leaderboard

COMMON OPTIONS:
    --config PATH        run configuration (TOML)
    --out DIR            output directory (default runs/<command>)
    --<section>.<key> V  override any config key, e.g. --train.seed 7
    --seed N             shorthand for --train.seed
    --sampler MODE       shorthand for --train.sampler
    --weeks N            shorthand for --eval.train_weeks
    --rho LIST           shorthand for --eval.quantiles, e.g. 0.5,0.9
    --trials N           shorthand for --eval.trials

INGEST OPTIONS:
    --source PATH        raw input file
    --format NAME        electricity | traffic | generic_csv
    --traffic-start TS   first traffic timestamp (default 2008-01-01T00:00:00)

EVALUATE OPTIONS:
    --checkpoint PATH    checkpoint to score

COMPARE-SAMPLERS OPTIONS:
    --synthetic SPEC     run the seasonality benchmark instead of a dataset,
                         e.g. --synthetic period=336
";

struct Cli {
    command: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    source: Option<PathBuf>,
    format: Option<String>,
    traffic_start: Option<String>,
    synthetic: Option<String>,
    overrides: Vec<(String, String)>,
}

fn parse_args(mut args: std::env::Args) -> Result<Cli> {
    let _bin = args.next();
    let command = args.next().ok_or_else(|| anyhow!("missing command\n\n{USAGE}"))?;
    if command == "--help" || command == "-h" || command == "help" {
        println!("{USAGE}");
        std::process::exit(0);
    }
    let mut cli = Cli {
        command,
        config: None,
        out: None,
        checkpoint: None,
        source: None,
        format: None,
        traffic_start: None,
        synthetic: None,
        overrides: Vec::new(),
    };
    let mut args = args.peekable();
    while let Some(arg) = args.next() {
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| anyhow!("unexpected argument '{arg}'\n\n{USAGE}"))?
            .to_string();
        let mut value = || {
            args.next()
                .ok_or_else(|| anyhow!("flag --{key} needs a value"))
        };
        match key.as_str() {
            "config" => cli.config = Some(PathBuf::from(value()?)),
            "out" => cli.out = Some(PathBuf::from(value()?)),
            "checkpoint" => cli.checkpoint = Some(PathBuf::from(value()?)),
            "source" => cli.source = Some(PathBuf::from(value()?)),
            "format" => cli.format = Some(value()?),
            "traffic-start" => cli.traffic_start = Some(value()?),
            "synthetic" => cli.synthetic = Some(value()?),
            "help" => {
                println!("{USAGE}");
                std::process::exit(0);
            }
            _ => {
                let v = value()?;
                cli.overrides.push((key, v));
            }
        }
    }
    Ok(cli)
}

fn run(cli: &Cli, out: &std::path::Path) -> Result<()> {
    match cli.command.as_str() {
        "ingest" => {
            let args = IngestArgs {
                source: cli
                    .source
                    .clone()
                    .ok_or_else(|| anyhow!("ingest needs --source"))?,
                format: cli
                    .format
                    .clone()
                    .ok_or_else(|| anyhow!("ingest needs --format"))?,
                out: out.to_path_buf(),
                traffic_start: cli.traffic_start.clone(),
            };
            commands::cmd_ingest(&args)
        }
        "train" | "evaluate" | "compare-samplers" | "grid-search" => {
            let config_path = cli
                .config
                .clone()
                .ok_or_else(|| anyhow!("{} needs --config", cli.command))?;
            let cfg = RunConfig::load(&config_path, &cli.overrides)?;
            match cli.command.as_str() {
                "train" => commands::cmd_train(&cfg, out),
                "evaluate" => {
                    let ck = cli
                        .checkpoint
                        .clone()
                        .ok_or_else(|| anyhow!("evaluate needs --checkpoint"))?;
                    commands::cmd_evaluate(&ck, &cfg, out)
                }
                "compare-samplers" => {
                    commands::cmd_compare_samplers(&cfg, out, cli.synthetic.as_deref())
                }
                "grid-search" => commands::cmd_grid_search(&cfg, out),
                _ => unreachable!(),
            }
        }
        other => bail!("unknown command '{other}'\n\n{USAGE}"),
    }
}

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args()) {
        Ok(cli) => cli,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(&cli.command));
    match run(&cli, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            manifest::write_error_record(&out, &cli.command, &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
