use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clarify_rank::experiment::{
    evaluate_predictor_file, prepare_click_data, run_predict_experiment, run_rank_experiment_from_config, sweep,
    ExperimentConfig, Grid, RunReport,
};
use clarify_rank::ingest::{compute_stats, parse_click, write_tsv_file, ClickSchema, GroupedDataset};
use clarify_rank::model_file::ModelFile;
use clarify_rank::{Error, Result};

#[derive(Parser)]
#[command(
    name = "clarify-rank",
    version,
    about = "Engagement prediction and ranking for search clarification panes"
)]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set predictor.optim.lr=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        Ok(base.with_overrides(&self.overrides)?.resolved())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print corpus statistics of a click or click-explore TSV as JSON.
    Ingest {
        #[arg(long, conflicts_with = "click_explore", required_unless_present = "click_explore")]
        click: Option<PathBuf>,
        #[arg(long)]
        click_explore: Option<PathBuf>,
        /// Skip malformed rows instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Filter, balance, reduce and split the click data; writes split TSVs.
    Preprocess(ConfigArgs),
    /// Train and evaluate the engagement predictor.
    TrainPredictor(ConfigArgs),
    /// Train both ranker arms using a saved regression predictor.
    TrainRanker {
        #[command(flatten)]
        config: ConfigArgs,
        /// Overrides `rank.predictor_model`.
        #[arg(long)]
        predictor_model: Option<PathBuf>,
    },
    /// Score a saved predictor on a click TSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        click: PathBuf,
        /// EMB1 file for dense-embedding predictors.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        lenient: bool,
    },
    /// Run the predictor over a grid of config overrides.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// JSON object mapping dotted keys to lists of values.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Render a saved report.json.
    Report {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
    },
    /// Print the resolved config.
    ShowConfig(ConfigArgs),
}

fn schema(lenient: bool) -> ClickSchema {
    ClickSchema {
        lenient,
        ..ClickSchema::default()
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn preprocess(cfg: &ExperimentConfig) -> Result<()> {
    let data = prepare_click_data(cfg)?;
    for (name, d) in [("train", &data.train), ("val", &data.val), ("test", &data.test)] {
        let p = cfg.output_dir.join(format!("{name}.tsv"));
        write_tsv_file(&p, &d.records, &cfg.data.schema)?;
    }
    print_json(&data.summary)
}

fn output_note(dir: &Path) {
    eprintln!("outputs written to {}", dir.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            click,
            click_explore,
            lenient,
        } => {
            let path = click.or(click_explore).expect("clap enforces one input");
            let d = parse_click(&path, &schema(lenient))?;
            if d.skipped > 0 {
                log::warn!("skipped {} malformed rows", d.skipped);
            }
            print_json(&compute_stats(&GroupedDataset::from_dataset(&d))?)
        }
        Command::Preprocess(args) => {
            let cfg = args.load()?;
            cfg.validate()?;
            preprocess(&cfg)
        }
        Command::TrainPredictor(args) => {
            let cfg = args.load()?;
            let r = run_predict_experiment(&cfg)?;
            print!("{}", r.to_markdown());
            output_note(&cfg.output_dir);
            Ok(())
        }
        Command::TrainRanker {
            config,
            predictor_model,
        } => {
            let mut cfg = config.load()?;
            if predictor_model.is_some() {
                cfg.rank.predictor_model = predictor_model;
            }
            let r = run_rank_experiment_from_config(&cfg)?;
            print!("{}", r.to_markdown());
            output_note(&cfg.output_dir);
            Ok(())
        }
        Command::Evaluate {
            model,
            click,
            embeddings,
            lenient,
        } => {
            let m = ModelFile::load(&model)?;
            print_json(&evaluate_predictor_file(
                &m,
                &click,
                &schema(lenient),
                embeddings.as_deref(),
            )?)
        }
        Command::Sweep { config, grid } => {
            let cfg = config.load()?;
            let text = fs::read_to_string(&grid).map_err(|e| Error::Io {
                path: grid.clone(),
                source: e,
            })?;
            let g: Grid = serde_json::from_str(&text)?;
            let s = sweep(&cfg, &g)?;
            print!("{}", s.to_markdown());
            output_note(&cfg.output_dir);
            Ok(())
        }
        Command::Report { path, format } => {
            let r = RunReport::load(&path)?;
            match format {
                Format::Md => print!("{}", r.to_markdown()),
                Format::Json => print!("{}", r.to_json()),
            }
            Ok(())
        }
        Command::ShowConfig(args) => {
            println!("{}", args.load()?.to_json_pretty());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
