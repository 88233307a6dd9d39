//! Operator entry point: expand prompt plans, execute monitoring runs, and
//! rebuild reports from sealed run directories.
//!
//! Exit codes: 0 clean, 2 run completed with degraded coverage, 1
//! configuration or integrity error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use framewatch_core::config::{ControlsConfig, RunConfig};
use framewatch_core::pipeline;
use framewatch_core::store;
use framewatch_core::taxonomy::Taxonomy;

#[derive(Parser)]
#[command(name = "framewatch", version, about = "Group-conditioned framing monitor for live news")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// News fixture files (JSONL); appended to the config's fixtures.
    #[arg(long)]
    fixtures: Vec<PathBuf>,
    /// Replace the roster with one mock model:
    /// echo_identity | identity_blind | noisy.
    #[arg(long)]
    mock: Option<String>,
    /// Control conditions: all | none | comma list
    /// (identity_free,random_label,paraphrase,repeats).
    #[arg(long)]
    controls: Option<String>,
    /// Generations per sampled repeat cell (>= 2).
    #[arg(long)]
    repeats: Option<u32>,
    /// Fraction of main cells sampled for repeats.
    #[arg(long)]
    repeat_fraction: Option<f64>,
    /// Max in-flight requests per vendor.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output root for run directories.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Manifest seed driving repeat sampling, mock generation, and bootstrap.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.fixtures.extend(self.fixtures.iter().cloned());
        if let Some(profile) = &self.mock {
            config = config.with_mock_roster(profile)?;
        }
        if let Some(selector) = &self.controls {
            config.controls = ControlsConfig::from_selector(selector)?;
        }
        if let Some(r) = self.repeats {
            let fraction = self
                .repeat_fraction
                .or(config.controls.repeats.as_ref().map(|c| c.fraction))
                .unwrap_or(0.25);
            config.controls.repeats =
                Some(framewatch_core::config::RepeatConfig { r, fraction });
        } else if let Some(fraction) = self.repeat_fraction {
            if let Some(repeats) = &mut config.controls.repeats {
                repeats.fraction = fraction;
            }
        }
        if let Some(parallelism) = self.parallelism {
            config.parallelism = parallelism;
        }
        if let Some(out) = &self.out {
            config.output_root = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Expand the prompt plan and write the inventory without calling models.
    Expand {
        #[command(flatten)]
        config: ConfigArgs,
        /// Inventory output path (JSONL).
        #[arg(long, default_value = "prompts.jsonl")]
        inventory: PathBuf,
    },
    /// Execute a full monitoring run.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Minimum valid-cell fraction for a clean exit.
        #[arg(long)]
        coverage_threshold: Option<f64>,
    },
    /// Rebuild summary tables from a sealed run directory, or from a bare
    /// score table.
    Report {
        /// Run directory containing manifest.json.
        run_dir: Option<PathBuf>,
        /// Aggregate a bare score table (no manifest verification).
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Where to write summary files (defaults next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn cmd_expand(args: &ConfigArgs, inventory: &PathBuf) -> anyhow::Result<()> {
    let config = args.resolve()?;
    let taxonomy = match &config.taxonomy {
        Some(path) => Taxonomy::load(path)?,
        None => Taxonomy::bundled_default(),
    };
    let anchors = pipeline::ingest_sources(&config)?;
    let plan = pipeline::expand_plan(&anchors, &taxonomy, &config)?;
    let counts = taxonomy.expansion_counts();

    let mut out = String::new();
    for instance in &plan.instances {
        out.push_str(&serde_json_line(instance)?);
    }
    std::fs::write(inventory, out)?;

    println!(
        "{} articles x {} main prompts, {} expected scores per (model, article)",
        anchors.len(),
        counts.prompts_per_model_article,
        counts.scores_per_model_article
    );
    println!(
        "plan: main={} identity_free={} random_label={} paraphrase={} repeats={} total={}",
        plan.counts.main,
        plan.counts.identity_free,
        plan.counts.random_label,
        plan.counts.paraphrase,
        plan.counts.repeats,
        plan.counts.total()
    );
    println!("inventory written to {}", inventory.display());
    Ok(())
}

fn serde_json_line<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    let mut line = serde_json::to_string(value)?;
    line.push('\n');
    Ok(line)
}

fn cmd_run(args: &ConfigArgs, coverage_threshold: Option<f64>) -> anyhow::Result<ExitCode> {
    let mut config = args.resolve()?;
    if let Some(threshold) = coverage_threshold {
        config.coverage_threshold = threshold;
    }
    let outcome = pipeline::execute_run(&config)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    let coverage = outcome.coverage.fraction();
    println!("run {} written to {}", outcome.manifest.run_id, outcome.run_dir.display());
    println!(
        "prompts: {} | cells: {} | coverage: {}/{} ({:.1}%)",
        outcome.counts.total(),
        outcome.cells.len(),
        outcome.coverage.total_valid,
        outcome.coverage.total_expected,
        coverage * 100.0
    );
    if coverage < config.coverage_threshold {
        eprintln!(
            "coverage {:.3} below threshold {:.3}: degraded run",
            coverage, config.coverage_threshold
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(
    run_dir: Option<&PathBuf>,
    scores: Option<&PathBuf>,
    out: Option<&PathBuf>,
) -> anyhow::Result<()> {
    let (summaries, out_dir) = match (run_dir, scores) {
        (Some(dir), None) => {
            let summaries = pipeline::rebuild_report(dir)?;
            (summaries, out.cloned().unwrap_or_else(|| dir.join(store::SUMMARIES_DIR)))
        }
        (None, Some(table)) => {
            let cells = store::load_score_table(table, None)?;
            let pairs: std::collections::BTreeSet<(String, String)> = cells
                .iter()
                .filter(|c| c.condition == framewatch_core::prompt::ConditionKind::Main)
                .filter_map(|c| c.dimension.clone().map(|d| (d, c.family.clone())))
                .collect();
            let summaries = pipeline::build_summaries(
                &cells,
                2 * pairs.len(),
                &store::ScoringConfig::default(),
            );
            let out_dir = out.cloned().unwrap_or_else(|| {
                table
                    .parent()
                    .map(|p| p.join("summaries"))
                    .unwrap_or_else(|| PathBuf::from("summaries"))
            });
            (summaries, out_dir)
        }
        _ => anyhow::bail!("pass either a run directory or --scores <table.csv>"),
    };
    std::fs::create_dir_all(&out_dir)?;
    for (name, content) in &summaries {
        std::fs::write(out_dir.join(name), content)?;
    }
    println!("{} summary tables written to {}", summaries.len(), out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Expand { config, inventory } => cmd_expand(config, inventory).map(|_| ExitCode::SUCCESS),
        Command::Run {
            config,
            coverage_threshold,
        } => cmd_run(config, *coverage_threshold),
        Command::Report { run_dir, scores, out } => {
            cmd_report(run_dir.as_ref(), scores.as_ref(), out.as_ref()).map(|_| ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
