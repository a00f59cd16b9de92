use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use receval::harness::{
    all_stage, eval_stage, llm_stage, prep_stage, recommend_stage, render_markdown, report_stage, ColdStartMode,
    ReportFormat, RunManifest, Scenario,
};
use receval::llm_bridge::ChatMode;

/// Offline evaluation of Top-N recommenders, LLM-backed ones included.
#[derive(Debug, Parser)]
#[command(name = "receval", version)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Run manifest (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,

    /// Overrides the split seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Metric cutoff [manifest default: 10].
    #[arg(long, global = true)]
    cutoff: Option<usize>,

    /// Similarity a raw LLM string must exceed to match a catalog item [manifest default: 0.90].
    #[arg(long, global = true)]
    threshold: Option<f64>,

    /// Train-profile cap for the cold-start scenario [manifest default: 10].
    #[arg(long, global = true)]
    cold_start_max: Option<usize>,

    /// Overrides the scenario.
    #[arg(long, global = true, value_name = "full|cold-start")]
    scenario: Option<Scenario>,

    /// Cut train histories instead of filtering users in the cold-start scenario.
    #[arg(long, global = true)]
    truncate: bool,

    /// Overrides the output directory.
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest, k-core filter, split and write dataset statistics.
    Prep,
    /// Fit the baselines and write their Top-N lists.
    Recommend,
    /// Prompt, parse and resolve the LLM recommenders.
    Llm {
        #[arg(long, value_name = "live|record|replay")]
        mode: Option<ChatMode>,
    },
    /// Score every stored list and run the significance tests.
    Eval,
    /// Render the stored evaluation report.
    Report {
        #[arg(long, value_name = "csv|markdown", default_values = ["csv", "markdown"], num_args = 1..)]
        format: Vec<ReportFormat>,
    },
    /// Every stage in order.
    All {
        #[arg(long, value_name = "live|record|replay")]
        mode: Option<ChatMode>,
        #[arg(long, value_name = "csv|markdown", default_values = ["csv", "markdown"], num_args = 1..)]
        format: Vec<ReportFormat>,
    },
}

/// A bad manifest or flag, as opposed to a failure while running.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(anyhow::Error);

fn load_manifest(g: &Global, mode: Option<ChatMode>) -> Result<RunManifest> {
    let path = g.manifest.as_ref().context("--manifest is required")?;
    let mut m = RunManifest::load(path)?;
    if let Some(seed) = g.seed {
        m.split.seed = seed;
    }
    if let Some(k) = g.cutoff {
        m.evaluation.cutoff = k;
    }
    if let Some(t) = g.threshold {
        m.threshold = t;
    }
    if let Some(n) = g.cold_start_max {
        m.evaluation.cold_start_max = n;
    }
    if let Some(s) = g.scenario {
        m.evaluation.scenario = s;
    }
    if g.truncate {
        m.evaluation.cold_start_mode = ColdStartMode::Truncate;
    }
    if let Some(dir) = &g.output {
        m.output = dir.clone();
    }
    if let Some(mode) = mode {
        m.chat
            .as_mut()
            .context("--mode given but the manifest has no [chat] section")?
            .mode = mode;
    }
    m.validate()?;
    Ok(m)
}

fn run(cli: Cli) -> Result<()> {
    let mode = match &cli.command {
        Command::Llm { mode } | Command::All { mode, .. } => *mode,
        _ => None,
    };
    let m = load_manifest(&cli.global, mode).map_err(Usage)?;
    match cli.command {
        Command::Prep => {
            let stats = prep_stage(&m)?;
            println!("{}: {stats}", m.dataset.id);
        }
        Command::Recommend => {
            for run in recommend_stage(&m)? {
                println!("{}\t{} lists", run.label, run.lists.lists.len());
            }
        }
        Command::Llm { .. } => {
            for run in llm_stage(&m, None)? {
                let s = &run.stats;
                println!(
                    "{}\t{} lists\t{} external of {} ({:.2}%)\t{} seen removed",
                    run.label,
                    s.lists,
                    s.external_items,
                    s.raw_items,
                    100.0 * s.external_rate(),
                    run.seen_removed
                );
            }
        }
        Command::Eval => {
            let report = eval_stage(&m)?;
            print!("{}", render_markdown(&report));
        }
        Command::Report { format } => {
            for path in report_stage(&m, &format)? {
                println!("{}", path.display());
            }
        }
        Command::All { format, .. } => {
            let report = all_stage(&m, None, &format)?;
            print!("{}", render_markdown(&report));
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match err.downcast_ref::<receval::Error>() {
        Some(e) if e.is_endpoint() => 3,
        Some(e) if matches!(e.root(), receval::Error::InvalidArgument(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
