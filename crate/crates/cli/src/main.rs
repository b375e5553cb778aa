mod config;
mod pipeline;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use decompkit::ir::{extract_reserved, obfuscate};
use decompkit::orchestrator::{report_render, EvalReport};
use decompkit::reward::{batch_rewards, BatchConfig, RewardMode, RewardPair};

use config::AppConfig;

#[derive(Parser)]
#[command(name = "decompkit", version, about = "Two-phase decompilation tooling: IR obfuscation, rewards, metrics, corpora")]
struct Cli {
    /// TOML configuration file; relative paths inside it are resolved
    /// against its directory.
    #[arg(long, global = true, env = "DECOMPKIT_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replace user-defined identifiers of a C file with category placeholders.
    Obfuscate {
        source: PathBuf,
        /// Decompiler pseudocode; library functions it calls are kept.
        #[arg(long)]
        pseudo: Option<PathBuf>,
        /// Print the full IR unit (text, rename map, reserved names) as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Score (generated, reference) pairs read as JSONL.
    Reward {
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// JSONL of {"id", "generated", "reference", "reference_header"?}.
        #[arg(long)]
        input: PathBuf,
        /// Output JSONL; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a recorded run (or the references themselves) on a benchmark.
    Evaluate {
        #[arg(long)]
        bench: PathBuf,
        /// run.json written by `pipeline run`.
        #[arg(long, conflicts_with = "references", required_unless_present = "references")]
        run: Option<PathBuf>,
        /// Feed every reference source back as the generated output.
        #[arg(long)]
        references: bool,
        #[arg(long)]
        out: PathBuf,
        /// Keep samples whose reference fails its own harness.
        #[arg(long)]
        no_validate: bool,
    },
    /// Training-corpus preparation.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Two-phase decompilation runs.
    Pipeline {
        #[command(subcommand)]
        command: PipelineCommand,
    },
    /// Re-render a report.json.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Build shards and a manifest from the [corpus] config section.
    Build,
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Run the [pipeline] config section end to end and write run.json,
    /// report.json, report.txt and timings.json.
    Run {
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Structure,
    Identifier,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Json,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_obfuscate(source: &Path, pseudo: Option<&Path>, json: bool) -> Result<()> {
    let src = read(source)?;
    let pseudo = pseudo.map(read).transpose()?.unwrap_or_default();
    let unit = obfuscate(&src, &extract_reserved(&pseudo))?;
    let mut out = std::io::stdout().lock();
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&unit)?)?;
    } else {
        out.write_all(unit.ir_text.as_bytes())?;
    }
    Ok(())
}

fn cmd_reward(cfg: &AppConfig, mode: ModeArg, input: &Path, output: Option<&Path>) -> Result<()> {
    let mut pairs = Vec::new();
    for (n, line) in read(input)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let p: RewardPair = serde_json::from_str(line).with_context(|| format!("{}:{}", input.display(), n + 1))?;
        pairs.push(p);
    }
    let mode = match mode {
        ModeArg::Structure => RewardMode::Structure,
        ModeArg::Identifier => RewardMode::Identifier,
    };
    let provider = cfg.embedding_provider();
    let batch = BatchConfig { compiler: cfg.compiler(), provider: provider.as_ref() };
    let records = batch_rewards(&pairs, mode, &batch)?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    log::info!("scored {} pairs", records.len());
    Ok(())
}

fn cmd_report(input: &Path, format: FormatArg) -> Result<()> {
    let report: EvalReport = serde_json::from_str(&read(input)?).context("report.json does not match the schema")?;
    let r = report_render(&report);
    let text = match format {
        FormatArg::Table => r.table,
        FormatArg::Json => r.json,
    };
    std::io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = AppConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Obfuscate { source, pseudo, json } => cmd_obfuscate(&source, pseudo.as_deref(), json),
        Command::Reward { mode, input, output } => cmd_reward(&cfg, mode, &input, output.as_deref()),
        Command::Evaluate { bench, run, references, out, no_validate } => {
            pipeline::evaluate(&cfg, &bench, run.as_deref(), references, &out, !no_validate)
        }
        Command::Corpus { command: CorpusCommand::Build } => {
            let manifest = decompkit::corpus::build_corpus(&cfg.corpus()?)?;
            let c = &manifest.counts;
            println!(
                "emitted {} samples in {} shards ({} compiled, {} paired, {} deduplicated, {} dropped)",
                c.emitted,
                manifest.shards.len(),
                c.compiled,
                c.paired,
                c.deduped,
                manifest.dropped.len()
            );
            Ok(())
        }
        Command::Pipeline { command: PipelineCommand::Run { out } } => {
            let mut section = cfg.pipeline()?;
            if let Some(out) = out {
                section.out_dir = out;
            }
            pipeline::run(&cfg, &section)
        }
        Command::Report { input, format } => cmd_report(&input, format),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
