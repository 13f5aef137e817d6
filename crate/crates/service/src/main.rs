use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anonbench_core::anonymizer::McAdamsConfig;
use anonbench_core::protocol::{read_table3, read_table5, write_table3, write_table5, ListenerProfile, StudyConfig};
use anonbench_service::batch::run_batch;
use anonbench_service::report::{generate_report, read_auc_file, read_eer_file, ReportInput};
use anonbench_service::snapshot::replay;
use anonbench_service::store::read_events;
use anonbench_service::{AppState, ServiceConfig};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "anonbench", version, about = "McAdams anonymization and perceptual study toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anonymize every WAV file in a directory.
    Anonymize {
        #[arg(long, default_value_t = 0.8)]
        alpha: f64,
        #[arg(long, default_value_t = 20)]
        lpc_order: usize,
        /// Frame length in samples; defaults to 20 ms at 16 kHz.
        #[arg(long, default_value_t = 320)]
        frame_length: usize,
        #[arg(long, default_value_t = 160)]
        hop: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Run the listening-session HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Require this value in the x-study-key header.
        #[arg(long, env = "ANONBENCH_STUDY_KEY")]
        study_key: Option<String>,
    },
    /// Build the report from a response store.
    Report {
        #[arg(long)]
        store: PathBuf,
        #[command(flatten)]
        metrics: MetricArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the accuracy and quality CSVs from a response store.
    Export {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        table3: PathBuf,
        #[arg(long)]
        table5: PathBuf,
    },
    /// Build the report from accuracy and quality CSVs alone.
    Stats {
        #[arg(long)]
        table3: PathBuf,
        #[arg(long)]
        table5: PathBuf,
        /// JSON array of listener profiles, enabling subgroup analyses.
        #[arg(long)]
        listeners: Option<PathBuf>,
        #[command(flatten)]
        metrics: MetricArgs,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MetricArgs {
    /// CSV `group,eer`.
    #[arg(long)]
    eer: Option<PathBuf>,
    /// CSV `group,orig,anon`.
    #[arg(long)]
    auc: Option<PathBuf>,
}

impl MetricArgs {
    fn apply(&self, input: &mut ReportInput) -> Result<()> {
        if let Some(p) = &self.eer {
            input.eer = Some(read_eer_file(p)?);
        }
        if let Some(p) = &self.auc {
            input.auc = Some(read_auc_file(p)?);
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn store_input(store: &Path) -> Result<ReportInput> {
    let events = read_events(store)?;
    let snapshot = replay(&events).with_context(|| format!("replaying {}", store.display()))?;
    Ok(ReportInput::from_snapshot(&snapshot)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Anonymize { alpha, lpc_order, frame_length, hop, input, output } => {
            let config = McAdamsConfig { alpha, lpc_order, frame_length, hop, ..McAdamsConfig::default() };
            config.validate()?;
            let manifest = run_batch(&input, &output, &config)
                .with_context(|| format!("anonymizing {} into {}", input.display(), output.display()))?;
            println!("{} anonymized, {} failed", manifest.files.len(), manifest.failures.len());
            if !manifest.succeeded() {
                for f in &manifest.failures {
                    eprintln!("failed: {}: {}", f.input.display(), f.error);
                }
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Serve { config, audio, store, bind, study_key } => {
            let study = StudyConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let state = AppState::open(ServiceConfig { study, audio_dir: audio, store_path: store, study_key })?;
            tokio::runtime::Runtime::new()?.block_on(anonbench_service::app::serve(state, bind))?;
        }
        Command::Report { store, metrics, out } => {
            let mut input = store_input(&store)?;
            metrics.apply(&mut input)?;
            std::fs::write(&out, generate_report(&input)?.to_json())
                .with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Export { store, table3, table5 } => {
            let input = store_input(&store)?;
            write_table3(&input.accuracy, create(&table3)?)?;
            write_table5(&input.quality, create(&table5)?)?;
        }
        Command::Stats { table3, table5, listeners, metrics, out } => {
            let t3 = read_table3(open(&table3)?).with_context(|| format!("reading {}", table3.display()))?;
            let t5 = read_table5(open(&table5)?).with_context(|| format!("reading {}", table5.display()))?;
            let roster: Vec<ListenerProfile> = match &listeners {
                Some(p) => serde_json::from_reader(open(p)?).with_context(|| format!("reading {}", p.display()))?,
                None => Vec::new(),
            };
            if t3.is_empty() && t5.is_empty() {
                bail!("both tables are empty");
            }
            let mut input = ReportInput::from_tables(t3, t5, roster);
            metrics.apply(&mut input)?;
            let json = generate_report(&input)?.to_json();
            match out {
                Some(p) => std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{json}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
