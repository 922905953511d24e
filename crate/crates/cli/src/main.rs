use std::path::PathBuf;
use std::process::ExitCode;

use chppi_cli::config::{self, Overrides};
use chppi_cli::error::Result;
use chppi_cli::run::run_stages;
use chppi_cli::stages::Stage;
use chppi_cli::synth::{self, Scale, SynthParams};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chppi", version, about = "Block-level potential prevalence index pipeline")]
struct Cli {
    /// Worker threads used inside stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving the inputs, ground truth and `config.toml`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = Scale::default().blocks)]
    blocks: usize,
    #[arg(long, default_value_t = Scale::default().users)]
    users: usize,
    #[arg(long, default_value_t = Scale::default().providers)]
    providers: usize,
    /// Chance that a call by a contact-population user reaches the endemic region.
    #[arg(long, default_value_t = SynthParams::default().contact_prob)]
    contact_prob: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world with ground truth.
    Synth(SynthArgs),
    /// Detect home antennas from call records.
    Ingest(Common),
    /// Propagate seed affinity and reduce it to blocks.
    Affinity(Common),
    /// Fit housing correspondence analysis and antenna quartiles.
    Housing(Common),
    /// Travel times from blocks to health providers.
    Access(Common),
    /// Train the household autoencoder and summarize blocks.
    Sei(Common),
    /// Combine access and socio-economic scores.
    Vulnerability(Common),
    /// Density scaling and the block index.
    Index(Common),
    /// Locality selection per province.
    Select(Common),
    /// Write GeoJSON layers.
    Emit(Common),
    /// Every stage in dependency order.
    RunAll(Common),
}

fn run_with(common: &Common, stages: &[Stage], threads: Option<usize>) -> Result<()> {
    let overrides = Overrides { seed: common.seed, alpha: common.alpha, beta: common.beta };
    let loaded = config::load(&common.config, &overrides)?;
    let manifest = run_stages(&loaded, stages, threads)?;
    for s in stages {
        let r = &manifest.stages[s.name()];
        let outs: Vec<String> = r.outputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{}: {}", s.name(), outs.join(" "));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => {
            let params = SynthParams {
                seed: a.seed,
                scale: Scale { blocks: a.blocks, users: a.users, providers: a.providers },
                contact_prob: a.contact_prob,
                ..SynthParams::default()
            };
            synth::generate(&a.out, &params).map(|s| {
                println!("wrote {} blocks, {} users, {} call records to {}", s.blocks, s.users, s.calls, a.out.display())
            })
        }
        Command::Ingest(c) => run_with(c, &[Stage::Ingest], cli.threads),
        Command::Affinity(c) => run_with(c, &[Stage::Affinity], cli.threads),
        Command::Housing(c) => run_with(c, &[Stage::Housing], cli.threads),
        Command::Access(c) => run_with(c, &[Stage::Access], cli.threads),
        Command::Sei(c) => run_with(c, &[Stage::Sei], cli.threads),
        Command::Vulnerability(c) => run_with(c, &[Stage::Vulnerability], cli.threads),
        Command::Index(c) => run_with(c, &[Stage::Index], cli.threads),
        Command::Select(c) => run_with(c, &[Stage::Select], cli.threads),
        Command::Emit(c) => run_with(c, &[Stage::Emit], cli.threads),
        Command::RunAll(c) => run_with(c, &Stage::ALL, cli.threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
