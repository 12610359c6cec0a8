use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vpfp::experiments::ExperimentKind;
use vpfp::io::{self, RunConfig, RunRecord};
use vpfp::{Error, Result};

#[derive(Parser)]
#[command(name = "vpfp", version, about = "Vlasov-Poisson-Fokker-Planck spectral experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Key-value config file; defaults apply to keys it leaves unset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $VPFP_OUT or ./vpfp-runs, then <kind>-<hash>).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Enhanced-dissipation half-life scaling in nu and k.
    Dissipation(RunArgs),
    /// Linearized Landau damping against the Volterra solution.
    Landau(RunArgs),
    /// Plasma echo amplitude across collision rates.
    Echo(RunArgs),
    /// Stability threshold eps*(nu) by bisection.
    Threshold(RunArgs),
    /// Long-time relaxation toward the global Maxwellian.
    Thermalize(RunArgs),
    /// Repeat a run from its manifest.json.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => io::parse_config(&std::fs::read_to_string(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn run_kind(kind: ExperimentKind, args: &RunArgs) -> Result<RunRecord> {
    let cfg = load_config(args.config.as_deref())?;
    let kind = cfg.resolve_kind(Some(kind))?;
    let dir = io::resolve_output_dir(args.out.as_deref(), &cfg, kind);
    io::run_to_dir(&cfg, kind, &dir)
}

fn execute(cli: Cli) -> Result<RunRecord> {
    use ExperimentKind as K;
    match &cli.command {
        Command::Dissipation(a) => run_kind(K::Dissipation, a),
        Command::Landau(a) => run_kind(K::Landau, a),
        Command::Echo(a) => run_kind(K::Echo, a),
        Command::Threshold(a) => run_kind(K::Threshold, a),
        Command::Thermalize(a) => run_kind(K::Thermalize, a),
        Command::Rerun { manifest, out } => io::rerun_manifest(manifest, out),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(rec) => {
            println!(
                "{} {} -> {}",
                rec.manifest.experiment,
                &rec.manifest.config_hash[..12],
                rec.dir.display()
            );
            for f in &rec.manifest.outputs {
                println!("  {}", f.file);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("vpfp: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &Error) -> u8 {
    u8::try_from(e.exit_code()).unwrap_or(1)
}
