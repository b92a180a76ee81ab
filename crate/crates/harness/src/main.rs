use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irt_harness::plot::{emit_plot_data, PlotKind};
use irt_harness::run::{execute, Mode};
use irt_harness::teleop::{ServerSettings, TeleopServer};
use irt_harness::{complete, HarnessResult, RunConfig};

#[derive(Parser)]
#[command(name = "irt", version, about = "Shared-control experiments and live teleoperation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `seeds.base`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured scenario at its own stressor levels.
    Run(Common),
    /// Simulate every cell of the `[sweep]` grid.
    Sweep(Common),
    /// Turn a result directory into CSV tables.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Table to emit; all of them when omitted.
        #[arg(long, value_enum)]
        kind: Option<PlotKind>,
    },
    /// Serve live sessions over TCP.
    Teleop {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 7878)]
        port: u16,
    },
    /// Fill in a partially observed preference matrix.
    Complete {
        /// Matrix file: a `rows cols rank_hint` header, then one `row col value` line per observed entry.
        file: PathBuf,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the completed matrix as CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(c: &Common) -> HarnessResult<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.override_seed(s);
        cfg.validate()?;
    }
    let out = c.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn batch(c: &Common, mode: Mode) -> HarnessResult<()> {
    let (cfg, out) = load(c)?;
    let s = execute(&cfg, mode, &out)?;
    println!("{} episodes ({} failed) written to {}", s.episodes, s.failures, out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> HarnessResult<()> {
    match cli.command {
        Command::Run(c) => batch(&c, Mode::Single),
        Command::Sweep(c) => batch(&c, Mode::Sweep),
        Command::Plot { common, kind } => {
            let (cfg, out) = load(&common)?;
            let kinds = kind.map(|k| vec![k]).unwrap_or_else(|| PlotKind::ALL.to_vec());
            for k in kinds {
                for p in emit_plot_data(&out, k, &cfg.plot)? {
                    println!("{}", p.display());
                }
            }
            Ok(())
        }
        Command::Teleop { common, port } => {
            let (cfg, out) = load(&common)?;
            let settings = ServerSettings {
                spec: cfg.spec()?,
                fusion: cfg.fusion_params()?,
                params: cfg.sim,
                teleop: cfg.teleop.clone(),
                tolerance: cfg.tolerance,
                record_dir: Some(out.join("teleop")),
            };
            let server = TeleopServer::bind(("0.0.0.0", port), settings)?;
            log::info!("listening on {}", server.local_addr()?);
            server.serve()?;
            Ok(())
        }
        Command::Complete { file, rank, seed, out } => {
            let (rows, summary) = complete::complete_file(&file, rank, seed)?;
            match out {
                Some(path) => complete::write_matrix_csv(&path, &rows)?,
                None => {
                    for r in &rows {
                        println!("{}", r.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
                    }
                }
            }
            eprintln!("{}", serde_json::to_string(&summary).map_err(std::io::Error::other)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
