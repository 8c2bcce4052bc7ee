use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vitaslam::pipeline::{replay, simulate};
use vitaslam::plots::{emit_comparison, emit_plots};
use vitaslam::sim::log::{read_log, write_log};
use vitaslam::{compare, run_frames, Config, Error, Mode, RunConfig, RunReport};

/// Visuo-tactile SLAM on a simulated whiskered robot.
#[derive(Debug, Parser)]
#[command(name = "vitaslam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the scripted exploration and map it.
    Run {
        /// TOML parameter overrides; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "vita")]
        mode: Mode,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Stop after this many cycles instead of the whole script.
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run visual_only and vita on the same sensor stream, side by side.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map a recorded sensor log.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "vita")]
        mode: Mode,
        /// Algorithm parameters; simulator settings always come from the log.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config, Error> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let io = |e| Error::Io {
        path: path.to_owned(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    serde_json::to_writer(&mut w, value).map_err(|e| io(e.into()))?;
    w.flush().map_err(io)
}

fn summary(r: &RunReport) {
    let ate = |a: Option<vitaslam::Ate>| {
        a.map_or("n/a".to_owned(), |a| format!("{:.4} m", a.rmse_position))
    };
    println!(
        "{}: {} cycles, {} view / {} tactile templates, {} experiences, {} loop closures, ATE {} -> {}",
        r.mode,
        r.cycles,
        r.view_template_count,
        r.tactile_template_count,
        r.map.len(),
        r.loop_closure_events.len(),
        ate(r.ate_before_relax),
        ate(r.ate_after_relax),
    );
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run {
            config,
            mode,
            seed,
            cycles,
            out,
        } => {
            let mut cfg = RunConfig::new(mode, seed, load_config(config.as_deref())?);
            cfg.cycles = cycles;
            let (header, frames) = simulate(&cfg)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let log_path = out.join("sensor.log");
            File::create(&log_path)
                .and_then(|f| write_log(BufWriter::new(f), &header, &frames))
                .map_err(|e| Error::Io {
                    path: log_path,
                    source: e,
                })?;
            let report = run_frames(
                &cfg,
                cfg.params.simulator.trajectory.start,
                frames.into_iter().map(Ok),
            )?;
            emit_plots(&report, &out)?;
            write_json(&out.join("report.json"), &report)?;
            summary(&report);
        }
        Command::Compare {
            config,
            seed,
            cycles,
            out,
        } => {
            let params = load_config(config.as_deref())?;
            let mut a = RunConfig::new(Mode::VisualOnly, seed, params.clone());
            a.cycles = cycles;
            let mut b = RunConfig::new(Mode::Vita, seed, params);
            b.cycles = cycles;
            let cmp = compare(&a, &b)?;
            emit_comparison(&cmp, &out)?;
            write_json(&out.join("comparison.json"), &cmp)?;
            summary(&cmp.a);
            summary(&cmp.b);
        }
        Command::Replay {
            log,
            mode,
            config,
            out,
        } => {
            let params = load_config(config.as_deref())?;
            let file = File::open(&log).map_err(|e| Error::Io {
                path: log.clone(),
                source: e,
            })?;
            let (header, frames) = read_log(BufReader::new(file))?;
            let report = replay(&header, &frames, mode, &params)?;
            emit_plots(&report, &out)?;
            write_json(&out.join("report.json"), &report)?;
            summary(&report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
