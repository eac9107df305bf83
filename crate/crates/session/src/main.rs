use std::io::Write;
use std::net::TcpListener;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use neuroswarm_core::fnirs::probe::ProbeLayout;
use neuroswarm_core::fnirs::recording::write_hemo;
use neuroswarm_core::fnirs::synth::{synth_generate, SynthProtocol};
use neuroswarm_session::analyze::{analyze, load_hemo, write_exports, AnalysisOptions};
use neuroswarm_session::bench::{density_sweep, parse_sweep, rows_csv};
use neuroswarm_session::config::Scenario;
use neuroswarm_session::events::read_log;
use neuroswarm_session::plot::line_chart_svg;
use neuroswarm_session::protocol::write_frame;
use neuroswarm_session::replay::replay;
use neuroswarm_session::server::Server;
use neuroswarm_session::{Session, SessionConfig, SessionError};

#[derive(Parser)]
#[command(name = "neuroswarm", version, about = "Neuroadaptive swarm supervision testbed")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a session from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Step as fast as possible without serving clients.
        #[arg(long)]
        headless: bool,
        /// Event log path (overrides `record_path`).
        #[arg(long)]
        record: Option<PathBuf>,
        /// Address to serve the wire protocol on.
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
    },
    /// Re-simulate a recorded session and check its final metrics.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Serve the replayed stream to one client instead of printing JSON lines.
        #[arg(long)]
        listen: Option<String>,
    },
    /// GLM contrast analysis of a recorded session.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        recording: PathBuf,
        /// e.g. "high - rest".
        #[arg(long)]
        contrast: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic channel CSV from a TOML protocol.
    Synth {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Completion efficiency over a range of task densities.
    Bench {
        #[arg(long, value_enum, default_value_t = ScenarioArg::Heatmap)]
        scenario: ScenarioArg,
        /// `start:stop:step` or a comma list, tasks per second.
        #[arg(long, default_value = "0.5:3:0.5")]
        density_sweep: String,
        /// Base config; defaults apply when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for bench.csv and bench.svg; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Individual,
    Heatmap,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Cmd::Run { config, headless, record, listen } => {
            let mut cfg = SessionConfig::load(&config)?;
            if record.is_some() {
                cfg.record_path = record;
            }
            let session = Session::new(cfg)?;
            let result = if headless {
                session.run_to_end()?
            } else {
                let server = Server::bind(&listen)?;
                eprintln!("serving on {}", server.local_addr());
                server.run(session)?
            };
            println!("{}", serde_json::to_string_pretty(&result.metrics)?);
        }
        Cmd::Replay { log, speed, listen } => {
            let events = read_log(&log)?;
            let report = match listen {
                Some(addr) => {
                    let listener = TcpListener::bind(&addr).with_context(|| format!("bind {addr}"))?;
                    eprintln!("waiting for a client on {}", listener.local_addr()?);
                    let (mut stream, _) = listener.accept()?;
                    replay(&events, speed, |m| write_frame(&mut stream, &m).map_err(|e| SessionError::Io(e.to_string())))?
                }
                None => {
                    let mut out = std::io::stdout().lock();
                    replay(&events, speed, |m| {
                        let line = serde_json::to_string(&m).expect("messages serialise");
                        writeln!(out, "{line}").map_err(|e| SessionError::Io(e.to_string()))
                    })?
                }
            };
            eprintln!("replayed {} messages; final metrics match: {:?}", report.messages, report.replayed);
        }
        Cmd::Analyze { log, recording, contrast, out } => {
            let events = read_log(&log)?;
            let layout = ProbeLayout::default();
            let series = load_hemo(&recording, &layout)?;
            let analysis = analyze(&events, &series, &layout, &AnalysisOptions::new(contrast))?;
            write_exports(&analysis, &out)?;
            let flagged: Vec<usize> = analysis.stats.iter().filter(|s| s.significant).map(|s| s.channel).collect();
            println!("significant channels: {flagged:?}");
        }
        Cmd::Synth { protocol, out } => {
            let text = std::fs::read_to_string(&protocol).with_context(|| protocol.display().to_string())?;
            let p: SynthProtocol<f64> = toml::from_str(&text).with_context(|| format!("{}", protocol.display()))?;
            let series = synth_generate(&p, &ProbeLayout::default())?;
            write_hemo(&series, &out)?;
        }
        Cmd::Bench { scenario, density_sweep: sweep, config, out } => {
            let base = match config {
                Some(p) => SessionConfig::load(&p)?,
                None => SessionConfig { duration: 120.0, ..SessionConfig::default() },
            };
            let scenario = match scenario {
                ScenarioArg::Individual => Scenario::Individual,
                ScenarioArg::Heatmap => Scenario::Heatmap,
            };
            let densities = parse_sweep(&sweep)?;
            let rows = density_sweep(&base, scenario, &densities)?;
            let csv = rows_csv(&rows);
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join("bench.csv"), &csv)?;
                    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.density, r.completion_efficiency)).collect();
                    std::fs::write(dir.join("bench.svg"), line_chart_svg(&pts, "task density (1/s)", "completion efficiency"))?;
                }
                None => print!("{csv}"),
            }
            if rows.is_empty() {
                bail!("empty sweep");
            }
        }
    }
    Ok(())
}
