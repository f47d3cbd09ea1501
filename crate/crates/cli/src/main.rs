use std::fmt::Display;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use beamforge_core::analysis::{
    ablation_csv, ablation_suite, bound_bars, comparison_csv, heatmap, run_comparison, sweep, sweep_csv,
    timing_csv, timing_report, SiteRole, SweepParam,
};
use beamforge_core::channel::cache_store;
use beamforge_core::constraints::resolve;
use beamforge_core::intent::{parse_intent, run_dialogue, DialogueIo, LlmClient, LlmConfig, DEFAULT_MAX_ROUNDS};
use beamforge_core::scenario::{generate_synthetic_scenario, save_multipath};
use beamforge_core::{alternate_optimize, ConstraintSet, OptimizerConfig, SynthParams};
use beamforge_service::{AppState, Backend, ScenarioSource, SourceError};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

const DEFAULT_INTENT: &str = "enhance the north, suppress the south, base station in the center";

#[derive(Parser)]
#[command(name = "beamforge", version, about = "Intent-driven base-station placement and precoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Multipath file or `synth:<seed>`.
    #[arg(long, default_value = "synth:42", env = "BEAMFORGE_SCENARIO")]
    scenario: String,
    /// Never contact the language model.
    #[arg(long)]
    offline: bool,
}

#[derive(Args, Clone)]
struct Batch {
    #[command(flatten)]
    common: Common,
    /// Deployment intent in plain language.
    #[arg(long, default_value = DEFAULT_INTENT)]
    intent: String,
    /// Dark-site threshold T in dB.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print JSON instead of CSV.
    #[arg(long)]
    json: bool,
    /// Also write the output to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive intent dialogue, then optimize on confirmation.
    Chat {
        #[command(flatten)]
        common: Common,
        /// First request; read from stdin when absent.
        #[arg(long)]
        text: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic multipath file.
    Gen {
        /// Number of sites on a ring layout; the reference layout when absent.
        #[arg(long)]
        sites: Option<usize>,
        /// Candidate grid as WxH.
        #[arg(long, default_value = "30x30")]
        grid: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the channel tensor and write the binary cache.
    BuildCache {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Baselines against the optimizer on one constraint set.
    Compare(Batch),
    /// Sweep one optimizer parameter.
    Sweep {
        #[command(flatten)]
        batch: Batch,
        /// threshold, lambda or rounds.
        #[arg(long)]
        param: String,
        /// Comma-separated values; the default grid when absent.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Ablation variants of the optimizer.
    Ablate(Batch),
    /// Received-power map of the optimized deployment (synthetic scenarios only).
    Heatmap {
        #[command(flatten)]
        batch: Batch,
        #[arg(long, default_value_t = 64)]
        res: usize,
        /// Write a 16-bit PGM image here as well.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Per-stage wall-clock timings.
    Timing(Batch),
    /// Run the HTTP session API.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8080", env = "BEAMFORGE_ADDR")]
        addr: SocketAddr,
        /// Session time-to-live in seconds.
        #[arg(long, default_value_t = 3600, env = "BEAMFORGE_SESSION_TTL")]
        ttl: u64,
    },
}

/// Exit 1 for bad input, 2 for failures while running.
enum Failure {
    Validation(String),
    Runtime(String),
}

fn invalid(e: impl Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn runtime(e: impl Display) -> Failure {
    Failure::Runtime(e.to_string())
}

type Outcome = Result<(), Failure>;

fn llm(offline: bool) -> LlmClient {
    if offline {
        LlmClient::offline()
    } else {
        LlmClient::from_config(LlmConfig::from_env())
    }
}

fn load(common: &Common) -> Result<Backend, Failure> {
    let source: ScenarioSource = common.scenario.parse().map_err(invalid)?;
    Backend::load(&source).map_err(|e| match e {
        SourceError::Seed(_) => invalid(e),
        _ => runtime(e),
    })
}

fn config(threshold: Option<f64>, seed: Option<u64>) -> Result<OptimizerConfig, Failure> {
    let mut cfg = OptimizerConfig::default();
    if let Some(t) = threshold {
        cfg.threshold_db = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(invalid)?;
    Ok(cfg)
}

struct Prepared {
    backend: Backend,
    cs: ConstraintSet,
    cfg: OptimizerConfig,
}

fn prepare(b: &Batch) -> Result<Prepared, Failure> {
    let backend = load(&b.common)?;
    let parsed = parse_intent(&b.intent, &backend.scenario, &llm(b.common.offline)).map_err(invalid)?;
    let cs = resolve(&parsed.intent, &backend.scenario).map_err(invalid)?;
    Ok(Prepared { backend, cs, cfg: config(b.threshold, b.seed)? })
}

fn emit<T: Serialize>(b: &Batch, rows: &T, csv: String) -> Outcome {
    let text = if b.json { serde_json::to_string_pretty(rows).map_err(runtime)? + "\n" } else { csv };
    if let Some(path) = &b.out {
        std::fs::write(path, &text).map_err(runtime)?;
    }
    io::stdout().write_all(text.as_bytes()).map_err(runtime)
}

/// Dialogue over stdin. The transcript goes to `out`, which is stderr when
/// stdout carries JSON.
struct StdIo<R> {
    input: R,
    out: Box<dyn Write>,
}

impl<R: BufRead> DialogueIo for StdIo<R> {
    fn show(&mut self, text: &str) {
        writeln!(self.out, "{text}").ok();
    }

    fn ask(&mut self, prompt: &str) -> Option<String> {
        write!(self.out, "{prompt}").ok();
        self.out.flush().ok();
        let mut line = String::new();
        let reply = match self.input.read_line(&mut line) {
            Ok(0) | Err(_) => None,
            Ok(_) => Some(line.trim().to_string()),
        };
        writeln!(self.out, "{}", reply.as_deref().unwrap_or("")).ok();
        reply
    }
}

#[derive(Serialize)]
struct ChatReport {
    rounds: usize,
    intent: beamforge_core::ParsedIntent,
    bright_sites: Vec<u32>,
    dark_sites: Vec<u32>,
    site_index: usize,
    bs_position: (f64, f64),
    bright_mean_db: f64,
    max_dark_db: Option<f64>,
    bounds: Vec<beamforge_core::analysis::BoundBar>,
}

fn chat(common: &Common, text: Option<String>, max_rounds: usize, threshold: Option<f64>, json: bool) -> Outcome {
    let backend = load(common)?;
    let cfg = config(threshold, None)?;
    let client = llm(common.offline);
    let out: Box<dyn Write> = if json { Box::new(io::stderr()) } else { Box::new(io::stdout()) };
    let mut io = StdIo { input: io::stdin().lock(), out };
    let initial = match text {
        Some(t) => t,
        None => io.ask("intent> ").ok_or_else(|| invalid("no intent given"))?,
    };
    let outcome = run_dialogue(&initial, &backend.scenario, &client, &mut io, max_rounds).map_err(invalid)?;
    if !outcome.confirmed {
        return Err(invalid("constraints were not confirmed"));
    }
    let cs = outcome.constraints;
    let res = alternate_optimize(&backend.tensor, &cs, &cfg).map_err(runtime)?;
    let bars = bound_bars(&backend.tensor, &cs, res.site_index, &res.precoder).map_err(runtime)?;
    let report = ChatReport {
        rounds: outcome.rounds,
        intent: outcome.intent,
        bright_sites: cs.bright.clone(),
        dark_sites: cs.dark.clone(),
        site_index: res.site_index,
        bs_position: backend.scenario.grid.coords(res.site_index),
        bright_mean_db: res.bright_mean_db,
        max_dark_db: res.max_dark_db,
        bounds: bars,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
        return Ok(());
    }
    let (x, y) = report.bs_position;
    println!("== result ==");
    println!("confirmed after {} round(s)", report.rounds);
    println!("base station: candidate {} at ({x:.2}, {y:.2})", report.site_index);
    println!("{:>6}  {:<6}  {:>10}  {:>12}  {:>12}  {:>11}", "site", "role", "power dB", "sigma_min dB", "sigma_max dB", "to bound dB");
    for b in &report.bounds {
        // bright sites sit below sigma_max, dark sites above sigma_min
        let (role, delta) = match b.role {
            SiteRole::Bright => ("bright", b.achieved_db - b.sigma_max_db),
            SiteRole::Dark => ("dark", b.achieved_db - b.sigma_min_db),
        };
        println!(
            "{:>6}  {:<6}  {:>10.2}  {:>12.2}  {:>12.2}  {:>+11.2}",
            b.site_id, role, b.achieved_db, b.sigma_min_db, b.sigma_max_db, delta
        );
    }
    println!("bright mean {:.2} dB", report.bright_mean_db);
    if let Some(d) = report.max_dark_db {
        println!("max dark {d:.2} dB (threshold {:.1} dB)", cfg.threshold_db);
    }
    Ok(())
}

fn gen(sites: Option<usize>, grid: &str, seed: u64, out: &PathBuf) -> Outcome {
    let (nx, ny) = grid
        .split_once(['x', 'X'])
        .and_then(|(w, h)| Some((w.trim().parse::<usize>().ok()?, h.trim().parse::<usize>().ok()?)))
        .ok_or_else(|| invalid(format!("grid must look like 30x30, got {grid:?}")))?;
    let mut params = SynthParams { nx, ny, ..SynthParams::reference() };
    if let Some(n) = sites {
        params = params.with_site_count(n);
    }
    let (scenario, records) = generate_synthetic_scenario(&params, seed).map_err(invalid)?;
    save_multipath(out, &scenario, &records).map_err(runtime)?;
    eprintln!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Chat { common, text, max_rounds, threshold, json } => chat(&common, text, max_rounds, threshold, json),
        Command::Gen { sites, grid, seed, out } => gen(sites, &grid, seed, &out),
        Command::BuildCache { common, out } => {
            let backend = load(&common)?;
            cache_store(&out, &backend.tensor).map_err(runtime)
        }
        Command::Compare(b) => {
            let p = prepare(&b)?;
            let rows = run_comparison(&p.backend.tensor, &p.cs, &p.cfg).map_err(runtime)?;
            emit(&b, &rows, comparison_csv(&rows))
        }
        Command::Sweep { batch, param, values } => {
            let param: SweepParam = param.parse().map_err(invalid)?;
            let values = if values.is_empty() { param.default_values() } else { values };
            let p = prepare(&batch)?;
            for v in &values {
                param.apply(&p.cfg, *v).map_err(invalid)?;
            }
            let pts = sweep(&p.backend.tensor, &p.cs, &p.cfg, param, &values).map_err(runtime)?;
            emit(&batch, &pts, sweep_csv(param, &pts))
        }
        Command::Ablate(b) => {
            let p = prepare(&b)?;
            let rows = ablation_suite(&p.backend.tensor, &p.cs, &p.cfg).map_err(runtime)?;
            emit(&b, &rows, ablation_csv(&rows))
        }
        Command::Heatmap { batch, res, pgm } => {
            if !(2..=beamforge_service::MAX_HEATMAP_RES).contains(&res) {
                return Err(invalid(format!("res must be in 2..={}", beamforge_service::MAX_HEATMAP_RES)));
            }
            let p = prepare(&batch)?;
            let world = p.backend.world.as_ref().ok_or_else(|| invalid("heatmaps need a synth:<seed> scenario"))?;
            let r = alternate_optimize(&p.backend.tensor, &p.cs, &p.cfg).map_err(runtime)?;
            let map = heatmap(world, &p.backend.scenario, r.site_index, &r.precoder, res).map_err(runtime)?;
            if let Some(path) = pgm {
                std::fs::write(path, map.to_pgm()).map_err(runtime)?;
            }
            emit(&batch, &map, map.to_csv())
        }
        Command::Timing(b) => {
            let p = prepare(&b)?;
            let rows = timing_report(&p.backend.tensor, &p.cs, &p.cfg).map_err(runtime)?;
            emit(&b, &rows, timing_csv(&rows))
        }
        Command::Serve { common, addr, ttl } => {
            tracing_subscriber::fmt().with_writer(io::stderr).init();
            let backend = load(&common)?;
            let state = Arc::new(AppState::new(backend, llm(common.offline)).with_ttl(Duration::from_secs(ttl)));
            let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
            rt.block_on(beamforge_service::serve(addr, state)).map_err(runtime)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
