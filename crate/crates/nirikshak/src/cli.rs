//! Command-line front end.
//!
//! Exit codes: 0 when the command completed (failed tests included), 2 for
//! configuration or input errors, 3 when setup or the transport made the run
//! impossible.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nirikshak_core::analysis::AnalysisParams;
use nirikshak_core::runner::{run, RunError};
use nirikshak_core::{analyze, build_graph, enumerate_nodes, Outcome};

use crate::config::{self, LoadedConfig};
use crate::hooks::CommandHooks;
use crate::http::UreqTransport;
use crate::log::{emit_log, new_run_id, read_log};
use crate::mock::{BugFlags, MockServer};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_FATAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "nirikshak", version, about = "Scenario-graph testing for REST APIs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every walk against the API and write a JSON Lines log.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Log path; defaults to `log` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "NIRIKSHAK_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Raise the steps ceiling (default 3).
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        setup_instances: Option<usize>,
    },
    /// Analyse a log into a JSON report and optionally an HTML page.
    Analyze {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        html: Option<PathBuf>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        /// Take analysis parameters from this run config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the scenario graph as JSON.
    Graph {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the bundled student API until interrupted.
    Mock {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Comma-separated bug flags, e.g. `getMissingReturns200,putWrongStatus`.
        #[arg(long, default_value = "")]
        bugs: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn config_error(e: impl Display) -> Failure {
    Failure { code: EXIT_CONFIG, message: e.to_string() }
}

fn fatal(e: impl Display) -> Failure {
    Failure { code: EXIT_FATAL, message: e.to_string() }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn cmd_run(
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    steps: Option<usize>,
    max_steps: Option<usize>,
    iterations: Option<usize>,
    setup_instances: Option<usize>,
) -> Result<(), Failure> {
    let LoadedConfig { config, suites, .. } = config::load(config_path).map_err(config_error)?;
    let out = out
        .or_else(|| config.log.as_ref().map(|p| config_path.parent().unwrap_or(Path::new(".")).join(p)))
        .ok_or_else(|| config_error("no log path: pass --out or set `log` in the config"))?;
    let mut rc = config.run_config();
    rc.seed = seed.unwrap_or(rc.seed);
    rc.steps = steps.unwrap_or(rc.steps);
    rc.max_steps = max_steps.unwrap_or(rc.max_steps);
    rc.iterations = iterations.unwrap_or(rc.iterations);
    rc.setup_instances = setup_instances.unwrap_or(rc.setup_instances);
    rc.validate().map_err(config_error)?;

    let mut transport = UreqTransport::new(&config.base_url, config.request_timeout());
    let mut hooks = CommandHooks {
        setup: config.hooks.setup.clone(),
        cleanup: config.hooks.cleanup.clone(),
        base_url: transport.base_url().to_owned(),
    };
    log::info!("running against {} (seed {})", config.base_url, rc.seed);
    let output = run(&rc, &suites, &mut transport, &mut hooks).map_err(|e| match e {
        RunError::Config(_) | RunError::Steps(_) => config_error(e),
        RunError::Pool { .. } | RunError::Transport { .. } => fatal(e),
    })?;
    for w in &output.warnings {
        log::warn!("{w}");
    }
    emit_log(&out, &output.records, &new_run_id()).map_err(config_error)?;
    let failed = output.records.iter().filter(|r| r.outcome == Outcome::Fail).count();
    eprintln!("{} tests, {failed} failed; log written to {}", output.records.len(), out.display());
    if !output.aborted_iterations.is_empty() {
        return Err(fatal(format!("setup failed in iteration(s) {:?}", output.aborted_iterations)));
    }
    Ok(())
}

fn cmd_analyze(
    log_path: &Path,
    out: &Path,
    html: Option<&Path>,
    eps: Option<f64>,
    min_pts: Option<usize>,
    config_path: Option<&Path>,
) -> Result<(), Failure> {
    let mut params = match config_path {
        Some(p) => config::load(p).map_err(config_error)?.config.analysis,
        None => AnalysisParams::default(),
    };
    params.eps = eps.unwrap_or(params.eps);
    params.min_pts = min_pts.unwrap_or(params.min_pts);
    let records = read_log(log_path).map_err(config_error)?;
    let report = analyze(&records, &params).map_err(config_error)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(out, &(json + "\n"))?;
    if let Some(html_path) = html {
        write_file(html_path, &crate::html::render(&report))?;
    }
    match &report.ratio {
        None => eprintln!("empty log: analysis skipped"),
        Some(r) => eprintln!(
            "{} tests, {} failed (ratio {:.4}){}",
            r.total,
            r.failed,
            r.fail_ratio,
            report.clusters.as_ref().map(|c| format!(", {} clusters", c.cluster_count())).unwrap_or_default()
        ),
    }
    Ok(())
}

fn cmd_graph(config_path: &Path, out: &Path) -> Result<(), Failure> {
    let loaded = config::load(config_path).map_err(config_error)?;
    let endpoints: Vec<_> = loaded.suites.iter().flat_map(|s| s.endpoints.iter().cloned()).collect();
    let graph = build_graph(enumerate_nodes(&endpoints));
    let json = serde_json::to_string_pretty(&graph.export()).expect("graph serializes");
    write_file(out, &(json + "\n"))?;
    eprintln!("{} nodes, {} edges", graph.nodes().len(), graph.edge_count());
    Ok(())
}

fn cmd_mock(port: u16, bugs: &str) -> Result<(), Failure> {
    let flags = BugFlags::parse_list(bugs).map_err(config_error)?;
    let server = MockServer::start(port, flags).map_err(fatal)?;
    eprintln!("mock student API listening on {}", server.url());
    loop {
        std::thread::park();
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            steps,
            max_steps,
            iterations,
            setup_instances,
        } => cmd_run(&config, out, seed, steps, max_steps, iterations, setup_instances),
        Command::Analyze {
            log,
            out,
            html,
            eps,
            min_pts,
            config,
        } => cmd_analyze(&log, &out, html.as_deref(), eps, min_pts, config.as_deref()),
        Command::Graph { config, out } => cmd_graph(&config, &out),
        Command::Mock { port, bugs } => cmd_mock(port, &bugs),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
