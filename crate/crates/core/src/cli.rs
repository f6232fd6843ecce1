//! Command-line front end: flag/config merging, worker pool, output files, exit codes.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, OverlayError};
use crate::harness::{self, ExperimentId, Insertion, RunConfig, RunReport, StrategyId};
use crate::overlay::{Distance, KnowledgeMode, UpdateOrder};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "geocast", version, about = "Geometric overlay, multicast tree and stability tree simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build and converge overlays; emit topology metrics.
    Overlay(Common),
    /// Build overlays and multicast trees from every (or --roots sampled) peer.
    Multicast(Common),
    /// Build lifetime-embedded overlays and their stability trees.
    Stability(Common),
    /// Run a named experiment sweep.
    Experiment(Common),
    /// Cross-check the overlay and multicast code against brute-force oracles (n <= 500).
    Verify(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Full-size sweeps.
    Standard,
    /// N <= 300, fewer seeds and grid points.
    Reduced,
}

/// Flags shared by every command. Each overrides the config-file key of the same (snake_case) name.
#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// Experiment id: fig1ab, fig1c, fig1de, overlay, multicast, stability, verify.
    #[arg(long, value_parser = parse_serde::<ExperimentId>)]
    pub id: Option<ExperimentId>,
    /// Flat JSON config whose keys mirror the flag names in snake_case.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Default values to start from [default: standard].
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Peer count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Upper coordinate bound.
    #[arg(long)]
    pub vmax: Option<f64>,
    /// Gossip broadcast radius in hops (>= 2).
    #[arg(long)]
    pub br: Option<usize>,
    /// Rounds a knowledge entry survives without being re-announced.
    #[arg(long)]
    pub freshness_rounds: Option<usize>,
    /// Neighbours per region for the hyperplane and k-closest strategies.
    #[arg(long)]
    pub k: Option<usize>,
    /// Neighbour selection: empty-rect, ortho-hp, gen-hp, k-closest.
    #[arg(long, value_parser = parse_serde::<StrategyId>)]
    pub strategy: Option<StrategyId>,
    /// Knowledge model: gossip, full.
    #[arg(long, value_parser = parse_serde::<KnowledgeMode>)]
    pub knowledge: Option<KnowledgeMode>,
    /// Insertion procedure: incremental, batch.
    #[arg(long, value_parser = parse_serde::<Insertion>)]
    pub insertion: Option<Insertion>,
    /// Distance for ranking candidates: l1, l2.
    #[arg(long, value_parser = parse_serde::<Distance>)]
    pub distance: Option<Distance>,
    /// 1-based coordinate that carries the embedded lifetime.
    #[arg(long)]
    pub time_coord_index: Option<usize>,
    /// Round budget per convergence [default: 10 x n].
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Reselection order within a round: synchronous, sequential.
    #[arg(long, value_parser = parse_serde::<UpdateOrder>)]
    pub update_order: Option<UpdateOrder>,
    /// Seeds per sweep cell.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Comma-separated dimensions to sweep.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Comma-separated peer counts to sweep.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Comma-separated K values to sweep.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Multicast roots per overlay, evenly spaced by id [default: all peers].
    #[arg(long)]
    pub roots: Option<usize>,
    /// Worker threads [default: available parallelism]. Does not affect output.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// CSV output path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path [default: the --out path with a .json extension; none when writing to stdout].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include wall time in the JSON report (makes the report non-reproducible).
    #[arg(long)]
    pub wall_time: bool,
}

fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Config-file contents; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(alias = "id")]
    pub experiment: Option<ExperimentId>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    #[serde(alias = "N")]
    pub n: Option<usize>,
    #[serde(alias = "D")]
    pub d: Option<usize>,
    #[serde(alias = "VMAX")]
    pub vmax: Option<f64>,
    #[serde(alias = "BR")]
    pub br: Option<usize>,
    pub freshness_rounds: Option<usize>,
    #[serde(alias = "K")]
    pub k: Option<usize>,
    pub strategy: Option<StrategyId>,
    #[serde(alias = "knowledge_mode")]
    pub knowledge: Option<KnowledgeMode>,
    pub insertion: Option<Insertion>,
    pub distance: Option<Distance>,
    pub time_coord_index: Option<usize>,
    pub max_rounds: Option<usize>,
    pub update_order: Option<UpdateOrder>,
    pub seeds: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub ns: Option<Vec<usize>>,
    pub ks: Option<Vec<usize>>,
    pub roots: Option<usize>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Everything needed to execute one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: RunConfig,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub wall_time: bool,
}

fn read_config(path: &Path) -> Result<ConfigFile, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Merges flags over the config file over preset defaults.
pub fn resolve(command: &Command) -> Result<Resolved, Error> {
    let (fixed, flags) = match command {
        Command::Overlay(c) => (Some(ExperimentId::Overlay), c),
        Command::Multicast(c) => (Some(ExperimentId::Multicast), c),
        Command::Stability(c) => (Some(ExperimentId::Stability), c),
        Command::Verify(c) => (Some(ExperimentId::Verify), c),
        Command::Experiment(c) => (None, c),
    };
    let file = match &flags.config {
        Some(p) => read_config(p)?,
        None => ConfigFile::default(),
    };
    merge(fixed, flags, file)
}

/// Resolves a JSON config object alone, as if passed with `--config` to `experiment`.
pub fn resolve_json(json: &str) -> Result<Resolved, Error> {
    let file: ConfigFile = serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
    merge(None, &Common::default(), file)
}

fn merge(fixed: Option<ExperimentId>, flags: &Common, file: ConfigFile) -> Result<Resolved, Error> {
    let experiment = match (fixed, flags.id.or(file.experiment)) {
        (Some(f), Some(id)) if f != id => {
            return Err(Error::Config(format!("experiment id {id} conflicts with the {f} command")));
        }
        (Some(f), _) => f,
        (None, Some(id)) => id,
        (None, None) => return Err(Error::Config("experiment requires --id".into())),
    };
    let preset = match (flags.preset, file.preset.as_deref()) {
        (Some(p), _) => p,
        (None, None | Some("standard")) => Preset::Standard,
        (None, Some("reduced")) => Preset::Reduced,
        (None, Some(other)) => return Err(Error::Config(format!("unknown preset {other:?}"))),
    };
    let mut c = match preset {
        Preset::Standard => RunConfig::new(experiment),
        Preset::Reduced => RunConfig::reduced(experiment),
    };
    macro_rules! layer {
        ($($field:ident),*) => {$(
            if let Some(v) = flags.$field.clone().or(file.$field.clone()) {
                c.$field = v;
            }
        )*};
    }
    layer!(
        seed,
        n,
        d,
        vmax,
        br,
        freshness_rounds,
        k,
        strategy,
        knowledge,
        insertion,
        distance,
        time_coord_index,
        update_order,
        seeds
    );
    macro_rules! layer_opt {
        ($($field:ident),*) => {$(
            if let Some(v) = flags.$field.clone().or(file.$field.clone()) {
                c.$field = Some(v);
            }
        )*};
    }
    layer_opt!(max_rounds, dims, ns, ks, roots);
    c.validate()?;
    let jobs = flags.jobs.or(file.jobs);
    if jobs == Some(0) {
        return Err(Error::Config("jobs must be >= 1".into()));
    }
    let out = flags.out.clone().or(file.out);
    let report = flags.report.clone().or(file.report).or_else(|| out.as_ref().map(|o| o.with_extension("json")));
    Ok(Resolved { config: c, jobs, out, report, wall_time: flags.wall_time })
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Geometry(_) | Error::Config(_) | Error::Stability(_) => "invalid_parameter",
        Error::Overlay(OverlayError::NonConvergence { .. }) => "non_convergence",
        Error::Overlay(_) => "overlay",
        Error::UnknownRoot(_) => "unknown_root",
        Error::Io { .. } => "io",
        Error::Json(_) => "json",
    }
}

fn exit_code(e: &Error) -> i32 {
    match error_kind(e) {
        "invalid_parameter" | "unknown_root" => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn report_error(err: &mut dyn Write, kind: &str, message: &str) {
    let json = serde_json::json!({ "error": kind, "message": message });
    let _ = writeln!(err, "{json}");
    let _ = writeln!(err, "geocast: {kind}: {message}");
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Runs a resolved invocation; returns whether every embedded assertion passed.
pub fn execute(r: &Resolved, stdout: &mut dyn Write) -> Result<bool, Error> {
    let started = Instant::now();
    let run = || harness::run_experiment(&r.config);
    let output = match r.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let wall = r.wall_time.then(|| started.elapsed().as_millis() as u64);
    let csv = harness::to_csv(&output.rows);
    match &r.out {
        Some(p) => write_file(p, &csv)?,
        None => stdout.write_all(csv.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })?,
    }
    if let Some(p) = &r.report {
        write_file(p, &RunReport::new(&r.config, &output, wall).to_json()?)?;
    }
    Ok(output.passed())
}

/// Parses `args` (including the program name), runs, and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(stdout, "{}", e.render());
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            let _ = writeln!(stderr, "{}", serde_json::json!({ "error": "usage", "message": first }));
            let _ = write!(stderr, "{}", e.render());
            return EXIT_USAGE;
        }
    };
    let resolved = match resolve(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            report_error(stderr, error_kind(&e), &e.to_string());
            return exit_code(&e);
        }
    };
    match execute(&resolved, stdout) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            let msg = match &resolved.report {
                Some(p) => format!("embedded assertions failed; see {}", p.display()),
                None => "embedded assertions failed".to_string(),
            };
            report_error(stderr, "assertion_failure", &msg);
            EXIT_FAILED
        }
        Err(e) => {
            report_error(stderr, error_kind(&e), &e.to_string());
            exit_code(&e)
        }
    }
}
