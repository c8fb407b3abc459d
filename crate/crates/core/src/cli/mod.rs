//! Command-line front end.
//!
//! Every subcommand reads its parameters from flags, optionally layered over
//! the `params` object of a JSON file given with `--config` (flags win), writes
//! its outputs into `--out`, and finishes with a `manifest.json` that lists
//! every produced file with its SHA-256 checksum.

mod commands;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::write_atomic;

pub use commands::{
    ConnArgs, DwtArgs, EvolveArgs, FiltersArgs, InitialState, MetricsArgs, MraArgs, NsformArgs, SynthArgs,
    WignerArgs,
};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "WAVELETON_THREADS";

#[derive(Debug, Parser)]
#[command(name = "waveleton", version, about = "Wavelet toolkit for phase-space dynamics")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "waveleton-out")]
    out: PathBuf,
    /// Seed for randomized inputs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Tolerance override `name=value` (repeatable).
    #[arg(long = "tol", global = true, value_parser = parse_tolerance)]
    tol: Vec<(String, f64)>,
    #[command(subcommand)]
    command: Command,
}

fn parse_tolerance(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|_| format!("bad number in {s:?}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print and save a wavelet filter.
    Filters(FiltersArgs),
    /// Periodic wavelet transform of a signal, optionally with a best packet basis.
    Dwt(DwtArgs),
    /// Per-level reconstructions of a demo signal.
    MraDemo(MraArgs),
    /// Connection coefficients of a derivative.
    ConnCoeffs(ConnArgs),
    /// Non-standard form of an operator and its sparsity.
    Nsform(NsformArgs),
    /// Wigner function of a wavefunction.
    WignerTransform(WignerArgs),
    /// Time evolution of a Wigner function.
    Evolve(EvolveArgs),
    /// Pattern synthesis from a coefficient matrix.
    Synth(SynthArgs),
    /// Localization and quantumness metrics of a stored grid.
    Metrics(MetricsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Filters(_) => "filters",
            Command::Dwt(_) => "dwt",
            Command::MraDemo(_) => "mra-demo",
            Command::ConnCoeffs(_) => "conn-coeffs",
            Command::Nsform(_) => "nsform",
            Command::WignerTransform(_) => "wigner-transform",
            Command::Evolve(_) => "evolve",
            Command::Synth(_) => "synth",
            Command::Metrics(_) => "metrics",
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub subcommand: Option<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub params: Option<Value>,
}

/// Fully resolved run configuration, echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub params: Value,
    pub out: PathBuf,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    pub(crate) fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    fn check_tolerances(&self, allowed: &[&str]) -> Result<()> {
        for (k, v) in &self.tolerances {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::BadParams(format!(
                    "unknown tolerance {k:?} for {} (known: {})",
                    self.subcommand,
                    allowed.join(", ")
                )));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::BadParams(format!("tolerance {k} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Record written at the end of every run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    /// Wall-clock seconds per phase; not covered by the determinism guarantee.
    pub timings: Vec<(String, f64)>,
    pub outputs: Vec<OutputEntry>,
}

/// Collects outputs and timings of one run.
pub(crate) struct RunContext {
    pub config: RunConfig,
    outputs: Vec<OutputEntry>,
    timings: Vec<(String, f64)>,
    clock: Instant,
}

impl RunContext {
    fn new(config: RunConfig) -> Self {
        RunContext {
            config,
            outputs: Vec::new(),
            timings: Vec::new(),
            clock: Instant::now(),
        }
    }

    /// Writes a file under the output directory and records its checksum.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.config.out.join(name), bytes)?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Closes the current timing phase.
    pub fn phase(&mut self, name: &str) {
        self.timings.push((name.to_string(), self.clock.elapsed().as_secs_f64()));
        self.clock = Instant::now();
    }

    fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: "waveleton".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: self.config,
            timings: self.timings,
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&manifest.config.out.join("manifest.json"), text.as_bytes())?;
        Ok(manifest)
    }
}

/// Worker threads allowed by a request and the environment cap.
pub fn thread_budget(requested: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    let want = requested.max(1);
    cap.map_or(want, |c| want.min(c))
}

/// Overlays `top` onto `base`, recursing into objects.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn resolve<T>(flags: &T, config: Option<&Value>) -> Result<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let mut merged = config.cloned().unwrap_or_else(|| Value::Object(Default::default()));
    if !merged.is_object() {
        return Err(Error::BadParams("config params must be a JSON object".into()));
    }
    merge(&mut merged, serde_json::to_value(flags)?);
    Ok(serde_json::from_value(merged)?)
}

fn is_validation_error(e: &Error) -> bool {
    !matches!(e, Error::Io(_) | Error::SolverDivergence(_) | Error::SingularSystem(_))
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code: 0 on success, 1 for invalid input, 2 for
/// failures while running.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if is_validation_error(&e) {
                1
            } else {
                2
            }
        }
    }
}

fn execute(cli: Cli) -> Result<RunManifest> {
    let file = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::BadParams(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<ConfigFile>(&text)?
        }
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    if let Some(s) = &file.subcommand {
        if s != name {
            return Err(Error::BadParams(format!("config is for {s:?}, not {name:?}")));
        }
    }
    let mut tolerances = file.tolerances.clone();
    tolerances.extend(cli.tol.iter().cloned());
    let out = if cli.out != Path::new("waveleton-out") {
        cli.out.clone()
    } else {
        file.out.clone().unwrap_or(cli.out.clone())
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let params = file.params.as_ref();
    macro_rules! dispatch {
        ($args:expr, $run:path, $tols:expr) => {{
            let resolved = resolve($args, params)?;
            let config = RunConfig {
                subcommand: name.to_string(),
                params: serde_json::to_value(&resolved)?,
                out,
                seed,
                tolerances,
            };
            config.check_tolerances($tols)?;
            let mut ctx = RunContext::new(config);
            $run(&resolved, &mut ctx)?;
            ctx.finish()
        }};
    }
    match &cli.command {
        Command::Filters(a) => dispatch!(a, commands::filters, &[]),
        Command::Dwt(a) => dispatch!(a, commands::dwt, &[]),
        Command::MraDemo(a) => dispatch!(a, commands::mra_demo, &["cutoff"]),
        Command::ConnCoeffs(a) => dispatch!(a, commands::conn_coeffs, &[]),
        Command::Nsform(a) => dispatch!(a, commands::nsform, &["threshold"]),
        Command::WignerTransform(a) => dispatch!(a, commands::wigner_transform, &[]),
        Command::Evolve(a) => dispatch!(a, commands::evolve, &["solver", "normalization"]),
        Command::Synth(a) => dispatch!(a, commands::synth, &["c_lo", "e_lo", "e_hi"]),
        Command::Metrics(a) => dispatch!(a, commands::metrics, &["c_lo", "e_lo", "e_hi"]),
    }
}
