//! Command-line front end: space descriptors, run records, the result cache,
//! and the `compute`, `sweep` and `verify` commands.
//!
//! Exit codes: 0 success, 1 a violated check or tension finding, 2 a parse or
//! argument error, 3 numerical non-convergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::{self, ConstantKind, EstimateResult};
use crate::norm_spaces::{NormedSpace, SpaceSpec};
use crate::optimizer::OptimizerConfig;
use crate::report::InequalityReport;
use crate::verifier;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CACHE_ENV: &str = "GEOCONST_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGED: i32 = 3;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("at byte {offset}: {message} (expected {expected})")]
pub struct SpaceParseError {
    pub offset: usize,
    pub message: String,
    pub expected: String,
}

fn parse_err(offset: usize, message: impl Into<String>, expected: &str) -> SpaceParseError {
    SpaceParseError { offset, message: message.into(), expected: expected.to_string() }
}

const SPACE_FORMS: &str = "l<q>:<dim>, wl<q>:<dim>:<w1,w2,...>, or poly:@<path>";

/// Exponent q starting at byte `at`: a number ≥ 1 or `inf`.
fn parse_q(text: &str, at: usize) -> Result<f64, SpaceParseError> {
    if text == "inf" {
        return Ok(f64::INFINITY);
    }
    let q: f64 = text.parse().map_err(|_| parse_err(at, format!("malformed exponent {text:?}"), "a number >= 1 or inf"))?;
    if !(q >= 1.0) || q.is_infinite() {
        return Err(parse_err(at, "exponent must be ≥ 1", "a number >= 1 or inf"));
    }
    Ok(q)
}

fn parse_dim(text: &str, at: usize) -> Result<usize, SpaceParseError> {
    let dim: usize = text.parse().map_err(|_| parse_err(at, format!("malformed dimension {text:?}"), "an integer >= 2"))?;
    if dim < 2 {
        return Err(parse_err(at, "dimension must be ≥ 2", "an integer >= 2"));
    }
    Ok(dim)
}

fn split_colon(text: &str, at: usize, what: &str) -> Result<(String, usize), SpaceParseError> {
    match text[at..].find(':') {
        Some(i) => Ok((text[at..at + i].to_string(), at + i + 1)),
        None => Err(parse_err(text.len(), format!("missing ':' after {what}"), "':'")),
    }
}

/// Parse a space descriptor: `l2:3`, `linf:2`, `l1.5:4`,
/// `wl2:2:1,4`, or `poly:@file.json` (a polyhedral vertex file).
pub fn parse_space(text: &str) -> Result<NormedSpace, SpaceParseError> {
    if let Some(rest) = text.strip_prefix("poly:") {
        let Some(path) = rest.strip_prefix('@') else {
            return Err(parse_err(5, "polyhedral spaces are read from a file", "'@' followed by a path"));
        };
        if path.is_empty() {
            return Err(parse_err(6, "empty path", "a file path"));
        }
        return load_polyhedral(Path::new(path)).map_err(|(m, e)| parse_err(6, m, e));
    }
    let (weighted, q_at) = if text.starts_with("wl") {
        (true, 2)
    } else if text.starts_with('l') {
        (false, 1)
    } else {
        return Err(parse_err(0, format!("unknown space {text:?}"), SPACE_FORMS));
    };
    let (q_text, dim_at) = split_colon(text, q_at, "the exponent")?;
    let q = parse_q(&q_text, q_at)?;
    let invalid = |offset: usize| move |e: crate::Error| parse_err(offset, e.to_string(), SPACE_FORMS);
    if !weighted {
        let dim = parse_dim(&text[dim_at..], dim_at)?;
        return NormedSpace::lp(q, dim).map_err(invalid(0));
    }
    let (dim_text, w_at) = split_colon(text, dim_at, "the dimension")?;
    let dim = parse_dim(&dim_text, dim_at)?;
    let mut weights = Vec::with_capacity(dim);
    let mut at = w_at;
    for part in text[w_at..].split(',') {
        let w: f64 = part
            .parse()
            .ok()
            .filter(|w: &f64| *w > 0.0 && w.is_finite())
            .ok_or_else(|| parse_err(at, format!("malformed weight {part:?}"), "a positive number"))?;
        weights.push(w);
        at += part.len() + 1;
    }
    if weights.len() != dim {
        return Err(parse_err(w_at, format!("{} weights for dimension {dim}", weights.len()), "one weight per coordinate"));
    }
    NormedSpace::weighted_lp(q, weights).map_err(invalid(w_at))
}

/// Read a `{"type": "polyhedral", "dim": n, "vertices": [...]}` file.
pub fn load_polyhedral(path: &Path) -> Result<NormedSpace, (String, &'static str)> {
    let text = fs::read_to_string(path).map_err(|e| (format!("cannot read {}: {e}", path.display()), "a readable file"))?;
    let spec: SpaceSpec =
        serde_json::from_str(&text).map_err(|e| (format!("invalid vertex JSON: {e}"), "a polyhedral vertex object"))?;
    let SpaceSpec::Polyhedral { dim, .. } = &spec else {
        return Err(("file does not describe a polyhedral space".into(), "\"type\": \"polyhedral\""));
    };
    if *dim < 2 {
        return Err(("dimension must be ≥ 2".into(), "an integer >= 2"));
    }
    NormedSpace::try_from(spec).map_err(|e| (e.to_string(), "a symmetric, full-rank vertex set"))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<ConstantKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    pub starts: usize,
    pub grid: usize,
    pub max_iterations: usize,
    pub extended_p: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Payload {
    Estimate(EstimateResult),
    Report(InequalityReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub command: String,
    /// The descriptor as given on the command line.
    pub space: String,
    pub parameters: Parameters,
    pub result: Payload,
    pub seed: u64,
    pub timestamp: String,
    pub tool_version: String,
    #[serde(default)]
    pub cached: bool,
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    command: &'a str,
    space: &'a SpaceSpec,
    parameters: &'a Parameters,
    seed: u64,
    tool_version: &'a str,
}

/// Content hash of everything that determines a run's payload. The space
/// enters by its full specification, so a vertex file is keyed by content.
pub fn cache_key(command: &str, space: &NormedSpace, parameters: &Parameters, seed: u64, tool_version: &str) -> String {
    let spec = space.spec();
    let material = KeyMaterial { command, space: &spec, parameters, seed, tool_version };
    let bytes = serde_json::to_vec(&material).expect("key material serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

/// A corrupt entry is logged and treated as a miss.
pub fn cache_lookup(dir: &Path, key: &str) -> Option<RunRecord> {
    let path = cache_path(dir, key);
    let text = fs::read_to_string(&path).ok()?;
    match serde_json::from_str::<RunRecord>(&text) {
        Ok(mut record) => {
            record.cached = true;
            Some(record)
        }
        Err(e) => {
            log::warn!("ignoring corrupt cache entry {}: {e}", path.display());
            None
        }
    }
}

/// Write-then-rename so concurrent writers never expose a partial file.
pub fn cache_store(dir: &Path, key: &str, record: &RunRecord) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
    let mut body = serde_json::to_vec_pretty(record).map_err(std::io::Error::other)?;
    body.push(b'\n');
    fs::write(&tmp, body)?;
    fs::rename(&tmp, cache_path(dir, key))
}

/// Grid points of `start:stop:step`. The last point is snapped to `stop`
/// when it lands within half a step of it; a step longer than the range
/// yields the start alone.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 1 {
        return parts[0].parse::<f64>().map(|v| vec![v]).map_err(|_| format!("malformed value {text:?}"));
    }
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("range {text:?} is not start:stop:step"));
    };
    let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("malformed number {s:?} in range"));
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0) {
        return Err("range step must be positive".into());
    }
    if stop < start {
        return Err("range stop is below its start".into());
    }
    let n = ((stop - start) / step).round() as usize;
    Ok((0..=n)
        .map(|i| {
            let t = start + i as f64 * step;
            if i == n && n > 0 && (t - stop).abs() <= 0.5 * step {
                stop
            } else {
                t
            }
        })
        .collect())
}

/// A comma-separated list of values or a single start:stop:step range.
fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    if text.contains(':') {
        return parse_range(text);
    }
    text.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| format!("malformed value {s:?}"))).collect()
}

#[derive(Debug, Parser)]
#[command(name = "geoconst", version, about = "Geometric constants of finite-dimensional normed spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate one constant and print a JSON run record.
    Compute(ComputeArgs),
    /// Estimate a constant over a parameter range and write CSV.
    Sweep(SweepArgs),
    /// Check the inequalities between MR_p and the other constants.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Space descriptor, e.g. l2:3, linf:2, wl2:2:1,4, poly:@file.json
    #[arg(long)]
    space: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Local searches per optimization.
    #[arg(long, default_value_t = 64)]
    starts: usize,
    /// Angle grid resolution per sphere in dimension 2.
    #[arg(long, default_value_t = 180)]
    grid: usize,
    /// Iteration budget of each local search.
    #[arg(long, default_value_t = 2000)]
    max_iterations: usize,
    /// Accept p outside [0, 1].
    #[arg(long)]
    extended_p: bool,
}

#[derive(Debug, Args)]
struct ComputeArgs {
    #[command(flatten)]
    common: Common,
    /// mr, dr, dw, delta, eps0, rho, or rho-prime
    #[arg(long)]
    constant: String,
    /// Exponent for mr
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    /// Distance for delta, in [0, 2]
    #[arg(long)]
    eps: Option<f64>,
    /// Step for rho, positive
    #[arg(long)]
    tau: Option<f64>,
    /// Result cache directory; caching is off when unset
    #[arg(long, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    /// Also write the record to this file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// mr, delta, or rho; the swept parameter must match
    #[arg(long)]
    constant: String,
    /// p range for mr, start:stop:step
    #[arg(long, allow_negative_numbers = true)]
    p: Option<String>,
    /// ε range for delta, start:stop:step
    #[arg(long)]
    eps: Option<String>,
    /// τ range for rho, start:stop:step
    #[arg(long)]
    tau: Option<String>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// p values (comma list or start:stop:step); default 0,0.25,0.5,0.75,1
    #[arg(long)]
    p: Option<String>,
    /// Result cache directory; caching is off when unset
    #[arg(long, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    /// Also write the record to this file
    #[arg(long)]
    output: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

impl Common {
    fn space(&self) -> Result<NormedSpace, Failure> {
        parse_space(&self.space).map_err(|e| usage(format!("--space {:?}: {e}", self.space)))
    }

    fn config(&self) -> Result<OptimizerConfig, Failure> {
        let config = OptimizerConfig {
            starts: self.starts,
            grid_resolution: self.grid,
            max_iterations: self.max_iterations,
            seed: self.seed,
            ..OptimizerConfig::default()
        };
        config.validate().map_err(|e| usage(e.to_string()))?;
        Ok(config)
    }
}

fn constant_kind(name: &str) -> Result<ConstantKind, Failure> {
    ConstantKind::parse(name).ok_or_else(|| usage(format!("unknown constant {name:?}; expected mr, dr, dw, delta, eps0, rho, or rho-prime")))
}

fn param_for(kind: ConstantKind, p: Option<f64>, eps: Option<f64>, tau: Option<f64>) -> Result<Option<f64>, Failure> {
    let (needed, flag) = match kind {
        ConstantKind::Mr => (p, "--p"),
        ConstantKind::Delta => (eps, "--eps"),
        ConstantKind::Rho => (tau, "--tau"),
        _ => return Ok(None),
    };
    needed.map(Some).ok_or_else(|| usage(format!("constant {} needs {flag}", kind.name())))
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn emit(record: &RunRecord, output: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(record).expect("run record serializes");
    text.push('\n');
    if let Some(path) = output {
        fs::write(path, &text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    out.write_all(text.as_bytes()).map_err(|e| usage(format!("cannot write output: {e}")))
}

/// Look up the cache, or run `compute` and store its record.
fn cached_run(
    command: &str,
    args: &Common,
    space: &NormedSpace,
    parameters: Parameters,
    cache_dir: Option<&Path>,
    compute: impl FnOnce() -> Result<Payload, Failure>,
) -> Result<RunRecord, Failure> {
    let key = cache_key(command, space, &parameters, args.seed, TOOL_VERSION);
    if let Some(dir) = cache_dir {
        if let Some(hit) = cache_lookup(dir, &key) {
            return Ok(hit);
        }
    }
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        space: args.space.clone(),
        parameters,
        result: compute()?,
        seed: args.seed,
        timestamp: timestamp(),
        tool_version: TOOL_VERSION.to_string(),
        cached: false,
    };
    if let Some(dir) = cache_dir {
        if let Err(e) = cache_store(dir, &key, &record) {
            log::warn!("cannot store cache entry in {}: {e}", dir.display());
        }
    }
    Ok(record)
}

fn compute(args: ComputeArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let space = args.common.space()?;
    let config = args.common.config()?;
    let kind = constant_kind(&args.constant)?;
    let param = param_for(kind, args.p, args.eps, args.tau)?;
    let parameters = Parameters {
        constant: Some(kind),
        p: args.p,
        eps: args.eps,
        tau: args.tau,
        p_grid: None,
        starts: args.common.starts,
        grid: args.common.grid,
        max_iterations: args.common.max_iterations,
        extended_p: args.common.extended_p,
    };
    let extended = args.common.extended_p;
    let record = cached_run("compute", &args.common, &space, parameters, args.cache_dir.as_deref(), || {
        constants::estimate(kind, &space, param, extended, &config)
            .map(Payload::Estimate)
            .map_err(|e| usage(e.to_string()))
    })?;
    emit(&record, args.output.as_deref(), out)?;
    match &record.result {
        Payload::Estimate(e) if !e.converged => Ok(EXIT_NONCONVERGED),
        _ => Ok(EXIT_OK),
    }
}

fn sweep(args: SweepArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let space = args.common.space()?;
    let config = args.common.config()?;
    let kind = constant_kind(&args.constant)?;
    let (range, flag) = match kind {
        ConstantKind::Mr => (args.p.as_deref(), "--p"),
        ConstantKind::Delta => (args.eps.as_deref(), "--eps"),
        ConstantKind::Rho => (args.tau.as_deref(), "--tau"),
        _ => return Err(usage(format!("constant {} has no parameter to sweep", kind.name()))),
    };
    let range = range.ok_or_else(|| usage(format!("sweeping {} needs {flag} start:stop:step", kind.name())))?;
    let points = parse_range(range).map_err(|e| usage(format!("{flag}: {e}")))?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["space", "constant", "p", "value", "converged", "seed"]).map_err(|e| usage(e.to_string()))?;
    let mut all_converged = true;
    for t in points {
        let est = constants::estimate(kind, &space, Some(t), args.common.extended_p, &config).map_err(|e| usage(e.to_string()))?;
        all_converged &= est.converged;
        writer
            .write_record([
                args.common.space.clone(),
                kind.name().to_string(),
                t.to_string(),
                est.value.to_string(),
                est.converged.to_string(),
                args.common.seed.to_string(),
            ])
            .map_err(|e| usage(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| usage(e.to_string()))?;
    match &args.output {
        Some(path) => fs::write(path, &bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?,
        None => out.write_all(&bytes).map_err(|e| usage(format!("cannot write output: {e}")))?,
    }
    Ok(if all_converged { EXIT_OK } else { EXIT_NONCONVERGED })
}

fn verify(args: VerifyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let space = args.common.space()?;
    let config = args.common.config()?;
    let grid = match &args.p {
        Some(text) => parse_grid(text).map_err(|e| usage(format!("--p: {e}")))?,
        None => verifier::DEFAULT_P_GRID.to_vec(),
    };
    let parameters = Parameters {
        p_grid: Some(grid.clone()),
        starts: args.common.starts,
        grid: args.common.grid,
        max_iterations: args.common.max_iterations,
        extended_p: args.common.extended_p,
        ..Parameters::default()
    };
    let record = cached_run("verify", &args.common, &space, parameters, args.cache_dir.as_deref(), || {
        verifier::verify_space(&space, &grid, &config).map(Payload::Report).map_err(|e| usage(e.to_string()))
    })?;
    emit(&record, args.output.as_deref(), out)?;
    match &record.result {
        Payload::Report(r) if !r.is_clean() => Ok(EXIT_VIOLATION),
        _ => Ok(EXIT_OK),
    }
}

/// Run the command line `args` (program name first), writing the primary
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Compute(a) => compute(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Verify(a) => verify(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_grammar() {
        assert_eq!(parse_space("l1:2").unwrap(), NormedSpace::lp(1.0, 2).unwrap());
        assert_eq!(parse_space("linf:2").unwrap(), NormedSpace::linf(2).unwrap());
        assert_eq!(parse_space("l1.5:4").unwrap().dim(), 4);
        assert_eq!(parse_space("wl2:2:1,4").unwrap(), NormedSpace::weighted_lp(2.0, vec![1.0, 4.0]).unwrap());
    }

    #[test]
    fn space_errors_carry_offsets() {
        let e = parse_space("l0.5:2").unwrap_err();
        assert_eq!(e.offset, 1);
        assert!(e.message.contains("exponent must be ≥ 1"));
        assert_eq!(parse_space("l2:1").unwrap_err().offset, 3);
        assert_eq!(parse_space("l2").unwrap_err().offset, 2);
        assert_eq!(parse_space("x2:2").unwrap_err().offset, 0);
        assert_eq!(parse_space("wl2:2:1,-3").unwrap_err().offset, 8);
        assert_eq!(parse_space("wl2:3:1,2").unwrap_err().offset, 6);
        let missing = parse_space("poly:@/nonexistent/octagon.json").unwrap_err();
        assert_eq!(missing.offset, 6);
        assert!(missing.message.contains("cannot read"));
        assert_eq!(parse_space("poly:octagon.json").unwrap_err().offset, 5);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:0.1").unwrap().len(), 11);
        assert_eq!(*parse_range("0:1:0.1").unwrap().last().unwrap(), 1.0);
        assert_eq!(parse_range("0:2:0.25").unwrap().len(), 9);
        assert_eq!(parse_range("0.5:1:5").unwrap(), vec![0.5]);
        assert_eq!(parse_range("0:1:0.6").unwrap(), vec![0.0, 0.6, 1.0]);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("0:1").is_err());
    }

    #[test]
    fn cache_key_covers_inputs() {
        let space = NormedSpace::lp(2.0, 2).unwrap();
        let params = Parameters { p: Some(0.5), starts: 64, grid: 180, max_iterations: 2000, ..Parameters::default() };
        let k = cache_key("compute", &space, &params, 1, "0.1.0");
        assert_eq!(k, cache_key("compute", &space, &params, 1, "0.1.0"));
        assert_ne!(k, cache_key("compute", &space, &params, 2, "0.1.0"));
        assert_ne!(k, cache_key("compute", &space, &params, 1, "0.1.1"));
        assert_ne!(k, cache_key("verify", &space, &params, 1, "0.1.0"));
        assert_eq!(k.len(), 64);
    }
}
