//! Command-line front end. Each subcommand is a thin adapter over the
//! library: arguments may come from flags, from a JSON `--config` object
//! whose keys are the long flag names, or from `-D key=value` overrides
//! (flags win over overrides, which win over the config file).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, ErrorClass, Result};
use crate::experiments::{configs_from_value, run_experiment};
use crate::function::{parse_set, FunctionSpec};
use crate::functionals::Thresholds;
use crate::integral_tests::{kernel_integral, monotone_pole_test, power_law_test, DEFAULT_TOL};
use crate::interval::IntervalSet;
use crate::rng::stream;
use crate::sde::{classify_sde_at, solve_with};
use crate::stable::{sample_path_with, GridSpec, KillingSpec, StableParams};
use crate::wiener::{build_example_set, wiener_sum, ShellSpec};

#[derive(Debug, Parser)]
#[command(
    name = "stable-sde",
    version,
    about = "Stable-driven SDEs dZ = σ(Z-) dX: simulation, time-change solutions, integral tests and classification"
)]
pub struct Cli {
    /// Seed of the counter-based random streams
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for experiments (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output file (default: standard output)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Override a configuration key, e.g. -D alpha=0.3 or -D thresholds.M=1e6
    #[arg(short = 'D', long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a stable path skeleton (CSV t,x)
    Simulate(SimulateArgs),
    /// Solve dZ = σ(Z-) dX by time change (CSV s,phi,z_value)
    Solve(SolveArgs),
    /// Existence/uniqueness classification from O(σ,α) and N(σ) (JSON)
    Classify(ClassifyArgs),
    /// Potential-kernel integral tests (JSON)
    Test(TestArgs),
    /// Wiener capacity series of a set (JSON)
    Wiener(WienerArgs),
    /// Run a Monte Carlo experiment config or sweep (CSV)
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Stability index in (0, 2]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Issuing point [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    pub z: Option<f64>,
    /// Time horizon [default: 1]
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Grid step [default: 0.001]
    #[arg(long)]
    pub step: Option<f64>,
    /// Grid spec as JSON, e.g. {"step":0.01,"refinement":{"kind":"jump_adapted"}}
    #[arg(long, value_name = "JSON")]
    pub grid: Option<String>,
    /// Killing rate q of an independent exponential lifetime
    #[arg(long)]
    pub killing: Option<f64>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Stability index in (0, 1)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Coefficient σ: inline spec, JSON, or @file
    #[arg(long)]
    pub sigma: Option<String>,
    /// Issuing point [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    pub z: Option<f64>,
    /// Driver time horizon [default: 1]
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Grid step [default: 0.001]
    #[arg(long)]
    pub step: Option<f64>,
    /// Grid spec as JSON (overrides --step)
    #[arg(long, value_name = "JSON")]
    pub grid: Option<String>,
    /// Level treated as numerically infinite [default: 1e9]
    #[arg(long = "big-m", value_name = "M")]
    #[serde(rename = "big-m")]
    pub big_m: Option<f64>,
    /// Escape radius [default: 1000]
    #[arg(long = "escape-radius", value_name = "R")]
    #[serde(rename = "escape-radius")]
    pub escape_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Stability index in (0, 1)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Coefficient σ: inline spec, JSON, or @file
    #[arg(long)]
    pub sigma: Option<String>,
    /// Extra points at which to report the local predicate
    #[arg(long, allow_negative_numbers = true, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Stability index in (0, 1)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Closed-form test for σ = |x|^β at its zero
    #[arg(long)]
    pub beta: Option<f64>,
    /// Integrand f: inline spec, JSON, or @file
    #[arg(long)]
    pub f: Option<String>,
    /// Coefficient σ; the integrand is σ^{-α}
    #[arg(long, conflicts_with = "f")]
    pub sigma: Option<String>,
    /// Kernel centre [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    pub z: Option<f64>,
    /// Integration domain, e.g. "[-1,1)" [default: whole line]
    #[arg(long)]
    pub domain: Option<String>,
    /// Radius of the monotone pole test around z
    #[arg(long, conflicts_with = "domain")]
    pub eps: Option<f64>,
    /// Absolute tolerance [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Stability index in (0, 1)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Set: "example2.2", "[a,b)", or a JSON list of pairs
    #[arg(long)]
    pub set: Option<String>,
    /// Last shell index (also the number of example blocks) [default: 200]
    #[arg(long)]
    pub nmax: Option<u32>,
    /// First shell index [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub nmin: Option<i32>,
    /// Shell centre [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    pub center: Option<f64>,
    /// Shell ratio λ > 1 [default: 2]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Keep only this many trailing partial sums in the output
    #[arg(long)]
    pub keep: Option<usize>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ExperimentArgs {
    /// Experiment config (one JSON object, or an array for a sweep)
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
}

/// Long help of the top-level command followed by every subcommand's.
pub fn help_text() -> String {
    let mut cmd = Cli::command();
    let mut out = cmd.render_long_help().to_string();
    for sub in cmd.get_subcommands_mut() {
        out.push_str(&format!("\n--- {} ---\n", sub.get_name()));
        out.push_str(
            &sub.clone()
                .bin_name(format!("stable-sde {}", sub.get_name()))
                .render_long_help()
                .to_string(),
        );
    }
    out
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on a
/// validation error, 2 on a runtime failure. Errors are written to
/// `stderr` as one JSON object.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return 0;
            }
            let _ = writeln!(
                stderr,
                "{}",
                serde_json::json!({"error": "usage", "message": e.render().to_string().trim_end()})
            );
            return 1;
        }
    };
    match dispatch(&cli) {
        Ok(bytes) => match write_output(cli.out.as_deref(), &bytes, stdout) {
            Ok(()) => 0,
            Err(e) => report(&e, stderr),
        },
        Err(e) => report(&e, stderr),
    }
}

fn report(e: &Error, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(
        stderr,
        "{}",
        serde_json::json!({"error": e.kind(), "message": e.to_string()})
    );
    match e.class() {
        ErrorClass::Validation => 1,
        ErrorClass::Runtime => 2,
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::io(format!("writing {}", p.display()), e)),
        None => stdout.write_all(bytes).map_err(|e| Error::io("writing to stdout", e)),
    }
}

/// Executes the parsed invocation and returns the bytes to emit.
pub fn dispatch(cli: &Cli) -> Result<Vec<u8>> {
    match &cli.command {
        Command::Simulate(a) => simulate(&resolve(a, a.config.as_deref(), &cli.overrides)?, cli),
        Command::Solve(a) => solve(&resolve(a, a.config.as_deref(), &cli.overrides)?, cli),
        Command::Classify(a) => classify(&resolve(a, a.config.as_deref(), &cli.overrides)?),
        Command::Test(a) => test(&resolve(a, a.config.as_deref(), &cli.overrides)?),
        Command::Wiener(a) => wiener(&resolve(a, a.config.as_deref(), &cli.overrides)?),
        Command::Experiment(a) => experiment(a, cli),
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Sets `key` (dotted for nesting) in every object of `doc`; the value is
/// parsed as JSON when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let targets: Vec<&mut Value> = match doc {
        Value::Array(items) => items.iter_mut().collect(),
        other => vec![other],
    };
    for target in targets {
        let mut node = target;
        let mut parts = key.split('.').peekable();
        while let Some(part) = parts.next() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("override {key:?}: `{part}` is not inside an object")))?;
            if parts.peek().is_none() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        }
    }
    Ok(())
}

/// Merges config file, overrides and explicit flags (in increasing priority).
fn resolve<A: Serialize + DeserializeOwned>(flags: &A, config: Option<&Path>, overrides: &[String]) -> Result<A> {
    let mut doc = match config {
        Some(p) => serde_json::from_str(&read_file(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => Value::Object(Map::new()),
    };
    if !doc.is_object() {
        return Err(Error::Config("a subcommand config must be a JSON object".into()));
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let explicit = serde_json::to_value(flags)?;
    let obj = doc.as_object_mut().expect("checked above");
    for (k, v) in explicit.as_object().into_iter().flatten() {
        if !v.is_null() {
            obj.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))
}

fn required<T: Copy>(v: Option<T>, name: &'static str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(name, "is required"))
}

/// Inline spec, JSON document, or `@path` to a JSON file.
pub fn function_arg(src: &str) -> Result<FunctionSpec> {
    match src.strip_prefix('@') {
        Some(path) => FunctionSpec::parse(&read_file(Path::new(path))?),
        None => FunctionSpec::parse(src),
    }
}

fn set_arg(src: &str) -> Result<IntervalSet> {
    parse_set(src).ok_or_else(|| Error::invalid("set", format!("cannot parse {src:?}")))
}

fn grid_arg(grid: Option<&str>, step: f64) -> Result<GridSpec> {
    match grid {
        Some(json) => serde_json::from_str(json).map_err(|e| Error::Config(format!("grid: {e}"))),
        None => Ok(GridSpec::uniform(step)),
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

fn simulate(a: &SimulateArgs, cli: &Cli) -> Result<Vec<u8>> {
    let params = StableParams::new(required(a.alpha, "alpha")?)?;
    let grid = grid_arg(a.grid.as_deref(), a.step.unwrap_or(1e-3))?;
    let killing = a.killing.map(KillingSpec::new).transpose()?;
    let mut rng = stream(cli.seed.unwrap_or(0), 0);
    let path = sample_path_with(
        &params,
        a.z.unwrap_or(0.0),
        a.horizon.unwrap_or(1.0),
        &grid,
        killing.as_ref(),
        &mut rng,
    )?;
    Ok(path.to_csv().into_bytes())
}

fn solve(a: &SolveArgs, cli: &Cli) -> Result<Vec<u8>> {
    let alpha = required(a.alpha, "alpha")?;
    let sigma = function_arg(
        a.sigma
            .as_deref()
            .ok_or_else(|| Error::invalid("sigma", "is required"))?,
    )?;
    let grid = grid_arg(a.grid.as_deref(), a.step.unwrap_or(1e-3))?;
    let defaults = Thresholds::default();
    let thresholds = Thresholds {
        big_m: a.big_m.unwrap_or(defaults.big_m),
        escape_radius: a.escape_radius.unwrap_or(defaults.escape_radius),
    };
    let mut rng = stream(cli.seed.unwrap_or(0), 0);
    let sol = solve_with(
        alpha,
        &sigma,
        a.z.unwrap_or(0.0),
        a.horizon.unwrap_or(1.0),
        &grid,
        thresholds,
        None,
        &mut rng,
    )?;
    Ok(sol.to_csv().into_bytes())
}

fn classify(a: &ClassifyArgs) -> Result<Vec<u8>> {
    let alpha = required(a.alpha, "alpha")?;
    let sigma = function_arg(
        a.sigma
            .as_deref()
            .ok_or_else(|| Error::invalid("sigma", "is required"))?,
    )?;
    json_bytes(&classify_sde_at(alpha, &sigma, &a.z)?)
}

fn test(a: &TestArgs) -> Result<Vec<u8>> {
    let alpha = required(a.alpha, "alpha")?;
    if let Some(beta) = a.beta {
        if a.f.is_some() || a.sigma.is_some() {
            return Err(Error::Config("--beta cannot be combined with --f/--sigma".into()));
        }
        return json_bytes(&power_law_test(alpha, beta)?);
    }
    let f = match (&a.f, &a.sigma) {
        (Some(f), None) => function_arg(f)?,
        (None, Some(s)) => function_arg(s)?.reciprocal_power(alpha)?,
        _ => return Err(Error::Config("give exactly one of --beta, --f, --sigma".into())),
    };
    let z = a.z.unwrap_or(0.0);
    let verdict = match a.eps {
        Some(eps) => monotone_pole_test(alpha, z, &f, eps)?,
        None => {
            let domain = match &a.domain {
                Some(d) => set_arg(d)?,
                None => IntervalSet::real_line(),
            };
            kernel_integral(alpha, z, &f, &domain, a.tol.unwrap_or(DEFAULT_TOL))?
        }
    };
    json_bytes(&verdict)
}

fn wiener(a: &WienerArgs) -> Result<Vec<u8>> {
    let alpha = required(a.alpha, "alpha")?;
    let n_max = a.nmax.unwrap_or(200);
    let src = a.set.as_deref().ok_or_else(|| Error::invalid("set", "is required"))?;
    let set = if src == "example2.2" {
        build_example_set(n_max)?
    } else {
        set_arg(src)?
    };
    let n_max = i32::try_from(n_max).map_err(|_| Error::invalid("nmax", "too large"))?;
    let spec = ShellSpec::new(
        a.center.unwrap_or(0.0),
        a.lambda.unwrap_or(2.0),
        a.nmin.unwrap_or(1),
        n_max,
    )?;
    json_bytes(&wiener_sum(alpha, &spec, &set)?.to_json(a.keep))
}

fn experiment(a: &ExperimentArgs, cli: &Cli) -> Result<Vec<u8>> {
    let mut doc: Value = serde_json::from_str(&read_file(&a.config)?)
        .map_err(|e| Error::Config(format!("{}: {e}", a.config.display())))?;
    for o in &cli.overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(seed) = cli.seed {
        apply_override(&mut doc, &format!("seed={seed}"))?;
    }
    let cfgs = configs_from_value(doc)?;
    let mut out = Vec::new();
    run_experiment(&cfgs, &mut out, cli.threads)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("stable-sde").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn classify_power_law() {
        let (code, out, _) = run_str(&["classify", "--alpha", "0.5", "--sigma", "power:|x|^1.5"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["unique_all"], true);
    }

    #[test]
    fn closed_form_test() {
        let (code, out, _) = run_str(&["test", "--alpha", "0.5", "--beta", "0.5"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["finiteness"], "finite");
        assert_eq!(v["value"], 8.0);
    }

    #[test]
    fn wiener_example() {
        let (code, out, _) = run_str(&["wiener", "--alpha", "0.5", "--set", "example2.2", "--nmax", "200"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["verdict"], "convergent");
    }

    #[test]
    fn exit_codes_and_error_json() {
        let (code, _, err) = run_str(&["bogus"]);
        assert_eq!(code, 1);
        assert_eq!(serde_json::from_str::<Value>(&err).unwrap()["error"], "usage");
        let (code, _, err) = run_str(&["test", "--alpha", "1.5", "--beta", "0.5"]);
        assert_eq!(code, 1);
        assert_eq!(
            serde_json::from_str::<Value>(&err).unwrap()["error"],
            "invalid_parameter"
        );
        let (code, _, err) = run_str(&["experiment", "--config", "/nonexistent/cfg.json"]);
        assert_eq!(code, 2);
        assert_eq!(serde_json::from_str::<Value>(&err).unwrap()["error"], "io");
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("experiment"));
    }

    #[test]
    fn overrides() {
        let mut doc = serde_json::json!({"alpha": 0.5, "thresholds": {"M": 1}});
        apply_override(&mut doc, "thresholds.R=5").unwrap();
        apply_override(&mut doc, "alpha=0.3").unwrap();
        apply_override(&mut doc, "sigma=power:|x|^2").unwrap();
        assert_eq!(
            doc,
            serde_json::json!({"alpha": 0.3, "sigma": "power:|x|^2", "thresholds": {"M": 1, "R": 5}})
        );
        assert!(apply_override(&mut doc, "novalue").is_err());
        let (code, out, _) = run_str(&["test", "-D", "alpha=0.5", "-D", "beta=0.5"]);
        assert_eq!(code, 0, "{out}");
        // explicit flags win over overrides
        let (_, out, _) = run_str(&["test", "--alpha", "0.5", "-D", "alpha=0.9", "--beta", "0"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["value"], 4.0);
    }
}
