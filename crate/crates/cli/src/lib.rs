//! Command-line front end for `dipole-cost`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 degenerate threshold, 4 numeric
//! or internal failure. Every failure prints one line on stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dipole_cost::config::{self, Params};
use dipole_cost::emit::{self, format_number, Format};
use dipole_cost::sweep::{self, SweepSpec};
use dipole_cost::{
    cost, exact, mc, threshold, Configuration, CostBreakdown, Error, Scenario,
    SystemSpec, Topology,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dipole-cost", version, about = "Retention time and cost analysis of coupled-dipole memories")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalFlags {
    /// Inverse temperature
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<String>,
    /// Permeability
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu: Option<String>,
    /// External field
    #[arg(long, global = true, allow_negative_numbers = true)]
    h: Option<String>,
    /// Coupling strength
    #[arg(long, global = true, allow_negative_numbers = true)]
    sf: Option<String>,
    /// Material cost rate per dipole
    #[arg(long, global = true, allow_negative_numbers = true)]
    cm: Option<String>,
    /// Replenishment cost per dipole per refresh
    #[arg(long, global = true, allow_negative_numbers = true)]
    cr: Option<String>,
    /// Coupling cost prefactor
    #[arg(long, global = true, allow_negative_numbers = true)]
    k: Option<String>,
    /// Coupling cost exponent on s_f
    #[arg(long, global = true, allow_negative_numbers = true)]
    m: Option<String>,
    /// Coupling cost exponent on C_M
    #[arg(long, global = true, allow_negative_numbers = true)]
    n: Option<String>,
    /// Monte Carlo seed
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Monte Carlo trial count
    #[arg(long, global = true)]
    trials: Option<String>,
    /// isolated, uncoupled3, line3 or triangle3
    #[arg(long, global = true)]
    topology: Option<String>,
    /// Data-loss rule: majority, all or any
    #[arg(long, global = true)]
    rule: Option<String>,
    /// Output format: csv, json or dat (tables); json for single results
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file; defaults to stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat key=value file supplying any of the flags above
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl GlobalFlags {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("beta", &self.beta),
            ("mu", &self.mu),
            ("h", &self.h),
            ("sf", &self.sf),
            ("cm", &self.cm),
            ("cr", &self.cr),
            ("k", &self.k),
            ("m", &self.m),
            ("n", &self.n),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("topology", &self.topology),
            ("rule", &self.rule),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Retention time of the selected topology
    Retention {
        #[arg(long, value_enum, default_value_t = RetentionMethod::Exact)]
        method: RetentionMethod,
    },
    /// Cost breakdown of a named scenario or of the selected topology
    Cost {
        #[command(subcommand)]
        target: CostTarget,
    },
    /// Compare the total cost of two configurations (s1..s6 or topology names)
    Compare { a: String, b: String },
    /// Critical replenishment cost between two configurations
    Threshold {
        #[arg(value_enum)]
        kind: ThresholdKind,
        /// First configuration for `generic`
        a: Option<String>,
        /// Second configuration for `generic`
        b: Option<String>,
    },
    /// Run a sweep described by a key=value configuration file
    Sweep { config_file: PathBuf },
    /// Reproduce the data of figure 1, 2 or 3
    Figures { number: u8 },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RetentionMethod {
    Exact,
    Mc,
}

#[derive(Debug, Subcommand)]
enum CostTarget {
    /// One of the six reference scenarios, s1..s6
    Scenario { id: String },
    /// The topology chosen with --topology at the given field and coupling
    Topology,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ThresholdKind {
    Single,
    Three,
    LineVsTriangle,
    Generic,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Domain(_) | Error::Capacity { .. } | Error::Parse(_) => {
            EXIT_VALIDATION
        }
        Error::DegenerateThreshold(_) => EXIT_DEGENERATE,
        Error::Model(_) | Error::Estimate(_) | Error::Numeric(_) => EXIT_NUMERIC,
    }
}

/// Failure inside the CLI itself: a library error or an I/O problem.
enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = Result<T, Failure>;

/// Parses `argv` (including the program name) and runs the command.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    let line = text.lines().next().unwrap_or("invalid arguments");
                    let _ = writeln!(err, "{line}");
                    EXIT_VALIDATION
                }
            };
        }
    };
    match run(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
        Err(Failure::Io(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_NUMERIC
        }
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Lib(Error::Validation(format!("cannot read {}: {e}", path.display()))))
}

/// Defaults, then the `--config` file (or sweep file), then explicit flags.
fn resolve_map(
    flags: &GlobalFlags,
    file: Option<&Path>,
) -> CliResult<std::collections::BTreeMap<String, String>> {
    let mut map = match file.or(flags.config.as_deref()) {
        Some(path) => config::parse_key_values(&read_file(path)?)?,
        None => Default::default(),
    };
    for (k, v) in flags.overrides() {
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn output_format(flags: &GlobalFlags, map: &std::collections::BTreeMap<String, String>) -> CliResult<Option<Format>> {
    if let Some(f) = flags.format.as_deref().or(map.get("format").map(String::as_str)) {
        return Ok(Some(f.parse()?));
    }
    let out = flags.out.clone().or_else(|| map.get("out").map(PathBuf::from));
    Ok(out
        .as_deref()
        .and_then(Path::extension)
        .and_then(|e| e.to_str())
        .and_then(|e| e.parse().ok()))
}

fn out_path(flags: &GlobalFlags, map: &std::collections::BTreeMap<String, String>) -> Option<PathBuf> {
    flags.out.clone().or_else(|| map.get("out").map(PathBuf::from))
}

fn write_text(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}{suffix}.{ext}"),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let sweep_file = match &cli.command {
        Command::Sweep { config_file } => Some(config_file.as_path()),
        _ => None,
    };
    let map = resolve_map(&cli.global, sweep_file)?;
    let format = output_format(&cli.global, &map)?;
    let out_file = out_path(&cli.global, &map);

    match &cli.command {
        Command::Sweep { .. } => {
            let mut map = map;
            map.remove("format");
            map.remove("out");
            let spec = SweepSpec::from_map(&map)?;
            emit_table(&sweep::run_sweep(&spec)?, format, out_file.as_deref(), out)
        }
        Command::Figures { number } => {
            let params = params_from(&map)?;
            let spec = sweep::figure_recipe(*number, params)?;
            emit_table(&sweep::run_sweep(&spec)?, format, out_file.as_deref(), out)
        }
        command => {
            let params = params_from(&map)?;
            params.validate()?;
            let json = matches!(format, Some(Format::Json));
            let text = match command {
                Command::Retention { method } => retention(&params, *method, json, err)?,
                Command::Cost { target } => cost_command(&params, target, json)?,
                Command::Compare { a, b } => compare(&params, a, b, json)?,
                Command::Threshold { kind, a, b } => {
                    threshold_command(&params, *kind, a.as_deref(), b.as_deref(), json)?
                }
                Command::Sweep { .. } | Command::Figures { .. } => unreachable!(),
            };
            write_text(out_file.as_deref(), &text, out)
        }
    }
}

fn params_from(map: &std::collections::BTreeMap<String, String>) -> CliResult<Params> {
    Ok(Params::from_map(map, &["format", "out"])?)
}

fn emit_table(
    table: &sweep::SweepTable,
    format: Option<Format>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let files = emit::emit(table, format.unwrap_or(Format::Csv))?;
    match path {
        Some(p) => {
            for f in &files {
                let target = match &f.suffix {
                    Some(s) => suffixed(p, s),
                    None => p.to_path_buf(),
                };
                write_text(Some(&target), &f.contents, out)?;
            }
            Ok(())
        }
        None => {
            // Blank-line separated blocks, one per curve.
            let joined: Vec<&str> = files.iter().map(|f| f.contents.as_str()).collect();
            write_text(None, &joined.join("\n\n"), out)
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Io(format!("json encoding failed: {e}")))
}

fn retention(params: &Params, method: RetentionMethod, json: bool, err: &mut dyn Write) -> CliResult<String> {
    let spec = params.system_spec()?;
    match method {
        RetentionMethod::Exact => {
            let r = exact::retention_time_exact(&spec, params.rule)?;
            if json {
                return to_json(&r);
            }
            Ok(format!("tau={}\nmethod=exact\n", format_number(r.tau)))
        }
        RetentionMethod::Mc => {
            let e = mc::estimate_retention(&spec, params.rule, &params.mc_config())?;
            if let Some(w) = e.warning() {
                let _ = writeln!(err, "warning: {w}");
            }
            if json {
                return to_json(&e);
            }
            Ok(format!(
                "tau={}\nstderr={}\nmethod=mc\ntrials={}\ntruncated={}\nseed={}\n",
                format_number(e.mean),
                format_number(e.stderr),
                e.trials_completed,
                e.trials_truncated,
                params.seed
            ))
        }
    }
}

/// A CLI configuration name: a scenario id or a topology name.
enum Named {
    Scenario(Scenario),
    Topology(SystemSpec),
}

fn resolve_named(params: &Params, name: &str) -> CliResult<Named> {
    if let Ok(s) = name.parse::<Scenario>() {
        return Ok(Named::Scenario(s));
    }
    match Topology::from_name(name, params.sf) {
        Ok(t) => Ok(Named::Topology(SystemSpec::new(t, params.h, params.beta))),
        Err(_) => Err(Failure::Lib(Error::Validation(format!(
            "unknown configuration `{name}` (expected s1..s6 or a topology name)"
        )))),
    }
}

fn named_cost(params: &Params, named: &Named) -> CliResult<CostBreakdown> {
    let p = params.cost_params();
    Ok(match named {
        Named::Scenario(s) => cost::scenario_cost(*s, &p, params.h, params.sf, params.beta)?,
        Named::Topology(spec) => cost::generalized_cost(spec, &p, params.rule)?,
    })
}

fn named_spec(params: &Params, named: &Named) -> SystemSpec {
    match named {
        Named::Scenario(s) => s.spec(params.h, params.sf, params.beta),
        Named::Topology(spec) => spec.clone(),
    }
}

fn breakdown_text(b: &CostBreakdown) -> String {
    format!(
        "material={}\ncoupling={}\nfield={}\nreplenishment={}\ntotal={}\ntau={}\n",
        format_number(b.material),
        format_number(b.coupling),
        format_number(b.field),
        format_number(b.replenishment),
        format_number(b.total),
        format_number(b.tau_used)
    )
}

fn cost_command(params: &Params, target: &CostTarget, json: bool) -> CliResult<String> {
    let b = match target {
        CostTarget::Scenario { id } => {
            let s: Scenario = id.parse()?;
            named_cost(params, &Named::Scenario(s))?
        }
        CostTarget::Topology => named_cost(params, &Named::Topology(params.system_spec()?))?,
    };
    if json {
        to_json(&b)
    } else {
        Ok(breakdown_text(&b))
    }
}

fn compare(params: &Params, a: &str, b: &str, json: bool) -> CliResult<String> {
    let cost_a = named_cost(params, &resolve_named(params, a)?)?;
    let cost_b = named_cost(params, &resolve_named(params, b)?)?;
    let verdict = if cost_a.total < cost_b.total {
        format!("{a} cheaper")
    } else if cost_b.total < cost_a.total {
        format!("{b} cheaper")
    } else {
        "tie".to_string()
    };
    if json {
        return to_json(&serde_json::json!({
            "a": { "name": a, "cost": cost_a },
            "b": { "name": b, "cost": cost_b },
            "difference": cost_a.total - cost_b.total,
            "verdict": verdict,
        }));
    }
    Ok(format!(
        "{a}.total={}\n{b}.total={}\ndifference={}\nverdict={verdict}\n",
        format_number(cost_a.total),
        format_number(cost_b.total),
        format_number(cost_a.total - cost_b.total)
    ))
}

fn threshold_command(
    params: &Params,
    kind: ThresholdKind,
    a: Option<&str>,
    b: Option<&str>,
    json: bool,
) -> CliResult<String> {
    let p = params.cost_params();
    let result = match kind {
        ThresholdKind::Single => threshold::critical_single(params.h, params.beta, params.mu)?,
        ThresholdKind::Three => threshold::critical_three_uncoupled(params.h, params.beta, params.mu)?,
        ThresholdKind::LineVsTriangle => {
            threshold::critical_line_vs_triangle(params.h, params.sf, params.beta, &p)?
        }
        ThresholdKind::Generic => {
            let (Some(a), Some(b)) = (a, b) else {
                return Err(Failure::Lib(Error::Validation(
                    "threshold generic needs two configurations, e.g. `threshold generic s5 s6`".into(),
                )));
            };
            let ca = Configuration {
                label: a.to_string(),
                spec: named_spec(params, &resolve_named(params, a)?),
                rule: params.rule,
            };
            let cb = Configuration {
                label: b.to_string(),
                spec: named_spec(params, &resolve_named(params, b)?),
                rule: params.rule,
            };
            threshold::generic_crossover(&ca, &cb, &p)?
        }
    };
    if json {
        return to_json(&result);
    }
    let mut text = format!(
        "c_r0={}\ncomparison={} vs {}\nregime_above={}\n",
        format_number(result.c_r0),
        result.comparison.0,
        result.comparison.1,
        result.regime_above
    );
    if let Some(note) = &result.note {
        text.push_str(&format!("note={note}\n"));
    }
    Ok(text)
}
