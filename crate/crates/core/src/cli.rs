//! Command-line front end.
//!
//! ```text
//! halfcavity amplitude --gamma 1 --td 1 --phi 0 --tmax 4 --steps 4096 --method both --out trace.csv
//! halfcavity classify  --gamma 1 --td 0.5 --phi 1.2
//! halfcavity threshold --phi 1.5707963268 --out -
//! halfcavity map --phi-points 361 --u-points 300 --u-max 3 --format svg --out fig.svg
//! halfcavity witness --gamma 1 --td 1 --phi 3 --probe e-g
//! halfcavity verify --profile fast
//! ```
//!
//! Exit codes: 0 on success, 1 on a numeric failure, 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::amplitude_series;
use crate::channel::{blp_witness, Probe};
use crate::classifier::{
    classify, classify_bruteforce, region_map, threshold_at, threshold_curve, DEFAULT_THRESHOLD_TOL,
    DEFAULT_U_MAX,
};
use crate::dde::{integrate, IntegratorConfig, MIN_STEPS_PER_DELAY};
use crate::output::{self, AmplitudeColumns, AmplitudeRow};
use crate::verify::{self, Profile};
use crate::{Error, Params, TimeGrid};

/// Environment variable that overrides `--jobs`.
pub const JOBS_ENV: &str = "HALFCAVITY_JOBS";

#[derive(Debug, Parser)]
#[command(name = "halfcavity", version, about = "Emission dynamics of an atom in front of a mirror")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample ε(t) from the series solution and/or the delay-equation integrator.
    Amplitude(AmplitudeArgs),
    /// Markovianity verdict on t ∈ [0, 2 t_d].
    Classify(ClassifyArgs),
    /// Threshold Γ t_d at one phase or along a phase grid.
    Threshold(ThresholdArgs),
    /// Verdicts on a (φ, Γ t_d) grid.
    Map(MapArgs),
    /// Trace-distance backflow witness.
    Witness(WitnessArgs),
    /// Run the built-in self-check suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Decay rate Γ (≥ 0).
    #[arg(long, allow_negative_numbers = true)]
    gamma: f64,
    /// Delay t_d (≥ 0).
    #[arg(long, allow_negative_numbers = true)]
    td: f64,
    /// Round-trip phase φ.
    #[arg(long, allow_negative_numbers = true)]
    phi: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<Params, Failure> {
        Params::new(self.gamma, self.td, self.phi).map_err(|e| {
            let flag = match e {
                Error::NonFiniteField("td") | Error::NegativeDelay(_) => "--td",
                Error::NonFiniteField("phi") => "--phi",
                _ => "--gamma",
            };
            Failure::usage(flag, e)
        })
    }
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: String,
    /// Output format (default depends on the command).
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct JobsArgs {
    /// Worker threads (default: logical processors; HALFCAVITY_JOBS overrides).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Analytic,
    Dde,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProbeArg {
    PlusMinus,
    EG,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Fast,
    Full,
}

#[derive(Debug, Args)]
struct AmplitudeArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// End of the sampled interval.
    #[arg(long)]
    tmax: f64,
    /// Number of steps over [0, tmax].
    #[arg(long, default_value_t = 4096)]
    steps: usize,
    #[arg(long, value_enum, default_value = "analytic")]
    method: MethodArg,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Classify by scanning d|ε|²/dt on this many points instead.
    #[arg(long, value_name = "N")]
    bruteforce: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("phase").required(true).args(["phi", "phi_points"]))]
struct ThresholdArgs {
    /// Single phase.
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    /// Uniform phase grid on [0, 2π].
    #[arg(long)]
    phi_points: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_U_MAX)]
    u_max: f64,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    jobs: JobsArgs,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long, default_value_t = 361)]
    phi_points: usize,
    #[arg(long, default_value_t = 300)]
    u_points: usize,
    #[arg(long, default_value_t = DEFAULT_U_MAX)]
    u_max: f64,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    jobs: JobsArgs,
}

#[derive(Debug, Args)]
struct WitnessArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "plus-minus")]
    probe: ProbeArg,
    #[arg(long, default_value_t = 4096)]
    n_steps: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    profile: ProfileArg,
    #[command(flatten)]
    jobs: JobsArgs,
}

/// Reason a command did not produce output.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn usage(flag: &str, msg: impl std::fmt::Display) -> Self {
        Failure::Usage(format!("invalid value for '{flag}': {msg}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Numeric(format!("write failed: {e}"))
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stderr, "{e}");
                    2
                }
                _ => {
                    let _ = writeln!(stderr, "{}", one_line(&e));
                    2
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Verify(args) => run_verify(&args, stdout),
        command => execute(command).and_then(|(out, text)| emit(&out, &text, stdout)).map(|_| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Numeric(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

/// First line of a clap error, completed with the offending flags when the
/// line itself ends before naming them.
fn one_line(e: &clap::Error) -> String {
    let text = e.to_string();
    let first = text.lines().next().unwrap_or("error: invalid usage").trim_end();
    if !first.ends_with(':') {
        return first.to_owned();
    }
    let names = match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(name)) => name.clone(),
        Some(ContextValue::Strings(names)) => names.join(", "),
        _ => text.lines().nth(1).unwrap_or("").trim().to_owned(),
    };
    format!("{first} {names}")
}

fn emit(path: &str, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    if path == "-" {
        stdout.write_all(text.as_bytes())?;
        stdout.flush()?;
    } else {
        fs::write(path, text).map_err(|e| Failure::Numeric(format!("cannot write {path}: {e}")))?;
    }
    Ok(())
}

/// Runs `f` on a pool sized by `HALFCAVITY_JOBS`, then `--jobs`, then the
/// rayon default.
fn with_jobs<R: Send>(jobs: &JobsArgs, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    let threads = match std::env::var(JOBS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => return Err(Failure::usage(JOBS_ENV, format!("expected a positive integer, got '{v}'"))),
        },
        Err(_) => match jobs.jobs {
            Some(0) => return Err(Failure::usage("--jobs", "must be at least 1")),
            other => other,
        },
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Numeric(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn format_or(out: &OutArgs, default: Format, svg_allowed: bool) -> Result<Format, Failure> {
    let format = out.format.unwrap_or(default);
    if format == Format::Svg && !svg_allowed {
        return Err(Failure::usage("--format", "svg is only available for map and threshold"));
    }
    Ok(format)
}

fn execute(command: Command) -> Result<(String, String), Failure> {
    match command {
        Command::Amplitude(a) => amplitude(&a).map(|s| (a.out.out, s)),
        Command::Classify(a) => {
            let p = a.params.params()?;
            let format = format_or(&a.out, Format::Json, false)?;
            let verdict = match a.bruteforce {
                Some(n) if n < 64 => return Err(Failure::usage("--bruteforce", "needs at least 64 points")),
                Some(_) if p.t_delay == 0.0 => {
                    return Err(Failure::usage("--bruteforce", "requires --td > 0"));
                }
                Some(n) => classify_bruteforce(&p, n)?,
                None => classify(&p)?,
            };
            let text = match format {
                Format::Csv => output::verdict_csv(&p, &verdict),
                _ => output::verdict_json(&p, &verdict),
            };
            Ok((a.out.out, text))
        }
        Command::Threshold(a) => {
            let format = format_or(&a.out, Format::Json, true)?;
            if !(a.tol > 0.0 && a.tol.is_finite()) {
                return Err(Failure::usage("--tol", "must be positive"));
            }
            if !(a.u_max > 0.0 && a.u_max.is_finite()) {
                return Err(Failure::usage("--u-max", "must be positive"));
            }
            let curve = match (a.phi, a.phi_points) {
                (Some(phi), _) if !phi.is_finite() => return Err(Failure::usage("--phi", "must be finite")),
                (Some(phi), _) => vec![threshold_at(phi, a.tol, a.u_max)?],
                (None, Some(n)) if n < 2 => return Err(Failure::usage("--phi-points", "needs at least 2 points")),
                (None, Some(n)) => {
                    let axis = TimeGrid::axis(0.0, std::f64::consts::TAU, n)?;
                    with_jobs(&a.jobs, || threshold_curve(&axis, a.tol, a.u_max))??
                }
                (None, None) => return Err(Failure::usage("--phi", "one of --phi or --phi-points is required")),
            };
            let text = match format {
                Format::Csv => output::threshold_csv(&curve),
                Format::Json => output::threshold_json(&curve),
                Format::Svg => output::threshold_svg(&curve, a.u_max),
            };
            Ok((a.out.out, text))
        }
        Command::Map(a) => {
            let format = format_or(&a.out, Format::Csv, true)?;
            if a.phi_points < 2 {
                return Err(Failure::usage("--phi-points", "needs at least 2 points"));
            }
            if a.u_points < 2 {
                return Err(Failure::usage("--u-points", "needs at least 2 points"));
            }
            if !(a.u_max > 0.0 && a.u_max.is_finite()) {
                return Err(Failure::usage("--u-max", "must be positive"));
            }
            let text = with_jobs(&a.jobs, || -> Result<String, Error> {
                let map = region_map(a.phi_points, a.u_points, a.u_max)?;
                Ok(match format {
                    Format::Csv => output::map_csv(&map),
                    Format::Json => output::map_json(&map),
                    Format::Svg => {
                        let curve = threshold_curve(&map.phi_axis, DEFAULT_THRESHOLD_TOL, a.u_max)?;
                        output::map_svg(&map, &curve)
                    }
                })
            })??;
            Ok((a.out.out, text))
        }
        Command::Witness(a) => {
            let p = a.params.params()?;
            let format = format_or(&a.out, Format::Json, false)?;
            if a.n_steps < crate::channel::MIN_WITNESS_STEPS {
                return Err(Failure::usage(
                    "--n-steps",
                    format!("needs at least {}", crate::channel::MIN_WITNESS_STEPS),
                ));
            }
            let probe = match a.probe {
                ProbeArg::PlusMinus => Probe::PlusMinus,
                ProbeArg::EG => Probe::ExcitedGround,
            };
            let report = blp_witness(&p, probe, a.n_steps)?;
            let text = match format {
                Format::Csv => output::witness_csv(&p, probe, a.n_steps, &report),
                _ => output::witness_json(&p, probe, a.n_steps, &report),
            };
            Ok((a.out.out, text))
        }
        Command::Verify(_) => unreachable!("verify is dispatched separately"),
    }
}

fn amplitude(a: &AmplitudeArgs) -> Result<String, Failure> {
    let p = a.params.params()?;
    let format = format_or(&a.out, Format::Csv, false)?;
    if !(a.tmax > 0.0 && a.tmax.is_finite()) {
        return Err(Failure::usage("--tmax", "must be positive"));
    }
    if a.steps == 0 {
        return Err(Failure::usage("--steps", "must be at least 1"));
    }
    let (rows, columns): (Vec<AmplitudeRow>, AmplitudeColumns) = match a.method {
        MethodArg::Analytic => {
            let grid = TimeGrid::new(0.0, a.tmax, a.steps + 1)?;
            let rows = grid
                .iter()
                .map(|t| Ok((t, Some(amplitude_series(&p, t)?), None)))
                .collect::<Result<_, Error>>()?;
            (rows, AmplitudeColumns::Analytic)
        }
        method => {
            let trace = integrate(&p, &IntegratorConfig::new(a.tmax).with_steps(steps_per_delay(&p, a)?))?;
            let both = method == MethodArg::Both;
            let rows = trace
                .iter()
                .map(|(t, d)| {
                    let analytic = if both { Some(amplitude_series(&p, t)?) } else { None };
                    Ok((t, analytic, Some(d)))
                })
                .collect::<Result<_, Error>>()?;
            (rows, if both { AmplitudeColumns::Both } else { AmplitudeColumns::Dde })
        }
    };
    Ok(match format {
        Format::Json => output::amplitude_json(&p, &rows),
        _ => output::amplitude_csv(columns, &rows),
    })
}

/// Integrator steps per delay so that the `--steps` grid lands on the
/// integrator nodes.
fn steps_per_delay(p: &Params, a: &AmplitudeArgs) -> Result<usize, Failure> {
    if p.t_delay == 0.0 {
        if a.steps < MIN_STEPS_PER_DELAY {
            return Err(Failure::usage("--steps", format!("needs at least {MIN_STEPS_PER_DELAY}")));
        }
        return Ok(a.steps);
    }
    let exact = a.steps as f64 * p.t_delay / a.tmax;
    let nearest = exact.round();
    if (exact - nearest).abs() > 1e-9 * exact.max(1.0) || nearest < MIN_STEPS_PER_DELAY as f64 {
        return Err(Failure::usage(
            "--steps",
            format!("steps * td / tmax must be an integer of at least {MIN_STEPS_PER_DELAY} (got {exact})"),
        ));
    }
    Ok(nearest as usize)
}

fn run_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let profile = match a.profile {
        ProfileArg::Fast => Profile::Fast,
        ProfileArg::Full => Profile::Full,
    };
    let report = with_jobs(&a.jobs, || verify::run(profile))?;
    stdout.write_all(report.render().as_bytes())?;
    stdout.flush()?;
    Ok(if report.all_passed() { 0 } else { 1 })
}
