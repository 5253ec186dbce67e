//! `ampcode` — command-line front end for the amplitude-coding toolkit.
//!
//! Every run resolves its flags (and optional config file) into a
//! [`runspec::RunSpec`], executes it, prints a human summary to stdout, and
//! — when `--out DIR` is given — writes the data files plus a
//! `manifest.json` recording the resolved spec. `--from-manifest FILE`
//! replays a recorded spec and reproduces the output files byte for byte.
//!
//! Angles are radians everywhere; `--degrees` converts flag values (never
//! config-file values) at the parse boundary and nowhere else.

mod config;
mod output;
mod runspec;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};

use ampcode::{
    Axis, CorrelationMode, DetectionModel, DoubleConfig64, Encoding64, ScanGrid64, ScanParam,
    Set, SingleConfig64,
};

use output::{read_manifest, write_outputs, CliError, Manifest, Result};
use runspec::RunSpec;

#[derive(Parser)]
#[command(name = "ampcode", version, about = "Probability-amplitude codeword transfer: simulation and verification")]
struct Cli {
    /// RNG seed for stochastic commands (overrides a config file's seed).
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Write output files and a manifest.json into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Cap the worker thread count. Results are identical at any value.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Interpret angle flags (--omega, --alpha, --theta-*, axis bounds) as
    /// degrees. Config files are always radians.
    #[arg(long, global = true)]
    degrees: bool,

    /// Replay a recorded run instead of giving a subcommand. Outputs go to
    /// --out if given, else back beside the manifest.
    #[arg(long, global = true, value_name = "FILE")]
    from_manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

/// Detector/source angle flags shared by the double-transfer commands.
/// `--config FILE` (key=value or JSON) replaces all of them when present.
#[derive(Args)]
struct DoubleFlags {
    /// Config file with the angle/mode fields; overrides the angle flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Source angle of the α codeword set.
    #[arg(long, default_value_t = 0.0)]
    theta_alpha: f64,
    /// Source angle of the β codeword set.
    #[arg(long, default_value_t = 0.0)]
    theta_beta: f64,
    /// Bob's detector angle for set A.
    #[arg(long, default_value_t = 0.0)]
    theta_b_a: f64,
    /// Bob's detector angle for set B.
    #[arg(long, default_value_t = 0.0)]
    theta_b_b: f64,
    /// Charley's detector angle for set A.
    #[arg(long, default_value_t = 0.0)]
    theta_c_a: f64,
    /// Charley's detector angle for set B.
    #[arg(long, default_value_t = 0.0)]
    theta_c_b: f64,
    /// Correlation model: contextual | local.
    #[arg(long, default_value = "contextual")]
    mode: String,
    /// Probability that a party measures set A on a given event.
    #[arg(long, default_value_t = 0.5)]
    set_choice_prob: f64,
}

impl DoubleFlags {
    fn resolve(&self, degrees: bool) -> Result<DoubleConfig64> {
        let cfg = if let Some(path) = &self.config {
            config::load::<DoubleConfig64>(path)?
        } else {
            DoubleConfig64 {
                theta_alpha: rad(self.theta_alpha, degrees),
                theta_beta: rad(self.theta_beta, degrees),
                theta_b_a: rad(self.theta_b_a, degrees),
                theta_b_b: rad(self.theta_b_b, degrees),
                theta_c_a: rad(self.theta_c_a, degrees),
                theta_c_b: rad(self.theta_c_b, degrees),
                mode: parse_mode(&self.mode)?,
                set_choice_prob: self.set_choice_prob,
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the amplitude-encoded state of a codeword distribution.
    Encode {
        /// Comma-separated probabilities, e.g. 0.25,0.75.
        #[arg(long, value_delimiter = ',', required = true)]
        probs: Vec<f64>,
    },

    /// Fisher information and the Cramér–Rao bound per codeword.
    Fisher {
        /// Encoding family: amplitude | identity | power:k.
        #[arg(long, default_value = "amplitude")]
        encoding: String,
        /// Comma-separated parameter values to evaluate at.
        #[arg(long, value_delimiter = ',', required = true)]
        omega: Vec<f64>,
        /// Sample count assumed in the variance bound.
        #[arg(long, default_value_t = 100)]
        n: u64,
    },

    /// Repeated single-codeword transfers: counts, p̂, and ω̂ per trial.
    SimulateSingle {
        /// Config file (fields p, encoding, n, trials, seed); overrides
        /// the flags below.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Codeword distribution to transfer.
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        /// Samples per trial.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Independent trials.
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Parametrization for ω̂: amplitude | identity | power:k.
        #[arg(long, default_value = "amplitude")]
        encoding: String,
    },

    /// Estimator variance vs sample count against the 1/(4n) law.
    ErrorScaling {
        /// Number of codewords, transferred as the uniform distribution.
        #[arg(long, conflicts_with = "probs")]
        m: Option<usize>,
        /// Explicit distribution instead of --m.
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        /// Sample counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "1000,2000,10000")]
        n: Vec<u64>,
        /// Trials per sample count.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },

    /// Mean photodetector click rate behind a polarizer at angle α.
    Laser {
        /// Polarizer angle in [0, π/2].
        #[arg(long)]
        alpha: f64,
        /// Photons to simulate.
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Detection law: cos2 (squared amplitude) | sin (textbook figure).
        #[arg(long, default_value = "cos2")]
        model: String,
    },

    /// Sample a double transfer: Bob and Charley, two codeword sets.
    SimulateDouble {
        #[command(flatten)]
        flags: DoubleFlags,
        /// Events to sample.
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
    },

    /// Show that Charley's detector angle cannot move Bob's marginal.
    NoSignaling {
        #[command(flatten)]
        flags: DoubleFlags,
        /// Codeword set Bob measures: A | B.
        #[arg(long, default_value = "A")]
        set: String,
        /// θ_c grid points across [0, π].
        #[arg(long, default_value_t = 100)]
        grid_points: usize,
        /// Events for the sampled marginal.
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
    },

    /// Scan ΔS over detector angles and summarize inequality violations.
    ScanBell {
        #[command(flatten)]
        flags: DoubleFlags,
        /// `default` = θ_bA × θ_cA over [0, π]², 101 steps per side.
        #[arg(long, default_value = "default")]
        grid: String,
        /// Custom axis `param:lo:hi:steps` (repeat for two axes). Params:
        /// theta_alpha, theta_beta, theta_b_a, theta_b_b, theta_c_a,
        /// theta_c_b.
        #[arg(long, action = ArgAction::Append, value_name = "SPEC")]
        axis: Vec<String>,
        /// Also estimate ΔS by Monte Carlo with this many events per point.
        #[arg(long, value_name = "EVENTS")]
        mc_n: Option<u64>,
        /// Render the scan as an SVG heatmap (two-axis scans only).
        #[arg(long)]
        svg: bool,
    },

    /// Run the invariant suite; exit 0 iff every property passes.
    Verify {
        /// Only run properties whose module::name contains this substring.
        #[arg(long, value_name = "FILTER")]
        only: Option<String>,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

fn rad(x: f64, degrees: bool) -> f64 {
    if degrees {
        x.to_radians()
    } else {
        x
    }
}

fn parse_mode(s: &str) -> Result<CorrelationMode> {
    match s {
        "contextual" => Ok(CorrelationMode::Contextual),
        "local" => Ok(CorrelationMode::Local),
        _ => Err(CliError::Invalid(format!(
            "unknown mode `{s}` (expected contextual or local)"
        ))),
    }
}

fn parse_set(s: &str) -> Result<Set> {
    match s {
        "A" | "a" => Ok(Set::A),
        "B" | "b" => Ok(Set::B),
        _ => Err(CliError::Invalid(format!("unknown set `{s}` (expected A or B)"))),
    }
}

fn parse_encoding(s: &str) -> Result<Encoding64> {
    serde_json::from_value(config::encoding_value(s)).map_err(|_| {
        CliError::Invalid(format!(
            "unknown encoding `{s}` (expected amplitude, identity, or power:k)"
        ))
    })
}

fn parse_model(s: &str) -> Result<DetectionModel> {
    match s {
        "cos2" | "cos_squared" => Ok(DetectionModel::CosSquared),
        "sin" | "textbook_sin" => Ok(DetectionModel::TextbookSin),
        _ => Err(CliError::Invalid(format!(
            "unknown model `{s}` (expected cos2 or sin)"
        ))),
    }
}

fn parse_axis(spec: &str, degrees: bool) -> Result<Axis<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [param, lo, hi, steps] = parts.as_slice() else {
        return Err(CliError::Invalid(format!(
            "axis `{spec}` must be param:lo:hi:steps"
        )));
    };
    let param: ScanParam = param.parse().map_err(|e: ampcode::Error| CliError::Invalid(e.to_string()))?;
    let lo: f64 = lo
        .parse()
        .map_err(|_| CliError::Invalid(format!("axis `{spec}`: bad lo `{lo}`")))?;
    let hi: f64 = hi
        .parse()
        .map_err(|_| CliError::Invalid(format!("axis `{spec}`: bad hi `{hi}`")))?;
    let steps: usize = steps
        .parse()
        .map_err(|_| CliError::Invalid(format!("axis `{spec}`: bad steps `{steps}`")))?;
    Ok(Axis::new(param, rad(lo, degrees), rad(hi, degrees), steps)?)
}

/// Turn parsed flags into the serializable spec that actually runs.
fn resolve(cmd: Command, seed: Option<u64>, degrees: bool) -> Result<RunSpec> {
    let seed_or = |fallback: u64| seed.unwrap_or(fallback);
    Ok(match cmd {
        Command::Encode { probs } => RunSpec::Encode { probs },
        Command::Fisher { encoding, omega, n } => RunSpec::Fisher {
            encoding: parse_encoding(&encoding)?,
            omegas: omega.into_iter().map(|w| rad(w, degrees)).collect(),
            n,
        },
        Command::SimulateSingle { config, probs, n, trials, encoding } => {
            let cfg = match (config, probs) {
                (Some(path), None) => {
                    let mut cfg = config::load::<SingleConfig64>(&path)?;
                    if let Some(s) = seed {
                        cfg.seed = s;
                    }
                    cfg
                }
                (None, Some(p)) => SingleConfig64 {
                    p: ampcode::ProbabilityVector64::new(p)?,
                    encoding: parse_encoding(&encoding)?,
                    n,
                    trials,
                    seed: seed_or(0),
                },
                (Some(_), Some(_)) => {
                    return Err(CliError::Invalid(
                        "give either --config or --probs, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(CliError::Invalid(
                        "simulate-single needs --config or --probs".into(),
                    ))
                }
            };
            RunSpec::SimulateSingle { config: cfg }
        }
        Command::ErrorScaling { m, probs, n, trials } => {
            let probs = match (m, probs) {
                (Some(m), None) => {
                    if m < 2 {
                        return Err(CliError::Invalid("--m must be ≥ 2".into()));
                    }
                    vec![1.0 / m as f64; m]
                }
                (None, Some(p)) => p,
                (None, None) => {
                    return Err(CliError::Invalid("error-scaling needs --m or --probs".into()))
                }
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            RunSpec::ErrorScaling { probs, n_list: n, trials, seed: seed_or(0) }
        }
        Command::Laser { alpha, n, model } => RunSpec::Laser {
            alpha: rad(alpha, degrees),
            n,
            seed: seed_or(0),
            model: parse_model(&model)?,
        },
        Command::SimulateDouble { flags, n } => RunSpec::SimulateDouble {
            config: flags.resolve(degrees)?,
            n,
            seed: seed_or(0),
        },
        Command::NoSignaling { flags, set, grid_points, n } => RunSpec::NoSignaling {
            config: flags.resolve(degrees)?,
            set: parse_set(&set)?,
            grid_points,
            n,
            seed: seed_or(0),
        },
        Command::ScanBell { flags, grid, axis, mc_n, svg } => {
            let base = flags.resolve(degrees)?;
            let axes = if axis.is_empty() {
                if grid != "default" {
                    return Err(CliError::Invalid(format!(
                        "unknown grid `{grid}` (expected `default`, or give --axis)"
                    )));
                }
                ScanGrid64::default_contextual(0).axes
            } else {
                axis.iter()
                    .map(|spec| parse_axis(spec, degrees))
                    .collect::<Result<Vec<_>>>()?
            };
            RunSpec::ScanBell {
                grid: ScanGrid64 { base, axes, mc_n, seed: seed_or(0) },
                svg,
            }
        }
        Command::Verify { only, json } => RunSpec::Verify { seed: seed_or(0), only, json },
    })
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Invalid("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }

    let (spec, out_dir) = match (cli.from_manifest, cli.command) {
        (Some(_), Some(_)) => {
            return Err(CliError::Invalid(
                "give either a subcommand or --from-manifest, not both".into(),
            ))
        }
        (Some(path), None) => {
            let manifest = read_manifest(&path)?;
            let dir = cli
                .out
                .or_else(|| path.parent().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            (manifest.spec, Some(dir))
        }
        (None, Some(cmd)) => (resolve(cmd, cli.seed, cli.degrees)?, cli.out),
        (None, None) => {
            return Err(CliError::Invalid(
                "no command given; run `ampcode --help` for usage".into(),
            ))
        }
    };

    let started = Instant::now();
    let artifacts = spec.execute()?;
    print_summary(&artifacts.summary)?;

    if let Some(dir) = out_dir {
        let manifest = Manifest {
            tool: "ampcode".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: spec.name().into(),
            seed: spec.seed(),
            spec,
            outputs: artifacts.files.iter().map(|(name, _)| name.clone()).collect(),
            duration_ms: started.elapsed().as_millis() as u64,
        };
        write_outputs(&dir, &artifacts, &manifest)?;
    }
    Ok(artifacts.failed)
}

/// Print the summary, shrugging off a closed pipe (`ampcode ... | head`)
/// so output files still get written and the exit code stays honest.
fn print_summary(text: &str) -> Result<()> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::io(std::path::Path::new("stdout"), e)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
