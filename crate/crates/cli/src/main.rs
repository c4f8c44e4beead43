//! `bellbound` command line front end.

use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use bellbound::bell::classical_bound;
use bellbound::input::{parse_matrix, MatrixFormat};
use bellbound::oracles::{certify, classify_dimension, seesaw_bound, witness_thresholds, DimensionClass, Threshold};
use bellbound::report::{envelope, AlphaView, BoundView};
use bellbound::rotation::{uniform_grid, violation_curve, ViolationSample};
use bellbound::strategies::{directions_from_alpha, realize, strategy_value, RealizationExport};
use bellbound::svd::{singular_value_bound, DegeneracyTol};
use bellbound::tightness::{is_tight, TightnessCheck, TightnessOptions};
use bellbound::{BellCoefficients, Error, GramFailure, SeesawConfig, VectorStrategy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "bellbound",
    version,
    about = "Classical and quantum bounds of correlation Bell inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// Matrix format; inferred from the file extension when omitted (default csv).
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Relative degeneracy tolerance for the maximal singular value.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Absolute degeneracy tolerance; overrides --tol.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Tolerance on the normalization residual of the Gram ansatz.
    #[arg(long, global = true, default_value_t = 1e-6)]
    residual_tol: f64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// See-saw restarts.
    #[arg(long, global = true, default_value_t = 32)]
    restarts: usize,
    /// See-saw iteration cap per restart.
    #[arg(long, global = true, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, value_enum, global = true, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Args)]
struct InputArg {
    /// Matrix file, or "-" for standard input.
    input: String,
}

#[derive(Subcommand)]
enum Command {
    /// Classical bound, singular-value bound, see-saw value and certificate.
    Bound(InputArg),
    /// Classical bound by enumeration.
    Classical(InputArg),
    /// Tightness certificate and ellipsoid semi-axes.
    Tight(InputArg),
    /// Optimal measurement directions from the certificate.
    Directions(InputArg),
    /// State and observables attaining the bound.
    Realize(InputArg),
    /// See-saw maximum at a fixed direction dimension.
    Seesaw {
        #[command(flatten)]
        input: InputArg,
        /// Direction dimension d' (default m1+m2).
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Dimension-witness thresholds T_1..T_dmax.
    Witness {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value_t = 4)]
        dmax: usize,
        /// Observed value to classify against the thresholds.
        #[arg(long, allow_negative_numbers = true)]
        observed: Option<f64>,
    },
    /// Violation ratio of the rotated CHSH family over a grid of angles.
    RotateScan {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi_min: f64,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI, allow_negative_numbers = true)]
        phi_max: f64,
        #[arg(long, default_value_t = 361)]
        samples: usize,
    },
}

/// What a command produced: a report and whether it should exit with the
/// "no α found" status.
struct Outcome {
    body: String,
    no_alpha: Option<GramFailure>,
}

impl Outcome {
    fn json(command: &str, payload: &impl Serialize) -> Self {
        Self::json_with(command, payload, None)
    }

    fn json_with(command: &str, payload: &impl Serialize, no_alpha: Option<GramFailure>) -> Self {
        let v: Value = envelope(command, payload);
        let mut body = serde_json::to_string_pretty(&v).expect("json value serializes");
        body.push('\n');
        Self { body, no_alpha }
    }
}

fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) | Error::Inconsistent(_) => 2,
        Error::NoAlpha(_) => 3,
        _ => 1,
    }
}

fn read_input(path: &str) -> Result<String, Error> {
    let mut text = String::new();
    if path == "-" {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Error::Invalid(format!("cannot read standard input: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {path}: {e}")))?;
    }
    Ok(text)
}

fn load(input: &InputArg, opts: &GlobalOpts) -> Result<BellCoefficients, Error> {
    let format = match opts.format {
        Some(Format::Csv) => MatrixFormat::Csv,
        Some(Format::Json) => MatrixFormat::Json,
        None => match Path::new(&input.input).extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => MatrixFormat::Json,
            _ => MatrixFormat::Csv,
        },
    };
    parse_matrix(&read_input(&input.input)?, format)
}

fn positive(name: &str, x: f64) -> Result<f64, Error> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Invalid(format!("--{name} must be positive, got {x}")))
    }
}

fn at_least_one(name: &str, n: usize) -> Result<usize, Error> {
    if n == 0 {
        Err(Error::Invalid(format!("--{name} must be at least 1")))
    } else {
        Ok(n)
    }
}

impl GlobalOpts {
    fn tightness(&self) -> Result<TightnessOptions, Error> {
        let degeneracy_tol = match self.abs_tol {
            Some(t) => DegeneracyTol::Absolute(positive("abs-tol", t)?),
            None => DegeneracyTol::Relative(positive("tol", self.tol)?),
        };
        Ok(TightnessOptions {
            degeneracy_tol,
            residual_tol: positive("residual-tol", self.residual_tol)?,
        })
    }

    fn seesaw(&self) -> Result<SeesawConfig, Error> {
        let cfg = SeesawConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            seed: self.seed,
            ..SeesawConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct ClassicalView {
    m1: usize,
    m2: usize,
    classical: f64,
    alice: Vec<i8>,
    bob: Vec<i8>,
}

#[derive(Serialize)]
struct TightView {
    m1: usize,
    m2: usize,
    s_max: f64,
    sv_bound: f64,
    degeneracy: usize,
    degeneracy_tol: f64,
    tight: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<GramFailure>,
    alpha: Option<AlphaView>,
}

impl TightView {
    fn new(g: &BellCoefficients, c: &TightnessCheck) -> Result<Self, Error> {
        Ok(Self {
            m1: g.m1(),
            m2: g.m2(),
            s_max: c.truncation.s_max,
            sv_bound: singular_value_bound(g)?,
            degeneracy: c.truncation.degeneracy,
            degeneracy_tol: c.truncation.tol_used,
            tight: c.is_tight(),
            failure: failure(c),
            alpha: c.solution().map(AlphaView::from),
        })
    }
}

fn failure(c: &TightnessCheck) -> Option<GramFailure> {
    match &c.outcome {
        bellbound::tightness::Tightness::NotCertified(f) => Some(*f),
        bellbound::tightness::Tightness::Certified(_) => None,
    }
}

#[derive(Serialize)]
struct DirectionsView {
    value: f64,
    sv_bound: f64,
    strategy: VectorStrategy,
}

#[derive(Serialize)]
struct RealizeView {
    bell_value: f64,
    sv_bound: f64,
    #[serde(flatten)]
    realization: RealizationExport,
}

#[derive(Serialize)]
struct SeesawView {
    dimension: usize,
    value: f64,
    sv_bound: f64,
    restart: Option<usize>,
    iterations: usize,
    config: SeesawConfig,
    strategy: VectorStrategy,
}

#[derive(Serialize)]
struct WitnessView {
    thresholds: Vec<Threshold>,
    sv_bound: f64,
    observed: Option<f64>,
    classification: Option<DimensionClass>,
    config: SeesawConfig,
}

#[derive(Serialize)]
struct ScanView {
    samples: Vec<ViolationSample>,
    max: Option<ViolationSample>,
}

/// Runs the tightness check and, when it fails, returns the report with the
/// failure attached so callers can still print it.
fn certified(g: &BellCoefficients, opts: &GlobalOpts, command: &str) -> Result<Result<TightnessCheck, Outcome>, Error> {
    let check = is_tight(g, opts.tightness()?)?;
    if check.is_tight() {
        Ok(Ok(check))
    } else {
        let view = TightView::new(g, &check)?;
        Ok(Err(Outcome::json_with(command, &view, failure(&check))))
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let opts = &cli.opts;
    if opts.output == Output::Csv && !matches!(cli.command, Command::RotateScan { .. }) {
        return Err(Error::Invalid("--output csv is only available for rotate-scan".into()));
    }
    match &cli.command {
        Command::Bound(input) => {
            let g = load(input, opts)?;
            let report = certify(&g, &opts.seesaw()?, opts.tightness()?)?;
            Ok(Outcome::json("bound", &BoundView::new(g.m1(), g.m2(), &report)))
        }
        Command::Classical(input) => {
            let g = load(input, opts)?;
            let cb = classical_bound(&g)?;
            Ok(Outcome::json(
                "classical",
                &ClassicalView {
                    m1: g.m1(),
                    m2: g.m2(),
                    classical: cb.value,
                    alice: cb.assignment.a().to_vec(),
                    bob: cb.assignment.b().to_vec(),
                },
            ))
        }
        Command::Tight(input) => {
            let g = load(input, opts)?;
            let check = is_tight(&g, opts.tightness()?)?;
            Ok(Outcome::json_with(
                "tight",
                &TightView::new(&g, &check)?,
                failure(&check),
            ))
        }
        Command::Directions(input) => {
            let g = load(input, opts)?;
            let check = match certified(&g, opts, "directions")? {
                Ok(c) => c,
                Err(report) => return Ok(report),
            };
            let strategy = directions_from_alpha(&check.truncation, check.solution().expect("certified"))?;
            Ok(Outcome::json(
                "directions",
                &DirectionsView {
                    value: strategy_value(&g, &strategy)?,
                    sv_bound: singular_value_bound(&g)?,
                    strategy,
                },
            ))
        }
        Command::Realize(input) => {
            let g = load(input, opts)?;
            let check = match certified(&g, opts, "realize")? {
                Ok(c) => c,
                Err(report) => return Ok(report),
            };
            let strategy = directions_from_alpha(&check.truncation, check.solution().expect("certified"))?;
            let r = realize(&strategy)?;
            Ok(Outcome::json(
                "realize",
                &RealizeView {
                    bell_value: bellbound::bell::evaluate_bell(&g, &r.expected)?,
                    sv_bound: singular_value_bound(&g)?,
                    realization: r.export(),
                },
            ))
        }
        Command::Seesaw { input, dim } => {
            let g = load(input, opts)?;
            let dimension = at_least_one("dim", dim.unwrap_or(g.m1() + g.m2()))?;
            let cfg = opts.seesaw()?;
            let res = seesaw_bound(&g, dimension, &cfg)?;
            Ok(Outcome::json(
                "seesaw",
                &SeesawView {
                    dimension,
                    value: res.value,
                    sv_bound: singular_value_bound(&g)?,
                    restart: res.restart,
                    iterations: res.iterations,
                    config: cfg,
                    strategy: res.strategy,
                },
            ))
        }
        Command::Witness { input, dmax, observed } => {
            let g = load(input, opts)?;
            let cfg = opts.seesaw()?;
            let t = witness_thresholds(&g, at_least_one("dmax", *dmax)?, &cfg)?;
            let classification = observed.map(|q| classify_dimension(q, &t)).transpose()?;
            Ok(Outcome::json(
                "witness",
                &WitnessView {
                    thresholds: t.thresholds,
                    sv_bound: t.sv_bound,
                    observed: *observed,
                    classification,
                    config: cfg,
                },
            ))
        }
        Command::RotateScan {
            phi_min,
            phi_max,
            samples,
        } => {
            if !(phi_min.is_finite() && phi_max.is_finite() && phi_min <= phi_max) {
                return Err(Error::Invalid(format!("invalid angle range [{phi_min}, {phi_max}]")));
            }
            let grid = uniform_grid(*phi_min, *phi_max, at_least_one("samples", *samples)?);
            let curve = violation_curve(&grid, &opts.seesaw()?)?;
            if opts.output == Output::Csv {
                return Ok(Outcome {
                    body: curve.to_csv(),
                    no_alpha: None,
                });
            }
            Ok(Outcome::json(
                "rotate-scan",
                &ScanView {
                    max: curve.max_ratio().copied(),
                    samples: curve.samples,
                },
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = io::stdout().lock().write_all(out.body.as_bytes()) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(1);
            }
            match out.no_alpha {
                Some(f) => {
                    eprintln!("error: {f}");
                    ExitCode::from(3)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
