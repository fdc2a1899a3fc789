use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::Serialize;

use pure_steering::criteria::ScanOptions;
use pure_steering::report::{self, AnalysisError, AnalysisOptions, Family, PlaneChoice, Range, SweepRow};
use pure_steering::tol::{self, Tolerances};
use pure_steering::{SteeringError, TwoQubitState};

/// Steering of two-qubit states with a pure steered state.
#[derive(Parser)]
#[command(name = "pure-steering", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis: ellipsoid, tangency, per-plane verdicts, bounds, oracle check.
    Analyze {
        #[command(flatten)]
        state: StateArgs,
        /// Planes in the pencil through the contact point and Bob's state.
        #[arg(long, default_value_t = 36)]
        planes: usize,
        /// Seed for the random second measurements of the oracle check.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random second measurements compared with the oracle.
        #[arg(long, default_value_t = 32)]
        oracle_samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Contact classification of the steering ellipsoid with the Bloch sphere.
    Tangency {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One cutting plane through the contact point.
    Section {
        #[command(flatten)]
        state: StateArgs,
        /// Plane normal, as x,y,z.
        #[arg(long, value_parser = parse_vec3, conflicts_with = "axis", required_unless_present = "axis")]
        normal: Option<Vector3<f64>>,
        /// Alice's second measurement axis, as x,y,z. The plane is the one of
        /// the resulting steered states.
        #[arg(long, value_parser = parse_vec3)]
        axis: Option<Vector3<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweeps a state family and writes one row per grid point.
    FamilySweep {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Range of the leading parameter, as start:stop:step.
        #[arg(long)]
        range: Option<Range>,
        #[arg(long, default_value_t = 16)]
        planes: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compares the per-plane criterion with the oracle on random states.
    OracleCompare {
        /// Number of random tangent states.
        #[arg(long, short = 'n', default_value_t = 1000)]
        samples: usize,
        /// Second measurements per state.
        #[arg(long, default_value_t = 8)]
        axes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid size of the LHS search.
        #[arg(long, default_value_t = 500)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct StateArgs {
    /// JSON file with `a`, `b`, `T` or a `density_matrix` of [re, im] pairs.
    #[arg(long)]
    state: PathBuf,
    /// Tolerance on negative eigenvalues when checking physicality.
    #[arg(long, default_value_t = tol::PSD)]
    tol: f64,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Sphere,
    Obese,
    XState,
    Spheroid,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Sphere => Family::Sphere,
            FamilyArg::Obese => Family::Obese,
            FamilyArg::XState => Family::XState,
            FamilyArg::Spheroid => Family::Spheroid,
        }
    }
}

fn parse_vec3(s: &str) -> Result<Vector3<f64>, String> {
    let parts = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    match parts.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

enum Failure {
    /// Output closed early, as in `| head`.
    BrokenPipe,
    Input(String),
    NonPhysical(SteeringError),
    NoTangency(String),
    Disagreement(usize),
    Steering(SteeringError),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::BrokenPipe => 0,
            Failure::Input(_) | Failure::Steering(_) => 1,
            Failure::NonPhysical(_) => 2,
            Failure::NoTangency(_) => 3,
            Failure::Disagreement(_) => 4,
        }
    }
}

impl From<SteeringError> for Failure {
    fn from(e: SteeringError) -> Self {
        match e {
            SteeringError::NonPhysical { .. } | SteeringError::NotDensityMatrix(_) => Failure::NonPhysical(e),
            SteeringError::AliceReducedPure => Failure::NoTangency(e.to_string()),
            e => Failure::Steering(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return Failure::BrokenPipe;
        }
        Failure::Input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        if !e.is_io_error() {
            return Failure::Input(e.to_string());
        }
        match e.into_kind() {
            csv::ErrorKind::Io(e) => e.into(),
            _ => unreachable!(),
        }
    }
}

fn load_state(args: &StateArgs) -> Result<(TwoQubitState, Tolerances), Failure> {
    let text =
        std::fs::read_to_string(&args.state).map_err(|e| Failure::Input(format!("{}: {e}", args.state.display())))?;
    let input =
        report::parse_state_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", args.state.display())))?;
    let state = input.to_state(args.tol)?;
    let tolerances = Tolerances {
        psd: args.tol,
        ..Tolerances::default()
    };
    Ok((state, tolerances))
}

fn sink(out: Option<&Path>) -> std::io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes the tangency part of a failed analysis, then reports the failure.
fn analysis_failure(e: AnalysisError, out: Option<&Path>) -> Failure {
    match e {
        AnalysisError::NoTangency(partial) => {
            let (ellipsoid, tangency) = *partial;
            #[derive(Serialize)]
            struct Partial {
                ellipsoid: report::EllipsoidSummary,
                tangency: pure_steering::ellipsoid::TangencyReport,
            }
            let kind = serde_json::to_value(tangency.status).ok();
            if let Err(f) = write_json(&Partial { ellipsoid, tangency }, out) {
                return f;
            }
            let kind = kind
                .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(String::from))
                .unwrap_or_default();
            Failure::NoTangency(format!("no single point of contact ({kind})"))
        }
        AnalysisError::Steering(e) => e.into(),
    }
}

fn sweep_json(rows: &[SweepRow]) -> Vec<serde_json::Map<String, serde_json::Value>> {
    rows.iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            for (k, v) in &row.params {
                obj.insert(k.clone(), (*v).into());
            }
            obj.insert("steerable".into(), row.steerable.into());
            obj.insert("p_p".into(), row.p_p.into());
            obj.insert("p_min".into(), row.p_min.into());
            obj.insert("p_max".into(), row.p_max.into());
            obj.insert("margin".into(), row.margin.into());
            if let Some(agree) = row.forms_agree {
                obj.insert("forms_agree".into(), agree.into());
            }
            obj
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze {
            state,
            planes,
            seed,
            oracle_samples,
            output,
        } => {
            let (st, tolerances) = load_state(&state)?;
            let opts = AnalysisOptions {
                planes,
                seed,
                oracle_samples,
                scan: ScanOptions::default(),
                ..AnalysisOptions::default()
            };
            let out = output.out.as_deref();
            let rep = report::analyze(&st, tolerances, &opts).map_err(|e| analysis_failure(e, out))?;
            match output.format {
                Format::Json => write_json(&rep, out),
                Format::Csv => Ok(report::write_planes_csv(&rep.planes, sink(out)?)?),
            }
        }
        Command::Tangency { state, out } => {
            let (st, _) = load_state(&state)?;
            let (ell, tangency) = pure_steering::tangency_for_state(&st)?;
            #[derive(Serialize)]
            struct Out {
                ellipsoid: report::EllipsoidSummary,
                tangency: pure_steering::ellipsoid::TangencyReport,
            }
            write_json(
                &Out {
                    ellipsoid: report::EllipsoidSummary::new(&ell),
                    tangency,
                },
                out.as_deref(),
            )
        }
        Command::Section {
            state,
            normal,
            axis,
            out,
        } => {
            let (st, _) = load_state(&state)?;
            let choice = match (normal, axis) {
                (Some(n), _) => PlaneChoice::Normal(n),
                (None, Some(a)) => PlaneChoice::Axis(a),
                (None, None) => return Err(Failure::Input("give --normal or --axis".into())),
            };
            let rep = report::section_report(&st, choice).map_err(|e| analysis_failure(e, out.as_deref()))?;
            write_json(&rep, out.as_deref())
        }
        Command::FamilySweep {
            family,
            range,
            planes,
            format,
            out,
        } => {
            let family = Family::from(family);
            let range = range.unwrap_or_else(|| family.default_range());
            let rows = report::family_sweep(family, &range, planes)?;
            match format {
                Format::Csv => Ok(report::write_sweep_csv(&rows, sink(out.as_deref())?)?),
                Format::Json => write_json(&sweep_json(&rows), out.as_deref()),
            }
        }
        Command::OracleCompare {
            samples,
            axes,
            seed,
            grid,
            out,
        } => {
            let summary = report::oracle_compare(samples, axes, seed, grid);
            write_json(&summary, out.as_deref())?;
            match summary.stats.disagreements {
                0 => Ok(()),
                n => Err(Failure::Disagreement(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::BrokenPipe) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::BrokenPipe => String::new(),
                Failure::Input(m) | Failure::NoTangency(m) => m.clone(),
                Failure::NonPhysical(e) | Failure::Steering(e) => e.to_string(),
                Failure::Disagreement(n) => format!("{n} disagreements with the oracle"),
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
