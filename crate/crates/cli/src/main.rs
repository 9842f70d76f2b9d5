//! `nhoc`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error (spec, trajectory or
//! expression), 3 numeric failure. Output files are written only after the
//! whole command has succeeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use nhoc_core::fixtures::reproduce_section5;
use nhoc_core::hamiltonian::CovectorPath;
use nhoc_core::pmp::{classify, transfer_momenta, ClassificationProblem, Settings, TimeMode};
use nhoc_core::systems::{
    format_float, kin_to_mech_controls, mech_to_kin_controls, simulate, ControlSignal,
    SimulationSetup,
};
use nhoc_core::{
    load_spec_path, ChristoffelPairing, ChristoffelSource, Error, ErrorClass, LoadedSpec, Mode,
    Trajectory,
};

#[derive(Parser)]
#[command(
    name = "nhoc",
    version,
    about = "Extremal classification for nonholonomic control systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    /// Derived from the metric.
    LeviCivita,
    /// The table in the spec file.
    Table,
    /// Alias of `table`.
    PaperTable,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Kin,
    Mech,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Kin2mech,
    Mech2kin,
}

#[derive(Clone, Copy, ValueEnum)]
enum TimeModeArg {
    Free,
    Fixed,
}

impl From<TimeModeArg> for TimeMode {
    fn from(t: TimeModeArg) -> Self {
        match t {
            TimeModeArg::Free => TimeMode::Free,
            TimeModeArg::Fixed => TimeMode::Fixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Section5,
}

/// Options shared by the commands that evaluate dynamics.
#[derive(clap::Args, Clone)]
struct Dynamics {
    /// Christoffel source; defaults to the one in the spec.
    #[arg(long, value_enum)]
    source: Option<Source>,
    /// Pair Christoffel symbols diagonally, `Γᵏ_ii (vⁱ)²`.
    #[arg(long)]
    paper_literal: bool,
}

impl Dynamics {
    fn pairing(&self) -> ChristoffelPairing {
        if self.paper_literal {
            ChristoffelPairing::PaperLiteral
        } else {
            ChristoffelPairing::Full
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a spec and check metric, frame and connection on its box.
    Validate {
        spec: PathBuf,
        /// Sample points in the working box.
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Christoffel symbols at a point as CSV `k,i,j,gamma` (1-based).
    Christoffel {
        spec: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        point: Vec<f64>,
        #[arg(long, value_enum)]
        source: Option<Source>,
    },
    /// Integrate the extended system under given controls.
    Simulate {
        spec: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Control CSV (`t,u1..um`) or a constant `c1,..,cm`.
        #[arg(long, allow_hyphen_values = true)]
        controls: String,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        x0: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        v0: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, allow_hyphen_values = true)]
        tf: f64,
        #[arg(long)]
        step: f64,
        #[command(flatten)]
        dynamics: Dynamics,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert controls between the kinematic and the mechanical system.
    Convert {
        spec: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        dynamics: Dynamics,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a trajectory as normal, abnormal or strictly abnormal.
    Classify {
        spec: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, value_enum, default_value = "free")]
        time_mode: TimeModeArg,
        /// Report path; certificates are written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        dynamics: Dynamics,
        /// Constraint sample times (at least 20).
        #[arg(long, default_value_t = 21)]
        samples: usize,
        /// Also try the mechanical case `p0 = 1`.
        #[arg(long)]
        allow_case4: bool,
        /// Classify even if the trajectory violates its own equations.
        #[arg(long)]
        no_dynamics_check: bool,
    },
    /// Transfer a mechanical certificate to the kinematic system at `t1`.
    Transfer {
        spec: PathBuf,
        /// Certificate CSV as written by `classify`.
        #[arg(long)]
        mech_cert: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        /// Kinematic trajectory; derived from the certificate when absent.
        #[arg(long)]
        kin_traj: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "free")]
        time_mode: TimeModeArg,
        #[command(flatten)]
        dynamics: Dynamics,
        /// Report path; the transferred path is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a built-in example.
    Example {
        #[arg(value_enum)]
        name: Example,
        /// `table` runs the full reproduction; `levi-civita` prints the
        /// comparison run with the derived connection.
        #[arg(long, value_enum, default_value = "table")]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn numeric(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

/// Attaches the offending file to a core error.
fn at(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let code = match e.class() {
            ErrorClass::Input => 2,
            ErrorClass::Numeric => 3,
        };
        let message = match e {
            Error::Io { .. } => e.to_string(),
            e => format!("{}: {e}", path.display()),
        };
        Failure { code, message }
    }
}

/// Files and text produced by a command, emitted together on success.
#[derive(Default)]
struct Output {
    stdout: String,
    files: Vec<(PathBuf, String)>,
}

impl Output {
    /// Writes `text` to `out` when given, else to standard output.
    fn to(out: Option<&Path>, text: String) -> Self {
        match out {
            Some(p) => Output {
                stdout: String::new(),
                files: vec![(p.to_path_buf(), text)],
            },
            None => Output {
                stdout: text,
                files: Vec::new(),
            },
        }
    }

    fn emit(self) -> Result<(), Failure> {
        for (path, text) in &self.files {
            fs::write(path, text).map_err(|e| Failure {
                code: 2,
                message: format!("{}: {e}", path.display()),
            })?;
        }
        print!("{}", self.stdout);
        Ok(())
    }
}

fn load(spec: &Path, source: Option<Source>) -> Result<LoadedSpec, Failure> {
    let loaded = load_spec_path(spec).map_err(at(spec))?;
    match source {
        None => Ok(loaded),
        Some(Source::LeviCivita) => loaded
            .with_source(ChristoffelSource::LeviCivita)
            .map_err(at(spec)),
        Some(Source::Table | Source::PaperTable) => {
            let table = loaded.table_source().map_err(at(spec))?;
            loaded.with_source(table).map_err(at(spec))
        }
    }
}

fn read_traj(path: &Path) -> Result<Trajectory, Failure> {
    Trajectory::read_csv_path(path).map_err(at(path))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn sibling(out: &Path, name: &str) -> PathBuf {
    out.parent()
        .map_or_else(|| PathBuf::from(name), |d| d.join(name))
}

fn run(command: Command) -> Result<Output, Failure> {
    match command {
        Command::Validate { spec, samples } => {
            let loaded = load(&spec, None)?;
            let v = loaded.system.validate(samples).map_err(at(&spec))?;
            let report = serde_json::json!({
                "name": loaded.system.name(),
                "n": loaded.system.n(),
                "m": loaded.system.m(),
                "christoffel_source": loaded.system.source_kind().to_string(),
                "points": v.points,
                "orthonormality_residual": v.orthonormality_residual,
            });
            Ok(Output::to(None, json(&report)))
        }
        Command::Christoffel {
            spec,
            point,
            source,
        } => {
            let loaded = load(&spec, source)?;
            let sys = &loaded.system;
            let g = sys.connection().gamma(&point).map_err(at(&spec))?;
            let n = sys.n();
            let mut text = String::from("k,i,j,gamma\n");
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        text.push_str(&format!(
                            "{},{},{},{}\n",
                            k + 1,
                            i + 1,
                            j + 1,
                            format_float(g.get(k, i, j))
                        ));
                    }
                }
            }
            Ok(Output::to(None, text))
        }
        Command::Simulate {
            spec,
            mode,
            controls,
            x0,
            v0,
            t0,
            tf,
            step,
            dynamics,
            out,
        } => {
            let loaded = load(&spec, dynamics.source)?;
            let parsed: Result<Vec<f64>, _> = controls
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect();
            let signal = match parsed {
                Ok(values) => ControlSignal::Constant(DVector::from_vec(values)),
                Err(_) => {
                    let path = Path::new(&controls);
                    let file = fs::File::open(path).map_err(|e| Failure {
                        code: 2,
                        message: format!("{}: {e}", path.display()),
                    })?;
                    ControlSignal::read_csv(file).map_err(at(path))?
                }
            };
            let setup = SimulationSetup {
                mode: match mode {
                    ModeArg::Kin => Mode::Kinematic,
                    ModeArg::Mech => Mode::Mechanical,
                },
                x0,
                v0,
                t0,
                tf,
                step,
                pairing: dynamics.pairing(),
            };
            let traj =
                simulate(&loaded.system, &loaded.cost, &setup, &signal).map_err(at(&spec))?;
            Ok(Output::to(out.as_deref(), traj.to_csv_string()))
        }
        Command::Convert {
            spec,
            direction,
            traj,
            dynamics,
            out,
        } => {
            let loaded = load(&spec, dynamics.source)?;
            let input = read_traj(&traj)?;
            let conv = match direction {
                Direction::Kin2mech => {
                    kin_to_mech_controls(&loaded.system, &input, dynamics.pairing())
                }
                Direction::Mech2kin => mech_to_kin_controls(&loaded.system, &input),
            }
            .map_err(at(&traj))?;
            eprintln!(
                "max equation residual {}",
                format_float(conv.max_residual())
            );
            Ok(Output::to(out.as_deref(), conv.trajectory.to_csv_string()))
        }
        Command::Classify {
            spec,
            traj,
            time_mode,
            out,
            dynamics,
            samples,
            allow_case4,
            no_dynamics_check,
        } => {
            let loaded = load(&spec, dynamics.source)?;
            let input = read_traj(&traj)?;
            let settings = Settings {
                time_mode: time_mode.into(),
                sample_count: samples,
                pairing: dynamics.pairing(),
                allow_case4,
                check_dynamics: !no_dynamics_check,
                ..Settings::default()
            };
            let problem = ClassificationProblem::new(&loaded.system, &loaded.cost, input, settings)
                .map_err(at(&traj))?;
            let report = classify(&problem).map_err(at(&traj))?;
            let mut output = Output::to(out.as_deref(), json(&report));
            if let Some(out) = &out {
                for case in &report.cases {
                    if let (Some(name), Some(cert)) = (&case.certificate_csv_ref, &case.certificate)
                    {
                        let text = cert.to_csv_string(&problem.trajectory).map_err(at(&traj))?;
                        output.files.push((sibling(out, name), text));
                    }
                }
            }
            Ok(output)
        }
        Command::Transfer {
            spec,
            mech_cert,
            t1,
            kin_traj,
            time_mode,
            dynamics,
            out,
        } => {
            let loaded = load(&spec, dynamics.source)?;
            let file = fs::File::open(&mech_cert).map_err(|e| Failure {
                code: 2,
                message: format!("{}: {e}", mech_cert.display()),
            })?;
            let (mech_traj, cert) = CovectorPath::read_csv(file).map_err(at(&mech_cert))?;
            let kin = match &kin_traj {
                Some(p) => read_traj(p)?,
                None => {
                    let mut k = mech_to_kin_controls(&loaded.system, &mech_traj)
                        .map_err(at(&mech_cert))?
                        .trajectory;
                    k.cost_position = None;
                    k
                }
            };
            let settings = Settings {
                time_mode: time_mode.into(),
                pairing: dynamics.pairing(),
                ..Settings::default()
            };
            let problem = ClassificationProblem::new(&loaded.system, &loaded.cost, kin, settings)
                .map_err(at(kin_traj.as_deref().unwrap_or(&mech_cert)))?;
            let report = transfer_momenta(&problem, &cert, t1).map_err(at(&mech_cert))?;
            let mut output = Output::to(out.as_deref(), json(&report));
            if let Some(out) = &out {
                let text = report
                    .path
                    .to_csv_string(&problem.trajectory)
                    .map_err(at(&mech_cert))?;
                output
                    .files
                    .push((sibling(out, "kinematic-transfer.csv"), text));
            }
            Ok(output)
        }
        Command::Example {
            name: Example::Section5,
            source,
            out,
        } => {
            let report = reproduce_section5();
            let text = match source {
                Source::LeviCivita => json(&report.secondary),
                Source::Table | Source::PaperTable => {
                    if !report.all_passed() {
                        let failed: Vec<String> = report
                            .items
                            .iter()
                            .filter(|i| !i.pass)
                            .map(|i| {
                                format!(
                                    "{}: expected {}, observed {}",
                                    i.name, i.expected, i.observed
                                )
                            })
                            .collect();
                        return Err(Failure::numeric(failed.join("\n")));
                    }
                    json(&report)
                }
            };
            Ok(Output::to(out.as_deref(), text))
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
    match run(cli.command).and_then(Output::emit) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
